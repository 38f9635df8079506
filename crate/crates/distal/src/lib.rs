//! Distal cell decompositions over concrete structures.

pub mod arrangement;
pub mod conj_cells;
pub mod decomp;
pub mod dim_induction;
pub mod experiment;
pub mod families;
pub mod incidence;
pub mod omin1d;
pub mod padic;
pub mod rng;
pub mod sampling;
pub mod scalars;
