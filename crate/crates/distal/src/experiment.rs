//! Batch experiments: JSON experiment specs, the construct → verify → count
//! pipeline over seeded parameter sets, CSV/JSON artifacts, the expected
//! exponent table, and the incidence sweeps behind the CLI.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conj_cells::ConjDecomposition;
use crate::decomp::{fit_table, par_map, verify_instantiation, DecompError, Decomposition, ShatterRow, ShatterTable};
use crate::dim_induction::{grid_probes, intersection_probes, Induction};
use crate::families::{Domain, FamilyKind, ParamFamily, Point, ValuationDialect};
use crate::incidence::{
    ratio_growth, sum_bb_experiment, sum_product_experiment, zarankiewicz_sweep, BoundProfile, Field, IncidenceError,
    SumBbReport, SumProductReport, ZarankiewiczReport,
};
use crate::omin1d::Omin1d;
use crate::padic::PadicDecomposition;
use crate::rng::SeededRng;
use crate::sampling::ParamSampler;
use crate::scalars::{rat, Rat};

/// `git describe --always --dirty` at build time, or the package version.
pub const BUILD_ID: &str = env!("DISTAL_BUILD_ID");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    RationalsOrder,
    VectorLinear,
    Presburger,
    PadicMacintyre,
    PadicLaff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Omin1d,
    DimInduction,
    ConjCells,
    Padic,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::RationalsOrder => "rationals-order",
            Structure::VectorLinear => "vector-linear",
            Structure::Presburger => "presburger",
            Structure::PadicMacintyre => "padic-macintyre",
            Structure::PadicLaff => "padic-laff",
        }
    }

    pub fn engines(self) -> &'static [Engine] {
        match self {
            Structure::RationalsOrder => &[Engine::Omin1d, Engine::DimInduction],
            Structure::VectorLinear => &[Engine::ConjCells, Engine::Omin1d, Engine::DimInduction],
            Structure::Presburger => &[Engine::ConjCells],
            Structure::PadicMacintyre | Structure::PadicLaff => &[Engine::Padic],
        }
    }

    fn kinds(self) -> &'static [FamilyKind] {
        match self {
            Structure::RationalsOrder => &[FamilyKind::Interval, FamilyKind::Semilinear, FamilyKind::VectorLinear],
            Structure::VectorLinear => &[FamilyKind::VectorLinear],
            Structure::Presburger => &[FamilyKind::Congruence],
            Structure::PadicMacintyre | Structure::PadicLaff => &[FamilyKind::ValuationForm],
        }
    }
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Omin1d => "omin1d",
            Engine::DimInduction => "dim-induction",
            Engine::ConjCells => "conj-cells",
            Engine::Padic => "padic",
        }
    }
}

/// Assertions checked by `run` beyond coverage and non-crossing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Upper bound on the fitted slope; defaults to the expected exponent + 0.1.
    #[serde(default)]
    pub max_slope: Option<f64>,
    #[serde(default)]
    pub min_slope: Option<f64>,
    /// Require deduped count = probe census instead of ≥.
    #[serde(default)]
    pub census_equal: bool,
    /// Upper bound on the number of parameters in any cell descriptor.
    #[serde(default)]
    pub max_descriptor_params: Option<usize>,
}

/// Artifact file names, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub cells: Option<String>,
    #[serde(default)]
    pub shatter: Option<String>,
    #[serde(default)]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    pub structure: Structure,
    pub engine: Engine,
    pub family: ParamFamily,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: Option<ParamSampler>,
    /// Side of the integer probe grid added for planar families.
    #[serde(default)]
    pub grid_side: Option<usize>,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A spec rejected before running, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("schema error at {pointer:?}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

fn schema(pointer: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { pointer: pointer.into(), message: message.into() }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|s| match s {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", escape(key))),
            Segment::Enum { .. } | Segment::Unknown => None,
        })
        .collect()
}

impl ExperimentSpec {
    /// Parses and checks a spec. Structural errors carry the pointer of the
    /// offending value; semantic errors the pointer of the field to fix.
    pub fn from_json(text: &str) -> Result<ExperimentSpec, SchemaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: ExperimentSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            schema(&pointer, e.into_inner().to_string())
        })?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), SchemaError> {
        if self.experiment_id.is_empty()
            || !self.experiment_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(schema("/experiment_id", "must be nonempty and use only [A-Za-z0-9._-]"));
        }
        if self.sizes.is_empty() {
            return Err(schema("/sizes", "at least one size is required"));
        }
        if let Some(i) = self.sizes.iter().position(|&n| n == 0) {
            return Err(schema(&format!("/sizes/{i}"), "sizes must be positive"));
        }
        if self.trials == 0 {
            return Err(schema("/trials", "at least one trial is required"));
        }
        self.family.validate().map_err(|e| schema("/family", e.to_string()))?;
        let f = &self.family;
        if !self.structure.kinds().contains(&f.kind) {
            return Err(schema("/family/kind", format!("{:?} family for structure {}", f.kind, self.structure.name())));
        }
        let dialect = match self.structure {
            Structure::PadicMacintyre => Some(ValuationDialect::Macintyre),
            Structure::PadicLaff => Some(ValuationDialect::Laff),
            _ => None,
        };
        if dialect.is_some() && f.dialect() != dialect {
            return Err(schema("/family/predicates", format!("predicates are not in the {} dialect", self.structure.name())));
        }
        if !self.structure.engines().contains(&self.engine) {
            return Err(schema(
                "/engine",
                format!("engine {} does not apply to structure {}", self.engine.name(), self.structure.name()),
            ));
        }
        let dim_ok = match self.engine {
            Engine::Omin1d | Engine::Padic => f.point_dim == 1,
            Engine::DimInduction => f.point_dim >= 2,
            Engine::ConjCells => f.kind != FamilyKind::Congruence || f.point_dim == 1,
        };
        if !dim_ok {
            return Err(schema("/family/point_dim", format!("point dimension {} for engine {}", f.point_dim, self.engine.name())));
        }
        let sampler_ok = match (self.params, f.domain) {
            (None, _) => true,
            (Some(ParamSampler::Rational { den, .. }), Domain::Rationals) => den >= 1,
            (Some(ParamSampler::Integer { .. }), Domain::Rationals | Domain::Integers) => true,
            (Some(ParamSampler::Padic { prime, .. }), Domain::Padic { prime: q }) => prime == q,
            (Some(ParamSampler::Integer { .. }), Domain::Padic { .. }) => true,
            _ => false,
        };
        if !sampler_ok {
            return Err(schema("/params", format!("sampler does not match the family domain {:?}", f.domain)));
        }
        if let Some(side) = self.grid_side {
            if side == 0 || f.point_dim != 2 {
                return Err(schema("/grid_side", "a positive grid side applies to planar families only"));
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> ParamSampler {
        self.params.unwrap_or_else(|| ParamSampler::for_domain(self.family.domain))
    }

    /// Exponent recorded for this structure and engine at `|x| = point_dim`.
    pub fn expected_exponent(&self) -> Rat {
        let d = self.family.point_dim as i64;
        rat(match (self.structure, self.engine) {
            (_, Engine::Omin1d | Engine::DimInduction) => 2 * d - 1,
            (Structure::PadicMacintyre, _) => 3 * d - 2,
            _ => d,
        })
    }
}

/// The decomposition a spec asks for.
pub fn build_engine(spec: &ExperimentSpec) -> Result<Arc<dyn Decomposition>, DecompError> {
    let f = &spec.family;
    Ok(match spec.engine {
        Engine::Omin1d => Arc::new(Omin1d::for_family(f)?),
        Engine::DimInduction => Arc::new(Induction::for_family(f)?.with_threads(1)),
        Engine::ConjCells => Arc::new(ConjDecomposition::new(f)?),
        Engine::Padic => Arc::new(PadicDecomposition::new(Arc::new(f.clone()))?),
    })
}

/// Stream id of trial `t` at size index `i`: independent per (size, trial).
pub fn trial_stream(size_index: usize, trial: usize) -> u64 {
    ((size_index as u64) << 32) | trial as u64
}

/// One verified instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub n: usize,
    pub trial: usize,
    pub cells_raw: usize,
    pub cells_deduped: usize,
    pub census_lb: usize,
    pub covered: bool,
    pub uncrossed: bool,
    pub max_descriptor_params: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment_id: String,
    pub structure: Structure,
    pub engine: Engine,
    pub build_id: String,
    pub seed: u64,
    pub expected_exponent: String,
    pub slope: f64,
    pub slope_degenerate: bool,
    pub max_slope: f64,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub spec: ExperimentSpec,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub shatter: ShatterTable,
    pub summary: Summary,
}

fn run_trial(
    spec: &ExperimentSpec,
    engine: &dyn Decomposition,
    seed: u64,
    size_index: usize,
    trial: usize,
) -> Result<TrialRow, DecompError> {
    let n = spec.sizes[size_index];
    let f = &spec.family;
    let mut rng = SeededRng::new(seed, trial_stream(size_index, trial));
    let params: Vec<Point> = spec.sampler().sample(&mut rng, n, f.param_dim);
    let mut probes = Vec::new();
    if f.point_dim == 2 {
        probes = grid_probes(spec.grid_side.unwrap_or(41));
    }
    if f.point_dim >= 2 && f.domain == Domain::Rationals {
        probes.extend(intersection_probes(f, &params));
    }
    let inst = engine.instantiate_with_locator(&params)?;
    let max_descriptor_params = inst.cells.iter().map(|c| c.descriptor.arity()).max().unwrap_or(0);
    let rep = verify_instantiation(&inst, f, &params, &probes)?;
    let failure = rep
        .uncovered_probe
        .as_ref()
        .map(|p| format!("uncovered probe {p}"))
        .or_else(|| rep.crossing.as_ref().map(|c| format!("{} crossed by predicate {} at parameter {}", c.cell, c.predicate, c.param_index)));
    Ok(TrialRow {
        n,
        trial,
        cells_raw: rep.cell_count_raw,
        cells_deduped: rep.cell_count_deduped,
        census_lb: rep.census_lower_bound,
        covered: rep.covered,
        uncrossed: rep.uncrossed,
        max_descriptor_params,
        failure,
    })
}

fn check(name: &str, passed: bool, detail: String) -> Assertion {
    Assertion { name: name.into(), passed, detail }
}

/// Runs every (size, trial) instance of a spec; `seed` overrides the spec's.
/// Results are independent of `threads`.
pub fn run_experiment(spec: &ExperimentSpec, seed: Option<u64>, threads: usize) -> Result<RunOutcome, DecompError> {
    let seed = seed.unwrap_or(spec.seed);
    let engine = build_engine(spec)?;
    let jobs: Vec<(usize, usize)> =
        (0..spec.sizes.len()).flat_map(|i| (0..spec.trials).map(move |t| (i, t))).collect();
    let rows = par_map(&jobs, threads, |&(i, t)| run_trial(spec, engine.as_ref(), seed, i, t))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut by_size: BTreeMap<usize, ShatterRow> = BTreeMap::new();
    for r in &rows {
        let e = by_size.entry(r.n).or_insert(ShatterRow { n: r.n, max_raw: 0, max_deduped: 0, trials: 0 });
        e.max_raw = e.max_raw.max(r.cells_raw);
        e.max_deduped = e.max_deduped.max(r.cells_deduped);
        e.trials += 1;
    }
    let shatter = fit_table(by_size.into_values().collect());

    let expected = spec.expected_exponent();
    let expected_f = expected.to_f64().unwrap_or(f64::INFINITY);
    let max_slope = spec.expect.max_slope.unwrap_or(expected_f + 0.1);
    let first_failure = |pred: &dyn Fn(&TrialRow) -> bool| {
        rows.iter()
            .find(|r| !pred(r))
            .map(|r| format!("n = {}, trial {}: {}", r.n, r.trial, r.failure.clone().unwrap_or_default()))
            .unwrap_or_else(|| format!("{} instances", rows.len()))
    };
    let mut assertions = vec![
        check("covered", rows.iter().all(|r| r.covered), first_failure(&|r| r.covered)),
        check("uncrossed", rows.iter().all(|r| r.uncrossed), first_failure(&|r| r.uncrossed)),
    ];
    let census_ok = |r: &TrialRow| {
        if spec.expect.census_equal {
            r.cells_deduped == r.census_lb
        } else {
            r.cells_deduped >= r.census_lb
        }
    };
    let census_detail = rows
        .iter()
        .find(|r| !census_ok(r))
        .map(|r| format!("n = {}, trial {}: {} cells, census {}", r.n, r.trial, r.cells_deduped, r.census_lb))
        .unwrap_or_else(|| format!("{} instances", rows.len()));
    let census_name = if spec.expect.census_equal { "cells_equal_census" } else { "cells_at_least_census" };
    assertions.push(check(census_name, rows.iter().all(census_ok), census_detail));
    let slope = shatter.slope;
    let slope_ok = shatter.degenerate || (slope <= max_slope && spec.expect.min_slope.is_none_or(|m| slope >= m));
    let slope_detail = if shatter.degenerate {
        "degenerate table, no fit".to_string()
    } else {
        format!("slope {slope:.4}, allowed [{}, {max_slope}]", spec.expect.min_slope.map_or("-inf".into(), |m| m.to_string()))
    };
    assertions.push(check("slope", slope_ok, slope_detail));
    if let Some(k) = spec.expect.max_descriptor_params {
        let worst = rows.iter().map(|r| r.max_descriptor_params).max().unwrap_or(0);
        assertions.push(check("descriptor_params", worst <= k, format!("largest descriptor uses {worst}, bound {k}")));
    }
    let passed = assertions.iter().all(|a| a.passed);
    let summary = Summary {
        experiment_id: spec.experiment_id.clone(),
        structure: spec.structure,
        engine: spec.engine,
        build_id: BUILD_ID.into(),
        seed,
        expected_exponent: crate::scalars::fmt_rat(&expected),
        slope,
        slope_degenerate: shatter.degenerate,
        max_slope,
        assertions,
        passed,
    };
    Ok(RunOutcome { spec: spec.clone(), seed, rows, shatter, summary })
}

/// Fixed CSV header of per-instance and summary rows.
pub const CELL_COLUMNS: [&str; 13] = [
    "experiment_id",
    "structure",
    "engine",
    "n",
    "trial",
    "cells_raw",
    "cells_deduped",
    "census_lb",
    "covered",
    "uncrossed",
    "slope",
    "build_id",
    "seed",
];

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

impl RunOutcome {
    /// One row per instance, then a summary row carrying the slope.
    pub fn cells_csv(&self) -> String {
        let s = &self.spec;
        let base = |n: String, trial: String| {
            vec![s.experiment_id.clone(), s.structure.name().into(), s.engine.name().into(), n, trial]
        };
        let tail = |mut v: Vec<String>, seed: u64| {
            v.push(BUILD_ID.into());
            v.push(seed.to_string());
            v
        };
        let mut out: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut v = base(r.n.to_string(), r.trial.to_string());
                v.extend([
                    r.cells_raw.to_string(),
                    r.cells_deduped.to_string(),
                    r.census_lb.to_string(),
                    r.covered.to_string(),
                    r.uncrossed.to_string(),
                    String::new(),
                ]);
                tail(v, self.seed)
            })
            .collect();
        let mut v = base(String::new(), "summary".into());
        v.extend([String::new(), String::new(), String::new()]);
        v.push(self.rows.iter().all(|r| r.covered).to_string());
        v.push(self.rows.iter().all(|r| r.uncrossed).to_string());
        v.push(if self.shatter.degenerate { String::new() } else { format!("{:.6}", self.shatter.slope) });
        out.push(tail(v, self.seed));
        to_csv(&CELL_COLUMNS, out)
    }

    /// Per-size maxima used for the fit.
    pub fn shatter_csv(&self) -> String {
        let rows = self.shatter.rows.iter().map(|r| {
            vec![
                self.spec.experiment_id.clone(),
                r.n.to_string(),
                r.max_raw.to_string(),
                r.max_deduped.to_string(),
                r.trials.to_string(),
                BUILD_ID.into(),
                self.seed.to_string(),
            ]
        });
        to_csv(&["experiment_id", "n", "max_raw", "max_deduped", "trials", "build_id", "seed"], rows)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n"
    }

    /// Writes the three artifacts under `dir`, returning their paths.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let id = &self.spec.experiment_id;
        let o = &self.spec.outputs;
        let files = [
            (o.cells.clone().unwrap_or(format!("{id}.cells.csv")), self.cells_csv()),
            (o.shatter.clone().unwrap_or(format!("{id}.shatter.csv")), self.shatter_csv()),
            (o.summary.clone().unwrap_or(format!("{id}.summary.json")), self.summary_json()),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Exponent as an affine function `a|x| + b` of the point dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearExponent {
    pub slope: i64,
    pub offset: i64,
    /// Value at `|x| = 1` when it departs from the formula.
    pub at_one: Option<i64>,
}

impl LinearExponent {
    const fn new(slope: i64, offset: i64) -> LinearExponent {
        LinearExponent { slope, offset, at_one: None }
    }

    pub fn at(&self, d: i64) -> i64 {
        match self.at_one {
            Some(v) if d == 1 => v,
            _ => self.slope * d + self.offset,
        }
    }
}

impl fmt::Display for LinearExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lead = if self.slope == 1 { "|x|".to_string() } else { format!("{}|x|", self.slope) };
        match self.offset {
            0 => write!(f, "{lead}")?,
            o if o < 0 => write!(f, "{lead}-{}", -o)?,
            o => write!(f, "{lead}+{o}")?,
        }
        if let Some(v) = self.at_one {
            write!(f, " ({v} if |x|=1)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityRow {
    pub structure: &'static str,
    pub dual_vc: LinearExponent,
    pub distal: LinearExponent,
    /// Where the decomposition is constructed here, if anywhere.
    pub implemented: Option<&'static str>,
}

/// Dual VC density against the exponent of the constructed decomposition.
pub const DENSITY_TABLE: [DensityRow; 6] = [
    DensityRow {
        structure: "o-minimal expansions of groups",
        dual_vc: LinearExponent::new(1, 0),
        distal: LinearExponent { slope: 2, offset: -2, at_one: Some(1) },
        implemented: None,
    },
    DensityRow {
        structure: "weakly o-minimal structures",
        dual_vc: LinearExponent::new(1, 0),
        distal: LinearExponent::new(2, -1),
        implemented: Some("omin1d at |x|=1; dim-induction for semilinear families over Q"),
    },
    DensityRow {
        structure: "ordered vector spaces over ordered division rings",
        dual_vc: LinearExponent::new(1, 0),
        distal: LinearExponent::new(1, 0),
        implemented: Some("conj-cells over Q"),
    },
    DensityRow {
        structure: "Presburger arithmetic",
        dual_vc: LinearExponent::new(1, 0),
        distal: LinearExponent::new(1, 0),
        implemented: Some("conj-cells at |x|=1"),
    },
    DensityRow {
        structure: "Q_p the valued field",
        dual_vc: LinearExponent::new(2, -1),
        distal: LinearExponent::new(3, -2),
        implemented: Some("padic (Macintyre forms) at |x|=1"),
    },
    DensityRow {
        structure: "Q_p in the linear reduct",
        dual_vc: LinearExponent::new(1, 0),
        distal: LinearExponent::new(1, 0),
        implemented: Some("padic (affine forms) at |x|=1"),
    },
];

/// The density table as text, with exponents evaluated at `|x| = dim`.
pub fn render_table(dim: usize) -> String {
    let d = dim as i64;
    let mut out = format!(
        "{:<52} {:<10} {:<24} {:>8}  {}\n",
        "structure", "dual VC", "distal density", format!("|x|={dim}"), "status"
    );
    for r in DENSITY_TABLE {
        let status = match r.implemented {
            Some(w) => format!("implemented: {w}"),
            None => "metadata-only".to_string(),
        };
        out += &format!(
            "{:<52} {:<10} {:<24} {:>8}  {}\n",
            r.structure,
            r.dual_vc.to_string(),
            r.distal.to_string(),
            r.distal.at(d),
            status
        );
    }
    out
}

/// Grid sweep of the edge-count ratio for point-line graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct ZarankiewiczSweep {
    pub reports: Vec<ZarankiewiczReport>,
    pub growth: Option<f64>,
}

/// Last-three-size growth allowed for a bounded ratio.
pub const RATIO_GROWTH_LIMIT: f64 = 0.05;

impl ZarankiewiczSweep {
    pub fn run(sizes: &[usize], slopes: usize, threads: usize) -> Result<ZarankiewiczSweep, IncidenceError> {
        let profile = BoundProfile::new(2, 2, 2.0)?;
        let reports = zarankiewicz_sweep(sizes, slopes, &profile, threads)?;
        let growth = ratio_growth(&reports);
        Ok(ZarankiewiczSweep { reports, growth })
    }

    pub fn bounded(&self) -> bool {
        self.growth.is_some_and(|g| g < RATIO_GROWTH_LIMIT)
    }

    pub fn csv(&self, seed: u64) -> String {
        let rows = self.reports.iter().map(|r| {
            vec![
                r.experiment.clone(),
                r.m.to_string(),
                r.n.to_string(),
                r.edges.to_string(),
                format!("{:.6}", r.q),
                format!("{:.6}", r.r),
                format!("{:.6}", r.ratio),
                BUILD_ID.into(),
                seed.to_string(),
            ]
        });
        to_csv(&["experiment", "m", "n", "edges", "q", "r", "ratio", "build_id", "seed"], rows)
    }
}

/// Seeded sum-product and `A + B·B` trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SumProductRun {
    pub seed: u64,
    pub products: Vec<SumProductReport>,
    pub sum_bb: Vec<SumBbReport>,
}

fn random_set(rng: &mut SeededRng, max_size: usize) -> Vec<Rat> {
    let size = rng.range(1, max_size as i64) as usize;
    let span = 4 * max_size as i64;
    let mut set = std::collections::BTreeSet::new();
    while set.len() < size {
        set.insert(crate::scalars::ratio(rng.range(-span, span), rng.range(1, 3)));
    }
    set.into_iter().collect()
}

impl SumProductRun {
    /// `trials` random sets `A` with `|A| ≤ max_size`, each over `Q` and over
    /// `Q_prime`, plus `trials` random pairs for the `A + B·B` identity.
    pub fn run(seed: u64, trials: usize, max_size: usize, prime: u64, threads: usize) -> Result<SumProductRun, IncidenceError> {
        let jobs: Vec<usize> = (0..trials).collect();
        let results = par_map(&jobs, threads, |&t| -> Result<_, IncidenceError> {
            let mut rng = SeededRng::new(seed, trial_stream(0, t));
            let a = random_set(&mut rng, max_size);
            let q = sum_product_experiment(&a, Field::Rationals)?;
            let qp = sum_product_experiment(&a, Field::Padic { prime })?;
            let mut rng = SeededRng::new(seed, trial_stream(1, t));
            let (a, b) = (random_set(&mut rng, max_size), random_set(&mut rng, max_size));
            let bb = sum_bb_experiment(&a, &b, Field::Rationals)?;
            Ok((q, qp, bb))
        });
        let mut run = SumProductRun { seed, products: Vec::new(), sum_bb: Vec::new() };
        for r in results {
            let (q, qp, bb) = r?;
            run.products.extend([q, qp]);
            run.sum_bb.push(bb);
        }
        Ok(run)
    }

    pub fn all_hold(&self) -> bool {
        self.products.iter().all(|r| r.holds) && self.sum_bb.iter().all(|r| r.identity_holds)
    }

    pub fn products_csv(&self) -> String {
        let rows = self.products.iter().map(|r| {
            vec![
                r.field.clone(),
                r.a_size.to_string(),
                r.sum_size.to_string(),
                r.product_size.to_string(),
                r.max_size.to_string(),
                format!("{:.6}", r.exponent),
                r.incidences.to_string(),
                r.lower_bound.to_string(),
                r.holds.to_string(),
                BUILD_ID.into(),
                self.seed.to_string(),
            ]
        });
        to_csv(
            &["field", "a", "a_plus_a", "a_times_a", "max", "exponent", "incidences", "a_cubed", "holds", "build_id", "seed"],
            rows,
        )
    }

    pub fn sum_bb_csv(&self) -> String {
        let rows = self.sum_bb.iter().map(|r| {
            vec![
                r.field.clone(),
                r.a_size.to_string(),
                r.b_size.to_string(),
                r.target_size.to_string(),
                r.incidences.to_string(),
                r.expected.to_string(),
                r.identity_holds.to_string(),
                format!("{:.6}", r.ratio),
                BUILD_ID.into(),
                self.seed.to_string(),
            ]
        });
        to_csv(&["field", "a", "b", "a_plus_bb", "incidences", "a_b_squared", "holds", "ratio", "build_id", "seed"], rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X_LESS_Y: &str = r#"{
        "kind": "interval", "domain": {"type": "rationals"}, "point_dim": 1, "param_dim": 1,
        "predicates": [{"op": "interval", "bound": 1,
            "pieces": [{"lower": null, "upper": {"at": {"coeffs": ["1"], "constant": "0"}, "closed": false}}]}]
    }"#;

    fn spec_text(engine: &str, sizes: &str) -> String {
        format!(
            r#"{{"experiment_id": "x-less-y", "structure": "rationals-order", "engine": "{engine}",
                "family": {X_LESS_Y}, "sizes": {sizes}, "trials": 2, "seed": 7}}"#
        )
    }

    #[test]
    fn x_less_than_y_runs_clean() {
        let spec = ExperimentSpec::from_json(&spec_text("omin1d", "[8, 16, 32, 64, 128]")).unwrap();
        let out = run_experiment(&spec, None, 2).unwrap();
        assert!(out.summary.passed, "{:?}", out.summary);
        assert!(out.summary.slope <= 1.1);
        for r in &out.rows {
            assert_eq!(r.cells_deduped, r.n + 1);
        }
    }

    #[test]
    fn mismatch_is_a_schema_error() {
        let err = ExperimentSpec::from_json(&spec_text("padic", "[4]")).unwrap_err();
        assert_eq!(err.pointer, "/engine");
        let err = ExperimentSpec::from_json(&spec_text("omin1d", "[4, 0]")).unwrap_err();
        assert_eq!(err.pointer, "/sizes/1");
        let err = ExperimentSpec::from_json(&spec_text("omin1d", "[4, \"x\"]")).unwrap_err();
        assert_eq!(err.pointer, "/sizes/1");
        let missing_seed = spec_text("omin1d", "[4]").replace(r#", "seed": 7"#, "");
        let err = ExperimentSpec::from_json(&missing_seed).unwrap_err();
        assert!(err.message.contains("seed"), "{err}");
        let bad_family = spec_text("omin1d", "[4]").replace(r#""bound": 1"#, r#""bound": "one""#);
        let err = ExperimentSpec::from_json(&bad_family).unwrap_err();
        assert!(err.pointer.starts_with("/family/predicates/0"), "{err}");
    }

    #[test]
    fn csv_is_thread_independent() {
        let spec = ExperimentSpec::from_json(&spec_text("omin1d", "[4, 8]")).unwrap();
        let a = run_experiment(&spec, None, 1).unwrap();
        let b = run_experiment(&spec, None, 3).unwrap();
        assert_eq!(a.cells_csv(), b.cells_csv());
        assert_eq!(a.shatter_csv(), b.shatter_csv());
        let c = run_experiment(&spec, Some(8), 1).unwrap();
        assert_ne!(a.cells_csv(), c.cells_csv());
        let header = a.cells_csv().lines().next().unwrap().to_string();
        assert_eq!(header, CELL_COLUMNS.join(","));
    }

    #[test]
    fn table_rows() {
        let find = |s: &str| DENSITY_TABLE.iter().find(|r| r.structure == s).unwrap();
        assert_eq!(find("Presburger arithmetic").distal.to_string(), "|x|");
        assert_eq!(find("Q_p the valued field").distal.to_string(), "3|x|-2");
        let omin = find("o-minimal expansions of groups");
        assert_eq!(omin.distal.to_string(), "2|x|-2 (1 if |x|=1)");
        assert_eq!((omin.distal.at(1), omin.distal.at(3)), (1, 4));
        assert!(omin.implemented.is_none());
        assert_eq!(find("weakly o-minimal structures").distal.at(2), 3);
        assert!(render_table(1).contains("metadata-only"));
    }
}
