//! Exact scalars: big rationals, p-adic valuations and unit residues, and the
//! extended value group used for ball radii.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical arbitrary-precision rational (reduced, positive denominator).
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("unit residue of zero is undefined")]
    ZeroResidue,
    #[error("prime must be an odd prime, got {0}")]
    BadPrime(u64),
    #[error("modulus {p}^{k} does not fit in 63 bits")]
    ModulusOverflow { p: u64, k: u32 },
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"7"`, `"-7/3"` or `"0.25"`.
pub fn parse_rat(s: &str) -> Result<Rat, ScalarError> {
    let t = s.trim();
    let bad = || ScalarError::Parse(s.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let n = BigInt::from_str(&digits).map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rat::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    BigInt::from_str(t).map(Rat::from_integer).map_err(|_| bad())
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn fmt_point(p: &[Rat]) -> String {
    let parts: Vec<String> = p.iter().map(fmt_rat).collect();
    format!("({})", parts.join(", "))
}

/// Serde adapters that store rationals as strings such as `"-7/3"`.
pub mod rat_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rat(&v).map_err(serde::de::Error::custom)
    }

    pub(crate) fn value_to_rat(v: &serde_json::Value) -> Result<Rat, String> {
        match v {
            serde_json::Value::String(s) => parse_rat(s).map_err(|e| e.to_string()),
            serde_json::Value::Number(n) => parse_rat(&n.to_string()).map_err(|e| e.to_string()),
            other => Err(format!("expected a rational, found {other}")),
        }
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&fmt_rat(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            let vals = Vec::<serde_json::Value>::deserialize(d)?;
            vals.iter()
                .map(|v| value_to_rat(v).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

/// Element of the value group extended by both infinities.
/// Variant order gives the total order `NegInf < Finite(_) < PosInf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GammaValue {
    NegInf,
    Finite(i64),
    PosInf,
}

impl GammaValue {
    pub fn finite(self) -> Option<i64> {
        match self {
            GammaValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, GammaValue::Finite(_))
    }

    /// Shift by a finite amount; infinities absorb.
    pub fn shift(self, by: i64) -> GammaValue {
        match self {
            GammaValue::Finite(v) => GammaValue::Finite(v + by),
            other => other,
        }
    }
}

impl std::ops::Add for GammaValue {
    type Output = GammaValue;
    /// Finite values add. `+∞ + −∞` has no meaning and is treated as `+∞`.
    fn add(self, rhs: GammaValue) -> GammaValue {
        use GammaValue::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PosInf, _) | (_, PosInf) => PosInf,
            _ => NegInf,
        }
    }
}

impl fmt::Display for GammaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaValue::NegInf => write!(f, "-inf"),
            GammaValue::Finite(v) => write!(f, "{v}"),
            GammaValue::PosInf => write!(f, "+inf"),
        }
    }
}

pub fn check_prime(p: u64) -> Result<(), ScalarError> {
    let prime = p >= 3 && !p.is_multiple_of(2) && (3..).step_by(2).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d));
    if prime {
        Ok(())
    } else {
        Err(ScalarError::BadPrime(p))
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(n: &BigInt, p: u64) -> u64 {
    debug_assert!(!n.is_zero());
    if let Some(mut small) = n.abs().to_u64() {
        let mut v = 0;
        while small % p == 0 {
            small /= p;
            v += 1;
        }
        return v;
    }
    let pb = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        m = q;
        v += 1;
        if let Some(small) = m.to_u64() {
            let mut small = small;
            while small % p == 0 {
                small /= p;
                v += 1;
            }
            return v;
        }
    }
}

/// p-adic valuation of a rational; `+∞` exactly at zero.
pub fn valuation(a: &Rat, p: u64) -> GammaValue {
    if a.is_zero() {
        return GammaValue::PosInf;
    }
    let vn = int_valuation(a.numer(), p) as i64;
    let vd = int_valuation(a.denom(), p) as i64;
    GammaValue::Finite(vn - vd)
}

pub fn checked_pow(p: u64, k: u32) -> Result<u64, ScalarError> {
    p.checked_pow(k)
        .filter(|m| *m < (1u64 << 63))
        .ok_or(ScalarError::ModulusOverflow { p, k })
}

fn mod_u64(n: &BigInt, m: u64) -> u64 {
    let r = n.mod_floor(&BigInt::from(m));
    r.to_u64().expect("residue below modulus")
}

/// Inverse of `a` modulo `m` for coprime inputs.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Strips all factors of `p` from a nonzero integer.
fn strip_p(n: &BigInt, p: u64, times: u64) -> BigInt {
    if times == 0 {
        return n.clone();
    }
    n / num_traits::pow(BigInt::from(p), times as usize)
}

/// Unit part `a·p^(−v(a))` reduced mod `p^k`, in `[0, p^k)`.
pub fn unit_residue(a: &Rat, p: u64, k: u32) -> Result<u64, ScalarError> {
    if a.is_zero() {
        return Err(ScalarError::ZeroResidue);
    }
    let m = checked_pow(p, k)?;
    let vn = int_valuation(a.numer(), p);
    let vd = int_valuation(a.denom(), p);
    let num = mod_u64(&strip_p(a.numer(), p, vn), m);
    let den = mod_u64(&strip_p(a.denom(), p, vd), m);
    let inv = mod_inverse(den, m).expect("p-free denominator is a unit");
    Ok(mul_mod(num, inv, m))
}

/// Valuation together with the unit residue mod `p^k`; `None` at zero.
pub fn val_and_residue(a: &Rat, p: u64, k: u32) -> Option<(i64, u64)> {
    if a.is_zero() {
        return None;
    }
    let m = checked_pow(p, k).expect("modulus fits");
    let vn = int_valuation(a.numer(), p);
    let vd = int_valuation(a.denom(), p);
    let num = mod_u64(&strip_p(a.numer(), p, vn), m);
    let den = mod_u64(&strip_p(a.denom(), p, vd), m);
    let inv = mod_inverse(den, m).expect("p-free denominator is a unit");
    Some((vn as i64 - vd as i64, mul_mod(num, inv, m)))
}

/// `p^e` as an exact rational; `e` may be negative.
pub fn p_power(p: u64, e: i64) -> Rat {
    let base = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
    if e >= 0 {
        Rat::from_integer(base)
    } else {
        Rat::new(BigInt::one(), base)
    }
}

/// Exponent of `p` in a positive machine integer.
pub fn small_valuation(mut n: u64, p: u64) -> u32 {
    let mut v = 0;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

/// Membership in `λ·Q_{m,n}` where `Q_{m,n} = ∪_k p^{km}(1 + p^n Z_p)`.
pub fn in_qmn(a: &Rat, lambda: &Rat, p: u64, m: u32, n: u32) -> bool {
    if lambda.is_zero() {
        return a.is_zero();
    }
    if a.is_zero() {
        return false;
    }
    let q = a / lambda;
    let (v, u) = val_and_residue(&q, p, n).expect("nonzero quotient");
    v.rem_euclid(m as i64) == 0 && u == 1 % checked_pow(p, n).expect("modulus fits")
}

/// Residue table deciding `n`-th powers of units at Hensel precision `p^(2v_p(n)+1)`.
#[derive(Debug, Clone)]
pub struct PowerResidues {
    pub p: u64,
    pub n: u32,
    pub precision: u32,
    modulus: u64,
    is_power: Vec<bool>,
}

impl PowerResidues {
    pub fn new(p: u64, n: u32) -> PowerResidues {
        let precision = 2 * small_valuation(n as u64, p) + 1;
        let modulus = checked_pow(p, precision).expect("small modulus");
        let mut is_power = vec![false; modulus as usize];
        for r in 1..modulus {
            if r % p != 0 {
                is_power[pow_mod(r, n as u64, modulus) as usize] = true;
            }
        }
        PowerResidues { p, n, precision, modulus, is_power }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Whether the unit residue `u` (mod `p^precision`) is an `n`-th power residue.
    pub fn unit_is_power(&self, u: u64) -> bool {
        self.is_power[(u % self.modulus) as usize]
    }

    /// Decides `P_n(a)` given `v(a)` and the unit residue mod `p^precision`.
    pub fn decide(&self, v: i64, unit: u64) -> bool {
        v.rem_euclid(self.n as i64) == 0 && self.unit_is_power(unit)
    }

    pub fn contains(&self, a: &Rat) -> bool {
        match val_and_residue(a, self.p, self.precision) {
            None => true,
            Some((v, u)) => self.decide(v, u),
        }
    }
}

/// Whether `a` is an `n`-th power in `Q_p`; zero counts as a power.
pub fn in_pn(a: &Rat, p: u64, n: u32) -> bool {
    PowerResidues::new(p, n).contains(a)
}

/// A rational read in `Q_p` for a fixed odd prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    pub value: Rat,
    pub prime: u64,
}

impl PadicScalar {
    pub fn new(value: Rat, prime: u64) -> Result<PadicScalar, ScalarError> {
        check_prime(prime)?;
        Ok(PadicScalar { value, prime })
    }

    pub fn valuation(&self) -> GammaValue {
        valuation(&self.value, self.prime)
    }

    pub fn unit_residue(&self, k: u32) -> Result<u64, ScalarError> {
        unit_residue(&self.value, self.prime, k)
    }

    pub fn in_qmn(&self, lambda: &Rat, m: u32, n: u32) -> bool {
        in_qmn(&self.value, lambda, self.prime, m, n)
    }

    pub fn in_pn(&self, n: u32) -> bool {
        in_pn(&self.value, self.prime, n)
    }
}

/// Canonical identity of the open ball `B_r(c) = {x : v(x−c) > r}`.
///
/// Two balls of equal radius coincide iff `v(c−c') > r`, so the key stores the
/// truncation of `c` to digits of weight `≤ r`. Radius `+∞` is the point `{c}`.
pub fn ball_key(center: &Rat, radius: GammaValue, p: u64) -> (GammaValue, Rat) {
    match radius {
        GammaValue::PosInf => (radius, center.clone()),
        GammaValue::NegInf => (radius, Rat::zero()),
        GammaValue::Finite(r) => {
            let truncated = match valuation(center, p) {
                GammaValue::Finite(v) if v <= r => {
                    let digits = (r + 1 - v) as u32;
                    let mut out = Rat::zero();
                    // Chunk the residue so the modulus always fits a machine word.
                    let chunk = (1..=40u32).rev().find(|k| checked_pow(p, *k).is_ok()).unwrap();
                    let mut rest = p_power(p, -v) * center;
                    let mut done = 0u32;
                    while done < digits {
                        let take = chunk.min(digits - done);
                        let m = checked_pow(p, take).unwrap();
                        let u = if rest.is_zero() {
                            0
                        } else {
                            residue_of_integral(&rest, m)
                        };
                        out += p_power(p, v + done as i64) * rat(u as i64);
                        rest = (rest - rat(u as i64)) / rat(m as i64);
                        done += take;
                    }
                    out
                }
                _ => Rat::zero(),
            };
            (radius, truncated)
        }
    }
}

/// Residue mod `m` of a `p`-integral rational whose denominator is prime to `m`.
fn residue_of_integral(a: &Rat, m: u64) -> u64 {
    let num = mod_u64(a.numer(), m);
    let den = mod_u64(a.denom(), m);
    mul_mod(num, mod_inverse(den, m).expect("denominator coprime to modulus"), m)
}

/// Is `x` in the open ball `B_r(c)`?
pub fn in_ball(x: &Rat, center: &Rat, radius: GammaValue, p: u64) -> bool {
    match radius {
        GammaValue::NegInf => true,
        GammaValue::PosInf => x == center,
        GammaValue::Finite(r) => valuation(&(x - center), p) > GammaValue::Finite(r),
    }
}

pub fn cmp_rat(a: &Rat, b: &Rat) -> Ordering {
    a.cmp(b)
}

pub fn floor_int(a: &Rat) -> BigInt {
    a.floor().to_integer()
}

pub fn ceil_int(a: &Rat) -> BigInt {
    a.ceil().to_integer()
}

pub fn is_nonneg(a: &Rat) -> bool {
    !a.is_negative()
}

pub fn sign_of(a: &Rat) -> Sign {
    if a.is_zero() {
        Sign::NoSign
    } else if a.is_positive() {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&rat(18), 3), GammaValue::Finite(2));
        assert_eq!(valuation(&rat(0), 3), GammaValue::PosInf);
        assert_eq!(valuation(&ratio(18, 5), 3), GammaValue::Finite(2));
        assert_eq!(valuation(&ratio(5, 18), 3), GammaValue::Finite(-2));
    }

    #[test]
    fn residue_examples() {
        assert_eq!(unit_residue(&rat(18), 3, 1).unwrap(), 2);
        assert_eq!(unit_residue(&rat(9), 3, 1).unwrap(), 1);
        assert_eq!(unit_residue(&rat(0), 3, 1), Err(ScalarError::ZeroResidue));
    }

    #[test]
    fn residue_of_seven_thirds_matches_search() {
        // 3x ≡ 7 (mod 25) by exhaustive search
        let oracle = (0..25u64).find(|x| (3 * x) % 25 == 7).unwrap();
        assert_eq!(oracle, 19);
        assert_eq!(unit_residue(&ratio(7, 3), 5, 2).unwrap(), oracle);
    }

    #[test]
    fn qmn_examples() {
        assert!(in_qmn(&rat(9), &rat(1), 3, 2, 1));
        assert!(!in_qmn(&rat(3), &rat(1), 3, 2, 1));
        assert!(!in_qmn(&rat(18), &rat(1), 3, 2, 1));
        assert!(in_qmn(&rat(0), &rat(0), 3, 2, 1));
        assert!(!in_qmn(&rat(0), &rat(1), 3, 2, 1));
    }

    #[test]
    fn pn_examples() {
        assert!(in_pn(&rat(4), 3, 2));
        assert!(!in_pn(&rat(2), 3, 2));
        // v(12) = 1 is odd; also no square root of the unit part 4/… needed
        assert_eq!(valuation(&rat(12), 3), GammaValue::Finite(1));
        assert!(!in_pn(&rat(12), 3, 2));
        assert!(in_pn(&rat(0), 3, 2));
        assert!(in_pn(&rat(28), 3, 2));
    }

    #[test]
    fn gamma_order() {
        assert!(GammaValue::NegInf < GammaValue::Finite(-100));
        assert!(GammaValue::Finite(100) < GammaValue::PosInf);
        assert_eq!(GammaValue::Finite(2) + GammaValue::Finite(3), GammaValue::Finite(5));
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rat("-7/3").unwrap(), ratio(-7, 3));
        assert_eq!(parse_rat("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rat("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn ball_keys_identify_equal_balls() {
        // B_0(1) = B_0(4) at p = 3 since v(3) = 1 > 0
        assert_eq!(ball_key(&rat(1), GammaValue::Finite(0), 3), ball_key(&rat(4), GammaValue::Finite(0), 3));
        assert_ne!(ball_key(&rat(1), GammaValue::Finite(1), 3), ball_key(&rat(4), GammaValue::Finite(1), 3));
        assert_eq!(ball_key(&rat(9), GammaValue::Finite(1), 3), ball_key(&rat(0), GammaValue::Finite(1), 3));
        assert_eq!(
            ball_key(&ratio(1, 3), GammaValue::Finite(-1), 3),
            ball_key(&ratio(4, 3), GammaValue::Finite(-1), 3)
        );
        assert_ne!(
            ball_key(&ratio(1, 3), GammaValue::Finite(-1), 3),
            ball_key(&ratio(2, 3), GammaValue::Finite(-1), 3)
        );
    }

    #[test]
    fn primes() {
        assert!(check_prime(3).is_ok());
        assert!(check_prime(5).is_ok());
        assert!(check_prime(2).is_err());
        assert!(check_prime(9).is_err());
    }
}
