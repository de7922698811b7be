//! Face laws of random dice and the coefficient calculus built on them.
//!
//! For consecutive dice `k`, `k+1` with independent faces `X, X' ~ ℒᵏ` and
//! `Y, Y' ~ ℒᵏ⁺¹`:
//!
//! - `p = P(X > Y)`, `q = P(X > Y, X' > Y)`, `r = P(X > Y, X > Y')`
//! - `s = P(Z > X > Y)` with `Z ~ ℒᵏ⁻¹`
//!
//! and the tie variants with every `>` replaced by `=`.
//!
//! Finite laws are handled in exact rational arithmetic. Geometric pairs have
//! closed forms, also exact. A geometric law meeting a finite law is cut where
//! its tail mass drops below `1e-15` and the result is reported as a float.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("no formula for the pair {0}")]
    UnsupportedPair(String),
    #[error("dice share a face value: {0}")]
    TiesPresent(String),
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Tail mass left out when a geometric law is truncated.
pub const GEOMETRIC_TAIL: f64 = 1e-15;

/// A finite law: strictly increasing support with positive weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    support: Vec<f64>,
    weights: Vec<BigRational>,
}

impl FiniteLaw {
    /// Atoms may come in any order; repeated values are merged. Weights are
    /// rescaled to sum to exactly 1 once they are checked to be within 1e-12.
    pub fn new(atoms: Vec<(f64, BigRational)>) -> Result<Self, LawError> {
        if atoms.is_empty() {
            return Err(LawError::InvalidLaw("empty support".into()));
        }
        let mut atoms = atoms;
        if atoms.iter().any(|(v, _)| !v.is_finite()) {
            return Err(LawError::InvalidLaw("non-finite support value".into()));
        }
        if atoms.iter().any(|(_, w)| !w.is_positive()) {
            return Err(LawError::InvalidLaw("weights must be positive".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::new();
        let mut weights: Vec<BigRational> = Vec::new();
        for (v, w) in atoms {
            if support.last() == Some(&v) {
                *weights.last_mut().unwrap() += w;
            } else {
                support.push(v);
                weights.push(w);
            }
        }
        let total: BigRational = weights.iter().sum();
        if (total.to_f64().unwrap_or(f64::NAN) - 1.0).abs() > 1e-12 {
            return Err(LawError::InvalidLaw(format!(
                "weights sum to {total}, not 1"
            )));
        }
        if !total.is_one() {
            for w in &mut weights {
                *w = &*w / &total;
            }
        }
        Ok(FiniteLaw { support, weights })
    }

    /// Uniform over a face multiset.
    pub fn uniform_over(faces: &[f64]) -> Result<Self, LawError> {
        let w = BigRational::new(BigInt::one(), BigInt::from(faces.len().max(1)));
        FiniteLaw::new(faces.iter().map(|&v| (v, w.clone())).collect())
    }

    pub fn point(v: f64) -> Self {
        FiniteLaw {
            support: vec![v],
            weights: vec![BigRational::one()],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Finite(FiniteLaw),
    /// `P(X = k) = p(1−p)^k` for `k = 0, 1, …`.
    Geometric(BigRational),
    /// Any law without atoms, the same for every die that uses it.
    Uniform,
}

impl Law {
    pub fn geometric(p: BigRational) -> Result<Self, LawError> {
        if !p.is_positive() || p >= BigRational::one() {
            return Err(LawError::InvalidLaw(format!("geometric p = {p} not in (0,1)")));
        }
        Ok(Law::Geometric(p))
    }

    pub fn geometric_f64(p: f64) -> Result<Self, LawError> {
        let r = BigRational::from_f64(p)
            .ok_or_else(|| LawError::InvalidLaw(format!("geometric p = {p}")))?;
        Law::geometric(r)
    }

    pub fn finite(atoms: &[(f64, f64)]) -> Result<Self, LawError> {
        let atoms = atoms
            .iter()
            .map(|&(v, w)| {
                BigRational::from_f64(w)
                    .map(|w| (v, w))
                    .ok_or_else(|| LawError::InvalidLaw(format!("weight {w}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Law::Finite(FiniteLaw::new(atoms)?))
    }

    fn kind(&self) -> &'static str {
        match self {
            Law::Finite(_) => "finite",
            Law::Geometric(_) => "geometric",
            Law::Uniform => "uniform",
        }
    }

    /// Finite stand-in used when this law meets a law of another kind.
    fn as_float_atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Law::Finite(f) => Some((f.support.clone(), f.weights_f64())),
            Law::Geometric(p) => {
                let p = p.to_f64().unwrap();
                let q = 1.0 - p;
                // keep 0..=K with q^(K+1) < tail
                let k = ((GEOMETRIC_TAIL.ln() / q.ln()).ceil() as usize).max(1);
                let mut support = Vec::with_capacity(k + 1);
                let mut weights = Vec::with_capacity(k + 1);
                let mut w = p;
                for i in 0..=k {
                    support.push(i as f64);
                    weights.push(w);
                    w *= q;
                }
                Some((support, weights))
            }
            Law::Uniform => None,
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Uniform => write!(f, "uniform"),
            Law::Geometric(p) => write!(f, "geometric:{p}"),
            Law::Finite(fl) => {
                write!(f, "finite:")?;
                for (i, (v, w)) in fl.support.iter().zip(&fl.weights).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}={w}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Law {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Reads `3`, `-2.5`, `1/3` or `1e-3` as an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, LawError> {
    let t = text.trim();
    let bad = || LawError::InvalidLaw(format!("not a number: `{text}`"));
    if let Some((a, b)) = t.split_once('/') {
        let a = BigInt::from_str(a.trim()).map_err(|_| bad())?;
        let b = BigInt::from_str(b.trim()).map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    if t.contains(['e', 'E']) {
        let v: f64 = t.parse().map_err(|_| bad())?;
        return BigRational::from_f64(v).ok_or_else(bad);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num = BigInt::from_str(&digits).map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Parses one law: `uniform`, `geometric:P` or `finite:v1=w1,v2=w2,...`.
impl FromStr for Law {
    type Err = LawError;

    fn from_str(text: &str) -> Result<Self, LawError> {
        let t = text.trim();
        if t == "uniform" {
            return Ok(Law::Uniform);
        }
        if let Some(p) = t.strip_prefix("geometric:") {
            return Law::geometric(parse_rational(p)?);
        }
        if let Some(body) = t.strip_prefix("finite:") {
            let mut atoms = Vec::new();
            for tok in body.split(',') {
                let (v, w) = tok
                    .split_once('=')
                    .ok_or_else(|| LawError::InvalidLaw(format!("expected v=w, got `{tok}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| LawError::InvalidLaw(format!("bad value `{v}`")))?;
                atoms.push((v, parse_rational(w)?));
            }
            return Ok(Law::Finite(FiniteLaw::new(atoms)?));
        }
        Err(LawError::InvalidLaw(format!("unknown law `{t}`")))
    }
}

/// Parses a comma separated law list. A `v=w` token that follows a finite law
/// belongs to it, so `finite:0=1/2,1=1/2,uniform` is two laws. `blowup:FILE`
/// reads a JSON array of face lists and contributes one law per die.
pub fn parse_law_list(text: &str) -> Result<Vec<Law>, LawError> {
    let mut groups: Vec<String> = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        let continues = !tok.contains(':')
            && tok.contains('=')
            && groups.last().is_some_and(|g| g.starts_with("finite:"));
        if continues {
            let g = groups.last_mut().unwrap();
            g.push(',');
            g.push_str(tok);
        } else {
            groups.push(tok.to_string());
        }
    }
    let mut laws = Vec::new();
    for g in groups {
        if let Some(path) = g.strip_prefix("blowup:") {
            let body = std::fs::read_to_string(path)
                .map_err(|e| LawError::InvalidLaw(format!("{path}: {e}")))?;
            let dice: Vec<Vec<f64>> = serde_json::from_str(&body)
                .map_err(|e| LawError::InvalidLaw(format!("{path}: {e}")))?;
            laws.extend(blow_up_laws(&dice)?);
        } else {
            laws.push(g.parse()?);
        }
    }
    Ok(laws)
}

/// A coefficient, exact when every law involved allowed it.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Approx(f64),
}

impl Prob {
    pub fn value(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64().unwrap(),
            Prob::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Approx(_) => None,
        }
    }

    fn ratio(n: i64, d: i64) -> Prob {
        Prob::Exact(BigRational::new(n.into(), d.into()))
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{r}"),
            Prob::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCoefficients {
    pub p: Prob,
    pub q: Prob,
    pub r: Prob,
    pub p_eq: Prob,
    pub q_eq: Prob,
    pub r_eq: Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleCoefficients {
    pub s: Prob,
    pub s_eq: Prob,
}

/// Sums over finite atoms in any field where the arithmetic is exact enough.
trait Field: Num + Clone + PartialOrd {
    fn count(n: u64) -> Self;
}

impl Field for f64 {
    fn count(n: u64) -> Self {
        n as f64
    }
}

impl Field for BigRational {
    fn count(n: u64) -> Self {
        BigRational::from_integer(n.into())
    }
}

struct Atoms<'a, T> {
    v: &'a [f64],
    w: &'a [T],
}

impl<T: Field> Atoms<'_, T> {
    fn mass(&self, pred: impl Fn(f64) -> bool) -> T {
        self.v
            .iter()
            .zip(self.w)
            .filter(|(v, _)| pred(**v))
            .fold(T::zero(), |acc, (_, w)| acc + w.clone())
    }

    fn above(&self, y: f64) -> T {
        self.mass(|v| v > y)
    }

    fn below(&self, y: f64) -> T {
        self.mass(|v| v < y)
    }

    fn at(&self, y: f64) -> T {
        self.mass(|v| v == y)
    }
}

fn finite_pair<T: Field>(a: &Atoms<T>, b: &Atoms<T>) -> [T; 6] {
    let mut p = T::zero();
    let mut p_eq = T::zero();
    let mut q = T::zero();
    let mut q_eq = T::zero();
    for (&y, wy) in b.v.iter().zip(b.w) {
        let above = a.above(y);
        let at = a.at(y);
        p = p + wy.clone() * above.clone();
        p_eq = p_eq + wy.clone() * at.clone();
        q = q + wy.clone() * above.clone() * above;
        q_eq = q_eq + wy.clone() * at.clone() * at;
    }
    let mut r = T::zero();
    let mut r_eq = T::zero();
    for (&x, wx) in a.v.iter().zip(a.w) {
        let below = b.below(x);
        let at = b.at(x);
        r = r + wx.clone() * below.clone() * below;
        r_eq = r_eq + wx.clone() * at.clone() * at;
    }
    [p, q, r, p_eq, q_eq, r_eq]
}

fn finite_triple<T: Field>(prev: &Atoms<T>, mid: &Atoms<T>, next: &Atoms<T>) -> [T; 2] {
    let mut s = T::zero();
    let mut s_eq = T::zero();
    for (&y, wy) in mid.v.iter().zip(mid.w) {
        s = s + wy.clone() * prev.above(y) * next.below(y);
        s_eq = s_eq + wy.clone() * prev.at(y) * next.at(y);
    }
    [s, s_eq]
}

fn exact6(v: [BigRational; 6]) -> PairCoefficients {
    let [p, q, r, p_eq, q_eq, r_eq] = v.map(Prob::Exact);
    PairCoefficients { p, q, r, p_eq, q_eq, r_eq }
}

fn approx6(v: [f64; 6]) -> PairCoefficients {
    let [p, q, r, p_eq, q_eq, r_eq] = v.map(Prob::Approx);
    PairCoefficients { p, q, r, p_eq, q_eq, r_eq }
}

/// The six pair coefficients of `(ℒᵏ, ℒᵏ⁺¹) = (law_a, law_b)`.
pub fn pairwise_coefficients(law_a: &Law, law_b: &Law) -> Result<PairCoefficients, LawError> {
    match (law_a, law_b) {
        (Law::Uniform, Law::Uniform) => Ok(PairCoefficients {
            p: Prob::ratio(1, 2),
            q: Prob::ratio(1, 3),
            r: Prob::ratio(1, 3),
            p_eq: Prob::ratio(0, 1),
            q_eq: Prob::ratio(0, 1),
            r_eq: Prob::ratio(0, 1),
        }),
        (Law::Finite(a), Law::Finite(b)) => {
            let a = Atoms { v: &a.support, w: &a.weights };
            let b = Atoms { v: &b.support, w: &b.weights };
            Ok(exact6(finite_pair(&a, &b)))
        }
        (Law::Geometric(a), Law::Geometric(b)) => Ok(exact6(geometric_pair(a, b))),
        _ => {
            let unsupported = || {
                LawError::UnsupportedPair(format!("{} / {}", law_a.kind(), law_b.kind()))
            };
            let (av, aw) = law_a.as_float_atoms().ok_or_else(unsupported)?;
            let (bv, bw) = law_b.as_float_atoms().ok_or_else(unsupported)?;
            let a = Atoms { v: &av, w: &aw };
            let b = Atoms { v: &bv, w: &bw };
            Ok(approx6(finite_pair(&a, &b)))
        }
    }
}

/// `s = P(X > Y > Z)` and `s_eq = P(X = Y = Z)` for `X ~ prev`, `Y ~ law`,
/// `Z ~ next`.
pub fn triple_s(prev: &Law, law: &Law, next: &Law) -> Result<TripleCoefficients, LawError> {
    let done = |[s, s_eq]: [Prob; 2]| TripleCoefficients { s, s_eq };
    match (prev, law, next) {
        (Law::Uniform, Law::Uniform, Law::Uniform) => {
            Ok(done([Prob::ratio(1, 6), Prob::ratio(0, 1)]))
        }
        (Law::Finite(a), Law::Finite(b), Law::Finite(c)) => {
            let a = Atoms { v: &a.support, w: &a.weights };
            let b = Atoms { v: &b.support, w: &b.weights };
            let c = Atoms { v: &c.support, w: &c.weights };
            Ok(done(finite_triple(&a, &b, &c).map(Prob::Exact)))
        }
        (Law::Geometric(a), Law::Geometric(b), Law::Geometric(c)) => {
            Ok(done(geometric_triple(a, b, c).map(Prob::Exact)))
        }
        _ => {
            let unsupported = || {
                LawError::UnsupportedPair(format!(
                    "{} / {} / {}",
                    prev.kind(),
                    law.kind(),
                    next.kind()
                ))
            };
            let (av, aw) = prev.as_float_atoms().ok_or_else(unsupported)?;
            let (bv, bw) = law.as_float_atoms().ok_or_else(unsupported)?;
            let (cv, cw) = next.as_float_atoms().ok_or_else(unsupported)?;
            let a = Atoms { v: &av, w: &aw };
            let b = Atoms { v: &bv, w: &bw };
            let c = Atoms { v: &cv, w: &cw };
            Ok(done(finite_triple(&a, &b, &c).map(Prob::Approx)))
        }
    }
}

fn geometric_pair(a: &BigRational, b: &BigRational) -> [BigRational; 6] {
    let one = BigRational::one();
    let xa = &one - a;
    let yb = &one - b;
    let xy = &xa * &yb;
    let x2y = &xa * &xy;
    let xy2 = &xy * &yb;
    let p = b * &xa / (&one - &xy);
    let q = b * &xa * &xa / (&one - &x2y);
    let r = &one - BigRational::from_integer(2.into()) * a / (&one - &xy) + a / (&one - &xy2);
    let p_eq = a * b / (&one - &xy);
    let q_eq = a * a * b / (&one - &x2y);
    let r_eq = a * b * b / (&one - &xy2);
    [p, q, r, p_eq, q_eq, r_eq]
}

fn geometric_triple(a: &BigRational, b: &BigRational, c: &BigRational) -> [BigRational; 2] {
    let one = BigRational::one();
    let xa = &one - a;
    let xy = &xa * (&one - b);
    let xyz = &xy * (&one - c);
    let s = b * &xa / (&one - &xy) - b * &xa / (&one - &xyz);
    let s_eq = a * b * c / (&one - &xyz);
    [s, s_eq]
}

/// Coefficient octets for every cyclic index of a law sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub p: Vec<Prob>,
    pub q: Vec<Prob>,
    pub r: Vec<Prob>,
    pub s: Vec<Prob>,
    pub p_eq: Vec<Prob>,
    pub q_eq: Vec<Prob>,
    pub r_eq: Vec<Prob>,
    pub s_eq: Vec<Prob>,
}

impl CoefficientSet {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        [&self.p, &self.q, &self.r, &self.s, &self.p_eq, &self.q_eq, &self.r_eq, &self.s_eq]
            .iter()
            .all(|v| v.iter().all(|x| x.exact().is_some()))
    }
}

/// Index `k` pairs `laws[k]` with `laws[k+1]`; `s_k` uses `k−1, k, k+1`.
pub fn coefficient_set(laws: &[Law]) -> Result<CoefficientSet, LawError> {
    let l = laws.len();
    if l < 2 {
        return Err(LawError::InvalidModel("need at least two laws".into()));
    }
    let mut set = CoefficientSet {
        p: vec![],
        q: vec![],
        r: vec![],
        s: vec![],
        p_eq: vec![],
        q_eq: vec![],
        r_eq: vec![],
        s_eq: vec![],
    };
    for k in 0..l {
        let c = pairwise_coefficients(&laws[k], &laws[(k + 1) % l])?;
        let t = triple_s(&laws[(k + l - 1) % l], &laws[k], &laws[(k + 1) % l])?;
        set.p.push(c.p);
        set.q.push(c.q);
        set.r.push(c.r);
        set.p_eq.push(c.p_eq);
        set.q_eq.push(c.q_eq);
        set.r_eq.push(c.r_eq);
        set.s.push(t.s);
        set.s_eq.push(t.s_eq);
    }
    Ok(set)
}

/// ℓ dice with `n_k = round(f_k·m)` faces, half rounded up, and one law each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub m: f64,
    pub f: Vec<f64>,
    pub sizes: Vec<u64>,
    pub laws: Vec<Law>,
}

impl ModelConfig {
    pub fn new(m: f64, f: Vec<f64>, laws: Vec<Law>) -> Result<Self, LawError> {
        if f.len() != laws.len() || f.len() < 2 {
            return Err(LawError::InvalidModel(format!(
                "{} fractions for {} laws",
                f.len(),
                laws.len()
            )));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(LawError::InvalidModel(format!("m = {m}")));
        }
        if f.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(LawError::InvalidModel("fractions must lie in (0,1]".into()));
        }
        let sizes: Vec<u64> = f.iter().map(|&x| (x * m + 0.5).floor() as u64).collect();
        if sizes.contains(&0) {
            return Err(LawError::InvalidModel("some die has no faces".into()));
        }
        Ok(ModelConfig { m, f, sizes, laws })
    }

    /// Face counts given directly: `m = max n_k`, `f_k = n_k/m`.
    pub fn from_sizes(sizes: &[u64], laws: Vec<Law>) -> Result<Self, LawError> {
        let m = sizes.iter().copied().max().unwrap_or(0) as f64;
        if m == 0.0 {
            return Err(LawError::InvalidModel("some die has no faces".into()));
        }
        let f = sizes.iter().map(|&n| n as f64 / m).collect();
        let cfg = ModelConfig::new(m, f, laws)?;
        debug_assert_eq!(cfg.sizes, sizes);
        Ok(cfg)
    }

    /// `ℓ` identical laws with `n` faces each.
    pub fn homogeneous(law: Law, letters: usize, n: u64) -> Result<Self, LawError> {
        ModelConfig::from_sizes(&vec![n; letters], vec![law; letters])
    }

    pub fn letters(&self) -> usize {
        self.laws.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub exact: bool,
    pub mean_n: Vec<f64>,
    pub var_n: Vec<f64>,
    /// `Cov(N_{k−1}, N_k)`.
    pub cov_n_prev: Vec<f64>,
    /// Finite-size `Corr(N_{k−1}, N_k)`; absent when a variance is zero.
    pub corr_n_prev: Vec<Option<f64>>,
    pub mean_e: Vec<f64>,
    pub var_e: Vec<f64>,
    pub cov_e_prev: Vec<f64>,
    pub sigma: Vec<f64>,
    pub gamma: Vec<Option<f64>>,
    /// Exact rational forms of `mean_n`, `var_n`, `cov_n_prev` when available.
    pub exact_n: Option<ExactMoments>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoments {
    pub mean_n: Vec<String>,
    pub var_n: Vec<String>,
    pub cov_n_prev: Vec<String>,
}

struct Shape<T> {
    mean: Vec<T>,
    var: Vec<T>,
    cov_prev: Vec<T>,
}

fn moment_shape<T: Field>(
    n: &[u64],
    p: &[T],
    q: &[T],
    r: &[T],
    s: &[T],
) -> Shape<T> {
    let l = n.len();
    let mut out = Shape {
        mean: vec![],
        var: vec![],
        cov_prev: vec![],
    };
    for k in 0..l {
        let a = T::count(n[k]);
        let b = T::count(n[(k + 1) % l]);
        let prev = T::count(n[(k + l - 1) % l]);
        let pp = p[k].clone() * p[k].clone();
        out.mean.push(a.clone() * b.clone() * p[k].clone());
        let inner = a.clone() * (q[k].clone() - pp.clone())
            + b.clone() * (r[k].clone() - pp.clone())
            + pp
            + p[k].clone()
            - q[k].clone()
            - r[k].clone();
        out.var.push(a.clone() * b.clone() * inner);
        let pk_prev = p[(k + l - 1) % l].clone();
        out.cov_prev
            .push(prev * a * b * (s[k].clone() - pk_prev * p[k].clone()));
    }
    out
}

fn exact_col(v: &[Prob]) -> Vec<BigRational> {
    v.iter().map(|x| x.exact().unwrap().clone()).collect()
}

fn float_col(v: &[Prob]) -> Vec<f64> {
    v.iter().map(Prob::value).collect()
}

/// Exact finite-size moments of `N_k` and `E_k` plus `σ_k`, `γ_k`.
pub fn model_moments(config: &ModelConfig) -> Result<MomentReport, LawError> {
    let l = config.letters();
    if l < 3 {
        return Err(LawError::InvalidModel("moments need at least three dice".into()));
    }
    let c = coefficient_set(&config.laws)?;
    let n = &config.sizes;
    let to_f = |v: Vec<BigRational>| v.iter().map(|x| x.to_f64().unwrap()).collect::<Vec<_>>();

    let (nshape, eshape, exact_n) = if c.is_exact() {
        let ns = moment_shape(n, &exact_col(&c.p), &exact_col(&c.q), &exact_col(&c.r), &exact_col(&c.s));
        let es = moment_shape(
            n,
            &exact_col(&c.p_eq),
            &exact_col(&c.q_eq),
            &exact_col(&c.r_eq),
            &exact_col(&c.s_eq),
        );
        let strs = |v: &[BigRational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let exact = ExactMoments {
            mean_n: strs(&ns.mean),
            var_n: strs(&ns.var),
            cov_n_prev: strs(&ns.cov_prev),
        };
        let f = |s: Shape<BigRational>| Shape {
            mean: to_f(s.mean),
            var: to_f(s.var),
            cov_prev: to_f(s.cov_prev),
        };
        (f(ns), f(es), Some(exact))
    } else {
        let ns = moment_shape(n, &float_col(&c.p), &float_col(&c.q), &float_col(&c.r), &float_col(&c.s));
        let es = moment_shape(
            n,
            &float_col(&c.p_eq),
            &float_col(&c.q_eq),
            &float_col(&c.r_eq),
            &float_col(&c.s_eq),
        );
        (ns, es, None)
    };

    let p = float_col(&c.p);
    let q = float_col(&c.q);
    let r = float_col(&c.r);
    let s = float_col(&c.s);
    let f = &config.f;
    let sigma: Vec<f64> = (0..l)
        .map(|k| {
            let (a, b) = (f[k], f[(k + 1) % l]);
            let v = a * b * (a * (q[k] - p[k] * p[k]) + b * (r[k] - p[k] * p[k]));
            v.max(0.0).sqrt()
        })
        .collect();
    let gamma = (0..l)
        .map(|k| {
            let km = (k + l - 1) % l;
            let den = sigma[km] * sigma[k];
            (den > 0.0).then(|| {
                f[km] * f[k] * f[(k + 1) % l] * (s[k] - p[km] * p[k]) / den
            })
        })
        .collect();
    let corr_n_prev = (0..l)
        .map(|k| {
            let km = (k + l - 1) % l;
            let den = (nshape.var[km] * nshape.var[k]).sqrt();
            (den > 0.0).then(|| nshape.cov_prev[k] / den)
        })
        .collect();

    Ok(MomentReport {
        exact: exact_n.is_some(),
        mean_n: nshape.mean,
        var_n: nshape.var,
        cov_n_prev: nshape.cov_prev,
        corr_n_prev,
        mean_e: eshape.mean,
        var_e: eshape.var,
        cov_e_prev: eshape.cov_prev,
        sigma,
        gamma,
        exact_n,
    })
}

/// One finite law per die, uniform over its face multiset.
pub fn blow_up_laws(dice: &[Vec<f64>]) -> Result<Vec<Law>, LawError> {
    if dice.is_empty() {
        return Err(LawError::InvalidLaw("no dice".into()));
    }
    dice.iter()
        .map(|d| FiniteLaw::uniform_over(d).map(Law::Finite))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupConstraint {
    pub p_half_indices: Vec<usize>,
    /// `q_k + r_k` as exact fractions, one per index in `p_half_indices`.
    pub q_plus_r_values: Vec<String>,
    pub q_plus_r_float: Vec<f64>,
    pub all_exceed_two_thirds: bool,
}

/// For every k with `p_k = 1/2` exactly, `q_k + r_k` and whether it beats 2/3.
pub fn check_blowup_constraint(dice: &[Vec<f64>]) -> Result<BlowupConstraint, LawError> {
    let size = dice.first().map_or(0, Vec::len);
    if size == 0 || dice.iter().any(|d| d.len() != size) {
        return Err(LawError::InvalidModel("dice must be nonempty and of equal size".into()));
    }
    let mut all: Vec<f64> = dice.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(LawError::TiesPresent(format!("{}", w[0])));
    }
    let c = coefficient_set(&blow_up_laws(dice)?)?;
    let half = BigRational::new(1.into(), 2.into());
    let two_thirds = BigRational::new(2.into(), 3.into());
    let mut out = BlowupConstraint {
        p_half_indices: vec![],
        q_plus_r_values: vec![],
        q_plus_r_float: vec![],
        all_exceed_two_thirds: true,
    };
    for k in 0..c.len() {
        if c.p[k].exact() == Some(&half) {
            let qr = c.q[k].exact().unwrap() + c.r[k].exact().unwrap();
            out.all_exceed_two_thirds &= qr > two_thirds;
            out.p_half_indices.push(k);
            out.q_plus_r_float.push(qr.to_f64().unwrap());
            out.q_plus_r_values.push(qr.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn dice(v: &[&[u32]]) -> Vec<Vec<f64>> {
        v.iter().map(|d| d.iter().map(|&x| x as f64).collect()).collect()
    }

    fn example_dice() -> Vec<Vec<f64>> {
        dice(&[&[18, 13, 11, 7, 6, 2], &[17, 15, 10, 8, 4, 3], &[16, 14, 12, 9, 5, 1]])
    }

    #[test]
    fn parses_laws() {
        assert_eq!("uniform".parse::<Law>().unwrap(), Law::Uniform);
        assert_eq!("geometric:0.05".parse::<Law>().unwrap(), Law::Geometric(q(1, 20)));
        let Law::Finite(f) = "finite:4=2/3,0=1/3".parse::<Law>().unwrap() else {
            panic!()
        };
        assert_eq!(f.support(), &[0.0, 4.0]);
        assert_eq!(f.weights(), &[q(1, 3), q(2, 3)]);
        assert!("finite:1=0.5".parse::<Law>().is_err());
        assert!("geometric:1".parse::<Law>().is_err());
        assert!("normal".parse::<Law>().is_err());
        let laws = parse_law_list("finite:0=1/2,1=1/2,uniform,geometric:1/3").unwrap();
        assert_eq!(laws.len(), 3);
        assert_eq!(laws[1], Law::Uniform);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_rational("-3").unwrap(), q(-3, 1));
        assert_eq!(parse_rational("2/6").unwrap(), q(1, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn uniform_constants() {
        let c = pairwise_coefficients(&Law::Uniform, &Law::Uniform).unwrap();
        assert_eq!(c.p.exact(), Some(&q(1, 2)));
        assert_eq!(c.q.exact(), Some(&q(1, 3)));
        assert_eq!(c.r.exact(), Some(&q(1, 3)));
        assert_eq!(c.p_eq.value(), 0.0);
        let t = triple_s(&Law::Uniform, &Law::Uniform, &Law::Uniform).unwrap();
        assert_eq!(t.s.exact(), Some(&q(1, 6)));
        let g = Law::geometric(q(1, 2)).unwrap();
        assert!(matches!(
            pairwise_coefficients(&Law::Uniform, &g),
            Err(LawError::UnsupportedPair(_))
        ));
    }

    #[test]
    fn geometric_same_parameter_formulas() {
        for (n, d) in [(1, 2), (1, 8), (3, 10), (1, 20)] {
            let pr = q(n, d);
            let one = BigRational::one();
            let x = &one - &pr;
            let g = Law::geometric(pr.clone()).unwrap();
            let c = pairwise_coefficients(&g, &g).unwrap();
            let three = &q(3, 1) - &q(3, 1) * &pr + &pr * &pr;
            let two = &q(2, 1) - &pr;
            assert_eq!(c.p.exact().unwrap(), &(&x / &two));
            assert_eq!(c.q.exact().unwrap(), &(&x * &x / &three));
            let r = &x * (&q(2, 1) - &q(2, 1) * &pr + &pr * &pr) / (&two * &three);
            assert_eq!(c.r.exact().unwrap(), &r);
            let t = triple_s(&g, &g, &g).unwrap();
            assert_eq!(t.s.exact().unwrap(), &(&x * &x * &x / (&two * &three)));
            // p(L,L) + p(L,L) + p_eq = 1
            assert_eq!(c.p.exact().unwrap() * q(2, 1) + c.p_eq.exact().unwrap(), one);
        }
    }

    /// Truncated sums straight from the pmf, no closed forms involved.
    fn geometric_oracle(a: f64, b: f64, c: f64) -> [f64; 8] {
        let pmf = |p: f64, k: usize| p * (1.0 - p).powi(k as i32);
        let k_max = 2000;
        let tail = |p: f64, y: usize| (1.0 - p).powi(y as i32 + 1); // P(X > y)
        let head = |p: f64, y: usize| 1.0 - (1.0 - p).powi(y as i32); // P(X < y)
        let mut out = [0.0; 8];
        for y in 0..k_max {
            let wb = pmf(b, y);
            out[0] += wb * tail(a, y);
            out[1] += wb * tail(a, y).powi(2);
            out[3] += wb * pmf(a, y);
            out[4] += wb * pmf(a, y).powi(2);
            out[6] += wb * tail(a, y) * head(c, y);
            out[7] += wb * pmf(a, y) * pmf(c, y);
        }
        for x in 0..k_max {
            let wa = pmf(a, x);
            out[2] += wa * head(b, x).powi(2);
            out[5] += wa * pmf(b, x).powi(2);
        }
        out
    }

    #[test]
    fn geometric_closed_forms_match_pmf_sums() {
        for (a, b, c) in [(0.5, 0.5, 0.5), (0.3, 0.6, 0.2), (0.125, 0.25, 0.75)] {
            let ga = Law::geometric_f64(a).unwrap();
            let gb = Law::geometric_f64(b).unwrap();
            let gc = Law::geometric_f64(c).unwrap();
            let pc = pairwise_coefficients(&ga, &gb).unwrap();
            let t = triple_s(&ga, &gb, &gc).unwrap();
            let got = [
                pc.p.value(),
                pc.q.value(),
                pc.r.value(),
                pc.p_eq.value(),
                pc.q_eq.value(),
                pc.r_eq.value(),
                t.s.value(),
                t.s_eq.value(),
            ];
            let want = geometric_oracle(a, b, c);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
            }
        }
        let g = Law::geometric(q(1, 2)).unwrap();
        assert_eq!(pairwise_coefficients(&g, &g).unwrap().p.exact(), Some(&q(1, 3)));
    }

    #[test]
    fn mixed_geometric_finite_is_truncated() {
        let g = Law::geometric(q(1, 2)).unwrap();
        let pt = Law::Finite(FiniteLaw::point(0.5));
        // P(G > 0.5) = P(G ≥ 1) = 1/2
        let c = pairwise_coefficients(&g, &pt).unwrap();
        assert!(c.p.exact().is_none());
        assert!((c.p.value() - 0.5).abs() < 1e-14);
        assert!((c.q.value() - 0.25).abs() < 1e-14);
        // against itself as a truncated law the closed form must be recovered
        let pow2 = |k: u32| BigRational::new(1.into(), BigInt::from(2).pow(k));
        let atoms = (0..60)
            .map(|k| (k as f64, pow2(k + 1)))
            .chain([(1000.0, pow2(60))])
            .collect();
        let fake = Law::Finite(FiniteLaw::new(atoms).unwrap());
        let c = pairwise_coefficients(&fake, &g).unwrap();
        assert!((c.p.value() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn effron_blow_up() {
        let laws = blow_up_laws(&dice(&[&[0, 0, 4, 4, 4, 4]])).unwrap();
        let Law::Finite(f) = &laws[0] else { panic!() };
        assert_eq!(f.support(), &[0.0, 4.0]);
        assert_eq!(f.weights(), &[q(1, 3), q(2, 3)]);
    }

    #[test]
    fn example_dice_coefficients() {
        let c = coefficient_set(&blow_up_laws(&example_dice()).unwrap()).unwrap();
        for k in 0..3 {
            assert_eq!(c.p[k].exact(), Some(&q(1, 2)));
            assert_eq!(c.q[k].exact(), Some(&q(70, 216)));
            assert_eq!(c.r[k].exact(), Some(&q(76, 216)));
            assert_eq!(c.s[k].exact(), Some(&q(1, 6)));
        }
        let chk = check_blowup_constraint(&example_dice()).unwrap();
        assert_eq!(chk.p_half_indices, vec![0, 1, 2]);
        assert_eq!(chk.q_plus_r_values, vec!["73/108"; 3]);
        assert!(chk.all_exceed_two_thirds);

        let cfg = ModelConfig::homogeneous(Law::Uniform, 3, 6).unwrap();
        let cfg = ModelConfig {
            laws: blow_up_laws(&example_dice()).unwrap(),
            ..cfg
        };
        let m = model_moments(&cfg).unwrap();
        for k in 0..3 {
            assert!((m.sigma[k] - (19.0f64 / 108.0).sqrt()).abs() < 1e-14);
            assert!((m.gamma[k].unwrap() + 9.0 / 19.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_s_example() {
        let d = dice(&[&[15, 14, 13, 6, 5, 4], &[18, 17, 16, 3, 2, 1], &[12, 11, 10, 9, 8, 7]]);
        let c = coefficient_set(&blow_up_laws(&d).unwrap()).unwrap();
        assert_eq!(c.s[1].exact(), Some(&q(0, 1)));
        let chk = check_blowup_constraint(&d).unwrap();
        assert_eq!(chk.p_half_indices.len(), 3);
        assert!(chk.q_plus_r_values.iter().all(|v| v == "3/4"));
        let tied = dice(&[&[1, 2], &[2, 3], &[4, 5]]);
        assert!(matches!(check_blowup_constraint(&tied), Err(LawError::TiesPresent(_))));
    }

    #[test]
    fn point_masses() {
        let laws: Vec<Law> = [3.0, 2.0, 1.0].iter().map(|&v| Law::Finite(FiniteLaw::point(v))).collect();
        let t = triple_s(&laws[0], &laws[1], &laws[2]).unwrap();
        assert_eq!(t.s.exact(), Some(&q(1, 1)));
        let cfg = ModelConfig::from_sizes(&[2, 3, 4], laws).unwrap();
        let m = model_moments(&cfg).unwrap();
        assert!(m.var_e.iter().all(|&v| v == 0.0));
        assert!(m.var_n.iter().all(|&v| v == 0.0));
        assert!(m.gamma.iter().all(Option::is_none));
    }

    #[test]
    fn uniform_moments() {
        let n = 10u64;
        let cfg = ModelConfig::homogeneous(Law::Uniform, 3, n).unwrap();
        let m = model_moments(&cfg).unwrap();
        let nf = n as f64;
        for k in 0..3 {
            assert_eq!(m.mean_n[k], nf * nf / 2.0);
            assert!((m.var_n[k] - nf.powi(3) / 6.0 * (1.0 + 1.0 / (2.0 * nf))).abs() < 1e-9);
            assert!((m.cov_n_prev[k] + nf.powi(3) / 12.0).abs() < 1e-9);
            assert!((m.gamma[k].unwrap() + 0.5).abs() < 1e-15);
        }
        assert_eq!(m.exact_n.unwrap().mean_n[0], "50");
    }

    #[test]
    fn ties_vanish_as_geometric_flattens() {
        let mut prev = f64::INFINITY;
        for d in [2, 8, 32] {
            let g = Law::geometric(q(1, d)).unwrap();
            let m = model_moments(&ModelConfig::homogeneous(g, 3, 20).unwrap()).unwrap();
            let scaled = m.mean_e[0] / 400.0;
            assert!(scaled < prev);
            prev = scaled;
        }
    }

    #[test]
    fn config_rounding() {
        let cfg = ModelConfig::new(5.0, vec![0.5, 0.3, 1.0], vec![Law::Uniform; 3]).unwrap();
        assert_eq!(cfg.sizes, vec![3, 2, 5]);
        assert!(ModelConfig::new(1.0, vec![0.2, 1.0, 1.0], vec![Law::Uniform; 3]).is_err());
        assert!(ModelConfig::new(1.0, vec![1.2, 1.0, 1.0], vec![Law::Uniform; 3]).is_err());
    }
}
