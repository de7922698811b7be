//! The cyclic covariance matrix of the normalized victory counts.
//!
//! `Σ` has unit diagonal, `Σ[k−1][k] = Σ[k][k−1] = γ_k` with indices taken
//! mod ℓ, and zeros elsewhere. Index `k` here is 0-based, so `γ[0]` sits in
//! the corners `(ℓ−1, 0)` and `(0, ℓ−1)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("invalid fraction: {0}")]
    InvalidFraction(String),
    #[error("invalid covariance spec: {0}")]
    InvalidSpec(String),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0})")]
    NotPSD(f64),
    #[error("direction has zero variance")]
    DegenerateDirection,
}

/// Eigenvalues this close to zero, relative to the spectral norm, count as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceSpec {
    gamma: Vec<f64>,
}

impl CovarianceSpec {
    pub fn new(gamma: Vec<f64>) -> Result<Self, GaussError> {
        if gamma.len() < 3 {
            return Err(GaussError::InvalidSpec(format!(
                "need at least 3 couplings, got {}",
                gamma.len()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.abs() <= 1.0)) {
            return Err(GaussError::InvalidSpec(format!("|γ| = {g} exceeds 1")));
        }
        Ok(CovarianceSpec { gamma })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn letters(&self) -> usize {
        self.gamma.len()
    }
}

/// Limit couplings for face-count fractions `f`:
/// `γ_k = −f_{k−1}f_kf_{k+1} / (σ_{k−1}σ_k)` with `σ_k² = f_kf_{k+1}(f_k+f_{k+1})`.
pub fn structured_gamma(f: &[f64]) -> Result<CovarianceSpec, GaussError> {
    let l = f.len();
    if l < 3 {
        return Err(GaussError::InvalidFraction(format!("need ℓ ≥ 3, got {l}")));
    }
    if let Some(x) = f.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(GaussError::InvalidFraction(format!("{x} not in (0,1]")));
    }
    let sig = |k: usize| {
        let (a, b) = (f[k], f[(k + 1) % l]);
        (a * b * (a + b)).sqrt()
    };
    let gamma = (0..l)
        .map(|k| {
            let km = (k + l - 1) % l;
            -f[km] * f[k] * f[(k + 1) % l] / (sig(km) * sig(k))
        })
        .collect();
    CovarianceSpec::new(gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    matrix: DMatrix<f64>,
}

impl SigmaMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }
}

impl Serialize for SigmaMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

pub fn build_sigma(spec: &CovarianceSpec) -> SigmaMatrix {
    let l = spec.letters();
    let mut m = DMatrix::identity(l, l);
    for (k, &g) in spec.gamma.iter().enumerate() {
        let km = (k + l - 1) % l;
        m[(km, k)] = g;
        m[(k, km)] = g;
    }
    SigmaMatrix { matrix: m }
}

/// Weighted independence polynomial of a path: sum over sets of pairwise
/// non-adjacent indices of the product of their weights.
fn path_poly<T: Clone + Zero + One>(w: &[T]) -> T {
    let (mut a, mut b) = (T::one(), T::one()); // lengths -1 and 0
    for x in w {
        let c = b.clone() + x.clone() * a;
        a = b;
        b = c;
    }
    b
}

/// Same over the cycle, where the first and last index are adjacent.
fn cycle_poly<T: Clone + Zero + One>(w: &[T]) -> T {
    let l = w.len();
    if l <= 2 {
        return path_poly(w);
    }
    path_poly(&w[1..]) + w[0].clone() * path_poly(&w[2..l - 1])
}

fn expansion<T>(gamma: &[T]) -> T
where
    T: Clone + Zero + One + std::ops::Neg<Output = T>,
{
    let l = gamma.len();
    let weights: Vec<T> = gamma.iter().map(|g| -(g.clone() * g.clone())).collect();
    let prod = gamma.iter().fold(T::one(), |acc, g| acc * g.clone());
    let two_prod = prod.clone() + prod;
    let sign = if l % 2 == 1 { two_prod } else { -two_prod };
    cycle_poly(&weights) + sign
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeterminantReport {
    pub value_expansion: f64,
    pub value_lu: f64,
    pub agreement: bool,
}

/// `det Σ` from the closed expansion over cyclically non-consecutive index
/// sets and from an LU factorization.
pub fn determinant(spec: &CovarianceSpec) -> DeterminantReport {
    let value_expansion = expansion(&spec.gamma);
    let value_lu = build_sigma(spec).matrix.clone().determinant();
    DeterminantReport {
        value_expansion,
        value_lu,
        agreement: (value_expansion - value_lu).abs() <= 1e-10 * value_lu.abs().max(1.0),
    }
}

/// The expansion evaluated in rational arithmetic.
pub fn determinant_exact(gamma: &[BigRational]) -> BigRational {
    expansion(gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullVectorReport {
    pub eigenvalue: f64,
    pub zero_eigenvalue_residual: f64,
    pub vector: Vec<f64>,
    #[serde(rename = "P_sequence")]
    pub p_sequence: Vec<f64>,
    /// `P_ℓ` recomputed as the cycle sum `1 + Σ_m (−1)^m Σ ∏γ²`.
    pub p_ell_cycle: f64,
    pub strictly_positive: bool,
}

/// `P_0 = 1`, `P_1 = 1 − γ_1²`, `P_k = P_{k−1} − γ_k²P_{k−2}` for `k < ℓ`,
/// and `P_ℓ = 2(−1)^ℓ ∏γ_k`.
pub fn p_sequence(gamma: &[f64]) -> Vec<f64> {
    let l = gamma.len();
    let mut p = vec![1.0, 1.0 - gamma[0] * gamma[0]];
    for k in 2..l {
        p.push(p[k - 1] - gamma[k - 1] * gamma[k - 1] * p[k - 2]);
    }
    let prod: f64 = gamma.iter().product();
    p.push(if l % 2 == 0 { 2.0 * prod } else { -2.0 * prod });
    p
}

/// Eigenvector of the eigenvalue nearest zero, unit norm, first entry ≥ 0.
pub fn null_vector(spec: &CovarianceSpec) -> NullVectorReport {
    let sigma = build_sigma(spec).matrix;
    let eig = SymmetricEigen::new(sigma.clone());
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
    v /= v.norm();
    if v[0] < 0.0 {
        v = -v;
    }
    let residual = (&sigma * &v).norm();
    let weights: Vec<f64> = spec.gamma.iter().map(|g| -g * g).collect();
    NullVectorReport {
        eigenvalue: lambda,
        zero_eigenvalue_residual: residual,
        strictly_positive: v.iter().all(|&x| x > 1e-9),
        vector: v.iter().copied().collect(),
        p_sequence: p_sequence(&spec.gamma),
        p_ell_cycle: cycle_poly(&weights),
    }
}

/// Draws `X = U√Λ Z` from the eigendecomposition `Σ = UΛUᵀ`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(spec: &CovarianceSpec) -> Result<Self, GaussError> {
        let eig = SymmetricEigen::new(build_sigma(spec).matrix);
        let norm = eig.eigenvalues.amax();
        let min = eig.eigenvalues.min();
        if min < -ZERO_EIGEN_TOL * norm.max(1.0) {
            return Err(GaussError::NotPSD(min));
        }
        let roots = eig.eigenvalues.map(|x| {
            if x.abs() <= ZERO_EIGEN_TOL * norm {
                0.0
            } else {
                x.max(0.0).sqrt()
            }
        });
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(GaussianSampler { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut DVector<f64>, x: &mut DVector<f64>) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        self.factor.mul_to(z, x);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = DVector::zeros(self.dim());
        let mut x = DVector::zeros(self.dim());
        self.sample_into(rng, &mut z, &mut x);
        x.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthantEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    pub threshold: f64,
    pub seed: u64,
    pub workers: usize,
    pub rng: &'static str,
}

/// Monte Carlo estimate of `P(X_j > threshold for all j)`.
/// Worker `w` draws from a generator seeded with `seed + w`.
pub fn orthant_probability(
    spec: &CovarianceSpec,
    threshold: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<OrthantEstimate, GaussError> {
    let sampler = GaussianSampler::new(spec)?;
    let workers = workers.max(1);
    let count = |w: usize| {
        let n = samples / workers as u64 + u64::from((w as u64) < samples % workers as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(w as u64));
        let mut z = DVector::zeros(sampler.dim());
        let mut x = DVector::zeros(sampler.dim());
        let mut hits = 0u64;
        for _ in 0..n {
            sampler.sample_into(&mut rng, &mut z, &mut x);
            if x.iter().all(|&v| v > threshold) {
                hits += 1;
            }
        }
        hits
    };
    let hits: u64 = if workers == 1 {
        count(0)
    } else {
        std::thread::scope(|s| {
            let hs: Vec<_> = (0..workers).map(|w| s.spawn(move || count(w))).collect();
            hs.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };
    let estimate = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
    Ok(OrthantEstimate {
        estimate,
        stderr: (estimate * (1.0 - estimate) / samples.max(1) as f64).sqrt(),
        hits,
        samples,
        threshold,
        seed,
        workers,
        rng: crate::RNG_NAME,
    })
}

/// `E[(αᵀX)^s]` for `X ~ N(0, Σ)`: zero for odd `s`, `(αᵀΣα)^{s/2}(s−1)!!` for even.
pub fn gaussian_moment(alpha: &[f64], spec: &CovarianceSpec, s: u32) -> Result<f64, GaussError> {
    if alpha.len() != spec.letters() {
        return Err(GaussError::InvalidSpec(format!(
            "direction has {} entries for a {}-dimensional matrix",
            alpha.len(),
            spec.letters()
        )));
    }
    let a = DVector::from_column_slice(alpha);
    let var = (build_sigma(spec).matrix * &a).dot(&a);
    if var.abs() <= 1e-12 * a.norm_squared().max(f64::MIN_POSITIVE) {
        return Err(GaussError::DegenerateDirection);
    }
    if s % 2 == 1 {
        return Ok(0.0);
    }
    let double_fact: f64 = (1..s).step_by(2).map(|k| k as f64).product();
    Ok(var.powi((s / 2) as i32) * double_fact)
}
