//! Simulation of random dice collections.
//!
//! Every die is drawn as a sorted list of distinct values with counts, so
//! victory and tie counts between consecutive dice come from one merge.
//! Finite laws are drawn as multinomial count vectors, which costs one
//! binomial draw per support point however many faces the die has.
//!
//! Randomness comes from ChaCha8 with the seed as key and the worker index
//! as stream number; trials are split evenly across workers.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use serde::Serialize;
use thiserror::Error;

use crate::gaussian::{build_sigma, CovarianceSpec, SigmaMatrix};
use crate::laws::{model_moments, Law, LawError, ModelConfig};
use crate::RNG_NAME;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("law cannot be sampled: {0}")]
    UnsamplableLaw(String),
    #[error("victory count {0} has zero variance")]
    DegenerateVariance(usize),
    #[error("word of {0} letters is too large to shuffle")]
    TooLarge(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Law(#[from] LawError),
}

/// Longest word `estimate_uniform_word_ratio` will materialize.
pub const SHUFFLE_LIMIT: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialTally {
    /// `N_k`: face pairs where die k beats die k+1.
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    /// `E_k`: face pairs where die k and die k+1 tie.
    #[serde(rename = "E")]
    pub e: Vec<u64>,
    pub intransitive: bool,
}

enum DieSampler {
    Finite { support: Vec<f64>, weights: Vec<f64> },
    Geometric(Geometric),
    Uniform,
}

impl DieSampler {
    fn new(law: &Law) -> Result<Self, SimError> {
        match law {
            Law::Finite(f) => Ok(DieSampler::Finite {
                support: f.support().to_vec(),
                weights: f.weights_f64(),
            }),
            Law::Geometric(p) => {
                let p = num_traits::ToPrimitive::to_f64(p).unwrap_or(f64::NAN);
                Geometric::new(p)
                    .map(DieSampler::Geometric)
                    .map_err(|e| SimError::UnsamplableLaw(format!("geometric {p}: {e}")))
            }
            Law::Uniform => Ok(DieSampler::Uniform),
        }
    }

    /// Fills `out` with (value, count) sorted by value.
    fn draw<R: Rng>(&self, n: u64, rng: &mut R, scratch: &mut Vec<f64>, out: &mut Vec<(f64, u64)>) {
        out.clear();
        match self {
            DieSampler::Finite { support, weights } => {
                let mut left = n;
                let mut mass = 1.0;
                for (i, (&v, &w)) in support.iter().zip(weights).enumerate() {
                    if left == 0 {
                        break;
                    }
                    let c = if i + 1 == support.len() || w >= mass {
                        left
                    } else {
                        Binomial::new(left, (w / mass).clamp(0.0, 1.0)).unwrap().sample(rng)
                    };
                    if c > 0 {
                        out.push((v, c));
                    }
                    left -= c;
                    mass -= w;
                }
            }
            DieSampler::Geometric(g) => {
                scratch.clear();
                scratch.extend((0..n).map(|_| g.sample(rng) as f64));
                compress(scratch, out);
            }
            DieSampler::Uniform => {
                scratch.clear();
                scratch.extend((0..n).map(|_| open_unit(rng)));
                compress(scratch, out);
            }
        }
    }
}

/// Uniform on the open interval (0,1): 53-bit grid shifted by half a step.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    const STEP: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * STEP
}

fn compress(values: &mut [f64], out: &mut Vec<(f64, u64)>) {
    values.sort_unstable_by(f64::total_cmp);
    for &v in values.iter() {
        match out.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
}

/// `(N, E)` for sorted dice `a` and `b`: pairs with `a > b` and `a = b`.
fn versus(a: &[(f64, u64)], b: &[(f64, u64)]) -> (u64, u64) {
    let mut below = 0u64; // faces of b strictly below the current a value
    let mut j = 0;
    let mut wins = 0u64;
    let mut ties = 0u64;
    for &(x, cx) in a {
        while j < b.len() && b[j].0 < x {
            below += b[j].1;
            j += 1;
        }
        wins += cx * below;
        if j < b.len() && b[j].0 == x {
            ties += cx * b[j].1;
        }
    }
    (wins, ties)
}

struct Model {
    sizes: Vec<u64>,
    samplers: Vec<DieSampler>,
    dice: Vec<Vec<(f64, u64)>>,
    scratch: Vec<f64>,
}

impl Model {
    fn new(config: &ModelConfig) -> Result<Self, SimError> {
        let l = config.letters();
        if l < 2 || config.sizes.len() != l {
            return Err(SimError::InvalidArgument("need at least two dice".into()));
        }
        Ok(Model {
            sizes: config.sizes.clone(),
            samplers: config.laws.iter().map(DieSampler::new).collect::<Result<_, _>>()?,
            dice: vec![Vec::new(); l],
            scratch: Vec::new(),
        })
    }

    fn trial<R: Rng>(&mut self, rng: &mut R, n: &mut [u64], e: &mut [u64]) -> bool {
        let l = self.sizes.len();
        for k in 0..l {
            self.samplers[k].draw(self.sizes[k], rng, &mut self.scratch, &mut self.dice[k]);
        }
        let mut intransitive = true;
        for k in 0..l {
            let (w, t) = versus(&self.dice[k], &self.dice[(k + 1) % l]);
            n[k] = w;
            e[k] = t;
            intransitive &= 2 * w > self.sizes[k] * self.sizes[(k + 1) % l] - t;
        }
        intransitive
    }
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

fn share(trials: u64, workers: usize, w: usize) -> u64 {
    trials / workers as u64 + u64::from((w as u64) < trials % workers as u64)
}

/// Runs `job(worker, trials_for_worker)` on every worker and collects results
/// in worker order.
fn fan_out<T, F>(trials: u64, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    if workers == 1 {
        return vec![job(0, trials)];
    }
    std::thread::scope(|s| {
        let hs: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                s.spawn(move || job(w, share(trials, workers, w)))
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

/// One collection drawn from stream 0 of `seed`.
pub fn sample_tally(config: &ModelConfig, seed: u64) -> Result<TrialTally, SimError> {
    let mut model = Model::new(config)?;
    let l = config.letters();
    let mut n = vec![0; l];
    let mut e = vec![0; l];
    let intransitive = model.trial(&mut worker_rng(seed, 0), &mut n, &mut e);
    Ok(TrialTally { n, e, intransitive })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci95: f64,
    pub seed: u64,
    pub workers: usize,
    pub elapsed_seconds: f64,
    pub model: String,
    pub rng: &'static str,
}

impl SimulationReport {
    fn new(hits: u64, trials: u64, seed: u64, workers: usize, start: Instant, model: String) -> Self {
        let p_hat = hits as f64 / trials as f64;
        SimulationReport {
            trials,
            hits,
            p_hat,
            ci95: 1.96 * (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            seed,
            workers,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            model,
            rng: RNG_NAME,
        }
    }
}

fn describe(config: &ModelConfig) -> String {
    let laws: Vec<String> = config.laws.iter().map(|l| l.to_string()).collect();
    format!("laws=[{}] faces={:?}", laws.join("; "), config.sizes)
}

/// Fraction of trials where every die beats the next, ties counting half.
pub fn estimate_intransitivity(
    config: &ModelConfig,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationReport, SimError> {
    if trials == 0 {
        return Err(SimError::InvalidArgument("trials must be ≥ 1".into()));
    }
    let workers = workers.max(1);
    Model::new(config)?;
    let start = Instant::now();
    let l = config.letters();
    let hits: u64 = fan_out(trials, workers, |w, t| {
        let mut model = Model::new(config).unwrap();
        let mut rng = worker_rng(seed, w);
        let mut n = vec![0; l];
        let mut e = vec![0; l];
        (0..t).filter(|_| model.trial(&mut rng, &mut n, &mut e)).count() as u64
    })
    .into_iter()
    .sum();
    Ok(SimulationReport::new(hits, trials, seed, workers, start, describe(config)))
}

/// Same estimate for uniform words: shuffle `ℓ·n` letters and scan once.
pub fn estimate_uniform_word_ratio(
    letters: usize,
    faces: u64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationReport, SimError> {
    if letters < 2 || faces == 0 || trials == 0 {
        return Err(SimError::InvalidArgument(
            "need ℓ ≥ 2, n ≥ 1 and trials ≥ 1".into(),
        ));
    }
    let len = letters as u64 * faces;
    if len > SHUFFLE_LIMIT || letters > u8::MAX as usize + 1 {
        return Err(SimError::TooLarge(len));
    }
    let workers = workers.max(1);
    let start = Instant::now();
    let n2 = faces * faces;
    let hits: u64 = fan_out(trials, workers, |w, t| {
        let mut rng = worker_rng(seed, w);
        let mut word: Vec<u8> = (0..letters)
            .flat_map(|k| std::iter::repeat_n(k as u8, faces as usize))
            .collect();
        let mut seen = vec![0u64; letters];
        let mut wins = vec![0u64; letters];
        let mut hits = 0;
        for _ in 0..t {
            word.shuffle(&mut rng);
            seen.fill(0);
            wins.fill(0);
            for &x in &word {
                let x = x as usize;
                let prev = if x == 0 { letters - 1 } else { x - 1 };
                wins[prev] += seen[prev];
                seen[x] += 1;
            }
            if wins.iter().all(|&v| 2 * v > n2) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    Ok(SimulationReport::new(
        hits,
        trials,
        seed,
        workers,
        start,
        format!("uniform word letters={letters} faces={faces}"),
    ))
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: Sum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub empirical_mean: Vec<f64>,
    pub empirical_var: Vec<f64>,
    pub empirical_corr: Vec<Vec<f64>>,
    pub theoretical: SigmaMatrix,
    pub max_abs_deviation: f64,
    pub rng: &'static str,
}

/// Empirical mean and correlation of `Ñ_k = (N_k − E N_k)/√Var N_k`, with the
/// exact finite-size mean and variance, against the matrix built from `γ_k`.
pub fn clt_diagnostics(
    config: &ModelConfig,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<CltReport, SimError> {
    if trials < 2 {
        return Err(SimError::InvalidArgument("need at least two trials".into()));
    }
    let moments = model_moments(config)?;
    if let Some(k) = moments.var_n.iter().position(|&v| !(v > 0.0)) {
        return Err(SimError::DegenerateVariance(k));
    }
    let gamma: Vec<f64> = moments
        .gamma
        .iter()
        .enumerate()
        .map(|(k, g)| g.ok_or(SimError::DegenerateVariance(k)))
        .collect::<Result<_, _>>()?;
    let theoretical = build_sigma(
        &CovarianceSpec::new(gamma).map_err(|e| SimError::InvalidArgument(e.to_string()))?,
    );
    let workers = workers.max(1);
    Model::new(config)?;
    let l = config.letters();
    let mean = &moments.mean_n;
    let sd: Vec<f64> = moments.var_n.iter().map(|v| v.sqrt()).collect();

    let parts = fan_out(trials, workers, |w, t| {
        let mut model = Model::new(config).unwrap();
        let mut rng = worker_rng(seed, w);
        let mut n = vec![0; l];
        let mut e = vec![0; l];
        let mut x = vec![0.0; l];
        let mut s1 = vec![Sum::default(); l];
        let mut s2 = vec![Sum::default(); l * l];
        for _ in 0..t {
            model.trial(&mut rng, &mut n, &mut e);
            for k in 0..l {
                x[k] = (n[k] as f64 - mean[k]) / sd[k];
                s1[k].add(x[k]);
            }
            for i in 0..l {
                for j in i..l {
                    s2[i * l + j].add(x[i] * x[j]);
                }
            }
        }
        (s1, s2)
    });
    let mut s1 = vec![Sum::default(); l];
    let mut s2 = vec![Sum::default(); l * l];
    for (a, b) in parts {
        s1.iter_mut().zip(a).for_each(|(x, y)| x.merge(y));
        s2.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
    }
    let t = trials as f64;
    let empirical_mean: Vec<f64> = s1.iter().map(|s| s.value() / t).collect();
    let cov = |i: usize, j: usize| {
        let (i, j) = (i.min(j), i.max(j));
        (s2[i * l + j].value() - t * empirical_mean[i] * empirical_mean[j]) / (t - 1.0)
    };
    let empirical_var: Vec<f64> = (0..l).map(|k| cov(k, k)).collect();
    let empirical_corr: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        cov(i, j) / (empirical_var[i] * empirical_var[j]).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let mut max_abs_deviation: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            max_abs_deviation = max_abs_deviation.max((empirical_corr[i][j] - theoretical.get(i, j)).abs());
        }
    }
    Ok(CltReport {
        trials,
        seed,
        workers,
        empirical_mean,
        empirical_var,
        empirical_corr,
        theoretical,
        max_abs_deviation,
        rng: RNG_NAME,
    })
}
