//! Probability that every coordinate of the limiting Gaussian vector is
//! positive, for a given set of neighbour correlations.
//!
//!     cargo run --release --example orthant -- -0.4737 -0.4737 -0.4737

use dicelab::gaussian::{orthant_probability, CovarianceSpec};

fn main() {
    let gamma: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let gamma = if gamma.is_empty() { vec![-9.0 / 19.0; 3] } else { gamma };
    let spec = CovarianceSpec::new(gamma).unwrap();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let r = orthant_probability(&spec, 0.0, 1_000_000, 1, workers).unwrap();
    println!("P(all > 0) ≈ {:.6} ± {:.6} ({} samples)", r.estimate, r.stderr, r.samples);
}
