//! Standardised victory counts against the Gaussian limit: empirical
//! correlations next to the theoretical matrix.
//!
//!     cargo run --release --example clt -- 400 20000

use dicelab::laws::{Law, ModelConfig};
use dicelab::montecarlo::clt_diagnostics;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map_or(200, |a| a.parse().unwrap());
    let trials: u64 = args.next().map_or(10_000, |a| a.parse().unwrap());
    let cfg = ModelConfig::homogeneous(Law::Uniform, 3, n).unwrap();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let r = clt_diagnostics(&cfg, trials, 3, workers).unwrap();
    println!("empirical correlation");
    for row in &r.empirical_corr {
        println!("    {}", row.iter().map(|x| format!("{x:>8.3}")).collect::<String>());
    }
    println!("theoretical");
    for row in r.theoretical.rows() {
        println!("    {}", row.iter().map(|x| format!("{x:>8.3}")).collect::<String>());
    }
    println!("variances {:?}, max deviation {:.3}", r.empirical_var, r.max_abs_deviation);
}
