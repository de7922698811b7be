//! Monte Carlo probability that independently drawn random dice form an
//! intransitive cycle, as the number of faces grows.
//!
//!     cargo run --release --example simulate -- 3 200000

use dicelab::laws::{Law, ModelConfig};
use dicelab::montecarlo::estimate_intransitivity;

fn main() {
    let mut args = std::env::args().skip(1);
    let letters: usize = args.next().map_or(3, |a| a.parse().unwrap());
    let trials: u64 = args.next().map_or(100_000, |a| a.parse().unwrap());
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("{:>5} {:>12} {:>12}", "n", "p_hat", "ci95");
    for n in [3, 5, 10, 20, 50] {
        let cfg = ModelConfig::homogeneous(Law::Uniform, letters, n).unwrap();
        let r = estimate_intransitivity(&cfg, trials, n, workers).unwrap();
        println!("{n:>5} {:>12.3e} {:>12.1e}", r.p_hat, r.ci95);
    }
}
