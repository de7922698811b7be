//! Exact counts of intransitive words for three letters.
//!
//!     cargo run --release --example count_words -- 7

use dicelab::enumeration::{rate_report, SearchConfig};

fn main() {
    let max: u32 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let faces: Vec<u32> = (3..=max).collect();
    println!("{:>3} {:>12} {:>16} {:>12} {:>8} {:>9}", "n", "intrans", "total", "ratio", "delta", "seconds");
    for r in rate_report(3, &faces, SearchConfig::with_workers(workers)) {
        match r {
            Ok(r) => println!(
                "{:>3} {:>12} {:>16} {:>12.6e} {:>8} {:>9.3}",
                r.faces,
                r.intransitive_count,
                r.total_count,
                r.ratio,
                r.delta_l.map_or("-".into(), |d| format!("{d:.4}")),
                r.elapsed_seconds
            ),
            Err(e) => println!("error: {e}"),
        }
    }
}
