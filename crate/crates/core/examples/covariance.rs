//! The cyclic covariance matrix of the limiting Gaussian vector: its
//! determinant two ways, and the positive null vector in the degenerate case.
//!
//!     cargo run --example covariance -- 0.2 0.5 0.9 1

use dicelab::gaussian::{build_sigma, determinant, null_vector, structured_gamma};

fn main() {
    let f: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let f = if f.is_empty() { vec![0.3, 0.6, 1.0] } else { f };
    let spec = structured_gamma(&f).unwrap();
    println!("gamma = {:?}", spec.gamma());
    for row in build_sigma(&spec).rows() {
        println!("    {}", row.iter().map(|x| format!("{x:>8.4}")).collect::<String>());
    }
    let d = determinant(&spec);
    println!("det: expansion {:.3e}, LU {:.3e}", d.value_expansion, d.value_lu);
    let nv = null_vector(&spec);
    println!("null vector {:?} (eigenvalue {:.2e})", nv.vector, nv.eigenvalue);
    println!("P sequence {:?}", nv.p_sequence);
}
