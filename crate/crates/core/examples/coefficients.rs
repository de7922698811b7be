//! Exact win probabilities for random dice built from face laws, and the
//! first and second moments of the victory counts.
//!
//!     cargo run --example coefficients -- "finite:0=1/3,4=2/3" "finite:3=1" "finite:2=2/3,6=1/3" "finite:1=1/2,5=1/2"

use dicelab::laws::{blow_up_laws, check_blowup_constraint, coefficient_set, model_moments, Law, ModelConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let laws: Vec<Law> = if args.is_empty() {
        let dice: Vec<Vec<f64>> = [[18., 13., 11., 7., 6., 2.], [17., 15., 10., 8., 4., 3.], [16., 14., 12., 9., 5., 1.]]
            .iter()
            .map(|d| d.to_vec())
            .collect();
        let c = check_blowup_constraint(&dice).unwrap();
        println!("blow-up of a tied triple; q+r at p=1/2: {:?}", c.q_plus_r_values);
        blow_up_laws(&dice).unwrap()
    } else {
        args.iter().map(|a| a.parse().expect("bad law")).collect()
    };
    let c = coefficient_set(&laws).unwrap();
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "k", "p", "q", "r", "s");
    for k in 0..c.len() {
        println!("{:>3} {:>10} {:>10} {:>10} {:>10}", k + 1, c.p[k], c.q[k], c.r[k], c.s[k]);
    }
    let m = model_moments(&ModelConfig::from_sizes(&vec![100; laws.len()], laws).unwrap()).unwrap();
    println!("n = 100 faces per die");
    for k in 0..m.mean_n.len() {
        let gamma = m.gamma[k].map_or("-".into(), |g| format!("{g:.6}"));
        println!("    E N = {:.1}, Var N = {:.1}, gamma = {gamma}", m.mean_n[k], m.var_n[k]);
    }
}
