//! The explicit family of highly intransitive words. Victory margins grow
//! like n^{7/12} above n²/2 and are computed exactly on the run-length form.
//!
//!     cargo run --example special_word -- 4 3

use dicelab::words::{is_intransitive, q_membership, special_word, victories};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let letters = args.next().unwrap_or(3) as usize;
    let kmax = args.next().unwrap_or(3);
    for k in 1..=kmax {
        let w = special_word(letters, k).unwrap();
        let n = w.uniform_multiplicity().unwrap();
        let v = victories(&w);
        let margin = (0..letters).map(|i| (v.cyclic(i) << 1u32) - &n * &n).min().unwrap();
        println!("k={k} runs={} faces={n}", w.runs().len());
        println!("    min 2N-n² = {margin}");
        println!("    intransitive={} almost-intransitive={}", is_intransitive(&w), q_membership(&w).unwrap());
    }
}
