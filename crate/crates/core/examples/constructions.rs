//! Word operations that preserve intransitivity: duals, concatenation with
//! neutral words, adding a letter and growing the number of faces.
//!
//!     cargo run --example constructions

use dicelab::words::{
    concat, dual_word, extend_faces, extend_letter, is_intransitive, is_neutral, neutral_block, Word,
};

fn show(label: &str, w: &Word) {
    println!("{label:<22} {:<40} intransitive={}", w.to_rle_string().unwrap(), is_intransitive(w));
}

fn main() {
    let w = Word::parse("ABBCCACAB", Some(3)).unwrap();
    show("start", &w);
    show("dual (cycle reversed)", &dual_word(&w));

    let block = neutral_block(3);
    println!("{:<22} {:<40} neutral={}", "neutral block", block.to_rle_string().unwrap(), is_neutral(&block).unwrap());
    show("block + word", &concat(&block, &w).unwrap());

    let four = extend_letter(&w).unwrap();
    show("one more letter", &four);
    show("more faces", &extend_faces(&w).unwrap());
    show("both", &extend_faces(&four).unwrap());
}
