//! Victory counts and intransitivity for a word or a set of dice.
//!
//!     cargo run --example check_word -- ABBCCACAB
//!     cargo run --example check_word -- "18,13,11,7,6,2" "17,15,10,8,4,3" "16,14,12,9,5,1"

use dicelab::words::{dice_from_word, is_intransitive, victories, word_from_dice, DiceCollection, Word};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let word = match args.as_slice() {
        [] => Word::parse("ABBCCACAB", Some(3)).unwrap(),
        [w] => Word::parse(w, None).expect("bad word"),
        dice => {
            let faces = dice
                .iter()
                .map(|d| d.split(',').map(|x| x.trim().parse().expect("bad face")).collect())
                .collect();
            word_from_dice(&DiceCollection::new(faces).expect("faces must be distinct"))
        }
    };
    let l = word.letters();
    let v = victories(&word);
    let m = word.multiplicities();
    println!("word  {}", word.to_rle_string().unwrap());
    for k in 0..l {
        let j = (k + 1) % l;
        println!("N[{}>{}] = {} of {}", k + 1, j + 1, v.cyclic(k), &m[k] * &m[j]);
    }
    println!("intransitive: {}", is_intransitive(&word));
    if let Ok(d) = dice_from_word(&word) {
        for (k, die) in d.dice().iter().enumerate() {
            println!("die {}: {die:?}", k + 1);
        }
    }
}
