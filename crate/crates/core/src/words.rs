//! Dice collections as words over an ℓ-letter alphabet.
//!
//! A no-tie collection of ℓ dice whose faces are exactly `1..=Σn_i` is the
//! same thing as a word in which letter `k` appears `n_k` times: read the
//! faces from the largest value down and write the label of the die owning
//! each value. Die `i` beats die `j` on a face pair exactly when the `i`
//! occurrence sits to the left of the `j` occurrence, so all pairwise
//! comparisons become left-of counts on the word.
//!
//! Words are stored run-length encoded with arbitrary-precision run lengths,
//! so the astronomically long words used for lower bounds never have to be
//! materialized. Letters are 0-based indices (`A` = 0).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

/// Largest word length that will be materialized letter by letter.
pub const DENSE_LIMIT: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("duplicate face value {0}")]
    DuplicateFace(u64),
    #[error("letter multiplicities differ: {0:?}")]
    UnequalMultiplicities(Vec<String>),
    #[error("alphabet mismatch: {0} letters vs {1} letters")]
    AlphabetMismatch(usize, usize),
    #[error("word too large to materialize ({0} letters)")]
    TooLarge(String),
    #[error("letter index {letter} out of range for {letters} letters")]
    LetterOutOfRange { letter: usize, letters: usize },
    #[error("invalid word: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A maximal run of one letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub letter: usize,
    pub len: BigUint,
}

/// A word in maximal-run normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    letters: usize,
    runs: Vec<Run>,
}

impl Word {
    /// Empty word over `letters` letters.
    pub fn empty(letters: usize) -> Self {
        Word {
            letters,
            runs: Vec::new(),
        }
    }

    /// Builds a word from `(letter, length)` pairs, merging adjacent equal
    /// letters and dropping zero-length runs.
    pub fn from_runs<I>(letters: usize, runs: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = (usize, BigUint)>,
    {
        let mut w = Word::empty(letters);
        for (letter, len) in runs {
            w.push_run(letter, len)?;
        }
        Ok(w)
    }

    /// Builds a word from a letter sequence.
    pub fn from_letters(letters: usize, seq: &[usize]) -> Result<Self, WordError> {
        Word::from_runs(letters, seq.iter().map(|&l| (l, BigUint::one())))
    }

    fn push_run(&mut self, letter: usize, len: BigUint) -> Result<(), WordError> {
        if letter >= self.letters {
            return Err(WordError::LetterOutOfRange {
                letter,
                letters: self.letters,
            });
        }
        if len.is_zero() {
            return Ok(());
        }
        match self.runs.last_mut() {
            Some(last) if last.letter == letter => last.len += len,
            _ => self.runs.push(Run { letter, len }),
        }
        Ok(())
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Per-letter totals n_1..n_ℓ.
    pub fn multiplicities(&self) -> Vec<BigUint> {
        let mut m = vec![BigUint::zero(); self.letters];
        for r in &self.runs {
            m[r.letter] += &r.len;
        }
        m
    }

    pub fn len(&self) -> BigUint {
        self.runs.iter().map(|r| &r.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// The common multiplicity, or `UnequalMultiplicities`.
    pub fn uniform_multiplicity(&self) -> Result<BigUint, WordError> {
        let m = self.multiplicities();
        if m.windows(2).all(|w| w[0] == w[1]) {
            Ok(m.into_iter().next().unwrap_or_default())
        } else {
            Err(WordError::UnequalMultiplicities(
                m.iter().map(|x| x.to_string()).collect(),
            ))
        }
    }

    /// Letter sequence, refusing words longer than [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<Vec<usize>, WordError> {
        let total = self.len();
        match total.to_u64() {
            Some(t) if t <= DENSE_LIMIT => {
                let mut out = Vec::with_capacity(t as usize);
                for r in &self.runs {
                    let n = r.len.to_u64().unwrap_or(0);
                    out.extend(std::iter::repeat_n(r.letter, n as usize));
                }
                Ok(out)
            }
            _ => Err(WordError::TooLarge(total.to_string())),
        }
    }

    /// Uppercase letter string (`ℓ ≤ 26`, dense words only).
    pub fn to_dense_string(&self) -> Result<String, WordError> {
        check_text_alphabet(self.letters)?;
        Ok(self
            .to_dense()?
            .into_iter()
            .map(letter_char)
            .collect::<String>())
    }

    /// Whitespace-separated `LETTER^COUNT` tokens.
    pub fn to_rle_string(&self) -> Result<String, WordError> {
        check_text_alphabet(self.letters)?;
        Ok(self
            .runs
            .iter()
            .map(|r| format!("{}^{}", letter_char(r.letter), r.len))
            .collect::<Vec<_>>()
            .join(" "))
    }

    /// Parses a dense (`ABCCA`) or RLE (`C^5 A^3 ...`) word. The alphabet
    /// size is the largest letter present, unless `letters` is given.
    pub fn parse(text: &str, letters: Option<usize>) -> Result<Self, WordError> {
        let text = text.trim();
        let mut runs = Vec::new();
        if text.contains('^') {
            for tok in text.split_whitespace() {
                let (l, c) = tok
                    .split_once('^')
                    .ok_or_else(|| WordError::Parse(format!("bad token `{tok}`")))?;
                let mut chars = l.chars();
                let letter = match (chars.next(), chars.next()) {
                    (Some(ch), None) => char_letter(ch)?,
                    _ => return Err(WordError::Parse(format!("bad letter in `{tok}`"))),
                };
                let count = BigUint::from_str(c)
                    .map_err(|_| WordError::Parse(format!("bad count in `{tok}`")))?;
                runs.push((letter, count));
            }
        } else {
            for ch in text.chars().filter(|c| !c.is_whitespace()) {
                runs.push((char_letter(ch)?, BigUint::one()));
            }
        }
        let needed = runs.iter().map(|(l, _)| l + 1).max().unwrap_or(1);
        let letters = match letters {
            Some(l) if l < needed => {
                return Err(WordError::LetterOutOfRange {
                    letter: needed - 1,
                    letters: l,
                })
            }
            Some(l) => l,
            None => needed,
        };
        Word::from_runs(letters, runs)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.len().to_u64() {
            Some(n) if n <= 4096 => self.to_dense_string(),
            _ => self.to_rle_string(),
        };
        match s {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "<word over {} letters, {} runs>", self.letters, self.runs.len()),
        }
    }
}

fn check_text_alphabet(letters: usize) -> Result<(), WordError> {
    if letters > 26 {
        return Err(WordError::InvalidArgument(format!(
            "text format supports at most 26 letters, got {letters}"
        )));
    }
    Ok(())
}

fn letter_char(l: usize) -> char {
    (b'A' + l as u8) as char
}

fn char_letter(c: char) -> Result<usize, WordError> {
    if c.is_ascii_uppercase() {
        Ok((c as u8 - b'A') as usize)
    } else {
        Err(WordError::Parse(format!("unexpected character `{c}`")))
    }
}

/// ℓ dice with strictly increasing integer faces, no value shared by two dice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiceCollection {
    dice: Vec<Vec<u64>>,
}

impl DiceCollection {
    /// Faces may be given in any order; they are stored increasing.
    pub fn new(mut dice: Vec<Vec<u64>>) -> Result<Self, WordError> {
        if dice.is_empty() || dice.iter().any(|d| d.is_empty()) {
            return Err(WordError::InvalidArgument("empty die".into()));
        }
        let mut all: Vec<u64> = Vec::new();
        for d in &mut dice {
            d.sort_unstable();
            all.extend_from_slice(d);
        }
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(WordError::DuplicateFace(w[0]));
        }
        Ok(DiceCollection { dice })
    }

    pub fn dice(&self) -> &[Vec<u64>] {
        &self.dice
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.dice.iter().map(Vec::len).collect()
    }

    /// True when the faces are exactly `1..=Σn_i`.
    pub fn is_canonical(&self) -> bool {
        let mut all: Vec<u64> = self.dice.iter().flatten().copied().collect();
        all.sort_unstable();
        all.iter().enumerate().all(|(i, &v)| v == i as u64 + 1)
    }

    /// Parses a JSON array of integer arrays.
    pub fn from_json(text: &str) -> Result<Self, WordError> {
        let dice: Vec<Vec<u64>> =
            serde_json::from_str(text).map_err(|e| WordError::Parse(e.to_string()))?;
        DiceCollection::new(dice)
    }
}

/// Reads the faces from largest to smallest, writing the owning die's letter.
pub fn word_from_dice(collection: &DiceCollection) -> Word {
    let mut tagged: Vec<(u64, usize)> = collection
        .dice
        .iter()
        .enumerate()
        .flat_map(|(k, d)| d.iter().map(move |&v| (v, k)))
        .collect();
    tagged.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let seq: Vec<usize> = tagged.into_iter().map(|(_, k)| k).collect();
    Word::from_letters(collection.dice.len(), &seq).expect("letters in range")
}

/// Canonical collection on `1..=Σn_i`; position 1 carries the largest value.
pub fn dice_from_word(word: &Word) -> Result<DiceCollection, WordError> {
    let seq = word.to_dense()?;
    let total = seq.len() as u64;
    let mut dice = vec![Vec::new(); word.letters()];
    for (pos, &l) in seq.iter().enumerate() {
        dice[l].push(total - pos as u64);
    }
    for d in &mut dice {
        d.reverse();
    }
    Ok(DiceCollection { dice })
}

/// ℓ×ℓ table of left-of counts; entry `(i, j)` is N_{i,j}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VictoryMatrix {
    letters: usize,
    counts: Vec<BigUint>,
}

impl VictoryMatrix {
    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.counts[i * self.letters + j]
    }

    /// N_{k,k+1} with the cyclic convention (index ℓ wraps to 0).
    pub fn cyclic(&self, k: usize) -> &BigUint {
        self.get(k, (k + 1) % self.letters)
    }

    pub fn rows(&self) -> Vec<Vec<BigUint>> {
        self.counts
            .chunks(self.letters)
            .map(|c| c.to_vec())
            .collect()
    }
}

/// All pairwise left-of counts in one pass over the runs.
pub fn victories(word: &Word) -> VictoryMatrix {
    let l = word.letters();
    let mut counts = vec![BigUint::zero(); l * l];
    let mut seen = vec![BigUint::zero(); l];
    for run in word.runs() {
        let b = run.letter;
        for (a, s) in seen.iter().enumerate() {
            if a != b && !s.is_zero() {
                counts[a * l + b] += s * &run.len;
            }
        }
        seen[b] += &run.len;
    }
    VictoryMatrix { letters: l, counts }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ABetter,
    BBetter,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiceComparison {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub verdict: Verdict,
}

/// Face-pair comparison of two honest dice; ties count half to each side.
pub fn compare_dice<T: PartialOrd + Copy>(a: &[T], b: &[T]) -> DiceComparison {
    let mut sorted: Vec<T> = b.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    let (mut wins, mut ties) = (0u64, 0u64);
    for &x in a {
        let below = sorted.partition_point(|y| *y < x);
        let not_above = sorted.partition_point(|y| *y <= x);
        wins += below as u64;
        ties += (not_above - below) as u64;
    }
    let losses = (a.len() * b.len()) as u64 - wins - ties;
    let verdict = match wins.cmp(&losses) {
        Ordering::Greater => Verdict::ABetter,
        Ordering::Less => Verdict::BBetter,
        Ordering::Equal => Verdict::Neither,
    };
    DiceComparison {
        wins,
        losses,
        ties,
        verdict,
    }
}

/// True iff `2·N_{k,k+1} > n_k·n_{k+1}` for every k in the fixed cyclic order.
pub fn is_intransitive(word: &Word) -> bool {
    if word.letters() < 2 {
        return false;
    }
    let v = victories(word);
    let n = word.multiplicities();
    (0..word.letters()).all(|k| {
        let next = (k + 1) % word.letters();
        (v.cyclic(k) << 1u32) > &n[k] * &n[next]
    })
}

/// The word read backwards.
pub fn dual_word(word: &Word) -> Word {
    Word {
        letters: word.letters,
        runs: word.runs.iter().rev().cloned().collect(),
    }
}

/// Concatenation, merging the boundary runs when they share a letter.
pub fn concat(w1: &Word, w2: &Word) -> Result<Word, WordError> {
    if w1.letters != w2.letters {
        return Err(WordError::AlphabetMismatch(w1.letters, w2.letters));
    }
    let mut out = w1.clone();
    for r in &w2.runs {
        out.push_run(r.letter, r.len.clone())?;
    }
    Ok(out)
}

/// Every pair of dice beats each other equally often.
pub fn is_neutral(word: &Word) -> Result<bool, WordError> {
    word.uniform_multiplicity()?;
    let v = victories(word);
    let l = word.letters();
    Ok((0..l).all(|i| (i + 1..l).all(|j| v.get(i, j) == v.get(j, i))))
}

/// Follows every occurrence of the last letter with a new letter.
///
/// Runs of the last letter become alternating runs of length one, so the
/// result is refused when that would exceed [`DENSE_LIMIT`] runs.
pub fn extend_letter(word: &Word) -> Result<Word, WordError> {
    let last = word.letters - 1;
    let new = word.letters;
    let mut out = Word::empty(word.letters + 1);
    for r in &word.runs {
        if r.letter == last {
            let n = r
                .len
                .to_u64()
                .filter(|&n| n <= DENSE_LIMIT)
                .ok_or_else(|| WordError::TooLarge(r.len.to_string()))?;
            for _ in 0..n {
                out.push_run(last, BigUint::one())?;
                out.push_run(new, BigUint::one())?;
            }
        } else {
            out.push_run(r.letter, r.len.clone())?;
        }
    }
    Ok(out)
}

/// The neutral word S·S* with S = 1,2,…,ℓ.
pub fn neutral_block(letters: usize) -> Word {
    let s: Vec<usize> = (0..letters).collect();
    let w = Word::from_letters(letters, &s).expect("letters in range");
    concat(&w, &dual_word(&w)).expect("same alphabet")
}

/// Prepends the neutral block S·S*, adding two faces to every die.
pub fn extend_faces(word: &Word) -> Result<Word, WordError> {
    word.uniform_multiplicity()?;
    concat(&neutral_block(word.letters), word)
}

/// Explicit highly intransitive word with multiplicity `(8k³)¹²` per letter.
///
/// With t = 8k³ the runs are
/// `ℓ^{t⁷} 1^{t¹²/2} 2^{t¹²−t⁷} 3^{t¹²} … (ℓ−1)^{t¹²} ℓ^{t¹²−t⁷} 1^{t¹²/2} 2^{t⁷}`.
pub fn special_word(letters: usize, k: u64) -> Result<Word, WordError> {
    if letters < 3 || k == 0 {
        return Err(WordError::InvalidArgument(format!(
            "special word needs ℓ ≥ 3 and k ≥ 1 (got ℓ={letters}, k={k})"
        )));
    }
    let t = BigUint::from(8u32) * BigUint::from(k).pow(3);
    let t7 = t.pow(7);
    let t12 = t.pow(12);
    let half = &t12 >> 1u32;
    let last = letters - 1;
    let mut runs = vec![
        (last, t7.clone()),
        (0, half.clone()),
        (1, &t12 - &t7),
    ];
    for letter in 2..last {
        runs.push((letter, t12.clone()));
    }
    runs.push((last, &t12 - &t7));
    runs.push((0, half));
    runs.push((1, t7));
    Word::from_runs(letters, runs)
}

/// Membership in the almost-intransitive set: every cyclic count satisfies
/// `N_k > n²/2 − ½·√(n³(1 + 1/(2n)))`, decided with integers only.
/// Equality at the threshold counts as failure.
pub fn q_membership(word: &Word) -> Result<bool, WordError> {
    let n = word.uniform_multiplicity()?;
    let v = victories(word);
    let n2 = &n * &n;
    let bound = (&n2 * &n << 1u32) + &n2;
    Ok((0..word.letters()).all(|k| {
        let twice = v.cyclic(k) << 1u32;
        if twice >= n2 {
            true
        } else {
            let d = &n2 - &twice;
            (&d * &d << 1u32) < bound
        }
    }))
}
