//! Exact counting of intransitive words with ℓ letters, n of each.
//!
//! Words are generated depth-first in lexicographic order. For every cyclic
//! pair `k → k+1` the search keeps the number of already decided wins `W_k`
//! (a placed `k` is left of every `k+1` still to come) and the number of
//! undecided pairs `R_k = (n − c_k)(n − c_{k+1})`. A branch is cut as soon as
//! `2(W_k + R_k) ≤ n²` for some k. When every pair is already won
//! (`2W_k > n²` for all k) the whole subtree is intransitive and is counted
//! with a multinomial instead of being walked.
//!
//! The top of the tree is cut into prefixes at a fixed depth and dealt out
//! round-robin to worker threads; the reduction is integer addition, so the
//! count does not depend on the number of workers.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::serde_big;

/// Default limit on the size of the unpruned search tree.
pub const DEFAULT_BUDGET: u64 = 10_000_000_000;

/// Largest alphabet the search supports.
pub const MAX_LETTERS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumError {
    #[error("projected {projected} nodes exceeds the search budget of {budget}")]
    BudgetExceeded { projected: String, budget: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub workers: usize,
    pub budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            workers: 1,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SearchConfig {
    pub fn with_workers(workers: usize) -> Self {
        SearchConfig {
            workers,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub letters: usize,
    pub faces: u32,
    #[serde(serialize_with = "serde_big::biguint")]
    pub intransitive_count: BigUint,
    #[serde(serialize_with = "serde_big::biguint")]
    pub total_count: BigUint,
    pub ratio: f64,
    /// `−ln(ratio)/n`; absent when no intransitive word exists.
    pub delta_l: Option<f64>,
    pub elapsed_seconds: f64,
    pub workers: usize,
    pub nodes_visited: u64,
    pub prefix_depth: usize,
}

/// `(ℓn)!/(n!)^ℓ`.
pub fn total_words(letters: usize, faces: u32) -> BigUint {
    let mut total = BigUint::one();
    let mut placed = 0u64;
    for _ in 0..letters {
        for i in 1..=faces as u64 {
            total *= placed + i;
            total /= i;
        }
        placed += faces as u64;
    }
    total
}

/// Number of nodes in the unpruned prefix tree (all distinct prefixes of
/// every length, the empty prefix included).
pub fn projected_nodes(letters: usize, faces: u32) -> BigUint {
    let n = faces as usize;
    let total = letters * n;
    // ways[d] = number of distinct prefixes of length d over the letters so far
    let mut ways = vec![BigUint::zero(); total + 1];
    ways[0] = BigUint::one();
    let mut binom = vec![vec![BigUint::zero(); n + 1]; total + 1];
    for d in 0..=total {
        binom[d][0] = BigUint::one();
        for c in 1..=n.min(d) {
            binom[d][c] = if c == d {
                BigUint::one()
            } else {
                &binom[d - 1][c - 1] + &binom[d - 1][c]
            };
        }
    }
    for j in 0..letters {
        let limit = (j + 1) * n;
        let mut next = vec![BigUint::zero(); total + 1];
        for (d, slot) in next.iter_mut().enumerate().take(limit + 1) {
            for c in 0..=n.min(d) {
                if !ways[d - c].is_zero() {
                    *slot += &ways[d - c] * &binom[d][c];
                }
            }
        }
        ways = next;
    }
    ways.into_iter().sum()
}

/// Exact `|W_{▷,ℓ}(n)|` with pruning and static prefix partitioning.
pub fn count_intransitive(
    letters: usize,
    faces: u32,
    config: SearchConfig,
) -> Result<CountReport, EnumError> {
    if !(2..=MAX_LETTERS).contains(&letters) {
        return Err(EnumError::InvalidArgument(format!(
            "letters must be in 2..={MAX_LETTERS}, got {letters}"
        )));
    }
    if faces == 0 {
        return Err(EnumError::InvalidArgument("faces must be ≥ 1".into()));
    }
    let workers = config.workers.max(1);
    let projected = projected_nodes(letters, faces);
    if projected > BigUint::from(config.budget) {
        return Err(EnumError::BudgetExceeded {
            projected: projected.to_string(),
            budget: config.budget,
        });
    }

    let start = Instant::now();
    let problem = Problem::new(letters, faces);
    let (frontier, depth, mut tally, mut nodes) = problem.frontier(8 * workers);

    let results: Vec<(Tally, u64)> = if workers == 1 || frontier.len() <= 1 {
        let mut s = Searcher::new(&problem);
        for node in &frontier {
            let mut node = *node;
            s.dfs(&mut node);
        }
        vec![(s.tally, s.nodes)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let problem = &problem;
                    let frontier = &frontier;
                    scope.spawn(move || {
                        let mut s = Searcher::new(problem);
                        for node in frontier.iter().skip(w).step_by(workers) {
                            let mut node = *node;
                            s.dfs(&mut node);
                        }
                        (s.tally, s.nodes)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("search worker panicked"))
                .collect()
        })
    };
    for (t, n) in results {
        tally.merge(t);
        nodes += n;
    }

    let intransitive = tally.into_biguint();
    let total = total_words(letters, faces);
    let ratio = ratio_f64(&intransitive, &total);
    let delta_l = (ratio > 0.0).then(|| -ratio.ln() / faces as f64);
    Ok(CountReport {
        letters,
        faces,
        intransitive_count: intransitive,
        total_count: total,
        ratio,
        delta_l,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        workers,
        nodes_visited: nodes,
        prefix_depth: depth,
    })
}

/// One report per face count; failures are kept per entry.
pub fn rate_report(
    letters: usize,
    faces: &[u32],
    config: SearchConfig,
) -> Vec<Result<CountReport, EnumError>> {
    faces
        .iter()
        .map(|&n| count_intransitive(letters, n, config))
        .collect()
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // scale both into f64 range before dividing
    let shift = den.bits().saturating_sub(1000);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Running count kept in 128 bits and spilled into a big integer on overflow.
#[derive(Debug, Default, Clone)]
struct Tally {
    small: u128,
    big: BigUint,
}

impl Tally {
    fn add(&mut self, x: u128) {
        match self.small.checked_add(x) {
            Some(s) => self.small = s,
            None => {
                self.big += self.small;
                self.small = x;
            }
        }
    }

    fn add_big(&mut self, x: BigUint) {
        self.big += x;
    }

    fn merge(&mut self, other: Tally) {
        self.add(other.small);
        self.big += other.big;
    }

    fn into_biguint(self) -> BigUint {
        self.big + self.small
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    counts: [u32; MAX_LETTERS],
    wins: [u64; MAX_LETTERS],
    secured: usize,
}

struct Problem {
    letters: usize,
    faces: u32,
    n2: u64,
    /// Pascal triangle up to ℓn; `None` where the entry overflows 128 bits.
    binom: Vec<Vec<Option<u128>>>,
}

impl Problem {
    fn new(letters: usize, faces: u32) -> Self {
        let size = letters * faces as usize;
        let mut binom: Vec<Vec<Option<u128>>> = vec![Vec::new(); size + 1];
        for d in 0..=size {
            let mut row = vec![Some(1u128); d + 1];
            for c in 1..d {
                row[c] = match (binom[d - 1][c - 1], binom[d - 1][c]) {
                    (Some(a), Some(b)) => a.checked_add(b),
                    _ => None,
                };
            }
            binom[d] = row;
        }
        let n = faces as u64;
        Problem {
            letters,
            faces,
            n2: n * n,
            binom,
        }
    }

    fn root(&self) -> Node {
        Node {
            counts: [0; MAX_LETTERS],
            wins: [0; MAX_LETTERS],
            secured: 0,
        }
    }

    /// Places letter `j`; returns the child if no cycle inequality is lost.
    #[inline(always)]
    fn child(&self, node: &Node, j: usize) -> Option<Node> {
        let l = self.letters;
        let n = self.faces;
        if node.counts[j] == n {
            return None;
        }
        let prev = if j == 0 { l - 1 } else { j - 1 };
        let next = if j + 1 == l { 0 } else { j + 1 };
        let mut c = *node;
        let before = c.wins[j];
        c.wins[j] += (n - c.counts[next]) as u64;
        c.counts[j] += 1;
        if 2 * before <= self.n2 && 2 * c.wins[j] > self.n2 {
            c.secured += 1;
        }
        let open = |a: usize, b: usize| ((n - c.counts[a]) as u64) * ((n - c.counts[b]) as u64);
        if 2 * (c.wins[prev] + open(prev, j)) <= self.n2 {
            return None;
        }
        if 2 * (c.wins[j] + open(j, next)) <= self.n2 {
            return None;
        }
        Some(c)
    }

    /// Number of ways to finish the word from `node`.
    fn completions(&self, node: &Node) -> Result<u128, BigUint> {
        let mut placed = 0usize;
        let mut acc: Option<u128> = Some(1);
        for j in 0..self.letters {
            let r = (self.faces - node.counts[j]) as usize;
            placed += r;
            acc = acc.and_then(|a| self.binom[placed][r].and_then(|b| a.checked_mul(b)));
        }
        match acc {
            Some(v) => Ok(v),
            None => {
                let mut big = BigUint::one();
                let mut placed = 0u64;
                for j in 0..self.letters {
                    let r = (self.faces - node.counts[j]) as u64;
                    for i in 1..=r {
                        big *= placed + i;
                        big /= i;
                    }
                    placed += r;
                }
                Err(big)
            }
        }
    }

    /// Prefixes at the smallest depth giving at least `target` live
    /// branches, plus the count and node visits already settled above it.
    fn frontier(&self, target: usize) -> (Vec<Node>, usize, Tally, u64) {
        let total = self.letters * self.faces as usize;
        let mut tally = Tally::default();
        let mut nodes = 0u64;
        let mut level = vec![self.root()];
        let mut depth = 0;
        while level.len() < target && depth < total {
            let mut next = Vec::with_capacity(level.len() * self.letters);
            for node in &level {
                nodes += 1;
                if node.secured == self.letters {
                    match self.completions(node) {
                        Ok(v) => tally.add(v),
                        Err(b) => tally.add_big(b),
                    }
                    continue;
                }
                next.extend((0..self.letters).filter_map(|j| self.child(node, j)));
            }
            level = next;
            depth += 1;
        }
        (level, depth, tally, nodes)
    }
}

struct Searcher<'a> {
    problem: &'a Problem,
    tally: Tally,
    nodes: u64,
}

impl<'a> Searcher<'a> {
    fn new(problem: &'a Problem) -> Self {
        Searcher {
            problem,
            tally: Tally::default(),
            nodes: 0,
        }
    }

    fn dfs(&mut self, node: &mut Node) {
        self.nodes += 1;
        let p = self.problem;
        // a full word that survived every check has all pairs secured
        if node.secured == p.letters {
            match p.completions(node) {
                Ok(v) => self.tally.add(v),
                Err(b) => self.tally.add_big(b),
            }
            return;
        }
        for j in 0..p.letters {
            if let Some(mut child) = p.child(node, j) {
                self.dfs(&mut child);
            }
        }
    }
}
