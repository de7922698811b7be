//! Checks shared by the property suite and the acceptance run. Each takes
//! plain inputs and returns a description of the first mismatch.
#![allow(dead_code)]

use dicelab::gaussian::{determinant, null_vector, structured_gamma, CovarianceSpec};
use dicelab::laws::{
    blow_up_laws, check_blowup_constraint, coefficient_set, model_moments, pairwise_coefficients,
    triple_s, FiniteLaw, Law, ModelConfig,
};
use dicelab::words::{
    concat, dice_from_word, dual_word, is_intransitive, is_neutral, victories, word_from_dice, Word,
};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn word(l: usize, seq: &[usize]) -> Word {
    Word::from_letters(l, seq).unwrap()
}

/// A uniform random word with `n` copies of each of `l` letters.
pub fn random_balanced<R: Rng>(rng: &mut R, l: usize, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..l).flat_map(|k| std::iter::repeat_n(k, n)).collect();
    v.shuffle(rng);
    v
}

pub fn random_seq<R: Rng>(rng: &mut R, l: usize, max_len: usize) -> Vec<usize> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..l)).collect()
}

pub fn roundtrip(l: usize, seq: &[usize]) -> Check {
    let w = word(l, seq);
    let text = w.to_dense_string().unwrap();
    ensure(Word::parse(&text, Some(l)).unwrap() == w, || format!("dense {text}"))?;
    let rle = w.to_rle_string().unwrap();
    ensure(Word::parse(&rle, Some(l)).unwrap() == w || seq.is_empty(), || format!("rle {rle}"))?;
    ensure(w.to_dense().unwrap() == seq, || "to_dense".into())?;
    if w.multiplicities().iter().all(|m| !m.is_zero()) {
        let d = dice_from_word(&w).unwrap();
        ensure(d.is_canonical(), || "dice not canonical".into())?;
        ensure(word_from_dice(&d) == w, || format!("dice round trip {text}"))?;
    }
    Ok(())
}

pub fn pair_sums(l: usize, seq: &[usize]) -> Check {
    let w = word(l, seq);
    let v = victories(&w);
    let m = w.multiplicities();
    for i in 0..l {
        for j in 0..l {
            if i != j {
                ensure(v.get(i, j) + v.get(j, i) == &m[i] * &m[j], || format!("N_{i}{j}"))?;
            }
        }
    }
    Ok(())
}

pub fn duality(l: usize, seq: &[usize]) -> Check {
    let w = word(l, seq);
    let v = victories(&w);
    let d = victories(&dual_word(&w));
    for i in 0..l {
        for j in 0..l {
            ensure(d.get(i, j) == v.get(j, i), || format!("dual N_{i}{j}"))?;
        }
    }
    ensure(dual_word(&dual_word(&w)) == w, || "dual twice".into())
}

pub fn concat_identity(l: usize, a: &[usize], b: &[usize]) -> Check {
    let (wa, wb) = (word(l, a), word(l, b));
    let wc = concat(&wa, &wb).unwrap();
    let joined: Vec<usize> = a.iter().chain(b).copied().collect();
    ensure(wc == word(l, &joined), || "concat differs from joined sequence".into())?;
    let (va, vb, vc) = (victories(&wa), victories(&wb), victories(&wc));
    let (ma, mb) = (wa.multiplicities(), wb.multiplicities());
    for i in 0..l {
        for j in 0..l {
            if i != j {
                let want = va.get(i, j) + &ma[i] * &mb[j] + vb.get(i, j);
                ensure(vc.get(i, j) == &want, || format!("concat N_{i}{j}"))?;
            }
        }
    }
    Ok(())
}

/// `u = x·x*` is neutral, and putting it on either side of a balanced word
/// keeps its intransitivity status.
pub fn neutral_prefix(l: usize, x: &[usize], w: &[usize]) -> Check {
    let wx = word(l, x);
    let u = concat(&wx, &dual_word(&wx)).unwrap();
    ensure(is_neutral(&u).unwrap(), || "x·x* not neutral".into())?;
    let ww = word(l, w);
    let base = is_intransitive(&ww);
    ensure(is_intransitive(&concat(&u, &ww).unwrap()) == base, || "prefix changed status".into())?;
    ensure(is_intransitive(&concat(&ww, &u).unwrap()) == base, || "suffix changed status".into())
}

/// Random finite law on small integers with small integer weights.
pub fn random_law<R: Rng>(rng: &mut R, max_support: usize) -> Law {
    let s = rng.random_range(1..=max_support);
    let mut values: Vec<u32> = (0..6).collect();
    values.shuffle(rng);
    let raw: Vec<(f64, u32)> = values[..s].iter().map(|&v| (v as f64, rng.random_range(1..=5))).collect();
    let total: u32 = raw.iter().map(|x| x.1).sum();
    let atoms = raw
        .into_iter()
        .map(|(v, w)| (v, BigRational::new(BigInt::from(w), BigInt::from(total))))
        .collect();
    Law::Finite(FiniteLaw::new(atoms).unwrap())
}

fn atoms(law: &Law) -> (Vec<f64>, Vec<f64>) {
    match law {
        Law::Finite(f) => (f.support().to_vec(), f.weights_f64()),
        _ => unreachable!(),
    }
}

/// Exact moments by walking every joint outcome of every face.
pub fn moments_vs_brute_force(laws: &[Law], sizes: &[u64]) -> Check {
    let l = laws.len();
    let cfg = ModelConfig::from_sizes(sizes, laws.to_vec()).unwrap();
    let m = model_moments(&cfg).map_err(|e| e.to_string())?;
    let at: Vec<(Vec<f64>, Vec<f64>)> = laws.iter().map(atoms).collect();
    // one digit per face
    let owner: Vec<usize> = (0..l).flat_map(|k| std::iter::repeat_n(k, sizes[k] as usize)).collect();
    let radix: Vec<usize> = owner.iter().map(|&k| at[k].0.len()).collect();
    let mut digits = vec![0usize; owner.len()];
    let mut e_n = vec![0.0; l];
    let mut e_n2 = vec![0.0; l];
    let mut e_nn = vec![0.0; l]; // E[N_{k−1} N_k]
    let mut e_e = vec![0.0; l];
    let mut e_e2 = vec![0.0; l];
    loop {
        let mut prob = 1.0;
        let mut faces: Vec<Vec<f64>> = vec![Vec::new(); l];
        for (f, &d) in digits.iter().enumerate() {
            let k = owner[f];
            prob *= at[k].1[d];
            faces[k].push(at[k].0[d]);
        }
        let mut n = vec![0.0; l];
        let mut e = vec![0.0; l];
        for k in 0..l {
            for &x in &faces[k] {
                for &y in &faces[(k + 1) % l] {
                    if x > y {
                        n[k] += 1.0;
                    } else if x == y {
                        e[k] += 1.0;
                    }
                }
            }
        }
        for k in 0..l {
            e_n[k] += prob * n[k];
            e_n2[k] += prob * n[k] * n[k];
            e_nn[k] += prob * n[(k + l - 1) % l] * n[k];
            e_e[k] += prob * e[k];
            e_e2[k] += prob * e[k] * e[k];
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                break;
            }
            digits[i] += 1;
            if digits[i] < radix[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    for k in 0..l {
        let var = e_n2[k] - e_n[k] * e_n[k];
        let cov = e_nn[k] - e_n[(k + l - 1) % l] * e_n[k];
        let var_e = e_e2[k] - e_e[k] * e_e[k];
        ensure(close(m.mean_n[k], e_n[k]), || format!("E N_{k}: {} vs {}", m.mean_n[k], e_n[k]))?;
        ensure(close(m.var_n[k], var), || format!("Var N_{k}: {} vs {var}", m.var_n[k]))?;
        ensure(close(m.cov_n_prev[k], cov), || format!("Cov N_{k}: {} vs {cov}", m.cov_n_prev[k]))?;
        ensure(close(m.mean_e[k], e_e[k]), || format!("E E_{k}"))?;
        ensure(close(m.var_e[k], var_e), || format!("Var E_{k}: {} vs {var_e}", m.var_e[k]))?;
    }
    Ok(())
}

/// Sizes with at most `limit` joint outcomes for the given laws.
pub fn small_sizes<R: Rng>(rng: &mut R, laws: &[Law], limit: f64) -> Vec<u64> {
    loop {
        let sizes: Vec<u64> = laws.iter().map(|_| rng.random_range(1..=4)).collect();
        let outcomes: f64 = laws
            .iter()
            .zip(&sizes)
            .map(|(law, &n)| (atoms(law).0.len() as f64).powi(n as i32))
            .product();
        if outcomes <= limit {
            return sizes;
        }
    }
}

/// `p(ℒ,ℒ) = (1 − p_eq)/2` and the coefficient bounds.
pub fn coefficient_identities(a: &Law, b: &Law, c: &Law) -> Check {
    let half = BigRational::new(1.into(), 2.into());
    let one = BigRational::from_integer(1.into());
    let same = pairwise_coefficients(a, a).unwrap();
    let want = (&one - same.p_eq.exact().unwrap()) * &half;
    ensure(same.p.exact() == Some(&want), || "p(L,L) symmetry".into())?;
    let ab = pairwise_coefficients(a, b).unwrap();
    let ba = pairwise_coefficients(b, a).unwrap();
    let total = ab.p.exact().unwrap() + ba.p.exact().unwrap() + ab.p_eq.exact().unwrap();
    ensure(total == one, || "p + p' + p_eq = 1".into())?;
    let x = |p: &dicelab::laws::Prob| p.exact().unwrap().clone();
    ensure(x(&ab.q) <= x(&ab.p) && x(&ab.r) <= x(&ab.p), || "q, r ≤ p".into())?;
    ensure(x(&ab.q_eq) <= x(&ab.p_eq) && x(&ab.r_eq) <= x(&ab.p_eq), || "ties".into())?;
    let bc = pairwise_coefficients(b, c).unwrap();
    let s = triple_s(a, b, c).unwrap();
    ensure(x(&s.s) <= x(&ab.p).min(x(&bc.p)), || "s ≤ min p".into())?;
    for v in [&ab.p, &ab.q, &ab.r, &ab.p_eq, &ab.q_eq, &ab.r_eq, &s.s, &s.s_eq] {
        let v = x(v);
        ensure(v >= BigRational::zero() && v <= one, || "outside [0,1]".into())?;
    }
    Ok(())
}

/// Blow-up coefficients by counting face index pairs and triples directly.
pub fn blowup_counting(dice: &[Vec<f64>]) -> Check {
    let l = dice.len();
    let c = coefficient_set(&blow_up_laws(dice).unwrap()).unwrap();
    let frac = |num: usize, den: usize| BigRational::new(BigInt::from(num), BigInt::from(den));
    for k in 0..l {
        let (a, b, z) = (&dice[(k + l - 1) % l], &dice[k], &dice[(k + 1) % l]);
        let nb = z.len();
        let na = b.len();
        let cnt = |f: &dyn Fn(f64, f64) -> bool| b.iter().map(|&x| z.iter().filter(|&&y| f(x, y)).count()).sum::<usize>();
        let p = cnt(&|x, y| x > y);
        let p_eq = cnt(&|x, y| x == y);
        let mut q = 0;
        let mut r = 0;
        for &y in z {
            let above = b.iter().filter(|&&x| x > y).count();
            q += above * above;
        }
        for &x in b {
            let below = z.iter().filter(|&&y| y < x).count();
            r += below * below;
        }
        let mut s = 0;
        for &x in b {
            s += a.iter().filter(|&&w| w > x).count() * z.iter().filter(|&&y| y < x).count();
        }
        let e = |p: &dicelab::laws::Prob| p.exact().unwrap().clone();
        ensure(e(&c.p[k]) == frac(p, na * nb), || format!("p_{k}"))?;
        ensure(e(&c.p_eq[k]) == frac(p_eq, na * nb), || format!("p_eq_{k}"))?;
        ensure(e(&c.q[k]) == frac(q, na * na * nb), || format!("q_{k}"))?;
        ensure(e(&c.r[k]) == frac(r, na * nb * nb), || format!("r_{k}"))?;
        ensure(e(&c.s[k]) == frac(s, a.len() * na * nb), || format!("s_{k}"))?;
    }
    Ok(())
}

/// Dice read off a balanced word; wherever `p_k = 1/2`, `q_k + r_k > 2/3`.
pub fn blowup_two_thirds(l: usize, seq: &[usize]) -> Check {
    let d = dice_from_word(&word(l, seq)).unwrap();
    let faces: Vec<Vec<f64>> = d.dice().iter().map(|f| f.iter().map(|&x| x as f64).collect()).collect();
    let r = check_blowup_constraint(&faces).map_err(|e| e.to_string())?;
    ensure(r.all_exceed_two_thirds, || format!("{:?}", r.q_plus_r_values))?;
    // the indices found must be exactly those with N_k = n²/2
    let v = victories(&word(l, seq));
    let n = faces[0].len() as u64;
    let half: Vec<usize> = (0..l).filter(|&k| v.cyclic(k) * 2u32 == BigUint::from(n * n)).collect();
    ensure(half == r.p_half_indices, || "p = 1/2 indices".into())
}

pub fn determinant_agrees(gamma: &[f64]) -> Check {
    let d = determinant(&CovarianceSpec::new(gamma.to_vec()).unwrap());
    ensure(d.agreement, || format!("{gamma:?}: {d:?}"))
}

/// Everything the structured matrix promises for face-count fractions `f`.
pub fn structured_properties(f: &[f64]) -> Check {
    let l = f.len();
    let spec = structured_gamma(f).map_err(|e| e.to_string())?;
    let g = spec.gamma();
    ensure(g.iter().all(|&x| x > -1.0 && x < 0.0), || format!("γ ∉ (−1,0): {g:?}"))?;
    for k in 0..l {
        let (a, b, c) = (f[(k + l - 1) % l], f[k], f[(k + 1) % l]);
        let want = (a / (a + b)) * (c / (b + c));
        ensure((g[k] * g[k] - want).abs() < 1e-12, || format!("γ_{k}²"))?;
    }
    let prod: f64 = g.iter().product();
    let ratio: f64 = (0..l).map(|k| f[k] / (f[k] + f[(k + 1) % l])).product();
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    ensure((prod - sign * ratio).abs() < 1e-12, || "∏γ identity".into())?;
    ensure(prod.abs() <= 0.5f64.powi(l as i32) + 1e-15, || "|∏γ| ≤ 2^−ℓ".into())?;

    let d = determinant(&spec);
    ensure(d.agreement, || format!("det agreement {d:?}"))?;
    ensure(d.value_expansion.abs() < 1e-9 && d.value_lu.abs() < 1e-9, || format!("det ≠ 0: {d:?}"))?;

    let nv = null_vector(&spec);
    ensure(nv.strictly_positive, || format!("null vector {:?}", nv.vector))?;
    ensure(nv.zero_eigenvalue_residual < 1e-8, || format!("residual {}", nv.zero_eigenvalue_residual))?;
    let p = &nv.p_sequence;
    ensure(p.windows(2).all(|w| w[0] > w[1]) && p[l] > 0.0, || format!("P not decreasing {p:?}"))?;
    ensure((p[l] - 2.0 * sign * prod).abs() < 1e-12, || "P_ℓ product form".into())?;
    ensure((p[l] - nv.p_ell_cycle).abs() < 1e-12, || format!("P_ℓ {} vs cycle sum {}", p[l], nv.p_ell_cycle))
}

pub fn random_fractions<R: Rng>(rng: &mut R, l: usize) -> Vec<f64> {
    (0..l).map(|_| rng.random_range(0.05..=1.0)).collect()
}

pub fn to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap()
}
