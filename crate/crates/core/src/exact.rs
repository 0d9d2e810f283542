//! Exact finite-`n` mean and variance of the plug-in entropy under
//! `Mult(n, p)`, evaluated in arbitrary precision.
//!
//! Binomial coefficients are exact integers; powers, logarithms and sums are
//! carried in big floats. Every evaluation runs twice, at the configured
//! precision and at twice that, and the two results must agree to
//! `2^-(bits/4)` or a [`Error::Precision`] is reported instead of a value.
//!
//! [`enumerate_moments`] is an independent brute-force oracle that sums over
//! every outcome of the multinomial with exact rational weights.

use alloc::vec;
use alloc::vec::Vec;

use astro_float::BigFloat;
use num_bigint::BigUint;

use crate::bigfloat::{abs_diff, dyadic, to_f64, Ctx};
use crate::error::{Error, Result};
use crate::montecarlo::Scenario;
use crate::simplex::ProbabilityVector;

/// Precision and size guard for the exact formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionConfig {
    pub significand_bits: usize,
    pub max_n: u64,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            significand_bits: 256,
            max_n: 2000,
        }
    }
}

impl PrecisionConfig {
    pub fn new(significand_bits: usize, max_n: u64) -> Result<Self> {
        let cfg = Self {
            significand_bits,
            max_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.significand_bits < 64 {
            return Err(Error::param("significand_bits must be at least 64"));
        }
        Ok(())
    }
}

/// An exactly computed moment rounded to `f64`, with the observed change
/// between the two working precisions (plus one ulp of rounding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    pub error_bound: f64,
    pub bits: usize,
}

fn ulp(x: f64) -> f64 {
    libm::nextafter(x.abs(), f64::INFINITY) - x.abs()
}

/// Distinct probabilities (as big floats normalized to sum exactly one at
/// the working precision) with their multiplicities. Zero bins are dropped.
fn groups(ctx: &Ctx, p: &ProbabilityVector) -> Vec<(BigFloat, u64)> {
    let mut distinct: Vec<(f64, u64)> = Vec::new();
    for &x in p.as_slice().iter().filter(|&&x| x > 0.0) {
        match distinct.iter_mut().find(|(v, _)| *v == x) {
            Some((_, c)) => *c += 1,
            None => distinct.push((x, 1)),
        }
    }
    let total = p
        .as_slice()
        .iter()
        .fold(ctx.zero(), |acc, &x| ctx.add(&acc, &ctx.float(x)));
    distinct
        .into_iter()
        .map(|(v, c)| (ctx.div(&ctx.float(v), &total), c))
        .collect()
}

/// Row `C(m, 0..=upto)` of Pascal's triangle as exact integers.
fn binomial_row(m: u64, upto: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(upto as usize + 1);
    let mut c = BigUint::from(1u32);
    row.push(c.clone());
    for i in 0..upto.min(m) {
        c = c * BigUint::from(m - i) / BigUint::from(i + 1);
        row.push(c.clone());
    }
    row
}

fn check_n(n: u64, min: u64, cfg: &PrecisionConfig) -> Result<()> {
    cfg.validate()?;
    if n < min {
        return Err(Error::param(alloc::format!("n must be at least {min}")));
    }
    if n > cfg.max_n {
        return Err(Error::Capacity(alloc::format!(
            "n = {n} exceeds the exact-moment limit max_n = {}",
            cfg.max_n
        )));
    }
    Ok(())
}

/// `ln n - Σ_{j=1}^{n-1} C(n-1, n-j) ln(n-j+1) Σ_l p_l^{n-j+1} (1-p_l)^{j-1}`.
fn mean_at(p: &ProbabilityVector, n: u64, bits: usize) -> Result<(BigFloat, Ctx)> {
    let mut ctx = Ctx::new(bits)?;
    let nu = n as usize;
    let logs = ctx.ln_table(nu);
    let one = ctx.int(1);

    // acc[j] = Σ_l p_l^{n-j+1} q_l^{j-1}, j = 1..n-1
    let mut acc = vec![ctx.zero(); nu];
    for (pv, mult) in groups(&ctx, p) {
        let q = ctx.sub(&one, &pv);
        let c = ctx.int(mult);
        let mut term = ctx.powi(&pv, nu);
        if q.is_zero() {
            acc[1] = ctx.add(&acc[1], &ctx.mul(&term, &c));
            continue;
        }
        let ratio = ctx.div(&q, &pv);
        for slot in acc.iter_mut().take(nu).skip(1) {
            let t = if mult == 1 { term.clone() } else { ctx.mul(&term, &c) };
            *slot = ctx.add(slot, &t);
            term = ctx.mul(&term, &ratio);
        }
    }

    // C(n-1, n-j) = C(n-1, j-1)
    let binom = binomial_row(n - 1, n - 1);
    let mut sum = ctx.zero();
    for j in 1..nu {
        let w = ctx.mul(&ctx.biguint(&binom[j - 1]), &logs[nu - j]);
        sum = ctx.add(&sum, &ctx.mul(&w, &acc[j]));
    }
    let mean = ctx.sub(&logs[nu - 1], &sum);
    ctx.check(&mean, "exact mean")?;
    Ok((mean, ctx))
}

/// Double sum for the exact variance.
///
/// ```text
/// Var = Σ_{a=0}^{n-2} w_a Σ_{b=a+1}^{n-1} w_b ln²((n-a)/(n-b)),
///         w_a = C(n-1, a) Σ_l p_l^{n-a} (1-p_l)^a
///     - (n-1)/n Σ_{b=0}^{n-3} C(n-2, b) Σ_{a=0}^{[(n-b-2)/2]} C(n-b-2, a)
///         Σ_{l≠j} p_l^{n-a-b-1} p_j^{a+1} (1-p_l-p_j)^b ln²((n-a-b-1)/(a+1))
/// ```
fn variance_at(p: &ProbabilityVector, n: u64, bits: usize) -> Result<(BigFloat, Ctx)> {
    let mut ctx = Ctx::new(bits)?;
    let nu = n as usize;
    // logs[i] = ln(i + 1)
    let logs = ctx.ln_table(nu);
    let one = ctx.int(1);
    let groups = groups(&ctx, p);

    // powers[g][m] = p_g^m for m = 0..=n
    let powers: Vec<Vec<BigFloat>> = groups
        .iter()
        .map(|(pv, _)| {
            let mut row = Vec::with_capacity(nu + 1);
            let mut x = one.clone();
            for _ in 0..=nu {
                row.push(x.clone());
                x = ctx.mul(&x, pv);
            }
            row
        })
        .collect();

    // first term
    let binom = binomial_row(n - 1, n - 1);
    let w: Vec<BigFloat> = (0..nu)
        .map(|a| {
            let mut s = ctx.zero();
            for (g, (pv, mult)) in groups.iter().enumerate() {
                let q = ctx.sub(&one, pv);
                let t = ctx.mul(&powers[g][nu - a], &ctx.powi(&q, a));
                s = ctx.add(&s, &ctx.mul(&t, &ctx.int(*mult)));
            }
            ctx.mul(&ctx.biguint(&binom[a]), &s)
        })
        .collect();
    let mut first = ctx.zero();
    for a in 0..nu.saturating_sub(1) {
        let mut inner = ctx.zero();
        for b in a + 1..nu {
            // ln((n-a)/(n-b)) = logs[n-a-1] - logs[n-b-1]
            let d = ctx.sub(&logs[nu - a - 1], &logs[nu - b - 1]);
            inner = ctx.add(&inner, &ctx.mul(&w[b], &ctx.mul(&d, &d)));
        }
        first = ctx.add(&first, &ctx.mul(&w[a], &inner));
    }

    // second term, over ordered pairs of distinct bins
    struct Pair {
        u: usize,
        v: usize,
        mult: BigFloat,
        rest: BigFloat,
        rest_pow: BigFloat,
    }
    let mut pairs = Vec::new();
    for (u, (pu, cu)) in groups.iter().enumerate() {
        for (v, (pv, cv)) in groups.iter().enumerate() {
            let mult = if u == v { cu * cu.saturating_sub(1) } else { cu * cv };
            if mult == 0 {
                continue;
            }
            let rest = ctx.sub(&ctx.sub(&one, pu), pv);
            pairs.push(Pair {
                u,
                v,
                mult: ctx.int(mult),
                rest,
                rest_pow: one.clone(),
            });
        }
    }

    let mut second = ctx.zero();
    let outer = binomial_row(n - 2, n - 2);
    for b in 0..nu.saturating_sub(2) {
        let m = nu - b - 2;
        let row = binomial_row(m as u64, (m / 2) as u64);
        let mut inner = ctx.zero();
        for a in 0..=m / 2 {
            let x = nu - a - b - 1;
            let y = a + 1;
            let d = ctx.sub(&logs[x - 1], &logs[y - 1]);
            if d.is_zero() {
                continue;
            }
            let weight = ctx.mul(&ctx.biguint(&row[a]), &ctx.mul(&d, &d));
            let mut s = ctx.zero();
            for pair in &pairs {
                let t = ctx.mul(&powers[pair.u][x], &powers[pair.v][y]);
                let t = ctx.mul(&ctx.mul(&t, &pair.rest_pow), &pair.mult);
                s = ctx.add(&s, &t);
            }
            inner = ctx.add(&inner, &ctx.mul(&weight, &s));
        }
        second = ctx.add(&second, &ctx.mul(&ctx.biguint(&outer[b]), &inner));
        for pair in pairs.iter_mut() {
            pair.rest_pow = ctx.mul(&pair.rest_pow, &pair.rest);
        }
    }

    let factor = ctx.div(&ctx.int(n - 1), &ctx.int(n));
    let var = ctx.sub(&first, &ctx.mul(&factor, &second));
    ctx.check(&var, "exact variance")?;
    Ok((var, ctx))
}

/// Runs `eval` at `bits` and `2 bits` and certifies the agreement.
fn certify<F>(bits: usize, eval: F) -> Result<(BigFloat, Ctx, f64)>
where
    F: Fn(usize) -> Result<(BigFloat, Ctx)>,
{
    let (lo, _) = eval(bits)?;
    let (hi, ctx) = eval(2 * bits)?;
    let diff = abs_diff(&ctx, &lo, &hi);
    let tolerance = libm::ldexp(1.0, -((bits / 4) as i32));
    if !(diff <= tolerance) {
        return Err(Error::Precision {
            bits,
            detail: alloc::format!(
                "result moved by {diff:e} when doubling the precision (allowed {tolerance:e})"
            ),
        });
    }
    Ok((hi, ctx, diff))
}

/// Exact `E[H(p̂)]`, `1 <= n <= cfg.max_n`.
pub fn exact_mean(p: &ProbabilityVector, n: u64, cfg: &PrecisionConfig) -> Result<Certified> {
    check_n(n, 1, cfg)?;
    let bits = cfg.significand_bits;
    if n == 1 {
        return Ok(Certified {
            value: 0.0,
            error_bound: 0.0,
            bits,
        });
    }
    let (mean, mut ctx, diff) = certify(bits, |b| mean_at(p, n, b))?;

    let slack = ctx.pow2(-((bits / 2) as i32));
    let k = ctx.int(p.k() as u64);
    let ln_k = ctx.ln(&k);
    let upper = ctx.add(&ln_k, &slack);
    let lower = slack.neg();
    if mean.cmp(&lower).is_some_and(|c| c < 0) || mean.cmp(&upper).is_some_and(|c| c > 0) {
        return Err(Error::Precision {
            bits,
            detail: alloc::format!("exact mean {} outside [0, ln k]", to_f64(&mean)),
        });
    }
    let value = to_f64(&mean).max(0.0);
    Ok(Certified {
        value,
        error_bound: diff + ulp(value),
        bits,
    })
}

/// Exact `Var[H(p̂)]`, `2 <= n <= cfg.max_n`.
///
/// The cost grows like `n² d²` for `d` distinct probabilities.
pub fn exact_variance(p: &ProbabilityVector, n: u64, cfg: &PrecisionConfig) -> Result<Certified> {
    check_n(n, 2, cfg)?;
    let bits = cfg.significand_bits;
    let (var, ctx, diff) = certify(bits, |b| variance_at(p, n, b))?;
    let floor = ctx.pow2(-((bits / 2) as i32)).neg();
    if var.cmp(&floor).is_some_and(|c| c < 0) {
        return Err(Error::Precision {
            bits,
            detail: alloc::format!("exact variance {} is negative", to_f64(&var)),
        });
    }
    let value = to_f64(&var).max(0.0);
    Ok(Certified {
        value,
        error_bound: diff + ulp(value),
        bits,
    })
}

/// Upper limit on the number of outcomes visited by [`enumerate_moments`].
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

fn composition_count(n: u64, k: usize) -> u128 {
    // C(n + k - 1, k - 1), saturating
    let mut c: u128 = 1;
    for i in 0..(k as u128 - 1) {
        c = c.saturating_mul(n as u128 + 1 + i) / (i + 1);
        if c > ENUMERATION_BUDGET * 1_000 {
            return u128::MAX;
        }
    }
    c
}

/// Mean and variance of `H(p̂)` by summing over every count vector with its
/// multinomial probability.
///
/// Each `p_l` is an exact dyadic rational, so the weights
/// `n!/Π c_l! · Π (p_l/S)^{c_l}` (with `S = Σ p_l`) are exact rationals; only
/// their final conversion and the entropies are rounded, at 256 bits.
pub fn enumerate_moments(p: &ProbabilityVector, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let k = p.k();
    let count = composition_count(n, k);
    if count > ENUMERATION_BUDGET {
        return Err(Error::Capacity(alloc::format!(
            "{} outcomes exceed the enumeration budget of {ENUMERATION_BUDGET}",
            if count == u128::MAX { alloc::string::String::from("too many") } else { alloc::format!("{count}") }
        )));
    }
    let mut ctx = Ctx::new(256)?;
    let nu = n as usize;

    let parts: Vec<(u64, i32)> = p.as_slice().iter().map(|&x| dyadic(x)).collect();
    let min_e = parts.iter().filter(|(m, _)| *m > 0).map(|(_, e)| *e).min().unwrap_or(0);
    let total: BigUint = parts
        .iter()
        .filter(|(m, _)| *m > 0)
        .map(|&(m, e)| BigUint::from(m) << ((e - min_e) as u32))
        .sum();
    // denominator S^n = total^n · 2^{n min_e}
    let denom = ctx.mul(&ctx.biguint(&total.pow(n as u32)), &ctx.pow2(min_e * n as i32));

    let mant_pow: Vec<Vec<BigUint>> = parts
        .iter()
        .map(|&(m, _)| {
            let mut row = Vec::with_capacity(nu + 1);
            let mut x = BigUint::from(1u32);
            for _ in 0..=nu {
                row.push(x.clone());
                x *= m;
            }
            row
        })
        .collect();
    let mut fact = vec![BigUint::from(1u32)];
    for i in 1..=n {
        let next = fact[i as usize - 1].clone() * i;
        fact.push(next);
    }
    // clogc[c] = c ln c
    let logs = ctx.ln_table(nu);
    let clogc: Vec<BigFloat> = (0..=nu)
        .map(|c| if c == 0 { ctx.zero() } else { ctx.mul(&ctx.int(c as u64), &logs[c - 1]) })
        .collect();
    let ln_n = logs[nu - 1].clone();
    let nf = ctx.int(n);

    let mut m1 = ctx.zero();
    let mut m2 = ctx.zero();
    let mut counts = vec![0usize; k];
    let mut visit = |counts: &[usize]| {
        let mut num = fact[nu].clone();
        let mut den = BigUint::from(1u32);
        let mut e: i64 = 0;
        let mut s = ctx.zero();
        for (l, &c) in counts.iter().enumerate() {
            num *= &mant_pow[l][c];
            den *= &fact[c];
            e += parts[l].1 as i64 * c as i64;
            s = ctx.add(&s, &clogc[c]);
        }
        if num == BigUint::from(0u32) {
            return;
        }
        let mut w = ctx.div(&ctx.biguint(&(num / &den)), &denom);
        // num is divisible by den: n!/Π c! is an integer
        if let Some(we) = w.exponent() {
            w.set_exponent(we + e as i32);
        }
        let h = ctx.sub(&ln_n, &ctx.div(&s, &nf));
        let wh = ctx.mul(&w, &h);
        m1 = ctx.add(&m1, &wh);
        m2 = ctx.add(&m2, &ctx.mul(&wh, &h));
    };
    compositions(nu, 0, &mut counts, &mut visit);

    let var = ctx.sub(&m2, &ctx.mul(&m1, &m1));
    Ok((to_f64(&m1), to_f64(&var).max(0.0)))
}

fn compositions(remaining: usize, idx: usize, counts: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    if idx == counts.len() - 1 {
        counts[idx] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        compositions(remaining - c, idx + 1, counts, visit);
    }
}

/// Largest `n <= cfg.max_n` for which [`exact_mean`] certifies a value under
/// `scenario` with `k` bins, found by doubling then bisection.
pub fn feasibility_probe(k: usize, scenario: Scenario, cfg: &PrecisionConfig) -> Result<u64> {
    let p = scenario.probabilities(k)?;
    let ok = |n: u64| exact_mean(&p, n, cfg).is_ok();
    if !ok(1) {
        return Ok(0);
    }
    let mut good = 1;
    let mut bad = None;
    while good < cfg.max_n {
        let next = (good * 2).min(cfg.max_n);
        if ok(next) {
            good = next;
        } else {
            bad = Some(next);
            break;
        }
    }
    if let Some(mut bad) = bad {
        while bad - good > 1 {
            let mid = good + (bad - good) / 2;
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    Ok(good)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    fn pv(x: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn binomial_rows() {
        let r = binomial_row(5, 5);
        let v: Vec<u32> = r.iter().map(|x| x.to_u32_digits().first().copied().unwrap_or(0)).collect();
        assert_eq!(v, [1, 5, 10, 10, 5, 1]);
        assert_eq!(binomial_row(6, 2).len(), 3);
    }

    #[test]
    fn single_draw_has_zero_entropy() {
        let cfg = PrecisionConfig::default();
        let m = exact_mean(&pv(&[0.2, 0.3, 0.5]), 1, &cfg).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(exact_variance(&pv(&[0.2, 0.8]), 1, &cfg).is_err());
    }

    #[test]
    fn two_fair_draws() {
        let cfg = PrecisionConfig::default();
        let p = pv(&[0.5, 0.5]);
        let m = exact_mean(&p, 2, &cfg).unwrap();
        assert!((m.value - LN_2 / 2.0).abs() < 1e-15);
        let v = exact_variance(&p, 2, &cfg).unwrap();
        assert!((v.value - LN_2 * LN_2 / 4.0).abs() < 1e-15);
        let (em, ev) = enumerate_moments(&p, 2).unwrap();
        assert!((em - LN_2 / 2.0).abs() < 1e-15);
        assert!((ev - LN_2 * LN_2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_outcome() {
        let cfg = PrecisionConfig::default();
        let p = pv(&[1.0, 0.0]);
        assert_eq!(exact_variance(&p, 2, &cfg).unwrap().value, 0.0);
        assert_eq!(exact_mean(&p, 7, &cfg).unwrap().value, 0.0);
        assert_eq!(enumerate_moments(&p, 9).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn capacity_guards() {
        let cfg = PrecisionConfig::new(128, 50).unwrap();
        let p = pv(&[0.5, 0.5]);
        assert!(matches!(exact_mean(&p, 51, &cfg), Err(Error::Capacity(_))));
        assert!(PrecisionConfig::new(32, 50).is_err());
        let u = ProbabilityVector::uniform(24).unwrap();
        assert!(matches!(enumerate_moments(&u, 100), Err(Error::Capacity(_))));
    }

    #[test]
    fn three_bins_match_enumeration() {
        let cfg = PrecisionConfig::default();
        let p = pv(&[0.2, 0.3, 0.5]);
        let (em, ev) = enumerate_moments(&p, 6).unwrap();
        let m = exact_mean(&p, 6, &cfg).unwrap().value;
        let v = exact_variance(&p, 6, &cfg).unwrap().value;
        assert!((m - em).abs() <= 1e-12 * em, "{m} {em}");
        assert!((v - ev).abs() <= 1e-12 * ev, "{v} {ev}");
    }

    #[test]
    fn uniform_four_bins() {
        let cfg = PrecisionConfig::default();
        let p = ProbabilityVector::uniform(4).unwrap();
        let (em, _) = enumerate_moments(&p, 8).unwrap();
        let m = exact_mean(&p, 8, &cfg).unwrap().value;
        assert!((m - em).abs() <= 1e-12 * em);
    }
}
