//! Thin helpers over `astro-float` with a fixed working precision.

use alloc::vec::Vec;

use astro_float::{BigFloat, Consts, RoundingMode, Sign, Word, WORD_BIT_SIZE};
use num_bigint::BigUint;

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Working context: precision in bits plus a constants cache.
pub(crate) struct Ctx {
    pub bits: usize,
    cc: Consts,
}

impl Ctx {
    pub fn new(bits: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Precision {
            bits,
            detail: alloc::format!("cannot initialise constants cache: {e:?}"),
        })?;
        Ok(Self { bits, cc })
    }

    pub fn zero(&self) -> BigFloat {
        BigFloat::from_word(0, self.bits)
    }

    pub fn int(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.bits)
    }

    /// Exact conversion (53 significant bits always fit).
    pub fn float(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn biguint(&self, x: &BigUint) -> BigFloat {
        let words = biguint_words(x);
        if words.is_empty() {
            return self.zero();
        }
        let e = (words.len() * WORD_BIT_SIZE) as i32;
        let mut f = BigFloat::from_words(&words, Sign::Pos, e);
        // rounding to the working precision keeps later products cheap
        let _ = f.set_precision(self.bits, RM);
        f
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.bits, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.bits, RM, &mut self.cc)
    }

    /// `ln 1, ln 2, …, ln n` (index 0 holds `ln 1`).
    pub fn ln_table(&mut self, n: usize) -> Vec<BigFloat> {
        (1..=n as u64).map(|i| {
            let x = self.int(i);
            self.ln(&x)
        }).collect()
    }

    /// `2^e`.
    pub fn pow2(&self, e: i32) -> BigFloat {
        let mut one = self.int(1);
        // 1 = 0.1b × 2^1
        one.set_exponent(1 + e);
        one
    }

    pub fn check(&self, x: &BigFloat, what: &str) -> Result<()> {
        if x.is_nan() || x.is_inf() {
            return Err(Error::Precision {
                bits: self.bits,
                detail: alloc::format!("{what} is not a finite number"),
            });
        }
        Ok(())
    }
}

fn biguint_words(x: &BigUint) -> Vec<Word> {
    let digits = x.to_u32_digits();
    let per = WORD_BIT_SIZE / 32;
    digits
        .chunks(per)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0 as Word, |acc, (i, &d)| acc | ((d as Word) << (32 * i)))
        })
        .collect()
}

/// Nearest `f64` (within one ulp) of a finite big float.
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((m, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let len = m.len();
    let hi = m[len - 1] as f64;
    let lo = if len > 1 { m[len - 2] as f64 } else { 0.0 };
    let w = WORD_BIT_SIZE as i32;
    let v = libm::ldexp(hi, e - w) + libm::ldexp(lo, e - 2 * w);
    match sign {
        Sign::Neg => -v,
        Sign::Pos => v,
    }
}

/// `|a - b|` as an `f64`.
pub(crate) fn abs_diff(ctx: &Ctx, a: &BigFloat, b: &BigFloat) -> f64 {
    to_f64(&ctx.sub(a, b)).abs()
}

/// Decomposes a finite nonnegative `f64` as `m · 2^e` with integer `m`.
pub(crate) fn dyadic(x: f64) -> (u64, i32) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}
