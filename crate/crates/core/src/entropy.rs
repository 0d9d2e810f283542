//! Shannon entropy of a multinomial law and approximations to the moments
//! of the plug-in entropy `H(p̂)`.
//!
//! Everything is in nats. Three families of approximations are offered:
//!
//! * the first-order bias and variance ([`basharin_moments`]),
//! * second/third-order expansions in `1/n` ([`hutcheson_approx_moments`]),
//! * the delta-method variance of the asymptotic Normal law
//!   ([`asymptotic_variance`]), which together with the third-order mean
//!   forms the [`corrected_model`].

use core::fmt;

use libm::log;

use crate::error::{Error, Result};
use crate::simplex::ProbabilityVector;

/// Slack allowed when checking that an entropy lies in `[0, ln k]`.
pub const ENTROPY_TOLERANCE: f64 = 1e-12;

/// Which approximation produced a [`MomentEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    FirstOrder,
    SecondOrder,
    ThirdOrder,
    Asymptotic,
    CorrectedModel,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::FirstOrder => "first-order",
            Method::SecondOrder => "second-order",
            Method::ThirdOrder => "third-order",
            Method::Asymptotic => "asymptotic",
            Method::CorrectedModel => "corrected",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean (nats) and variance (nats²) of `H(p̂)` for `n` observations.
///
/// Approximate means are reported as computed: at very small `n` the
/// expansions can leave `[0, ln k]`, which is the expected breakdown of a
/// series in `1/n`, not something to clamp away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub method: Method,
    pub n: u64,
}

impl MomentEstimate {
    pub fn sd(&self) -> f64 {
        libm::sqrt(self.variance)
    }

    /// The same estimate divided by `ln k` (variance by `ln² k`).
    pub fn normalized(&self, k: usize) -> Self {
        let lk = log(k as f64);
        Self {
            mean: self.mean / lk,
            variance: self.variance / (lk * lk),
            ..*self
        }
    }

    /// The same estimate in bits.
    pub fn in_bits(&self) -> Self {
        let l2 = core::f64::consts::LN_2;
        Self {
            mean: self.mean / l2,
            variance: self.variance / (l2 * l2),
            ..*self
        }
    }
}

/// Normal law `N(mu, sigma2)` for `H(p̂)`, optionally on the `[0, 1]` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModel {
    pub mu: f64,
    pub sigma2: f64,
    pub normalized: bool,
}

impl NormalModel {
    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.sigma2)
    }

    /// The delta-method variance vanishes (uniform `p`): the Normal
    /// approximation carries no dispersion information.
    pub fn is_degenerate(&self) -> bool {
        self.sigma2 == 0.0
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * log(p)
    } else {
        0.0
    }
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    entropy_of(p.as_slice())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    let h = -p.iter().map(|&x| plogp(x)).sum::<f64>();
    // -0.0 for degenerate vectors
    h.max(0.0)
}

/// Entropy of the counts `c` (with total `n`), i.e. `H(c / n)`.
pub fn entropy_of_counts(counts: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / nf;
            q * log(q)
        })
        .sum::<f64>();
    h.max(0.0)
}

/// `h / ln k`.
pub fn normalize(h: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("normalization needs k >= 2"));
    }
    let lk = log(k as f64);
    if !(h >= -ENTROPY_TOLERANCE && h <= lk + ENTROPY_TOLERANCE) {
        return Err(Error::param(alloc::format!(
            "entropy {h} outside [0, ln {k}]"
        )));
    }
    Ok((h / lk).clamp(0.0, 1.0))
}

/// `Σ p (ln p - Σ p ln p)²` over the support of `p`; equals
/// `Σ p ln² p - H²(p)` and is zero when the support is uniform.
fn log_dispersion(p: &[f64]) -> f64 {
    let mut support = p.iter().copied().filter(|&x| x > 0.0);
    let first = support.next().unwrap_or(1.0);
    if support.all(|x| x == first) {
        return 0.0;
    }
    let mean_log: f64 = p.iter().map(|&x| plogp(x)).sum();
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let d = log(x) - mean_log;
            x * d * d
        })
        .sum()
}

fn check_n(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    Ok(n as f64)
}

/// First-order mean `H - (k-1)/(2n)` and variance `(Σ p ln² p - H²)/n`.
///
/// Zero bins contribute nothing (limit `p ln p -> 0`).
pub fn basharin_moments(p: &ProbabilityVector, n: u64) -> Result<MomentEstimate> {
    let nf = check_n(n)?;
    let k = p.k() as f64;
    Ok(MomentEstimate {
        mean: shannon_entropy(p) - (k - 1.0) / (2.0 * nf),
        variance: log_dispersion(p.as_slice()) / nf,
        method: Method::FirstOrder,
        n,
    })
}

/// Truncation order of [`hutcheson_approx_moments`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxOrder {
    /// Terms through `1/n²`.
    Second,
    /// Terms through `1/n³`.
    Third,
}

/// Mean and variance of `H(p̂)` expanded through `1/n²` or `1/n³`:
///
/// ```text
/// E ≈ H - (k-1)/(2n) + (1 - Σ 1/p)/(12n²) + Σ (1/p - 1/p²)/(12n³)
/// V ≈ (Σ p ln² p - (Σ p ln p)²)/n + (k-1)/(2n²)
///     + (Σ 1/p - Σ ln p / p + Σ 1/p · Σ p ln p - 1)/(6n³)
/// ```
pub fn hutcheson_approx_moments(
    p: &ProbabilityVector,
    n: u64,
    order: ApproxOrder,
) -> Result<MomentEstimate> {
    p.require_positive("the higher-order expansion")?;
    let nf = check_n(n)?;
    let k = p.k() as f64;
    let x = p.as_slice();

    let inv: f64 = x.iter().map(|&v| 1.0 / v).sum();
    let inv2: f64 = x.iter().map(|&v| 1.0 / (v * v)).sum();
    let log_over_p: f64 = x.iter().map(|&v| log(v) / v).sum();
    let plogp_sum: f64 = x.iter().map(|&v| plogp(v)).sum();
    let h = -plogp_sum;
    let (n2, n3) = (nf * nf, nf * nf * nf);

    let mut mean = h - (k - 1.0) / (2.0 * nf) + (1.0 - inv) / (12.0 * n2);
    let mut variance = log_dispersion(x) / nf + (k - 1.0) / (2.0 * n2);
    let method = match order {
        ApproxOrder::Second => Method::SecondOrder,
        ApproxOrder::Third => {
            mean += (inv - inv2) / (12.0 * n3);
            variance += (inv - log_over_p + inv * plogp_sum - 1.0) / (6.0 * n3);
            Method::ThirdOrder
        }
    };
    Ok(MomentEstimate {
        mean,
        variance,
        method,
        n,
    })
}

/// Delta-method variance of `H(p̂)`:
///
/// ```text
/// σ²(n, p) = (1/n) Σ p (1-p)(ln p + 1)² - (2/n) Σ_{j<l} p_j p_l (ln p_j + 1)(ln p_l + 1)
/// ```
///
/// evaluated in the equivalent centred form `(1/n) Σ p (ln p + H)²`, which
/// is nonnegative by construction and exactly zero at the uniform law.
pub fn asymptotic_variance(p: &ProbabilityVector, n: u64) -> Result<f64> {
    p.require_positive("the asymptotic variance")?;
    let nf = check_n(n)?;
    Ok(log_dispersion(p.as_slice()) / nf)
}

/// [`asymptotic_variance`] at a plug-in estimate, with empty bins taking
/// their limit value 0 in every term.
pub fn asymptotic_variance_plugin(p: &ProbabilityVector, n: u64) -> Result<f64> {
    let nf = check_n(n)?;
    Ok(log_dispersion(p.as_slice()) / nf)
}

/// Normal law with the third-order mean and the delta-method variance.
pub fn corrected_model(p: &ProbabilityVector, n: u64, normalized: bool) -> Result<NormalModel> {
    let third = hutcheson_approx_moments(p, n, ApproxOrder::Third)?;
    let sigma2 = asymptotic_variance(p, n)?;
    let model = NormalModel {
        mu: third.mean,
        sigma2,
        normalized: false,
    };
    Ok(if normalized {
        normalize_model(model, p.k())
    } else {
        model
    })
}

pub(crate) fn normalize_model(m: NormalModel, k: usize) -> NormalModel {
    let lk = log(k as f64);
    NormalModel {
        mu: m.mu / lk,
        sigma2: m.sigma2 / (lk * lk),
        normalized: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn pv(x: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(x.to_vec()).unwrap()
    }

    fn linear(k: usize) -> ProbabilityVector {
        let s = (k * (k + 1) / 2) as f64;
        pv(&(1..=k).map(|l| l as f64 / s).collect::<Vec<_>>())
    }

    #[test]
    fn entropy_extremes() {
        let u = ProbabilityVector::uniform(6).unwrap();
        assert!((shannon_entropy(&u) - log(6.0)).abs() < 1e-15);
        assert_eq!(shannon_entropy(&pv(&[1.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn linear_law_entropy() {
        let h = shannon_entropy(&linear(6));
        assert!((h - 1.66238).abs() < 5e-6, "{h}");
        assert!((normalize(h, 6).unwrap() - 0.92779).abs() < 5e-6);
    }

    #[test]
    fn normalize_bounds() {
        assert!((normalize(log(6.0), 6).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(normalize(0.0, 720).unwrap(), 0.0);
        assert!(normalize(-0.1, 6).is_err());
        assert!(normalize(2.0, 6).is_err());
        assert!((normalize(1.66238, 6).unwrap() - 0.92779).abs() < 5e-6);
    }

    #[test]
    fn basharin_values() {
        let m = basharin_moments(&linear(6), 300).unwrap();
        assert!((m.mean - 1.654_043_6).abs() < 1e-7, "{}", m.mean);

        let p = pv(&[0.25, 0.75]);
        let h = -(0.25 * log(0.25) + 0.75 * log(0.75));
        let direct = (0.25 * log(0.25) * log(0.25) + 0.75 * log(0.75) * log(0.75) - h * h) / 100.0;
        let m = basharin_moments(&p, 100).unwrap();
        assert!((m.variance - direct).abs() < 1e-15);

        let u = pv(&[0.5, 0.5]);
        let m = basharin_moments(&u, 1_000_000).unwrap();
        assert!((m.mean - log(2.0)).abs() < 1e-6);
        assert_eq!(m.variance, 0.0);
        assert!(basharin_moments(&u, 0).is_err());
    }

    #[test]
    fn third_order_linear_k6() {
        let m = hutcheson_approx_moments(&linear(6), 300, ApproxOrder::Third).unwrap();
        assert!((m.mean - 1.65400).abs() < 5e-5, "{}", m.mean);
        assert!((m.mean / log(6.0) - 0.92312).abs() < 5e-5);
        let s = hutcheson_approx_moments(&linear(6), 300, ApproxOrder::Second).unwrap();
        assert_eq!(s.method, Method::SecondOrder);
        assert!((s.mean - m.mean).abs() < 5e-6);
    }

    #[test]
    fn zero_bins_rejected_where_needed() {
        let p = pv(&[0.5, 0.5, 0.0]);
        assert_eq!(
            hutcheson_approx_moments(&p, 10, ApproxOrder::Third).unwrap_err(),
            Error::Domain {
                bin: 2,
                context: "the higher-order expansion"
            }
        );
        assert!(matches!(asymptotic_variance(&p, 10), Err(Error::Domain { bin: 2, .. })));
        assert!(corrected_model(&p, 10, false).is_err());
        assert!(basharin_moments(&p, 10).is_ok());
        assert_eq!(asymptotic_variance_plugin(&p, 10).unwrap(), 0.0);
    }

    #[test]
    fn uniform_is_degenerate() {
        for k in [2, 6, 24, 120, 720] {
            let u = ProbabilityVector::uniform(k).unwrap();
            assert_eq!(asymptotic_variance(&u, 1000).unwrap(), 0.0);
            assert!(corrected_model(&u, 1000, true).unwrap().is_degenerate());
        }
    }

    #[test]
    fn variance_scales_with_n() {
        let p = linear(24);
        let v1 = asymptotic_variance(&p, 1).unwrap();
        for n in [10u64, 1000, 123_457] {
            let vn = asymptotic_variance(&p, n).unwrap();
            assert!((vn - v1 / n as f64).abs() <= 1e-15 * v1);
        }
    }

    #[test]
    fn corrected_model_linear() {
        let m = corrected_model(&linear(6), 300, true).unwrap();
        assert!((m.mu - 0.92312).abs() < 5e-5);
        assert!((m.mu - 0.92309).abs() < 5e-4);
        let m = corrected_model(&linear(6), 6000, true).unwrap();
        assert!((m.mu - 0.92756).abs() < 5e-6, "{}", m.mu);
        assert!(m.normalized && !m.is_degenerate());
    }

    #[test]
    fn approximations_converge() {
        let p = linear(6);
        let h = shannon_entropy(&p);
        let mut prev = vec![f64::INFINITY; 3];
        for n in [100u64, 10_000, 1_000_000] {
            let means = [
                basharin_moments(&p, n).unwrap().mean,
                hutcheson_approx_moments(&p, n, ApproxOrder::Second).unwrap().mean,
                hutcheson_approx_moments(&p, n, ApproxOrder::Third).unwrap().mean,
            ];
            for (i, m) in means.iter().enumerate() {
                assert!(*m <= log(6.0));
                let err = (m - h).abs();
                assert!(err < prev[i]);
                prev[i] = err;
            }
        }
    }
}
