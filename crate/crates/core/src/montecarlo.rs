//! Scenario laws, seeded multinomial sampling, replicate summaries and the
//! accuracy grid comparing approximate means with certified values.
//!
//! Randomness is counter based: replicate `i` of master seed `s` draws from
//! a ChaCha8 stream keyed by `(s, i)`, so replicates can run in any order or
//! on any number of threads and still produce identical values.

use alloc::vec::Vec;
use core::fmt;

use libm::{log, log10, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::entropy::{
    basharin_moments, entropy_of_counts, hutcheson_approx_moments, shannon_entropy, ApproxOrder,
};
use crate::error::{Error, Result};
use crate::exact::{exact_mean, PrecisionConfig};
use crate::ordinal::PatternHistogram;
use crate::simplex::ProbabilityVector;

/// Underlying laws used in the accuracy experiments.
///
/// `epsilon: None` selects the default perturbation `1/(2k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    /// `p_l = 1/k`.
    Equiprobable,
    /// `1/k` everywhere except `p_{k-1} = 1/k + ε`, `p_k = 1/k - ε`.
    TwoPerturbed { epsilon: Option<f64> },
    /// `1/k - ε` on bins `1..=k/2`, `1/k + ε` on bins `k/2+1..=k`.
    HalfPerturbed { epsilon: Option<f64> },
    /// `p_l = l / Σ j`.
    Linear,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Equiprobable => "equiprobable",
            Scenario::TwoPerturbed { .. } => "two-perturbed",
            Scenario::HalfPerturbed { .. } => "half-perturbed",
            Scenario::Linear => "linear",
        }
    }

    /// Perturbation actually applied for `k` bins (`None` when unused).
    pub fn epsilon(&self, k: usize) -> Option<f64> {
        match self {
            Scenario::TwoPerturbed { epsilon } | Scenario::HalfPerturbed { epsilon } => {
                Some(epsilon.unwrap_or(1.0 / (2.0 * k as f64)))
            }
            _ => None,
        }
    }

    pub fn probabilities(&self, k: usize) -> Result<ProbabilityVector> {
        if k < 2 {
            return Err(Error::param("scenario needs k >= 2"));
        }
        let base = 1.0 / k as f64;
        if let Some(eps) = self.epsilon(k) {
            if !(eps > 0.0 && eps < base) {
                return Err(Error::param(alloc::format!(
                    "epsilon {eps} outside (0, 1/{k})"
                )));
            }
        }
        let p = match *self {
            Scenario::Equiprobable => alloc::vec![base; k],
            Scenario::TwoPerturbed { .. } => {
                let eps = self.epsilon(k).unwrap_or_default();
                let mut p = alloc::vec![base; k];
                p[k - 2] = base + eps;
                p[k - 1] = base - eps;
                p
            }
            Scenario::HalfPerturbed { .. } => {
                if k % 2 != 0 {
                    return Err(Error::param(alloc::format!(
                        "the half-perturbed law needs an even k, got {k}"
                    )));
                }
                let eps = self.epsilon(k).unwrap_or_default();
                (0..k)
                    .map(|l| if l < k / 2 { base - eps } else { base + eps })
                    .collect()
            }
            Scenario::Linear => {
                let total = (k * (k + 1) / 2) as f64;
                (1..=k).map(|l| l as f64 / total).collect()
            }
        };
        ProbabilityVector::new(p)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        match self {
            Scenario::TwoPerturbed { epsilon: Some(e) } | Scenario::HalfPerturbed { epsilon: Some(e) } => {
                write!(f, ":{e}")
            }
            _ => Ok(()),
        }
    }
}

impl core::str::FromStr for Scenario {
    type Err = Error;

    /// `equiprobable`, `two-perturbed[:EPS]`, `half-perturbed[:EPS]`,
    /// `linear` (short forms `e`, `p2`, `h`, `l`).
    fn from_str(s: &str) -> Result<Self> {
        let (name, eps) = match s.split_once(':') {
            Some((name, eps)) => {
                let e: f64 = eps
                    .parse()
                    .map_err(|_| Error::param(alloc::format!("bad epsilon {eps:?}")))?;
                (name, Some(e))
            }
            None => (s, None),
        };
        let scenario = match name {
            "equiprobable" | "e" => Scenario::Equiprobable,
            "two-perturbed" | "p2" => Scenario::TwoPerturbed { epsilon: eps },
            "half-perturbed" | "h" => Scenario::HalfPerturbed { epsilon: eps },
            "linear" | "l" => Scenario::Linear,
            _ => return Err(Error::param(alloc::format!("unknown scenario {name:?}"))),
        };
        if eps.is_some() && matches!(scenario, Scenario::Equiprobable | Scenario::Linear) {
            return Err(Error::param(alloc::format!("scenario {name} takes no epsilon")));
        }
        Ok(scenario)
    }
}

/// Random stream for replicate `index` under `master_seed`.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws `Mult(n, p)` counts by sequential conditional binomials.
pub fn multinomial_counts<R: Rng + ?Sized>(p: &ProbabilityVector, n: u64, rng: &mut R) -> Vec<u64> {
    let x = p.as_slice();
    let k = x.len();
    // tail[l] = Σ_{j >= l} p_j
    let mut tail = alloc::vec![0.0; k + 1];
    for l in (0..k).rev() {
        tail[l] = tail[l + 1] + x[l];
    }
    let mut counts = alloc::vec![0u64; k];
    let mut left = n;
    for l in 0..k - 1 {
        if left == 0 {
            break;
        }
        let prob = if tail[l] > 0.0 { (x[l] / tail[l]).clamp(0.0, 1.0) } else { 1.0 };
        let c = if prob >= 1.0 {
            left
        } else if prob <= 0.0 {
            0
        } else {
            Binomial::new(left, prob)
                .map(|b| b.sample(rng))
                .unwrap_or(0)
        };
        counts[l] = c;
        left -= c;
    }
    counts[k - 1] += left;
    counts
}

/// `Mult(n, p)` histogram from the stream of replicate 0 under `seed`.
pub fn sample_multinomial(p: &ProbabilityVector, n: u64, seed: u64) -> Result<PatternHistogram> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let counts = multinomial_counts(p, n, &mut replicate_rng(seed, 0));
    PatternHistogram::from_counts(counts, None)
}

/// Plug-in entropy of replicate `index`.
pub fn replicate_value(p: &ProbabilityVector, n: u64, master_seed: u64, index: u64, normalized: bool) -> f64 {
    let counts = multinomial_counts(p, n, &mut replicate_rng(master_seed, index));
    let h = entropy_of_counts(&counts, n);
    if normalized {
        h / log(p.k() as f64)
    } else {
        h
    }
}

/// Normal-theory 95% half-widths for each summary statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWidths {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Location, dispersion and shape of a replicate sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateSummary {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// `m3 / m2^{3/2}`; 0 for a constant sample.
    pub skewness: f64,
    /// `m4 / m2² - 3`; 0 for a constant sample.
    pub excess_kurtosis: f64,
    pub ci_halfwidths: HalfWidths,
    pub replicates: u64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl ReplicateSummary {
    /// Summarizes `samples` in index order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let count = samples.len();
        if count < 2 {
            return Err(Error::param("a summary needs at least 2 replicates"));
        }
        let nf = count as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in samples {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        let sd = sqrt(m2 / (nf - 1.0));
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / (m2 * sqrt(m2)), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };

        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
        };

        let root_n = sqrt(nf);
        let ci_halfwidths = HalfWidths {
            mean: Z95 * sd / root_n,
            median: Z95 * sd * sqrt(core::f64::consts::FRAC_PI_2) / root_n,
            sd: Z95 * sd / sqrt(2.0 * nf),
            skewness: Z95 * sqrt(6.0 / nf),
            excess_kurtosis: Z95 * sqrt(24.0 / nf),
        };
        Ok(Self {
            mean,
            median,
            sd,
            skewness,
            excess_kurtosis,
            ci_halfwidths,
            replicates: count as u64,
        })
    }
}

/// Replicate values in index order together with their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicates {
    pub summary: ReplicateSummary,
    pub samples: Vec<f64>,
}

/// `replicates` independent plug-in entropies of `Mult(n, p)` samples.
pub fn replicate_entropy(
    p: &ProbabilityVector,
    n: u64,
    replicates: u64,
    seed: u64,
    normalized: bool,
) -> Result<Replicates> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if replicates < 2 {
        return Err(Error::param("at least 2 replicates are needed"));
    }
    let samples: Vec<f64> = (0..replicates)
        .map(|i| replicate_value(p, n, seed, i, normalized))
        .collect();
    Ok(Replicates {
        summary: ReplicateSummary::from_samples(&samples)?,
        samples,
    })
}

/// Log relative error `-log10(|x - c| / |c|)` (`-log10 |x|` when `c = 0`);
/// `+inf` on exact agreement.
pub fn lre(x: f64, c: f64) -> f64 {
    let r = re(x, c);
    if r == 0.0 {
        f64::INFINITY
    } else {
        -log10(r)
    }
}

/// Relative error `|x - c| / |c|` (`|x|` when `c = 0`).
pub fn re(x: f64, c: f64) -> f64 {
    if c != 0.0 {
        (x - c).abs() / c.abs()
    } else {
        x.abs()
    }
}

/// Approximation of `E[H(p̂)]` compared in the accuracy grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMethod {
    FirstOrder,
    SecondOrder,
    ThirdOrder,
    /// The asymptotic mean, `H(p)` itself.
    Asymptotic,
}

impl GridMethod {
    pub fn name(self) -> &'static str {
        match self {
            GridMethod::FirstOrder => "first-order",
            GridMethod::SecondOrder => "second-order",
            GridMethod::ThirdOrder => "third-order",
            GridMethod::Asymptotic => "asymptotic",
        }
    }

    pub fn approximate_mean(self, p: &ProbabilityVector, n: u64) -> Result<f64> {
        Ok(match self {
            GridMethod::FirstOrder => basharin_moments(p, n)?.mean,
            GridMethod::SecondOrder => hutcheson_approx_moments(p, n, ApproxOrder::Second)?.mean,
            GridMethod::ThirdOrder => hutcheson_approx_moments(p, n, ApproxOrder::Third)?.mean,
            GridMethod::Asymptotic => shannon_entropy(p),
        })
    }
}

impl core::str::FromStr for GridMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-order" | "first" => Ok(GridMethod::FirstOrder),
            "second-order" | "second" => Ok(GridMethod::SecondOrder),
            "third-order" | "third" => Ok(GridMethod::ThirdOrder),
            "asymptotic" => Ok(GridMethod::Asymptotic),
            _ => Err(Error::param(alloc::format!("unknown method {s:?}"))),
        }
    }
}

/// Simulation used when the exact mean cannot be certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationFallback {
    pub replicates: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub scenarios: Vec<Scenario>,
    pub ks: Vec<usize>,
    pub ns: Vec<u64>,
    pub methods: Vec<GridMethod>,
    pub precision: PrecisionConfig,
    pub fallback: Option<SimulationFallback>,
}

/// Where a cell's certified value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifiedSource {
    Exact,
    Simulation,
    Unavailable,
}

impl CertifiedSource {
    pub fn name(self) -> &'static str {
        match self {
            CertifiedSource::Exact => "exact",
            CertifiedSource::Simulation => "simulation",
            CertifiedSource::Unavailable => "unavailable",
        }
    }
}

/// One (scenario, k, n, method) comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub scenario: Scenario,
    pub epsilon: Option<f64>,
    pub k: usize,
    pub n: u64,
    pub method: GridMethod,
    pub source: CertifiedSource,
    pub certified: Option<f64>,
    pub approximation: f64,
    pub re: Option<f64>,
    pub lre: Option<f64>,
}

impl GridCell {
    /// Integer part of the LRE (number of correct significant digits);
    /// `None` when unavailable or infinite.
    pub fn lre_digits(&self) -> Option<i64> {
        self.lre.filter(|v| v.is_finite()).map(|v| libm::floor(v) as i64)
    }
}

/// Certified value of `E[H(p̂)]`: the exact mean when it can be certified,
/// else the replicate mean when a fallback is configured.
pub fn certified_mean(
    p: &ProbabilityVector,
    n: u64,
    precision: &PrecisionConfig,
    fallback: Option<SimulationFallback>,
) -> Result<(CertifiedSource, Option<f64>)> {
    match exact_mean(p, n, precision) {
        Ok(c) => Ok((CertifiedSource::Exact, Some(c.value))),
        Err(e) if e.is_numerical() => match fallback {
            Some(sim) => {
                let r = replicate_entropy(p, n, sim.replicates, sim.seed, false)?;
                Ok((CertifiedSource::Simulation, Some(r.summary.mean)))
            }
            None => Ok((CertifiedSource::Unavailable, None)),
        },
        Err(e) => Err(e),
    }
}

/// Flat table of relative errors of each approximation, per cell.
pub fn accuracy_grid(spec: &GridSpec) -> Result<Vec<GridCell>> {
    let mut cells = Vec::new();
    for &scenario in &spec.scenarios {
        for &k in &spec.ks {
            let p = scenario.probabilities(k)?;
            for &n in &spec.ns {
                let (source, certified) = certified_mean(&p, n, &spec.precision, spec.fallback)?;
                for &method in &spec.methods {
                    let approximation = method.approximate_mean(&p, n)?;
                    cells.push(GridCell {
                        scenario,
                        epsilon: scenario.epsilon(k),
                        k,
                        n,
                        method,
                        source,
                        certified,
                        approximation,
                        re: certified.map(|c| re(approximation, c)),
                        lre: certified.map(|c| lre(approximation, c)),
                    });
                }
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use alloc::string::ToString;
    use super::*;

    #[test]
    fn scenario_vectors() {
        let l = Scenario::Linear.probabilities(6).unwrap();
        for (i, &x) in l.as_slice().iter().enumerate() {
            assert!((x - (i + 1) as f64 / 21.0).abs() < 1e-16);
        }
        assert_eq!(Scenario::Equiprobable.probabilities(4).unwrap().as_slice(), &[0.25; 4]);

        let two = Scenario::TwoPerturbed { epsilon: Some(1.0 / 12.0) }.probabilities(6).unwrap();
        let x = two.as_slice();
        assert!((x[4] - 0.25).abs() < 1e-15 && (x[5] - 1.0 / 12.0).abs() < 1e-15);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let half = Scenario::HalfPerturbed { epsilon: None }.probabilities(6).unwrap();
        assert!((half.as_slice()[2] - 1.0 / 12.0).abs() < 1e-15);
        assert!((half.as_slice()[3] - 0.25).abs() < 1e-15);
        assert!(Scenario::HalfPerturbed { epsilon: None }.probabilities(5).is_err());
        assert!(Scenario::TwoPerturbed { epsilon: Some(0.2) }.probabilities(6).is_err());
        assert!(Scenario::TwoPerturbed { epsilon: Some(0.0) }.probabilities(6).is_err());
    }

    #[test]
    fn scenario_parse() {
        assert_eq!("linear".parse::<Scenario>().unwrap(), Scenario::Linear);
        assert_eq!(
            "p2:0.05".parse::<Scenario>().unwrap(),
            Scenario::TwoPerturbed { epsilon: Some(0.05) }
        );
        assert!("linear:0.1".parse::<Scenario>().is_err());
        assert!("nope".parse::<Scenario>().is_err());
        assert_eq!(Scenario::HalfPerturbed { epsilon: Some(0.01) }.to_string(), "half-perturbed:0.01");
    }

    #[test]
    fn multinomial_basics() {
        let p = ProbabilityVector::new(alloc::vec![1.0, 0.0]).unwrap();
        assert_eq!(sample_multinomial(&p, 50, 3).unwrap().counts(), &[50, 0]);
        let q = Scenario::Linear.probabilities(24).unwrap();
        for seed in 0..20 {
            assert_eq!(sample_multinomial(&q, 1234, seed).unwrap().n(), 1234);
        }
        assert_eq!(
            sample_multinomial(&q, 500, 9).unwrap(),
            sample_multinomial(&q, 500, 9).unwrap()
        );
    }

    #[test]
    fn degenerate_replicates() {
        let p = ProbabilityVector::new(alloc::vec![1.0, 0.0, 0.0]).unwrap();
        let r = replicate_entropy(&p, 100, 50, 1, true).unwrap();
        assert!(r.samples.iter().all(|&h| h == 0.0));
        assert_eq!(r.summary.sd, 0.0);
        assert!(replicate_entropy(&p, 100, 1, 1, true).is_err());
    }

    #[test]
    fn summary_of_known_sample() {
        let s = ReplicateSummary::from_samples(&[1.0, 2.0, 3.0, 4.0, 10.0]).unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 3.0);
        assert!((s.sd - sqrt(12.5)).abs() < 1e-15);
        // central moments: m2 = 10, m3 = 36, m4 = 1 + 16 + 9 + 256 + 81... /5
        let m2 = 50.0 / 5.0;
        let m3 = (-27.0 - 8.0 - 1.0 + 0.0 + 216.0) / 5.0;
        let m4 = (81.0 + 16.0 + 1.0 + 0.0 + 1296.0) / 5.0;
        assert!((s.skewness - m3 / (m2 * sqrt(m2))).abs() < 1e-14);
        assert!((s.excess_kurtosis - (m4 / (m2 * m2) - 3.0)).abs() < 1e-14);
        let big = ReplicateSummary::from_samples(&alloc::vec![0.5; 1_000_000]).unwrap();
        assert!((big.ci_halfwidths.skewness - 4.80e-3).abs() < 5e-6);
        assert!((big.ci_halfwidths.excess_kurtosis - 9.60e-3).abs() < 5e-6);
    }

    #[test]
    fn relative_errors() {
        assert!((lre(1.001, 1.0) - 3.0).abs() < 1e-9);
        assert!((lre(0.001, 0.0) - 3.0).abs() < 1e-12);
        let l = lre(0.92309, 0.92779);
        assert!((l - 2.295).abs() < 1e-3);
        assert_eq!(libm::floor(l), 2.0);
        assert!((re(0.92309, 0.92779) - 5.07e-3).abs() < 1e-5);
        assert_eq!(re(0.7, 0.7), 0.0);
        assert_eq!(lre(0.7, 0.7), f64::INFINITY);
        assert_eq!(re(0.5, 0.0), 0.5);
    }
}
