//! Bandt–Pompe symbolization: time series to ordinal-pattern sequences and
//! pattern histograms.
//!
//! A window `(x_j, …, x_{j+D-1})` is mapped to the permutation that sorts it
//! in ascending order, and that permutation is labelled by its lexicographic
//! rank among all `D!` permutations (factorial number system). The ascending
//! window is therefore pattern `0` and the descending window pattern `D! - 1`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported embedding dimension (`8! = 40320` patterns).
pub const MAX_EMBEDDING: usize = 8;

/// Rule of thumb for reliable histograms: at least this many patterns per bin.
pub const PATTERNS_PER_BIN: u64 = 100;

/// `n!` for small `n`.
pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Ordered, finite, real-valued samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    label: String,
    source: Option<String>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if samples.len() < 2 {
            return Err(Error::param("a time series needs at least 2 samples"));
        }
        Ok(Self {
            samples,
            label: label.into(),
            source: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// How equal values inside a window are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Any tie inside a window is an error.
    #[default]
    Reject,
    /// The earlier sample is treated as the smaller one.
    StableOrder,
    /// Ties are broken by per-sample random keys drawn from a seeded stream.
    Jitter(u64),
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TiePolicy::Reject => f.write_str("reject"),
            TiePolicy::StableOrder => f.write_str("stable"),
            TiePolicy::Jitter(seed) => write!(f, "jitter:{seed}"),
        }
    }
}

impl core::str::FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(TiePolicy::Reject),
            "stable" => Ok(TiePolicy::StableOrder),
            _ => match s.strip_prefix("jitter:") {
                Some(seed) => seed
                    .parse()
                    .map(TiePolicy::Jitter)
                    .map_err(|_| Error::param(alloc::format!("bad jitter seed {seed:?}"))),
                None => Err(Error::param(alloc::format!(
                    "unknown tie policy {s:?} (expected reject, stable or jitter:SEED)"
                ))),
            },
        }
    }
}

/// Sequence of pattern indices in `[0, D!)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSequence {
    indices: Vec<u32>,
    dimension: usize,
}

impl PatternSequence {
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn k(&self) -> usize {
        factorial(self.dimension)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_dimension(dimension: usize) -> Result<()> {
    if !(2..=MAX_EMBEDDING).contains(&dimension) {
        return Err(Error::param(alloc::format!(
            "embedding dimension {dimension} outside 2..={MAX_EMBEDDING}"
        )));
    }
    Ok(())
}

/// Lexicographic rank of a permutation of `0..perm.len()`.
pub fn permutation_rank(perm: &[usize]) -> usize {
    let d = perm.len();
    let mut rank = 0;
    for i in 0..d {
        let smaller_after = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        rank += smaller_after * factorial(d - 1 - i);
    }
    rank
}

/// Maps every length-`dimension` window of `series` to its ordinal pattern.
pub fn symbolize(series: &TimeSeries, dimension: usize, ties: TiePolicy) -> Result<PatternSequence> {
    check_dimension(dimension)?;
    let x = series.samples();
    if x.len() < dimension {
        return Err(Error::param(alloc::format!(
            "series of length {} is shorter than the embedding dimension {dimension}",
            x.len()
        )));
    }

    let keys: Option<Vec<u64>> = match ties {
        TiePolicy::Jitter(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Some((0..x.len()).map(|_| rng.next_u64()).collect())
        }
        _ => None,
    };

    let windows = x.len() - dimension + 1;
    let mut indices = Vec::with_capacity(windows);
    let mut order = [0usize; MAX_EMBEDDING];
    for j in 0..windows {
        let w = &x[j..j + dimension];
        if ties == TiePolicy::Reject && has_tie(w) {
            return Err(Error::Tie { window: j });
        }
        let order = &mut order[..dimension];
        for (i, slot) in order.iter_mut().enumerate() {
            *slot = i;
        }
        // insertion sort keeps equal values in sample order (StableOrder)
        for i in 1..dimension {
            let mut m = i;
            while m > 0 {
                let (a, b) = (order[m - 1], order[m]);
                let cmp = match w[a].partial_cmp(&w[b]).unwrap_or(Ordering::Equal) {
                    Ordering::Equal => match &keys {
                        Some(keys) => keys[j + a].cmp(&keys[j + b]),
                        None => Ordering::Less,
                    },
                    other => other,
                };
                if cmp == Ordering::Greater {
                    order.swap(m - 1, m);
                    m -= 1;
                } else {
                    break;
                }
            }
        }
        indices.push(permutation_rank(order) as u32);
    }

    Ok(PatternSequence { indices, dimension })
}

/// Number of length-`dimension` windows containing at least one tie.
pub fn tied_windows(series: &TimeSeries, dimension: usize) -> usize {
    let x = series.samples();
    if dimension < 2 || x.len() < dimension {
        return 0;
    }
    x.windows(dimension).filter(|w| has_tie(w)).count()
}

fn has_tie(w: &[f64]) -> bool {
    w.iter()
        .enumerate()
        .any(|(i, a)| w[i + 1..].iter().any(|b| a == b))
}

/// Counts of each of the `k` patterns over `n` observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternHistogram {
    counts: Vec<u64>,
    n: u64,
    dimension: Option<usize>,
}

impl PatternHistogram {
    /// Builds a histogram from raw counts. `dimension` is the embedding
    /// dimension when the counts come from symbolization (then `k = D!`).
    pub fn from_counts(counts: Vec<u64>, dimension: Option<usize>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::param("a histogram needs at least 2 bins"));
        }
        if let Some(d) = dimension {
            check_dimension(d)?;
            if counts.len() != factorial(d) {
                return Err(Error::param(alloc::format!(
                    "{} bins do not match embedding dimension {d} ({} patterns)",
                    counts.len(),
                    factorial(d)
                )));
            }
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::param("histogram has no observations"));
        }
        Ok(Self { counts, n, dimension })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    /// Relative frequencies `N_l / n`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Number of empty bins.
    pub fn zero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Counts how often each pattern occurs.
pub fn histogram(patterns: &PatternSequence) -> Result<PatternHistogram> {
    if patterns.is_empty() {
        return Err(Error::param("cannot build a histogram from an empty pattern sequence"));
    }
    let mut counts = vec![0u64; patterns.k()];
    for &i in patterns.indices() {
        counts[i as usize] += 1;
    }
    PatternHistogram::from_counts(counts, Some(patterns.dimension()))
}

/// Emitted when a histogram has fewer than `100 k` observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSizeAdvisory {
    pub n: u64,
    pub k: u64,
    pub recommended: u64,
}

impl fmt::Display for SampleSizeAdvisory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "only {} patterns for {} bins; at least {} are recommended",
            self.n, self.k, self.recommended
        )
    }
}

pub fn sample_size_warning(n: u64, k: u64) -> Option<SampleSizeAdvisory> {
    let recommended = PATTERNS_PER_BIN.saturating_mul(k);
    (n < recommended).then_some(SampleSizeAdvisory { n, k, recommended })
}

#[cfg(test)]
mod tests {
    use alloc::string::ToString;
    use super::*;

    fn series(x: &[f64]) -> TimeSeries {
        TimeSeries::new(x.to_vec(), "t").unwrap()
    }

    /// All permutations of 0..d in lexicographic order (next-permutation).
    fn lexicographic_permutations(d: usize) -> Vec<Vec<usize>> {
        let mut p: Vec<usize> = (0..d).collect();
        let mut out = vec![p.clone()];
        loop {
            let Some(i) = (0..d - 1).rev().find(|&i| p[i] < p[i + 1]) else {
                return out;
            };
            let j = (i + 1..d).rev().find(|&j| p[j] > p[i]).unwrap();
            p.swap(i, j);
            p[i + 1..].reverse();
            out.push(p.clone());
        }
    }

    #[test]
    fn ascending_and_descending() {
        let s = symbolize(&series(&[1.0, 2.0, 3.0]), 3, TiePolicy::Reject).unwrap();
        assert_eq!(s.indices(), &[0]);
        let s = symbolize(&series(&[3.0, 2.0, 1.0]), 3, TiePolicy::Reject).unwrap();
        assert_eq!(s.indices(), &[5]);
    }

    #[test]
    fn every_pattern_gets_its_lexicographic_rank() {
        for d in 2..=5 {
            for (rank, perm) in lexicographic_permutations(d).iter().enumerate() {
                // perm lists sample indices from smallest to largest value
                let mut w = vec![0.0; d];
                for (r, &idx) in perm.iter().enumerate() {
                    w[idx] = r as f64;
                }
                let s = symbolize(&series(&w), d, TiePolicy::Reject).unwrap();
                assert_eq!(s.indices(), &[rank as u32], "d={d} perm={perm:?}");
            }
        }
    }

    #[test]
    fn mixed_window() {
        // first window (0.5, 1.7, 0.2) has ranks (mid, high, low): sorting
        // permutation (2, 0, 1); second window (1.7, 0.2, 0.9) sorts as (1, 2, 0)
        let s = symbolize(&series(&[0.5, 1.7, 0.2, 0.9]), 3, TiePolicy::Reject).unwrap();
        let perms = lexicographic_permutations(3);
        let first = perms.iter().position(|p| p == &[2, 0, 1]).unwrap();
        let second = perms.iter().position(|p| p == &[1, 2, 0]).unwrap();
        assert_eq!(s.indices(), &[first as u32, second as u32]);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn ties() {
        let x = series(&[1.0, 2.0, 3.0, 3.0, 4.0]);
        assert_eq!(
            symbolize(&x, 3, TiePolicy::Reject),
            Err(Error::Tie { window: 1 })
        );
        let s = symbolize(&x, 3, TiePolicy::StableOrder).unwrap();
        assert_eq!(s.indices(), &[0, 0, 0]);
        let a = symbolize(&x, 3, TiePolicy::Jitter(7)).unwrap();
        let b = symbolize(&x, 3, TiePolicy::Jitter(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.indices()[0], 0);
        assert_eq!(tied_windows(&x, 3), 2);
        assert_eq!(tied_windows(&x, 2), 1);
    }

    #[test]
    fn parameter_errors() {
        let x = series(&[1.0, 2.0, 3.0]);
        assert!(matches!(symbolize(&x, 1, TiePolicy::Reject), Err(Error::Parameter(_))));
        assert!(matches!(symbolize(&x, 9, TiePolicy::Reject), Err(Error::Parameter(_))));
        assert!(matches!(symbolize(&x, 4, TiePolicy::Reject), Err(Error::Parameter(_))));
        assert!(matches!(
            TimeSeries::new(alloc::vec![1.0, f64::NAN], "x"),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(TimeSeries::new(alloc::vec![1.0], "x").is_err());
    }

    #[test]
    fn histogram_counts() {
        let seq = PatternSequence {
            indices: alloc::vec![0, 0, 5],
            dimension: 3,
        };
        let h = histogram(&seq).unwrap();
        assert_eq!(h.counts(), &[2, 0, 0, 0, 0, 1]);
        assert_eq!(h.n(), 3);
        assert_eq!(h.zero_bins(), 4);

        let seq = PatternSequence {
            indices: (0..600).map(|i| (i % 6) as u32).collect(),
            dimension: 3,
        };
        assert_eq!(histogram(&seq).unwrap().counts(), &[100; 6]);

        let up: Vec<f64> = (0..102).map(|i| i as f64).collect();
        let s = symbolize(&series(&up), 3, TiePolicy::Reject).unwrap();
        assert_eq!(histogram(&s).unwrap().counts(), &[100, 0, 0, 0, 0, 0]);

        let empty = PatternSequence {
            indices: Vec::new(),
            dimension: 3,
        };
        assert!(histogram(&empty).is_err());
    }

    #[test]
    fn advisory_boundary() {
        assert_eq!(sample_size_warning(600, 6), None);
        assert!(sample_size_warning(599, 6).is_some());
        assert!(sample_size_warning(100, 720).is_some());
    }

    #[test]
    fn tie_policy_parse() {
        assert_eq!("reject".parse::<TiePolicy>().unwrap(), TiePolicy::Reject);
        assert_eq!("stable".parse::<TiePolicy>().unwrap(), TiePolicy::StableOrder);
        assert_eq!("jitter:42".parse::<TiePolicy>().unwrap(), TiePolicy::Jitter(42));
        assert!("jitter:x".parse::<TiePolicy>().is_err());
        assert_eq!(TiePolicy::Jitter(3).to_string(), "jitter:3");
    }
}
