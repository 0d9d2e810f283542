use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ordinal::PatternHistogram;

/// Tolerance on `|sum(p) - 1|` accepted by [`ProbabilityVector::new`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A point on the probability simplex over `k >= 2` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    p: Vec<f64>,
}

impl ProbabilityVector {
    /// Validates `p`; inputs whose sum is within [`SIMPLEX_TOLERANCE`] of one
    /// are renormalized.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::param("a probability vector needs k >= 2 entries"));
        }
        if let Some(i) = p.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::param(alloc::format!(
                "entry {i} ({}) is not a finite nonnegative probability",
                p[i]
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::param(alloc::format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let p = if total == 1.0 {
            p
        } else {
            p.into_iter().map(|x| x / total).collect()
        };
        Ok(Self { p })
    }

    /// Plug-in (maximum likelihood) estimate `N_l / n`.
    pub fn from_histogram(h: &PatternHistogram) -> Self {
        Self { p: h.proportions() }
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::param("k must be at least 2"));
        }
        Ok(Self {
            p: alloc::vec![1.0 / k as f64; k],
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn strictly_positive(&self) -> bool {
        self.p.iter().all(|&x| x > 0.0)
    }

    /// First zero bin, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.p.iter().position(|&x| x == 0.0)
    }

    /// True when every entry equals the first one.
    pub fn is_uniform(&self) -> bool {
        self.p.iter().all(|&x| x == self.p[0])
    }

    pub(crate) fn require_positive(&self, context: &'static str) -> Result<()> {
        match self.first_zero() {
            Some(bin) => Err(Error::Domain { bin, context }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ProbabilityVector::new(alloc::vec![0.5]).is_err());
        assert!(ProbabilityVector::new(alloc::vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(alloc::vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityVector::new(alloc::vec![f64::NAN, 1.0]).is_err());
        let p = ProbabilityVector::new(alloc::vec![0.25, 0.75 + 1e-13]).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let q = ProbabilityVector::new(alloc::vec![1.0, 0.0]).unwrap();
        assert!(!q.strictly_positive());
        assert_eq!(q.first_zero(), Some(1));
        assert!(ProbabilityVector::uniform(6).unwrap().is_uniform());
    }
}
