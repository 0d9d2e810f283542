//! Thread-parallel drivers over the core's replicate and grid routines.
//!
//! Each replicate draws from its own `(seed, index)` stream and results are
//! collected in index order, so output does not depend on the thread count.

use opstat_core::montecarlo::{
    certified_mean, lre, re, replicate_value, GridCell, GridSpec, ReplicateSummary, Replicates,
};
use opstat_core::{ProbabilityVector, Result};
use rayon::prelude::*;

use crate::error::CliError;

/// A pool with `threads` workers (`None` or 0: one per core).
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

/// Same values as [`opstat_core::replicate_entropy`], computed in parallel.
pub fn replicate_entropy_par(
    p: &ProbabilityVector,
    n: u64,
    replicates: u64,
    seed: u64,
    normalized: bool,
) -> Result<Replicates> {
    if n == 0 || replicates < 2 {
        // the sequential routine owns the parameter checks
        return opstat_core::replicate_entropy(p, n, replicates, seed, normalized);
    }
    let samples: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| replicate_value(p, n, seed, i, normalized))
        .collect();
    Ok(Replicates {
        summary: ReplicateSummary::from_samples(&samples)?,
        samples,
    })
}

/// Same cells as [`opstat_core::accuracy_grid`], with the `(scenario, k, n)`
/// cells evaluated in parallel.
pub fn accuracy_grid_par(spec: &GridSpec) -> Result<Vec<GridCell>> {
    let mut points = Vec::new();
    for &scenario in &spec.scenarios {
        for &k in &spec.ks {
            let p = scenario.probabilities(k)?;
            for &n in &spec.ns {
                points.push((scenario, k, n, p.clone()));
            }
        }
    }
    let blocks: Vec<Result<Vec<GridCell>>> = points
        .into_par_iter()
        .map(|(scenario, k, n, p)| {
            let (source, certified) = certified_mean(&p, n, &spec.precision, spec.fallback)?;
            spec.methods
                .iter()
                .map(|&method| {
                    let approximation = method.approximate_mean(&p, n)?;
                    Ok(GridCell {
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
                    })
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::new();
    for b in blocks {
        cells.extend(b?);
    }
    Ok(cells)
}
