//! Count-conditioned CSR null ensembles, pair correlation diagnostics and the
//! Monte Carlo significance test.
//!
//! For a candidate `C`, region `r` and distance `d`, the test compares the
//! observed participation index `pi_obs` with the participation index of each
//! of the `R` null replicates over the same region:
//!
//! ```text
//! p = (#{i : pi_null_i >= pi_obs} + 1) / (R + 1)
//! ```
//!
//! and declares `<r, C>` significant when `p <= alpha`. Replicates of a
//! multi-partition region are the union of the per-partition replicates with
//! the same index.

mod nulls;
mod pcf;

pub use nulls::{sample_uniform_in_partition, stream_seed, NullEnsemble};
pub use pcf::{pair_correlation, pcf_up_to, PcfBin, PCF_CLUSTER_THRESHOLD};

use crate::colocation::{pi_of_points, Candidate, ColocationError};
use crate::rational::Rational;
use crate::spatial::PartitionId;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SignificanceError {
    #[error("number of simulations must be at least 1")]
    ZeroReplicates,
    #[error("partition {0} has zero area but holds instances")]
    DegeneratePartition(PartitionId),
    #[error("rejection sampling failed to place a point inside partition {0}")]
    SamplingExhausted(PartitionId),
    #[error("null ensemble does not cover partition {0}")]
    NotCovered(PartitionId),
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(Rational),
    #[error("pair correlation needs at least 2 points, got {0}")]
    InsufficientPoints(usize),
    #[error("pair correlation needs positive distance, bin count and window area")]
    BadPcfParameters,
    #[error(transparent)]
    Colocation(#[from] ColocationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceOutcome {
    pub significant: bool,
    pub p_value: Rational,
    pub exceed_count: u64,
    pub replicates: u64,
    pub pi_obs: Rational,
}

impl SignificanceOutcome {
    pub fn from_counts(
        exceed_count: u64,
        replicates: u64,
        pi_obs: Rational,
        alpha: Rational,
    ) -> Self {
        let p_value = monte_carlo_p_value(exceed_count, replicates);
        SignificanceOutcome {
            significant: p_value <= alpha,
            p_value,
            exceed_count,
            replicates,
            pi_obs,
        }
    }
}

/// `(exceed + 1) / (R + 1)`.
pub fn monte_carlo_p_value(exceed_count: u64, replicates: u64) -> Rational {
    Rational::new(exceed_count + 1, replicates + 1)
}

pub fn validate_alpha(alpha: Rational) -> Result<(), SignificanceError> {
    if alpha.is_zero() || alpha >= Rational::ONE {
        return Err(SignificanceError::BadAlpha(alpha));
    }
    Ok(())
}

/// Null participation indices of `candidate` over `region`, one per replicate,
/// in replicate order.
pub fn null_participation_indices(
    candidate: &Candidate,
    region: &BTreeSet<PartitionId>,
    d: f64,
    ensemble: &NullEnsemble,
) -> Result<Vec<Rational>, SignificanceError> {
    if let Some(&p) = region.iter().find(|&&p| !ensemble.covers(p)) {
        return Err(SignificanceError::NotCovered(p));
    }
    (0..ensemble.replicates())
        .into_par_iter()
        .map(|i| {
            let pts = ensemble.union_simulation(region, i, candidate.features())?;
            Ok(pi_of_points(&pts, candidate, d)?.1)
        })
        .collect()
}

/// Monte Carlo test of `<region, candidate>` at distance `d`.
pub fn significance_test(
    candidate: &Candidate,
    region: &BTreeSet<PartitionId>,
    d: f64,
    pi_obs: Rational,
    ensemble: &NullEnsemble,
    alpha: Rational,
) -> Result<SignificanceOutcome, SignificanceError> {
    validate_alpha(alpha)?;
    let nulls = null_participation_indices(candidate, region, d, ensemble)?;
    let exceed = nulls.iter().filter(|&&pi| pi >= pi_obs).count() as u64;
    Ok(SignificanceOutcome::from_counts(
        exceed,
        ensemble.replicates() as u64,
        pi_obs,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha() -> Rational {
        Rational::new(1, 20)
    }

    #[test]
    fn p_value_arithmetic() {
        let o = SignificanceOutcome::from_counts(4, 99, Rational::ONE, alpha());
        assert_eq!(o.p_value, Rational::new(5, 100));
        assert!(o.significant);
        let o = SignificanceOutcome::from_counts(5, 99, Rational::ONE, alpha());
        assert_eq!(o.p_value, Rational::new(6, 100));
        assert!(!o.significant);
        let o = SignificanceOutcome::from_counts(0, 99, Rational::ONE, alpha());
        assert_eq!(o.p_value, Rational::new(1, 100));
    }

    #[test]
    fn alpha_bounds() {
        assert!(validate_alpha(Rational::ZERO).is_err());
        assert!(validate_alpha(Rational::ONE).is_err());
        assert!(validate_alpha(alpha()).is_ok());
    }
}
