//! Evaluation metrics: cosine-style map similarity, summed Jensen-Shannon
//! distance, and probability-of-error threshold sweeps.

use crate::error::{Error, Result};
use crate::estimators::{MarginalField, OccupancyMap};

/// Metrics for one (truth, posterior) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rho: f64,
    pub sjsd: f64,
    pub per_threshold_error: Vec<(f64, f64)>,
}

/// Cosine similarity between the truth map and the posterior field:
/// `<beta, p> / (|beta| * |p|)`. Equals 1 exactly when `p == beta` and lies
/// in [0, 1] because both vectors are nonnegative.
///
/// An all-zero truth map has no direction and is rejected. An identically
/// zero field against a nonzero truth is defined as similarity 0.
pub fn similarity_rho(beta: &OccupancyMap, p: &MarginalField) -> Result<f64> {
    if beta.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} cells, field has {}",
            beta.len(),
            p.len()
        )));
    }
    let occupied = beta.count_occupied();
    if occupied == 0 {
        return Err(Error::invalid(
            "beta",
            "similarity is undefined for an all-empty truth map",
        ));
    }
    let mut dot = 0.0f64;
    let mut p_norm_sq = 0.0f64;
    for (&b, &q) in beta.as_slice().iter().zip(p.as_slice().iter()) {
        if b {
            dot += q;
        }
        p_norm_sq += q * q;
    }
    if p_norm_sq == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / ((occupied as f64).sqrt() * p_norm_sq.sqrt()))
}

/// Jensen-Shannon divergence between two Bernoulli distributions:
/// `0.5 KL(P || M) + 0.5 KL(Q || M)` with `M = (P + Q) / 2`, natural log,
/// `0 ln 0 = 0`. Bounded by `ln 2`, zero iff the distributions agree.
///
/// The mixture mass of the complement outcome is computed from the
/// complements (`0.5 ((1-p) + (1-q))`) rather than as `1 - m`; with
/// probabilities one ulp below 1 the latter rounds to zero and would turn a
/// finite divergence into an infinity.
pub fn jsd_bernoulli(p: f64, q: f64) -> f64 {
    let (pc, qc) = (1.0 - p, 1.0 - q);
    let m = 0.5 * (p + q);
    let mc = 0.5 * (pc + qc);
    fn term(x: f64, mixture: f64) -> f64 {
        if x > 0.0 && mixture > 0.0 {
            x * (x / mixture).ln()
        } else {
            0.0
        }
    }
    let d = 0.5 * (term(p, m) + term(pc, mc)) + 0.5 * (term(q, m) + term(qc, mc));
    d.max(0.0)
}

/// Summed Jensen-Shannon distance between per-cell Bernoulli distributions,
/// both arguments relaxed to probabilities. Symmetric; at most `B ln 2`.
pub fn sjsd_probs(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} cells vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| jsd_bernoulli(x, y))
        .sum())
}

/// Summed Jensen-Shannon distance between the truth map and the posterior
/// field. Zero iff they agree exactly; attains `B ln 2` exactly when the
/// field is deterministic and opposite the truth in every cell.
pub fn sjsd(beta: &OccupancyMap, p: &MarginalField) -> Result<f64> {
    let truth: Vec<f64> = beta.as_slice().iter().map(|&b| b as u8 as f64).collect();
    sjsd_probs(&truth, p.as_slice())
}

/// Probability of error of the thresholded detection map for each threshold:
/// cell `i` is declared occupied when `p_i >= gamma` (ties declare occupied),
/// and the error is the fraction of cells whose declaration disagrees with
/// the truth.
pub fn error_sweep(
    beta: &OccupancyMap,
    p: &MarginalField,
    gammas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if beta.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} cells, field has {}",
            beta.len(),
            p.len()
        )));
    }
    for &g in gammas {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::invalid("gamma", format!("{} outside [0, 1]", g)));
        }
    }
    let cells = beta.len() as f64;
    Ok(gammas
        .iter()
        .map(|&gamma| {
            let wrong = beta
                .as_slice()
                .iter()
                .zip(p.as_slice().iter())
                .filter(|(&b, &q)| (q >= gamma) != b)
                .count();
            (gamma, wrong as f64 / cells)
        })
        .collect())
}

/// Uniform threshold grid over [start, stop] with the given step.
pub fn gamma_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::invalid("gamma_step", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) || start > stop {
        return Err(Error::invalid("gamma", "need 0 <= start <= stop <= 1"));
    }
    let count = ((stop - start) / step).round() as usize;
    Ok((0..=count)
        .map(|i| (start + i as f64 * step).min(stop))
        .collect())
}
