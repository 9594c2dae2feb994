//! Brute-force reference implementations used by tests, the acceptance suite,
//! and the `selfcheck` CLI verb.
//!
//! Everything here deliberately avoids the production code paths: geometry is
//! done with `atan2` instead of direction cosines, and posteriors are direct
//! linear-domain products over enumerated configurations instead of log-space
//! accumulation. The implementations are only meant for tiny instances where
//! underflow cannot occur.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{BacEntry, BacTable};
use crate::error::{Error, Result};
use crate::estimators::{JointPosterior, OccupancyMap, Ping};
use crate::grid::{normalize_angle, ConeFov, SensorPose};

/// Cap on the number of cells `batch_posterior` will enumerate.
pub const BATCH_CELL_CAP: usize = 10;

/// Direct angular + radial membership test for a point in the sensor cone.
///
/// Reference for `grid::cells_in_cone`; boundary rule is inclusive on both
/// the angular edge (|bearing - heading| == beamwidth/2) and the radial edges.
pub fn point_in_sector(pose: &SensorPose, fov: &ConeFov, point: [f64; 2]) -> bool {
    let dx = point[0] - pose.position[0];
    let dy = point[1] - pose.position[1];
    let dist = dx.hypot(dy);
    if dist < fov.range_min || dist > fov.range_max {
        return false;
    }
    if dist == 0.0 {
        return true;
    }
    let bearing = dy.atan2(dx);
    normalize_angle(bearing - pose.heading).abs() <= fov.beamwidth / 2.0
}

/// Posterior over all configurations by one-shot enumeration:
/// `posterior(b) ~ prior(b) * prod_s P(j_s | b)` up to normalization,
/// evaluated in linear arithmetic. Ground truth for sequential `gf_update`
/// runs.
pub fn batch_posterior(
    pings: &[Ping],
    prior: &JointPosterior,
    tables: &[BacTable],
) -> Result<JointPosterior> {
    let n = prior.subset().len();
    if n > BATCH_CELL_CAP {
        return Err(Error::SubsetTooLarge {
            size: n,
            cap: BATCH_CELL_CAP,
        });
    }
    if pings.len() != tables.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pings vs {} tables",
            pings.len(),
            tables.len()
        )));
    }

    let configs = 1usize << n;
    let mut weights = vec![0.0f64; configs];
    for (config, w) in weights.iter_mut().enumerate() {
        let bits = OccupancyMap::from_config_index(n, config as u64);
        let mut value = prior.log_weight(config).exp();
        for (ping, table) in pings.iter().zip(tables.iter()) {
            for (k, &jk) in ping.j.iter().enumerate() {
                let mut zero_prob = 1.0;
                for (i, &occupied) in bits.as_slice().iter().enumerate() {
                    let e = table.entry(k, i);
                    zero_prob *= if occupied { e.p01 } else { e.p00 };
                }
                value *= if jk { 1.0 - zero_prob } else { zero_prob };
            }
        }
        *w = value;
    }

    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InconsistentMeasurement);
    }
    let log_weights = weights.iter().map(|w| (w / total).ln()).collect();
    JointPosterior::from_log_weights(prior.subset().to_vec(), log_weights)
}

/// Empirical `P(j = 0 | b)` for one OR-gate measurement: each cell state is
/// pushed through its binary asymmetric channel and the outputs are OR'd.
pub fn mc_or_gate(occupancy: &[bool], row: &[BacEntry], samples: usize, seed: u64) -> Result<f64> {
    if occupancy.len() != row.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} cells vs {} channel entries",
            occupancy.len(),
            row.len()
        )));
    }
    if samples < 10_000 {
        return Err(Error::invalid("samples", "need at least 10^4 draws"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeros = 0usize;
    for _ in 0..samples {
        let mut any = false;
        for (&occupied, entry) in occupancy.iter().zip(row.iter()) {
            let flip_on = if occupied {
                1.0 - entry.p01 // detection
            } else {
                1.0 - entry.p00 // false alarm
            };
            if rng.gen_bool(flip_on) {
                any = true;
                // keep drawing the remaining channels so the stream position
                // does not depend on the data
            }
        }
        if !any {
            zeros += 1;
        }
    }
    Ok(zeros as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn centerline_midpoint_is_inside() {
        let pose = SensorPose::new([0.0, 0.0], 0.0);
        let fov = ConeFov::new(0.5, 1.0, 5.0, 4).unwrap();
        assert!(point_in_sector(&pose, &fov, [3.0, 0.0]));
    }

    #[test]
    fn point_behind_sensor_is_outside() {
        let pose = SensorPose::new([0.0, 0.0], 0.0);
        let fov = ConeFov::new(2.0, 0.0, 5.0, 4).unwrap();
        assert!(!point_in_sector(&pose, &fov, [-3.0, 0.0]));
    }

    #[test]
    fn boundary_angle_is_inclusive() {
        let pose = SensorPose::new([0.0, 0.0], 0.0);
        let fov = ConeFov::new(PI / 2.0, 0.0, 5.0, 4).unwrap();
        // bearing exactly at +45 degrees = beamwidth / 2
        assert!(point_in_sector(&pose, &fov, [1.0, 1.0]));
    }

    #[test]
    fn no_evidence_returns_the_prior() {
        let prior = JointPosterior::from_log_weights(
            vec![0, 1],
            vec![0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln(), 0.4f64.ln()],
        )
        .unwrap();
        let posterior = batch_posterior(&[], &prior, &[]).unwrap();
        for c in 0..4 {
            assert!((posterior.log_weight(c) - prior.log_weight(c)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_channels_give_exact_frequencies() {
        let row = vec![
            BacEntry::new(1.0, 0.0).unwrap(),
            BacEntry::new(1.0, 0.0).unwrap(),
        ];
        // both empty: never fires
        let f = mc_or_gate(&[false, false], &row, 10_000, 7).unwrap();
        assert_eq!(f, 1.0);
        // one occupied with certain detection: always fires
        let f = mc_or_gate(&[true, false], &row, 10_000, 7).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn single_cell_frequency_matches_p01() {
        let row = vec![BacEntry::new(0.9, 0.2).unwrap()];
        let n = 100_000;
        let f = mc_or_gate(&[true], &row, n, 123).unwrap();
        let sigma = (0.2 * 0.8 / n as f64).sqrt();
        assert!((f - 0.2).abs() < 3.0 * sigma, "freq {} too far from 0.2", f);
    }
}
