//! The sensor model: per-(measurement, cell) binary asymmetric channels, the
//! OR-gate measurement likelihood, and the ideal-sensor occupancy probability
//! profile construction.
//!
//! Each cell state `b_i` is pushed through its own binary asymmetric channel
//! (BAC) into a latent "virtual occupancy"; a measurement reads 1 iff any
//! virtual occupancy is 1. Because the channels are conditionally independent
//! given the map, `P(j_k = 0 | b)` factorizes over cells, which is what makes
//! exact joint inference tractable by enumeration.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::ConeFov;

/// Transition probabilities of one binary asymmetric channel, stored as the
/// two "virtual occupancy = 0" rows:
///
/// * `p00 = P(virtual = 0 | cell = 0)`, i.e. one minus the false-alarm rate,
/// * `p01 = P(virtual = 0 | cell = 1)`, i.e. one minus the detection rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacEntry {
    pub p00: f64,
    pub p01: f64,
}

impl BacEntry {
    pub fn new(p00: f64, p01: f64) -> Result<Self> {
        for (name, v) in [("p00", p00), ("p01", p01)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    "transition probability",
                    format!("{} = {} outside [0, 1]", name, v),
                ));
            }
        }
        Ok(BacEntry { p00, p01 })
    }

    /// False-alarm probability `P(virtual = 1 | cell = 0)`.
    pub fn p10(&self) -> f64 {
        1.0 - self.p00
    }

    /// Detection probability `P(virtual = 1 | cell = 1)`.
    pub fn p11(&self) -> f64 {
        1.0 - self.p01
    }

    /// Factor this channel contributes to `P(j = 0 | b)`.
    #[inline]
    pub fn zero_factor(&self, occupied: bool) -> f64 {
        if occupied {
            self.p01
        } else {
            self.p00
        }
    }
}

/// Dense table of channel entries, rows indexed by measurement `k`, columns
/// by position within an ordered cell subset. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BacTable {
    entries: Vec<BacEntry>,
    measurements: usize,
    cells: usize,
}

impl BacTable {
    pub fn from_fn(
        measurements: usize,
        cells: usize,
        mut entry: impl FnMut(usize, usize) -> Result<BacEntry>,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(measurements * cells);
        for k in 0..measurements {
            for i in 0..cells {
                entries.push(entry(k, i)?);
            }
        }
        Ok(BacTable {
            entries,
            measurements,
            cells,
        })
    }

    /// Build from a transition model and geometry: entry (k, i) is the model
    /// evaluated at the Euclidean distance between sample location k and cell
    /// center i.
    pub fn from_model(
        model: &TransitionModel,
        sample_locations: &[[f64; 2]],
        cell_centers: &[[f64; 2]],
    ) -> Result<Self> {
        Self::from_fn(sample_locations.len(), cell_centers.len(), |k, i| {
            let dx = sample_locations[k][0] - cell_centers[i][0];
            let dy = sample_locations[k][1] - cell_centers[i][1];
            model.entry((dx * dx + dy * dy).sqrt())
        })
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn entry(&self, k: usize, i: usize) -> BacEntry {
        self.entries[k * self.cells + i]
    }

    pub fn row(&self, k: usize) -> &[BacEntry] {
        &self.entries[k * self.cells..(k + 1) * self.cells]
    }

    /// Table restricted to a measurement window and a subset of columns.
    pub fn restricted(&self, window: Range<usize>, columns: &[usize]) -> BacTable {
        let mut entries = Vec::with_capacity(window.len() * columns.len());
        for k in window.clone() {
            let row = self.row(k);
            for &c in columns {
                entries.push(row[c]);
            }
        }
        BacTable {
            entries,
            measurements: window.len(),
            cells: columns.len(),
        }
    }
}

/// Distance-dependent rule for choosing BAC transition probabilities.
///
/// `Attenuated` scales both zero-rows by `(1 + d)^-alpha`:
/// `p00 = (1 - pd) / (1 + d)^alpha`, `p01 = (1 - pfa) / (1 + d)^alpha`.
/// Note that this drives `p00 -> 0` with distance, i.e. remote empty cells
/// produce virtual occupancy almost surely; see `InfluenceDecay` for the
/// variant whose remote limit is "no influence".
///
/// `InfluenceDecay` attenuates the flip probabilities instead:
/// `p00 = 1 - pfa / (1 + d)^alpha`, `p01 = 1 - pd / (1 + d)^alpha`, so both
/// tend to 1 and a distant cell contributes a unit factor to the likelihood.
///
/// `Constant` evaluates the `Attenuated` formulas at a fixed distance
/// regardless of the actual cell-sample distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionModel {
    Attenuated { pd: f64, pfa: f64, alpha: f64 },
    InfluenceDecay { pd: f64, pfa: f64, alpha: f64 },
    Constant { pd: f64, pfa: f64, alpha: f64, distance: f64 },
}

impl TransitionModel {
    pub fn validate(&self) -> Result<()> {
        let (pd, pfa, alpha) = match *self {
            TransitionModel::Attenuated { pd, pfa, alpha }
            | TransitionModel::InfluenceDecay { pd, pfa, alpha } => (pd, pfa, alpha),
            TransitionModel::Constant {
                pd,
                pfa,
                alpha,
                distance,
            } => {
                if !(distance >= 0.0) {
                    return Err(Error::invalid("constant_distance", "must be >= 0"));
                }
                (pd, pfa, alpha)
            }
        };
        if !(0.0..=1.0).contains(&pd) {
            return Err(Error::invalid("pd", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&pfa) {
            return Err(Error::invalid("pfa", "must lie in [0, 1]"));
        }
        if !(alpha >= 1.0) {
            return Err(Error::invalid("alpha", "must be >= 1"));
        }
        Ok(())
    }

    /// Transition probabilities for a cell at the given distance from the
    /// sample location.
    pub fn entry(&self, distance: f64) -> Result<BacEntry> {
        if !(distance >= 0.0) {
            return Err(Error::invalid("distance", "must be >= 0"));
        }
        match *self {
            TransitionModel::Attenuated { pd, pfa, alpha } => {
                let g = (1.0 + distance).powf(-alpha);
                BacEntry::new((1.0 - pd) * g, (1.0 - pfa) * g)
            }
            TransitionModel::InfluenceDecay { pd, pfa, alpha } => {
                let g = (1.0 + distance).powf(-alpha);
                BacEntry::new(1.0 - pfa * g, 1.0 - pd * g)
            }
            TransitionModel::Constant {
                pd,
                pfa,
                alpha,
                distance: fixed,
            } => {
                let g = (1.0 + fixed).powf(-alpha);
                BacEntry::new((1.0 - pd) * g, (1.0 - pfa) * g)
            }
        }
    }
}

/// `P(j = 0 | b)` for one OR-gate measurement: the product over cells of the
/// per-channel zero factors. `P(j = 1 | b)` is exactly one minus this.
pub fn or_gate_zero_likelihood(occupancy: &[bool], row: &[BacEntry]) -> Result<f64> {
    if occupancy.len() != row.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} cells vs {} channel entries",
            occupancy.len(),
            row.len()
        )));
    }
    Ok(occupancy
        .iter()
        .zip(row.iter())
        .map(|(&occupied, entry)| entry.zero_factor(occupied))
        .product())
}

/// Log-likelihood of one measurement vector given a map restricted to the
/// table's cell subset: `sum_k ln P(j_k | b)`, accumulated in the log domain.
/// A factor that is exactly zero yields `-inf`.
pub fn ping_log_likelihood(j: &[bool], occupancy: &[bool], table: &BacTable) -> Result<f64> {
    if j.len() != table.measurements() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements vs {} table rows",
            j.len(),
            table.measurements()
        )));
    }
    let mut total = 0.0f64;
    for (k, &jk) in j.iter().enumerate() {
        let zero = or_gate_zero_likelihood(occupancy, table.row(k))?;
        let p = if jk { 1.0 - zero } else { zero };
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
    }
    Ok(total)
}

/// Convert a scalar range return into a length-K binary vector: all zeros
/// with a single 1 at the interval whose center is nearest `r0` (ties round
/// to the farther interval).
pub fn scalar_to_measurement(fov: &ConeFov, r0: f64) -> Result<Vec<bool>> {
    if r0 < fov.range_min || r0 > fov.range_max {
        return Err(Error::invalid("r0", "outside the sensor range"));
    }
    let w = fov.interval_width();
    let idx = ((r0 - fov.range_min) / w - 0.5).round() as isize;
    let idx = idx.clamp(0, fov.intervals as isize - 1) as usize;
    let mut j = vec![false; fov.intervals];
    j[idx] = true;
    Ok(j)
}

/// Relation of a range to the return distance `r0` with tolerance `epsilon`:
/// strictly before the return, within the return band, or beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeBand {
    Before,
    AtReturn,
    Beyond,
}

pub fn classify_range(d: f64, r0: f64, epsilon: f64) -> RangeBand {
    if d < r0 - epsilon {
        RangeBand::Before
    } else if d <= r0 + epsilon {
        RangeBand::AtReturn
    } else {
        RangeBand::Beyond
    }
}

/// Per-cell channel rows for the ideal ranging sensor, chosen so that a
/// single-cell Bayes update reproduces the ideal sensor's occupancy
/// probability profile: ~0 before the return, peaked in the `r0 +- epsilon`
/// band, and exactly 0.5 (unknown) beyond it.
#[derive(Debug, Clone)]
pub struct IdealSensorOpp {
    /// The scalar return converted to a binary vector.
    pub j: Vec<bool>,
    /// Per-cell band classification.
    pub bands: Vec<RangeBand>,
    /// Per-cell measurement window (indices into `j`).
    pub windows: Vec<Range<usize>>,
    /// Per-cell `p01` values aligned with the window.
    pub p01: Vec<Vec<f64>>,
    eta_prime: f64,
}

/// Build the ideal-sensor channel rows for a scalar return at `r0`.
///
/// Each cell is classified by its centerline distance relative to the bands
/// `[.., r0 - eps)`, `[r0 - eps, r0 + eps]`, `(r0 + eps, ..]`; its window is
/// the slice of `kappa` whose interval centers fall in the same band, and the
/// `p01` rule per band is:
///
/// * before the return: `p01 = 0`,
/// * in the return band: `p01 = ((1 - j_k) / eta')^(1 / Z)` with `Z` the
///   number of zero measurements in the window,
/// * beyond the return:  `p01 = (0.5 / eta')^(1 / |window|)`.
pub fn ideal_sensor_bac(
    fov: &ConeFov,
    kappa: Range<usize>,
    r0: f64,
    epsilon: f64,
    eta_prime: f64,
    cell_distances: &[f64],
) -> Result<IdealSensorOpp> {
    if kappa.is_empty() {
        return Err(Error::invalid("kappa", "measurement window is empty"));
    }
    if kappa.end > fov.intervals {
        return Err(Error::invalid("kappa", "window exceeds interval count"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    if !(eta_prime >= 1.0) {
        return Err(Error::invalid(
            "eta_prime",
            "must be >= 1 so the emitted values stay valid probabilities",
        ));
    }
    let j = scalar_to_measurement(fov, r0)?;

    let mut bands = Vec::with_capacity(cell_distances.len());
    let mut windows = Vec::with_capacity(cell_distances.len());
    let mut p01_rows = Vec::with_capacity(cell_distances.len());
    for &d in cell_distances {
        let band = classify_range(d, r0, epsilon);
        let ks: Vec<usize> = kappa
            .clone()
            .filter(|&k| classify_range(fov.interval_center(k), r0, epsilon) == band)
            .collect();
        let window = match (ks.first(), ks.last()) {
            (Some(&a), Some(&b)) => a..b + 1,
            _ => {
                return Err(Error::invalid(
                    "epsilon",
                    format!("no measurement index falls in the band of a cell at {}", d),
                ))
            }
        };
        debug_assert_eq!(window.len(), ks.len(), "band windows are contiguous");

        let zeros = window.clone().filter(|&k| !j[k]).count();
        let p01: Vec<f64> = window
            .clone()
            .map(|k| match band {
                RangeBand::Before => 0.0,
                RangeBand::AtReturn => {
                    if j[k] {
                        0.0
                    } else {
                        (1.0 / eta_prime).powf(1.0 / zeros as f64)
                    }
                }
                RangeBand::Beyond => (0.5 / eta_prime).powf(1.0 / window.len() as f64),
            })
            .collect();

        bands.push(band);
        windows.push(window);
        p01_rows.push(p01);
    }

    Ok(IdealSensorOpp {
        j,
        bands,
        windows,
        p01: p01_rows,
        eta_prime,
    })
}

impl IdealSensorOpp {
    /// Per-cell posterior occupancy probability for the stored measurement:
    /// `eta' * prod_k [p01 (1 - j_k) + (1 - p01) j_k]` over the cell window.
    pub fn posterior(&self) -> Vec<f64> {
        self.windows
            .iter()
            .zip(self.p01.iter())
            .map(|(window, row)| {
                let product: f64 = window
                    .clone()
                    .zip(row.iter())
                    .map(|(k, &p01)| if self.j[k] { 1.0 - p01 } else { p01 })
                    .product();
                (self.eta_prime * product).clamp(0.0, 1.0)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::mc_or_gate;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn attenuated_at_zero_distance() {
        let m = TransitionModel::Attenuated {
            pd: 0.8,
            pfa: 0.08,
            alpha: 5.0,
        };
        let e = m.entry(0.0).unwrap();
        assert!((e.p00 - 0.2).abs() < 1e-15);
        assert!((e.p01 - 0.92).abs() < 1e-15);
    }

    #[test]
    fn constant_model_ignores_the_input_distance() {
        let m = TransitionModel::Constant {
            pd: 0.8,
            pfa: 0.08,
            alpha: 2.0,
            distance: 0.96,
        };
        for d in [0.0, 1.0, 57.0] {
            let e = m.entry(d).unwrap();
            assert!((e.p00 - 0.2 / (1.96 * 1.96)).abs() < 1e-15);
            assert!((e.p01 - 0.92 / (1.96 * 1.96)).abs() < 1e-15);
            assert!((e.p00 - 0.052062).abs() < 1e-6);
            assert!((e.p01 - 0.239484).abs() < 1e-6);
        }
    }

    #[test]
    fn influence_decay_vanishes_with_distance() {
        let m = TransitionModel::InfluenceDecay {
            pd: 0.9,
            pfa: 0.2,
            alpha: 3.0,
        };
        let e = m.entry(1e6).unwrap();
        assert!(e.p00 > 1.0 - 1e-12);
        assert!(e.p01 > 1.0 - 1e-12);
        // at distance zero the flip rates are the raw pd / pfa
        let e0 = m.entry(0.0).unwrap();
        assert!((e0.p11() - 0.9).abs() < 1e-15);
        assert!((e0.p10() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn negative_distance_rejected() {
        let m = TransitionModel::Attenuated {
            pd: 0.5,
            pfa: 0.1,
            alpha: 1.0,
        };
        assert!(m.entry(-0.1).is_err());
    }

    #[test]
    fn all_empty_never_fires_without_false_alarms() {
        let row = vec![BacEntry::new(1.0, 0.5).unwrap(); 4];
        let z = or_gate_zero_likelihood(&[false; 4], &row).unwrap();
        assert_eq!(z, 1.0);
    }

    #[test]
    fn single_occupied_cell_is_a_one_factor_product() {
        let row = vec![BacEntry::new(1.0, 0.2).unwrap()];
        let z = or_gate_zero_likelihood(&[true], &row).unwrap();
        assert!((z - 0.2).abs() < 1e-15);
    }

    #[test]
    fn three_cell_product_matches_monte_carlo() {
        let row = vec![
            BacEntry::new(0.7, 0.2).unwrap(),
            BacEntry::new(0.9, 0.5).unwrap(),
            BacEntry::new(0.8, 0.3).unwrap(),
        ];
        let b = [true, false, true];
        let z = or_gate_zero_likelihood(&b, &row).unwrap();
        assert!((z - 0.2 * 0.9 * 0.3).abs() < 1e-15);

        let n = 100_000;
        let freq = mc_or_gate(&b, &row, n, 42).unwrap();
        let sigma = (z * (1.0 - z) / n as f64).sqrt();
        assert!(
            (freq - z).abs() < 3.0 * sigma,
            "empirical {} vs analytic {} (3 sigma {})",
            freq,
            z,
            3.0 * sigma
        );
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let row = vec![BacEntry::new(0.7, 0.2).unwrap()];
        assert!(or_gate_zero_likelihood(&[true, false], &row).is_err());
    }

    #[test]
    fn two_half_factors_give_log_quarter() {
        let table = BacTable::from_fn(2, 1, |_, _| BacEntry::new(0.5, 0.5)).unwrap();
        let ll = ping_log_likelihood(&[false, false], &[true], &table).unwrap();
        assert!((ll - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn impossible_measurement_maps_to_neg_infinity() {
        // p00 = 1 for the only cell, so j = 1 has probability zero when empty
        let table = BacTable::from_fn(1, 1, |_, _| BacEntry::new(1.0, 0.2)).unwrap();
        let ll = ping_log_likelihood(&[true], &[false], &table).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn log_likelihood_matches_linear_product_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let table = BacTable::from_fn(4, 3, |_, _| {
                BacEntry::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))
            })
            .unwrap();
            let j: Vec<bool> = (0..4).map(|_| rng.gen_bool(0.5)).collect();
            let b: Vec<bool> = (0..3).map(|_| rng.gen_bool(0.5)).collect();

            let mut linear = 1.0f64;
            for (k, &jk) in j.iter().enumerate() {
                let z = or_gate_zero_likelihood(&b, table.row(k)).unwrap();
                linear *= if jk { 1.0 - z } else { z };
            }
            let ll = ping_log_likelihood(&j, &b, &table).unwrap();
            assert!((ll - linear.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_return_places_a_single_one() {
        let fov = ConeFov::new(0.3, 0.0, 6.0, 60).unwrap();
        let j = scalar_to_measurement(&fov, 3.02).unwrap();
        assert_eq!(j.iter().filter(|&&b| b).count(), 1);
        // interval centers are at 0.05 + 0.1 k, so 3.02 is nearest k = 30
        assert!(j[30]);
    }

    #[test]
    fn ideal_sensor_profile_shape() {
        let fov = ConeFov::new(0.3, 0.0, 6.0, 60).unwrap();
        let r0 = 3.0;
        let eps = fov.interval_width();
        // one cell per interval center
        let dists: Vec<f64> = (0..60).map(|k| fov.interval_center(k)).collect();
        let opp = ideal_sensor_bac(&fov, 0..60, r0, eps, 1.0, &dists).unwrap();
        let post = opp.posterior();
        for (i, (&d, &p)) in dists.iter().zip(post.iter()).enumerate() {
            match classify_range(d, r0, eps) {
                RangeBand::Before => {
                    assert!(p <= 0.05, "cell {} before the return has p = {}", i, p)
                }
                RangeBand::AtReturn => {
                    assert!(p > 0.99, "cell {} at the return has p = {}", i, p)
                }
                RangeBand::Beyond => {
                    assert!((p - 0.5).abs() < 1e-9, "cell {} beyond has p = {}", i, p)
                }
            }
        }
        // the profile peaks in the return band
        let peak = post.iter().cloned().fold(0.0f64, f64::max);
        let band_max = dists
            .iter()
            .zip(post.iter())
            .filter(|(&d, _)| classify_range(d, r0, eps) == RangeBand::AtReturn)
            .map(|(_, &p)| p)
            .fold(0.0f64, f64::max);
        assert_eq!(peak, band_max);
    }

    #[test]
    fn before_return_cells_get_zero_p01() {
        let fov = ConeFov::new(0.3, 0.0, 6.0, 12).unwrap();
        let opp = ideal_sensor_bac(&fov, 0..12, 3.0, 0.5, 1.0, &[1.0]).unwrap();
        assert_eq!(opp.bands[0], RangeBand::Before);
        assert!(opp.p01[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_window_is_an_error() {
        let fov = ConeFov::new(0.3, 0.0, 6.0, 12).unwrap();
        assert!(ideal_sensor_bac(&fov, 0..0, 3.0, 0.5, 1.0, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn prop_entry_rows_sum_to_one(
            pd in 0.0f64..=1.0,
            pfa in 0.0f64..=1.0,
            alpha in 1.0f64..6.0,
            d in 0.0f64..50.0,
            variant in 0usize..3,
        ) {
            let m = match variant {
                0 => TransitionModel::Attenuated { pd, pfa, alpha },
                1 => TransitionModel::InfluenceDecay { pd, pfa, alpha },
                _ => TransitionModel::Constant { pd, pfa, alpha, distance: d },
            };
            let e = m.entry(d).unwrap();
            prop_assert!((0.0..=1.0).contains(&e.p00));
            prop_assert!((0.0..=1.0).contains(&e.p01));
            prop_assert!((e.p00 + e.p10() - 1.0).abs() < 1e-15);
            prop_assert!((e.p01 + e.p11() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn prop_zero_likelihood_monotone_under_occupancy(
            seed in 0u64..1000,
            cells in 1usize..7,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // p01 <= p00 everywhere, so flipping any cell 0 -> 1 cannot
            // increase P(j = 0 | b)
            let row: Vec<BacEntry> = (0..cells)
                .map(|_| {
                    let p00 = rng.gen_range(0.3..1.0);
                    let p01 = rng.gen_range(0.0..p00);
                    BacEntry::new(p00, p01).unwrap()
                })
                .collect();
            let mut b = vec![false; cells];
            let mut prev = or_gate_zero_likelihood(&b, &row).unwrap();
            for i in 0..cells {
                b[i] = true;
                let next = or_gate_zero_likelihood(&b, &row).unwrap();
                prop_assert!(next <= prev + 1e-15);
                prev = next;
            }
        }
    }
}
