//! The five estimation procedures over occupancy grids:
//!
//! * `gf` - exact joint posterior over every cell, updated by enumeration,
//! * `co` - joint update restricted to the cells inside the current cone,
//! * `rgo` - joint update restricted to one range gate at a time,
//! * `im` - per-cell independent Bayes with the same channel model,
//! * `cm` - classical additive log-odds baseline.
//!
//! All accumulation is in the log domain. Joint tables are indexed by the
//! configuration integer whose bit `i` is the occupancy of `subset[i]`; that
//! encoding is fixed so tests can cross-check tables entry by entry.

use std::fmt;
use std::str::FromStr;

use crate::channel::{BacTable, TransitionModel};
use crate::error::{Error, Result};
use crate::grid::{cells_in_cone, make_range_gates, ConeFov, GridSpec, RangeGate, SensorPose};
use crate::scenario::Scenario;

/// Hard ceiling on joint enumeration, independent of the configured cap.
/// 2^24 doubles is already a 128 MiB table.
pub const MAX_SUBSET_CAP: usize = 24;

/// Default cap on the number of cells a joint update may enumerate.
pub const DEFAULT_SUBSET_CAP: usize = 20;

/// A map: one occupancy bit per cell (or per subset position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyMap {
    bits: Vec<bool>,
}

impl OccupancyMap {
    pub fn new(bits: Vec<bool>) -> Self {
        OccupancyMap { bits }
    }

    pub fn empty(len: usize) -> Self {
        OccupancyMap {
            bits: vec![false; len],
        }
    }

    /// Decode a configuration integer: bit `i` of `config` becomes entry `i`.
    pub fn from_config_index(len: usize, config: u64) -> Self {
        assert!(len <= 64, "config encoding limited to 64 cells");
        OccupancyMap {
            bits: (0..len).map(|i| config >> i & 1 == 1).collect(),
        }
    }

    /// Inverse of [`OccupancyMap::from_config_index`].
    pub fn to_config_index(&self) -> u64 {
        assert!(self.bits.len() <= 64, "config encoding limited to 64 cells");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_occupied(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// The map restricted to `subset`, in subset order.
    pub fn restricted(&self, subset: &[usize]) -> OccupancyMap {
        OccupancyMap {
            bits: subset.iter().map(|&i| self.bits[i]).collect(),
        }
    }
}

impl From<Vec<bool>> for OccupancyMap {
    fn from(bits: Vec<bool>) -> Self {
        OccupancyMap { bits }
    }
}

/// Per-cell posterior occupancy probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalField {
    probs: Vec<f64>,
}

impl MarginalField {
    /// The uninformed prior: 0.5 everywhere.
    pub fn uniform(cells: usize) -> Self {
        MarginalField {
            probs: vec![0.5; cells],
        }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("probability", format!("{} outside [0, 1]", p)));
            }
        }
        Ok(MarginalField { probs })
    }

    pub fn from_log_odds(log_odds: &[f64]) -> Self {
        MarginalField {
            probs: log_odds.iter().map(|&l| logistic(l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn set(&mut self, i: usize, p: f64) {
        debug_assert!((0.0..=1.0).contains(&p), "probability {} out of range", p);
        self.probs[i] = p;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

pub fn logistic(log_odds: f64) -> f64 {
    1.0 / (1.0 + (-log_odds).exp())
}

/// One time step's measurement: the binary vector, where each sample was
/// taken, and the sensor geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ping {
    pub time: usize,
    pub j: Vec<bool>,
    pub sample_locations: Vec<[f64; 2]>,
    pub pose: SensorPose,
    pub fov: ConeFov,
}

impl Ping {
    pub fn new(
        time: usize,
        j: Vec<bool>,
        sample_locations: Vec<[f64; 2]>,
        pose: SensorPose,
        fov: ConeFov,
    ) -> Result<Self> {
        if j.len() != sample_locations.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurements vs {} sample locations",
                j.len(),
                sample_locations.len()
            )));
        }
        Ok(Ping {
            time,
            j,
            sample_locations,
            pose,
            fov,
        })
    }
}

/// Joint posterior over all `2^n` configurations of an ordered cell subset,
/// stored as log weights that sum (in probability) to one.
#[derive(Debug, Clone)]
pub struct JointPosterior {
    subset: Vec<usize>,
    log_weights: Vec<f64>,
}

impl JointPosterior {
    fn check_cap(size: usize, cap: usize) -> Result<()> {
        let cap = cap.min(MAX_SUBSET_CAP);
        if size > cap {
            return Err(Error::SubsetTooLarge { size, cap });
        }
        Ok(())
    }

    /// Uniform prior over all configurations of `subset`.
    pub fn uniform(subset: Vec<usize>, cap: usize) -> Result<Self> {
        Self::check_cap(subset.len(), cap)?;
        let n = subset.len();
        let lw = -(n as f64) * std::f64::consts::LN_2;
        Ok(JointPosterior {
            log_weights: vec![lw; 1 << n],
            subset,
        })
    }

    /// Factorized joint built from independent per-cell probabilities
    /// (the independence projection used by `co` and `rgo`).
    pub fn from_marginals(subset: Vec<usize>, probs: &[f64], cap: usize) -> Result<Self> {
        Self::check_cap(subset.len(), cap)?;
        if probs.len() != subset.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities vs {} subset cells",
                probs.len(),
                subset.len()
            )));
        }
        let mut log_weights = vec![0.0f64; 1 << subset.len()];
        let mut size = 1usize;
        for &p in probs {
            let l1 = p.ln();
            let l0 = (1.0 - p).ln();
            for c in 0..size {
                let v = log_weights[c];
                log_weights[c] = v + l0;
                log_weights[c + size] = v + l1;
            }
            size <<= 1;
        }
        Ok(JointPosterior {
            subset,
            log_weights,
        })
    }

    /// Wrap precomputed log weights (used by the linear-domain oracle).
    pub fn from_log_weights(subset: Vec<usize>, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != 1usize << subset.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} log weights for a {}-cell subset",
                log_weights.len(),
                subset.len()
            )));
        }
        Ok(JointPosterior {
            subset,
            log_weights,
        })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn config_count(&self) -> usize {
        self.log_weights.len()
    }

    pub fn log_weight(&self, config: usize) -> f64 {
        self.log_weights[config]
    }

    /// Sum of the exponentiated weights; 1 (to rounding) after an update.
    pub fn total_mass(&self) -> f64 {
        self.log_weights.iter().map(|&l| l.exp()).sum()
    }

    /// Renormalize so the weights sum to one. Errors when every
    /// configuration has zero probability.
    pub fn normalize(&mut self) -> Result<()> {
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InconsistentMeasurement);
        }
        let sum: f64 = self.log_weights.iter().map(|&l| (l - max).exp()).sum();
        let shift = max + sum.ln();
        for l in &mut self.log_weights {
            *l -= shift;
        }
        Ok(())
    }

    /// Marginal occupancy probability of grid cell `r` (which must be in the
    /// subset), by summing posterior mass over configurations with the bit
    /// set. The complementary pair sums to one up to rounding.
    pub fn marginal(&self, r: usize) -> Result<f64> {
        let pos = self
            .subset
            .iter()
            .position(|&i| i == r)
            .ok_or(Error::IndexOutOfRange {
                index: r,
                cells: self.subset.len(),
            })?;
        Ok(self.marginals()[pos])
    }

    /// Marginals for every subset cell, in subset order.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.subset.len();
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            // degenerate table; callers normalize before reading marginals
            return vec![f64::NAN; n];
        }
        let mut set_mass = vec![0.0f64; n];
        let mut total = 0.0f64;
        for (config, &lw) in self.log_weights.iter().enumerate() {
            let w = (lw - max).exp();
            total += w;
            let mut bits = config;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                set_mass[i] += w;
                bits &= bits - 1;
            }
        }
        set_mass.iter().map(|&m| m / total).collect()
    }

    /// Bayes update for one measurement vector restricted to this subset:
    /// every configuration's log weight gains the measurement log-likelihood,
    /// then the table is renormalized.
    pub fn update(&mut self, j: &[bool], table: &BacTable) -> Result<()> {
        let n = self.subset.len();
        if table.cells() != n {
            return Err(Error::DimensionMismatch(format!(
                "table covers {} cells, joint covers {}",
                table.cells(),
                n
            )));
        }
        if table.measurements() != j.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} measurements vs {} table rows",
                j.len(),
                table.measurements()
            )));
        }
        let configs = 1usize << n;

        // zero measurements: their log factors are linear in the occupancy
        // bits, so the whole batch collapses into one pass of selective sums
        let mut lp00 = vec![0.0f64; n];
        let mut lp01 = vec![0.0f64; n];
        let mut ones: Vec<usize> = Vec::new();
        for (k, &jk) in j.iter().enumerate() {
            if jk {
                ones.push(k);
            } else {
                for (i, e) in table.row(k).iter().enumerate() {
                    lp00[i] += e.p00.ln();
                    lp01[i] += e.p01.ln();
                }
            }
        }
        let mut zero_sum = vec![0.0f64; configs];
        let mut size = 1usize;
        for i in 0..n {
            for c in 0..size {
                let v = zero_sum[c];
                zero_sum[c] = v + lp00[i];
                zero_sum[c + size] = v + lp01[i];
            }
            size <<= 1;
        }
        for (lw, z) in self.log_weights.iter_mut().zip(zero_sum.iter()) {
            *lw += z;
        }

        // one measurements: P(j_k = 1 | b) = 1 - q_k(b) does not factorize,
        // so each needs its own pass; the (1 - q) factors are multiplied in
        // the linear domain and folded into the log weights in chunks small
        // enough that ordinary magnitudes cannot underflow
        let mut q = vec![0.0f64; configs];
        let mut acc = vec![1.0f64; configs];
        for chunk in ones.chunks(16) {
            for a in acc.iter_mut() {
                *a = 1.0;
            }
            for &k in chunk {
                let row = table.row(k);
                q[0] = 1.0;
                let mut size = 1usize;
                for e in row {
                    for c in 0..size {
                        let v = q[c];
                        q[c] = v * e.p00;
                        q[c + size] = v * e.p01;
                    }
                    size <<= 1;
                }
                for (a, &qc) in acc.iter_mut().zip(q.iter()) {
                    *a *= 1.0 - qc;
                }
            }
            for (config, (lw, &a)) in self.log_weights.iter_mut().zip(acc.iter()).enumerate() {
                if a > 0.0 {
                    *lw += a.ln();
                } else if chunk.iter().any(|&k| {
                    or_gate_one_prob(table.row(k), config) > 0.0
                }) {
                    // the chunk product underflowed but no factor is an exact
                    // zero; redo this configuration in the log domain
                    let mut s = 0.0;
                    for &k in chunk {
                        let p = or_gate_one_prob(table.row(k), config);
                        if p > 0.0 {
                            s += p.ln();
                        } else {
                            s = f64::NEG_INFINITY;
                            break;
                        }
                    }
                    *lw += s;
                } else {
                    *lw = f64::NEG_INFINITY;
                }
            }
        }

        self.normalize()
    }
}

/// `P(j_k = 1 | config)` from one table row, evaluated directly.
fn or_gate_one_prob(row: &[crate::channel::BacEntry], config: usize) -> f64 {
    let mut zero = 1.0f64;
    for (i, e) in row.iter().enumerate() {
        zero *= e.zero_factor(config >> i & 1 == 1);
    }
    1.0 - zero
}

/// Exact joint Bayes update for one ping (the general formulation).
pub fn gf_update(joint: &mut JointPosterior, ping: &Ping, table: &BacTable) -> Result<()> {
    joint.update(&ping.j, table)
}

/// Marginal occupancy of cell `r` under the joint posterior.
pub fn gf_marginal(joint: &JointPosterior, r: usize) -> Result<f64> {
    joint.marginal(r)
}

/// Joint update over one cell subset using one window of the measurement
/// vector. The current per-cell marginals seed a factorized joint, the joint
/// is updated exactly, and its new marginals are written back. Cells outside
/// the subset keep their probabilities (their channels contribute a unit
/// likelihood factor).
fn apply_joint_window(
    field: &mut MarginalField,
    cells: &[usize],
    window: std::ops::Range<usize>,
    ping: &Ping,
    grid: &GridSpec,
    model: &TransitionModel,
    cap: usize,
) -> Result<()> {
    if cells.len() > cap.min(MAX_SUBSET_CAP) {
        return Err(Error::SubsetTooLarge {
            size: cells.len(),
            cap: cap.min(MAX_SUBSET_CAP),
        });
    }
    let centers = cells
        .iter()
        .map(|&i| grid.cell_center(i))
        .collect::<Result<Vec<_>>>()?;
    let table = BacTable::from_model(model, &ping.sample_locations[window.clone()], &centers)?;
    let priors: Vec<f64> = cells.iter().map(|&i| field.get(i)).collect();
    let mut joint = JointPosterior::from_marginals(cells.to_vec(), &priors, cap)?;
    joint.update(&ping.j[window], &table)?;
    for (pos, (&i, &p)) in cells.iter().zip(joint.marginals().iter()).enumerate() {
        debug_assert!(pos < cells.len());
        field.set(i, p);
    }
    Ok(())
}

/// Cone-Only update: one joint update over exactly the cells inside this
/// ping's cone, using the full measurement vector. An empty cone leaves the
/// field untouched; a cone larger than the cap is a capacity error (switch
/// to range gates).
pub fn co_update(
    field: &mut MarginalField,
    ping: &Ping,
    grid: &GridSpec,
    model: &TransitionModel,
    cap: usize,
) -> Result<()> {
    let cells = cells_in_cone(grid, &ping.pose, &ping.fov);
    if cells.is_empty() {
        return Ok(());
    }
    apply_joint_window(field, &cells, 0..ping.j.len(), ping, grid, model, cap)
}

/// Range-Gate-Only update: gates are processed in ascending range order, each
/// restricted to its own measurement window; overlapping gates see the output
/// marginals of the gates before them.
pub fn rgo_update(
    field: &mut MarginalField,
    ping: &Ping,
    gates: &[RangeGate],
    grid: &GridSpec,
    model: &TransitionModel,
    cap: usize,
) -> Result<()> {
    for gate in gates {
        if gate.cell_indices.is_empty() {
            continue;
        }
        apply_joint_window(
            field,
            &gate.cell_indices,
            gate.measurement_indices.clone(),
            ping,
            grid,
            model,
            cap,
        )?;
    }
    Ok(())
}

/// Independent per-cell Bayes update. `association[r]` lists the measurement
/// indices attributed to cell `r`; cells with an empty association are left
/// untouched. The occupied and empty hypotheses each accumulate their own
/// product and the pair is normalized to sum to one.
pub fn im_update(
    field: &mut MarginalField,
    ping: &Ping,
    association: &[Vec<usize>],
    grid: &GridSpec,
    model: &TransitionModel,
) -> Result<()> {
    if association.len() != field.len() {
        return Err(Error::DimensionMismatch(format!(
            "association covers {} cells, field has {}",
            association.len(),
            field.len()
        )));
    }
    for (r, kappa) in association.iter().enumerate() {
        if kappa.is_empty() {
            continue;
        }
        let center = grid.cell_center(r)?;
        let prior = field.get(r);
        let mut l1 = prior.ln();
        let mut l0 = (1.0 - prior).ln();
        for &k in kappa {
            let loc = ping.sample_locations[k];
            let dx = loc[0] - center[0];
            let dy = loc[1] - center[1];
            let e = model.entry((dx * dx + dy * dy).sqrt())?;
            let (f1, f0) = if ping.j[k] {
                (1.0 - e.p01, 1.0 - e.p00)
            } else {
                (e.p01, e.p00)
            };
            l1 += f1.ln();
            l0 += f0.ln();
        }
        let m = l1.max(l0);
        if m == f64::NEG_INFINITY {
            return Err(Error::InconsistentMeasurement);
        }
        let p = (l1 - m).exp() / ((l1 - m).exp() + (l0 - m).exp());
        field.set(r, p);
    }
    Ok(())
}

/// Conventional log-odds update: each associated hit adds `ln(ph / (1-ph))`,
/// each miss adds `ln(pm / (1-pm))`; unobserved cells keep their log odds.
pub fn cm_update(
    log_odds: &mut [f64],
    ping: &Ping,
    association: &[Vec<usize>],
    p_hit: f64,
    p_miss: f64,
) -> Result<()> {
    if !(p_hit > 0.5 && p_hit < 1.0) {
        return Err(Error::invalid("p_hit", "must lie in (0.5, 1)"));
    }
    if !(p_miss > 0.0 && p_miss < 0.5) {
        return Err(Error::invalid("p_miss", "must lie in (0, 0.5)"));
    }
    if association.len() != log_odds.len() {
        return Err(Error::DimensionMismatch(format!(
            "association covers {} cells, field has {}",
            association.len(),
            log_odds.len()
        )));
    }
    let hit = (p_hit / (1.0 - p_hit)).ln();
    let miss = (p_miss / (1.0 - p_miss)).ln();
    for (r, kappa) in association.iter().enumerate() {
        for &k in kappa {
            log_odds[r] += if ping.j[k] { hit } else { miss };
        }
    }
    Ok(())
}

/// Estimation method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gf,
    Co,
    Rgo,
    Im,
    Cm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Gf, Method::Co, Method::Rgo, Method::Im, Method::Cm];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gf => "gf",
            Method::Co => "co",
            Method::Rgo => "rgo",
            Method::Im => "im",
            Method::Cm => "cm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "gf" => Ok(Method::Gf),
            "co" => Ok(Method::Co),
            "rgo" => Ok(Method::Rgo),
            "im" => Ok(Method::Im),
            "cm" => Ok(Method::Cm),
            other => Err(Error::invalid(
                "method",
                format!("unknown method {:?} (expected gf, co, rgo, im, cm)", other),
            )),
        }
    }
}

/// Per-method knobs. One struct covers every method; each method reads only
/// the fields that concern it.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodParams {
    pub model: TransitionModel,
    /// Cap on joint enumeration (gf / co / rgo).
    pub subset_cap: usize,
    /// Gate count for rgo on cone scenarios; section count on the toy.
    pub gate_count: usize,
    /// Fractional overlap between consecutive rgo gates, in [0, 1).
    pub gate_overlap: f64,
    /// Section count for co on the toy (1 = the whole grid at once).
    pub co_sections: usize,
    /// Section count defining the im/cm association neighborhood on the toy.
    pub im_sections: usize,
    /// Half-width, in range intervals, of the im/cm association window
    /// around each cell's centerline projection on cone scenarios.
    pub assoc_radius: usize,
    pub p_hit: f64,
    pub p_miss: f64,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            model: TransitionModel::Attenuated {
                pd: 0.8,
                pfa: 0.08,
                alpha: 5.0,
            },
            subset_cap: DEFAULT_SUBSET_CAP,
            gate_count: 6,
            gate_overlap: 0.0,
            co_sections: 2,
            im_sections: 2,
            assoc_radius: 0,
            p_hit: 0.7,
            p_miss: 0.4,
        }
    }
}

/// Run one estimator over a whole scenario, returning the marginal field
/// after every ping. Deterministic: no randomness is consumed here.
pub fn run_sequence(
    method: Method,
    scenario: &Scenario,
    params: &MethodParams,
) -> Result<Vec<MarginalField>> {
    params.model.validate()?;
    let cells = scenario.grid.cells();
    let mut trajectory = Vec::with_capacity(scenario.pings.len());

    match method {
        Method::Gf => {
            let subset: Vec<usize> = (0..cells).collect();
            let centers = scenario.grid.centers();
            let mut joint = JointPosterior::uniform(subset.clone(), params.subset_cap)?;
            for ping in &scenario.pings {
                let table =
                    BacTable::from_model(&params.model, &ping.sample_locations, &centers)?;
                gf_update(&mut joint, ping, &table)?;
                let marginals = joint.marginals();
                trajectory.push(MarginalField::new(marginals)?);
            }
        }
        Method::Co => {
            let mut field = MarginalField::uniform(cells);
            let toy_gates = scenario.toy_section_gates(params.co_sections)?;
            for ping in &scenario.pings {
                match &toy_gates {
                    Some(gates) => rgo_update(
                        &mut field,
                        ping,
                        gates,
                        &scenario.grid,
                        &params.model,
                        params.subset_cap,
                    )?,
                    None => co_update(
                        &mut field,
                        ping,
                        &scenario.grid,
                        &params.model,
                        params.subset_cap,
                    )?,
                }
                trajectory.push(field.clone());
            }
        }
        Method::Rgo => {
            let mut field = MarginalField::uniform(cells);
            let toy_gates = scenario.toy_section_gates(params.gate_count)?;
            for ping in &scenario.pings {
                let gates = match &toy_gates {
                    Some(gates) => gates.clone(),
                    None => {
                        let cone = cells_in_cone(&scenario.grid, &ping.pose, &ping.fov);
                        make_range_gates(
                            &cone,
                            &scenario.grid,
                            &ping.pose,
                            &ping.fov,
                            params.gate_count,
                            params.gate_overlap,
                        )?
                    }
                };
                rgo_update(
                    &mut field,
                    ping,
                    &gates,
                    &scenario.grid,
                    &params.model,
                    params.subset_cap,
                )?;
                trajectory.push(field.clone());
            }
        }
        Method::Im => {
            let mut field = MarginalField::uniform(cells);
            for ping in &scenario.pings {
                let assoc = scenario.association(ping, params.im_sections, params.assoc_radius)?;
                im_update(&mut field, ping, &assoc, &scenario.grid, &params.model)?;
                trajectory.push(field.clone());
            }
        }
        Method::Cm => {
            let mut log_odds = vec![0.0f64; cells];
            for ping in &scenario.pings {
                let assoc = scenario.association(ping, params.im_sections, params.assoc_radius)?;
                cm_update(&mut log_odds, ping, &assoc, params.p_hit, params.p_miss)?;
                trajectory.push(MarginalField::from_log_odds(&log_odds));
            }
        }
    }
    Ok(trajectory)
}

/// Final field of a trajectory, or the uninformed prior when no ping ran.
pub fn final_field(trajectory: &[MarginalField], cells: usize) -> MarginalField {
    trajectory
        .last()
        .cloned()
        .unwrap_or_else(|| MarginalField::uniform(cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ping_log_likelihood, BacEntry};
    use crate::oracle::batch_posterior;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dummy_ping(j: Vec<bool>) -> Ping {
        let n = j.len();
        let fov = ConeFov::new(1.0, 0.0, 10.0, n).unwrap();
        let locs = (0..n).map(|k| [k as f64, 0.0]).collect();
        Ping::new(0, j, locs, SensorPose::new([0.0, 0.0], 0.0), fov).unwrap()
    }

    fn random_table(rng: &mut ChaCha8Rng, k: usize, n: usize) -> BacTable {
        BacTable::from_fn(k, n, |_, _| {
            BacEntry::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))
        })
        .unwrap()
    }

    #[test]
    fn noiseless_channel_pins_the_truth_in_one_ping() {
        // pd = 1, pfa = 0: p00 = 1, p01 = 0
        let truth = OccupancyMap::new(vec![true, false, true]);
        let table = BacTable::from_fn(3, 3, |k, i| {
            // sample k sits on cell k, and only sees that cell
            if k == i {
                BacEntry::new(1.0, 0.0)
            } else {
                BacEntry::new(1.0, 1.0)
            }
        })
        .unwrap();
        let j: Vec<bool> = truth.as_slice().to_vec();
        let mut joint = JointPosterior::uniform(vec![0, 1, 2], 20).unwrap();
        joint.update(&j, &table).unwrap();
        let config = truth.to_config_index() as usize;
        assert!((joint.log_weight(config) - 0.0).abs() < 1e-12);
        assert!((joint.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cell_bayes_by_hand() {
        // uniform prior, one measurement j = 1 with p11 = 0.8, p10 = 0.1:
        // posterior = 0.8 / (0.8 + 0.1) = 8/9
        let table = BacTable::from_fn(1, 1, |_, _| BacEntry::new(0.9, 0.2)).unwrap();
        let mut joint = JointPosterior::uniform(vec![0], 20).unwrap();
        joint.update(&[true], &table).unwrap();
        let p = joint.marginal(0).unwrap();
        assert!((p - 8.0 / 9.0).abs() < 1e-12, "p = {}", p);
    }

    #[test]
    fn sequential_updates_match_batch_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..24 {
            let n = rng.gen_range(1..=3usize);
            let s = rng.gen_range(1..=3usize);
            // the last cases use measurement vectors long enough to span
            // several of the update's one-measurement chunks
            let k = if case < 16 {
                rng.gen_range(1..=4usize)
            } else {
                rng.gen_range(35..=50usize)
            };
            let subset: Vec<usize> = (0..n).collect();

            let mut joint = JointPosterior::uniform(subset.clone(), 20).unwrap();
            let prior = joint.clone();
            let mut pings = Vec::new();
            let mut tables = Vec::new();
            for t in 0..s {
                let table = random_table(&mut rng, k, n);
                let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
                let ping = dummy_ping(j);
                let _ = t;
                joint.update(&ping.j, &table).unwrap();
                pings.push(ping);
                tables.push(table);
            }
            let reference = batch_posterior(&pings, &prior, &tables).unwrap();
            let got = joint.marginals();
            let want = reference.marginals();
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() <= 1e-10, "sequential {} vs batch {}", g, w);
            }
        }
    }

    #[test]
    fn update_log_weights_match_per_config_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 4;
        let k = 6;
        let table = random_table(&mut rng, k, n);
        let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        let mut joint = JointPosterior::uniform((0..n).collect(), 20).unwrap();
        joint.update(&j, &table).unwrap();

        // recompute each configuration's posterior directly
        let prior = -(n as f64) * std::f64::consts::LN_2;
        let mut expect: Vec<f64> = (0..1usize << n)
            .map(|c| {
                let b = OccupancyMap::from_config_index(n, c as u64);
                prior + ping_log_likelihood(&j, b.as_slice(), &table).unwrap()
            })
            .collect();
        let max = expect.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + expect.iter().map(|&e| (e - max).exp()).sum::<f64>().ln();
        for e in &mut expect {
            *e -= lse;
        }
        for (c, &e) in expect.iter().enumerate() {
            assert!(
                (joint.log_weight(c) - e).abs() < 1e-10,
                "config {}: {} vs {}",
                c,
                joint.log_weight(c),
                e
            );
        }
    }

    #[test]
    fn uniform_joint_has_half_marginals() {
        let joint = JointPosterior::uniform(vec![3, 7], 20).unwrap();
        assert!((joint.marginal(3).unwrap() - 0.5).abs() < 1e-15);
        assert!((joint.marginal(7).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn point_mass_joint_has_degenerate_marginals() {
        let mut lw = vec![f64::NEG_INFINITY; 4];
        lw[0b01] = 0.0; // cell 0 occupied, cell 1 empty
        let joint = JointPosterior::from_log_weights(vec![0, 1], lw).unwrap();
        assert_eq!(joint.marginal(0).unwrap(), 1.0);
        assert_eq!(joint.marginal(1).unwrap(), 0.0);
    }

    #[test]
    fn marginals_match_linear_domain_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<f64> = (0..8).map(|_| rng.gen_range(0.01..1.0f64)).collect();
        let total: f64 = raw.iter().sum();
        let lw: Vec<f64> = raw.iter().map(|&w| (w / total).ln()).collect();
        let joint = JointPosterior::from_log_weights(vec![0, 1, 2], lw).unwrap();
        for (i, &marginal) in joint.marginals().iter().enumerate() {
            let direct: f64 = (0..8usize)
                .filter(|c| c >> i & 1 == 1)
                .map(|c| raw[c] / total)
                .sum();
            assert!((marginal - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_measurement_is_an_error() {
        // p00 = 1 and p01 = 1: j = 1 impossible under every configuration
        let table = BacTable::from_fn(1, 2, |_, _| BacEntry::new(1.0, 1.0)).unwrap();
        let mut joint = JointPosterior::uniform(vec![0, 1], 20).unwrap();
        let err = joint.update(&[true], &table).unwrap_err();
        assert!(matches!(err, Error::InconsistentMeasurement));
    }

    #[test]
    fn cap_violation_reports_capacity_error() {
        let err = JointPosterior::uniform((0..8).collect(), 4).unwrap_err();
        assert!(matches!(err, Error::SubsetTooLarge { size: 8, cap: 4 }));
    }

    #[test]
    fn empty_cone_leaves_field_unchanged() {
        let grid = GridSpec::new([0.0, 0.0], 1.0, 3, 3).unwrap();
        let model = TransitionModel::InfluenceDecay {
            pd: 0.8,
            pfa: 0.1,
            alpha: 2.0,
        };
        let fov = ConeFov::new(0.2, 0.0, 0.5, 4).unwrap();
        let pose = SensorPose::new([-10.0, -10.0], 0.0);
        let ping = Ping::new(
            0,
            vec![true; 4],
            vec![[0.0, 0.0]; 4],
            pose,
            fov,
        )
        .unwrap();
        let mut field = MarginalField::uniform(9);
        let before = field.clone();
        co_update(&mut field, &ping, &grid, &model, 20).unwrap();
        assert_eq!(field, before);
    }

    #[test]
    fn im_all_hits_drive_posterior_up() {
        let grid = GridSpec::new([0.0, 0.0], 1.0, 1, 1).unwrap();
        let model = TransitionModel::InfluenceDecay {
            pd: 0.9,
            pfa: 0.05,
            alpha: 2.0,
        };
        let ping = dummy_ping(vec![true; 6]);
        let mut field = MarginalField::uniform(1);
        let assoc = vec![(0..6).collect::<Vec<_>>()];
        im_update(&mut field, &ping, &assoc, &grid, &model).unwrap();
        assert!(field.get(0) > 0.95, "posterior {}", field.get(0));
    }

    #[test]
    fn gf_reduces_to_im_on_a_single_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = GridSpec::new([0.0, 0.0], 1.0, 1, 1).unwrap();
        let model = TransitionModel::InfluenceDecay {
            pd: 0.85,
            pfa: 0.1,
            alpha: 2.0,
        };
        for _ in 0..20 {
            let j: Vec<bool> = (0..5).map(|_| rng.gen_bool(0.5)).collect();
            let mut locs = Vec::new();
            for _ in 0..5 {
                locs.push([rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]);
            }
            let fov = ConeFov::new(1.0, 0.0, 10.0, 5).unwrap();
            let ping =
                Ping::new(0, j, locs, SensorPose::new([0.5, 0.5], 0.0), fov).unwrap();

            let center = grid.cell_center(0).unwrap();
            let table = BacTable::from_model(&model, &ping.sample_locations, &[center]).unwrap();
            let mut joint = JointPosterior::uniform(vec![0], 20).unwrap();
            joint.update(&ping.j, &table).unwrap();

            let mut field = MarginalField::uniform(1);
            let assoc = vec![(0..5).collect::<Vec<_>>()];
            im_update(&mut field, &ping, &assoc, &grid, &model).unwrap();

            let diff = (joint.marginal(0).unwrap() - field.get(0)).abs();
            assert!(diff <= 1e-12, "gf vs im differ by {}", diff);
        }
    }

    #[test]
    fn cm_prior_is_half_and_one_hit_gives_p_hit() {
        let ping = dummy_ping(vec![true]);
        let mut lo = vec![0.0f64; 2];
        let assoc = vec![vec![0], vec![]];
        cm_update(&mut lo, &ping, &assoc, 0.7, 0.4).unwrap();
        let field = MarginalField::from_log_odds(&lo);
        assert!((field.get(0) - 0.7).abs() < 1e-12);
        assert!((field.get(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cm_repeated_hits_approach_one() {
        let ping = dummy_ping(vec![true]);
        let mut lo = vec![0.0f64];
        let assoc = vec![vec![0]];
        let mut last = 0.5;
        for _ in 0..30 {
            cm_update(&mut lo, &ping, &assoc, 0.7, 0.4).unwrap();
            let p = MarginalField::from_log_odds(&lo).get(0);
            assert!(p > last);
            last = p;
        }
        assert!(last > 0.999);
    }

    #[test]
    fn cm_parameter_bounds_are_enforced() {
        let ping = dummy_ping(vec![true]);
        let mut lo = vec![0.0f64];
        let assoc = vec![vec![0]];
        assert!(cm_update(&mut lo, &ping, &assoc, 0.4, 0.4).is_err());
        assert!(cm_update(&mut lo, &ping, &assoc, 0.7, 0.6).is_err());
    }

    #[test]
    fn zero_pings_leave_the_uninformed_prior() {
        let grid = GridSpec::new([0.0, 0.0], 0.5, 4, 4).unwrap();
        let scenario = crate::scenario::Scenario {
            grid: grid.clone(),
            truth: OccupancyMap::empty(16),
            pings: Vec::new(),
            seed: 0,
            pd: 0.8,
            pfa: 0.08,
            kind: crate::scenario::ScenarioKind::Toy { samples_per_cell: 9 },
        };
        let params = MethodParams {
            gate_count: 4,
            ..MethodParams::default()
        };
        for method in Method::ALL {
            let trajectory = run_sequence(method, &scenario, &params).unwrap();
            assert!(trajectory.is_empty());
            let field = final_field(&trajectory, grid.cells());
            assert!(field.as_slice().iter().all(|&p| p == 0.5));
        }
    }

    #[test]
    fn gf_posterior_invariant_to_ping_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 4;
        let mut tables = Vec::new();
        let mut js = Vec::new();
        for _ in 0..5 {
            tables.push(random_table(&mut rng, 3, n));
            js.push((0..3).map(|_| rng.gen_bool(0.5)).collect::<Vec<bool>>());
        }
        let run = |order: &[usize]| {
            let mut joint = JointPosterior::uniform((0..n).collect(), 20).unwrap();
            for &s in order {
                joint.update(&js[s], &tables[s]).unwrap();
            }
            joint.marginals()
        };
        let forward = run(&[0, 1, 2, 3, 4]);
        let shuffled = run(&[3, 0, 4, 2, 1]);
        for (a, b) in forward.iter().zip(shuffled.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    proptest! {
        // relabeling cells and permuting table columns permutes the marginals
        #[test]
        fn prop_permutation_equivariance(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..5usize);
            let k = rng.gen_range(1..4usize);
            let table = random_table(&mut rng, k, n);
            let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();

            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let swap = rng.gen_range(0..=i);
                perm.swap(i, swap);
            }
            let permuted_table = BacTable::from_fn(k, n, |kk, ii| {
                Ok(table.entry(kk, perm[ii]))
            }).unwrap();

            let mut joint = JointPosterior::uniform((0..n).collect(), 20).unwrap();
            joint.update(&j, &table).unwrap();
            let base = joint.marginals();

            let mut joint_p = JointPosterior::uniform((0..n).collect(), 20).unwrap();
            joint_p.update(&j, &permuted_table).unwrap();
            let permuted = joint_p.marginals();

            for i in 0..n {
                prop_assert!((permuted[i] - base[perm[i]]).abs() < 1e-12);
            }
        }

        // the normalized joint always sums to one and marginal pairs are complementary
        #[test]
        fn prop_normalization_invariants(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..5usize);
            let k = rng.gen_range(1..5usize);
            let table = random_table(&mut rng, k, n);
            let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
            let mut joint = JointPosterior::uniform((0..n).collect(), 20).unwrap();
            joint.update(&j, &table).unwrap();
            prop_assert!((joint.total_mass() - 1.0).abs() <= 1e-9);
            for &p in &joint.marginals() {
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn full_cone_co_matches_gf_after_one_ping() {
        // at a factorized prior the independence projection is exact, so a
        // single co update over the whole grid must equal the gf marginals
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = GridSpec::new([0.0, 0.0], 0.5, 3, 2).unwrap();
        let model = TransitionModel::InfluenceDecay {
            pd: 0.8,
            pfa: 0.08,
            alpha: 3.0,
        };
        let k = 8;
        let fov = ConeFov::new(2.0 * PI - 1e-9, 0.0, 10.0, k).unwrap();
        let pose = SensorPose::new([0.75, 0.5], 0.0);
        let locs: Vec<[f64; 2]> = (0..k)
            .map(|_| [rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.0)])
            .collect();
        let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.4)).collect();
        let ping = Ping::new(0, j, locs, pose, fov).unwrap();

        let centers = grid.centers();
        let table = BacTable::from_model(&model, &ping.sample_locations, &centers).unwrap();
        let mut joint = JointPosterior::uniform((0..6).collect(), 20).unwrap();
        joint.update(&ping.j, &table).unwrap();
        let gf = joint.marginals();

        let mut field = MarginalField::uniform(6);
        co_update(&mut field, &ping, &grid, &model, 20).unwrap();
        for (i, &want) in gf.iter().enumerate() {
            assert!(
                (field.get(i) - want).abs() <= 1e-10,
                "cell {}: co {} vs gf {}",
                i,
                field.get(i),
                want
            );
        }
    }
}
