//! Config-driven experiment execution: build scenarios, run the configured
//! estimators over independent trials, and write metrics tables, error-sweep
//! curves, grid images, and a run manifest.
//!
//! Determinism: trial `t` derives its own seed from the master seed by
//! counter mixing, every estimator is a pure function of the scenario, and
//! output files are assembled in trial order after all parallel work has
//! finished. Files are written atomically (temp file + rename).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ScenarioConfig, TruthSpec};
use crate::error::{Error, Result};
use crate::estimators::{final_field, run_sequence, MarginalField};
use crate::grid::GridSpec;
use crate::image::{write_field, write_pgm};
use crate::metrics::{error_sweep, similarity_rho, sjsd};
use crate::scenario::{
    checkerboard, generate_cone_sweep, generate_toy, random_truth, truth_from_rects, Scenario,
};

/// Environment variable consulted for the default output directory.
pub const OUT_DIR_ENV: &str = "OCCGRID_OUT_DIR";

/// Write `bytes` to `path` atomically: write a sibling temp file, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Fixed 12-significant-digit scientific formatting for CSV cells.
pub fn format_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{:.11e}", x)
    } else {
        format!("{}", x)
    }
}

/// splitmix64 step; used to derive independent per-trial seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64(trial as u64))
}

/// Metrics of one (trial, estimator) pair.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub name: String,
    pub seed: u64,
    pub rho: f64,
    pub sjsd: f64,
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub name: String,
    pub mean_rho: f64,
    pub std_rho: f64,
    pub mean_sjsd: f64,
    pub std_sjsd: f64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<MethodSummary>,
}

/// Build the scenario of one trial. Random truths are redrawn until they
/// contain at least one occupied cell so the similarity metric is defined.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    match config {
        ScenarioConfig::File(path) => Scenario::load(path),
        ScenarioConfig::Toy {
            n_x,
            n_y,
            cell_size,
            origin,
            truth,
            pings,
            samples_per_cell,
            pd,
            pfa,
        } => {
            let grid = GridSpec::new(*origin, *cell_size, *n_x, *n_y)?;
            let truth = resolve_truth(&grid, truth, seed)?;
            generate_toy(&grid, &truth, *pd, *pfa, *pings, *samples_per_cell, seed)
        }
        ScenarioConfig::ConeSweep {
            n_x,
            n_y,
            cell_size,
            origin,
            truth,
            pings,
            pd,
            pfa,
            attenuation,
            fov,
            path,
        } => {
            let grid = GridSpec::new(*origin, *cell_size, *n_x, *n_y)?;
            let truth = resolve_truth(&grid, truth, seed)?;
            let vehicle = path.build(*pings);
            generate_cone_sweep(&grid, &truth, &vehicle, fov, *pd, *pfa, *attenuation, seed)
        }
    }
}

fn resolve_truth(
    grid: &GridSpec,
    spec: &TruthSpec,
    seed: u64,
) -> Result<crate::estimators::OccupancyMap> {
    match spec {
        TruthSpec::Checkerboard => Ok(checkerboard(grid)),
        TruthSpec::Random => {
            // stream 0 is reserved for the truth draw; pings use streams 1..
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0);
            loop {
                let truth = random_truth(grid, &mut rng);
                if truth.count_occupied() > 0 {
                    return Ok(truth);
                }
            }
        }
        TruthSpec::Rows(rows) => {
            if rows.len() != grid.n_y || rows.iter().any(|r| r.len() != grid.n_x) {
                return Err(Error::invalid(
                    "truth",
                    format!("rows must be {} x {}", grid.n_y, grid.n_x),
                ));
            }
            let mut bits = vec![false; grid.cells()];
            for (i, row) in rows.iter().enumerate() {
                let grid_row = grid.n_y - 1 - i; // top row first
                for (col, ch) in row.chars().enumerate() {
                    bits[grid.index(grid_row, col)] = ch == '1';
                }
            }
            Ok(crate::estimators::OccupancyMap::new(bits))
        }
        TruthSpec::Rects(rects) => Ok(truth_from_rects(grid, rects)),
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rows plus the scenario and final per-estimator fields of one trial.
type TrialOutput = (Vec<TrialRow>, Scenario, Vec<(String, MarginalField)>);

fn run_one_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(config.seed, trial);
    let scenario = build_scenario(&config.scenario, seed)?;
    let mut rows = Vec::with_capacity(config.estimators.len());
    let mut fields = Vec::with_capacity(config.estimators.len());
    for est in &config.estimators {
        let trajectory = run_sequence(est.method, &scenario, &est.params)?;
        let field = final_field(&trajectory, scenario.grid.cells());
        rows.push(TrialRow {
            trial,
            name: est.name.clone(),
            seed,
            rho: similarity_rho(&scenario.truth, &field)?,
            sjsd: sjsd(&scenario.truth, &field)?,
        });
        fields.push((est.name.clone(), field));
    }
    Ok((rows, scenario, fields))
}

/// Run the whole experiment: all trials, all estimators, all artifacts.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let trial_results: Vec<_> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_one_trial(config, trial))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(config.trials * config.estimators.len());
    for (trial_rows, _, _) in &trial_results {
        rows.extend(trial_rows.iter().cloned());
    }

    // metrics.csv: one row per (trial, estimator)
    let mut metrics_csv = String::from("trial,method,seed,rho,sjsd\n");
    for row in &rows {
        let _ = writeln!(
            metrics_csv,
            "{},{},{},{},{}",
            row.trial,
            row.name,
            row.seed,
            format_sig(row.rho),
            format_sig(row.sjsd)
        );
    }
    write_atomic(&out_dir.join("metrics.csv"), metrics_csv.as_bytes())?;

    // error_sweep.csv and images come from the first trial
    let (_, scenario0, fields0) = &trial_results[0];
    let mut sweep_csv = String::from("method,gamma,error\n");
    for (name, field) in fields0 {
        for (gamma, err) in error_sweep(&scenario0.truth, field, &config.gammas)? {
            let _ = writeln!(
                sweep_csv,
                "{},{},{}",
                name,
                format_sig(gamma),
                format_sig(err)
            );
        }
    }
    write_atomic(&out_dir.join("error_sweep.csv"), sweep_csv.as_bytes())?;

    write_pgm(
        &scenario0.truth_field(),
        &scenario0.grid,
        &out_dir.join("truth.pgm"),
    )?;
    for (name, field) in fields0 {
        write_pgm(field, &scenario0.grid, &out_dir.join(format!("{}.pgm", name)))?;
        write_field(
            field,
            &scenario0.grid,
            &out_dir.join(format!("{}_field.txt", name)),
        )?;
    }
    scenario0.save(&out_dir.join("scenario_trial0.txt"))?;

    // per-method summary across trials
    let mut summaries = Vec::new();
    for est in &config.estimators {
        let rhos: Vec<f64> = rows
            .iter()
            .filter(|r| r.name == est.name)
            .map(|r| r.rho)
            .collect();
        let sjsds: Vec<f64> = rows
            .iter()
            .filter(|r| r.name == est.name)
            .map(|r| r.sjsd)
            .collect();
        let (mean_rho, std_rho) = mean_std(&rhos);
        let (mean_sjsd, std_sjsd) = mean_std(&sjsds);
        summaries.push(MethodSummary {
            name: est.name.clone(),
            mean_rho,
            std_rho,
            mean_sjsd,
            std_sjsd,
        });
    }

    write_atomic(
        &out_dir.join("run_manifest.txt"),
        manifest(config, out_dir).as_bytes(),
    )?;

    Ok(RunOutput {
        out_dir: out_dir.to_path_buf(),
        rows,
        summaries,
    })
}

/// Echo of every parameter that affects the run's outputs.
fn manifest(config: &ExperimentConfig, out_dir: &Path) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "occgrid run manifest v1");
    let _ = writeln!(out, "version {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "out_dir {}", out_dir.display());
    let _ = writeln!(out, "seed {}", config.seed);
    let _ = writeln!(out, "trials {}", config.trials);
    let _ = writeln!(out, "jobs {:?}", config.jobs);
    let _ = writeln!(out, "scenario {:?}", config.scenario);
    for est in &config.estimators {
        let _ = writeln!(
            out,
            "estimator {} method={} params={:?}",
            est.name, est.method, est.params
        );
    }
    let _ = writeln!(
        out,
        "gamma_grid {} points from {} to {}",
        config.gammas.len(),
        config.gammas.first().copied().unwrap_or(f64::NAN),
        config.gammas.last().copied().unwrap_or(f64::NAN)
    );
    let _ = writeln!(
        out,
        "outputs metrics.csv error_sweep.csv truth.pgm scenario_trial0.txt \
         <method>.pgm <method>_field.txt run_manifest.txt"
    );
    out
}

/// Resolve the output directory: CLI flag, then config, then the
/// environment variable, then `./occgrid_out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("occgrid_out"))
}

/// Quick independent cross-checks of the production estimators against the
/// brute-force oracles; used by `occgrid selfcheck`. Returns human-readable
/// pass lines, or the first failure as an error string.
pub fn selfcheck(seed: u64) -> std::result::Result<Vec<String>, String> {
    use crate::channel::{or_gate_zero_likelihood, BacEntry, BacTable};
    use crate::estimators::{JointPosterior, OccupancyMap, Ping};
    use crate::grid::{cells_in_cone, ConeFov, SensorPose};
    use crate::oracle::{batch_posterior, mc_or_gate, point_in_sector};

    let mut lines = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 1. sequential joint updates vs batch enumeration
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(1..=4usize);
        let s = rng.gen_range(1..=4usize);
        let k = rng.gen_range(1..=5usize);
        let mut joint = JointPosterior::uniform((0..n).collect(), 20).map_err(|e| e.to_string())?;
        let prior = joint.clone();
        let mut pings = Vec::new();
        let mut tables = Vec::new();
        for t in 0..s {
            let table = BacTable::from_fn(k, n, |_, _| {
                BacEntry::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))
            })
            .map_err(|e| e.to_string())?;
            let j: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
            joint.update(&j, &table).map_err(|e| e.to_string())?;
            let fov = ConeFov::new(1.0, 0.0, 10.0, k).map_err(|e| e.to_string())?;
            pings.push(
                Ping::new(t, j, vec![[0.0, 0.0]; k], SensorPose::new([0.0, 0.0], 0.0), fov)
                    .map_err(|e| e.to_string())?,
            );
            tables.push(table);
        }
        let reference = batch_posterior(&pings, &prior, &tables).map_err(|e| e.to_string())?;
        for (a, b) in joint.marginals().iter().zip(reference.marginals().iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst > 1e-10 {
        return Err(format!(
            "sequential joint updates diverge from batch enumeration by {}",
            worst
        ));
    }
    lines.push(format!(
        "ok: sequential joint posterior matches batch enumeration (max diff {:.2e})",
        worst
    ));

    // 2. OR-gate likelihood vs Monte-Carlo frequency
    for case in 0..5 {
        let n = rng.gen_range(1..=5usize);
        let row: Vec<BacEntry> = (0..n)
            .map(|_| BacEntry::new(rng.gen_range(0.1..0.95), rng.gen_range(0.1..0.95)).unwrap())
            .collect();
        let b: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let analytic = or_gate_zero_likelihood(&b, &row).map_err(|e| e.to_string())?;
        let samples = 100_000;
        let freq = mc_or_gate(&b, &row, samples, seed ^ (case as u64 + 1))
            .map_err(|e| e.to_string())?;
        let sigma = (analytic * (1.0 - analytic) / samples as f64).sqrt();
        if (freq - analytic).abs() > 3.0 * sigma.max(1e-4) {
            return Err(format!(
                "OR-gate case {}: empirical {} vs analytic {} exceeds 3 sigma",
                case, freq, analytic
            ));
        }
    }
    lines.push("ok: OR-gate likelihood within 3 sigma of Monte-Carlo frequency".to_string());

    // 3. cone membership vs the point-in-sector oracle
    let grid = GridSpec::new([0.0, 0.0], 0.6, 7, 7).map_err(|e| e.to_string())?;
    for _ in 0..50 {
        let pose = SensorPose::new(
            [rng.gen_range(-4.0..6.0), rng.gen_range(-4.0..6.0)],
            rng.gen_range(-3.0..3.0),
        );
        let fov = ConeFov::new(
            rng.gen_range(0.1..2.5),
            rng.gen_range(0.0..1.0),
            rng.gen_range(2.0..8.0),
            6,
        )
        .map_err(|e| e.to_string())?;
        let inside = cells_in_cone(&grid, &pose, &fov);
        for i in 0..grid.cells() {
            let c = grid.cell_center(i).map_err(|e| e.to_string())?;
            if inside.contains(&i) != point_in_sector(&pose, &fov, c) {
                return Err(format!("cone membership of cell {} disagrees with oracle", i));
            }
        }
    }
    lines.push("ok: cone membership agrees with the point-in-sector oracle".to_string());

    // 4. metric identities
    let beta = OccupancyMap::new(vec![true, false, true, true, false]);
    let exact = crate::estimators::MarginalField::new(vec![1.0, 0.0, 1.0, 1.0, 0.0])
        .map_err(|e| e.to_string())?;
    let opposite = crate::estimators::MarginalField::new(vec![0.0, 1.0, 0.0, 0.0, 1.0])
        .map_err(|e| e.to_string())?;
    let rho = similarity_rho(&beta, &exact).map_err(|e| e.to_string())?;
    let zero = sjsd(&beta, &exact).map_err(|e| e.to_string())?;
    let max = sjsd(&beta, &opposite).map_err(|e| e.to_string())?;
    if (rho - 1.0).abs() > 1e-12 || zero != 0.0 {
        return Err("metric identities at the truth failed".to_string());
    }
    if (max - 5.0 * std::f64::consts::LN_2).abs() > 1e-12 {
        return Err(format!("opposite-field SJSD {} is not B ln 2", max));
    }
    lines.push("ok: metric identities hold (rho = 1, SJSD = 0 and B ln 2)".to_string());

    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    const MINI: &str = "\
[scenario]
kind = toy
truth = checkerboard
pings = 3

[estimator im]
method = im
transition = influence_decay
alpha = 5

[run]
seed = 11
trials = 2
";

    #[test]
    fn experiment_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::parse_str(Path::new("mini.cfg"), MINI).unwrap();
        let output = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(output.rows.len(), 2);
        for file in [
            "metrics.csv",
            "error_sweep.csv",
            "truth.pgm",
            "im.pgm",
            "im_field.txt",
            "scenario_trial0.txt",
            "run_manifest.txt",
        ] {
            assert!(dir.path().join(file).exists(), "missing {}", file);
        }
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("trial,method,seed,rho,sjsd\n"));
        assert_eq!(metrics.lines().count(), 3);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let config = ExperimentConfig::parse_str(Path::new("mini.cfg"), MINI).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_experiment(&config, dir_a.path()).unwrap();
        run_experiment(&config, dir_b.path()).unwrap();
        for file in ["metrics.csv", "error_sweep.csv", "truth.pgm", "im.pgm"] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{} differs between reruns", file);
        }
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for t in 0..1000 {
            assert!(seen.insert(trial_seed(42, t)));
        }
    }

    #[test]
    fn selfcheck_passes() {
        let lines = selfcheck(7).unwrap();
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn format_sig_is_twelve_digits() {
        assert_eq!(format_sig(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_sig(0.0), "0.00000000000e0");
    }
}
