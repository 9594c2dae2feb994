//! Experiment configuration: a flat sectioned key-value text format.
//!
//! ```text
//! [scenario]
//! kind = toy
//! truth = checkerboard
//! pings = 15
//! pd = 0.8
//! pfa = 0.08
//!
//! [estimator gf]
//! method = gf
//! transition = influence_decay
//! alpha = 5
//!
//! [run]
//! seed = 42
//! trials = 100
//! ```
//!
//! Angles are written in degrees (`theta_deg`, `heading_deg`, ...). Unknown
//! keys and sections are errors; every diagnostic carries the file and line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::channel::TransitionModel;
use crate::error::{Error, Result};
use crate::estimators::{Method, MethodParams};
use crate::grid::ConeFov;
use crate::metrics::gamma_grid;
use crate::scenario::VehiclePath;

/// How the truth map of a generated scenario is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthSpec {
    Checkerboard,
    /// A fresh uniform draw per trial (all-empty draws are rejected so the
    /// similarity metric stays defined).
    Random,
    /// Explicit rows, top row first, e.g. `rows:0101;1010;0101;1010`.
    Rows(Vec<String>),
    /// Axis-aligned rectangles; cells whose centers fall inside are occupied.
    Rects(Vec<[f64; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathSpec {
    Line {
        start: [f64; 2],
        end: [f64; 2],
        heading: f64,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
}

impl PathSpec {
    pub fn build(&self, count: usize) -> VehiclePath {
        match *self {
            PathSpec::Line {
                start,
                end,
                heading,
            } => VehiclePath::line(start, end, heading, count),
            PathSpec::Arc {
                center,
                radius,
                start_angle,
                end_angle,
            } => VehiclePath::arc(center, radius, start_angle, end_angle, count),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Toy {
        n_x: usize,
        n_y: usize,
        cell_size: f64,
        origin: [f64; 2],
        truth: TruthSpec,
        pings: usize,
        samples_per_cell: usize,
        pd: f64,
        pfa: f64,
    },
    ConeSweep {
        n_x: usize,
        n_y: usize,
        cell_size: f64,
        origin: [f64; 2],
        truth: TruthSpec,
        pings: usize,
        pd: f64,
        pfa: f64,
        attenuation: f64,
        fov: ConeFov,
        path: PathSpec,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub name: String,
    pub method: Method,
    pub params: MethodParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub estimators: Vec<EstimatorConfig>,
    pub gammas: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub jobs: Option<usize>,
}

struct Section {
    header: String,
    header_line: usize,
    // key -> (line, value)
    entries: BTreeMap<String, (usize, String)>,
}

struct ConfigReader<'a> {
    path: &'a Path,
    section: Section,
}

impl<'a> ConfigReader<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.section.entries.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|_| {
                self.err(
                    line,
                    format!("cannot parse value {:?} for key {:?}", value, key),
                )
            }),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.take_parsed(key)?.ok_or_else(|| {
            self.err(
                self.section.header_line,
                format!("section [{}] is missing key {:?}", self.section.header, key),
            )
        })
    }

    fn or_default<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take_parsed(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.section.entries.iter().next() {
            return Err(self.err(
                *line,
                format!("unknown key {:?} in section [{}]", key, self.section.header),
            ));
        }
        Ok(())
    }
}

fn split_sections(path: &Path, text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| Error::Config {
                path: path.to_path_buf(),
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            sections.push(Section {
                header: header.trim().to_string(),
                header_line: line_no,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("expected `key = value`, found {:?}", line),
        })?;
        let section = sections.last_mut().ok_or_else(|| Error::Config {
            path: path.to_path_buf(),
            line: line_no,
            message: "key appears before any [section]".into(),
        })?;
        let key = key.trim().to_string();
        if section
            .entries
            .insert(key.clone(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("duplicate key {:?}", key),
            });
        }
    }
    Ok(sections)
}

fn parse_pair(reader: &ConfigReader, line: usize, value: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(reader.err(line, format!("expected `x, y`, found {:?}", value)));
    }
    let x = parts[0]
        .parse()
        .map_err(|_| reader.err(line, format!("cannot parse number {:?}", parts[0])))?;
    let y = parts[1]
        .parse()
        .map_err(|_| reader.err(line, format!("cannot parse number {:?}", parts[1])))?;
    Ok([x, y])
}

fn parse_truth(reader: &ConfigReader, line: usize, value: &str) -> Result<TruthSpec> {
    if value == "checkerboard" {
        return Ok(TruthSpec::Checkerboard);
    }
    if value == "random" {
        return Ok(TruthSpec::Random);
    }
    if let Some(rows) = value.strip_prefix("rows:") {
        let rows: Vec<String> = rows.split(';').map(|r| r.trim().to_string()).collect();
        if rows.is_empty() || rows.iter().any(|r| r.chars().any(|c| c != '0' && c != '1')) {
            return Err(reader.err(line, "truth rows must be strings of 0s and 1s"));
        }
        return Ok(TruthSpec::Rows(rows));
    }
    if let Some(rects) = value.strip_prefix("rects:") {
        let mut out = Vec::new();
        for rect in rects.split(';') {
            let nums: Vec<f64> = rect
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| reader.err(line, format!("cannot parse number {:?}", s)))
                })
                .collect::<Result<_>>()?;
            if nums.len() != 4 {
                return Err(reader.err(line, "each rect needs x0,y0,x1,y1"));
            }
            out.push([nums[0], nums[1], nums[2], nums[3]]);
        }
        return Ok(TruthSpec::Rects(out));
    }
    Err(reader.err(
        line,
        format!(
            "unknown truth {:?} (expected checkerboard, random, rows:.., rects:..)",
            value
        ),
    ))
}

fn parse_scenario(path: &Path, section: Section) -> Result<ScenarioConfig> {
    let mut reader = ConfigReader { path, section };
    let kind: String = reader.require("kind")?;
    let config = match kind.as_str() {
        "file" => {
            let (_, value) = reader.take("path").ok_or_else(|| {
                reader.err(reader.section.header_line, "kind = file needs `path`")
            })?;
            ScenarioConfig::File(PathBuf::from(value))
        }
        "toy" => {
            let n_x = reader.or_default("nx", 4usize)?;
            let n_y = reader.or_default("ny", 4usize)?;
            let cell_size = reader.or_default("cell_size", 0.5f64)?;
            let origin = match reader.take("origin") {
                Some((line, value)) => parse_pair(&reader, line, &value)?,
                None => [0.0, 0.0],
            };
            let truth = match reader.take("truth") {
                Some((line, value)) => parse_truth(&reader, line, &value)?,
                None => TruthSpec::Checkerboard,
            };
            ScenarioConfig::Toy {
                n_x,
                n_y,
                cell_size,
                origin,
                truth,
                pings: reader.or_default("pings", 15usize)?,
                samples_per_cell: reader.or_default("samples_per_cell", 9usize)?,
                pd: reader.or_default("pd", 0.8f64)?,
                pfa: reader.or_default("pfa", 0.08f64)?,
            }
        }
        "cone_sweep" => {
            let n_x = reader.require("nx")?;
            let n_y = reader.require("ny")?;
            let cell_size = reader.require("cell_size")?;
            let origin = match reader.take("origin") {
                Some((line, value)) => parse_pair(&reader, line, &value)?,
                None => [0.0, 0.0],
            };
            let truth = {
                let (line, value) = reader.take("truth").ok_or_else(|| {
                    reader.err(reader.section.header_line, "cone_sweep needs `truth`")
                })?;
                parse_truth(&reader, line, &value)?
            };
            let theta_deg: f64 = reader.require("theta_deg")?;
            let range_min: f64 = reader.require("range_min")?;
            let range_max: f64 = reader.require("range_max")?;
            let intervals: usize = reader.require("intervals")?;
            let fov = ConeFov::new(theta_deg.to_radians(), range_min, range_max, intervals)
                .map_err(|e| reader.err(reader.section.header_line, e.to_string()))?;
            let path_spec = {
                let (line, value) = reader.take("path").ok_or_else(|| {
                    reader.err(reader.section.header_line, "cone_sweep needs `path`")
                })?;
                let parts: Vec<&str> = value.split_whitespace().collect();
                match parts.first().copied() {
                    Some("line") if parts.len() == 6 => {
                        let nums: Vec<f64> = parts[1..]
                            .iter()
                            .map(|s| {
                                s.parse().map_err(|_| {
                                    reader.err(line, format!("cannot parse number {:?}", s))
                                })
                            })
                            .collect::<Result<_>>()?;
                        PathSpec::Line {
                            start: [nums[0], nums[1]],
                            end: [nums[2], nums[3]],
                            heading: nums[4].to_radians(),
                        }
                    }
                    Some("arc") if parts.len() == 6 => {
                        let nums: Vec<f64> = parts[1..]
                            .iter()
                            .map(|s| {
                                s.parse().map_err(|_| {
                                    reader.err(line, format!("cannot parse number {:?}", s))
                                })
                            })
                            .collect::<Result<_>>()?;
                        PathSpec::Arc {
                            center: [nums[0], nums[1]],
                            radius: nums[2],
                            start_angle: nums[3].to_radians(),
                            end_angle: nums[4].to_radians(),
                        }
                    }
                    _ => {
                        return Err(reader.err(
                            line,
                            "path must be `line x0 y0 x1 y1 heading_deg` or \
                             `arc cx cy radius start_deg end_deg`",
                        ))
                    }
                }
            };
            ScenarioConfig::ConeSweep {
                n_x,
                n_y,
                cell_size,
                origin,
                truth,
                pings: reader.require("pings")?,
                pd: reader.or_default("pd", 0.8f64)?,
                pfa: reader.or_default("pfa", 0.08f64)?,
                attenuation: reader.or_default("attenuation", 0.0f64)?,
                fov,
                path: path_spec,
            }
        }
        other => {
            return Err(reader.err(
                reader.section.header_line,
                format!(
                    "unknown scenario kind {:?} (expected toy, cone_sweep, file)",
                    other
                ),
            ))
        }
    };
    reader.finish()?;
    Ok(config)
}

fn scenario_channel(config: &ScenarioConfig) -> (f64, f64) {
    match config {
        ScenarioConfig::Toy { pd, pfa, .. } | ScenarioConfig::ConeSweep { pd, pfa, .. } => {
            (*pd, *pfa)
        }
        ScenarioConfig::File(_) => (0.8, 0.08),
    }
}

fn parse_estimator(
    path: &Path,
    section: Section,
    name: String,
    scenario: &ScenarioConfig,
) -> Result<EstimatorConfig> {
    let mut reader = ConfigReader { path, section };
    let method: Method = {
        let (line, value) = reader.take("method").ok_or_else(|| {
            reader.err(reader.section.header_line, "estimator needs `method`")
        })?;
        value.parse().map_err(|e: Error| reader.err(line, e.to_string()))?
    };

    let (scenario_pd, scenario_pfa) = scenario_channel(scenario);
    let pd = reader.or_default("pd", scenario_pd)?;
    let pfa = reader.or_default("pfa", scenario_pfa)?;
    let alpha = reader.or_default("alpha", 5.0f64)?;
    let model = match reader.take("transition") {
        None => TransitionModel::Attenuated { pd, pfa, alpha },
        Some((line, value)) => match value.as_str() {
            "attenuated" => TransitionModel::Attenuated { pd, pfa, alpha },
            "influence_decay" => TransitionModel::InfluenceDecay { pd, pfa, alpha },
            "constant" => TransitionModel::Constant {
                pd,
                pfa,
                alpha,
                distance: reader.or_default("constant_distance", 0.96f64)?,
            },
            other => {
                return Err(reader.err(
                    line,
                    format!(
                        "unknown transition {:?} (expected attenuated, \
                         influence_decay, constant)",
                        other
                    ),
                ))
            }
        },
    };
    model
        .validate()
        .map_err(|e| reader.err(reader.section.header_line, e.to_string()))?;

    let defaults = MethodParams::default();
    let params = MethodParams {
        model,
        subset_cap: reader.or_default("subset_cap", defaults.subset_cap)?,
        gate_count: reader.or_default("gate_count", defaults.gate_count)?,
        gate_overlap: reader.or_default("overlap", defaults.gate_overlap)?,
        co_sections: reader.or_default("co_sections", defaults.co_sections)?,
        im_sections: reader.or_default("im_sections", defaults.im_sections)?,
        assoc_radius: reader.or_default("assoc_radius", defaults.assoc_radius)?,
        p_hit: reader.or_default("p_hit", defaults.p_hit)?,
        p_miss: reader.or_default("p_miss", defaults.p_miss)?,
    };
    reader.finish()?;
    Ok(EstimatorConfig {
        name,
        method,
        params,
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse_str(path, &text)
    }

    pub fn parse_str(path: &Path, text: &str) -> Result<ExperimentConfig> {
        let mut scenario: Option<ScenarioConfig> = None;
        let mut estimators: Vec<EstimatorConfig> = Vec::new();
        let mut gammas = gamma_grid(0.0, 1.0, 0.01).expect("static grid");
        let mut out_dir = None;
        let mut seed = 0u64;
        let mut trials = 1usize;
        let mut jobs = None;

        // estimators need the scenario's channel for defaults, so collect
        // sections first and resolve the scenario before them
        let sections = split_sections(path, text)?;
        let mut estimator_sections = Vec::new();
        for section in sections {
            let header = section.header.clone();
            let header_line = section.header_line;
            if header == "scenario" {
                if scenario.is_some() {
                    return Err(Error::Config {
                        path: path.to_path_buf(),
                        line: header_line,
                        message: "duplicate [scenario] section".into(),
                    });
                }
                scenario = Some(parse_scenario(path, section)?);
            } else if let Some(name) = header.strip_prefix("estimator") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Config {
                        path: path.to_path_buf(),
                        line: header_line,
                        message: "estimator section needs a name: [estimator gf]".into(),
                    });
                }
                estimator_sections.push((name.to_string(), section));
            } else if header == "metrics" {
                let mut reader = ConfigReader { path, section };
                let start = reader.or_default("gamma_start", 0.0f64)?;
                let stop = reader.or_default("gamma_stop", 1.0f64)?;
                let step = reader.or_default("gamma_step", 0.01f64)?;
                gammas = gamma_grid(start, stop, step)
                    .map_err(|e| reader.err(reader.section.header_line, e.to_string()))?;
                reader.finish()?;
            } else if header == "output" {
                let mut reader = ConfigReader { path, section };
                if let Some((_, value)) = reader.take("dir") {
                    out_dir = Some(PathBuf::from(value));
                }
                reader.finish()?;
            } else if header == "run" {
                let mut reader = ConfigReader { path, section };
                seed = reader.or_default("seed", 0u64)?;
                trials = reader.or_default("trials", 1usize)?;
                jobs = reader.take_parsed("jobs")?;
                reader.finish()?;
            } else {
                return Err(Error::Config {
                    path: path.to_path_buf(),
                    line: header_line,
                    message: format!("unknown section [{}]", header),
                });
            }
        }

        let scenario = scenario.ok_or_else(|| Error::Config {
            path: path.to_path_buf(),
            line: 0,
            message: "missing [scenario] section".into(),
        })?;
        for (name, section) in estimator_sections {
            estimators.push(parse_estimator(path, section, name, &scenario)?);
        }
        if estimators.is_empty() {
            return Err(Error::Config {
                path: path.to_path_buf(),
                line: 0,
                message: "at least one [estimator <name>] section is required".into(),
            });
        }
        if trials == 0 {
            return Err(Error::Config {
                path: path.to_path_buf(),
                line: 0,
                message: "trials must be >= 1".into(),
            });
        }
        Ok(ExperimentConfig {
            scenario,
            estimators,
            gammas,
            out_dir,
            seed,
            trials,
            jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
# toy run
[scenario]
kind = toy
truth = checkerboard
pings = 15
pd = 0.8
pfa = 0.08

[estimator gf]
method = gf
transition = influence_decay
alpha = 5

[estimator rgo]
method = rgo
transition = influence_decay
alpha = 5
gate_count = 4

[metrics]
gamma_step = 0.1

[run]
seed = 7
trials = 3
";

    #[test]
    fn parses_a_toy_config() {
        let cfg = ExperimentConfig::parse_str(Path::new("test.cfg"), TOY).unwrap();
        assert_eq!(cfg.estimators.len(), 2);
        assert_eq!(cfg.estimators[0].method, Method::Gf);
        assert_eq!(cfg.estimators[1].params.gate_count, 4);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.gammas.len(), 11);
        match &cfg.estimators[0].params.model {
            TransitionModel::InfluenceDecay { pd, pfa, alpha } => {
                assert_eq!((*pd, *pfa, *alpha), (0.8, 0.08, 5.0));
            }
            other => panic!("wrong model {:?}", other),
        }
    }

    #[test]
    fn unknown_keys_fail_with_line_numbers() {
        let bad = TOY.replace("alpha = 5\n\n[estimator rgo]", "alfa = 5\n\n[estimator rgo]");
        match ExperimentConfig::parse_str(Path::new("test.cfg"), &bad).unwrap_err() {
            Error::Config { line, message, .. } => {
                assert!(message.contains("alfa"), "{}", message);
                assert!(line > 0);
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn missing_estimators_are_rejected() {
        let bad = "[scenario]\nkind = toy\n";
        assert!(matches!(
            ExperimentConfig::parse_str(Path::new("t"), bad).unwrap_err(),
            Error::Config { .. }
        ));
    }

    #[test]
    fn cone_sweep_round_trip() {
        let text = "\
[scenario]
kind = cone_sweep
nx = 28
ny = 12
cell_size = 0.25
truth = rects: 1.5, 4.75, 3.5, 5.25; 4.5, 4.75, 6.5, 5.25
pings = 200
pd = 0.8
pfa = 0.08
theta_deg = 3
range_min = 3
range_max = 7.5
intervals = 45
path = arc 3.5 -16 20.5 80 100

[estimator rgo]
method = rgo
transition = influence_decay
alpha = 2
gate_count = 6
";
        let cfg = ExperimentConfig::parse_str(Path::new("exp1.cfg"), text).unwrap();
        match &cfg.scenario {
            ScenarioConfig::ConeSweep { fov, truth, .. } => {
                assert_eq!(fov.intervals, 45);
                assert!((fov.beamwidth - 3.0f64.to_radians()).abs() < 1e-12);
                match truth {
                    TruthSpec::Rects(r) => assert_eq!(r.len(), 2),
                    other => panic!("wrong truth {:?}", other),
                }
            }
            other => panic!("wrong scenario {:?}", other),
        }
    }
}
