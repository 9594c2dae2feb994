//! Synthetic measurement generation and scenario (de)serialization.
//!
//! Two generators are provided. The *toy* layout covers a small grid with a
//! fixed lattice of samples, every cell observed at every time step, and
//! corrupts the ideal measurement through a binary asymmetric channel. The
//! *cone sweep* emulates a side-looking sonar: a vehicle path, a narrow cone
//! per ping, and one thresholded detection per range interval.
//!
//! Randomness comes from a single 64-bit seed; ping `s` draws from stream
//! `s + 1` of a counter-based generator, so scenarios are reproducible and
//! generation order cannot change the result. Stream 0 is left to callers
//! (the experiment runner uses it to draw truth maps).

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{MarginalField, OccupancyMap, Ping};
use crate::grid::{cells_in_cone, project_onto_centerline, ConeFov, GridSpec, RangeGate, SensorPose};

pub const FORMAT_HEADER: &str = "occgrid scenario v1";

/// Which generator produced a scenario; carries the knobs needed to rebuild
/// sample locations from poses on load.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Toy { samples_per_cell: usize },
    ConeSweep { attenuation_alpha: f64 },
}

/// A complete synthetic experiment input: grid, ground truth, and the
/// measurement sequence. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridSpec,
    pub truth: OccupancyMap,
    pub pings: Vec<Ping>,
    pub seed: u64,
    pub pd: f64,
    pub pfa: f64,
    pub kind: ScenarioKind,
}

/// Deterministic per-ping substream of the scenario seed.
fn ping_rng(seed: u64, ping: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ping as u64 + 1);
    rng
}

/// The 4x4 grid of 0.5-unit cells used by the toy experiments.
pub fn toy_grid() -> GridSpec {
    GridSpec::new([0.0, 0.0], 0.5, 4, 4).expect("static parameters are valid")
}

/// Checkerboard truth: cell (row, col) occupied when row + col is even.
pub fn checkerboard(grid: &GridSpec) -> OccupancyMap {
    OccupancyMap::new(
        (0..grid.cells())
            .map(|i| {
                let (row, col) = grid.row_col(i);
                (row + col) % 2 == 0
            })
            .collect(),
    )
}

/// Truth map with indices drawn uniformly from all 2^B configurations.
pub fn random_truth(grid: &GridSpec, rng: &mut impl Rng) -> OccupancyMap {
    OccupancyMap::new((0..grid.cells()).map(|_| rng.gen_bool(0.5)).collect())
}

/// Truth map from axis-aligned target rectangles `[x0, y0, x1, y1]`: a cell
/// is occupied iff its center falls inside some rectangle.
pub fn truth_from_rects(grid: &GridSpec, rects: &[[f64; 4]]) -> OccupancyMap {
    OccupancyMap::new(
        (0..grid.cells())
            .map(|i| {
                let c = grid.cell_center(i).expect("index in range");
                rects.iter().any(|r| {
                    c[0] >= r[0] && c[0] <= r[2] && c[1] >= r[1] && c[1] <= r[3]
                })
            })
            .collect(),
    )
}

/// All 2^B occupancy maps in ascending configuration order.
pub fn enumerate_all_truths(grid: &GridSpec) -> Result<impl Iterator<Item = OccupancyMap>> {
    let cells = grid.cells();
    if cells > 24 {
        return Err(Error::invalid(
            "grid",
            format!("enumerating 2^{} truth maps is not supported (cap 24)", cells),
        ));
    }
    Ok((0..1u64 << cells).map(move |c| OccupancyMap::from_config_index(cells, c)))
}

/// Sample lattice of the toy layout: `samples_per_cell` must be a perfect
/// square m^2; each cell gets an m x m uniform lattice, and samples are
/// ordered cell-major (cell index ascending, then lattice row-major), so a
/// contiguous cell range owns a contiguous sample range.
pub fn toy_sample_locations(grid: &GridSpec, samples_per_cell: usize) -> Result<Vec<[f64; 2]>> {
    let m = (samples_per_cell as f64).sqrt().round() as usize;
    if m * m != samples_per_cell || m == 0 {
        return Err(Error::invalid(
            "samples_per_cell",
            "must be a positive perfect square",
        ));
    }
    let cs = grid.cell_size;
    let mut locs = Vec::with_capacity(grid.cells() * samples_per_cell);
    for i in 0..grid.cells() {
        let center = grid.cell_center(i)?;
        let corner = [center[0] - 0.5 * cs, center[1] - 0.5 * cs];
        for sr in 0..m {
            for sc in 0..m {
                locs.push([
                    corner[0] + (sc as f64 + 0.5) / m as f64 * cs,
                    corner[1] + (sr as f64 + 0.5) / m as f64 * cs,
                ]);
            }
        }
    }
    Ok(locs)
}

/// Virtual pose/fov attached to toy pings: the sensor sits at the grid
/// center with a (nearly) full-circle beam that covers every cell.
fn toy_pose_fov(grid: &GridSpec, sample_count: usize) -> (SensorPose, ConeFov) {
    let half_w = grid.n_x as f64 * grid.cell_size / 2.0;
    let half_h = grid.n_y as f64 * grid.cell_size / 2.0;
    let center = [grid.origin[0] + half_w, grid.origin[1] + half_h];
    let reach = (half_w * half_w + half_h * half_h).sqrt() + grid.cell_size;
    let fov = ConeFov::new(2.0 * std::f64::consts::PI - 1e-9, 0.0, reach, sample_count)
        .expect("static parameters are valid");
    (SensorPose::new(center, 0.0), fov)
}

/// The noise-free measurement of the toy layout: sample k reads 1 iff it
/// sits over an occupied cell.
pub fn toy_ideal_measurement(
    grid: &GridSpec,
    truth: &OccupancyMap,
    samples_per_cell: usize,
) -> Vec<bool> {
    (0..grid.cells() * samples_per_cell)
        .map(|k| truth.get(k / samples_per_cell))
        .collect()
}

/// Generate the toy scenario: every sample of the ideal measurement is pushed
/// through a BAC with the given detection and false-alarm probabilities,
/// independently at each of `ping_count` time steps.
pub fn generate_toy(
    grid: &GridSpec,
    truth: &OccupancyMap,
    pd: f64,
    pfa: f64,
    ping_count: usize,
    samples_per_cell: usize,
    seed: u64,
) -> Result<Scenario> {
    if truth.len() != grid.cells() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} cells, grid has {}",
            truth.len(),
            grid.cells()
        )));
    }
    for (name, v) in [("pd", pd), ("pfa", pfa)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid("probability", format!("{} = {}", name, v)));
        }
    }
    if ping_count == 0 {
        return Err(Error::invalid("pings", "must be >= 1"));
    }
    let locations = toy_sample_locations(grid, samples_per_cell)?;
    let ideal = toy_ideal_measurement(grid, truth, samples_per_cell);
    let (pose, fov) = toy_pose_fov(grid, locations.len());

    let mut pings = Vec::with_capacity(ping_count);
    for s in 0..ping_count {
        let mut rng = ping_rng(seed, s);
        let j: Vec<bool> = ideal
            .iter()
            .map(|&on| rng.gen_bool(if on { pd } else { pfa }))
            .collect();
        pings.push(Ping::new(s, j, locations.clone(), pose, fov)?);
    }
    Ok(Scenario {
        grid: grid.clone(),
        truth: truth.clone(),
        pings,
        seed,
        pd,
        pfa,
        kind: ScenarioKind::Toy { samples_per_cell },
    })
}

/// Sensor poses along a trajectory, one per ping.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePath {
    pub poses: Vec<SensorPose>,
}

impl VehiclePath {
    /// Arc of a circle; the heading points radially outward, so the sensor
    /// side-looks away from the arc center and sweeps as it travels.
    pub fn arc(
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
        count: usize,
    ) -> Self {
        let poses = (0..count)
            .map(|s| {
                let t = if count == 1 {
                    start_angle
                } else {
                    start_angle + (end_angle - start_angle) * s as f64 / (count - 1) as f64
                };
                SensorPose::new(
                    [center[0] + radius * t.cos(), center[1] + radius * t.sin()],
                    t,
                )
            })
            .collect();
        VehiclePath { poses }
    }

    /// Straight segment with a fixed heading.
    pub fn line(start: [f64; 2], end: [f64; 2], heading: f64, count: usize) -> Self {
        let poses = (0..count)
            .map(|s| {
                let f = if count == 1 {
                    0.0
                } else {
                    s as f64 / (count - 1) as f64
                };
                SensorPose::new(
                    [
                        start[0] + (end[0] - start[0]) * f,
                        start[1] + (end[1] - start[1]) * f,
                    ],
                    heading,
                )
            })
            .collect();
        VehiclePath { poses }
    }
}

/// Generate a cone-sweep scenario. Per ping and per range interval, the
/// detector fires with probability `pd_eff` when any occupied cell center
/// lies in the interval's sector (a true positive), otherwise with
/// probability `pfa` (a false alarm). Detection is optionally attenuated
/// along the beam: `pd_eff = pd / (1 + (d - range_min))^alpha` at centerline
/// distance `d`; alpha = 0 disables the attenuation. Sample `k`'s location is
/// the centerline point of interval `k`.
#[allow(clippy::too_many_arguments)]
pub fn generate_cone_sweep(
    grid: &GridSpec,
    truth: &OccupancyMap,
    path: &VehiclePath,
    fov: &ConeFov,
    pd: f64,
    pfa: f64,
    attenuation_alpha: f64,
    seed: u64,
) -> Result<Scenario> {
    if truth.len() != grid.cells() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} cells, grid has {}",
            truth.len(),
            grid.cells()
        )));
    }
    if path.poses.is_empty() {
        return Err(Error::invalid("path", "must contain at least one pose"));
    }
    for (name, v) in [("pd", pd), ("pfa", pfa)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid("probability", format!("{} = {}", name, v)));
        }
    }
    if !(attenuation_alpha >= 0.0) {
        return Err(Error::invalid("attenuation_alpha", "must be >= 0"));
    }

    let mut pings = Vec::with_capacity(path.poses.len());
    for (s, &pose) in path.poses.iter().enumerate() {
        let mut hot = vec![false; fov.intervals];
        for &i in &cells_in_cone(grid, &pose, fov) {
            if truth.get(i) {
                let c = grid.cell_center(i)?;
                let dx = c[0] - pose.position[0];
                let dy = c[1] - pose.position[1];
                if let Some(k) = fov.interval_of((dx * dx + dy * dy).sqrt()) {
                    hot[k] = true;
                }
            }
        }
        let dir = pose.direction();
        let locations: Vec<[f64; 2]> = (0..fov.intervals)
            .map(|k| {
                let d = fov.interval_center(k);
                [pose.position[0] + dir[0] * d, pose.position[1] + dir[1] * d]
            })
            .collect();
        let mut rng = ping_rng(seed, s);
        let j: Vec<bool> = (0..fov.intervals)
            .map(|k| {
                let p = if hot[k] {
                    let d = fov.interval_center(k) - fov.range_min;
                    pd / (1.0 + d).powf(attenuation_alpha)
                } else {
                    pfa
                };
                rng.gen_bool(p)
            })
            .collect();
        pings.push(Ping::new(s, j, locations, pose, *fov)?);
    }
    Ok(Scenario {
        grid: grid.clone(),
        truth: truth.clone(),
        pings,
        seed,
        pd,
        pfa,
        kind: ScenarioKind::ConeSweep { attenuation_alpha },
    })
}

impl Scenario {
    /// Section gates for the toy layout: the grid's rows are split into
    /// `sections` contiguous bands, each owning its cells and their samples.
    /// Returns `None` for cone scenarios, which gate geometrically instead.
    pub fn toy_section_gates(&self, sections: usize) -> Result<Option<Vec<RangeGate>>> {
        let samples_per_cell = match self.kind {
            ScenarioKind::Toy { samples_per_cell } => samples_per_cell,
            ScenarioKind::ConeSweep { .. } => return Ok(None),
        };
        if sections == 0 || !self.grid.n_y.is_multiple_of(sections) {
            return Err(Error::invalid(
                "sections",
                format!(
                    "{} sections do not evenly split {} grid rows",
                    sections, self.grid.n_y
                ),
            ));
        }
        let rows_per = self.grid.n_y / sections;
        let cells_per = rows_per * self.grid.n_x;
        let gates = (0..sections)
            .map(|g| {
                let cell_start = g * cells_per;
                RangeGate {
                    cell_indices: (cell_start..cell_start + cells_per).collect(),
                    measurement_indices: cell_start * samples_per_cell
                        ..(cell_start + cells_per) * samples_per_cell,
                }
            })
            .collect();
        Ok(Some(gates))
    }

    /// Measurement association for the independence baselines.
    ///
    /// Toy: cell `r` is associated with every sample of the section that
    /// contains it (`im_sections` bands, the same neighborhoods the joint
    /// special cases use). Cone sweep: each cone cell is associated with the
    /// interval its center projects to on the centerline, widened by
    /// `assoc_radius` intervals on both sides; cells outside the cone get an
    /// empty set.
    pub fn association(
        &self,
        ping: &Ping,
        im_sections: usize,
        assoc_radius: usize,
    ) -> Result<Vec<Vec<usize>>> {
        match self.kind {
            ScenarioKind::Toy { .. } => {
                let gates = self
                    .toy_section_gates(im_sections)?
                    .expect("toy scenario has section gates");
                let mut assoc = vec![Vec::new(); self.grid.cells()];
                for gate in gates {
                    let window: Vec<usize> = gate.measurement_indices.collect();
                    for i in gate.cell_indices {
                        assoc[i] = window.clone();
                    }
                }
                Ok(assoc)
            }
            ScenarioKind::ConeSweep { .. } => {
                let mut assoc = vec![Vec::new(); self.grid.cells()];
                let cone = cells_in_cone(&self.grid, &ping.pose, &ping.fov);
                let centers: Vec<[f64; 2]> = cone
                    .iter()
                    .map(|&i| self.grid.cell_center(i))
                    .collect::<Result<_>>()?;
                let projections = project_onto_centerline(&ping.pose, &centers);
                for (&i, &proj) in cone.iter().zip(projections.iter()) {
                    if let Some(k) = ping.fov.interval_of(proj) {
                        let lo = k.saturating_sub(assoc_radius);
                        let hi = (k + assoc_radius).min(ping.fov.intervals - 1);
                        assoc[i] = (lo..=hi).collect();
                    }
                }
                Ok(assoc)
            }
        }
    }

    /// Serialize to the versioned plain-text container.
    pub fn save_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", FORMAT_HEADER);
        match self.kind {
            ScenarioKind::Toy { .. } => {
                let _ = writeln!(out, "kind toy");
            }
            ScenarioKind::ConeSweep { .. } => {
                let _ = writeln!(out, "kind cone_sweep");
            }
        }
        let _ = writeln!(out, "origin {} {}", self.grid.origin[0], self.grid.origin[1]);
        let _ = writeln!(out, "cell_size {}", self.grid.cell_size);
        let _ = writeln!(out, "grid {} {}", self.grid.n_x, self.grid.n_y);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "pd {}", self.pd);
        let _ = writeln!(out, "pfa {}", self.pfa);
        match self.kind {
            ScenarioKind::Toy { samples_per_cell } => {
                let _ = writeln!(out, "samples_per_cell {}", samples_per_cell);
            }
            ScenarioKind::ConeSweep { attenuation_alpha } => {
                let _ = writeln!(out, "attenuation {}", attenuation_alpha);
            }
        }
        let fov = self
            .pings
            .first()
            .map(|p| p.fov)
            .unwrap_or_else(|| toy_pose_fov(&self.grid, 1).1);
        let _ = writeln!(
            out,
            "fov {} {} {} {}",
            fov.beamwidth, fov.range_min, fov.range_max, fov.intervals
        );
        let _ = writeln!(out, "truth");
        for row in (0..self.grid.n_y).rev() {
            let line: String = (0..self.grid.n_x)
                .map(|col| {
                    if self.truth.get(self.grid.index(row, col)) {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line);
        }
        let _ = writeln!(out, "pings {}", self.pings.len());
        for ping in &self.pings {
            let bits: String = ping.j.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(
                out,
                "ping {} {} {} {}",
                ping.pose.position[0], ping.pose.position[1], ping.pose.heading, bits
            );
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::runner::write_atomic(path, self.save_string().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::parse_str(&text)
    }

    /// Parse the plain-text container; sample locations are rebuilt from the
    /// stored poses and geometry.
    pub fn parse_str(text: &str) -> Result<Scenario> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(n, l)| (n + 1, l))
                .ok_or_else(|| Error::ScenarioFormat {
                    line: 0,
                    message: format!("unexpected end of file, expected {}", what),
                })
        };
        let fail = |line: usize, message: String| Error::ScenarioFormat { line, message };

        let (n, header) = next("header")?;
        if header.trim() != FORMAT_HEADER {
            return Err(fail(n, format!("unrecognized header {:?}", header)));
        }

        fn field<'a>(line: &'a str, key: &str, n: usize) -> Result<Vec<&'a str>> {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok(parts.collect()),
                other => Err(Error::ScenarioFormat {
                    line: n,
                    message: format!("expected {:?}, found {:?}", key, other.unwrap_or("")),
                }),
            }
        }
        fn parse_num<T: std::str::FromStr>(s: &str, what: &str, n: usize) -> Result<T> {
            s.parse().map_err(|_| Error::ScenarioFormat {
                line: n,
                message: format!("cannot parse {} from {:?}", what, s),
            })
        }

        let (n, line) = next("kind")?;
        let kind_name = field(line, "kind", n)?
            .first()
            .copied()
            .ok_or_else(|| fail(n, "missing kind".into()))?
            .to_string();

        let (n, line) = next("origin")?;
        let parts = field(line, "origin", n)?;
        if parts.len() != 2 {
            return Err(fail(n, "origin needs two numbers".into()));
        }
        let origin = [
            parse_num::<f64>(parts[0], "origin x", n)?,
            parse_num::<f64>(parts[1], "origin y", n)?,
        ];

        let (n, line) = next("cell_size")?;
        let cell_size: f64 = parse_num(
            field(line, "cell_size", n)?
                .first()
                .ok_or_else(|| fail(n, "missing cell_size".into()))?,
            "cell_size",
            n,
        )?;

        let (n, line) = next("grid")?;
        let parts = field(line, "grid", n)?;
        if parts.len() != 2 {
            return Err(fail(n, "grid needs two counts".into()));
        }
        let n_x: usize = parse_num(parts[0], "n_x", n)?;
        let n_y: usize = parse_num(parts[1], "n_y", n)?;
        let grid = GridSpec::new(origin, cell_size, n_x, n_y)
            .map_err(|e| fail(n, e.to_string()))?;

        let (n, line) = next("seed")?;
        let seed: u64 = parse_num(
            field(line, "seed", n)?
                .first()
                .ok_or_else(|| fail(n, "missing seed".into()))?,
            "seed",
            n,
        )?;
        let (n, line) = next("pd")?;
        let pd: f64 = parse_num(
            field(line, "pd", n)?
                .first()
                .ok_or_else(|| fail(n, "missing pd".into()))?,
            "pd",
            n,
        )?;
        let (n, line) = next("pfa")?;
        let pfa: f64 = parse_num(
            field(line, "pfa", n)?
                .first()
                .ok_or_else(|| fail(n, "missing pfa".into()))?,
            "pfa",
            n,
        )?;

        let kind = match kind_name.as_str() {
            "toy" => {
                let (n, line) = next("samples_per_cell")?;
                let spc: usize = parse_num(
                    field(line, "samples_per_cell", n)?
                        .first()
                        .ok_or_else(|| fail(n, "missing samples_per_cell".into()))?,
                    "samples_per_cell",
                    n,
                )?;
                ScenarioKind::Toy {
                    samples_per_cell: spc,
                }
            }
            "cone_sweep" => {
                let (n, line) = next("attenuation")?;
                let a: f64 = parse_num(
                    field(line, "attenuation", n)?
                        .first()
                        .ok_or_else(|| fail(n, "missing attenuation".into()))?,
                    "attenuation",
                    n,
                )?;
                ScenarioKind::ConeSweep {
                    attenuation_alpha: a,
                }
            }
            other => return Err(fail(2, format!("unknown scenario kind {:?}", other))),
        };

        let (n, line) = next("fov")?;
        let parts = field(line, "fov", n)?;
        if parts.len() != 4 {
            return Err(fail(n, "fov needs four numbers".into()));
        }
        let fov = ConeFov::new(
            parse_num(parts[0], "beamwidth", n)?,
            parse_num(parts[1], "range_min", n)?,
            parse_num(parts[2], "range_max", n)?,
            parse_num(parts[3], "intervals", n)?,
        )
        .map_err(|e| fail(n, e.to_string()))?;

        let (n, line) = next("truth")?;
        if line.trim() != "truth" {
            return Err(fail(n, format!("expected truth, found {:?}", line)));
        }
        let mut bits = vec![false; grid.cells()];
        for row in (0..grid.n_y).rev() {
            let (n, line) = next("truth row")?;
            let line = line.trim();
            if line.len() != grid.n_x {
                return Err(fail(
                    n,
                    format!("truth row has {} cells, expected {}", line.len(), grid.n_x),
                ));
            }
            for (col, ch) in line.chars().enumerate() {
                bits[grid.index(row, col)] = match ch {
                    '0' => false,
                    '1' => true,
                    other => return Err(fail(n, format!("invalid truth bit {:?}", other))),
                };
            }
        }
        let truth = OccupancyMap::new(bits);

        let (n, line) = next("pings")?;
        let ping_count: usize = parse_num(
            field(line, "pings", n)?
                .first()
                .ok_or_else(|| fail(n, "missing ping count".into()))?,
            "ping count",
            n,
        )?;

        let toy_locations = match kind {
            ScenarioKind::Toy { samples_per_cell } => {
                Some(toy_sample_locations(&grid, samples_per_cell)?)
            }
            ScenarioKind::ConeSweep { .. } => None,
        };

        let mut pings = Vec::with_capacity(ping_count);
        for s in 0..ping_count {
            let (n, line) = next("ping")?;
            let parts = field(line, "ping", n)?;
            if parts.len() != 4 {
                return Err(fail(n, "ping needs pose and bits".into()));
            }
            let pose = SensorPose::new(
                [
                    parse_num(parts[0], "pose x", n)?,
                    parse_num(parts[1], "pose y", n)?,
                ],
                parse_num(parts[2], "heading", n)?,
            );
            let j: Vec<bool> = parts[3]
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(fail(n, format!("invalid measurement bit {:?}", other))),
                })
                .collect::<Result<_>>()?;
            if j.len() != fov.intervals {
                return Err(fail(
                    n,
                    format!("{} bits, fov declares {}", j.len(), fov.intervals),
                ));
            }
            let locations = match &toy_locations {
                Some(locs) => locs.clone(),
                None => {
                    let dir = pose.direction();
                    (0..fov.intervals)
                        .map(|k| {
                            let d = fov.interval_center(k);
                            [pose.position[0] + dir[0] * d, pose.position[1] + dir[1] * d]
                        })
                        .collect()
                }
            };
            pings.push(Ping::new(s, j, locations, pose, fov)?);
        }

        Ok(Scenario {
            grid,
            truth,
            pings,
            seed,
            pd,
            pfa,
            kind,
        })
    }

    /// Truth rendered as a degenerate field (1.0 occupied, 0.0 empty).
    pub fn truth_field(&self) -> MarginalField {
        MarginalField::new(
            self.truth
                .as_slice()
                .iter()
                .map(|&b| b as u8 as f64)
                .collect(),
        )
        .expect("bits are valid probabilities")
    }
}
