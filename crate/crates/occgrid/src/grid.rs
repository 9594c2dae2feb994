//! 2D grid geometry: cell indexing, cone field-of-view membership, range-gate
//! partitioning, and centerline projection.
//!
//! The grid is a plan-view partition of the plane into square cells. Cell
//! membership in a sensor cone is decided by the cell's *center point*; a cell
//! is never fractionally inside.

use std::f64::consts::PI;
use std::ops::Range;

use crate::error::{Error, Result};

/// Axis-aligned grid of square cells.
///
/// Cells are indexed row-major: index `i` maps to `(row, col) = (i / n_x, i % n_x)`
/// with `col` along +x and `row` along +y.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], cell_size: f64, n_x: usize, n_y: usize) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::invalid("cell_size", "must be > 0"));
        }
        if n_x == 0 || n_y == 0 {
            return Err(Error::invalid("n_x/n_y", "must be >= 1"));
        }
        Ok(GridSpec {
            origin,
            cell_size,
            n_x,
            n_y,
        })
    }

    /// Total cell count B.
    pub fn cells(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_x, index % self.n_x)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_x + col
    }

    /// World-space center of cell `i`.
    pub fn cell_center(&self, index: usize) -> Result<[f64; 2]> {
        if index >= self.cells() {
            return Err(Error::IndexOutOfRange {
                index,
                cells: self.cells(),
            });
        }
        let (row, col) = self.row_col(index);
        Ok([
            self.origin[0] + (col as f64 + 0.5) * self.cell_size,
            self.origin[1] + (row as f64 + 0.5) * self.cell_size,
        ])
    }

    /// All cell centers in index order.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.cells())
            .map(|i| self.cell_center(i).expect("index in range"))
            .collect()
    }

    /// Cell index containing `point`, or `None` when outside the grid.
    /// Inverse of [`GridSpec::cell_center`] for in-bounds points.
    pub fn index_of(&self, point: [f64; 2]) -> Option<usize> {
        let fx = (point[0] - self.origin[0]) / self.cell_size;
        let fy = (point[1] - self.origin[1]) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let col = fx.floor() as usize;
        let row = fy.floor() as usize;
        if col >= self.n_x || row >= self.n_y {
            return None;
        }
        Some(self.index(row, col))
    }
}

/// Sensor position and heading at one ping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub position: [f64; 2],
    /// Heading in radians, normalized to (-pi, pi].
    pub heading: f64,
}

impl SensorPose {
    pub fn new(position: [f64; 2], heading: f64) -> Self {
        SensorPose {
            position,
            heading: normalize_angle(heading),
        }
    }

    /// Unit vector along the heading.
    pub fn direction(&self) -> [f64; 2] {
        [self.heading.cos(), self.heading.sin()]
    }
}

/// Wrap an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Cone-shaped field of view: angular half-width `beamwidth / 2` around the
/// heading, radial extent `[range_min, range_max]` split into `intervals`
/// uniform range intervals along the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeFov {
    /// Horizontal beamwidth in radians.
    pub beamwidth: f64,
    pub range_min: f64,
    pub range_max: f64,
    /// Number of range intervals K.
    pub intervals: usize,
}

impl ConeFov {
    pub fn new(beamwidth: f64, range_min: f64, range_max: f64, intervals: usize) -> Result<Self> {
        if !(beamwidth > 0.0 && beamwidth < 2.0 * PI) {
            return Err(Error::invalid("beamwidth", "must lie in (0, 2*pi)"));
        }
        if !(range_min >= 0.0 && range_min < range_max) {
            return Err(Error::invalid("range", "need 0 <= range_min < range_max"));
        }
        if intervals == 0 {
            return Err(Error::invalid("intervals", "must be >= 1"));
        }
        Ok(ConeFov {
            beamwidth,
            range_min,
            range_max,
            intervals,
        })
    }

    pub fn interval_width(&self) -> f64 {
        (self.range_max - self.range_min) / self.intervals as f64
    }

    /// Centerline distance encoded by measurement index `k`.
    pub fn interval_center(&self, k: usize) -> f64 {
        self.range_min + (k as f64 + 0.5) * self.interval_width()
    }

    /// Measurement index whose interval contains `distance`, or `None`
    /// outside `[range_min, range_max]`.
    pub fn interval_of(&self, distance: f64) -> Option<usize> {
        if distance < self.range_min || distance > self.range_max {
            return None;
        }
        let k = ((distance - self.range_min) / self.interval_width()).floor() as usize;
        Some(k.min(self.intervals - 1))
    }
}

/// One range gate: a radial band of the cone with the cells whose centers
/// fall in the band and the contiguous window of measurement indices whose
/// encoded ranges fall in the band.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGate {
    pub cell_indices: Vec<usize>,
    pub measurement_indices: Range<usize>,
}

/// Indices of grid cells whose centers lie inside the cone, ascending.
///
/// Membership is inclusive on both the angular boundary (|bearing| == theta/2)
/// and the radial boundaries. A center coincident with the sensor position
/// passes the angular test.
pub fn cells_in_cone(grid: &GridSpec, pose: &SensorPose, fov: &ConeFov) -> Vec<usize> {
    let dir = pose.direction();
    let cos_half = (fov.beamwidth / 2.0).cos();
    let mut inside = Vec::new();
    for i in 0..grid.cells() {
        let c = grid.cell_center(i).expect("index in range");
        let dx = c[0] - pose.position[0];
        let dy = c[1] - pose.position[1];
        let dist = (dx * dx + dy * dy).sqrt();
        if dist < fov.range_min || dist > fov.range_max {
            continue;
        }
        // cos(angle between heading and the cell bearing) >= cos(theta/2);
        // cos is monotone on [0, pi] so this is the inclusive angular test.
        let angular_ok = if dist == 0.0 {
            true
        } else {
            (dx * dir[0] + dy * dir[1]) / dist >= cos_half
        };
        if angular_ok {
            inside.push(i);
        }
    }
    inside
}

/// Partition the cone's radial extent into `gate_count` bands of equal width
/// with the given fractional overlap between consecutive bands, and assign
/// each cell of `cone_cells` and each measurement index to every band that
/// contains it.
///
/// With `overlap == 0` the bands tile `[range_min, range_max]` disjointly.
/// Bands are half-open `[lo, hi)` except the last, which closes at
/// `range_max`, so every measurement index lands in at least one gate and,
/// without overlap, in exactly one. Gates are returned in ascending range
/// order.
pub fn make_range_gates(
    cone_cells: &[usize],
    grid: &GridSpec,
    pose: &SensorPose,
    fov: &ConeFov,
    gate_count: usize,
    overlap: f64,
) -> Result<Vec<RangeGate>> {
    if gate_count == 0 {
        return Err(Error::invalid("gate_count", "must be >= 1"));
    }
    if gate_count > fov.intervals {
        return Err(Error::invalid(
            "gate_count",
            format!(
                "{} gates exceed the {} range intervals of the cone",
                gate_count, fov.intervals
            ),
        ));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid("overlap", "must lie in [0, 1)"));
    }

    let span = fov.range_max - fov.range_min;
    let stride_factor = (gate_count - 1) as f64 * (1.0 - overlap) + 1.0;
    let width = span / stride_factor;
    let stride = width * (1.0 - overlap);

    let mut gates = Vec::with_capacity(gate_count);
    for g in 0..gate_count {
        let lo = fov.range_min + g as f64 * stride;
        let hi = if g + 1 == gate_count {
            fov.range_max
        } else {
            lo + width
        };
        let last = g + 1 == gate_count;
        let in_band = |d: f64| d >= lo && (d < hi || (last && d <= hi));

        let mut window: Option<Range<usize>> = None;
        for k in 0..fov.intervals {
            if in_band(fov.interval_center(k)) {
                window = Some(match window {
                    None => k..k + 1,
                    Some(r) => {
                        debug_assert_eq!(r.end, k, "range-band window must be contiguous");
                        r.start..k + 1
                    }
                });
            }
        }
        let measurement_indices = window.ok_or_else(|| {
            Error::invalid("gate_count", "a gate's radial band contains no interval")
        })?;

        let cell_indices = cone_cells
            .iter()
            .copied()
            .filter(|&i| {
                let c = grid.cell_center(i).expect("index in range");
                let dx = c[0] - pose.position[0];
                let dy = c[1] - pose.position[1];
                in_band((dx * dx + dy * dy).sqrt())
            })
            .collect();

        gates.push(RangeGate {
            cell_indices,
            measurement_indices,
        });
    }
    Ok(gates)
}

/// Signed distance of each point along the heading ray (orthogonal projection
/// onto the cone centerline).
pub fn project_onto_centerline(pose: &SensorPose, points: &[[f64; 2]]) -> Vec<f64> {
    let dir = pose.direction();
    points
        .iter()
        .map(|p| (p[0] - pose.position[0]) * dir[0] + (p[1] - pose.position[1]) * dir[1])
        .collect()
}
