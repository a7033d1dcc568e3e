//! Uniform grid partitions of an axis-aligned state domain.
//!
//! A [`Grid`] splits a box into `resolution[i]` equal cells per axis. Cells
//! are half-open, `[lo, hi)`, except along the domain's upper boundary where
//! the boundary itself is clamped into the last cell, so every point of the
//! closed domain belongs to exactly one cell. Cells are identified by a
//! row-major linear [`CellId`] (last axis fastest).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("box needs lower[i] < upper[i] and finite bounds on every axis")]
    MalformedBox,
    #[error("box dimensions disagree: lower has {0} axes, upper has {1}")]
    BoxDimensionMismatch(usize, usize),
    #[error("grid resolution must be at least 1 per axis")]
    ZeroResolution,
    #[error("grid resolution has {0} axes but the domain has {1}")]
    ResolutionDimensionMismatch(usize, usize),
    #[error("sampling scheme needs at least 1 point per axis")]
    EmptySampling,
}

/// Closed axis-aligned box, `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PartitionError> {
        if lower.len() != upper.len() {
            return Err(PartitionError::BoxDimensionMismatch(lower.len(), upper.len()));
        }
        let well_formed = lower
            .iter()
            .zip(&upper)
            .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
        if !well_formed || lower.is_empty() {
            return Err(PartitionError::MalformedBox);
        }
        Ok(Self { lower, upper })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[must_use]
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    #[must_use]
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Closed containment test.
    #[must_use]
    pub fn contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Identifier of one grid cell; row-major linear index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub usize);

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where the per-axis sample points sit inside a cell.
///
/// `Corners` spreads the points across the closed cell including both
/// endpoints, so the most extreme representatives a cell can contain are
/// always tested. `Centers` places them at the midpoints of `per_axis` equal
/// subintervals, staying strictly inside the cell. Corner points give the
/// adversary maximal reach (a plan must survive starts on the cell boundary),
/// midpoints a median reach; which one is appropriate depends on how much of
/// each cell the plant actually visits in closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplePlacement {
    #[default]
    Corners,
    Centers,
}

/// Tensor sampling of a cell: `per_axis` points per axis, placed according to
/// `placement`. With `Corners` the endpoints are included once
/// `per_axis >= 2`; one point per axis is the cell center in either mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingScheme {
    pub per_axis: usize,
    pub placement: SamplePlacement,
}

impl SamplingScheme {
    pub fn new(per_axis: usize) -> Result<Self, PartitionError> {
        if per_axis == 0 {
            return Err(PartitionError::EmptySampling);
        }
        Ok(Self { per_axis, placement: SamplePlacement::Corners })
    }

    /// Same density, but the points are subinterval midpoints.
    pub fn centers(per_axis: usize) -> Result<Self, PartitionError> {
        let mut scheme = Self::new(per_axis)?;
        scheme.placement = SamplePlacement::Centers;
        Ok(scheme)
    }
}

impl Default for SamplingScheme {
    fn default() -> Self {
        Self { per_axis: 3, placement: SamplePlacement::Corners }
    }
}

/// Uniform partition of a domain box into a grid of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: AxisBox,
    resolution: Vec<usize>,
    widths: Vec<f64>,
    cell_count: usize,
}

impl Grid {
    pub fn new(domain: AxisBox, resolution: Vec<usize>) -> Result<Self, PartitionError> {
        if resolution.len() != domain.dim() {
            return Err(PartitionError::ResolutionDimensionMismatch(
                resolution.len(),
                domain.dim(),
            ));
        }
        if resolution.contains(&0) {
            return Err(PartitionError::ZeroResolution);
        }
        let widths = domain
            .lower
            .iter()
            .zip(&domain.upper)
            .zip(&resolution)
            .map(|((lo, hi), &r)| (hi - lo) / r as f64)
            .collect();
        let cell_count = resolution.iter().product();
        Ok(Self { domain, resolution, widths, cell_count })
    }

    #[must_use]
    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    #[must_use]
    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    #[must_use]
    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    /// Cell of `x`, or `None` when `x` lies outside the domain. Points on an
    /// interior cell boundary belong to the upper cell; points on the
    /// domain's upper boundary are clamped into the last cell.
    ///
    /// Panics if `x` has the wrong dimension.
    #[must_use]
    pub fn locate(&self, x: &[f64]) -> Option<CellId> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        let mut linear = 0usize;
        for axis in 0..self.dim() {
            let (lo, hi) = (self.domain.lower[axis], self.domain.upper[axis]);
            let v = x[axis];
            if !(lo..=hi).contains(&v) {
                return None;
            }
            let idx = (((v - lo) / self.widths[axis]).floor() as usize)
                .min(self.resolution[axis] - 1);
            linear = linear * self.resolution[axis] + idx;
        }
        Some(CellId(linear))
    }

    /// Per-axis indices of a cell; inverse of [`Grid::from_multi`].
    #[must_use]
    pub fn multi_index(&self, id: CellId) -> Vec<usize> {
        assert!(id.0 < self.cell_count, "cell id out of range");
        let mut rem = id.0;
        let mut multi = vec![0usize; self.dim()];
        for axis in (0..self.dim()).rev() {
            multi[axis] = rem % self.resolution[axis];
            rem /= self.resolution[axis];
        }
        multi
    }

    #[must_use]
    pub fn from_multi(&self, multi: &[usize]) -> CellId {
        assert_eq!(multi.len(), self.dim(), "index dimension mismatch");
        let mut linear = 0usize;
        for axis in 0..self.dim() {
            assert!(multi[axis] < self.resolution[axis], "index out of range");
            linear = linear * self.resolution[axis] + multi[axis];
        }
        CellId(linear)
    }

    fn corner(&self, axis: usize, k: usize) -> f64 {
        // The upper domain boundary is returned exactly, not via lo + k*w,
        // so the last cell's box never drifts past the domain.
        if k == self.resolution[axis] {
            self.domain.upper[axis]
        } else {
            self.domain.lower[axis] + k as f64 * self.widths[axis]
        }
    }

    /// Center and per-axis half-widths of a cell.
    #[must_use]
    pub fn cell_center_radius(&self, id: CellId) -> (Vec<f64>, Vec<f64>) {
        let multi = self.multi_index(id);
        let mut center = vec![0.0; self.dim()];
        let mut radius = vec![0.0; self.dim()];
        for axis in 0..self.dim() {
            let lo = self.corner(axis, multi[axis]);
            let hi = self.corner(axis, multi[axis] + 1);
            center[axis] = 0.5 * (lo + hi);
            radius[axis] = 0.5 * (hi - lo);
        }
        (center, radius)
    }

    /// The (closed) box spanned by a cell.
    #[must_use]
    pub fn cell_box(&self, id: CellId) -> AxisBox {
        let multi = self.multi_index(id);
        let lower = (0..self.dim()).map(|a| self.corner(a, multi[a])).collect();
        let upper = (0..self.dim()).map(|a| self.corner(a, multi[a] + 1)).collect();
        AxisBox::new(lower, upper).expect("cell boxes are well formed")
    }

    /// Tensor-grid samples of a cell, row-major over axes with the last axis
    /// fastest. One point per axis means the cell center. With corner
    /// placement and two or more points both endpoints are included, so the
    /// corners are always covered; with center placement the points are the
    /// midpoints of `per_axis` equal slices and stay strictly interior.
    #[must_use]
    pub fn sample_cell(&self, id: CellId, scheme: SamplingScheme) -> Vec<Vec<f64>> {
        assert!(scheme.per_axis >= 1, "sampling scheme validated on construction");
        let multi = self.multi_index(id);
        let s = scheme.per_axis;
        let mut axis_points: Vec<Vec<f64>> = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let lo = self.corner(axis, multi[axis]);
            let hi = self.corner(axis, multi[axis] + 1);
            let points = match scheme.placement {
                SamplePlacement::Centers => (0..s)
                    .map(|j| lo + (j as f64 + 0.5) * (hi - lo) / s as f64)
                    .collect(),
                SamplePlacement::Corners if s == 1 => vec![0.5 * (lo + hi)],
                SamplePlacement::Corners => (0..s)
                    .map(|j| {
                        if j == s - 1 {
                            hi
                        } else {
                            lo + j as f64 * (hi - lo) / (s - 1) as f64
                        }
                    })
                    .collect(),
            };
            axis_points.push(points);
        }
        let total = s.pow(self.dim() as u32);
        let mut samples = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            samples.push((0..self.dim()).map(|a| axis_points[a][idx[a]]).collect());
            for axis in (0..self.dim()).rev() {
                idx[axis] += 1;
                if idx[axis] < s {
                    break;
                }
                idx[axis] = 0;
            }
        }
        samples
    }

    /// All cells entirely contained in `target`, ascending by id. A cell
    /// qualifies when its closed box is a subset of the target box, up to a
    /// per-axis tolerance of 1e-9 cell widths that absorbs roundoff in the
    /// corner arithmetic.
    #[must_use]
    pub fn target_cells(&self, target: &AxisBox) -> Vec<CellId> {
        assert_eq!(target.dim(), self.dim(), "target dimension mismatch");
        const SNAP: f64 = 1e-9;
        let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let lo = self.domain.lower[axis];
            let w = self.widths[axis];
            let a = ((target.lower[axis] - lo) / w - SNAP).ceil().max(0.0) as usize;
            let b_excl = (((target.upper[axis] - lo) / w + SNAP).floor())
                .min(self.resolution[axis] as f64);
            if b_excl < 0.0 {
                return Vec::new();
            }
            let b_excl = b_excl as usize;
            if a >= b_excl {
                return Vec::new();
            }
            ranges.push((a, b_excl));
        }
        let mut cells = Vec::new();
        let mut multi: Vec<usize> = ranges.iter().map(|&(a, _)| a).collect();
        loop {
            cells.push(self.from_multi(&multi));
            let mut axis = self.dim();
            loop {
                if axis == 0 {
                    cells.sort_unstable();
                    return cells;
                }
                axis -= 1;
                multi[axis] += 1;
                if multi[axis] < ranges[axis].1 {
                    break;
                }
                multi[axis] = ranges[axis].0;
            }
        }
    }
}
