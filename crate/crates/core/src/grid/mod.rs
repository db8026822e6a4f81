//! Uniform Cartesian grids on axis-aligned boxes, occlusion masks, and
//! fields sampled on the active points.
//!
//! A grid has `m` interior points per axis with spacing `h = (b - a)/(m + 1)`;
//! point `j ∈ {1..m}^d` sits at `a + h·j`. Internally indices are zero based
//! (`i = j - 1`) and the lattice is stored lexicographically with the last
//! axis fastest. Occluded grids keep the full bounding lattice and mark the
//! removed points in a mask, so translation invariance of the operator is
//! preserved.

mod io;

use std::sync::Arc;

use crate::{Error, Result};

pub use io::{read_field_binary, read_field_csv, write_field_binary, write_field_csv};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// Uniform grid of `m^d` lattice points, optionally occluded by a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    d: usize,
    m: usize,
    lower: [f64; MAX_DIM],
    upper: [f64; MAX_DIM],
    h: f64,
    /// `None` for a full box.
    mask: Option<Vec<bool>>,
    /// Sorted lattice indices of the active points; empty for a full box.
    active: Vec<usize>,
}

impl Grid {
    /// Full grid on the box `bounds[k] = (lower_k, upper_k)`.
    ///
    /// All axes must have the same extent, since the grid has one spacing.
    pub fn new(d: usize, m: usize, bounds: &[(f64, f64)]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::Config(format!("dimension {d} not in 1..=3")));
        }
        if m < 3 {
            return Err(Error::Config(format!(
                "need at least 3 points per axis, got {m}"
            )));
        }
        if bounds.len() != d {
            return Err(Error::Config(format!(
                "{} box bounds given for dimension {d}",
                bounds.len()
            )));
        }
        let mut lower = [0.0; MAX_DIM];
        let mut upper = [0.0; MAX_DIM];
        let extent = bounds[0].1 - bounds[0].0;
        for (k, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::Config(format!("empty box on axis {k}: [{a}, {b}]")));
            }
            if ((b - a) - extent).abs() > 1e-12 * extent {
                return Err(Error::Config(format!(
                    "box extents differ (axis 0: {extent}, axis {k}: {}); grids share one spacing",
                    b - a
                )));
            }
            lower[k] = a;
            upper[k] = b;
        }
        Ok(Grid {
            d,
            m,
            lower,
            upper,
            h: extent / (m + 1) as f64,
            mask: None,
            active: Vec::new(),
        })
    }

    /// Full grid on the cube `[lo, hi]^d`.
    pub fn cube(d: usize, m: usize, lo: f64, hi: f64) -> Result<Self> {
        Grid::new(d, m, &vec![(lo, hi); d])
    }

    /// Occluded grid: `mask[k]` says whether lattice point `k` is active.
    pub fn with_mask(d: usize, m: usize, bounds: &[(f64, f64)], mask: Vec<bool>) -> Result<Self> {
        let mut grid = Grid::new(d, m, bounds)?;
        if mask.len() != grid.lattice_len() {
            return Err(Error::Config(format!(
                "mask has {} entries, lattice has {}",
                mask.len(),
                grid.lattice_len()
            )));
        }
        let active: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(k, &on)| on.then_some(k))
            .collect();
        if active.is_empty() {
            return Err(Error::Config("mask has no active points".into()));
        }
        if active.len() < mask.len() {
            grid.mask = Some(mask);
            grid.active = active;
        }
        Ok(grid)
    }

    /// L-shaped domain on `[0, 1]^2`: the upper-right corner block of
    /// `(m+1)/2 × (m+1)/2` lattice points is removed.
    pub fn l_shape(m: usize) -> Result<Self> {
        if m.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "L-shape needs an odd point count per axis, got {m}"
            )));
        }
        let cut = (m - 1) / 2;
        let mask = (0..m * m)
            .map(|k| !(k / m >= cut && k % m >= cut))
            .collect();
        Grid::with_mask(2, m, &[(0.0, 1.0), (0.0, 1.0)], mask)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.d).map(|k| (self.lower[k], self.upper[k])).collect()
    }

    /// Number of points in the bounding lattice, `m^d`.
    pub fn lattice_len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn n_active(&self) -> usize {
        if self.is_full() {
            self.lattice_len()
        } else {
            self.active.len()
        }
    }

    pub fn is_full(&self) -> bool {
        self.mask.is_none()
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_active_lattice(&self, lin: usize) -> bool {
        match &self.mask {
            None => lin < self.lattice_len(),
            Some(mask) => mask.get(lin).copied().unwrap_or(false),
        }
    }

    /// Lattice index of the `k`-th active point.
    pub fn lattice_index(&self, k: usize) -> usize {
        if self.is_full() {
            k
        } else {
            self.active[k]
        }
    }

    /// Position among the active points of lattice point `lin`, if active.
    pub fn active_position(&self, lin: usize) -> Option<usize> {
        if self.is_full() {
            (lin < self.lattice_len()).then_some(lin)
        } else {
            self.active.binary_search(&lin).ok()
        }
    }

    /// Zero-based multi-index of lattice point `lin`; unused axes are 0.
    pub fn multi_index(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for k in (0..self.d).rev() {
            idx[k] = lin % self.m;
            lin /= self.m;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx[..self.d].iter().fold(0, |acc, &i| acc * self.m + i)
    }

    /// Coordinates of lattice point `lin`.
    pub fn coordinates(&self, lin: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(lin);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.d {
            x[k] = self.lower[k] + self.h * (idx[k] + 1) as f64;
        }
        x
    }

    /// Coordinates of the `k`-th active point.
    pub fn active_coordinates(&self, k: usize) -> [f64; MAX_DIM] {
        self.coordinates(self.lattice_index(k))
    }

    /// Active position of the grid point nearest to `x`, if that point is active.
    pub fn nearest_active(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0; MAX_DIM];
        for k in 0..self.d {
            let j = ((x[k] - self.lower[k]) / self.h).round();
            if j < 1.0 || j > self.m as f64 {
                return None;
            }
            idx[k] = j as usize - 1;
        }
        self.active_position(self.linear_index(&idx))
    }

    /// Copies active values into a zero-initialized lattice array.
    pub fn scatter(&self, values: &[f64], lattice: &mut [f64]) {
        if self.is_full() {
            lattice.copy_from_slice(values);
        } else {
            lattice.fill(0.0);
            for (&lin, &v) in self.active.iter().zip(values) {
                lattice[lin] = v;
            }
        }
    }

    /// Reads the active entries out of a lattice array.
    pub fn gather(&self, lattice: &[f64], values: &mut [f64]) {
        if self.is_full() {
            values.copy_from_slice(lattice);
        } else {
            for (v, &lin) in values.iter_mut().zip(&self.active) {
                *v = lattice[lin];
            }
        }
    }

    /// True when both grids describe the same points.
    pub fn same_points(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

/// Full grid, shared. See [`Grid::new`].
pub fn make_grid(d: usize, m: usize, bounds: &[(f64, f64)]) -> Result<Arc<Grid>> {
    Grid::new(d, m, bounds).map(Arc::new)
}

/// L-shaped grid, shared. See [`Grid::l_shape`].
pub fn make_l_shape(m: usize) -> Result<Arc<Grid>> {
    Grid::l_shape(m).map(Arc::new)
}

/// Real values on the active points of a grid, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_active() {
            return Err(Error::Dimension(format!(
                "field has {} values, grid has {} active points",
                values.len(),
                grid.n_active()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.n_active()];
        Field { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.n_active()];
        Field { grid, values }
    }

    /// Samples `f` at every active point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.n_active())
            .map(|k| f(&grid.active_coordinates(k)[..d]))
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails unless the field lives on (a grid equal to) `grid`.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.same_points(grid) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "field lives on a d={} m={} grid, expected d={} m={}",
                self.grid.dim(),
                self.grid.m(),
                grid.dim(),
                grid.m()
            )))
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }
}

/// Samples a fine field on the nested coarse grid (`m_f = 2 m_c + 1`).
///
/// Coarse point `j` coincides with fine point `2j`, so this is a pure copy.
pub fn restrict(fine: &Field, coarse: &Arc<Grid>) -> Result<Field> {
    let fg = fine.grid();
    if fg.dim() != coarse.dim() || fg.m() != 2 * coarse.m() + 1 {
        return Err(Error::Dimension(format!(
            "grids are not nested: fine m={} d={}, coarse m={} d={}",
            fg.m(),
            fg.dim(),
            coarse.m(),
            coarse.dim()
        )));
    }
    let same_box = fg
        .bounds()
        .iter()
        .zip(coarse.bounds())
        .all(|(a, b)| (a.0 - b.0).abs() <= 1e-14 && (a.1 - b.1).abs() <= 1e-14);
    if !same_box {
        return Err(Error::Dimension("nested grids must share a box".into()));
    }
    let d = coarse.dim();
    let mut values = Vec::with_capacity(coarse.n_active());
    for k in 0..coarse.n_active() {
        let ci = coarse.multi_index(coarse.lattice_index(k));
        let mut fi = [0; MAX_DIM];
        for a in 0..d {
            // one-based j maps to 2j
            fi[a] = 2 * (ci[a] + 1) - 1;
        }
        let pos = fg.active_position(fg.linear_index(&fi)).ok_or_else(|| {
            Error::Dimension(format!("coarse point {ci:?} is inactive on the fine grid"))
        })?;
        values.push(fine.values()[pos]);
    }
    Field::new(coarse.clone(), values)
}
