//! The discrete operator `M` as a fast translation-invariant convolution.
//!
//! Inputs are zero-extended to the bounding lattice (extended homogeneous
//! Dirichlet condition), convolved with the [`KernelTable`] through a cached
//! spectral multiplier, and restricted back to the active points.

mod conv;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::grid::{Field, Grid, MAX_DIM};
use crate::kernel::{build_stencil, check_consistent, KernelTable, OperatorConstants};
use crate::krylov::LinearOperator;
use crate::{Error, Result};

pub use conv::next_fast_len;

/// Largest `n_active` accepted by [`FracLapOperator::apply_dense`].
pub const DENSE_CAP: usize = 10_000;

/// Build and apply timings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorTimings {
    pub build: Duration,
    pub applies: u64,
    pub apply_total: Duration,
}

impl OperatorTimings {
    pub fn mean_apply(&self) -> Option<Duration> {
        (self.applies > 0).then(|| self.apply_total / self.applies as u32)
    }
}

#[derive(Debug)]
pub struct FracLapOperator {
    grid: Arc<Grid>,
    consts: OperatorConstants,
    table: KernelTable,
    conv: conv::Convolver,
    build_time: Duration,
    applies: AtomicU64,
    apply_nanos: AtomicU64,
}

/// See [`FracLapOperator::new`].
pub fn build_operator(grid: Arc<Grid>, consts: OperatorConstants) -> Result<FracLapOperator> {
    FracLapOperator::new(grid, consts)
}

impl FracLapOperator {
    pub fn new(grid: Arc<Grid>, consts: OperatorConstants) -> Result<Self> {
        let start = Instant::now();
        check_consistent(&grid, &consts)?;
        let table = build_stencil(&grid, &consts)?;
        let conv = conv::Convolver::new(&table);
        Ok(FracLapOperator {
            grid,
            consts,
            table,
            conv,
            build_time: start.elapsed(),
            applies: AtomicU64::new(0),
            apply_nanos: AtomicU64::new(0),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn constants(&self) -> &OperatorConstants {
        &self.consts
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    /// Per-axis size of the circulant embedding.
    pub fn embedding_len(&self) -> usize {
        self.conv.embedding_len()
    }

    /// Real half spectrum of the embedded kernel (scaled by the inverse
    /// transform normalization).
    pub fn multiplier(&self) -> &[f64] {
        self.conv.multiplier()
    }

    pub fn timings(&self) -> OperatorTimings {
        OperatorTimings {
            build: self.build_time,
            applies: self.applies.load(Ordering::Relaxed),
            apply_total: Duration::from_nanos(self.apply_nanos.load(Ordering::Relaxed)),
        }
    }

    /// `y = M x` on raw active-point vectors.
    pub fn apply_slice(&self, x: &[f64], y: &mut [f64]) {
        let start = Instant::now();
        let n = self.grid.n_active();
        assert_eq!(x.len(), n, "input length");
        assert_eq!(y.len(), n, "output length");
        if self.grid.is_full() {
            self.conv.convolve(x, y);
        } else {
            let len = self.grid.lattice_len();
            let mut ext = vec![0.0; len];
            let mut out = vec![0.0; len];
            self.grid.scatter(x, &mut ext);
            self.conv.convolve(&ext, &mut out);
            self.grid.gather(&out, y);
        }
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.apply_nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_grid(&self.grid)?;
        let mut out = vec![0.0; u.len()];
        self.apply_slice(u.values(), &mut out);
        Field::new(self.grid.clone(), out)
    }

    /// `O(N²)` direct evaluation from the constants, without the table or
    /// any transform.
    pub fn apply_dense(&self, u: &Field) -> Result<Field> {
        u.check_grid(&self.grid)?;
        let n = self.grid.n_active();
        if n > DENSE_CAP {
            return Err(Error::Size { n, cap: DENSE_CAP });
        }
        let c = &self.consts;
        let ch = c.c_ad * c.h.powi(c.d as i32);
        let mut out = dense_kernel_part(&self.grid, c, u.values());
        let fd = apply_fd_laplacian(&self.grid, 1.0, u)?;
        for ((o, &ui), &l) in out.iter_mut().zip(u.values()).zip(fd.values()) {
            *o = ch * (c.a1 * ui - *o + (c.a2 + c.a3) * l);
        }
        Field::new(self.grid.clone(), out)
    }
}

/// `Σ_{j≠i} u_j / |y_i - y_j|^{d+α}` over active points.
fn dense_kernel_part(grid: &Grid, c: &OperatorConstants, u: &[f64]) -> Vec<f64> {
    let n = grid.n_active();
    let idx: Vec<[usize; MAX_DIM]> = (0..n)
        .map(|k| grid.multi_index(grid.lattice_index(k)))
        .collect();
    let expo = -(c.d as f64 + c.alpha) / 2.0;
    let h2 = c.h * c.h;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let r2: f64 = (0..c.d)
                .map(|k| {
                    let o = idx[i][k] as f64 - idx[j][k] as f64;
                    o * o
                })
                .sum();
            s += u[j] * (h2 * r2).powf(expo);
        }
        out[i] = s;
    }
    out
}

/// `coeff · Δ_h u` with the `(2d+1)`-point stencil; inactive and exterior
/// neighbors count as zero.
pub fn apply_fd_laplacian(grid: &Grid, coeff: f64, u: &Field) -> Result<Field> {
    u.check_grid(grid)?;
    let (d, m) = (grid.dim(), grid.m() as isize);
    let scale = coeff / (grid.h() * grid.h());
    let mut ext = vec![0.0; grid.lattice_len()];
    grid.scatter(u.values(), &mut ext);
    let mut out = vec![0.0; u.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let lin = grid.lattice_index(k);
        let idx = grid.multi_index(lin);
        let mut acc = -2.0 * d as f64 * ext[lin];
        let mut stride = 1isize;
        for axis in (0..d).rev() {
            let i = idx[axis] as isize;
            if i > 0 {
                acc += ext[(lin as isize - stride) as usize];
            }
            if i + 1 < m {
                acc += ext[(lin as isize + stride) as usize];
            }
            stride *= m;
        }
        *o = scale * acc;
    }
    Field::new(u.grid().clone(), out)
}

impl LinearOperator for FracLapOperator {
    fn len(&self) -> usize {
        self.grid.n_active()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.apply_slice(x, y);
    }
}
