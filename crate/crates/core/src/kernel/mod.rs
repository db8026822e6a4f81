//! Constants and stencil of the discrete fractional Laplacian.
//!
//! At a grid point `y_i` the operator is
//!
//! ```text
//! (M u)_i = C h^d [ A1 u_i - Σ_{j≠i} u_j / |y_i - y_j|^{d+α} + (A2 + A3) L_FD u_i ]
//! ```
//!
//! where `A1` is the punctured lattice sum, `A2` the windowed second moment
//! of the lattice, `A3` the (negated) continuous windowed moment, and
//! `L_FD` the standard `(2d+1)`-point Laplacian. Because the coefficients only
//! depend on `y_i - y_j` the whole thing collapses into one translation
//! invariant [`KernelTable`].

mod lattice;
pub mod special;
mod window;

use std::f64::consts::PI;

use crate::grid::{Grid, MAX_DIM};
use crate::{Error, Result};

pub use lattice::{epstein_zeta, lattice_sum};
pub use window::{
    window_eval, window_moment, window_poly, window_poly_derivative, WindowSpec, WINDOW_COEFFS,
};

/// Default window radius in grid points.
pub const DEFAULT_RADIUS_POINTS: usize = 20;

/// Default relative tolerance for the `A1` lattice sum.
pub const DEFAULT_LATTICE_TOL: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension {d} not in 1..=3")))
    }
}

/// `C_{α,d} = 2^α Γ((d+α)/2) / (π^{d/2} |Γ(-α/2)|)`.
pub fn normalizing_constant(alpha: f64, d: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_dim(d)?;
    let d = d as f64;
    Ok(2f64.powf(alpha) * special::gamma((d + alpha) / 2.0)
        / (PI.powf(d / 2.0) * special::gamma(-alpha / 2.0).abs()))
}

/// Surface measure of the unit sphere in `R^d` (2, 2π, 4π).
pub fn sphere_measure(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by callers"),
    }
}

/// `A2 = (h^{2-d-α}/2) Σ_{j≠0} W(|j|h) j₁² |j|^{-(d+α)}`, a finite sum over
/// the window support.
pub fn compute_a2(alpha: f64, d: usize, spec: &WindowSpec) -> Result<f64> {
    check_alpha(alpha)?;
    check_dim(d)?;
    let r = spec.radius_points as i64;
    let p = d as f64 + alpha;
    let axes = |k: usize| if k < d { -r..=r } else { 0..=0 };
    let mut sum = 0.0;
    for i in axes(0) {
        for j in axes(1) {
            for k in axes(2) {
                let n2 = (i * i + j * j + k * k) as f64;
                if n2 == 0.0 || n2 >= (r * r) as f64 {
                    continue;
                }
                let norm = n2.sqrt();
                sum += spec.weight(norm * spec.h) * (i * i) as f64 * norm.powf(-p);
            }
        }
    }
    Ok(0.5 * spec.h.powf(2.0 - p) * sum)
}

/// `A3 = -(h^{-d}/2) ∫ W(|y|) y₁² |y|^{-(d+α)} dy`
/// `   = -(h^{-d}/2) (ω_{d-1}/d) δ^{2-α} ∫₀¹ s^{1-α} p(s) ds`.
pub fn compute_a3(alpha: f64, d: usize, h: f64, spec: &WindowSpec) -> Result<f64> {
    if alpha == 2.0 {
        return Err(Error::Config(
            "alpha = 2 makes the windowed moment singular".into(),
        ));
    }
    check_alpha(alpha)?;
    check_dim(d)?;
    Ok(-0.5 * h.powi(-(d as i32)) * sphere_measure(d) / d as f64
        * spec.delta.powf(2.0 - alpha)
        * window_moment(alpha))
}

/// Everything needed to materialize the stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConstants {
    pub alpha: f64,
    pub d: usize,
    pub h: f64,
    pub window: WindowSpec,
    /// `C_{α,d}`
    pub c_ad: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub lattice_tol: f64,
}

impl OperatorConstants {
    /// `C h^d |A2 + A3|`: the coefficient of `-Δ_h` inside the operator.
    pub fn laplacian_coefficient(&self) -> f64 {
        self.c_ad * self.h.powi(self.d as i32) * (self.a2 + self.a3).abs()
    }
}

pub fn build_constants(
    alpha: f64,
    d: usize,
    h: f64,
    radius_points: usize,
    lattice_tol: f64,
) -> Result<OperatorConstants> {
    check_alpha(alpha)?;
    check_dim(d)?;
    let window = WindowSpec::new(h, radius_points)?;
    let s = d as f64 + alpha;
    let consts = OperatorConstants {
        alpha,
        d,
        h,
        window,
        c_ad: normalizing_constant(alpha, d)?,
        a1: lattice_sum(d, s, lattice_tol)? * h.powf(-s),
        a2: compute_a2(alpha, d, &window)?,
        a3: compute_a3(alpha, d, h, &window)?,
        lattice_tol,
    };
    if !(consts.a1 > 0.0 && consts.a2 > 0.0 && consts.a3 < 0.0 && consts.a2 + consts.a3 < 0.0) {
        return Err(Error::Internal(format!(
            "constant signs violated: A1={:e} A2={:e} A3={:e}",
            consts.a1, consts.a2, consts.a3
        )));
    }
    Ok(consts)
}

/// Translation-invariant stencil `T(o)` over offsets `o ∈ {-(m-1)..(m-1)}^d`.
///
/// The table has the full symmetry of the cube, so only the nonnegative
/// octant is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    d: usize,
    m: usize,
    octant: Vec<f64>,
}

impl KernelTable {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Offsets range over `-(m-1)..=(m-1)` per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `T(o)`; panics if `o` is out of range.
    pub fn entry(&self, offset: &[i64]) -> f64 {
        assert_eq!(offset.len(), self.d, "offset dimension");
        let lin = offset.iter().fold(0usize, |acc, &o| {
            let a = o.unsigned_abs() as usize;
            assert!(a < self.m, "offset {o} outside table");
            acc * self.m + a
        });
        self.octant[lin]
    }

    /// Entries for nonnegative offsets, lexicographic.
    pub fn octant(&self) -> &[f64] {
        &self.octant
    }
}

/// Kernel entry as a function of the squared integer offset.
pub(crate) struct StencilCoefficients {
    diag: f64,
    neighbor_fd: f64,
    kernel_scale: f64,
    exponent: f64,
}

impl StencilCoefficients {
    pub(crate) fn new(consts: &OperatorConstants) -> Self {
        let d = consts.d as f64;
        let ch = consts.c_ad * consts.h.powi(consts.d as i32);
        let fd = (consts.a2 + consts.a3) / (consts.h * consts.h);
        StencilCoefficients {
            diag: ch * (consts.a1 - 2.0 * d * fd),
            neighbor_fd: ch * fd,
            // C h^d (h|o|)^{-(d+α)} = C h^{-α} |o|^{-(d+α)}
            kernel_scale: consts.c_ad * consts.h.powf(-consts.alpha),
            exponent: -(d + consts.alpha) / 2.0,
        }
    }

    #[inline]
    pub(crate) fn at(&self, n2: u64) -> f64 {
        match n2 {
            0 => self.diag,
            1 => self.neighbor_fd - self.kernel_scale,
            _ => -self.kernel_scale * (n2 as f64).powf(self.exponent),
        }
    }
}

/// Builds `T` for `grid` from `consts`.
pub fn build_stencil(grid: &Grid, consts: &OperatorConstants) -> Result<KernelTable> {
    check_consistent(grid, consts)?;
    let (d, m) = (grid.dim(), grid.m());
    let coeffs = StencilCoefficients::new(consts);
    let mut octant = Vec::with_capacity(m.pow(d as u32));
    let axes = |k: usize| if k < d { 0..m as u64 } else { 0..1 };
    for i in axes(0) {
        for j in axes(1) {
            for k in axes(2) {
                octant.push(coeffs.at(i * i + j * j + k * k));
            }
        }
    }
    Ok(KernelTable { d, m, octant })
}

pub(crate) fn check_consistent(grid: &Grid, consts: &OperatorConstants) -> Result<()> {
    if grid.dim() != consts.d {
        return Err(Error::Config(format!(
            "constants built for d={}, grid has d={}",
            consts.d,
            grid.dim()
        )));
    }
    if (grid.h() - consts.h).abs() > 1e-14 * grid.h() {
        return Err(Error::Config(format!(
            "constants built for h={:e}, grid has h={:e}",
            consts.h,
            grid.h()
        )));
    }
    Ok(())
}
