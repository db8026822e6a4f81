//! Exact solves with `σI + γ(-Δ_h)`, the finite-difference part of `M`.
//!
//! Full boxes diagonalize in the sine basis. Occluded grids (or any grid on
//! request) use a sparse Cholesky factorization with a fill-reducing
//! ordering.

mod dst;

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::MatMut;

use crate::fastop::apply_fd_laplacian;
use crate::grid::{Field, Grid};
use crate::kernel::OperatorConstants;
use crate::krylov::LinearOperator;
use crate::{Error, Result};

use dst::Dst1;

/// Which solver sits behind the preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Spectral on full grids, factorized otherwise.
    #[default]
    Auto,
    Spectral,
    Factorized,
}

enum Solver {
    Spectral { dst: Dst1, eig: Vec<f64> },
    Factorized(Box<Llt<usize, f64>>),
}

pub struct PoissonPreconditioner {
    grid: Arc<Grid>,
    sigma: f64,
    gamma: f64,
    solver: Solver,
    build_time: Duration,
}

impl std::fmt::Debug for PoissonPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonPreconditioner")
            .field("sigma", &self.sigma)
            .field("gamma", &self.gamma)
            .field("backend", &self.backend())
            .finish_non_exhaustive()
    }
}

/// See [`PoissonPreconditioner::new`].
pub fn build_precond(grid: Arc<Grid>, sigma: f64, gamma: f64) -> Result<PoissonPreconditioner> {
    PoissonPreconditioner::new(grid, sigma, gamma, Backend::Auto)
}

/// `z` with `(σI + γ(-Δ_h)) z = r`.
pub fn apply_precond(pc: &PoissonPreconditioner, r: &Field) -> Result<Field> {
    pc.apply(r)
}

impl PoissonPreconditioner {
    pub fn new(grid: Arc<Grid>, sigma: f64, gamma: f64, backend: Backend) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be nonnegative, got {sigma}")));
        }
        let start = Instant::now();
        let spectral = match backend {
            Backend::Auto => grid.is_full(),
            Backend::Spectral => {
                if !grid.is_full() {
                    return Err(Error::Config(
                        "the spectral backend needs a full grid".into(),
                    ));
                }
                true
            }
            Backend::Factorized => false,
        };
        let solver = if spectral {
            spectral_solver(&grid)
        } else {
            factorize(&grid, sigma, gamma)?
        };
        Ok(PoissonPreconditioner {
            grid,
            sigma,
            gamma,
            solver,
            build_time: start.elapsed(),
        })
    }

    /// Preconditioner for `M u = f`: `γ = C h^d |A2 + A3|`, `σ = 0`.
    pub fn elliptic(grid: Arc<Grid>, consts: &OperatorConstants) -> Result<Self> {
        Self::new(grid, 0.0, consts.laplacian_coefficient(), Backend::Auto)
    }

    /// Preconditioner for one Crank–Nicolson step: `I + (Δt/2) C h^d |A2 + A3| (-Δ_h)`.
    pub fn time_step(grid: Arc<Grid>, consts: &OperatorConstants, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        Self::new(grid, 1.0, 0.5 * dt * consts.laplacian_coefficient(), Backend::Auto)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn backend(&self) -> Backend {
        match self.solver {
            Solver::Spectral { .. } => Backend::Spectral,
            Solver::Factorized(_) => Backend::Factorized,
        }
    }

    /// Setup time (eigenvalues or factorization).
    pub fn build_time(&self) -> Duration {
        self.build_time
    }

    /// Smallest eigenvalue of `σI + γ(-Δ_h)` on a full grid.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        match &self.solver {
            Solver::Spectral { eig, .. } => {
                let lam = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                Some(self.sigma + self.gamma * self.grid.dim() as f64 * lam)
            }
            Solver::Factorized(_) => None,
        }
    }

    pub fn apply(&self, r: &Field) -> Result<Field> {
        r.check_grid(&self.grid)?;
        let mut z = vec![0.0; r.len()];
        self.solve_slice(r.values(), &mut z);
        Field::new(self.grid.clone(), z)
    }

    /// `(σI + γ(-Δ_h)) z`, for residual checks.
    pub fn apply_matrix(&self, z: &Field) -> Result<Field> {
        let mut out = apply_fd_laplacian(&self.grid, -self.gamma, z)?;
        for (o, &v) in out.values_mut().iter_mut().zip(z.values()) {
            *o += self.sigma * v;
        }
        Ok(out)
    }

    pub fn solve_slice(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.grid.n_active(), "rhs length");
        assert_eq!(z.len(), r.len(), "solution length");
        match &self.solver {
            Solver::Spectral { dst, eig } => {
                z.copy_from_slice(r);
                let (d, m) = (self.grid.dim(), self.grid.m());
                transform_all_axes(dst, z, d, m);
                let norm = (2.0 / (m + 1) as f64).powi(d as i32);
                for (lin, v) in z.iter_mut().enumerate() {
                    let mut lam = 0.0;
                    let mut rest = lin;
                    for _ in 0..d {
                        lam += eig[rest % m];
                        rest /= m;
                    }
                    *v *= norm / (self.sigma + self.gamma * lam);
                }
                transform_all_axes(dst, z, d, m);
            }
            Solver::Factorized(llt) => {
                z.copy_from_slice(r);
                let n = z.len();
                llt.solve_in_place(MatMut::from_column_major_slice_mut(z, n, 1));
            }
        }
    }
}

/// `λ_k = (2 - 2cos(πk/(m+1)))/h²` for `k = 1..=m`.
fn sine_eigenvalues(m: usize, h: f64) -> Vec<f64> {
    (1..=m)
        .map(|k| (2.0 - 2.0 * (PI * k as f64 / (m + 1) as f64).cos()) / (h * h))
        .collect()
}

fn spectral_solver(grid: &Grid) -> Solver {
    Solver::Spectral {
        dst: Dst1::new(grid.m()),
        eig: sine_eigenvalues(grid.m(), grid.h()),
    }
}

/// Sine transform along every axis of an `m^d` lexicographic array.
fn transform_all_axes(dst: &Dst1, x: &mut [f64], d: usize, m: usize) {
    let mut s = dst.scratch();
    let mut line = vec![0.0; m];
    for axis in 0..d {
        let stride = m.pow((d - 1 - axis) as u32);
        if stride == 1 {
            for row in x.chunks_exact_mut(m) {
                dst.transform(row, &mut s);
            }
            continue;
        }
        let block = stride * m;
        for start in (0..x.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = x[base + k * stride];
                }
                dst.transform(&mut line, &mut s);
                for (k, v) in line.iter().enumerate() {
                    x[base + k * stride] = *v;
                }
            }
        }
    }
}

fn factorize(grid: &Grid, sigma: f64, gamma: f64) -> Result<Solver> {
    let n = grid.n_active();
    let (d, m) = (grid.dim(), grid.m());
    let off = -gamma / (grid.h() * grid.h());
    let diag = sigma - 2.0 * d as f64 * off;
    let mut triplets = Vec::with_capacity(n * (d + 1));
    for k in 0..n {
        let lin = grid.lattice_index(k);
        let idx = grid.multi_index(lin);
        triplets.push(Triplet::new(k, k, diag));
        let mut stride = 1;
        // lower triangle only: neighbors with a smaller lattice index
        for axis in (0..d).rev() {
            if idx[axis] > 0 {
                if let Some(j) = grid.active_position(lin - stride) {
                    triplets.push(Triplet::new(k, j, off));
                }
            }
            stride *= m;
        }
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let llt = mat
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    Ok(Solver::Factorized(Box::new(llt)))
}

impl LinearOperator for PoissonPreconditioner {
    fn len(&self) -> usize {
        self.grid.n_active()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.solve_slice(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: &Arc<Grid>, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.n_active()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::new(grid.clone(), v).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn residual(pc: &PoissonPreconditioner, r: &Field) -> f64 {
        let z = pc.apply(r).unwrap();
        let az = pc.apply_matrix(&z).unwrap();
        let diff: Vec<f64> = az.values().iter().zip(r.values()).map(|(a, b)| a - b).collect();
        norm(&diff) / norm(r.values())
    }

    #[test]
    fn spectral_is_exact_solve() {
        for (d, m) in [(1, 63), (2, 20), (3, 9)] {
            let g = Arc::new(Grid::cube(d, m, 0.0, 1.0).unwrap());
            for sigma in [0.0, 1.0] {
                let pc = build_precond(g.clone(), sigma, 0.3).unwrap();
                assert_eq!(pc.backend(), Backend::Spectral);
                assert!(residual(&pc, &random(&g, 1)) < 1e-12);
            }
        }
    }

    #[test]
    fn factorized_is_exact_solve_on_l_shape() {
        let g = Arc::new(Grid::l_shape(31).unwrap());
        let pc = build_precond(g.clone(), 0.0, 2.0).unwrap();
        assert_eq!(pc.backend(), Backend::Factorized);
        assert!(residual(&pc, &random(&g, 2)) < 1e-12);
    }

    #[test]
    fn backends_agree_on_full_grid() {
        let g = Arc::new(Grid::cube(2, 17, -1.0, 1.0).unwrap());
        let a = PoissonPreconditioner::new(g.clone(), 0.5, 1.5, Backend::Spectral).unwrap();
        let b = PoissonPreconditioner::new(g.clone(), 0.5, 1.5, Backend::Factorized).unwrap();
        let r = random(&g, 5);
        let za = a.apply(&r).unwrap();
        let zb = b.apply(&r).unwrap();
        let diff: Vec<f64> = za.values().iter().zip(zb.values()).map(|(x, y)| x - y).collect();
        assert!(norm(&diff) < 1e-10 * norm(zb.values()));
    }

    #[test]
    fn sine_mode_is_eigenvector() {
        let m = 31;
        let g = Arc::new(Grid::cube(1, m, 0.0, 1.0).unwrap());
        let (sigma, gamma) = (0.7, 0.01);
        let pc = build_precond(g.clone(), sigma, gamma).unwrap();
        let k = 3.0;
        let u = Field::from_fn(g.clone(), |x| (PI * k * x[0]).sin());
        let z = pc.apply(&u).unwrap();
        let h = g.h();
        let lam = (2.0 - 2.0 * (PI * k * h).cos()) / (h * h);
        for (a, b) in z.values().iter().zip(u.values()) {
            assert!((a - b / (sigma + gamma * lam)).abs() < 1e-12);
        }
    }

    #[test]
    fn min_eigenvalue_closed_form() {
        let g = Arc::new(Grid::cube(2, 15, 0.0, 1.0).unwrap());
        let pc = build_precond(g.clone(), 1.0, 0.2).unwrap();
        let h = g.h();
        let expect = 1.0 + 0.2 * 2.0 * (2.0 - 2.0 * (PI * h).cos()) / (h * h);
        assert!((pc.min_eigenvalue().unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn symmetric() {
        let g = Arc::new(Grid::l_shape(15).unwrap());
        let pc = build_precond(g.clone(), 0.0, 1.0).unwrap();
        let (r, s) = (random(&g, 7), random(&g, 8));
        let zr = pc.apply(&r).unwrap();
        let zs = pc.apply(&s).unwrap();
        let a: f64 = zr.values().iter().zip(s.values()).map(|(x, y)| x * y).sum();
        let b: f64 = r.values().iter().zip(zs.values()).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() < 1e-12 * a.abs().max(b.abs()));
    }

    #[test]
    fn rejects_bad_coefficients() {
        let g = Arc::new(Grid::cube(1, 7, 0.0, 1.0).unwrap());
        assert!(matches!(build_precond(g.clone(), 0.0, 0.0), Err(Error::Config(_))));
        assert!(build_precond(g.clone(), -1.0, 1.0).is_err());
        let l = Arc::new(Grid::l_shape(7).unwrap());
        assert!(PoissonPreconditioner::new(l, 0.0, 1.0, Backend::Spectral).is_err());
    }

    #[test]
    fn identity_limit() {
        let g = Arc::new(Grid::cube(2, 9, 0.0, 1.0).unwrap());
        let pc = build_precond(g.clone(), 1.0, 1e-14).unwrap();
        let r = random(&g, 3);
        let z = pc.apply(&r).unwrap();
        for (a, b) in z.values().iter().zip(r.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
