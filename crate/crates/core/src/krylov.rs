//! Preconditioned conjugate gradients.

use std::io::Write;
use std::time::Instant;

use crate::grid::Field;
use crate::{Error, Result};

/// A linear map on vectors of a fixed length.
pub trait LinearOperator {
    fn len(&self) -> usize;

    /// `y = A x`.
    fn apply_to(&self, x: &[f64], y: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The identity map on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn len(&self) -> usize {
        self.0
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl PcgOptions {
    pub fn new(tol: f64, max_iterations: usize) -> Self {
        PcgOptions {
            tol,
            max_iterations,
        }
    }

    /// Default iteration cap for dimension `d`: 250 in 3D, 1000 otherwise.
    pub fn for_dim(d: usize, tol: f64) -> Self {
        PcgOptions::new(tol, default_max_iterations(d))
    }
}

pub fn default_max_iterations(d: usize) -> usize {
    if d >= 3 {
        250
    } else {
        1000
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `‖b - A x‖/‖b‖` of the returned iterate, recomputed from scratch.
    pub relative_residual: f64,
    /// Recurrence relative residual after each iteration; entry 0 is the
    /// initial guess.
    pub residual_history: Vec<f64>,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveReport {
    /// CSV `iter,relres`.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<history>", e);
        writeln!(out, "iter,relres").map_err(io)?;
        for (k, r) in self.residual_history.iter().enumerate() {
            writeln!(out, "{k},{r:e}").map_err(io)?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` by PCG with preconditioner `minv` (identity if `None`).
///
/// Iterates until the recurrence residual drops below `tol`, then verifies
/// with a recomputed residual; if that check fails the recurrence restarts
/// from the true residual. Returns `converged = false` (not an error) when
/// the iteration cap is hit.
pub fn pcg(
    a: &dyn LinearOperator,
    minv: Option<&dyn LinearOperator>,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &PcgOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = a.len();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, operator acts on {n}",
            b.len()
        )));
    }
    if let Some(m) = minv {
        if m.len() != n {
            return Err(Error::Dimension(format!(
                "preconditioner acts on {}, operator on {n}",
                m.len()
            )));
        }
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Config(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    let precondition = |r: &[f64], z: &mut [f64]| match minv {
        Some(m) => m.apply_to(r, z),
        None => z.copy_from_slice(r),
    };

    let bnorm = norm(b);
    let mut x = match x0 {
        Some(x0) if x0.len() != n => {
            return Err(Error::Dimension(format!(
                "initial guess has length {}, operator acts on {n}",
                x0.len()
            )))
        }
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if bnorm == 0.0 {
        x.fill(0.0);
        let report = SolveReport {
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
            residual_history: vec![0.0],
            wall_time: start.elapsed().as_secs_f64(),
        };
        return Ok((x, report));
    }

    let mut ap = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut [f64], ap: &mut [f64]| {
        a.apply_to(x, ap);
        for ((ri, bi), ai) in r.iter_mut().zip(b).zip(ap.iter()) {
            *ri = bi - ai;
        }
    };
    let mut r = b.to_vec();
    if x0.is_some() {
        true_residual(&x, &mut r, &mut ap);
    }
    let mut z = vec![0.0; n];
    let mut relres = norm(&r) / bnorm;
    let mut history = vec![relres];
    let mut iterations = 0;
    let mut converged = relres <= opts.tol;

    'restart: while !converged && iterations < opts.max_iterations {
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < opts.max_iterations {
            a.apply_to(&p, &mut ap);
            let curvature = dot(&p, &ap);
            if !(curvature > 0.0) {
                return Err(Error::Breakdown {
                    iteration: iterations + 1,
                    curvature,
                });
            }
            let step = rz / curvature;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            iterations += 1;
            relres = norm(&r) / bnorm;
            history.push(relres);
            if relres <= opts.tol {
                true_residual(&x, &mut r, &mut ap);
                relres = norm(&r) / bnorm;
                converged = relres <= opts.tol;
                continue 'restart;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    if !converged {
        true_residual(&x, &mut r, &mut ap);
        relres = norm(&r) / bnorm;
    }
    let report = SolveReport {
        iterations,
        converged,
        relative_residual: relres,
        residual_history: history,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

/// [`pcg`] on fields; the solution lives on `b`'s grid.
pub fn solve(
    a: &dyn LinearOperator,
    minv: Option<&dyn LinearOperator>,
    b: &Field,
    x0: Option<&Field>,
    opts: &PcgOptions,
) -> Result<(Field, SolveReport)> {
    if let Some(x0) = x0 {
        x0.check_grid(b.grid())?;
    }
    let (x, report) = pcg(a, minv, b.values(), x0.map(Field::values), opts)?;
    Ok((Field::new(b.grid().clone(), x)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Dense {
        n: usize,
        a: Vec<f64>,
    }

    impl LinearOperator for Dense {
        fn len(&self) -> usize {
            self.n
        }

        fn apply_to(&self, x: &[f64], y: &mut [f64]) {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = dot(&self.a[i * self.n..(i + 1) * self.n], x);
            }
        }
    }

    struct Diag(Vec<f64>);

    impl LinearOperator for Diag {
        fn len(&self) -> usize {
            self.0.len()
        }

        fn apply_to(&self, x: &[f64], y: &mut [f64]) {
            for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
                *yi = xi / d;
            }
        }
    }

    /// `B Bᵀ + n I` from a seed-free deterministic pattern.
    fn spd(n: usize, skew: f64) -> Dense {
        let b: Vec<f64> = (0..n * n).map(|k| ((k * 7 % 11) as f64 - 5.0) * skew).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = dot(&b[i * n..(i + 1) * n], &b[j * n..(j + 1) * n]);
            }
            a[i * n + i] += (i + 1) as f64;
        }
        Dense { n, a }
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![1.0, -2.0, 3.0];
        let (x, rep) = pcg(&Identity(3), None, &b, None, &PcgOptions::new(1e-12, 10)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert_eq!(x, b);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = spd(5, 0.3);
        let (x, rep) = pcg(&a, None, &[0.0; 5], Some(&[1.0; 5]), &PcgOptions::new(1e-8, 10)).unwrap();
        assert_eq!(x, vec![0.0; 5]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn solves_dense_system() {
        let a = spd(20, 0.4);
        let xs: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; 20];
        a.apply_to(&xs, &mut b);
        let opts = PcgOptions::new(1e-12, 200);
        let (x, rep) = pcg(&a, None, &b, None, &opts).unwrap();
        assert!(rep.converged && rep.relative_residual <= 1e-12);
        assert_eq!(rep.residual_history.len(), rep.iterations + 1);
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobi_preconditioner_helps() {
        let n = 40;
        let mut a = spd(n, 0.05);
        for i in 0..n {
            a.a[i * n + i] *= (1 + i * i) as f64;
        }
        let diag: Vec<f64> = (0..n).map(|i| a.a[i * n + i]).collect();
        let b = vec![1.0; n];
        let opts = PcgOptions::new(1e-10, 500);
        let (_, plain) = pcg(&a, None, &b, None, &opts).unwrap();
        let (_, pre) = pcg(&a, Some(&Diag(diag)), &b, None, &opts).unwrap();
        assert!(pre.converged && plain.converged);
        assert!(pre.iterations < plain.iterations);
    }

    #[test]
    fn a_norm_error_decreases() {
        let a = spd(15, 0.5);
        let xs = vec![1.0; 15];
        let mut b = vec![0.0; 15];
        a.apply_to(&xs, &mut b);
        let mut last = f64::INFINITY;
        for k in 1..15 {
            let (x, _) = pcg(&a, None, &b, None, &PcgOptions::new(1e-15, k)).unwrap();
            let e: Vec<f64> = x.iter().zip(&xs).map(|(u, v)| u - v).collect();
            let mut ae = vec![0.0; 15];
            a.apply_to(&e, &mut ae);
            let err = dot(&e, &ae).sqrt();
            assert!(err <= last * (1.0 + 1e-10), "iteration {k}");
            last = err;
        }
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = Dense {
            n: 2,
            a: vec![1.0, 0.0, 0.0, -1.0],
        };
        let err = pcg(&a, None, &[0.0, 1.0], None, &PcgOptions::new(1e-8, 10)).unwrap_err();
        assert!(matches!(err, Error::Breakdown { iteration: 1, .. }));
    }

    #[test]
    fn reports_non_convergence() {
        let a = spd(30, 0.5);
        let (_, rep) = pcg(&a, None, &[1.0; 30], None, &PcgOptions::new(1e-14, 2)).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
        assert!(rep.relative_residual > 1e-14);
    }

    #[test]
    fn history_csv() {
        let (_, rep) = pcg(&Identity(2), None, &[1.0, 1.0], None, &PcgOptions::new(0.5, 5)).unwrap();
        let mut buf = Vec::new();
        rep.write_history_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iter,relres\n0,1e0\n1,0e0\n");
    }

    proptest! {
        #[test]
        fn scaled_preconditioner_same_iterates(c in 0.01f64..100.0) {
            let n = 25;
            let a = spd(n, 0.2);
            let diag: Vec<f64> = (0..n).map(|i| a.a[i * n + i]).collect();
            let scaled: Vec<f64> = diag.iter().map(|d| d / c).collect();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
            let opts = PcgOptions::new(1e-10, 100);
            let (x1, r1) = pcg(&a, Some(&Diag(diag)), &b, None, &opts).unwrap();
            let (x2, r2) = pcg(&a, Some(&Diag(scaled)), &b, None, &opts).unwrap();
            prop_assert_eq!(r1.iterations, r2.iterations);
            for (u, v) in x1.iter().zip(&x2) {
                prop_assert!((u - v).abs() < 1e-8 * (1.0 + u.abs()));
            }
        }
    }
}
