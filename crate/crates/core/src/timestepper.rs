//! Crank–Nicolson for `u_t + M u = f`:
//!
//! ```text
//! (I + Δt/2 M) u^{k+1} = (I - Δt/2 M) u^k + Δt/2 (f^k + f^{k+1})
//! ```
//!
//! Each step is one PCG solve seeded with `u^k` and preconditioned by
//! `I + Δt/2 C h^d |A2 + A3| (-Δ_h)`.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use crate::fastop::FracLapOperator;
use crate::grid::Field;
use crate::krylov::{pcg, LinearOperator, PcgOptions, SolveReport};
use crate::precond::PoissonPreconditioner;
use crate::{Error, Result};

/// `x ↦ x + c M x`.
struct ShiftedOperator<'a> {
    op: &'a FracLapOperator,
    c: f64,
}

impl LinearOperator for ShiftedOperator<'_> {
    fn len(&self) -> usize {
        self.op.len()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply_slice(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi + self.c * *yi;
        }
    }
}

fn check_step_inputs(
    op: &FracLapOperator,
    pc: Option<&PoissonPreconditioner>,
    fields: &[&Field],
    dt: f64,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    for f in fields {
        f.check_grid(op.grid())?;
    }
    if let Some(pc) = pc {
        pc.grid().same_points(op.grid()).then_some(()).ok_or_else(|| {
            Error::Dimension("preconditioner and operator live on different grids".into())
        })?;
        let gamma = 0.5 * dt * op.constants().laplacian_coefficient();
        if pc.sigma() != 1.0 || (pc.gamma() - gamma).abs() > 1e-12 * gamma {
            return Err(Error::Config(format!(
                "preconditioner (sigma={}, gamma={:e}) does not match a step of dt={dt}",
                pc.sigma(),
                pc.gamma()
            )));
        }
    }
    Ok(())
}

fn step_unchecked(
    op: &FracLapOperator,
    pc: Option<&PoissonPreconditioner>,
    u_k: &Field,
    f_k: &Field,
    f_k1: &Field,
    dt: f64,
    opts: &PcgOptions,
) -> Result<(Field, SolveReport)> {
    let half = 0.5 * dt;
    let mut rhs = vec![0.0; u_k.len()];
    op.apply_slice(u_k.values(), &mut rhs);
    for (i, r) in rhs.iter_mut().enumerate() {
        *r = u_k.values()[i] - half * *r + half * (f_k.values()[i] + f_k1.values()[i]);
    }
    let system = ShiftedOperator { op, c: half };
    let minv = pc.map(|p| p as &dyn LinearOperator);
    let (u, report) = pcg(&system, minv, &rhs, Some(u_k.values()), opts)?;
    Ok((Field::new(u_k.grid().clone(), u)?, report))
}

/// One Crank–Nicolson step. `pc = None` runs unpreconditioned CG.
pub fn cn_step(
    op: &FracLapOperator,
    pc: Option<&PoissonPreconditioner>,
    u_k: &Field,
    f_k: &Field,
    f_k1: &Field,
    dt: f64,
    opts: &PcgOptions,
) -> Result<(Field, SolveReport)> {
    check_step_inputs(op, pc, &[u_k, f_k, f_k1], dt)?;
    let (u, report) = step_unchecked(op, pc, u_k, f_k, f_k1, dt, opts)?;
    if !report.converged {
        return Err(Error::StepFailed {
            step: 1,
            report: Box::new(report),
        });
    }
    Ok((u, report))
}

/// Pointwise source `f(x, t)`.
pub type Source = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    /// `None` means `f ≡ 0`.
    pub source: Option<Source>,
    pub opts: PcgOptions,
    /// Keep every `record`-th field (and the final one); `None` keeps none.
    pub record: Option<usize>,
}

impl fmt::Debug for EvolutionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionConfig")
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("source", &self.source.as_ref().map(|_| "<fn>"))
            .field("opts", &self.opts)
            .field("record", &self.record)
            .finish()
    }
}

impl EvolutionConfig {
    /// Number of steps; `t_final/dt` must be a positive integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "need dt > 0 and T > 0, got dt={} T={}",
                self.dt, self.t_final
            )));
        }
        let n = (self.t_final / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::Config(format!(
                "T={} is not an integer multiple of dt={}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Set by whoever writes the snapshot of this step to disk.
    pub field_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<(usize, Field)>,
}

impl Trajectory {
    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }

    /// CSV `step,t,iters,relres[,field-file]`; the last column appears when
    /// any step has a snapshot file.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<trajectory>", e);
        let with_files = self.steps.iter().any(|s| s.field_file.is_some());
        let header = if with_files {
            "step,t,iters,relres,field-file"
        } else {
            "step,t,iters,relres"
        };
        writeln!(out, "{header}").map_err(io)?;
        for s in &self.steps {
            write!(out, "{},{:e},{},{:e}", s.step, s.t, s.iterations, s.relative_residual)
                .map_err(io)?;
            if with_files {
                let name = s
                    .field_file
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default();
                write!(out, ",{name}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        Ok(())
    }
}

fn sample_source(op: &FracLapOperator, source: &Option<Source>, t: f64) -> Field {
    match source {
        Some(f) => Field::from_fn(op.grid().clone(), |x| f(x, t)),
        None => Field::zeros(op.grid().clone()),
    }
}

/// Steps from `t = 0` to `T`. Per-step records go into `trajectory` as they
/// complete, so it holds the partial history if a step fails.
pub fn evolve(
    op: &FracLapOperator,
    pc: Option<&PoissonPreconditioner>,
    u0: &Field,
    config: &EvolutionConfig,
    trajectory: &mut Trajectory,
) -> Result<Field> {
    let steps = config.steps()?;
    check_step_inputs(op, pc, &[u0], config.dt)?;
    let mut u = u0.clone();
    let mut f_k = sample_source(op, &config.source, 0.0);
    for step in 1..=steps {
        let t = step as f64 * config.dt;
        let f_k1 = sample_source(op, &config.source, t);
        let (next, report) = step_unchecked(op, pc, &u, &f_k, &f_k1, config.dt, &config.opts)?;
        if !report.converged {
            return Err(Error::StepFailed {
                step,
                report: Box::new(report),
            });
        }
        trajectory.steps.push(StepRecord {
            step,
            t,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
            field_file: None,
        });
        u = next;
        f_k = f_k1;
        if let Some(stride) = config.record {
            if step % stride.max(1) == 0 || step == steps {
                trajectory.snapshots.push((step, u.clone()));
            }
        }
    }
    Ok(u)
}
