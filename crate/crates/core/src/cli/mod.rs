//! The `fraclap` command line.
//!
//! ```text
//! fraclap [--config FILE] <apply|solve|evolve|constants> [flags]
//! ```
//!
//! Values come from the config file first (`key=value` lines), then from
//! flags. `--alpha` and `--m` take comma-separated lists; every combination
//! produces one CSV row. With `--richardson`, `--m` names the coarse grid and
//! the medium/fine grids are `2m+1` and `4m+3`.
//!
//! CSV schemas:
//!
//! * apply: `alpha,d,N,e_app,t_con,t_app`
//! * solve: `alpha,d,N,precond,tol,iters,converged,relres,t_cg,e_sol`
//! * evolve: `step,t,iters,relres[,field-file]`
//! * constants: `alpha,d,h,delta,C,A1,A2,A3`
//! * any command with `--richardson`:
//!   `alpha,d,quantity,m_coarse,m_medium,m_fine,norm,rate,diff_coarse,diff_fine`
//!
//! Empty cells mean "not available" (e.g. `e_sol` without a known solution).

mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{relative_error, richardson_rate, RateEstimate};
use crate::analytic::ReferenceCase;
use crate::fastop::FracLapOperator;
use crate::grid::{write_field_binary, write_field_csv, Field, Grid};
use crate::kernel::{build_constants, OperatorConstants, DEFAULT_LATTICE_TOL};
use crate::krylov::{pcg, LinearOperator, PcgOptions, SolveReport};
use crate::precond::PoissonPreconditioner;
use crate::timestepper::{evolve, EvolutionConfig, Source, Trajectory};
use crate::{Error, Result};

pub use config::{Command, Domain, Precond, RunConfig, KEYS};

#[derive(Parser, Debug)]
#[command(name = "fraclap", version, about = "Fractional Laplacian on Cartesian grids")]
struct Cli {
    /// key=value file read before the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Apply the operator to a reference field; reports e_app and timings
    Apply(Flags),
    /// Solve M u = f by (P)CG; reports iterations and e_sol
    Solve(Flags),
    /// Crank–Nicolson time stepping; reports per-step iterations
    Evolve(Flags),
    /// Print the operator constants
    Constants(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// fractional order(s) in (0, 2), comma separated
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// dimension (1, 2 or 3)
    #[arg(long)]
    d: Option<String>,
    /// interior points per axis, comma separated
    #[arg(long)]
    m: Option<String>,
    /// full or lshape
    #[arg(long)]
    domain: Option<String>,
    /// lo,hi applied to every axis
    #[arg(long = "box", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// smooth1d, rough1d, bump, ones, parabolic_ic, random
    #[arg(long)]
    case: Option<String>,
    /// per-axis frequencies of the bump
    #[arg(long)]
    nu: Option<String>,
    /// window radius in grid points [default: 20]
    #[arg(long)]
    delta_points: Option<String>,
    /// relative residual tolerance [default: 1e-9]
    #[arg(long)]
    tol: Option<String>,
    /// CG iteration cap [default: 1000, or 250 in 3D]
    #[arg(long)]
    max_iters: Option<String>,
    /// on, off or both
    #[arg(long)]
    precond: Option<String>,
    /// time step [default: 1/(m+1)]
    #[arg(long)]
    dt: Option<String>,
    /// final time [default: 0.25]
    #[arg(long = "T")]
    t_final: Option<String>,
    /// number of time steps (sets T = steps·dt)
    #[arg(long)]
    steps: Option<String>,
    /// seed of the random case
    #[arg(long)]
    seed: Option<String>,
    /// three-grid rate instead of per-grid rows
    #[arg(long)]
    richardson: bool,
    /// 2 or inf, for Richardson rates
    #[arg(long)]
    norm: Option<String>,
    /// timing repetitions (median is reported)
    #[arg(long)]
    repeats: Option<String>,
    /// keep every n-th time step as a field file
    #[arg(long)]
    record: Option<String>,
    /// CSV output path [default: stdout]
    #[arg(long)]
    out: Option<String>,
    /// field dump (.csv or binary otherwise)
    #[arg(long)]
    field_out: Option<String>,
    /// residual history CSV of the last solve
    #[arg(long)]
    history: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let opt = [
            ("alpha", &self.alpha),
            ("d", &self.d),
            ("m", &self.m),
            ("domain", &self.domain),
            ("box", &self.bounds),
            ("case", &self.case),
            ("nu", &self.nu),
            ("delta-points", &self.delta_points),
            ("tol", &self.tol),
            ("max-iters", &self.max_iters),
            ("precond", &self.precond),
            ("dt", &self.dt),
            ("T", &self.t_final),
            ("steps", &self.steps),
            ("seed", &self.seed),
            ("norm", &self.norm),
            ("repeats", &self.repeats),
            ("record", &self.record),
            ("out", &self.out),
            ("field-out", &self.field_out),
            ("history", &self.history),
        ];
        for (k, val) in opt {
            if let Some(val) = val {
                v.push((k, val.clone()));
            }
        }
        if self.richardson {
            v.push(("richardson", "true".into()));
        }
        v
    }
}

impl Error {
    /// Process exit code: 2 for usage and input errors, 3 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Domain(_) => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}

/// Parses the arguments (including the program name) into a config.
pub fn parse_args<I, T>(args: I) -> Result<Option<RunConfig>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(None);
            }
            return Err(Error::Config(e.to_string().trim_end().to_string()));
        }
    };
    let (command, flags) = match &cli.command {
        Sub::Apply(f) => (Command::Apply, f),
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Evolve(f) => (Command::Evolve, f),
        Sub::Constants(f) => (Command::Constants, f),
    };
    let mut cfg = RunConfig::new(command);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_kv(&text)?;
    }
    for (k, v) in flags.pairs() {
        cfg.set(k, &v)?;
    }
    Ok(Some(cfg))
}

/// Entry point of the binary.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args)? {
        Some(cfg) => execute(&cfg),
        None => Ok(()),
    }
}

/// Runs a parsed configuration, writing CSV to `cfg.out` or stdout.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            execute_to(cfg, &mut w)?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            execute_to(cfg, &mut w)
        }
    }
}

pub fn execute_to(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    validate(cfg)?;
    match cfg.command {
        Command::Apply => cmd_apply(cfg, out),
        Command::Solve => cmd_solve(cfg, out),
        Command::Evolve => cmd_evolve(cfg, out),
        Command::Constants => cmd_constants(cfg, out),
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.domain == Domain::LShape && cfg.d != 2 {
        return Err(Error::Config("the L-shaped domain is two-dimensional".into()));
    }
    if cfg.richardson && cfg.domain == Domain::LShape {
        return Err(Error::Config("Richardson rates need full nested grids".into()));
    }
    if cfg.richardson && cfg.command == Command::Constants {
        return Err(Error::Config("constants have no Richardson rate".into()));
    }
    if let Some(nu) = &cfg.nu {
        if nu.len() != cfg.d {
            return Err(Error::Config(format!("nu has {} entries for d={}", nu.len(), cfg.d)));
        }
    }
    Ok(())
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn reference_case(cfg: &RunConfig, alpha: f64) -> Result<ReferenceCase> {
    let mut case = ReferenceCase::new(cfg.case_name(), alpha, cfg.d)?;
    if let Some(nu) = &cfg.nu {
        case.nu = nu.clone();
    }
    if let Some((lo, hi)) = cfg.bounds {
        case.bounds = vec![(lo, hi); cfg.d];
    }
    case.seed = cfg.seed;
    Ok(case)
}

fn make_grid(cfg: &RunConfig, case: &ReferenceCase, m: usize) -> Result<Arc<Grid>> {
    let grid = match cfg.domain {
        Domain::Full => Grid::new(cfg.d, m, &case.bounds)?,
        Domain::LShape => {
            let g = Grid::l_shape(m)?;
            if cfg.bounds.is_some() {
                return Err(Error::Config("the L-shaped domain lives on [0,1]^2".into()));
            }
            g
        }
    };
    Ok(Arc::new(grid))
}

fn constants(cfg: &RunConfig, alpha: f64, h: f64) -> Result<OperatorConstants> {
    build_constants(alpha, cfg.d, h, cfg.delta_points, DEFAULT_LATTICE_TOL)
}

fn operator(cfg: &RunConfig, grid: &Arc<Grid>, alpha: f64) -> Result<FracLapOperator> {
    FracLapOperator::new(grid.clone(), constants(cfg, alpha, grid.h())?)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn pcg_options(cfg: &RunConfig) -> PcgOptions {
    let mut opts = PcgOptions::for_dim(cfg.d, cfg.tol);
    if let Some(n) = cfg.max_iters {
        opts.max_iterations = n;
    }
    opts
}

/// `.csv` extension selects CSV, anything else the binary format.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if csv {
        write_field_csv(field, &mut w)?;
    } else {
        write_field_binary(field, &mut w)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_rate_header(out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "alpha,d,quantity,m_coarse,m_medium,m_fine,norm,rate,diff_coarse,diff_fine"
    )
    .map_err(io_out)
}

fn write_rate_row(out: &mut dyn Write, alpha: f64, d: usize, q: &str, r: &RateEstimate) -> Result<()> {
    writeln!(
        out,
        "{alpha},{d},{q},{},{},{},{},{:e},{:e},{:e}",
        r.sizes[0], r.sizes[1], r.sizes[2], r.norm, r.rate, r.diff_coarse, r.diff_fine
    )
    .map_err(io_out)
}

fn nested_sizes(m: usize) -> [usize; 3] {
    [m, 2 * m + 1, 4 * m + 3]
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn cmd_apply(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.richardson {
        write_rate_header(out)?;
    } else {
        writeln!(out, "alpha,d,N,e_app,t_con,t_app").map_err(io_out)?;
    }
    let mut last = None;
    for &alpha in &cfg.alpha {
        let case = reference_case(cfg, alpha)?;
        if !case.has_solution() {
            return Err(Error::Config(format!(
                "case {} defines no field to apply the operator to",
                case.name
            )));
        }
        if cfg.richardson {
            let mut fs = Vec::new();
            for m in nested_sizes(cfg.m[0]) {
                let grid = make_grid(cfg, &case, m)?;
                let op = operator(cfg, &grid, alpha)?;
                let u = case.solution_field(&grid).expect("checked above");
                fs.push(op.apply(&u)?);
            }
            let r = richardson_rate(&fs[0], &fs[1], &fs[2], cfg.norm)?;
            write_rate_row(out, alpha, cfg.d, "f", &r)?;
            last = fs.pop();
            continue;
        }
        for &m in &cfg.m {
            let grid = make_grid(cfg, &case, m)?;
            let mut builds = Vec::new();
            let mut op = None;
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                op = Some(operator(cfg, &grid, alpha)?);
                builds.push(start.elapsed());
            }
            let op = op.expect("repeats >= 1");
            let u = case.solution_field(&grid).expect("checked above");
            let mut applies = Vec::new();
            let mut f = None;
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                f = Some(op.apply(&u)?);
                applies.push(start.elapsed());
            }
            let f = f.expect("repeats >= 1");
            let e_app = match case.rhs_field(&grid) {
                Some(exact) => Some(relative_error(&f, &exact, crate::analysis::Norm::L2)?),
                None => None,
            };
            writeln!(
                out,
                "{alpha},{},{},{},{:e},{:e}",
                cfg.d,
                grid.n_active(),
                opt_cell(e_app),
                median(builds).as_secs_f64(),
                median(applies).as_secs_f64()
            )
            .map_err(io_out)?;
            last = Some(f);
        }
    }
    if let (Some(path), Some(f)) = (&cfg.field_out, last) {
        write_field(path, &f)?;
    }
    Ok(())
}

/// One elliptic solve.
fn solve_once(
    cfg: &RunConfig,
    op: &FracLapOperator,
    pc: Option<&PoissonPreconditioner>,
    f: &Field,
) -> Result<(Field, SolveReport)> {
    let minv = pc.map(|p| p as &dyn LinearOperator);
    let (u, report) = pcg(op, minv, f.values(), None, &pcg_options(cfg))?;
    Ok((Field::new(f.grid().clone(), u)?, report))
}

fn cmd_solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.richardson {
        write_rate_header(out)?;
    } else {
        writeln!(out, "alpha,d,N,precond,tol,iters,converged,relres,t_cg,e_sol").map_err(io_out)?;
    }
    let mut last: Option<(Field, SolveReport)> = None;
    for &alpha in &cfg.alpha {
        let case = reference_case(cfg, alpha)?;
        if !case.has_rhs() {
            return Err(Error::Config(format!("case {} defines no right-hand side", case.name)));
        }
        if cfg.richardson {
            let mut us = Vec::new();
            for m in nested_sizes(cfg.m[0]) {
                let grid = make_grid(cfg, &case, m)?;
                let op = operator(cfg, &grid, alpha)?;
                let pc = PoissonPreconditioner::elliptic(grid.clone(), op.constants())?;
                let f = case.rhs_field(&grid).expect("checked above");
                let (u, report) = solve_once(cfg, &op, Some(&pc), &f)?;
                if !report.converged {
                    return Err(Error::StepFailed {
                        step: 0,
                        report: Box::new(report),
                    });
                }
                us.push(u);
            }
            let r = richardson_rate(&us[0], &us[1], &us[2], cfg.norm)?;
            write_rate_row(out, alpha, cfg.d, "u", &r)?;
            continue;
        }
        for &m in &cfg.m {
            let grid = make_grid(cfg, &case, m)?;
            let op = operator(cfg, &grid, alpha)?;
            let f = case.rhs_field(&grid).expect("checked above");
            let exact = case.solution_field(&grid);
            for &with_pc in cfg.precond.variants() {
                let pc = if with_pc {
                    Some(PoissonPreconditioner::elliptic(grid.clone(), op.constants())?)
                } else {
                    None
                };
                let (u, report) = solve_once(cfg, &op, pc.as_ref(), &f)?;
                let e_sol = match &exact {
                    Some(x) => Some(relative_error(&u, x, crate::analysis::Norm::L2)?),
                    None => None,
                };
                writeln!(
                    out,
                    "{alpha},{},{},{},{:e},{},{},{:e},{:e},{}",
                    cfg.d,
                    grid.n_active(),
                    if with_pc { "on" } else { "off" },
                    cfg.tol,
                    report.iterations,
                    u8::from(report.converged),
                    report.relative_residual,
                    report.wall_time,
                    opt_cell(e_sol)
                )
                .map_err(io_out)?;
                last = Some((u, report));
            }
        }
    }
    if let Some((u, report)) = last {
        if let Some(path) = &cfg.field_out {
            write_field(path, &u)?;
        }
        if let Some(path) = &cfg.history {
            let file = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(file);
            report.write_history_csv(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(())
}

/// Evolution setup for one grid.
fn evolution(cfg: &RunConfig, case: &ReferenceCase, grid: &Arc<Grid>) -> Result<(Field, EvolutionConfig)> {
    let dt = cfg.dt.unwrap_or(1.0 / (grid.m() + 1) as f64);
    let t_final = match (cfg.steps, cfg.t_final) {
        (Some(n), None) => n as f64 * dt,
        (None, Some(t)) => t,
        (None, None) => 0.25,
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either steps or T, not both".into()));
        }
    };
    let u0 = case
        .solution_field(grid)
        .unwrap_or_else(|| Field::zeros(grid.clone()));
    let source: Option<Source> = case.rhs_field(grid).map(|f| {
        let g = grid.clone();
        let values = f.into_values();
        Arc::new(move |x: &[f64], _t: f64| {
            g.nearest_active(x).map(|k| values[k]).unwrap_or(0.0)
        }) as Source
    });
    let config = EvolutionConfig {
        dt,
        t_final,
        source,
        opts: pcg_options(cfg),
        record: cfg.record,
    };
    Ok((u0, config))
}

fn snapshot_path(base: &Path, step: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_step{step:06}.{ext}"),
        None => format!("{stem}_step{step:06}"),
    };
    base.with_file_name(name)
}

fn cmd_evolve(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.precond == Precond::Both {
        return Err(Error::Config("evolve runs with precond on or off, not both".into()));
    }
    let with_pc = cfg.precond == Precond::On;
    if cfg.richardson {
        write_rate_header(out)?;
        for &alpha in &cfg.alpha {
            let case = reference_case(cfg, alpha)?;
            let mut us = Vec::new();
            for m in nested_sizes(cfg.m[0]) {
                let grid = make_grid(cfg, &case, m)?;
                let op = operator(cfg, &grid, alpha)?;
                let (u0, ecfg) = evolution(cfg, &case, &grid)?;
                let pc = if with_pc {
                    Some(PoissonPreconditioner::time_step(grid.clone(), op.constants(), ecfg.dt)?)
                } else {
                    None
                };
                us.push(evolve(&op, pc.as_ref(), &u0, &ecfg, &mut Trajectory::default())?);
            }
            let r = richardson_rate(&us[0], &us[1], &us[2], cfg.norm)?;
            write_rate_row(out, alpha, cfg.d, "u", &r)?;
        }
        return Ok(());
    }
    if cfg.alpha.len() != 1 || cfg.m.len() != 1 {
        return Err(Error::Config("evolve takes a single alpha and m".into()));
    }
    let alpha = cfg.alpha[0];
    let case = reference_case(cfg, alpha)?;
    let grid = make_grid(cfg, &case, cfg.m[0])?;
    let op = operator(cfg, &grid, alpha)?;
    let (u0, ecfg) = evolution(cfg, &case, &grid)?;
    let pc = if with_pc {
        Some(PoissonPreconditioner::time_step(grid.clone(), op.constants(), ecfg.dt)?)
    } else {
        None
    };
    let mut traj = Trajectory::default();
    let result = evolve(&op, pc.as_ref(), &u0, &ecfg, &mut traj);
    if let Some(base) = &cfg.field_out {
        let snaps = std::mem::take(&mut traj.snapshots);
        for (step, field) in snaps {
            let path = snapshot_path(base, step);
            write_field(&path, &field)?;
            if let Some(rec) = traj.steps.iter_mut().find(|s| s.step == step) {
                rec.field_file = Some(path);
            }
        }
    }
    traj.write_csv(&mut *out)?;
    let u = result?;
    if let Some(path) = &cfg.field_out {
        write_field(path, &u)?;
    }
    Ok(())
}

fn cmd_constants(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "alpha,d,h,delta,C,A1,A2,A3").map_err(io_out)?;
    for &alpha in &cfg.alpha {
        let case = reference_case(cfg, alpha)?;
        for &m in &cfg.m {
            let grid = make_grid(cfg, &case, m)?;
            let c = constants(cfg, alpha, grid.h())?;
            writeln!(
                out,
                "{alpha},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                c.d, c.h, c.window.delta, c.c_ad, c.a1, c.a2, c.a3
            )
            .map_err(io_out)?;
        }
    }
    Ok(())
}
