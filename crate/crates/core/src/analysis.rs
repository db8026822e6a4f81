//! Error norms, log-log rate fits, and three-grid Richardson rates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::grid::{restrict, Field, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    Inf,
}

impl Norm {
    /// Unweighted vector norm.
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L2 => "2",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "infinity" | "linf" => Ok(Norm::Inf),
            _ => Err(Error::Config(format!("unknown norm {s:?}; use 2 or inf"))),
        }
    }
}

fn difference(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// `‖u - v‖/‖v‖`.
pub fn relative_error(u: &Field, v: &Field, p: Norm) -> Result<f64> {
    u.check_grid(v.grid())?;
    let den = p.of(v.values());
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(p.of(&difference(u.values(), v.values())) / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub norm: Norm,
    pub rate: f64,
    /// Points per axis of the coarse, medium and fine grids.
    pub sizes: [usize; 3],
    /// `‖f_m - f_c‖` and `‖f_f - f_m‖` on the coarse grid.
    pub diff_coarse: f64,
    pub diff_fine: f64,
}

/// `(log‖f_f - f_m‖ - log‖f_m - f_c‖) / log(1/2)`, all on the coarse grid.
pub fn richardson_rate(coarse: &Field, medium: &Field, fine: &Field, p: Norm) -> Result<RateEstimate> {
    let cg: &Arc<Grid> = coarse.grid();
    let mc = restrict(medium, cg)?;
    let fm = restrict(fine, medium.grid())?;
    let fc = restrict(&fm, cg)?;
    let diff_coarse = p.of(&difference(mc.values(), coarse.values()));
    let diff_fine = p.of(&difference(fc.values(), mc.values()));
    if diff_coarse == 0.0 || diff_fine == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(RateEstimate {
        norm: p,
        rate: (diff_fine.ln() - diff_coarse.ln()) / 0.5f64.ln(),
        sizes: [cg.m(), medium.grid().m(), fine.grid().m()],
        diff_coarse,
        diff_fine,
    })
}

/// Least-squares slope of `log(error)` against `log(size)`.
pub fn fit_rate(sizes: &[f64], errors: &[f64]) -> Result<f64> {
    if sizes.len() != errors.len() {
        return Err(Error::Fit(format!(
            "{} sizes but {} errors",
            sizes.len(),
            errors.len()
        )));
    }
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", sizes.len())));
    }
    if sizes.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Fit("sizes and errors must be positive and finite".into()));
    }
    let n = sizes.len() as f64;
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}
