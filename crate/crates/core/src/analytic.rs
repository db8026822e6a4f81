//! Closed-form reference cases.
//!
//! In 1D on `(-1, 1)`:
//!
//! * smooth: `(-Δ)^{α/2} K_α⁻¹(1-x²)^{2+α/2} = ₂F₁((1+α)/2, -2; 1/2; x²)`,
//!   a quartic in `x`;
//! * rough: `(-Δ)^{α/2} K'_α(1-x²)^{α/2} = 1`.
//!
//! Both follow from the action of the fractional Laplacian on
//! `(1-|x|²)_+^p`, which is a hypergeometric polynomial times
//! `2^α Γ(p+1) Γ((d+α)/2) / (Γ(d/2) Γ(p+1-α/2))`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid};
use crate::kernel::special::gamma;
use crate::{Error, Result};

/// `₂F₁((1+α)/2, -2; 1/2; x²) = 1 - 2(1+α)x² + (1+α)(3+α)x⁴/3`.
pub fn rhs_smooth_1d(alpha: f64, x: f64) -> f64 {
    let x2 = x * x;
    1.0 - 2.0 * (1.0 + alpha) * x2 + (1.0 + alpha) * (3.0 + alpha) / 3.0 * x2 * x2
}

/// `K_α = 2^α Γ(3+α/2) Γ((1+α)/2) / (2√π)`, so that the smooth solution is
/// `K_α⁻¹ (1-x²)^{2+α/2}`.
pub fn k_alpha(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma(3.0 + alpha / 2.0) * gamma((1.0 + alpha) / 2.0) / (2.0 * PI.sqrt())
}

/// `K'_α = √π / (2^α Γ(1+α/2) Γ((1+α)/2))`.
pub fn k_prime_alpha(alpha: f64) -> f64 {
    PI.sqrt() / (2f64.powf(alpha) * gamma(1.0 + alpha / 2.0) * gamma((1.0 + alpha) / 2.0))
}

pub fn sol_smooth_1d(alpha: f64, x: f64) -> f64 {
    let s = (1.0 - x) * (1.0 + x);
    if s <= 0.0 {
        0.0
    } else {
        s.powf(2.0 + alpha / 2.0) / k_alpha(alpha)
    }
}

pub fn sol_rough_1d(alpha: f64, x: f64) -> f64 {
    let s = (1.0 - x) * (1.0 + x);
    if s <= 0.0 {
        0.0
    } else {
        k_prime_alpha(alpha) * s.powf(alpha / 2.0)
    }
}

/// `Π_i (1/4)(1 + cos(2π ν_i x_i - π))²`.
pub fn bump(x: &[f64], nu: &[u32]) -> f64 {
    x.iter()
        .zip(nu)
        .map(|(&xi, &n)| {
            let c = 1.0 + (2.0 * PI * n as f64 * xi - PI).cos();
            0.25 * c * c
        })
        .product()
}

/// Frequencies of the parabolic initial condition.
pub const PARABOLIC_NU: [u32; 3] = [3, 11, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Smooth1d,
    Rough1d,
    Bump,
    Ones,
    ParabolicIc,
    Random,
}

impl CaseName {
    pub const ALL: [CaseName; 6] = [
        CaseName::Smooth1d,
        CaseName::Rough1d,
        CaseName::Bump,
        CaseName::Ones,
        CaseName::ParabolicIc,
        CaseName::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Smooth1d => "smooth1d",
            CaseName::Rough1d => "rough1d",
            CaseName::Bump => "bump",
            CaseName::Ones => "ones",
            CaseName::ParabolicIc => "parabolic_ic",
            CaseName::Random => "random",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == key || (key == "bump_d" && *c == CaseName::Bump))
            .ok_or_else(|| {
                let names: Vec<_> = CaseName::ALL.iter().map(|c| c.as_str()).collect();
                Error::Config(format!("unknown case {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// A named problem: a field `u` and/or a right-hand side `f = (-Δ)^{α/2} u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCase {
    pub name: CaseName,
    pub alpha: f64,
    pub d: usize,
    pub bounds: Vec<(f64, f64)>,
    pub nu: Vec<u32>,
    pub seed: u64,
}

impl ReferenceCase {
    /// The case on its natural box: `[-1, 1]` for the 1D cases, `[0, 1]^d`
    /// otherwise.
    pub fn new(name: CaseName, alpha: f64, d: usize) -> Result<Self> {
        if matches!(name, CaseName::Smooth1d | CaseName::Rough1d) && d != 1 {
            return Err(Error::Config(format!("case {name} is one-dimensional")));
        }
        if !(1..=3).contains(&d) {
            return Err(Error::Config(format!("dimension {d} not in 1..=3")));
        }
        let bounds = match name {
            CaseName::Smooth1d | CaseName::Rough1d => vec![(-1.0, 1.0)],
            _ => vec![(0.0, 1.0); d],
        };
        let nu = match name {
            CaseName::ParabolicIc => PARABOLIC_NU[..d].to_vec(),
            _ => vec![1; d],
        };
        Ok(ReferenceCase {
            name,
            alpha,
            d,
            bounds,
            nu,
            seed: 0,
        })
    }

    /// The field `u` at `x`, when the case defines one.
    pub fn solution(&self, x: &[f64]) -> Option<f64> {
        match self.name {
            CaseName::Smooth1d => Some(sol_smooth_1d(self.alpha, x[0])),
            CaseName::Rough1d => Some(sol_rough_1d(self.alpha, x[0])),
            CaseName::Bump | CaseName::ParabolicIc => Some(bump(x, &self.nu)),
            CaseName::Ones | CaseName::Random => None,
        }
    }

    /// Pointwise right-hand side, when known in closed form.
    pub fn rhs(&self, x: &[f64]) -> Option<f64> {
        match self.name {
            CaseName::Smooth1d => Some(rhs_smooth_1d(self.alpha, x[0])),
            CaseName::Rough1d | CaseName::Ones => Some(1.0),
            _ => None,
        }
    }

    pub fn has_rhs(&self) -> bool {
        matches!(
            self.name,
            CaseName::Smooth1d | CaseName::Rough1d | CaseName::Ones | CaseName::Random
        )
    }

    pub fn has_solution(&self) -> bool {
        self.solution(&[0.0; 3][..self.d]).is_some()
    }

    pub fn solution_field(&self, grid: &Arc<Grid>) -> Option<Field> {
        self.has_solution()
            .then(|| Field::from_fn(grid.clone(), |x| self.solution(x).expect("checked")))
    }

    pub fn rhs_field(&self, grid: &Arc<Grid>) -> Option<Field> {
        match self.name {
            CaseName::Random => Some(random_field(grid, self.seed)),
            _ if self.has_rhs() => {
                Some(Field::from_fn(grid.clone(), |x| self.rhs(x).expect("checked")))
            }
            _ => None,
        }
    }
}

/// Seeded uniform(-1, 1) values on the active points.
pub fn random_field(grid: &Arc<Grid>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.n_active())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Field::new(grid.clone(), values).expect("length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_rhs_values() {
        assert_eq!(rhs_smooth_1d(1.3, 0.0), 1.0);
        assert!((rhs_smooth_1d(1.0, 1.0) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rough_constant_at_alpha_one() {
        assert!((k_prime_alpha(1.0) - 1.0).abs() < 1e-13);
        assert!((sol_rough_1d(1.0, 0.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn solutions_vanish_outside() {
        for a in [0.5, 1.5] {
            assert_eq!(sol_smooth_1d(a, 1.0), 0.0);
            assert_eq!(sol_rough_1d(a, -1.2), 0.0);
        }
        let x: f64 = 1.0 - 1e-6;
        let eps = 1.0 - x;
        let expect = k_prime_alpha(0.8) * (eps * (2.0 - eps)).powf(0.4);
        assert!((sol_rough_1d(0.8, x) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(&[0.0, 0.3], &[1, 1]), 0.0);
        assert!((bump(&[0.5, 0.5, 0.5], &[1, 1, 1]) - 1.0).abs() < 1e-15);
        let a = bump(&[0.2, 0.7], &[3, 11]);
        let b = bump(&[0.8, 0.3], &[3, 11]);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn case_registry() {
        assert_eq!("bump_d".parse::<CaseName>().unwrap(), CaseName::Bump);
        assert_eq!("Parabolic-IC".parse::<CaseName>().unwrap(), CaseName::ParabolicIc);
        assert!("nope".parse::<CaseName>().is_err());
        assert!(ReferenceCase::new(CaseName::Smooth1d, 1.0, 2).is_err());
        let c = ReferenceCase::new(CaseName::ParabolicIc, 1.0, 2).unwrap();
        assert_eq!(c.nu, vec![3, 11]);
        assert!(c.has_solution() && !c.has_rhs());
        let r = ReferenceCase::new(CaseName::Rough1d, 1.0, 1).unwrap();
        assert_eq!(r.bounds, vec![(-1.0, 1.0)]);
        assert!(r.has_solution() && r.has_rhs());
    }

    #[test]
    fn random_field_is_seeded() {
        let g = Arc::new(Grid::cube(2, 7, 0.0, 1.0).unwrap());
        assert_eq!(random_field(&g, 4), random_field(&g, 4));
        assert_ne!(random_field(&g, 4), random_field(&g, 5));
        assert!(random_field(&g, 1).values().iter().all(|v| v.abs() <= 1.0));
    }
}
