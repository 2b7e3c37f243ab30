//! Closed-form limits of the BPA model.
//!
//! `alpha*` is the limiting red share of the total degree, the root in
//! `[0, 0.5]` of
//!
//! ```text
//! f(a) = 1 - (1-r)(1-a)/(1 - a(1-rho)) + r a/(1 - (1-a)(1-rho)) - 2a
//! ```
//!
//! The growth-case coefficients `beta1..beta4` follow from `alpha*`; `beta2 /
//! beta3` is the red/blue ratio of k-hop gains for every `k >= 2`.

use std::io::Write;

use serde::Serialize;

use crate::error::TheoryError;
use crate::graph::Color;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Margins at or below this are treated as zero by [`threshold_predicate`].
pub const MARGIN_EPS: f64 = 1e-12;

fn check_r(r: f64) -> Result<(), TheoryError> {
    if r > 0.0 && r <= 0.5 {
        Ok(())
    } else {
        Err(TheoryError::MinorityRatio(r))
    }
}

fn check_rho(rho: f64) -> Result<(), TheoryError> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(TheoryError::Rho(rho))
    }
}

fn check_alpha(alpha: f64) -> Result<(), TheoryError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(TheoryError::Alpha(alpha))
    }
}

/// Fixed-point residual `f(alpha)`; zero at `alpha*`.
pub fn fixed_point_residual(r: f64, rho: f64, alpha: f64) -> f64 {
    let q = 1.0 - rho;
    1.0 - (1.0 - r) * (1.0 - alpha) / (1.0 - alpha * q) + r * alpha / (1.0 - (1.0 - alpha) * q) - 2.0 * alpha
}

/// Bisection for `alpha*` on `[0, 0.5]`.
///
/// `f(0) = r > 0` and `f(0.5) = (2r - 1)/(1 + rho) <= 0`, so the bracket is
/// always valid; at `r = 0.5` the right end is the root. The closed-form
/// cases `rho = 1` (root `r`) and `r = 0.5` (root `0.5`) return exactly.
pub fn solve_alpha_star(r: f64, rho: f64, tol: f64) -> Result<f64, TheoryError> {
    check_r(r)?;
    check_rho(rho)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(TheoryError::Tolerance(tol));
    }
    if r == 0.5 {
        return Ok(0.5);
    }
    if rho == 1.0 {
        return Ok(r);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    let (f_lo, f_hi) = (fixed_point_residual(r, rho, lo), fixed_point_residual(r, rho, hi));
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(TheoryError::Bracket { lo: f_lo, hi: f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = fixed_point_residual(r, rho, mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_lo, f_hi) = (fixed_point_residual(r, rho, lo), fixed_point_residual(r, rho, hi));
    let (alpha, residual) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if residual.abs() < tol {
        Ok(alpha)
    } else {
        Err(TheoryError::Stalled { alpha, residual })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Betas {
    /// New red node attaching to a red node.
    pub b1: f64,
    /// New red node attaching to a blue node.
    pub b2: f64,
    /// New blue node attaching to a blue node.
    pub b3: f64,
    /// New blue node attaching to a red node.
    pub b4: f64,
}

impl Betas {
    /// Coefficient for a new `arriving` node attaching to a `target` node: the
    /// probability of attaching to one specific target `i` is `beta * d_i / t`.
    pub fn attach(&self, arriving: Color, target: Color) -> f64 {
        match (arriving, target) {
            (Color::Red, Color::Red) => self.b1,
            (Color::Red, Color::Blue) => self.b2,
            (Color::Blue, Color::Blue) => self.b3,
            (Color::Blue, Color::Red) => self.b4,
        }
    }

    pub fn two_hop_ratio(&self) -> f64 {
        self.b2 / self.b3
    }

    pub fn two_hop_share(&self) -> f64 {
        self.b2 / (self.b2 + self.b3)
    }
}

pub fn betas(r: f64, rho: f64, alpha: f64) -> Result<Betas, TheoryError> {
    check_r(r)?;
    check_rho(rho)?;
    check_alpha(alpha)?;
    let red_den = 2.0 * (1.0 - (1.0 - alpha) * (1.0 - rho));
    let blue_den = 2.0 * (1.0 - alpha * (1.0 - rho));
    for den in [red_den, blue_den] {
        if den.is_nan() || den <= 0.0 {
            return Err(TheoryError::Denominator(den));
        }
    }
    let b1 = r / red_den;
    let b3 = (1.0 - r) / blue_den;
    Ok(Betas {
        b1,
        b2: rho * b1,
        b3,
        b4: rho * b3,
    })
}

/// Everything derived from one `(r, rho)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryPoint {
    pub r: f64,
    pub rho: f64,
    pub alpha_star: f64,
    pub betas: Betas,
    pub two_hop_ratio: f64,
    pub two_hop_share: f64,
    pub one_hop_share: f64,
    pub one_hop_ratio: f64,
    pub threshold: bool,
    pub margin: f64,
}

impl TheoryPoint {
    pub fn evaluate(r: f64, rho: f64) -> Result<Self, TheoryError> {
        Self::evaluate_with_tol(r, rho, DEFAULT_TOL)
    }

    pub fn evaluate_with_tol(r: f64, rho: f64, tol: f64) -> Result<Self, TheoryError> {
        let alpha_star = solve_alpha_star(r, rho, tol)?;
        let betas = betas(r, rho, alpha_star)?;
        let two_hop_share = betas.two_hop_share();
        let margin = two_hop_share - alpha_star;
        Ok(Self {
            r,
            rho,
            alpha_star,
            betas,
            two_hop_ratio: betas.two_hop_ratio(),
            two_hop_share,
            one_hop_share: alpha_star,
            one_hop_ratio: alpha_star / (1.0 - alpha_star),
            threshold: margin > MARGIN_EPS,
            margin,
        })
    }
}

pub fn two_hop_ratio(r: f64, rho: f64) -> Result<f64, TheoryError> {
    Ok(TheoryPoint::evaluate(r, rho)?.two_hop_ratio)
}

/// Red share of the total 1-hop degree, i.e. `alpha*`.
pub fn one_hop_share(r: f64, rho: f64) -> Result<f64, TheoryError> {
    solve_alpha_star(r, rho, DEFAULT_TOL)
}

/// `alpha* / (1 - alpha*)`.
pub fn one_hop_ratio(r: f64, rho: f64) -> Result<f64, TheoryError> {
    let a = one_hop_share(r, rho)?;
    Ok(a / (1.0 - a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    /// Two-hop gains reduce the red disadvantage of one-hop gains.
    pub holds: bool,
    /// `beta2/(beta2+beta3) - alpha*`.
    pub margin: f64,
}

/// `holds` requires the margin to exceed [`MARGIN_EPS`], so the `rho = 1`
/// equality case reads as "does not hold" despite rounding noise.
pub fn threshold_predicate(r: f64, rho: f64) -> Result<Threshold, TheoryError> {
    let p = TheoryPoint::evaluate(r, rho)?;
    Ok(Threshold {
        holds: p.threshold,
        margin: p.margin,
    })
}

/// Growth-case probabilities at `(r, rho, alpha)`: red to red, red to blue,
/// blue to blue, blue to red.
///
/// Reported as the plain formulas; they sum to 1/2 (`p1 + p2 = r/2`,
/// `p3 + p4 = (1-r)/2`), i.e. each is half the probability of its case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl CaseProbabilities {
    pub fn sum(&self) -> f64 {
        self.p1 + self.p2 + self.p3 + self.p4
    }
}

pub fn case_probabilities(r: f64, rho: f64, alpha: f64) -> Result<CaseProbabilities, TheoryError> {
    check_r(r)?;
    check_rho(rho)?;
    check_alpha(alpha)?;
    let red_den = 2.0 * (1.0 - (1.0 - alpha) * (1.0 - rho));
    let blue_den = 2.0 * (1.0 - alpha * (1.0 - rho));
    Ok(CaseProbabilities {
        p1: r * alpha / red_den,
        p2: r * (1.0 - alpha) * rho / red_den,
        p3: (1.0 - r) * (1.0 - alpha) / blue_den,
        p4: (1.0 - r) * alpha * rho / blue_den,
    })
}

/// `steps + 1` evenly spaced values `lo + i (hi - lo)/steps`.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

/// `r in {0.05, 0.10, ..., 0.45}`.
pub fn default_r_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 20.0).collect()
}

/// `rho in {0.05, 0.10, ..., 1.00}`.
pub fn default_rho_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

/// Row-major over `rs`, then `rhos`.
pub fn theory_grid(rs: &[f64], rhos: &[f64]) -> Result<Vec<TheoryPoint>, TheoryError> {
    rs.iter()
        .flat_map(|&r| rhos.iter().map(move |&rho| TheoryPoint::evaluate(r, rho)))
        .collect()
}

/// Columns: `r,rho,alpha_star,beta1,beta2,beta3,beta4,two_hop_share,one_hop_share,threshold,margin`.
pub fn write_grid_csv<W: Write>(w: W, points: &[TheoryPoint]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "r",
        "rho",
        "alpha_star",
        "beta1",
        "beta2",
        "beta3",
        "beta4",
        "two_hop_share",
        "one_hop_share",
        "threshold",
        "margin",
    ])?;
    for p in points {
        let b = p.betas;
        out.write_record([
            p.r.to_string(),
            p.rho.to_string(),
            p.alpha_star.to_string(),
            b.b1.to_string(),
            b.b2.to_string(),
            b.b3.to_string(),
            b.b4.to_string(),
            p.two_hop_share.to_string(),
            p.one_hop_share.to_string(),
            p.threshold.to_string(),
            p.margin.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
