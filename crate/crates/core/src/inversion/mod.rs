//! No-jump dynamics: time-domain amplitudes, populations and the norm of
//! the conditional state between fluorescence photons on the flat-vacuum
//! transition.

mod contour;
mod modes;

pub use contour::{invert_contour, ContourSpec, LaplaceImage};
pub use modes::{discretized_modes_oracle, ModeOracle};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::cumulative_trapezoid;
use crate::resolvent::{resolvent_amplitudes, validate, ReservoirKind, SystemParams, TwoLevel};

/// Tolerance for positivity and normalisation of no-jump populations.
pub const POPULATION_TOLERANCE: f64 = 1e-4;

/// Conditional (no-jump) evolution starting from `|a⟩` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoJumpSolution {
    pub grid: TimeGrid,
    pub u_aa: Vec<Complex64>,
    pub u_ba: Vec<Complex64>,
    pub pi_a: Vec<f64>,
    pub pi_b: Vec<f64>,
    pub pi_c: Vec<f64>,
    /// Norm `P(t)` of the no-jump state: probability of no flat-vacuum photon yet.
    pub norm: Vec<f64>,
    /// `P` at the end of the grid, used as the trapped population.
    pub p_inf_estimate: f64,
}

/// One row of the columnar no-jump output.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoJumpRow {
    pub t: f64,
    pub pi0_a: f64,
    pub pi0_b: f64,
    pub pi0_c: f64,
    #[serde(rename = "P")]
    pub norm: f64,
}

impl NoJumpSolution {
    /// Builds the populations from amplitudes, with `P` from the norm-loss
    /// law `P(t) = 1 − γ ∫₀ᵗ π⁰_b`.
    pub fn from_amplitudes(
        grid: TimeGrid,
        u_aa: Vec<Complex64>,
        u_ba: Vec<Complex64>,
        gamma: f64,
    ) -> Result<Self> {
        if u_aa.len() != grid.len() || u_ba.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "amplitudes have {} and {} points, grid has {}",
                u_aa.len(),
                u_ba.len(),
                grid.len()
            )));
        }
        let pi_a: Vec<f64> = u_aa.iter().map(|u| u.norm_sqr()).collect();
        let pi_b: Vec<f64> = u_ba.iter().map(|u| u.norm_sqr()).collect();
        let norm: Vec<f64> = cumulative_trapezoid(&pi_b, grid.dt())
            .into_iter()
            .map(|i| 1.0 - gamma * i)
            .collect();
        Self::from_populations(grid, u_aa, u_ba, pi_a, pi_b, norm)
    }

    /// Assembles a solution from explicit populations; `π⁰_c` follows from
    /// `P − π⁰_a − π⁰_b`.
    pub fn from_populations(
        grid: TimeGrid,
        u_aa: Vec<Complex64>,
        u_ba: Vec<Complex64>,
        pi_a: Vec<f64>,
        pi_b: Vec<f64>,
        norm: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        if pi_a.len() != n || pi_b.len() != n || norm.len() != n {
            return Err(Error::GridMismatch(
                "population series length differs from grid".into(),
            ));
        }
        let pi_c = norm
            .iter()
            .zip(pi_a.iter().zip(&pi_b))
            .map(|(p, (a, b))| p - a - b)
            .collect();
        let p_inf_estimate = *norm.last().expect("grid is non-empty");
        Ok(NoJumpSolution {
            grid,
            u_aa,
            u_ba,
            pi_a,
            pi_b,
            pi_c,
            norm,
            p_inf_estimate,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = NoJumpRow> + '_ {
        (0..self.grid.len()).map(move |k| NoJumpRow {
            t: self.grid.at(k),
            pi0_a: self.pi_a[k],
            pi0_b: self.pi_b[k],
            pi0_c: self.pi_c[k],
            norm: self.norm[k],
        })
    }

    /// Checks positivity, boundedness and normalisation at tolerance `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for k in 0..self.grid.len() {
            let t = self.grid.at(k);
            let (a, b, c, p) = (self.pi_a[k], self.pi_b[k], self.pi_c[k], self.norm[k]);
            if !(a.is_finite() && b.is_finite() && p.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite population at t = {t}"
                )));
            }
            if a > 1.0 + tol || b > 1.0 + tol {
                return Err(Error::accuracy(format!(
                    "population exceeds one at t = {t}: pi_a = {a}, pi_b = {b}"
                )));
            }
            if p > 1.0 + tol || p < -tol {
                return Err(Error::accuracy(format!(
                    "norm P = {p} outside [0, 1] at t = {t}"
                )));
            }
            if c < -tol {
                return Err(Error::accuracy(format!("pi_c = {c} negative at t = {t}")));
            }
            if k > 0 && p > self.norm[k - 1] + tol {
                return Err(Error::accuracy(format!("norm increases at t = {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Element {
    Aa,
    Ba,
}

/// `G_aa` or `G_ba` with the two-level (no `b → c` channel) resolvent as
/// analytic reference.
struct ResolventImage<'a> {
    params: &'a SystemParams,
    reservoir: &'a ReservoirKind,
    reference: TwoLevel,
    element: Element,
}

impl LaplaceImage for ResolventImage<'_> {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let g = resolvent_amplitudes(z, self.params, self.reservoir)?;
        Ok(match self.element {
            Element::Aa => g.g_aa,
            Element::Ba => g.g_ba,
        })
    }

    fn center(&self) -> f64 {
        0.5 * (self.params.omega_b + self.params.omega_l)
    }

    fn branch_point(&self) -> Option<f64> {
        self.reservoir.branch_point()
    }

    fn reference(&self, z: Complex64) -> Complex64 {
        let g = self.reference.resolvent(z);
        match self.element {
            Element::Aa => g.g_aa,
            Element::Ba => g.g_ba,
        }
    }

    fn reference_inverse(&self, t: f64) -> Complex64 {
        let (aa, ba) = self.reference.propagator(t);
        match self.element {
            Element::Aa => aa,
            Element::Ba => ba,
        }
    }
}

/// Damping of the analytic reference: the flat-vacuum rate, or the flat
/// `b → c` rate when that is the only damping present.
fn reference_damping(p: &SystemParams, reservoir: &ReservoirKind) -> f64 {
    match *reservoir {
        ReservoirKind::Flat { rate } if p.gamma == 0.0 => rate,
        _ => p.gamma,
    }
}

/// Inverts `G_aa` and `G_ba` and assembles the no-jump populations on
/// `[0, horizon]`.
pub fn nojump_populations(
    p: &SystemParams,
    reservoir: &ReservoirKind,
    spec: &ContourSpec,
    horizon: f64,
    dt: f64,
) -> Result<NoJumpSolution> {
    validate(p, reservoir)?;
    spec.validate()?;
    let grid = TimeGrid::new(horizon, dt)?;
    let damping = reference_damping(p, reservoir);
    if spec.offset == 0.0 && damping == 0.0 && reservoir.branch_point().is_some() {
        return Err(Error::domain(
            "without flat-vacuum damping the band-edge problem has bound-state poles on the real axis; \
             use a positive contour offset",
        ));
    }
    let reference = TwoLevel::from_params(p, damping);
    let image = |element| ResolventImage {
        params: p,
        reservoir,
        reference,
        element,
    };
    let u_aa = invert_contour(&image(Element::Aa), spec, &grid)?;
    let u_ba = invert_contour(&image(Element::Ba), spec, &grid)?;
    let sol = NoJumpSolution::from_amplitudes(grid, u_aa, u_ba, p.gamma)?;
    sol.check_invariants(POPULATION_TOLERANCE)?;
    Ok(sol)
}

/// Largest violation of `dP/dt = −γ π⁰_b` using central differences.
pub fn norm_law_residual(sol: &NoJumpSolution, gamma: f64) -> f64 {
    let dt = sol.grid.dt();
    (1..sol.grid.len() - 1)
        .map(|k| {
            let dp = (sol.norm[k + 1] - sol.norm[k - 1]) / (2.0 * dt);
            (dp + gamma * sol.pi_b[k]).abs()
        })
        .fold(0.0, f64::max)
}
