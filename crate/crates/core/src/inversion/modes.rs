//! Independent check of the resolvent reduction: the band-edge continuum is
//! replaced by a finite set of discrete modes and the non-hermitian
//! Schrödinger equation for `|a⟩`, `|b⟩` and the one-photon states
//! `|c, 1_j⟩` is integrated directly with classical RK4.
//!
//! Modes are spaced uniformly in `s = √(ω − ω_e)`. With the spectral density
//! `J(ω) = C / (π √(ω − ω_e))` every mode then carries the same coupling
//! `g² = 2C·√(ω_max − ω_e) / (πM)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::NoJumpSolution;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::resolvent::SystemParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Largest `|E|·h` allowed for an RK4 substep.
const PHASE_PER_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOracle {
    pub modes: usize,
    /// Upper cut-off of the discretised band.
    pub omega_max: f64,
    /// Shift `|b⟩` by the real self-energy of the modes above the cut-off.
    pub tail_counterterm: bool,
}

impl ModeOracle {
    pub fn new(modes: usize, omega_max: f64) -> Self {
        ModeOracle {
            modes,
            omega_max,
            tail_counterterm: true,
        }
    }
}

/// `2∫_{√U}^∞ ds / (s² − d)`, the tail integral of the band-edge density.
fn tail_integral(cutoff: f64, d: f64) -> f64 {
    let root_u = cutoff.sqrt();
    if d.abs() < 1e-14 {
        2.0 / root_u
    } else if d > 0.0 {
        let rd = d.sqrt();
        ((root_u + rd) / (root_u - rd)).ln() / rd
    } else {
        let rd = (-d).sqrt();
        2.0 * (rd / root_u).atan() / rd
    }
}

pub fn discretized_modes_oracle(
    p: &SystemParams,
    oracle: &ModeOracle,
    horizon: f64,
    dt: f64,
) -> Result<NoJumpSolution> {
    p.validate()?;
    let m = oracle.modes;
    if m < 100 {
        return Err(Error::domain(format!(
            "mode oracle needs at least 100 modes, got {m}"
        )));
    }
    let band = oracle.omega_max - p.omega_e;
    if !(band > 0.0 && band >= 50.0 * p.gamma) {
        return Err(Error::domain(format!(
            "cut-off must lie at least 50γ above the band edge, got ω_max − ω_e = {band}"
        )));
    }
    let grid = TimeGrid::new(horizon, dt)?;

    // frame rotating at the band edge keeps the mode energies in [0, band]
    let frame = p.omega_e;
    let s_max = band.sqrt();
    let coupling = (2.0 * p.pbg_coupling * s_max / (PI * m as f64)).sqrt();
    let mode_energy: Vec<f64> = (0..m)
        .map(|j| {
            let s = s_max * (j as f64 + 0.5) / m as f64;
            s * s
        })
        .collect();

    let shift = if oracle.tail_counterterm && p.pbg_coupling > 0.0 {
        let z_ref = 0.5 * (p.omega_b + p.omega_l);
        -(p.pbg_coupling / PI) * tail_integral(band, z_ref - p.omega_e)
    } else {
        0.0
    };
    let e_a = Complex64::new(p.omega_l - frame, 0.0);
    let e_b = Complex64::new(p.omega_b + shift - frame, -0.5 * p.gamma);
    let v = p.laser_coupling;

    let max_energy = [
        e_a.norm(),
        e_b.norm(),
        band,
        v,
        coupling * (m as f64).sqrt(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let substeps = ((dt * max_energy / PHASE_PER_STEP).ceil() as usize).max(1);
    let h = dt / substeps as f64;

    // ψ = [a, b, c_0 .. c_{m−1}];  dψ/dt = −iHψ
    let rhs = |psi: &[Complex64], out: &mut [Complex64]| {
        let (a, b) = (psi[0], psi[1]);
        let mut sum_c = Complex64::new(0.0, 0.0);
        for (j, cj) in psi[2..].iter().enumerate() {
            sum_c += cj;
            out[j + 2] = -I * (mode_energy[j] * cj + coupling * b);
        }
        out[0] = -I * (e_a * a + v * b);
        out[1] = -I * (e_b * b + v * a + coupling * sum_c);
    };

    let dim = m + 2;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![Complex64::new(0.0, 0.0); dim],
        vec![Complex64::new(0.0, 0.0); dim],
        vec![Complex64::new(0.0, 0.0); dim],
        vec![Complex64::new(0.0, 0.0); dim],
        vec![Complex64::new(0.0, 0.0); dim],
    );

    let n = grid.len();
    let mut u_aa = Vec::with_capacity(n);
    let mut u_ba = Vec::with_capacity(n);
    let mut pi_a = Vec::with_capacity(n);
    let mut pi_b = Vec::with_capacity(n);
    let mut norm = Vec::with_capacity(n);
    let mut last_norm = 1.0;

    for k in 0..n {
        if k > 0 {
            for _ in 0..substeps {
                rhs(&psi, &mut k1);
                for i in 0..dim {
                    tmp[i] = psi[i] + 0.5 * h * k1[i];
                }
                rhs(&tmp, &mut k2);
                for i in 0..dim {
                    tmp[i] = psi[i] + 0.5 * h * k2[i];
                }
                rhs(&tmp, &mut k3);
                for i in 0..dim {
                    tmp[i] = psi[i] + h * k3[i];
                }
                rhs(&tmp, &mut k4);
                for i in 0..dim {
                    psi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        let total: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if !total.is_finite() || total > last_norm + 1e-9 {
            return Err(Error::Stepper(format!(
                "norm grew from {last_norm} to {total} at t = {}",
                grid.at(k)
            )));
        }
        last_norm = total;
        let phase = Complex64::from_polar(1.0, -frame * grid.at(k));
        u_aa.push(psi[0] * phase);
        u_ba.push(psi[1] * phase);
        pi_a.push(psi[0].norm_sqr());
        pi_b.push(psi[1].norm_sqr());
        norm.push(total);
    }

    NoJumpSolution::from_populations(grid, u_aa, u_ba, pi_a, pi_b, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::cumulative_trapezoid;
    use crate::resolvent::TwoLevel;

    fn reference() -> SystemParams {
        SystemParams {
            gamma: 1.0,
            laser_coupling: 1.0,
            pbg_coupling: (1.0f64 / 3.0).powf(1.5),
            omega_b: 0.0,
            omega_l: 0.0,
            omega_e: 0.0,
            omega_c: 0.0,
        }
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        for &d in &[-2.0, -1e-3, 0.0, 0.5, 3.0] {
            // substitute s = √U / v to map [√U, ∞) onto (0, 1]
            let cutoff = 100.0f64;
            let ru = cutoff.sqrt();
            let q2 = crate::quad::integrate_adaptive(
                |v: f64| {
                    if v == 0.0 {
                        return 0.0;
                    }
                    let s = ru / v;
                    2.0 / (s * s - d) * ru / (v * v)
                },
                0.0,
                1.0,
                &[],
                1e-13,
                10_000,
            )
            .unwrap();
            assert!((tail_integral(cutoff, d) - q2).abs() < 1e-11, "d = {d}");
        }
    }

    #[test]
    fn no_continuum_reduces_to_two_level() {
        let p = SystemParams {
            pbg_coupling: 0.0,
            omega_l: 0.3,
            ..reference()
        };
        let sol = discretized_modes_oracle(&p, &ModeOracle::new(200, 100.0), 10.0, 0.01).unwrap();
        let exact = TwoLevel::from_params(&p, 1.0);
        for (k, t) in sol.grid.times().enumerate() {
            let (aa, ba) = exact.propagator(t);
            assert!((sol.u_aa[k] - aa).norm() < 1e-8, "t = {t}");
            assert!((sol.u_ba[k] - ba).norm() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn norm_obeys_loss_law() {
        let p = reference();
        let sol = discretized_modes_oracle(&p, &ModeOracle::new(400, 100.0), 10.0, 0.01).unwrap();
        let integral = cumulative_trapezoid(&sol.pi_b, 0.01);
        for (k, (norm, area)) in sol.norm.iter().zip(&integral).enumerate() {
            let law = 1.0 - p.gamma * area;
            assert!((norm - law).abs() < 1e-4, "k = {k}");
        }
    }

    #[test]
    fn rejects_small_or_narrow_bands() {
        let p = reference();
        assert!(discretized_modes_oracle(&p, &ModeOracle::new(50, 100.0), 1.0, 0.01).is_err());
        assert!(discretized_modes_oracle(&p, &ModeOracle::new(200, 10.0), 1.0, 0.01).is_err());
    }
}
