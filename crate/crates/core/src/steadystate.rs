//! Trapped population `P(∞)`, mean fluorescence photon number, detuning
//! scans and the flat-vacuum branching benchmark.
//!
//! In the long-time limit the one-photon amplitudes in the band-edge
//! continuum are `V_λ G_ba(ω_λ)`, so
//!
//! ```text
//! P(∞) = ∫ J(ω) |G_ba(ω + i0)|² dω,   J(ω) = C / (π √(ω − ω_e))
//! ```
//!
//! which becomes `(2C/π) ∫₀^∞ |G_ba(ω_e + s²)|² ds` after `ω = ω_e + s²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::{nojump_populations, ContourSpec};
use crate::quad::integrate_adaptive;
use crate::resolvent::{resolvent_amplitudes, validate, ReservoirKind, SystemParams};

/// Smallest upper limit of the `s` integral; the tail beyond it is added
/// analytically.
const S_MAX: f64 = 50.0;
const INTEGRAL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 200_000;

/// `P(∞)⁻¹ − 1`, infinite when nothing is trapped.
pub fn mean_photons(p_inf: f64) -> f64 {
    1.0 / p_inf - 1.0
}

fn g_ba_sq(x: f64, p: &SystemParams, reservoir: &ReservoirKind) -> Result<f64> {
    let g = resolvent_amplitudes(Complex64::new(x, 0.0), p, reservoir)?;
    Ok(g.g_ba.norm_sqr())
}

/// Frequencies where `|G_ba|²` can peak: the bare levels and the edges of
/// the laser-dressed doublet around them.
fn feature_frequencies(p: &SystemParams) -> Vec<f64> {
    let mid = 0.5 * (p.omega_b + p.omega_l);
    let half = 0.5 * (p.omega_b - p.omega_l);
    let split = (half * half + p.laser_coupling * p.laser_coupling).sqrt();
    vec![p.omega_b, p.omega_l, mid - split, mid + split]
}

/// Integrates `f` where the first evaluation failure is reported instead of
/// being swallowed by the quadrature.
fn checked_integral(
    f: impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    let failure = std::sync::Mutex::new(None);
    let value = integrate_adaptive(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("not poisoned").get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        breakpoints,
        INTEGRAL_TOL,
        MAX_PANELS,
    );
    if let Some(e) = failure.into_inner().expect("not poisoned") {
        return Err(e);
    }
    value
}

/// `P(∞)` from the continuum mode integral for the band-edge reservoir of `p`.
pub fn p_infinity_mode_integral(p: &SystemParams) -> Result<f64> {
    let reservoir = p.band_edge();
    validate(p, &reservoir)?;
    if p.gamma == 0.0 && p.pbg_coupling == 0.0 {
        return Err(Error::domain("P(∞) needs gamma > 0 or C > 0"));
    }
    let c = p.pbg_coupling;
    if c == 0.0 {
        return Ok(0.0);
    }
    let breaks: Vec<f64> = feature_frequencies(p)
        .into_iter()
        .filter(|&x| x > p.omega_e)
        .map(|x| (x - p.omega_e).sqrt())
        .collect();
    let s_max = breaks.iter().fold(S_MAX, |m, &s| m.max(4.0 * s));
    let body = checked_integral(
        |s| g_ba_sq(p.omega_e + s * s, p, &reservoir),
        0.0,
        s_max,
        &breaks,
    )?;
    // |G_ba|² → V²/s⁸ far above every level
    let v = p.laser_coupling;
    let tail = v * v / (7.0 * s_max.powi(7));
    let total = 2.0 * c / PI * (body + tail);
    if !(-1e-9..=1.0 + 1e-9).contains(&total) {
        return Err(Error::accuracy(format!(
            "mode integral gave P(∞) = {total}"
        )));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// `P(∞)` from the norm-loss law integrated to infinity, using Parseval:
/// `1 − (γ/2π) ∫ |G_ba(x + i0)|² dx`. Independent of the mode integral.
pub fn p_infinity_parseval(p: &SystemParams, reservoir: &ReservoirKind) -> Result<f64> {
    validate(p, reservoir)?;
    let half_width = 2000.0;
    let center = 0.5 * (p.omega_b + p.omega_l);
    let mut breaks = feature_frequencies(p);
    if let Some(edge) = reservoir.branch_point() {
        breaks.push(edge);
        breaks.extend([-1.0, 1.0].map(|s| edge + s * 1e-3));
    }
    let body = checked_integral(
        |x| g_ba_sq(x, p, reservoir),
        center - half_width,
        center + half_width,
        &breaks,
    )?;
    let v = p.laser_coupling;
    // two tails of V²/x⁴
    let tail = 2.0 * v * v / (3.0 * half_width.powi(3));
    Ok(1.0 - p.gamma / (2.0 * PI) * (body + tail))
}

/// `P(T)` from the time-domain inversion.
pub fn p_infinity_from_inversion(
    p: &SystemParams,
    reservoir: &ReservoirKind,
    spec: &ContourSpec,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    Ok(nojump_populations(p, reservoir, spec, horizon, dt)?.p_inf_estimate)
}

/// `P(∞)` against laser detuning from the band edge for one laser coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub laser_coupling: f64,
    pub delta: Vec<f64>,
    pub p_inf: Vec<f64>,
    pub mean_photons: Vec<f64>,
    #[serde(skip)]
    pub params: SystemParams,
}

impl ScanResult {
    /// Largest jump between neighbouring scan points.
    pub fn max_step(&self) -> f64 {
        self.p_inf
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    /// `max P(∞) / min P(∞)` over the scan.
    pub fn contrast(&self) -> f64 {
        let max = self.p_inf.iter().copied().fold(f64::MIN, f64::max);
        let min = self.p_inf.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

/// For each `V` in `couplings` and `δ` in `deltas`, sets `ω_b = ω_e`,
/// `ω_L = ω_e + δ` and evaluates the mode integral.
pub fn detuning_scan(
    p: &SystemParams,
    deltas: &[f64],
    couplings: &[f64],
) -> Result<Vec<ScanResult>> {
    if deltas.is_empty() || couplings.is_empty() {
        return Err(Error::domain(
            "detuning scan needs at least one detuning and one coupling",
        ));
    }
    couplings
        .iter()
        .map(|&v| {
            let params = SystemParams {
                laser_coupling: v,
                omega_b: p.omega_e,
                ..*p
            };
            let p_inf = deltas
                .par_iter()
                .map(|&d| {
                    p_infinity_mode_integral(&SystemParams {
                        omega_l: p.omega_e + d,
                        ..params
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScanResult {
                laser_coupling: v,
                delta: deltas.to_vec(),
                mean_photons: p_inf.iter().map(|&x| mean_photons(x)).collect(),
                p_inf,
                params,
            })
        })
        .collect()
}

/// Flat-vacuum benchmark: `P(T)` with the `b → c` channel replaced by a
/// Markovian continuum of rate `γ′`. Should equal `γ′/(γ + γ′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branching {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub laser_coupling: f64,
    pub omega_l: f64,
    pub omega_b: f64,
}

impl Branching {
    pub fn expected(&self) -> f64 {
        self.gamma_prime / (self.gamma + self.gamma_prime)
    }
}

pub fn free_space_branching(
    b: &Branching,
    spec: &ContourSpec,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    let p = SystemParams {
        gamma: b.gamma,
        laser_coupling: b.laser_coupling,
        pbg_coupling: 0.0,
        omega_b: b.omega_b,
        omega_l: b.omega_l,
        omega_e: b.omega_b,
        omega_c: 0.0,
    };
    if b.gamma + b.gamma_prime <= 0.0 {
        return Err(Error::domain("branching needs gamma + gamma' > 0"));
    }
    p_infinity_from_inversion(
        &p,
        &ReservoirKind::Flat {
            rate: b.gamma_prime,
        },
        spec,
        horizon,
        dt,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn no_band_edge_coupling_traps_nothing() {
        let p = SystemParams {
            pbg_coupling: 0.0,
            ..reference()
        };
        assert_eq!(p_infinity_mode_integral(&p).unwrap(), 0.0);
    }

    #[test]
    fn reference_trapped_population_by_two_routes() {
        let p = reference();
        let modes = p_infinity_mode_integral(&p).unwrap();
        let parseval = p_infinity_parseval(&p, &p.band_edge()).unwrap();
        assert!((modes - 0.2).abs() < 0.05, "{modes}");
        assert!((modes - parseval).abs() < 1e-6, "{modes} vs {parseval}");
    }

    #[test]
    fn fluorescence_drains_the_trap_as_gamma_grows() {
        let values: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&g| {
                p_infinity_mode_integral(&SystemParams {
                    gamma: g,
                    ..reference()
                })
                .unwrap()
            })
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn flat_parseval_gives_branching_ratio() {
        let p = SystemParams {
            pbg_coupling: 0.0,
            ..reference()
        };
        for rate in [0.5, 1.0, 2.0] {
            let v = p_infinity_parseval(&p, &ReservoirKind::Flat { rate }).unwrap();
            assert!((v - rate / (1.0 + rate)).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn scan_photon_mean_identity() {
        let p = SystemParams {
            pbg_coupling: 1.0,
            ..reference()
        };
        let scans = detuning_scan(&p, &[-1.0, 0.0, 1.0], &[0.5, 3.0]).unwrap();
        for s in &scans {
            for (pi, m) in s.p_inf.iter().zip(&s.mean_photons) {
                assert_eq!(*m, 1.0 / pi - 1.0);
                assert!((0.0..=1.0).contains(pi));
            }
        }
    }

    #[test]
    fn far_above_the_edge_the_trap_follows_raman_branching() {
        // far-detuned |a⟩ leaks into the band edge at 2C/√δ and into the
        // flat vacuum at γ, both scaled by the same V²/δ² admixture
        let p = SystemParams {
            pbg_coupling: 1.0,
            laser_coupling: 0.5,
            ..reference()
        };
        let deltas = [50.0, 400.0, 5000.0];
        let s = &detuning_scan(&p, &deltas, &[0.5]).unwrap()[0];
        assert!(s.p_inf.windows(2).all(|w| w[1] < w[0]), "{:?}", s.p_inf);
        for (d, got) in deltas.iter().zip(&s.p_inf) {
            let edge_rate = 2.0 * p.pbg_coupling / d.sqrt();
            let raman = edge_rate / (edge_rate + p.gamma);
            assert!(
                (got / raman - 1.0).abs() < 5.0 / d.sqrt(),
                "δ = {d}: {got} vs {raman}"
            );
        }
    }

    #[test]
    fn flat_branching_is_drive_independent() {
        let spec = ContourSpec::default();
        for v in [0.5, 3.0] {
            let b = Branching {
                gamma: 1.0,
                gamma_prime: 1.0,
                laser_coupling: v,
                omega_l: 0.0,
                omega_b: 0.0,
            };
            let got = free_space_branching(&b, &spec, 30.0, 0.01).unwrap();
            assert!((got - 0.5).abs() < 1e-3, "V = {v}: {got}");
        }
    }
}
