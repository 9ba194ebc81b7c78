//! Self-energy of the photonic continuum and closed-form resolvent matrix
//! elements for an atom starting in the ground state `|a⟩`.
//!
//! Energies are measured in the frame where `|a⟩` carries the laser
//! frequency `ω_L`, so the amplitudes are
//!
//! ```text
//! B(z)    = z − ω_b + iγ/2 − Σ(z)
//! D(z)    = (z − ω_L) B(z) − V²
//! G_aa(z) = B(z) / D(z)
//! G_ba(z) = V / D(z)
//! ```
//!
//! For the band-edge continuum `−Σ(z) = +iC/√(z − ω_e)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Atomic, laser and reservoir parameters, in units of the flat-vacuum rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Decay rate of `|b⟩` into the flat vacuum.
    pub gamma: f64,
    /// Laser coupling `V_ab = g_L` (real, non-negative).
    pub laser_coupling: f64,
    /// Band-edge coupling constant `C`.
    pub pbg_coupling: f64,
    pub omega_b: f64,
    pub omega_l: f64,
    pub omega_e: f64,
    /// Energy of `|c⟩`. Does not enter the amplitudes: the `b ↔ c`
    /// transition is located by the placement of `ω_e` relative to `ω_b`.
    pub omega_c: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma,
            self.laser_coupling,
            self.pbg_coupling,
            self.omega_b,
            self.omega_l,
            self.omega_e,
            self.omega_c,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("all system parameters must be finite"));
        }
        if self.gamma < 0.0 {
            return Err(Error::domain(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.pbg_coupling < 0.0 {
            return Err(Error::domain(format!(
                "C must be >= 0, got {}",
                self.pbg_coupling
            )));
        }
        if self.laser_coupling < 0.0 {
            return Err(Error::domain(format!(
                "V_ab must be >= 0 (phase convention), got {}",
                self.laser_coupling
            )));
        }
        Ok(())
    }

    /// The structured reservoir described by `C` and `ω_e`.
    pub fn band_edge(&self) -> ReservoirKind {
        ReservoirKind::BandEdge {
            coupling: self.pbg_coupling,
            edge: self.omega_e,
        }
    }
}

/// Continuum attached to the `b → c` transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReservoirKind {
    /// Photonic band edge: `Σ(z) = −iC/√(z − ω_e)`.
    BandEdge { coupling: f64, edge: f64 },
    /// Flat Markovian vacuum with decay rate `γ′`: `Σ(z) = −iγ′/2`.
    Flat { rate: f64 },
}

impl ReservoirKind {
    pub fn branch_point(&self) -> Option<f64> {
        match *self {
            ReservoirKind::BandEdge { coupling, edge } if coupling > 0.0 => Some(edge),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ReservoirKind::BandEdge { coupling, edge } => {
                if !(coupling.is_finite() && coupling >= 0.0 && edge.is_finite()) {
                    return Err(Error::domain(
                        "band-edge reservoir needs finite C >= 0 and finite ω_e",
                    ));
                }
            }
            ReservoirKind::Flat { rate } => {
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(Error::domain(format!(
                        "flat reservoir rate must be >= 0, got {rate}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Self-energy on the physical sheet, for `Im z ≥ 0`.
///
/// On the real axis this is the limit from above: pure damping above the
/// edge and a pure (negative) level shift below it.
pub fn self_energy(z: Complex64, reservoir: &ReservoirKind) -> Result<Complex64> {
    match *reservoir {
        ReservoirKind::Flat { rate } => Ok(Complex64::new(0.0, -0.5 * rate)),
        ReservoirKind::BandEdge { coupling, edge } => {
            if coupling == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            if z.im < 0.0 {
                return Err(Error::domain(format!(
                    "band-edge self-energy is evaluated only for Im z >= 0, got {z}"
                )));
            }
            // normalise −0.0 so the principal root lands on the upper side
            let w = Complex64::new(z.re - edge, z.im.max(0.0) + 0.0);
            if w.re == 0.0 && w.im == 0.0 {
                return Err(Error::Singular(z));
            }
            Ok(-I * coupling / w.sqrt())
        }
    }
}

/// `G_aa(z)` and `G_ba(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub g_aa: Complex64,
    pub g_ba: Complex64,
}

pub fn resolvent_amplitudes(
    z: Complex64,
    p: &SystemParams,
    reservoir: &ReservoirKind,
) -> Result<Amplitudes> {
    let sigma = self_energy(z, reservoir)?;
    let bracket = z - p.omega_b + I * (0.5 * p.gamma) - sigma;
    let v = p.laser_coupling;
    let product = (z - p.omega_l) * bracket;
    let denom = product - v * v;
    if denom.norm() <= 1e-14 * (product.norm() + v * v) {
        return Err(Error::Pole(z));
    }
    let inv = denom.inv();
    if !(inv.re.is_finite() && inv.im.is_finite()) {
        return Err(Error::Pole(z));
    }
    Ok(Amplitudes {
        g_aa: bracket * inv,
        g_ba: v * inv,
    })
}

/// Checks the parameters once before bulk evaluation.
pub fn validate(p: &SystemParams, reservoir: &ReservoirKind) -> Result<()> {
    p.validate()?;
    reservoir.validate()
}

/// The driven two-level model without the `b → c` channel, with excited
/// state damping `κ`. Its propagator is known in closed form and serves as
/// the analytic reference subtracted before numerical inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    pub omega_l: f64,
    pub omega_b: f64,
    pub coupling: f64,
    pub damping: f64,
}

impl TwoLevel {
    pub fn from_params(p: &SystemParams, damping: f64) -> Self {
        TwoLevel {
            omega_l: p.omega_l,
            omega_b: p.omega_b,
            coupling: p.laser_coupling,
            damping,
        }
    }

    pub fn resolvent(&self, z: Complex64) -> Amplitudes {
        let bracket = z - self.omega_b + I * (0.5 * self.damping);
        let denom = (z - self.omega_l) * bracket - self.coupling * self.coupling;
        let inv = denom.inv();
        Amplitudes {
            g_aa: bracket * inv,
            g_ba: self.coupling * inv,
        }
    }

    /// `(U_aa(t), U_ba(t))` from `exp(−iHt)` with
    /// `H = [[ω_L, V], [V, ω_b − iκ/2]]`.
    pub fn propagator(&self, t: f64) -> (Complex64, Complex64) {
        let h11 = Complex64::new(self.omega_l, 0.0);
        let h22 = Complex64::new(self.omega_b, -0.5 * self.damping);
        let mean = 0.5 * (h11 + h22);
        let half_diff = 0.5 * (h11 - h22);
        let v = self.coupling;
        let omega = (half_diff * half_diff + v * v).sqrt();
        let arg = omega * t;
        // sin(Ωt)/Ω, continuous through Ω = 0
        let sinc = if arg.norm() < 1e-8 {
            Complex64::new(t, 0.0) * (1.0 - arg * arg / 6.0)
        } else {
            arg.sin() / omega
        };
        let phase = (-I * mean * t).exp();
        let u_aa = phase * (arg.cos() - I * sinc * half_diff);
        let u_ba = phase * (-I * sinc * v);
        (u_aa, u_ba)
    }
}
