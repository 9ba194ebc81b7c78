//! Isotropic band-gap dispersion model for a periodic array of dielectric
//! scatterers, the effective-mass expansion at the upper band edge, and the
//! resulting effective atom–continuum coupling strength.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which arccos branch of the dispersion relation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `(c/4na)·arccos(X)`, the band below the gap.
    Lower,
    /// `(c/4na)·(2π − arccos(X))`, the band above the gap.
    Upper,
}

/// Geometry of the scatterer array: radius `a`, refractive index `n`,
/// speed of light `c`. The scatterer separation is `b = 2an`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandModel {
    radius: f64,
    index: f64,
    light_speed: f64,
}

/// Quantities at the upper band edge used by the effective-mass expansion
/// `ω(k) ≈ ω_e + A (k − k₀)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEdge {
    pub omega_e: f64,
    pub curvature: f64,
    pub k0: f64,
}

impl BandModel {
    pub fn new(radius: f64, index: f64, light_speed: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!(
                "scatterer radius must be positive, got {radius}"
            )));
        }
        if !(index.is_finite() && index >= 1.0) {
            return Err(Error::domain(format!(
                "refractive index must be >= 1, got {index}"
            )));
        }
        if !(light_speed.is_finite() && light_speed > 0.0) {
            return Err(Error::domain(format!(
                "light speed must be positive, got {light_speed}"
            )));
        }
        Ok(BandModel {
            radius,
            index,
            light_speed,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    pub fn light_speed(&self) -> f64 {
        self.light_speed
    }

    pub fn separation(&self) -> f64 {
        2.0 * self.radius * self.index
    }

    fn scale(&self) -> f64 {
        self.light_speed / (4.0 * self.index * self.radius)
    }

    /// Argument of the arccos; lies in `[-1, 1]` for `n ≥ 1`.
    fn arccos_argument(&self, k: f64) -> f64 {
        let n = self.index;
        let phase = 2.0 * k * self.radius * (1.0 + n);
        let x = (4.0 * n * phase.cos() + (1.0 - n).powi(2)) / (1.0 + n).powi(2);
        x.clamp(-1.0, 1.0)
    }

    /// Center of the gap, `ω₀ = πc/(4na)`.
    pub fn gap_center(&self) -> f64 {
        PI * self.scale()
    }

    /// Gap width `Δω`, from the band extrema at `cos(2ka(1+n)) = −1`.
    pub fn gap_width(&self) -> f64 {
        let n = self.index;
        let x_min = (-4.0 * n + (1.0 - n).powi(2)) / (1.0 + n).powi(2);
        2.0 * self.scale() * (PI - x_min.clamp(-1.0, 1.0).acos())
    }

    pub fn upper_edge(&self) -> f64 {
        self.gap_center() + 0.5 * self.gap_width()
    }

    /// Wavenumber of the band edge, `k₀ = π / (2a(n+1))`.
    pub fn edge_wavenumber(&self) -> f64 {
        PI / (2.0 * self.radius * (self.index + 1.0))
    }

    pub fn dispersion_omega(&self, k: f64, branch: Branch) -> Result<f64> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::domain(format!(
                "wavenumber must be positive and finite, got {k}"
            )));
        }
        let theta = self.arccos_argument(k).acos();
        Ok(match branch {
            Branch::Lower => self.scale() * theta,
            Branch::Upper => self.scale() * (2.0 * PI - theta),
        })
    }

    /// Effective-mass constants of the upper edge:
    /// `A = −2ac / sin(4naω_e/c)` and `k₀ = π/(2a(n+1))`.
    pub fn band_edge_params(&self) -> Result<BandEdge> {
        let omega_e = self.upper_edge();
        let s = (4.0 * self.index * self.radius * omega_e / self.light_speed).sin();
        // n = 1 gives sin(π) ≈ 1e-16; treat anything that small as zero
        if s.abs() < 1e-12 {
            return Err(Error::DegenerateCurvature(format!(
                "sin(4naω_e/c) = {s:e} for n = {}; no gap",
                self.index
            )));
        }
        let curvature = -2.0 * self.radius * self.light_speed / s;
        Ok(BandEdge {
            omega_e,
            curvature,
            k0: self.edge_wavenumber(),
        })
    }
}

impl BandEdge {
    /// Quadratic model `ω_e + A(k − k₀)²`.
    pub fn effective_mass_omega(&self, k: f64) -> f64 {
        self.omega_e + self.curvature * (k - self.k0).powi(2)
    }
}

/// Source of the band-edge coupling constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingModel {
    /// Dipole moment `d` and vacuum permittivity `ε₀`, in units consistent
    /// with the band model.
    Microscopic {
        dipole_moment: f64,
        permittivity: f64,
    },
    /// `C^{2/3}` given directly, in units of the flat-vacuum rate.
    Pow23(f64),
}

impl CouplingModel {
    pub fn effective_coupling(&self, band: &BandModel) -> Result<f64> {
        match *self {
            CouplingModel::Pow23(target) => {
                if !(target.is_finite() && target >= 0.0) {
                    return Err(Error::domain(format!(
                        "C^(2/3) must be non-negative, got {target}"
                    )));
                }
                Ok(target.powf(1.5))
            }
            CouplingModel::Microscopic {
                dipole_moment,
                permittivity,
            } => {
                if !(permittivity.is_finite() && permittivity > 0.0) {
                    return Err(Error::domain(format!(
                        "permittivity must be positive, got {permittivity}"
                    )));
                }
                if !dipole_moment.is_finite() {
                    return Err(Error::domain("dipole moment must be finite"));
                }
                let edge = band.band_edge_params()?;
                if edge.curvature <= 0.0 {
                    return Err(Error::domain(format!(
                        "band curvature must be positive, got {}",
                        edge.curvature
                    )));
                }
                Ok(dipole_moment.powi(2) * edge.k0.powi(2) * edge.omega_e
                    / (4.0 * PI * permittivity * edge.curvature.sqrt()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_band() -> BandModel {
        BandModel::new(1.0, 1.082, 1.0).unwrap()
    }

    #[test]
    fn gap_geometry_at_n_1082() {
        let band = reference_band();
        let w0 = band.gap_center();
        assert_relative_eq!(w0, PI / (4.0 * 1.082), epsilon = 1e-15);
        assert_eq!(format!("{:.3}", band.gap_width() / w0), "0.050");
        assert_eq!(format!("{:.3}", band.upper_edge() / w0), "1.025");
    }

    #[test]
    fn upper_branch_at_edge_matches_scanned_extrema() {
        let band = reference_band();
        let edge = band.band_edge_params().unwrap();
        // Independent route: scan both branches for their extrema.
        let k0 = band.edge_wavenumber();
        let n = 200_001;
        let mut lower_max = f64::MIN;
        let mut upper_min = f64::MAX;
        for i in 1..n {
            let k = 2.0 * k0 * i as f64 / (n - 1) as f64;
            lower_max = lower_max.max(band.dispersion_omega(k, Branch::Lower).unwrap());
            upper_min = upper_min.min(band.dispersion_omega(k, Branch::Upper).unwrap());
        }
        let scanned_edge = band.gap_center() + 0.5 * (upper_min - lower_max);
        let at_k0 = band.dispersion_omega(k0, Branch::Upper).unwrap();
        assert!((at_k0 - edge.omega_e).abs() / edge.omega_e < 1e-10);
        assert!((scanned_edge - edge.omega_e).abs() / edge.omega_e < 1e-10);
        assert!(lower_max < upper_min);
    }

    #[test]
    fn index_matched_limit_has_no_gap() {
        let band = BandModel::new(1.0, 1.0, 1.0).unwrap();
        assert!(band.gap_width().abs() < 1e-7);
        // free light: ω = ck below the fold
        let k = 0.3;
        assert_relative_eq!(
            band.dispersion_omega(k, Branch::Lower).unwrap(),
            k,
            epsilon = 1e-12
        );
        assert!(matches!(
            band.band_edge_params(),
            Err(Error::DegenerateCurvature(_))
        ));
    }

    #[test]
    fn curvature_positive_and_matches_finite_difference() {
        let band = reference_band();
        let edge = band.band_edge_params().unwrap();
        assert!(edge.curvature > 0.0);
        assert_relative_eq!(edge.k0, PI / (2.0 * 2.082), epsilon = 1e-15);
        let h = 1e-4 * edge.k0;
        let w = |k| band.dispersion_omega(k, Branch::Upper).unwrap();
        let second = (w(edge.k0 + h) - 2.0 * w(edge.k0) + w(edge.k0 - h)) / (h * h);
        assert!((0.5 * second - edge.curvature).abs() / edge.curvature < 1e-4);
    }

    #[test]
    fn effective_mass_residual_near_edge() {
        let band = reference_band();
        let edge = band.band_edge_params().unwrap();
        let max_residual = |frac: f64| {
            (0..=2000)
                .map(|i| {
                    let k = edge.k0 * (1.0 - frac + 2.0 * frac * i as f64 / 2000.0);
                    let exact = band.dispersion_omega(k, Branch::Upper).unwrap();
                    (exact - edge.effective_mass_omega(k)).abs() / edge.omega_e
                })
                .fold(0.0, f64::max)
        };
        // The residual is quartic in (k − k₀); 1e-4 holds out to about 1.1% of k₀.
        assert!(max_residual(0.01) < 1e-4);
        let wide = max_residual(0.02);
        assert!(wide > 9e-4 && wide < 1e-3, "residual at 2% of k0: {wide}");
    }

    #[test]
    fn effective_mass_residual_is_higher_than_second_order() {
        let band = reference_band();
        let edge = band.band_edge_params().unwrap();
        let offsets = [1e-3, 2e-3, 4e-3, 8e-3];
        let pts: Vec<(f64, f64)> = offsets
            .iter()
            .map(|&d| {
                let k = edge.k0 * (1.0 + d);
                let r = (band.dispersion_omega(k, Branch::Upper).unwrap()
                    - edge.effective_mass_omega(k))
                .abs();
                ((d * edge.k0).ln(), r.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope >= 2.9, "slope {slope}");
    }

    #[test]
    fn branches_are_monotone_in_reduced_zone() {
        let band = reference_band();
        let k0 = band.edge_wavenumber();
        let lower: Vec<f64> = (1..=500)
            .map(|i| {
                band.dispersion_omega(k0 * i as f64 / 500.0, Branch::Lower)
                    .unwrap()
            })
            .collect();
        let upper: Vec<f64> = (0..=500)
            .map(|i| {
                band.dispersion_omega(k0 * (1.0 + i as f64 / 500.0), Branch::Upper)
                    .unwrap()
            })
            .collect();
        assert!(lower.windows(2).all(|w| w[1] >= w[0]));
        assert!(upper.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BandModel::new(0.0, 1.1, 1.0).is_err());
        assert!(BandModel::new(1.0, 0.9, 1.0).is_err());
        assert!(reference_band()
            .dispersion_omega(f64::NAN, Branch::Upper)
            .is_err());
        assert!(reference_band()
            .dispersion_omega(-1.0, Branch::Upper)
            .is_err());
    }

    #[test]
    fn coupling_from_target_and_dipole() {
        let band = reference_band();
        let c = CouplingModel::Pow23(1.0 / 3.0)
            .effective_coupling(&band)
            .unwrap();
        assert_relative_eq!(c, 3f64.powf(-1.5), epsilon = 1e-15);
        assert!((c - 0.19245).abs() < 1e-5);

        let micro = |d| CouplingModel::Microscopic {
            dipole_moment: d,
            permittivity: 1.0,
        };
        assert_eq!(micro(0.0).effective_coupling(&band).unwrap(), 0.0);
        let c1 = micro(0.7).effective_coupling(&band).unwrap();
        let c2 = micro(1.4).effective_coupling(&band).unwrap();
        assert_relative_eq!(c2, 4.0 * c1, epsilon = 1e-14);
    }
}
