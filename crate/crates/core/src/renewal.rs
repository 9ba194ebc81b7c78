//! Ensemble-averaged populations from the no-jump solution.
//!
//! Every jump returns the atom to `|a⟩`, so the average populations obey
//!
//! ```text
//! π̄_i(t) = π⁰_i(t) + γ ∫₀ᵗ π̄_b(t′) π⁰_i(t − t′) dt′
//! ```
//!
//! which is solved for `π̄_b` first and then used as a known source for
//! `π̄_a` and `π̄_c`. Two solvers share the same trapezoidal discretisation:
//! forward time-marching and a damped discrete transform with closed-form
//! resummation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::inversion::NoJumpSolution;

/// Allowed negativity and normalisation defect of the averaged populations.
pub const ENSEMBLE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewalMethod {
    Volterra,
    Transform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSolution {
    pub grid: TimeGrid,
    pub pibar_a: Vec<f64>,
    pub pibar_b: Vec<f64>,
    pub pibar_c: Vec<f64>,
    pub method: RenewalMethod,
}

impl EnsembleSolution {
    pub fn trace_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| (self.pibar_a[k] + self.pibar_b[k] + self.pibar_c[k] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check(&self, tol: f64) -> Result<()> {
        for (k, t) in self.grid.times().enumerate() {
            for (name, v) in [
                ("a", self.pibar_a[k]),
                ("b", self.pibar_b[k]),
                ("c", self.pibar_c[k]),
            ] {
                if !v.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite pibar_{name} at t = {t}"
                    )));
                }
                if v < -tol || v > 1.0 + tol {
                    return Err(Error::accuracy(format!(
                        "pibar_{name} = {v} outside [0, 1] at t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_input(nojump: &NoJumpSolution, gamma: f64) -> Result<()> {
    let n = nojump.grid.len();
    if nojump.pi_a.len() != n || nojump.pi_b.len() != n || nojump.pi_c.len() != n {
        return Err(Error::GridMismatch(format!(
            "no-jump series lengths ({}, {}, {}) differ from grid length {n}",
            nojump.pi_a.len(),
            nojump.pi_b.len(),
            nojump.pi_c.len()
        )));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(())
}

/// `dt·[½ y₀ k_n + Σ_{m=1}^{n−1} y_m k_{n−m} + ½ y_n k₀]`.
fn trapezoid_convolution(y: &[f64], kernel: &[f64], n: usize, dt: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let inner: f64 = (1..n).map(|m| y[m] * kernel[n - m]).sum();
    dt * (0.5 * y[0] * kernel[n] + inner + 0.5 * y[n] * kernel[0])
}

/// Forward time-marching solution of the renewal equation.
pub fn solve_renewal(nojump: &NoJumpSolution, gamma: f64) -> Result<EnsembleSolution> {
    check_input(nojump, gamma)?;
    let dt = nojump.grid.dt();
    let n = nojump.grid.len();
    let a = &nojump.pi_b;

    let mut y = vec![0.0; n];
    y[0] = a[0];
    let diag = 1.0 - 0.5 * gamma * dt * a[0];
    for k in 1..n {
        let known: f64 = (1..k).map(|m| y[m] * a[k - m]).sum::<f64>() + 0.5 * y[0] * a[k];
        y[k] = (a[k] + gamma * dt * known) / diag;
    }

    let passive = |kernel: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| kernel[k] + gamma * trapezoid_convolution(&y, kernel, k, dt))
            .collect()
    };
    let sol = EnsembleSolution {
        grid: nojump.grid,
        pibar_a: passive(&nojump.pi_a),
        pibar_c: passive(&nojump.pi_c),
        pibar_b: y,
        method: RenewalMethod::Volterra,
    };
    sol.check(ENSEMBLE_TOLERANCE)?;
    Ok(sol)
}

/// Sup-norm residual of the discretised renewal equation for `π̄_b`.
pub fn renewal_residual(nojump: &NoJumpSolution, gamma: f64, sol: &EnsembleSolution) -> f64 {
    let dt = nojump.grid.dt();
    (0..nojump.grid.len())
        .map(|k| {
            let rhs =
                nojump.pi_b[k] + gamma * trapezoid_convolution(&sol.pibar_b, &nojump.pi_b, k, dt);
            (sol.pibar_b[k] - rhs).abs()
        })
        .fold(0.0, f64::max)
}

struct DampedTransform {
    len: usize,
    radius: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl DampedTransform {
    /// Sequences of length `n` sampled on a circle of radius `r < 1`, padded
    /// to `4n` so that wrap-around terms are suppressed by `r^{4n} = 1e-12`.
    fn new(n: usize) -> Self {
        let len = (4 * n).next_power_of_two();
        let radius = (1e-12f64.ln() / len as f64).exp();
        let mut planner = FftPlanner::new();
        DampedTransform {
            len,
            radius,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn forward(&self, seq: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        let mut scale = 1.0;
        for (b, &v) in buf.iter_mut().zip(seq) {
            *b = Complex64::new(v * scale, 0.0);
            scale *= self.radius;
        }
        self.forward.process(&mut buf);
        buf
    }

    fn inverse(&self, mut spectrum: Vec<Complex64>, n: usize) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let norm = 1.0 / self.len as f64;
        let mut scale = 1.0;
        spectrum
            .iter()
            .take(n)
            .map(|c| {
                let v = c.re * norm / scale;
                scale *= self.radius;
                v
            })
            .collect()
    }
}

/// Transform-domain solution: `Y = A(1 − ½γdt·a₀) / (1 − γdt·A + ½γdt·a₀)`,
/// the discrete counterpart of `π̄_b(z) = π⁰_b(z) / (1 − γ π⁰_b(z))`.
pub fn renewal_transform_check(nojump: &NoJumpSolution, gamma: f64) -> Result<EnsembleSolution> {
    check_input(nojump, gamma)?;
    let dt = nojump.grid.dt();
    let n = nojump.grid.len();
    let tf = DampedTransform::new(n);

    let a0 = nojump.pi_b[0];
    let g = gamma * dt;
    let a_hat = tf.forward(&nojump.pi_b);
    let mut y_hat = Vec::with_capacity(tf.len);
    for (m, a) in a_hat.iter().enumerate() {
        let denom = 1.0 - g * a + 0.5 * g * a0;
        if denom.norm() < 1e-12 {
            return Err(Error::ResummationPole(m));
        }
        y_hat.push(a * (1.0 - 0.5 * g * a0) / denom);
    }
    let y = tf.inverse(y_hat.clone(), n);

    // passive populations: full product, then trapezoid end corrections
    let passive = |kernel: &[f64]| -> Vec<f64> {
        let k_hat = tf.forward(kernel);
        let product: Vec<Complex64> = y_hat.iter().zip(&k_hat).map(|(y, k)| y * k).collect();
        let full = tf.inverse(product, n);
        (0..n)
            .map(|j| {
                let conv = if j == 0 {
                    0.0
                } else {
                    dt * (full[j] - 0.5 * y[0] * kernel[j] - 0.5 * y[j] * kernel[0])
                };
                kernel[j] + gamma * conv
            })
            .collect()
    };

    let sol = EnsembleSolution {
        grid: nojump.grid,
        pibar_a: passive(&nojump.pi_a),
        pibar_c: passive(&nojump.pi_c),
        pibar_b: y,
        method: RenewalMethod::Transform,
    };
    sol.check(ENSEMBLE_TOLERANCE)?;
    Ok(sol)
}
