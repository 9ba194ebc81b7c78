use crate::error::{Error, Result};
use crate::inversion::{NoJumpSolution, POPULATION_TOLERANCE};

/// Waiting time until the next jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    At(f64),
    /// `ε ≤ P(∞)`: the atom is trapped and never fluoresces again.
    Never,
}

/// Inverse of the no-jump norm `P(t)` by monotone cubic (Fritsch–Carlson)
/// interpolation on the solution grid.
#[derive(Debug, Clone)]
pub struct DelaySampler {
    dt: f64,
    norm: Vec<f64>,
    slope: Vec<f64>,
}

impl DelaySampler {
    /// `P` at the end of the grid; draws at or below it never jump.
    pub fn p_inf(&self) -> f64 {
        *self.norm.last().expect("non-empty")
    }

    /// Delay with `P(delay) = ε`.
    ///
    /// `ε ≥ 1` gives a delay of exactly 0. On flat stretches of `P` the
    /// earliest matching time is returned.
    pub fn sample(&self, eps: f64) -> Delay {
        if eps >= self.norm[0] {
            return Delay::At(0.0);
        }
        if eps <= self.p_inf() {
            return Delay::Never;
        }
        // first grid point with P ≤ ε; it exists and is at least 1
        let k = self.norm.partition_point(|&p| p > eps);
        if self.norm[k] == eps {
            return Delay::At(k as f64 * self.dt);
        }
        let (lo, hi) = (k - 1, k);
        let (p0, p1) = (self.norm[lo], self.norm[hi]);
        let (m0, m1) = (self.slope[lo] * self.dt, self.slope[hi] * self.dt);
        let hermite = |u: f64| {
            let u2 = u * u;
            let u3 = u2 * u;
            (2.0 * u3 - 3.0 * u2 + 1.0) * p0
                + (u3 - 2.0 * u2 + u) * m0
                + (-2.0 * u3 + 3.0 * u2) * p1
                + (u3 - u2) * m1
        };
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if hermite(mid) > eps {
                a = mid;
            } else {
                b = mid;
            }
        }
        Delay::At((lo as f64 + b) * self.dt)
    }
}

/// Builds the sampler, rejecting norms that increase by more than the
/// population tolerance. Smaller increases are flattened.
pub fn build_delay_sampler(nojump: &NoJumpSolution) -> Result<DelaySampler> {
    let dt = nojump.grid.dt();
    let mut norm = Vec::with_capacity(nojump.norm.len());
    let mut running = f64::INFINITY;
    for (k, &p) in nojump.norm.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::Input(format!(
                "non-finite norm at t = {}",
                nojump.grid.at(k)
            )));
        }
        if p > running + POPULATION_TOLERANCE {
            return Err(Error::Input(format!(
                "norm P(t) increases at t = {} ({running} -> {p})",
                nojump.grid.at(k)
            )));
        }
        running = running.min(p);
        norm.push(running);
    }
    if norm.len() < 2 {
        return Err(Error::Input(
            "delay sampler needs at least two grid points".into(),
        ));
    }
    Ok(DelaySampler {
        dt,
        slope: pchip_slopes(&norm, dt),
        norm,
    })
}

fn pchip_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let secant: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (s0, s1) = (secant[k - 1], secant[k]);
        if s0 * s1 > 0.0 {
            // harmonic mean keeps the interpolant monotone on a uniform grid
            d[k] = 2.0 * s0 * s1 / (s0 + s1);
        }
    }
    d[0] = end_slope(secant[0], secant.get(1).copied().unwrap_or(secant[0]));
    d[n - 1] = end_slope(
        secant[n - 2],
        if n > 2 { secant[n - 3] } else { secant[n - 2] },
    );
    d
}

fn end_slope(near: f64, far: f64) -> f64 {
    let d = 0.5 * (3.0 * near - far);
    if d * near <= 0.0 {
        0.0
    } else if near * far <= 0.0 && d.abs() > 3.0 * near.abs() {
        3.0 * near
    } else {
        d
    }
}
