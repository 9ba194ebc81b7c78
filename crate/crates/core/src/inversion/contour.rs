//! Numerical inversion `U(t) = (1/2πi) ∫_{∞+iε}^{−∞+iε} G(z) e^{−izt} dz`.
//!
//! The contour runs along `Im z = ε` (the real axis by default, using the
//! upper limits of the amplitudes). An optional analytic reference with a
//! known inverse is subtracted first so that only a rapidly decaying
//! remainder is integrated. A square-root branch point on the contour is
//! handled by the substitution `x = x_b ± s²` on either side of it, with
//! geometrically shrinking panels next to the branch point.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{gauss_legendre, sine_integral};

const PANEL_ORDER: usize = 8;
const TIME_BLOCK: usize = 64;
const REFINE_RATIO: f64 = 0.25;

/// Placement and resolution of the inversion contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    /// Integrate `x ∈ [x_c − W, x_c + W]`.
    pub window_halfwidth: f64,
    /// Contour height `ε ≥ 0`; results are compensated by `e^{εt}`.
    pub offset: f64,
    /// Approximate number of quadrature nodes across the window.
    pub grid_points: usize,
    /// Number of geometrically shrinking panels packed next to a branch point.
    pub edge_refinement: usize,
    /// Subtract the analytic reference and correct the truncated `1/x²` tail.
    pub asymptote_subtraction: bool,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            window_halfwidth: 200.0,
            offset: 0.0,
            grid_points: 1 << 16,
            edge_refinement: 8,
            asymptote_subtraction: true,
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_halfwidth.is_finite() && self.window_halfwidth > 0.0) {
            return Err(Error::domain(format!(
                "window half-width must be positive, got {}",
                self.window_halfwidth
            )));
        }
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(Error::domain(format!(
                "contour offset must be >= 0, got {}",
                self.offset
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::domain("contour needs at least 2 grid points"));
        }
        Ok(())
    }

    fn panel_width(&self) -> f64 {
        2.0 * self.window_halfwidth * PANEL_ORDER as f64 / self.grid_points as f64
    }
}

/// An amplitude in the Laplace (frequency) domain, analytic above the contour.
pub trait LaplaceImage: Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;

    /// Center `x_c` of the integration window.
    fn center(&self) -> f64 {
        0.0
    }

    /// Square-root branch point on the real axis, if any.
    fn branch_point(&self) -> Option<f64> {
        None
    }

    /// Part of the amplitude with a closed-form inverse. Must reproduce the
    /// leading `1/z` behaviour for the subtraction to help.
    fn reference(&self, _z: Complex64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    /// Time-domain inverse of [`LaplaceImage::reference`].
    fn reference_inverse(&self, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    x: f64,
    weight: f64,
}

/// Quadrature nodes on the real axis, ordered by increasing `x`.
fn build_nodes(spec: &ContourSpec, center: f64, branch: Option<f64>) -> Vec<Node> {
    let (gl_x, gl_w) = gauss_legendre(PANEL_ORDER);
    let lo = center - spec.window_halfwidth;
    let hi = center + spec.window_halfwidth;
    let h = spec.panel_width();
    let mut nodes = Vec::with_capacity(spec.grid_points + 4 * PANEL_ORDER * spec.edge_refinement);

    let plain_panels = |a: f64, b: f64, nodes: &mut Vec<Node>| {
        let count = ((b - a) / h).ceil().max(1.0) as usize;
        let width = (b - a) / count as f64;
        for p in 0..count {
            let mid = a + (p as f64 + 0.5) * width;
            for (gx, gw) in gl_x.iter().zip(&gl_w) {
                nodes.push(Node {
                    x: mid + 0.5 * width * gx,
                    weight: 0.5 * width * gw,
                });
            }
        }
    };

    match branch.filter(|&b| b > lo && b < hi) {
        None => plain_panels(lo, hi, &mut nodes),
        Some(edge) => {
            let distance_cuts = |length: f64| -> Vec<f64> {
                let mut cuts = vec![0.0];
                let first = h.min(length);
                for k in (1..=spec.edge_refinement).rev() {
                    cuts.push(first * REFINE_RATIO.powi(k as i32));
                }
                cuts.push(first);
                if length > first {
                    let count = ((length - first) / h).ceil().max(1.0) as usize;
                    let width = (length - first) / count as f64;
                    for p in 1..=count {
                        cuts.push(first + p as f64 * width);
                    }
                }
                cuts
            };
            // panels in s = √|x − edge| so the square-root behaviour is smooth
            let side = |length: f64, sign: f64, nodes: &mut Vec<Node>| {
                let cuts = distance_cuts(length);
                let mut side_nodes = Vec::with_capacity(cuts.len() * PANEL_ORDER);
                for w in cuts.windows(2) {
                    let (s1, s2) = (w[0].sqrt(), w[1].sqrt());
                    let mid = 0.5 * (s1 + s2);
                    let half = 0.5 * (s2 - s1);
                    for (gx, gw) in gl_x.iter().zip(&gl_w) {
                        let s = mid + half * gx;
                        side_nodes.push(Node {
                            x: edge + sign * s * s,
                            weight: 2.0 * s * half * gw,
                        });
                    }
                }
                if sign < 0.0 {
                    side_nodes.reverse();
                }
                nodes.extend(side_nodes);
            };
            side(edge - lo, -1.0, &mut nodes);
            side(hi - edge, 1.0, &mut nodes);
        }
    }
    nodes
}

/// Inverts `image` onto the uniform time grid.
///
/// Deterministic: node placement and summation order depend only on the
/// spec, the image and the grid, never on thread scheduling.
pub fn invert_contour<G: LaplaceImage>(
    image: &G,
    spec: &ContourSpec,
    grid: &TimeGrid,
) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let center = image.center();
    let eps = spec.offset;
    let subtract = spec.asymptote_subtraction;
    let nodes = build_nodes(spec, center, image.branch_point());

    let remainder = |x: f64| -> Result<Complex64> {
        let z = Complex64::new(x, eps);
        let g = image.eval(z).map_err(|e| Error::Node {
            x,
            source: Box::new(e),
        })?;
        Ok(if subtract { g - image.reference(z) } else { g })
    };

    let weighted: Vec<Complex64> = nodes
        .par_iter()
        .map(|n| remainder(n.x).map(|r| r * n.weight))
        .collect::<Result<_>>()?;

    // remainder beyond the window modelled as c2/u² + c3/u³, u = x − x_c
    let (tail_even, tail_odd) = if subtract {
        let w = spec.window_halfwidth;
        let (right, left) = (remainder(center + w)?, remainder(center - w)?);
        (
            0.5 * w * w * (right + left),
            0.5 * w * w * w * (right - left),
        )
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    };

    let n_blocks = grid.len().div_ceil(TIME_BLOCK);
    let dt = grid.dt();
    let blocks: Vec<Vec<Complex64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let k0 = b * TIME_BLOCK;
            let k1 = (k0 + TIME_BLOCK).min(grid.len());
            let t0 = grid.at(k0);
            let mut acc = vec![Complex64::new(0.0, 0.0); k1 - k0];
            for (node, &wr) in nodes.iter().zip(&weighted) {
                let step = Complex64::from_polar(1.0, -node.x * dt);
                let mut term = wr * Complex64::from_polar(1.0, -node.x * t0);
                for a in acc.iter_mut() {
                    *a += term;
                    term *= step;
                }
            }
            acc
        })
        .collect();

    let prefactor = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let w = spec.window_halfwidth;
    let mut out = Vec::with_capacity(grid.len());
    for (k, sum) in blocks.into_iter().flatten().enumerate() {
        let t = grid.at(k);
        let tail = if subtract {
            // ∫_W^∞ cos(ut)/u² du and ∫_W^∞ sin(ut)/u³ du
            let cos2 = (w * t).cos() / w - t * (0.5 * PI - sine_integral(w * t));
            let sin3 = (w * t).sin() / (2.0 * w * w) + 0.5 * t * cos2;
            let model = tail_even * 2.0 * cos2 - Complex64::new(0.0, 2.0) * tail_odd * sin3;
            model * Complex64::from_polar(1.0, -center * t)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let mut u = prefactor * (eps * t).exp() * (sum + tail);
        if subtract {
            u += image.reference_inverse(t);
        }
        if !(u.re.is_finite() && u.im.is_finite()) {
            return Err(Error::Numerical(format!("non-finite inverse at t = {t}")));
        }
        out.push(u);
    }
    Ok(out)
}
