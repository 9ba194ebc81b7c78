use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{Termination, TrajectoryRecord};
use crate::error::{Error, Result};

/// Bins `k = 0 .. PHOTON_BINS − 2` individually, the last bin collects
/// `k ≥ PHOTON_BINS − 1`.
pub const PHOTON_BINS: usize = 16;
const MIN_EXPECTED: f64 = 5.0;

/// Photon-count statistics against the geometric law `(1 − P)^k P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonStatistics {
    pub n_traj: usize,
    /// Full empirical histogram, `histogram[k]` trajectories with `k` jumps.
    pub histogram: Vec<u64>,
    pub mean: f64,
    pub mean_stderr: f64,
    pub p_inf: f64,
    /// `P(∞)⁻¹ − 1`.
    pub expected_mean: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Fraction of trajectories stopped by the horizon rather than trapped.
    pub unterminated_fraction: f64,
    pub warnings: Vec<String>,
}

pub fn photon_statistics(records: &[TrajectoryRecord], p_inf: f64) -> Result<PhotonStatistics> {
    if records.is_empty() {
        return Err(Error::Input(
            "photon statistics need at least one trajectory".into(),
        ));
    }
    if !(p_inf > 0.0 && p_inf <= 1.0) {
        return Err(Error::domain(format!(
            "P(∞) must lie in (0, 1], got {p_inf}"
        )));
    }
    let n = records.len();
    let count = n as f64;
    let max_k = records.iter().map(|r| r.photon_count()).max().unwrap_or(0);
    let mut histogram = vec![0u64; max_k + 1];
    for r in records {
        histogram[r.photon_count()] += 1;
    }

    let mean = records.iter().map(|r| r.photon_count() as f64).sum::<f64>() / count;
    let var = if n > 1 {
        records
            .iter()
            .map(|r| (r.photon_count() as f64 - mean).powi(2))
            .sum::<f64>()
            / (count - 1.0)
    } else {
        0.0
    };

    let q = 1.0 - p_inf;
    let mut observed = [0u64; PHOTON_BINS];
    for (k, &h) in histogram.iter().enumerate() {
        observed[k.min(PHOTON_BINS - 1)] += h;
    }
    let expected: Vec<f64> = (0..PHOTON_BINS)
        .map(|k| {
            if k + 1 < PHOTON_BINS {
                count * q.powi(k as i32) * p_inf
            } else {
                count * q.powi(k as i32)
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let mut chi_square = 0.0;
    let mut used = 0usize;
    let mut impossible = false;
    for (o, e) in observed.iter().zip(&expected) {
        if *e > 0.0 {
            chi_square += (*o as f64 - e).powi(2) / e;
            used += 1;
        } else if *o > 0 {
            impossible = true;
        }
    }
    if expected.iter().any(|&e| e > 0.0 && e < MIN_EXPECTED) {
        warnings.push(format!(
            "some bins expect fewer than {MIN_EXPECTED} counts; the chi-square p-value is approximate"
        ));
    }
    let dof = used.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .sf(chi_square)
    };

    let unterminated = records
        .iter()
        .filter(|r| r.terminated_by == Termination::Horizon)
        .count();
    let unterminated_fraction = unterminated as f64 / count;
    if unterminated > 0 {
        warnings.push(format!(
            "{unterminated} of {n} trajectories reached the horizon before being trapped"
        ));
    }
    let trapped = n - unterminated;
    if trapped < 100 {
        warnings.push(format!(
            "only {trapped} trapped trajectories; low statistical power"
        ));
    }

    Ok(PhotonStatistics {
        n_traj: n,
        histogram,
        mean,
        mean_stderr: (var / count).sqrt(),
        p_inf,
        expected_mean: 1.0 / p_inf - 1.0,
        chi_square,
        dof,
        p_value,
        unterminated_fraction,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(counts: &[usize]) -> Vec<TrajectoryRecord> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &k)| TrajectoryRecord {
                seed: i as u64,
                jump_times: (1..=k).map(|j| j as f64).collect(),
                terminated_by: Termination::Trapped,
            })
            .collect()
    }

    #[test]
    fn mean_photon_number_formula() {
        let s = photon_statistics(&records(&[4]), 0.2).unwrap();
        assert!((s.expected_mean - 4.0).abs() < 1e-12);
    }

    #[test]
    fn everything_trapped_at_once() {
        let s = photon_statistics(&records(&[0; 200]), 1.0).unwrap();
        assert_eq!(s.histogram, vec![200]);
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.p_value, 1.0);
        let s = photon_statistics(&records(&[0, 1]), 1.0).unwrap();
        assert_eq!(s.p_value, 0.0);
    }

    #[test]
    fn exact_geometric_counts_fit_perfectly() {
        // 2^16 trajectories with P = 1/2: bin k holds 2^{15−k}, tail 1
        let mut counts = Vec::new();
        for k in 0..16usize {
            let m = if k < 15 { 1usize << (15 - k) } else { 2 };
            counts.extend(std::iter::repeat_n(k, m));
        }
        let s = photon_statistics(&records(&counts), 0.5).unwrap();
        assert!(s.chi_square < 1e-9, "{}", s.chi_square);
        assert!(s.p_value > 0.999);
        assert_eq!(s.dof, PHOTON_BINS - 1);
    }

    #[test]
    fn skewed_counts_are_rejected_by_the_fit() {
        let s = photon_statistics(&records(&[3; 1000]), 0.2).unwrap();
        assert!(s.p_value < 1e-6);
    }

    #[test]
    fn small_samples_warn() {
        let s = photon_statistics(&records(&[0, 1, 2]), 0.2).unwrap();
        assert!(!s.warnings.is_empty());
    }
}
