//! Quantum-jump trajectories sampled from the no-jump norm.
//!
//! Every jump resets the atom to `|a⟩`, so all inter-jump segments follow
//! the same no-jump solution and a waiting time is one inverse-transform
//! draw `P(τ) = ε`.
//!
//! Trajectory `i` of an ensemble uses a ChaCha8 stream seeded with
//! `splitmix64(master_seed + i·φ)`, `φ = 0x9E37_79B9_7F4A_7C15`.

mod photons;
mod sampler;

pub use photons::{photon_statistics, PhotonStatistics, PHOTON_BINS};
pub use sampler::{build_delay_sampler, Delay, DelaySampler};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::inversion::NoJumpSolution;

/// Trajectories per parallel work unit; partial sums are combined in
/// chunk order.
const CHUNK: usize = 64;
/// Guard against endless jumping when nothing is ever trapped.
pub const MAX_JUMPS: usize = 10_000_000;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` within an ensemble.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(index.wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Horizon,
    Trapped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jump_times: Vec<f64>,
    pub terminated_by: Termination,
}

impl TrajectoryRecord {
    pub fn photon_count(&self) -> usize {
        self.jump_times.len()
    }
}

/// Draws jumps until the horizon is passed or a draw falls below `P(∞)`.
/// The horizon may be infinite.
pub fn sample_jumps(sampler: &DelaySampler, horizon: f64, seed: u64) -> Result<TrajectoryRecord> {
    if horizon.is_nan() || horizon < 0.0 {
        return Err(Error::domain(format!(
            "trajectory horizon must be >= 0, got {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut now = 0.0;
    let mut jump_times = Vec::new();
    loop {
        let eps: f64 = rng.sample(Open01);
        match sampler.sample(eps) {
            Delay::Never => {
                return Ok(TrajectoryRecord {
                    seed,
                    jump_times,
                    terminated_by: Termination::Trapped,
                })
            }
            Delay::At(delay) => {
                now += delay;
                if now > horizon {
                    return Ok(TrajectoryRecord {
                        seed,
                        jump_times,
                        terminated_by: Termination::Horizon,
                    });
                }
                jump_times.push(now);
                if jump_times.len() >= MAX_JUMPS {
                    return Err(Error::Numerical(format!(
                        "trajectory exceeded {MAX_JUMPS} jumps; use a finite horizon"
                    )));
                }
            }
        }
    }
}

/// Normalised no-jump populations `π⁰_i/P`, used between jumps.
struct Conditional {
    dt: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Conditional {
    fn new(nojump: &NoJumpSolution) -> Self {
        let mut a = Vec::with_capacity(nojump.norm.len());
        let mut b = Vec::with_capacity(nojump.norm.len());
        let (mut last_a, mut last_b) = (1.0, 0.0);
        for k in 0..nojump.norm.len() {
            let p = nojump.norm[k];
            if p > 1e-300 {
                last_a = nojump.pi_a[k] / p;
                last_b = nojump.pi_b[k] / p;
            }
            a.push(last_a);
            b.push(last_b);
        }
        Conditional {
            dt: nojump.grid.dt(),
            a,
            b,
        }
    }

    /// `(π_a, π_b)` a time `tau` after the latest jump. Past the end of the
    /// grid the last values are held.
    fn at(&self, tau: f64) -> (f64, f64) {
        let x = tau / self.dt;
        let j = x.floor() as usize;
        if j + 1 >= self.a.len() {
            return (self.a[self.a.len() - 1], self.b[self.b.len() - 1]);
        }
        let w = x - j as f64;
        (
            self.a[j] + w * (self.a[j + 1] - self.a[j]),
            self.b[j] + w * (self.b[j + 1] - self.b[j]),
        )
    }

    /// Populations on `grid` for a trajectory with the given jumps.
    fn series(&self, grid: &TimeGrid, jumps: &[f64]) -> [Vec<f64>; 3] {
        let n = grid.len();
        let mut out = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        let mut next = 0;
        let mut last = 0.0;
        for t in grid.times() {
            while next < jumps.len() && jumps[next] <= t {
                last = jumps[next];
                next += 1;
            }
            let (a, b) = self.at(t - last);
            out[0].push(a);
            out[1].push(b);
            out[2].push(1.0 - a - b);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record: TrajectoryRecord,
    pub grid: TimeGrid,
    /// `[π_a, π_b, π_c]` on `grid`.
    pub populations: [Vec<f64>; 3],
}

fn population_grid(nojump: &NoJumpSolution, horizon: f64) -> Result<TimeGrid> {
    let span = nojump.grid.span();
    if !(horizon > 0.0 && horizon <= span * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "population horizon {horizon} must lie in (0, {span}], the no-jump grid span"
        )));
    }
    TimeGrid::new(horizon, nojump.grid.dt())
}

pub fn run_trajectory(
    sampler: &DelaySampler,
    nojump: &NoJumpSolution,
    horizon: f64,
    seed: u64,
) -> Result<Trajectory> {
    let grid = population_grid(nojump, horizon)?;
    let record = sample_jumps(sampler, grid.span(), seed)?;
    let populations = Conditional::new(nojump).series(&grid, &record.jump_times);
    Ok(Trajectory {
        record,
        grid,
        populations,
    })
}

/// Ensemble means with standard errors of the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub grid: TimeGrid,
    /// `[π̄_a, π̄_b, π̄_c]`.
    pub mean: [Vec<f64>; 3],
    pub stderr: [Vec<f64>; 3],
    /// `histogram[k]` counts trajectories with `k` jumps inside the horizon.
    pub histogram: Vec<u64>,
    pub mean_photons: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub records: Vec<TrajectoryRecord>,
}

impl EnsembleStats {
    pub fn trapped_fraction(&self) -> f64 {
        let trapped = self
            .records
            .iter()
            .filter(|r| r.terminated_by == Termination::Trapped)
            .count();
        trapped as f64 / self.n_traj as f64
    }
}

struct Partial {
    sum: [Vec<f64>; 3],
    sum_sq: [Vec<f64>; 3],
    records: Vec<TrajectoryRecord>,
}

pub fn ensemble_average(
    n_traj: usize,
    master_seed: u64,
    nojump: &NoJumpSolution,
    horizon: f64,
) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(Error::domain("ensemble needs at least one trajectory"));
    }
    let grid = population_grid(nojump, horizon)?;
    let sampler = build_delay_sampler(nojump)?;
    let conditional = Conditional::new(nojump);
    // sums are taken relative to the jump-free series to avoid cancellation
    let reference = conditional.series(&grid, &[]);
    let n = grid.len();

    let chunks: Vec<Partial> = (0..n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut part = Partial {
                sum: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
                sum_sq: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
                records: Vec::with_capacity(CHUNK),
            };
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let record = sample_jumps(
                    &sampler,
                    grid.span(),
                    trajectory_seed(master_seed, i as u64),
                )?;
                let pops = conditional.series(&grid, &record.jump_times);
                for (i, (s, (q, series))) in part
                    .sum
                    .iter_mut()
                    .zip(part.sum_sq.iter_mut().zip(&pops))
                    .enumerate()
                {
                    let shift = &reference[i];
                    for k in 0..n {
                        let x = series[k] - shift[k];
                        s[k] += x;
                        q[k] += x * x;
                    }
                }
                part.records.push(record);
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;

    let mut sum = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut sum_sq = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut records = Vec::with_capacity(n_traj);
    for part in chunks {
        for i in 0..3 {
            for k in 0..n {
                sum[i][k] += part.sum[i][k];
                sum_sq[i][k] += part.sum_sq[i][k];
            }
        }
        records.extend(part.records);
    }

    let count = n_traj as f64;
    let mean: [Vec<f64>; 3] = std::array::from_fn(|i| {
        sum[i]
            .iter()
            .zip(&reference[i])
            .map(|(v, r)| r + v / count)
            .collect()
    });
    let stderr: [Vec<f64>; 3] = std::array::from_fn(|i| {
        (0..n)
            .map(|k| {
                if n_traj < 2 {
                    return 0.0;
                }
                let var = (sum_sq[i][k] - sum[i][k] * sum[i][k] / count) / (count - 1.0);
                (var.max(0.0) / count).sqrt()
            })
            .collect()
    });

    let max_k = records.iter().map(|r| r.photon_count()).max().unwrap_or(0);
    let mut histogram = vec![0u64; max_k + 1];
    for r in &records {
        histogram[r.photon_count()] += 1;
    }
    let mean_photons = records.iter().map(|r| r.photon_count() as f64).sum::<f64>() / count;

    Ok(EnsembleStats {
        grid,
        mean,
        stderr,
        histogram,
        mean_photons,
        n_traj,
        master_seed,
        records,
    })
}

/// Jump records only, for photon counting over an arbitrary horizon.
pub fn sample_records(
    sampler: &DelaySampler,
    n_traj: usize,
    master_seed: u64,
    horizon: f64,
) -> Result<Vec<TrajectoryRecord>> {
    (0..n_traj)
        .into_par_iter()
        .map(|i| sample_jumps(sampler, horizon, trajectory_seed(master_seed, i as u64)))
        .collect()
}
