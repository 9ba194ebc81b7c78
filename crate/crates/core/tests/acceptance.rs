//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use lambda_pbg::config::parse_config;
use lambda_pbg::inversion::{discretized_modes_oracle, norm_law_residual, ModeOracle};
use lambda_pbg::montecarlo::{
    build_delay_sampler, ensemble_average, photon_statistics, sample_records,
};
use lambda_pbg::renewal::{renewal_residual, solve_renewal};
use lambda_pbg::scenario::run_scenario;
use lambda_pbg::spectral::BandModel;
use lambda_pbg::steadystate::{
    detuning_scan, free_space_branching, p_infinity_from_inversion, p_infinity_mode_integral,
    Branching,
};
use lambda_pbg::{nojump_populations, ContourSpec, Result, SystemParams};

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

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn trapped_population() -> Outcome {
    let sol = nojump_populations(
        &reference(),
        &reference().band_edge(),
        &ContourSpec::default(),
        30.0,
        0.01,
    )?;
    let (a, b) = (*sol.pi_a.last().unwrap(), *sol.pi_b.last().unwrap());
    let p = sol.p_inf_estimate;
    let ok = (0.15..=0.25).contains(&p) && a < 1e-2 && b < 1e-2;
    Ok((
        ok,
        format!("P(30) = {p:.5}, pi0_a(30) = {a:.2e}, pi0_b(30) = {b:.2e}"),
    ))
}

fn cross_method() -> Outcome {
    let spec = ContourSpec {
        grid_points: 1 << 15,
        ..ContourSpec::default()
    };
    let mut worst: f64 = 0.0;
    for v in [0.5, 1.0, 1.5, 2.0, 3.0] {
        for delta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let p = SystemParams {
                laser_coupling: v,
                omega_l: delta,
                ..reference()
            };
            let modes = p_infinity_mode_integral(&p)?;
            let inversion = p_infinity_from_inversion(&p, &p.band_edge(), &spec, 60.0, 0.02)?;
            worst = worst.max((modes - inversion).abs());
        }
    }
    Ok((
        worst < 1e-3,
        format!("max |mode integral - P(60)| = {worst:.2e} over 5x5 (V, delta)"),
    ))
}

fn oracle_equivalence() -> Outcome {
    let p = reference();
    let (horizon, dt) = (10.0, 0.01);
    let inv = nojump_populations(&p, &p.band_edge(), &ContourSpec::default(), horizon, dt)?;
    let run = |m| discretized_modes_oracle(&p, &ModeOracle::new(m, 100.0), horizon, dt);
    let main = sup(&inv.pi_b, &run(2000)?.pi_b);
    let ladder = [run(100)?, run(200)?, run(400)?];
    let d1 = sup(&ladder[0].pi_b, &ladder[1].pi_b);
    let d2 = sup(&ladder[1].pi_b, &ladder[2].pi_b);
    let ok = main < 1e-2 && d2 < d1;
    Ok((
        ok,
        format!("sup |pi0_b| difference at M = 2000: {main:.2e}; M 100->200: {d1:.2e}, 200->400: {d2:.2e}"),
    ))
}

fn norm_law() -> Outcome {
    let sol = nojump_populations(
        &reference(),
        &reference().band_edge(),
        &ContourSpec::default(),
        30.0,
        0.01,
    )?;
    let r = norm_law_residual(&sol, 1.0);
    Ok((r < 1e-4, format!("max |dP/dt + gamma pi0_b| = {r:.2e}")))
}

fn renewal_vs_monte_carlo() -> Outcome {
    let nj = nojump_populations(
        &reference(),
        &reference().band_edge(),
        &ContourSpec::default(),
        20.0,
        0.02,
    )?;
    let renewal = solve_renewal(&nj, 1.0)?;
    let residual = renewal_residual(&nj, 1.0, &renewal);
    let mc = ensemble_average(10_000, 2024, &nj, nj.grid.span())?;
    let exact = [&renewal.pibar_a, &renewal.pibar_b, &renewal.pibar_c];
    let (mut inside, mut total) = (0usize, 0usize);
    for (i, target) in exact.iter().enumerate() {
        for k in 0..mc.grid.len() {
            let diff = (mc.mean[i][k] - target[k]).abs();
            total += 1;
            if diff <= 3.0 * mc.stderr[i][k] || diff < 1e-12 {
                inside += 1;
            }
        }
    }
    let fraction = inside as f64 / total as f64;
    let ok = fraction >= 0.99 && residual < 1e-6;
    Ok((
        ok,
        format!(
            "{:.2}% of points within 3 SE, renewal residual {residual:.2e}",
            100.0 * fraction
        ),
    ))
}

fn photon_counts() -> Outcome {
    let nj = nojump_populations(
        &reference(),
        &reference().band_edge(),
        &ContourSpec::default(),
        30.0,
        0.01,
    )?;
    let sampler = build_delay_sampler(&nj)?;
    let records = sample_records(&sampler, 10_000, 7, f64::INFINITY)?;
    let p_inf = p_infinity_mode_integral(&reference())?;
    let s = photon_statistics(&records, p_inf)?;
    let ok = s.p_value > 0.01 && (s.mean - s.expected_mean).abs() < 3.0 * s.mean_stderr;
    Ok((
        ok,
        format!(
            "chi-square p = {:.3}, mean {:.4} ± {:.4} vs {:.4}",
            s.p_value, s.mean, s.mean_stderr, s.expected_mean
        ),
    ))
}

fn branching() -> Outcome {
    let mut worst: f64 = 0.0;
    for gamma_prime in [0.0, 0.5, 1.0, 2.0] {
        for v in [0.5, 1.0, 3.0] {
            let b = Branching {
                gamma: 1.0,
                gamma_prime,
                laser_coupling: v,
                omega_l: 0.0,
                omega_b: 0.0,
            };
            let got = free_space_branching(&b, &ContourSpec::default(), 30.0, 0.01)?;
            worst = worst.max((got - b.expected()).abs());
        }
    }
    Ok((
        worst < 1e-3,
        format!("max |P(T) - gamma'/(gamma + gamma')| = {worst:.2e}"),
    ))
}

fn detuning_phenomenology() -> Outcome {
    let p = SystemParams {
        pbg_coupling: 1.0,
        ..reference()
    };
    let deltas: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
    let scans = detuning_scan(&p, &deltas, &[0.5, 3.0])?;
    let (weak, strong) = (&scans[0], &scans[1]);
    let spread = sup(&weak.p_inf, &strong.p_inf);
    let weak_range = weak.p_inf.iter().fold(0.0f64, |m, x| m.max(*x))
        - weak.p_inf.iter().fold(1.0f64, |m, x| m.min(*x));
    let strong_range = strong.p_inf.iter().fold(0.0f64, |m, x| m.max(*x))
        - strong.p_inf.iter().fold(1.0f64, |m, x| m.min(*x));
    let ok = weak.contrast() >= 3.0
        && 3.0 * strong.max_step() <= weak.max_step()
        && weak_range > 1e-3
        && strong_range > 1e-3
        && spread > 1e-3;
    Ok((
        ok,
        format!(
            "V = 0.5 contrast {:.2}, max step {:.4}; V = 3 max step {:.4}; max |dP| between drives {spread:.3}",
            weak.contrast(),
            weak.max_step(),
            strong.max_step()
        ),
    ))
}

fn band_geometry() -> Outcome {
    let band = BandModel::new(1.0, 1.082, 1.0)?;
    let width = band.gap_width() / band.gap_center();
    let edge = band.upper_edge() / band.gap_center();
    let ok = format!("{width:.3}") == "0.050" && format!("{edge:.3}") == "1.025";
    Ok((
        ok,
        format!("gap width / omega_0 = {width:.5}, omega_e / omega_0 = {edge:.5}"),
    ))
}

fn determinism() -> Outcome {
    let cfg = parse_config(
        "scenario = montecarlo\nn_traj = 2000\nhorizon = 20\nseed = 99\ngrid_points = 32768\n",
    )?;
    let first = run_scenario(&cfg)?;
    let second = run_scenario(&cfg)?;
    Ok((
        first == second,
        format!("{} bytes, identical = {}", first.len(), first == second),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("trapped population", trapped_population),
        ("cross-method P(inf)", cross_method),
        ("oracle equivalence", oracle_equivalence),
        ("norm law", norm_law),
        ("renewal vs Monte Carlo", renewal_vs_monte_carlo),
        ("photon statistics", photon_counts),
        ("free-space branching", branching),
        ("detuning phenomenology", detuning_phenomenology),
        ("band geometry", band_geometry),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:>2} {name}: {detail} ({:.1} s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
