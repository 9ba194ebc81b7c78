//! Scenario orchestration and deterministic output.
//!
//! Every output starts with the resolved configuration as `# key = value`
//! lines, followed by `#! name = value` result lines, then the column names
//! (CSV) and the data rows. In `jsonl` format each data row is one JSON
//! object; the `#` lines are kept so a run is self-describing either way.

use std::fmt::Write as _;

use serde_json::json;

use crate::config::{Format, ReservoirChoice, RunConfig, Scenario};
use crate::error::{Error, Result};
use crate::inversion::{
    discretized_modes_oracle, nojump_populations, norm_law_residual, ModeOracle,
};
use crate::montecarlo::{build_delay_sampler, ensemble_average, photon_statistics, sample_records};
use crate::renewal::{renewal_residual, renewal_transform_check, solve_renewal};
use crate::steadystate::{
    detuning_scan, free_space_branching, p_infinity_mode_integral, Branching,
};

/// Column names and rows of one scenario, plus result lines.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
    results: Vec<(String, String)>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            results: Vec::new(),
        }
    }

    fn result(&mut self, name: &str, value: impl ToString) {
        self.results.push((name.to_string(), value.to_string()));
    }
}

/// Runs the configured scenario and returns the bytes to emit.
pub fn run_scenario(cfg: &RunConfig) -> Result<Vec<u8>> {
    let table = match cfg.scenario {
        Scenario::NoJump => nojump(cfg)?,
        Scenario::Ensemble => ensemble(cfg)?,
        Scenario::MonteCarlo => montecarlo(cfg)?,
        Scenario::Scan => scan(cfg)?,
        Scenario::Oracle => oracle(cfg)?,
        Scenario::Branching => branching(cfg)?,
    };
    Ok(render(cfg, &table).into_bytes())
}

fn render(cfg: &RunConfig, table: &Table) -> String {
    let mut out = String::new();
    for line in cfg.to_config_text().lines() {
        let _ = writeln!(out, "# {line}");
    }
    for (name, value) in &table.results {
        let _ = writeln!(out, "#! {name} = {value}");
    }
    match cfg.format {
        Format::Csv => {
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        Format::Jsonl => {
            for row in &table.rows {
                let cells: Vec<String> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| format!("\"{c}\":{}", json!(v)))
                    .collect();
                let _ = writeln!(out, "{{{}}}", cells.join(","));
            }
        }
    }
    out
}

/// Header-only view of an output: the configuration lines with their `# `
/// prefix removed.
pub fn config_header(output: &str) -> String {
    output
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn nojump(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params()?;
    let sol = nojump_populations(
        &p,
        &cfg.reservoir_kind()?,
        &cfg.contour,
        cfg.horizon,
        cfg.dt,
    )?;
    let mut t = Table::new(vec!["t", "pi0_a", "pi0_b", "pi0_c", "P"]);
    t.result("P_T", sol.p_inf_estimate);
    t.result("norm_law_residual", norm_law_residual(&sol, p.gamma));
    t.rows = sol
        .rows()
        .map(|r| vec![r.t, r.pi0_a, r.pi0_b, r.pi0_c, r.norm])
        .collect();
    Ok(t)
}

fn ensemble(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params()?;
    let nj = nojump_populations(
        &p,
        &cfg.reservoir_kind()?,
        &cfg.contour,
        cfg.horizon,
        cfg.dt,
    )?;
    let march = solve_renewal(&nj, p.gamma)?;
    let transform = renewal_transform_check(&nj, p.gamma)?;
    let mut t = Table::new(vec![
        "t",
        "pibar_a",
        "pibar_b",
        "pibar_c",
        "transform_a",
        "transform_b",
        "transform_c",
    ]);
    let diff = (0..nj.grid.len())
        .map(|k| (march.pibar_b[k] - transform.pibar_b[k]).abs())
        .fold(0.0, f64::max);
    t.result("renewal_residual", renewal_residual(&nj, p.gamma, &march));
    t.result("trace_defect", march.trace_defect());
    t.result("max_method_difference", diff);
    t.rows = nj
        .grid
        .times()
        .enumerate()
        .map(|(k, time)| {
            vec![
                time,
                march.pibar_a[k],
                march.pibar_b[k],
                march.pibar_c[k],
                transform.pibar_a[k],
                transform.pibar_b[k],
                transform.pibar_c[k],
            ]
        })
        .collect();
    Ok(t)
}

fn trapped_population(cfg: &RunConfig) -> Result<f64> {
    match cfg.reservoir {
        ReservoirChoice::BandEdge => p_infinity_mode_integral(&cfg.params()?),
        ReservoirChoice::Flat => {
            let total = cfg.gamma + cfg.gamma_prime;
            Ok(if total > 0.0 {
                cfg.gamma_prime / total
            } else {
                1.0
            })
        }
    }
}

fn montecarlo(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.params()?;
    let nj = nojump_populations(
        &p,
        &cfg.reservoir_kind()?,
        &cfg.contour,
        cfg.horizon,
        cfg.dt,
    )?;
    let stats = ensemble_average(cfg.n_traj, cfg.seed, &nj, cfg.trajectory_horizon)?;

    let sampler = build_delay_sampler(&nj)?;
    if cfg.photon_horizon.is_infinite() && sampler.p_inf() <= 0.0 {
        return Err(Error::domain(
            "nothing is trapped, so photon counting needs a finite photon_horizon",
        ));
    }
    let p_inf = trapped_population(cfg)?;
    let photons = if p_inf > 0.0 {
        let records = sample_records(&sampler, cfg.n_traj, cfg.seed, cfg.photon_horizon)?;
        Some(photon_statistics(&records, p_inf)?)
    } else {
        None
    };

    let summary = json!({
        "n_traj": stats.n_traj,
        "master_seed": stats.master_seed,
        "trajectory_horizon": stats.grid.span(),
        "mean_photons_in_window": stats.mean_photons,
        "histogram_in_window": stats.histogram,
        "trapped_fraction_in_window": stats.trapped_fraction(),
        "photon_statistics": photons,
    });

    let mut t = Table::new(vec![
        "t", "mean_a", "mean_b", "mean_c", "se_a", "se_b", "se_c",
    ]);
    t.result("summary", summary);
    t.rows = stats
        .grid
        .times()
        .enumerate()
        .map(|(k, time)| {
            let mut row = vec![time];
            row.extend(stats.mean.iter().map(|m| m[k]));
            row.extend(stats.stderr.iter().map(|s| s[k]));
            row
        })
        .collect();
    Ok(t)
}

fn scan(cfg: &RunConfig) -> Result<Table> {
    let scans = detuning_scan(&cfg.params()?, &cfg.scan_deltas(), &cfg.scan_couplings)?;
    let mut t = Table::new(vec!["V_ab", "delta", "P_inf", "mean_photons"]);
    for s in &scans {
        t.result(
            &format!("contrast[V_ab={}]", s.laser_coupling),
            s.contrast(),
        );
        t.result(
            &format!("max_step[V_ab={}]", s.laser_coupling),
            s.max_step(),
        );
        for i in 0..s.delta.len() {
            t.rows.push(vec![
                s.laser_coupling,
                s.delta[i],
                s.p_inf[i],
                s.mean_photons[i],
            ]);
        }
    }
    Ok(t)
}

fn oracle(cfg: &RunConfig) -> Result<Table> {
    if cfg.reservoir != ReservoirChoice::BandEdge {
        return Err(Error::domain(
            "the oracle scenario needs reservoir = band_edge",
        ));
    }
    let p = cfg.params()?;
    let inv = nojump_populations(&p, &p.band_edge(), &cfg.contour, cfg.oracle_horizon, cfg.dt)?;
    let modes = ModeOracle::new(cfg.oracle_modes, p.omega_e + cfg.oracle_bandwidth);
    let ora = discretized_modes_oracle(&p, &modes, cfg.oracle_horizon, cfg.dt)?;
    let sup = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let mut t = Table::new(vec![
        "t",
        "pi0_b_inversion",
        "pi0_b_oracle",
        "P_inversion",
        "P_oracle",
    ]);
    t.result("sup_norm_pi0_b", sup(&inv.pi_b, &ora.pi_b));
    t.result("sup_norm_P", sup(&inv.norm, &ora.norm));
    t.rows = inv
        .grid
        .times()
        .enumerate()
        .map(|(k, time)| vec![time, inv.pi_b[k], ora.pi_b[k], inv.norm[k], ora.norm[k]])
        .collect();
    Ok(t)
}

fn branching(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(vec!["gamma_prime", "V_ab", "P_T", "expected", "abs_error"]);
    let mut worst: f64 = 0.0;
    for &rate in &cfg.branching_rates {
        for &v in &cfg.branching_couplings {
            let b = Branching {
                gamma: cfg.gamma,
                gamma_prime: rate,
                laser_coupling: v,
                omega_l: cfg.omega_b + cfg.detuning,
                omega_b: cfg.omega_b,
            };
            let got = free_space_branching(&b, &cfg.contour, cfg.horizon, cfg.dt)?;
            let err = (got - b.expected()).abs();
            worst = worst.max(err);
            t.rows.push(vec![rate, v, got, b.expected(), err]);
        }
    }
    t.result("max_abs_error", worst);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn header_reparses_to_the_same_config() {
        let cfg =
            parse_config("scenario = scan\nscan_points = 5\nscan_V = 0.5\nC_pow23 = 1").unwrap();
        let out = String::from_utf8(run_scenario(&cfg).unwrap()).unwrap();
        assert_eq!(parse_config(&config_header(&out)).unwrap(), cfg);
        let columns = out.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(columns, "V_ab,delta,P_inf,mean_photons");
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 6);
    }

    #[test]
    fn jsonl_rows_are_objects() {
        let cfg =
            parse_config("scenario = scan\nscan_points = 3\nscan_V = 1\nformat = jsonl").unwrap();
        let out = String::from_utf8(run_scenario(&cfg).unwrap()).unwrap();
        let rows: Vec<serde_json::Value> = out
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0]["V_ab"], 1.0);
        assert!(rows[2]["P_inf"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn oracle_without_band_edge_coupling_is_exact() {
        let cfg = parse_config(
            "scenario = oracle\nC = 0\noracle_modes = 200\noracle_horizon = 5\ngrid_points = 16384",
        )
        .unwrap();
        let out = String::from_utf8(run_scenario(&cfg).unwrap()).unwrap();
        let sup: f64 = out
            .lines()
            .find_map(|l| l.strip_prefix("#! sup_norm_pi0_b = "))
            .unwrap()
            .parse()
            .unwrap();
        assert!(sup < 1e-8, "{sup}");
    }
}
