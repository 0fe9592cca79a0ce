//! Subcommand implementations. Each writes its outputs plus a resolved
//! configuration echo into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use penalise_core::measure::sample_tilted;
use penalise_core::numerics::TiltingConfig;
use penalise_core::paths::{last_exit, SeedSpec, Sign};
use penalise_core::wiener::{decompose_integral, partial_integrals};
use penalise_core::Estimate;

use crate::config::ResolvedConfig;
use crate::parallel::par_fold;
use crate::report::{report_csv, report_json};
use crate::verify::{convergence_table, run_suite, SuiteConfig};

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn echo_config(rc: &ResolvedConfig, dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(rc)?;
    text.push('\n');
    write_out(dir, "config.json", &text)
}

fn sign_char(s: Sign) -> i8 {
    match s {
        Sign::Plus => 1,
        Sign::Minus => -1,
    }
}

/// Draw tilted samples; write one summary row per sample and optionally the
/// first few full paths.
pub fn cmd_simulate(rc: &ResolvedConfig) -> Result<()> {
    let dir = Path::new(&rc.out_dir);
    echo_config(rc, dir)?;
    let tilt = TiltingConfig::default_exp();
    let rows = par_fold(rc.n_paths, |range| {
        let mut rows = String::new();
        let mut mean_u = Estimate::new();
        for stream in range {
            let s = sample_tilted(&tilt, rc.horizon, rc.dt, SeedSpec::new(rc.seed, stream))?;
            let g_check = last_exit(&s.full, rc.horizon);
            mean_u.push(s.u);
            writeln!(rows, "{},{},{},{}", stream, s.u, sign_char(s.sign), g_check)
                .expect("writing to string");
        }
        Ok((rows, mean_u))
    })
    .map_err(anyhow::Error::from)?;
    let mut csv = String::from("index,u,sign,g_check\n");
    let mut mean_u = Estimate::new();
    for (chunk, est) in rows {
        csv.push_str(&chunk);
        mean_u = Estimate::merge(mean_u, est);
    }
    write_out(dir, "samples.csv", &csv)?;

    if rc.dump_paths > 0 {
        let paths_dir = dir.join("paths");
        fs::create_dir_all(&paths_dir)?;
        for stream in 0..rc.dump_paths.min(rc.n_paths) {
            let s = sample_tilted(&tilt, rc.horizon, rc.dt, SeedSpec::new(rc.seed, stream))?;
            let mut csv = String::from("time,value\n");
            for (t, v) in s.full.grid().times().iter().zip(s.full.values()) {
                writeln!(csv, "{t},{v}").expect("writing to string");
            }
            write_out(&paths_dir, &format!("path_{stream:05}.csv"), &csv)?;
        }
    }
    eprintln!(
        "simulate: {} samples, mean u = {:.6} (stderr {:.6})",
        rc.n_paths,
        mean_u.mean(),
        mean_u.stderr()
    );
    Ok(())
}

/// Decompose the integral of the configured step integrand over tilted
/// samples; write per-path parts and the cumulative trajectory.
pub fn cmd_integrate(rc: &ResolvedConfig) -> Result<()> {
    let dir = Path::new(&rc.out_dir);
    echo_config(rc, dir)?;
    let f = match &rc.integrand {
        Some(f) => f.clone(),
        None => bail!("integrate needs an integrand (--integrand FILE or config key \"integrand\")"),
    };
    if f.support_end() > rc.horizon {
        bail!(
            "integrand support ends at {} beyond horizon {}",
            f.support_end(),
            rc.horizon
        );
    }
    let t_grid: Vec<f64> = match &rc.t_grid {
        Some(ts) => {
            if ts.iter().any(|&t| !(0.0..=rc.horizon).contains(&t)) {
                bail!("t_grid entries must lie in [0, horizon]");
            }
            ts.clone()
        }
        None => (0..=rc.horizon as u64).map(|k| k as f64).collect(),
    };
    let tilt = TiltingConfig::default_exp();
    let chunks = par_fold(rc.n_paths, |range| {
        let mut integrals = String::new();
        let mut trajectory = String::new();
        for stream in range {
            let s = sample_tilted(&tilt, rc.horizon, rc.dt, SeedSpec::new(rc.seed, stream))?;
            let d = decompose_integral(&f, &s)?;
            writeln!(
                integrals,
                "{},{},{},{},{}",
                stream,
                d.whole.value,
                d.j1.value,
                d.j2.value,
                d.whole.value - (d.j1.value + d.j2.value)
            )
            .expect("writing to string");
            for (t, v) in t_grid.iter().zip(partial_integrals(&f, &s, &t_grid)?) {
                writeln!(trajectory, "{},{},{}", stream, t, v.value).expect("writing to string");
            }
        }
        Ok((integrals, trajectory))
    })
    .map_err(anyhow::Error::from)?;
    let mut integrals = String::from("path,whole,j1,j2,residual\n");
    let mut trajectory = String::from("path,t,integral\n");
    for (i, t) in chunks {
        integrals.push_str(&i);
        trajectory.push_str(&t);
    }
    write_out(dir, "integrals.csv", &integrals)?;
    write_out(dir, "trajectory.csv", &trajectory)?;
    Ok(())
}

fn suite_config(rc: &ResolvedConfig) -> SuiteConfig {
    SuiteConfig {
        n_paths: rc.n_paths,
        dt: rc.dt,
        horizon: rc.horizon,
        seed: rc.seed,
        tolerance_scale: rc.tolerance_scale,
        checks: rc.checks.clone(),
        n_override: rc.n_override.clone(),
    }
}

/// Run the verification suite; returns the process exit code (0 when the
/// suite gate holds, 2 otherwise).
pub fn cmd_verify(rc: &ResolvedConfig) -> Result<i32> {
    let dir = Path::new(&rc.out_dir);
    echo_config(rc, dir)?;
    let report = run_suite(&suite_config(rc));
    write_out(dir, "report.json", &report_json(&report))?;
    write_out(dir, "report.csv", &report_csv(&report))?;
    for check in &report.checks {
        let status = match check.error {
            Some(ref e) => format!("error: {e}"),
            None => format!("{:?}", check.verdict),
        };
        eprintln!("{:<20} {:<13} {}", check.check_id, format!("[{:?}]", check.kind), status);
    }
    Ok(if report.gate_ok() { 0 } else { 2 })
}

/// Refinement table for one named check over the configured levels.
pub fn cmd_table(rc: &ResolvedConfig, check: &str) -> Result<()> {
    let dir = Path::new(&rc.out_dir);
    echo_config(rc, dir)?;
    let levels: Vec<f64> = match &rc.levels {
        Some(ls) => ls.clone(),
        None => match check {
            "limit_ratio" => vec![25.0, 100.0, 400.0],
            _ => vec![1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0],
        },
    };
    let rows = convergence_table(check, &suite_config(rc), &levels)?;
    let mut csv = String::from("level,estimate,stderr,bias_proxy\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{}", r.level, r.estimate, r.stderr, r.bias_proxy)
            .expect("writing to string");
    }
    write_out(dir, "table.csv", &csv)?;
    Ok(())
}
