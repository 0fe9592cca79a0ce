//! Report emission: `report.json` (full) and `report.csv` (flat per-quantity
//! rows). All floats print in shortest round-trip decimal form.

use std::fmt::Write as _;

use crate::verify::{SuiteReport, Target};

pub fn report_json(report: &SuiteReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn csv_field(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        String::new()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Flat rows: one per quantity, annotated with its parent check.
pub fn report_csv(report: &SuiteReport) -> String {
    let mut out = String::new();
    out.push_str(
        "check_id,kind,quantity,estimate,stderr,target_kind,target_lo,target_hi,z_score,verdict,check_verdict,n_paths,dt,horizon,seed\n",
    );
    let cfg = &report.config;
    for check in &report.checks {
        for q in &check.quantities {
            let (tk, lo, hi) = match q.target {
                Target::Equals { value } => ("equals", csv_field(value), csv_field(value)),
                Target::AtMost { bound } => ("at_most", String::new(), csv_field(bound)),
                Target::Between { lo, hi } => ("between", csv_field(lo), csv_field(hi)),
                Target::Recorded => ("recorded", String::new(), String::new()),
            };
            let z = q.z_score.map(csv_field).unwrap_or_default();
            writeln!(
                out,
                "{},{:?},{},{},{},{},{},{},{},{:?},{:?},{},{},{},{}",
                check.check_id,
                check.kind,
                q.name,
                csv_field(q.estimate),
                csv_field(q.stderr),
                tk,
                lo,
                hi,
                z,
                q.verdict,
                check.verdict,
                check.n_paths,
                csv_field(cfg.dt),
                csv_field(cfg.horizon),
                cfg.seed,
            )
            .expect("writing to string");
        }
        if let Some(err) = &check.error {
            writeln!(
                out,
                "{},{:?},error: {},,,,,,,Fail,Fail,{},{},{},{}",
                check.check_id,
                check.kind,
                err.replace(',', ";"),
                check.n_paths,
                csv_field(cfg.dt),
                csv_field(cfg.horizon),
                cfg.seed,
            )
            .expect("writing to string");
        }
    }
    out
}
