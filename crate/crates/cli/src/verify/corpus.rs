//! Documented test corpora: step functions with dyadic breakpoints for the
//! isometry/inequality batteries and general integrands for the norm
//! equivalence study.

use penalise_core::funcspace::StepFunction;
use penalise_core::numerics::Integrand1D;

fn step(pairs: &[(f64, f64)]) -> StepFunction {
    StepFunction::new(pairs.to_vec()).expect("corpus step functions are valid")
}

/// Five step functions on [0, 4) with dyadic breakpoints (exact on every
/// default grid).
pub fn bm_corpus() -> Vec<(String, StepFunction)> {
    vec![
        ("unit_indicator".into(), step(&[(1.0, 1.0)])),
        ("two_level".into(), step(&[(0.5, 1.0), (2.0, -2.0)])),
        ("three_level".into(), step(&[(0.5, 0.5), (1.0, 1.5), (3.0, -1.0)])),
        ("tall_narrow".into(), step(&[(0.25, 3.0)])),
        ("offset_cell".into(), step(&[(2.0, 0.0), (2.5, 3.0)])),
    ]
}

/// Bridge-projection corpus: (name, f, bridge length u).
pub fn bridge_corpus() -> Vec<(String, StepFunction, f64)> {
    vec![
        ("half_indicator_u1".into(), step(&[(0.5, 1.0)]), 1.0),
        ("two_cell_u1".into(), step(&[(0.25, 1.0), (0.75, -1.0)]), 1.0),
        ("constant_u1".into(), step(&[(1.0, 2.0)]), 1.0),
        ("unit_indicator_u2".into(), step(&[(1.0, 1.0)]), 2.0),
    ]
}

/// Integrand corpus for the norm-equivalence study: everything here has a
/// finite L1(ds/(1+sqrt s)) norm. Names double as report labels.
pub fn norm_corpus() -> Vec<(String, Integrand1D)> {
    let mut fs: Vec<(String, Integrand1D)> = Vec::new();
    let mut push = |name: &str, f: Integrand1D| fs.push((name.into(), f));

    push("ind_0_1", Integrand1D::with_support(|_| 1.0, 0.0, 1.0));
    push("ind_0_quarter", Integrand1D::with_support(|_| 1.0, 0.0, 0.25));
    push("ind_1_2", Integrand1D::with_support(|_| 1.0, 1.0, 2.0));
    push("ind_2_8", Integrand1D::with_support(|_| 1.0, 2.0, 8.0));
    push("ind_0_16", Integrand1D::with_support(|_| 1.0, 0.0, 16.0));
    push("half_ind_band", Integrand1D::with_support(|_| 0.5, 0.5, 3.0));
    push(
        "inv_fourth_root",
        Integrand1D::with_support(|s: f64| s.powf(-0.25), 0.0, 1.0),
    );
    push(
        "inv_three_quarter_root",
        Integrand1D::with_support(|s: f64| s.powf(-0.75), 0.0, 1.0),
    );
    push("sqrt_ramp", Integrand1D::with_support(|s: f64| s.sqrt(), 0.0, 1.0));
    push("linear_ramp", Integrand1D::with_support(|s: f64| s, 0.0, 2.0));
    push(
        "inv_square_tail",
        Integrand1D::new(|s: f64| if s >= 1.0 { s.powi(-2) } else { 0.0 }),
    );
    push(
        "inv_cube_tail",
        Integrand1D::new(|s: f64| if s >= 1.0 { s.powi(-3) } else { 0.0 }),
    );
    push(
        "inv_linear_tail",
        Integrand1D::new(|s: f64| if s >= 1.0 { 1.0 / s } else { 0.0 }),
    );
    push("exp_decay", Integrand1D::new(|s: f64| (-s).exp()));
    push("slow_exp_decay", Integrand1D::new(|s: f64| (-s / 4.0).exp()));
    push("gamma_two_density", Integrand1D::new(|s: f64| s * (-s).exp()));
    push("gaussian_decay", Integrand1D::new(|s: f64| (-s * s).exp()));
    push("stretched_exp", Integrand1D::new(|s: f64| (-s.sqrt()).exp()));
    push(
        "truncated_log_edge",
        Integrand1D::with_support(|s: f64| 1.0 / (s.sqrt() * s.ln()), 2.0, 100.0),
    );
    push("cosine_damped", Integrand1D::new(|s: f64| s.cos() * (-s).exp()));
    push("cauchy_tail", Integrand1D::new(|s: f64| 1.0 / (1.0 + s * s)));
    push(
        "log_times_exp",
        Integrand1D::new(|s: f64| (1.0 + s).ln() * (-s).exp()),
    );

    fs
}

/// The non-integrability counterexample: square integrable, but its
/// ds/sqrt(s) integral diverges (log-slow).
pub fn counterexample_integrand() -> Integrand1D {
    Integrand1D::new(|s: f64| if s > 2.0 { 1.0 / (s.sqrt() * s.ln()) } else { 0.0 })
}
