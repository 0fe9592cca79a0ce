//! Implementations of the individual suite checks and refinement tables.

use std::f64::consts::PI;

use penalise_core::funcspace::StepFunction;
use penalise_core::measure::{
    gamma_half_cdf, lambda_t, lambda_tail_quadrature, sample_last_exit, sample_tilted,
    truncation_mass, Estimate,
};
use penalise_core::numerics::{
    arcsine_kernel, integrate_singular, limit_ratio as limit_ratio_op, profile_integrand,
    Integrand1D, TiltingConfig,
};
use penalise_core::paths::{last_exit, sample_bm, sample_bridge, SeedSpec, TimeGrid};
use penalise_core::wiener::{
    bessel_integral_centered, bridge_integral, decompose_integral, holder_increment, stieltjes,
};
use penalise_core::{Error, Result};

use super::corpus::{bm_corpus, bridge_corpus, counterexample_integrand, norm_corpus};
use super::{Quantity, SuiteConfig, Target};
use crate::parallel::par_fold;

const SQRT_PI: f64 = 1.7724538509055159;

/// Grid-bias allowance for last-exit-dependent Wiener-side estimates,
/// `LAMBDA_BIAS_COEFF * sqrt(dt)`. Calibrated against the dt-halving tables
/// (`table_lambda_cross`, `table_arcsine`): the observed window-density gap
/// tracks 0.17 sqrt(dt) over dt in [2^-10, 2^-4], so this sits at twice the
/// measured coefficient.
pub(crate) const LAMBDA_BIAS_COEFF: f64 = 0.35;

/// Empirical envelope for phi-norm / L1(ds/(1+sqrt s)) ratios over the
/// documented corpus (the pointwise kernel weight ranges over roughly
/// [sqrt(pi), 4.2] for the exponential tilt).
const RATIO_LO: f64 = 1.6;
const RATIO_HI: f64 = 4.4;

fn tilt() -> TiltingConfig {
    TiltingConfig::default_exp()
}

fn merge_vec(mut acc: Vec<Estimate>, other: Vec<Estimate>) -> Vec<Estimate> {
    if acc.is_empty() {
        return other;
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a = Estimate::merge(*a, b);
    }
    acc
}

fn variance_quantity(name: String, est: &Estimate, target: f64) -> Quantity {
    Quantity::equals(name, est.variance(), est.variance_stderr(), target)
}

fn kurtosis_quantity(name: String, est: &Estimate) -> Quantity {
    let se = (24.0 / est.count() as f64).sqrt();
    Quantity::equals(name, est.excess_kurtosis(), se, 0.0)
}

pub(super) fn bm_isometry(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let corpus = bm_corpus();
    let n = cfg.n_for("bm_isometry");
    let grid = TimeGrid::uniform(4.0, cfg.dt)?;
    let chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); corpus.len()];
        for stream in range {
            let path = sample_bm(&grid, SeedSpec::new(cfg.seed, seed_base + stream));
            for ((_, f), est) in corpus.iter().zip(&mut ests) {
                est.push(stieltjes(f, &path)?.value);
            }
        }
        Ok(ests)
    })?;
    let ests = chunks.into_iter().fold(Vec::new(), merge_vec);
    let mut out = Vec::new();
    for ((name, f), est) in corpus.iter().zip(&ests) {
        out.push(variance_quantity(format!("var[{name}]"), est, f.l2_norm_sq()));
        out.push(Quantity::equals(format!("mean[{name}]"), est.mean(), est.stderr(), 0.0));
    }
    Ok(out)
}

pub(super) fn bridge_isometry(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let corpus = bridge_corpus();
    let n = cfg.n_for("bridge_isometry");
    let mut out = Vec::new();
    let mut max_residual = 0.0f64;
    for (idx, (name, f, u)) in corpus.iter().enumerate() {
        let grid = TimeGrid::uniform(*u, cfg.dt)?;
        let sub_base = seed_base + ((idx as u64) << 36);
        let chunks = par_fold(n, |range| {
            let mut est = Estimate::new();
            let mut worst = 0.0f64;
            for stream in range {
                let b = sample_bridge(*u, &grid, SeedSpec::new(cfg.seed, sub_base + stream))?;
                let integral = bridge_integral(f, &b)?;
                est.push(integral.value.value);
                worst = worst.max(integral.identity_residual.unwrap_or(0.0));
            }
            Ok((est, worst))
        })?;
        let (est, worst) = chunks
            .into_iter()
            .fold((Estimate::new(), 0.0f64), |(e, w), (e2, w2)| {
                (Estimate::merge(e, e2), w.max(w2))
            });
        max_residual = max_residual.max(worst);
        let projected = f.truncate(*u)?.project_bridge(*u)?;
        out.push(variance_quantity(format!("var[{name}]"), &est, projected.l2_norm_sq()));
        if !projected.is_zero() {
            out.push(kurtosis_quantity(format!("kurtosis[{name}]"), &est));
        }
    }
    out.push(Quantity::at_most(
        "max_projection_replay_residual",
        max_residual,
        0.0,
        1e-10 * cfg.tolerance_scale,
    ));
    Ok(out)
}

pub(super) fn bessel_moments(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let n = cfg.n_for("bessel_moments");
    let grid = TimeGrid::uniform(4.0, cfg.dt)?;
    let chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); 5];
        for stream in range {
            let p = penalise_core::paths::sample_bessel3(
                &grid,
                SeedSpec::new(cfg.seed, seed_base + stream),
            );
            let x1 = p.value_at(1.0);
            let x4 = p.value_at(4.0);
            ests[0].push(x1);
            ests[1].push(1.0 / x1);
            ests[2].push(x1 * x1);
            ests[3].push(x4);
            ests[4].push(1.0 / x4);
        }
        Ok(ests)
    })?;
    let ests = chunks.into_iter().fold(Vec::new(), merge_vec);
    let targets = [
        ("mean[X_1]", 2.0 * (2.0 / PI).sqrt()),
        ("mean[1/X_1]", (2.0 / PI).sqrt()),
        ("mean[X_1^2]", 3.0),
        ("mean[X_4]", 2.0 * (8.0 / PI).sqrt()),
        ("mean[1/X_4]", (2.0 / (4.0 * PI)).sqrt()),
    ];
    Ok(targets
        .iter()
        .zip(&ests)
        .map(|((name, t), est)| Quantity::equals(name.to_string(), est.mean(), est.stderr(), *t))
        .collect())
}

pub(super) fn fhy_inequality(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let corpus = bm_corpus();
    let n = cfg.n_for("fhy_inequality");
    let grid = TimeGrid::uniform(4.0, cfg.dt)?;
    let chunks = par_fold(n, |range| {
        // Per function: moments of |w|, w^2, w^4 of the centered integral.
        let mut ests = vec![Estimate::new(); corpus.len() * 3];
        for stream in range {
            let p = penalise_core::paths::sample_bessel3(
                &grid,
                SeedSpec::new(cfg.seed, seed_base + stream),
            );
            for (i, (_, f)) in corpus.iter().enumerate() {
                let w = bessel_integral_centered(f, &p)?.value;
                ests[3 * i].push(w.abs());
                ests[3 * i + 1].push(w * w);
                ests[3 * i + 2].push(w * w * w * w);
            }
        }
        Ok(ests)
    })?;
    let ests = chunks.into_iter().fold(Vec::new(), merge_vec);
    let mut out = Vec::new();
    for (i, (name, f)) in corpus.iter().enumerate() {
        let sigma2 = f.l2_norm_sq();
        let sigma = sigma2.sqrt();
        let abs_est = &ests[3 * i];
        let sq_est = &ests[3 * i + 1];
        let q_est = &ests[3 * i + 2];
        out.push(Quantity::at_most(
            format!("abs_moment[{name}]"),
            abs_est.mean(),
            abs_est.stderr(),
            sigma * (2.0 / PI).sqrt(),
        ));
        out.push(Quantity::at_most(
            format!("square_moment[{name}]"),
            sq_est.mean(),
            sq_est.stderr(),
            sigma2,
        ));
        out.push(Quantity::at_most(
            format!("fourth_moment[{name}]"),
            q_est.mean(),
            q_est.stderr(),
            3.0 * sigma2 * sigma2,
        ));
        if i == 0 {
            // chi3 oracle for the unit indicator: E[(X_1 - E X_1)^2] = 3 - 8/pi.
            out.push(Quantity::equals(
                format!("square_moment_value[{name}]"),
                sq_est.mean(),
                sq_est.stderr(),
                3.0 - 8.0 / PI,
            ));
        }
    }
    Ok(out)
}

pub(super) fn bessel_centering(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let fs = [
        ("unit_indicator".to_string(), StepFunction::new(vec![(1.0, 1.0)]).unwrap()),
        (
            "two_level".to_string(),
            StepFunction::new(vec![(0.5, 1.0), (2.0, -0.5)]).unwrap(),
        ),
    ];
    let n = cfg.n_for("bessel_centering");
    let grid = TimeGrid::uniform(4.0, cfg.dt)?;
    let chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); fs.len() * 2];
        for stream in range {
            let p = penalise_core::paths::sample_bessel3(
                &grid,
                SeedSpec::new(cfg.seed, seed_base + stream),
            );
            for (i, (_, f)) in fs.iter().enumerate() {
                ests[2 * i].push(stieltjes(f, &p)?.value);
                ests[2 * i + 1].push(bessel_integral_centered(f, &p)?.value);
            }
        }
        Ok(ests)
    })?;
    let ests = chunks.into_iter().fold(Vec::new(), merge_vec);
    let mut out = Vec::new();
    for (i, (name, f)) in fs.iter().enumerate() {
        let drift = (2.0 / PI).sqrt() * f.integral_inv_sqrt();
        let raw = &ests[2 * i];
        let centered = &ests[2 * i + 1];
        out.push(Quantity::equals(format!("raw_mean[{name}]"), raw.mean(), raw.stderr(), drift));
        out.push(Quantity::equals(
            format!("centered_mean[{name}]"),
            centered.mean(),
            centered.stderr(),
            0.0,
        ));
    }
    Ok(out)
}

pub(super) fn decomposition(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    // Clipped to the configured horizon so overridden runs stay well-posed.
    let fs: Vec<(String, StepFunction)> = [
        (
            "three_level".to_string(),
            StepFunction::new(vec![(0.5, 1.0), (3.0, -0.75), (9.0, 0.3)]).unwrap(),
        ),
        ("full_window".to_string(), StepFunction::new(vec![(16.0, 1.0)]).unwrap()),
        (
            "early_mass".to_string(),
            StepFunction::new(vec![(0.25, 2.0), (1.0, -1.0)]).unwrap(),
        ),
    ]
    .into_iter()
    .map(|(name, f)| Ok((name, f.truncate(cfg.horizon)?)))
    .collect::<Result<_>>()?;
    let n = cfg.n_for("decomposition");
    let t = tilt();
    let chunks = par_fold(n, |range| {
        let mut j1 = vec![Estimate::new(); fs.len()];
        let mut j2 = vec![Estimate::new(); fs.len()];
        let mut worst = 0.0f64;
        for stream in range {
            let s = sample_tilted(&t, cfg.horizon, cfg.dt, SeedSpec::new(cfg.seed, seed_base + stream))?;
            for (i, (_, f)) in fs.iter().enumerate() {
                let d = decompose_integral(f, &s)?;
                worst = worst.max(d.residual());
                j1[i].push(d.j1.value.abs());
                j2[i].push(d.j2.value.abs());
            }
        }
        Ok((j1, j2, worst))
    })?;
    let (j1, j2, worst) = chunks.into_iter().fold(
        (Vec::new(), Vec::new(), 0.0f64),
        |(a1, a2, w), (b1, b2, w2)| (merge_vec(a1, b1), merge_vec(a2, b2), w.max(w2)),
    );
    let mut out = vec![Quantity::at_most(
        "max_split_residual",
        worst,
        0.0,
        1e-12 * cfg.tolerance_scale,
    )];
    for (i, (name, f)) in fs.iter().enumerate() {
        out.push(Quantity::at_most(
            format!("mean_abs_bridge_part[{name}]"),
            j1[i].mean(),
            j1[i].stderr(),
            f.l2_norm(),
        ));
        // Tail-part integrability is monitored, not sharply bounded: record
        // the ratio against the natural norm combination.
        let norms = f.l2_norm() + f.l1_one_plus_sqrt();
        out.push(Quantity::recorded(
            format!("tail_part_norm_ratio[{name}]"),
            j2[i].mean() / norms,
        ));
    }
    Ok(out)
}

pub(super) fn partial_integrals(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let f = StepFunction::new(vec![(1.0, 1.0), (4.0, -0.5), (10.0, 0.25)])
        .unwrap()
        .truncate(cfg.horizon)?;
    let n = cfg.n_for("partial_integrals");
    let t = tilt();
    // Deterministic pseudo-random probe times, off-grid on purpose.
    let pairs: Vec<(f64, f64)> = {
        use rand::Rng;
        let mut rng = SeedSpec::new(cfg.seed, seed_base + (1 << 39)).rng();
        (0..10)
            .map(|_| {
                let a: f64 = rng.random::<f64>() * cfg.horizon;
                let b: f64 = rng.random::<f64>() * cfg.horizon;
                (a.min(b), a.max(b))
            })
            .collect()
    };
    let chunks = par_fold(n, |range| {
        let mut worst = 0.0f64;
        let mut worst_edges = 0.0f64;
        for stream in range {
            let s = sample_tilted(&t, cfg.horizon, cfg.dt, SeedSpec::new(cfg.seed, seed_base + stream))?;
            let whole = decompose_integral(&f, &s)?.whole.value;
            for &(t1, t2) in &pairs {
                let ts = [t1, t2];
                let vals = penalise_core::wiener::partial_integrals(&f, &s, &ts)?;
                let window = f.window(t1, t2)?;
                let direct = stieltjes(&window, &s.full)?.value;
                let diff = vals[1].value - vals[0].value;
                let scale = 1.0 + direct.abs();
                worst = worst.max((diff - direct).abs() / scale);
            }
            let edges = penalise_core::wiener::partial_integrals(&f, &s, &[0.0, cfg.horizon])?;
            worst_edges = worst_edges.max(edges[0].value.abs());
            worst_edges =
                worst_edges.max((edges[1].value - whole).abs() / (1.0 + whole.abs()));
        }
        Ok((worst, worst_edges))
    })?;
    let (worst, worst_edges) = chunks
        .into_iter()
        .fold((0.0f64, 0.0f64), |(a, b), (c, d)| (a.max(c), b.max(d)));
    Ok(vec![
        Quantity::at_most("max_increment_residual", worst, 0.0, 1e-12 * cfg.tolerance_scale),
        Quantity::at_most("max_edge_residual", worst_edges, 0.0, 1e-12 * cfg.tolerance_scale),
    ])
}

pub(super) fn holder_moment(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let f = StepFunction::new(vec![(1.0, 1.0)]).unwrap();
    let n = cfg.n_for("holder_moment");
    let t = tilt();
    // One pinned pair plus deterministic pseudo-random pairs within [0, M(2)].
    let mut pairs = vec![(0.0f64, 2.0f64)];
    {
        use rand::Rng;
        let mut rng = SeedSpec::new(cfg.seed, seed_base + (1 << 39)).rng();
        for _ in 0..9 {
            let a: f64 = rng.random::<f64>() * 2.5;
            let b: f64 = rng.random::<f64>() * 2.5;
            if a == b {
                continue;
            }
            pairs.push((a.min(b), a.max(b)));
        }
    }
    // Scaled copies separate the two candidate exponents of the absolute
    // fourth-moment bound (3 ||f||^2 vs 3 ||f||^4); both are reported and the
    // moment is gated on the weaker of the two.
    let scaled = [("scale_1", f.clone()), ("scale_2", f.scale(2.0)), ("scale_half", f.scale(0.5))];
    let chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); pairs.len()];
        let mut absolute = vec![Estimate::new(); scaled.len()];
        for stream in range {
            let s = sample_tilted(&t, cfg.horizon, cfg.dt, SeedSpec::new(cfg.seed, seed_base + stream))?;
            for (i, &(v1, v2)) in pairs.iter().enumerate() {
                let inc = holder_increment(&f, v1, v2, &s)?;
                ests[i].push(inc * inc * inc * inc);
            }
            for (i, (_, g)) in scaled.iter().enumerate() {
                let m = g.time_change_m(g.support_end())?;
                let j3 = holder_increment(g, 0.0, m, &s)?;
                absolute[i].push(j3 * j3 * j3 * j3);
            }
        }
        Ok((ests, absolute))
    })?;
    let (ests, absolute) = chunks
        .into_iter()
        .fold((Vec::new(), Vec::new()), |(a, b), (c, d)| (merge_vec(a, c), merge_vec(b, d)));
    let mut out = Vec::new();
    for (i, &(v1, v2)) in pairs.iter().enumerate() {
        let bound = 3.0 * (v2 - v1) * (v2 - v1);
        out.push(Quantity::at_most(
            format!("fourth_moment[v={v1:.3}..{v2:.3}]"),
            ests[i].mean(),
            ests[i].stderr(),
            bound,
        ));
    }
    for (i, (name, g)) in scaled.iter().enumerate() {
        let sq = g.l2_norm_sq();
        out.push(Quantity::at_most(
            format!("abs_fourth_moment[{name}]"),
            absolute[i].mean(),
            absolute[i].stderr(),
            3.0 * sq.max(sq * sq),
        ));
        out.push(Quantity::recorded(format!("candidate_bound_sq[{name}]"), 3.0 * sq));
        out.push(Quantity::recorded(format!("candidate_bound_fourth[{name}]"), 3.0 * sq * sq));
    }
    // Mixed chi3 oracle for the pinned pair: the increment is the centered
    // Bessel value at (1-u)+, so E|.|^4 = kappa4 * E[((1-u)+)^2].
    let kappa4 = 15.0 + 16.0 / PI - 192.0 / (PI * PI);
    let tau_sq = integrate_singular(
        &Integrand1D::new(|u: f64| {
            let tau = 1.0 - u;
            tau * tau * (-u).exp() / (PI * u).sqrt()
        }),
        0.0,
        1.0,
        true,
        false,
    )?;
    out.push(Quantity::equals(
        "fourth_moment_value[v=0..2]",
        ests[0].mean(),
        ests[0].stderr(),
        kappa4 * tau_sq,
    ));
    Ok(out)
}

pub(super) fn tilted_marginal(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    let n = cfg.n_for("tilted_marginal");
    let t = tilt();
    let chunks = par_fold(n, |range| {
        let mut us = Vec::with_capacity((range.end - range.start) as usize);
        let mut m1 = Estimate::new();
        let mut m2 = Estimate::new();
        for stream in range {
            let u = sample_last_exit(&t, cfg.horizon, SeedSpec::new(cfg.seed, seed_base + stream))?;
            us.push(u);
            m1.push(u);
            m2.push(u * u);
        }
        Ok((us, m1, m2))
    })?;
    let mut us = Vec::with_capacity(n as usize);
    let mut m1 = Estimate::new();
    let mut m2 = Estimate::new();
    for (u, a, b) in chunks {
        us.extend(u);
        m1 = Estimate::merge(m1, a);
        m2 = Estimate::merge(m2, b);
    }
    us.sort_by(f64::total_cmp);
    let nf = us.len() as f64;
    let mut ks = 0.0f64;
    for (i, &u) in us.iter().enumerate() {
        let cdf = gamma_half_cdf(u);
        ks = ks.max(cdf - i as f64 / nf);
        ks = ks.max((i + 1) as f64 / nf - cdf);
    }
    // Asymptotic 1% Kolmogorov critical value.
    let crit = 1.628 / nf.sqrt();
    Ok(vec![
        Quantity::at_most("ks_statistic", ks, 0.0, crit),
        Quantity::equals("mean[u]", m1.mean(), m1.stderr(), 0.5),
        Quantity::equals("mean[u^2]", m2.mean(), m2.stderr(), 0.75),
    ])
}

pub(super) fn local_convergence(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    const EPSILON: f64 = 0.05;
    const L_MAX: u32 = 8;
    let support_end = 8.0f64.min(cfg.horizon);
    let f = Integrand1D::with_support(move |s: f64| (-s).exp(), 0.0, support_end);
    let approximants: Vec<StepFunction> = (2..=L_MAX)
        .map(|level| penalise_core::funcspace::approximate(&f, level))
        .collect::<Result<_>>()?;
    // Common dyadic mesh carrying every approximant's breakpoints.
    let mesh_dt = 1.0 / 256.0;
    let cells = (support_end * 256.0).round() as u64;
    let mesh: Vec<f64> = (0..=cells).map(|i| i as f64 * mesh_dt).collect();
    let levels_on_mesh: Vec<Vec<f64>> = approximants
        .iter()
        .map(|a| mesh[..mesh.len() - 1].iter().map(|&s| a.eval(s)).collect())
        .collect();
    let n = cfg.n_for("local_convergence");
    let t = tilt();
    let n_levels = approximants.len(); // levels 2..=8
    let chunks = par_fold(n, |range| {
        let mut exceed = vec![Estimate::new(); n_levels - 1];
        let mut paired = vec![Estimate::new(); n_levels - 2];
        for stream in range {
            let s = sample_tilted(&t, cfg.horizon, cfg.dt, SeedSpec::new(cfg.seed, seed_base + stream))?;
            let vals = s.full.values_on_mesh(&mesh);
            let mut integrals = vec![0.0f64; n_levels];
            for j in 0..mesh.len() - 1 {
                let dx = vals[j + 1] - vals[j];
                for (k, levels) in levels_on_mesh.iter().enumerate() {
                    integrals[k] += levels[j] * dx;
                }
            }
            let reference = integrals[n_levels - 1];
            let flags: Vec<f64> = integrals[..n_levels - 1]
                .iter()
                .map(|&v| if (v - reference).abs() >= EPSILON { 1.0 } else { 0.0 })
                .collect();
            for (k, &fl) in flags.iter().enumerate() {
                exceed[k].push(fl);
                if k + 1 < flags.len() {
                    paired[k].push(flags[k + 1] - fl);
                }
            }
        }
        Ok((exceed, paired))
    })?;
    let (exceed, paired) = chunks.into_iter().fold(
        (Vec::new(), Vec::new()),
        |(a, b), (c, d)| (merge_vec(a, c), merge_vec(b, d)),
    );
    let mut out = Vec::new();
    for (k, est) in exceed.iter().enumerate() {
        out.push(Quantity::recorded(
            format!("p_exceed[L={}]", k + 2),
            est.mean(),
        ));
    }
    for (k, est) in paired.iter().enumerate() {
        out.push(Quantity::at_most(
            format!("monotonicity[L={}->{}]", k + 2, k + 3),
            est.mean(),
            est.stderr(),
            0.0,
        ));
    }
    let last = &exceed[exceed.len() - 1];
    out.push(Quantity::at_most(
        "p_exceed_upper[L=7]",
        last.mean() + 3.0 * last.stderr(),
        0.0,
        0.01,
    ));
    Ok(out)
}

pub(super) fn lambda_cross(cfg: &SuiteConfig, seed_base: u64) -> Result<Vec<Quantity>> {
    lambda_cross_at(cfg, seed_base, cfg.dt, cfg.n_for("lambda_cross"))
        .map(|(quantities, _)| quantities)
}

type LambdaRow = (f64, f64, f64); // |difference|, combined stderr, wiener-side mean

fn lambda_cross_at(
    cfg: &SuiteConfig,
    seed_base: u64,
    dt: f64,
    n: u64,
) -> Result<(Vec<Quantity>, Vec<LambdaRow>)> {
    const T: f64 = 1.0;
    let functionals: [(&str, fn(f64) -> f64); 3] = [
        ("positive_part", |x| if x > 0.0 { 1.0 } else { 0.0 }),
        ("clipped_abs", |x| x.abs().min(1.0)),
        ("cosine", |x| x.cos()),
    ];
    let t = tilt();
    // Tilted side: F(X_T) under the concatenated law.
    let mu_chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); functionals.len()];
        for stream in range {
            let s = sample_tilted(&t, cfg.horizon, dt, SeedSpec::new(cfg.seed, seed_base + stream))?;
            let x = s.full.value_at(T);
            for ((_, f), est) in functionals.iter().zip(&mut ests) {
                est.push(f(x));
            }
        }
        Ok(ests)
    })?;
    let mu = mu_chunks.into_iter().fold(Vec::new(), merge_vec);
    // Wiener side: F(X_T) Lambda_T over plain Brownian paths.
    let grid = TimeGrid::uniform(T, dt)?;
    let w_chunks = par_fold(n, |range| {
        let mut ests = vec![Estimate::new(); functionals.len()];
        for stream in range {
            let p = sample_bm(&grid, SeedSpec::new(cfg.seed, seed_base + (1 << 38) + stream));
            let lam = lambda_t(&p, T);
            let x = p.value_at(T);
            for ((_, f), est) in functionals.iter().zip(&mut ests) {
                est.push(f(x) * lam);
            }
        }
        Ok(ests)
    })?;
    let w = w_chunks.into_iter().fold(Vec::new(), merge_vec);

    let allowance = LAMBDA_BIAS_COEFF * dt.sqrt();
    // The sigma-finite mass of phi(g): the measure weights the last-exit time
    // by du/sqrt(2 pi u) while the tilted law uses du/(c_phi sqrt(u)), so
    // expectations convert through c_phi / sqrt(2 pi) (1/sqrt(2) for the
    // exponential tilt).
    let mass = t.c_phi() / (2.0 * PI).sqrt();
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (i, (name, _)) in functionals.iter().enumerate() {
        let lhs = mass * mu[i].mean();
        let rhs = w[i].mean();
        let se = (mass * mass * mu[i].stderr() * mu[i].stderr()
            + w[i].stderr() * w[i].stderr())
        .sqrt();
        let gap = (lhs - rhs).abs();
        rows.push((gap, se, rhs));
        out.push(Quantity::at_most(
            format!("abs_continuity_gap[{name}]"),
            (gap - allowance).max(0.0),
            se,
            0.0,
        ));
    }
    out.push(Quantity::recorded("grid_bias_allowance", allowance));
    out.push(Quantity::recorded(
        "truncation_mass",
        truncation_mass(&t, cfg.horizon)?,
    ));
    Ok((out, rows))
}

pub(super) fn limit_ratio(cfg: &SuiteConfig, _seed_base: u64) -> Result<Vec<Quantity>> {
    let phi = Integrand1D::new(|u: f64| (-u).exp());
    let mut out = Vec::new();

    // Quadrature calibration: the arcsine density integrates to pi and the
    // Gamma(1/2) mass to sqrt(pi).
    let arcsine = integrate_singular(
        &Integrand1D::new(|u: f64| 1.0 / (u * (1.0 - u)).sqrt()),
        0.0,
        1.0,
        true,
        true,
    )?;
    out.push(Quantity::at_most(
        "calibration_pi_error",
        (arcsine - PI).abs() / PI,
        0.0,
        1e-8 * cfg.tolerance_scale,
    ));
    let c_phi = tilt().c_phi();
    out.push(Quantity::at_most(
        "calibration_sqrt_pi_error",
        (c_phi - SQRT_PI).abs() / SQRT_PI,
        0.0,
        1e-8 * cfg.tolerance_scale,
    ));
    // Window-density closed form against direct quadrature at five points.
    let mut worst_lambda = 0.0f64;
    for (x, t) in [(0.0, 1.0), (1.0, 1.0), (0.3, 2.0), (2.5, 0.5), (0.07, 4.0)] {
        let direct = lambda_tail_quadrature(x, t)?;
        let closed = (-t as f64).exp() * (-std::f64::consts::SQRT_2 * x).exp()
            / std::f64::consts::SQRT_2;
        worst_lambda = worst_lambda.max((direct - closed).abs() / closed);
    }
    out.push(Quantity::at_most(
        "lambda_tail_closed_form_error",
        worst_lambda,
        0.0,
        1e-8 * cfg.tolerance_scale,
    ));

    // The large-time limit itself.
    let ts = [25.0, 100.0, 400.0];
    let gaps: Vec<f64> = ts
        .iter()
        .map(|&t| Ok((limit_ratio_op(&phi, t)? - SQRT_PI).abs()))
        .collect::<Result<_>>()?;
    for (t, gap) in ts.iter().zip(&gaps) {
        out.push(Quantity::recorded(format!("limit_gap[t={t}]"), *gap));
    }
    out.push(Quantity::at_most("limit_gap_decreasing_25_100", gaps[1] - gaps[0], 0.0, 0.0));
    out.push(Quantity::at_most("limit_gap_decreasing_100_400", gaps[2] - gaps[1], 0.0, 0.0));
    out.push(Quantity::at_most("limit_gap[t=400]_bound", gaps[2], 0.0, 0.05));
    // Kernel domination by phi(0+) pi.
    let mut worst_kernel = 0.0f64;
    for s in [0.01, 0.25, 1.0, 7.0, 64.0, 400.0] {
        worst_kernel = worst_kernel.max(arcsine_kernel(&phi, s)? - PI);
    }
    out.push(Quantity::at_most("kernel_dominated_by_pi", worst_kernel, 0.0, 1e-9));
    Ok(out)
}

pub(super) fn norm_equivalence(_cfg: &SuiteConfig, _seed_base: u64) -> Result<Vec<Quantity>> {
    let t = tilt();
    let corpus = norm_corpus();
    let mut out = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (name, f) in &corpus {
        let p = profile_integrand(f, &t)?;
        if !p.l1_one_plus_sqrt_norm.is_finite() || p.l1_one_plus_sqrt_norm == 0.0 {
            return Err(Error::InvalidArgument("norm corpus must have finite nonzero norms"));
        }
        let ratio = p.phi_norm / p.l1_one_plus_sqrt_norm;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        out.push(Quantity::new(
            format!("ratio[{name}]"),
            ratio,
            0.0,
            Target::Between { lo: RATIO_LO, hi: RATIO_HI },
        ));
    }
    out.push(Quantity::recorded("empirical_ratio_min", lo));
    out.push(Quantity::recorded("empirical_ratio_max", hi));
    // Finiteness equivalence both ways on the corpus plus the counterexample.
    let p = profile_integrand(&counterexample_integrand(), &t)?;
    let equiv_holds = p.phi_norm.is_infinite() == p.l1_one_plus_sqrt_norm.is_infinite();
    out.push(Quantity::equals(
        "finiteness_equivalence_on_counterexample",
        if equiv_holds { 1.0 } else { 0.0 },
        0.0,
        1.0,
    ));
    Ok(out)
}

pub(super) fn counterexample(cfg: &SuiteConfig, _seed_base: u64) -> Result<Vec<Quantity>> {
    let t = tilt();
    let p = profile_integrand(&counterexample_integrand(), &t)?;
    let l2_sq_target = 1.0 / 2.0f64.ln();
    Ok(vec![
        Quantity::at_most(
            "l2_sq_error",
            (p.l2_norm * p.l2_norm - l2_sq_target).abs() / l2_sq_target,
            0.0,
            0.01 * cfg.tolerance_scale,
        ),
        Quantity::equals(
            "l1_sqrt_divergent",
            if p.l1_sqrt_norm.is_infinite() { 1.0 } else { 0.0 },
            0.0,
            1.0,
        ),
        Quantity::equals(
            "l1_one_plus_divergent",
            if p.l1_one_plus_sqrt_norm.is_infinite() { 1.0 } else { 0.0 },
            0.0,
            1.0,
        ),
        Quantity::equals(
            "phi_norm_divergent",
            if p.phi_norm.is_infinite() { 1.0 } else { 0.0 },
            0.0,
            1.0,
        ),
    ])
}

// ---- refinement tables ----

use super::TableRow;

pub(super) fn table_bm_isometry(cfg: &SuiteConfig, levels: &[f64]) -> Result<Vec<TableRow>> {
    let f = StepFunction::new(vec![(1.0, 1.0)]).unwrap();
    let mut rows = Vec::new();
    for (idx, &dt) in levels.iter().enumerate() {
        let grid = TimeGrid::uniform(4.0, dt)?;
        let seed_base = (100 + idx as u64) << 40;
        let chunks = par_fold(cfg.n_paths, |range| {
            let mut est = Estimate::new();
            for stream in range {
                let p = sample_bm(&grid, SeedSpec::new(cfg.seed, seed_base + stream));
                est.push(stieltjes(&f, &p)?.value);
            }
            Ok(est)
        })?;
        let est = chunks.into_iter().fold(Estimate::new(), Estimate::merge);
        rows.push(TableRow {
            level: dt,
            estimate: est.variance(),
            stderr: est.variance_stderr(),
            bias_proxy: (est.variance() - f.l2_norm_sq()).abs(),
        });
    }
    Ok(rows)
}

pub(super) fn table_arcsine(cfg: &SuiteConfig, levels: &[f64]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (idx, &dt) in levels.iter().enumerate() {
        let grid = TimeGrid::uniform(1.0, dt)?;
        let seed_base = (120 + idx as u64) << 40;
        let chunks = par_fold(cfg.n_paths, |range| {
            let mut est = Estimate::new();
            for stream in range {
                let p = sample_bm(&grid, SeedSpec::new(cfg.seed, seed_base + stream));
                est.push(if last_exit(&p, 1.0) <= 0.5 { 1.0 } else { 0.0 });
            }
            Ok(est)
        })?;
        let est = chunks.into_iter().fold(Estimate::new(), Estimate::merge);
        rows.push(TableRow {
            level: dt,
            estimate: est.mean(),
            stderr: est.stderr(),
            bias_proxy: (est.mean() - 0.5).abs(),
        });
    }
    Ok(rows)
}

pub(super) fn table_limit_ratio(levels: &[f64]) -> Result<Vec<TableRow>> {
    let phi = Integrand1D::new(|u: f64| (-u).exp());
    levels
        .iter()
        .map(|&t| {
            let v = limit_ratio_op(&phi, t)?;
            Ok(TableRow { level: t, estimate: v, stderr: 0.0, bias_proxy: (v - SQRT_PI).abs() })
        })
        .collect()
}

pub(super) fn table_lambda_cross(cfg: &SuiteConfig, levels: &[f64]) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (idx, &dt) in levels.iter().enumerate() {
        let seed_base = (140 + idx as u64) << 40;
        let (_, gaps) = lambda_cross_at(cfg, seed_base, dt, cfg.n_paths)?;
        // Use the clipped-absolute functional as the bias probe.
        let (gap, se, w_mean) = gaps[1];
        rows.push(TableRow { level: dt, estimate: w_mean, stderr: se, bias_proxy: gap });
    }
    Ok(rows)
}
