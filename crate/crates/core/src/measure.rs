//! Sampling from the tilted finite path measure, mergeable Monte Carlo
//! accumulators, importance reweighting of weighted path functionals, and the
//! absolute-continuity density linking the tilted expectations back to plain
//! Wiener expectations over a finite window.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::TiltingConfig;
use crate::paths::{
    last_exit, sample_bessel3_with, sample_bridge_with, SamplePath, SeedSpec, Sign, TimeGrid,
};

/// Streaming mean/variance accumulator with third and fourth central-moment
/// scaffolding, mergeable so batches can be combined associatively.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Estimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Merge two accumulators; equals the accumulator of the concatenated
    /// sample up to rounding.
    pub fn merge(a: Estimate, b: Estimate) -> Estimate {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let na = a.count as f64;
        let nb = b.count as f64;
        let n = na + nb;
        let delta = b.mean - a.mean;
        let d2 = delta * delta;
        let mean = a.mean + delta * nb / n;
        let m2 = a.m2 + b.m2 + d2 * na * nb / n;
        let m3 = a.m3
            + b.m3
            + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * b.m2 - nb * a.m2) / n;
        let m4 = a.m4
            + b.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
            + 4.0 * delta * (na * b.m3 - nb * a.m3) / n;
        Estimate { count: a.count + b.count, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    /// Standard error of the mean, `sqrt(m2 / (n (n-1)))`.
    pub fn stderr(&self) -> f64 {
        if self.count > 1 {
            (self.m2 / (self.count as f64 * (self.count - 1) as f64)).sqrt()
        } else {
            0.0
        }
    }

    /// Fourth central moment (biased, moment form).
    pub fn fourth_central(&self) -> f64 {
        if self.count > 0 {
            self.m4 / self.count as f64
        } else {
            0.0
        }
    }

    /// Sample excess kurtosis `m4 / m2^2 - 3` (moment form).
    pub fn excess_kurtosis(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        let n = self.count as f64;
        n * self.m4 / (self.m2 * self.m2) - 3.0
    }

    /// Standard error of the sample variance,
    /// `sqrt((m4_hat - (n-3)/(n-1) var^2) / n)`.
    pub fn variance_stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = self.variance();
        let inner = self.fourth_central() - (n - 3.0) / (n - 1.0) * var * var;
        (inner.max(0.0) / n).sqrt()
    }
}

/// Paired accumulator for ratio estimators (delta-method standard error).
#[derive(Clone, Copy, Debug, Default)]
pub struct BivariateEstimate {
    count: u64,
    mean_a: f64,
    mean_b: f64,
    m2a: f64,
    m2b: f64,
    m11: f64,
}

impl BivariateEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: f64, b: f64) {
        self.count += 1;
        let n = self.count as f64;
        let da = a - self.mean_a;
        let db = b - self.mean_b;
        self.mean_a += da / n;
        self.mean_b += db / n;
        let db_new = b - self.mean_b;
        self.m2a += da * (a - self.mean_a);
        self.m2b += db * db_new;
        self.m11 += da * db_new;
    }

    pub fn merge(x: Self, y: Self) -> Self {
        if x.count == 0 {
            return y;
        }
        if y.count == 0 {
            return x;
        }
        let na = x.count as f64;
        let nb = y.count as f64;
        let n = na + nb;
        let da = y.mean_a - x.mean_a;
        let db = y.mean_b - x.mean_b;
        Self {
            count: x.count + y.count,
            mean_a: x.mean_a + da * nb / n,
            mean_b: x.mean_b + db * nb / n,
            m2a: x.m2a + y.m2a + da * da * na * nb / n,
            m2b: x.m2b + y.m2b + db * db * na * nb / n,
            m11: x.m11 + y.m11 + da * db * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_num(&self) -> f64 {
        self.mean_a
    }

    pub fn mean_den(&self) -> f64 {
        self.mean_b
    }

    pub fn den_stderr(&self) -> f64 {
        if self.count > 1 {
            (self.m2b / (self.count as f64 * (self.count - 1) as f64)).sqrt()
        } else {
            0.0
        }
    }

    /// Ratio of means and its delta-method standard error.
    pub fn ratio(&self) -> (f64, f64) {
        let r = self.mean_a / self.mean_b;
        if self.count < 2 {
            return (r, 0.0);
        }
        let n = self.count as f64;
        let var = (self.m2a - 2.0 * r * self.m11 + r * r * self.m2b) / (n - 1.0);
        let se = (var.max(0.0) / n).sqrt() / self.mean_b.abs();
        (r, se)
    }
}

/// One draw from the tilted measure: last-exit time `u` with density
/// `phi(u) / (c_phi sqrt(u))`, a length-`u` bridge, an independent Bessel
/// tail with a fair sign, and their concatenation over `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct TiltedSample {
    pub u: f64,
    pub sign: Sign,
    pub bridge: SamplePath,
    pub bessel: SamplePath,
    pub full: SamplePath,
    pub horizon: f64,
    /// Draws discarded by the `u <= horizon` truncation.
    pub truncated_redraws: u32,
    /// Draws discarded by envelope rejection (0 for the exponential tilt).
    pub rejected_redraws: u32,
}

/// Last-exit draw by rejection from the Gamma(1/2, 1) envelope `Z^2 / 2`,
/// conditioned on `u <= horizon`. The exponential tilt accepts every draw.
pub(crate) fn draw_last_exit<R: Rng + ?Sized>(
    tilt: &TiltingConfig,
    horizon: f64,
    rng: &mut R,
) -> Result<(f64, u32, u32)> {
    let mut truncated = 0u32;
    let mut rejected = 0u32;
    for _ in 0..100_000 {
        let z: f64 = rng.sample(StandardNormal);
        let u = 0.5 * z * z;
        let accept: f64 = rng.random();
        if u > horizon || u == 0.0 {
            truncated += 1;
            continue;
        }
        let ratio = tilt.phi().eval(u) * u.exp() / tilt.envelope_bound();
        if ratio > 1.0 + 1e-9 || !ratio.is_finite() {
            return Err(Error::InvalidTilt("phi exceeds its declared exponential envelope"));
        }
        if accept <= ratio {
            return Ok((u, truncated, rejected));
        }
        rejected += 1;
    }
    Err(Error::InvalidTilt("rejection sampler failed to accept within 1e5 draws"))
}

/// Draw only the last-exit time (no paths); the marginal under the default
/// tilt is Gamma(1/2, 1) conditioned on `u <= horizon`.
pub fn sample_last_exit(tilt: &TiltingConfig, horizon: f64, seed: SeedSpec) -> Result<f64> {
    draw_last_exit(tilt, horizon, &mut seed.rng()).map(|(u, _, _)| u)
}

/// Draw one tilted sample on the uniform grid of spacing `dt` over
/// `[0, horizon]`, with `u` inserted as a grid node.
pub fn sample_tilted(
    tilt: &TiltingConfig,
    horizon: f64,
    dt: f64,
    seed: SeedSpec,
) -> Result<TiltedSample> {
    let mut rng = seed.rng();
    let (u, truncated, rejected) = draw_last_exit(tilt, horizon, &mut rng)?;
    let base = TimeGrid::uniform(horizon, dt)?.with_node(u)?;
    let (head_grid, tail_grid) = base.split_at(u)?;
    let bridge = sample_bridge_with(u, &head_grid, &mut rng)?;
    let bessel = sample_bessel3_with(&tail_grid, &mut rng);
    let sign = Sign::sample(&mut rng);

    // Assemble the concatenation on the original nodes (the bridge ends at
    // exactly 0 and the Bessel tail starts at exactly 0, so this is the
    // matching clause of the concatenation).
    let mut values = bridge.path.values().to_vec();
    let s = sign.as_f64();
    for &v in &bessel.values()[1..] {
        values.push(s * v);
    }
    let full = SamplePath::new(base, values)?;
    Ok(TiltedSample {
        u,
        sign,
        bridge: bridge.path,
        bessel,
        full,
        horizon,
        truncated_redraws: truncated,
        rejected_redraws: rejected,
    })
}

/// Monte Carlo estimate of a functional under the tilted law, plus the
/// counters a report needs. The sigma-finite expectation of
/// `F * phi(last exit)` is `c_phi / sqrt(2 pi)` times the mean (the measure
/// weights the last-exit time by `du / sqrt(2 pi u)`, the tilted law by
/// `du / (c_phi sqrt(u))`).
#[derive(Clone, Copy, Debug, Default)]
pub struct WEstimate {
    pub estimate: Estimate,
    pub non_finite: u64,
    pub truncated_redraws: u64,
    pub rejected_redraws: u64,
}

impl WEstimate {
    pub fn merge(a: Self, b: Self) -> Self {
        Self {
            estimate: Estimate::merge(a.estimate, b.estimate),
            non_finite: a.non_finite + b.non_finite,
            truncated_redraws: a.truncated_redraws + b.truncated_redraws,
            rejected_redraws: a.rejected_redraws + b.rejected_redraws,
        }
    }

    /// Non-finite evaluations above 1 per mille abort the estimate.
    pub fn check_non_finite(&self, total: u64) -> Result<()> {
        let allowed = (total / 1000).max(1);
        if self.non_finite > allowed {
            return Err(Error::NonFiniteSamples { seen: self.non_finite, total });
        }
        Ok(())
    }
}

/// Sequential estimate of `E[F]` under the tilted measure over the given
/// stream indices. Callers fan streams out across threads and merge.
pub fn w_expectation_streams<F>(
    functional: F,
    tilt: &TiltingConfig,
    horizon: f64,
    dt: f64,
    root_seed: u64,
    streams: core::ops::Range<u64>,
) -> Result<WEstimate>
where
    F: Fn(&TiltedSample) -> f64,
{
    let mut out = WEstimate::default();
    for stream in streams {
        let sample = sample_tilted(tilt, horizon, dt, SeedSpec::new(root_seed, stream))?;
        out.truncated_redraws += sample.truncated_redraws as u64;
        out.rejected_redraws += sample.rejected_redraws as u64;
        let v = functional(&sample);
        if v.is_finite() {
            out.estimate.push(v);
        } else {
            out.non_finite += 1;
        }
    }
    Ok(out)
}

/// `E[F]` under the tilted measure over `n_paths` fresh streams.
pub fn w_expectation<F>(
    functional: F,
    tilt: &TiltingConfig,
    horizon: f64,
    dt: f64,
    n_paths: u64,
    root_seed: u64,
) -> Result<WEstimate>
where
    F: Fn(&TiltedSample) -> f64,
{
    let out = w_expectation_streams(functional, tilt, horizon, dt, root_seed, 0..n_paths)?;
    out.check_non_finite(n_paths)?;
    Ok(out)
}

/// Reweighted probability of `event` under the normalized measure weighted by
/// `weight` (which must be non-negative with finite, non-null mass). Estimated
/// as a ratio of tilted expectations with shared draws; the importance factor
/// is `weight / phi(u)`.
pub fn wg_probability<E, G>(
    event: E,
    weight: G,
    tilt: &TiltingConfig,
    horizon: f64,
    dt: f64,
    n_paths: u64,
    root_seed: u64,
) -> Result<(f64, f64)>
where
    E: Fn(&TiltedSample) -> bool,
    G: Fn(&TiltedSample) -> f64,
{
    let mut acc = BivariateEstimate::new();
    for stream in 0..n_paths {
        let sample = sample_tilted(tilt, horizon, dt, SeedSpec::new(root_seed, stream))?;
        let w = weight(&sample) / tilt.phi().eval(sample.u);
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument("weight functional must be finite and >= 0"));
        }
        acc.push(if event(&sample) { w } else { 0.0 }, w);
    }
    if acc.mean_den() <= 3.0 * acc.den_stderr() {
        return Err(Error::WeightDegenerate);
    }
    Ok(acc.ratio())
}

/// The density functional over a window `[0, T]`:
/// `|X_T| exp(-g_T) + exp(-T) exp(-sqrt(2) |X_T|) / sqrt(2)`,
/// with `g_T` the last exit from zero before `T`. The second term is the
/// closed form of `integral du/sqrt(2 pi u) exp(-(T+u)) exp(-X_T^2/(2u))`;
/// see [`lambda_tail_quadrature`] for the direct quadrature used to verify it.
pub fn lambda_t(path: &SamplePath, t: f64) -> f64 {
    let x = path.value_at(t);
    let g = last_exit(path, t);
    x.abs() * (-g).exp() + (-t).exp() * (-core::f64::consts::SQRT_2 * x.abs()).exp()
        / core::f64::consts::SQRT_2
}

/// Direct quadrature of `integral over (0, inf) of exp(-(t+u)) exp(-x^2/(2u))
/// / sqrt(2 pi u) du`: the oracle for the closed form inside [`lambda_t`].
pub fn lambda_tail_quadrature(x: f64, t: f64) -> Result<f64> {
    let x2 = x * x;
    let integrand = move |u: f64| (-u - x2 / (2.0 * u)).exp() / (2.0 * core::f64::consts::PI * u).sqrt();
    let v = crate::numerics::improper_abs(integrand, None)?;
    Ok((-t).exp() * v)
}

/// CDF of Gamma(1/2, rate 1): `P(U <= x) = erf(sqrt(x))`. This is the law of
/// the last-exit time under the exponential tilt.
pub fn gamma_half_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf(x.sqrt())
    }
}

/// Mass removed by conditioning the last-exit draw on `u <= horizon`.
pub fn truncation_mass(tilt: &TiltingConfig, horizon: f64) -> Result<f64> {
    let phi = tilt.phi().clone();
    let kept = crate::numerics::improper_abs(
        move |u: f64| if u <= horizon { phi.eval(u) / u.sqrt() } else { 0.0 },
        Some((0.0, horizon)),
    )?;
    Ok((1.0 - kept / tilt.c_phi()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn tilt() -> TiltingConfig {
        TiltingConfig::default_exp()
    }

    #[test]
    fn estimate_tracks_moments() {
        let mut e = Estimate::new();
        for x in [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0] {
            e.push(x);
        }
        assert_eq!(e.count(), 8);
        assert!((e.mean() - 5.0).abs() < 1e-14);
        assert!((e.variance() - 32.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn merge_matches_concatenated_stream() {
        let xs: Vec<f64> = (0..257).map(|i| ((i * 37 % 101) as f64).sin() * 3.0 + 1.0).collect();
        for split in [1usize, 97, 200, 256] {
            let mut all = Estimate::new();
            let mut left = Estimate::new();
            let mut right = Estimate::new();
            for (i, &x) in xs.iter().enumerate() {
                all.push(x);
                if i < split {
                    left.push(x)
                } else {
                    right.push(x)
                }
            }
            let merged = Estimate::merge(left, right);
            assert_eq!(merged.count(), all.count());
            assert!((merged.mean() - all.mean()).abs() <= 1e-10 * all.mean().abs());
            assert!((merged.m2 - all.m2).abs() <= 1e-10 * all.m2.abs());
            assert!((merged.m4 - all.m4).abs() <= 1e-9 * all.m4.abs());
        }
    }

    #[test]
    fn gamma_half_cdf_matches_normal_fold() {
        // P(U <= 1/2) = P(|Z| <= 1) ~ 0.6826895.
        assert!((gamma_half_cdf(0.5) - 0.682689492137086).abs() < 1e-12);
        assert_eq!(gamma_half_cdf(-1.0), 0.0);
    }

    #[test]
    fn tilted_sample_structure() {
        let s = sample_tilted(&tilt(), 16.0, 1.0 / 64.0, SeedSpec::new(5, 7)).unwrap();
        assert!(s.u > 0.0 && s.u <= 16.0);
        assert_eq!(s.full.value_at(s.u), 0.0);
        assert_eq!(s.bridge.end_value(), 0.0);
        assert_eq!(s.bridge.span(), s.u);
        assert!((s.bessel.span() - (16.0 - s.u)).abs() < 1e-12);
        // Tail (strictly after u) never returns to zero at the nodes.
        let idx = s.full.grid().index_of(s.u).unwrap();
        assert!(s.full.values()[idx + 1..].iter().all(|&v| v != 0.0));
        // Tail values are the signed Bessel values.
        let flip = s.sign.as_f64();
        for (a, b) in s.full.values()[idx..].iter().zip(s.bessel.values()) {
            assert_eq!(*a, flip * *b);
        }
    }

    #[test]
    fn tilted_sampling_is_deterministic() {
        let a = sample_tilted(&tilt(), 16.0, 1.0 / 64.0, SeedSpec::new(11, 3)).unwrap();
        let b = sample_tilted(&tilt(), 16.0, 1.0 / 64.0, SeedSpec::new(11, 3)).unwrap();
        assert_eq!(a.full, b.full);
        assert_eq!(a.u, b.u);
    }

    #[test]
    fn last_exit_marginal_moments() {
        let t = tilt();
        let mut rng = SeedSpec::new(101, 0).rng();
        let mut u1 = Estimate::new();
        let mut u2 = Estimate::new();
        for _ in 0..40_000 {
            let (u, _, _) = draw_last_exit(&t, 16.0, &mut rng).unwrap();
            u1.push(u);
            u2.push(u * u);
        }
        let z1 = (u1.mean() - 0.5) / u1.stderr();
        let z2 = (u2.mean() - 0.75) / u2.stderr();
        assert!(z1.abs() < 4.0, "E[u] z = {z1}");
        assert!(z2.abs() < 4.0, "E[u^2] z = {z2}");
    }

    #[test]
    fn w_expectation_of_unity_is_exact() {
        let w = w_expectation(|_| 1.0, &tilt(), 8.0, 0.125, 200, 3).unwrap();
        assert_eq!(w.estimate.mean(), 1.0);
        assert_eq!(w.estimate.stderr(), 0.0);
    }

    #[test]
    fn w_expectation_flags_non_finite_functionals() {
        let res = w_expectation(|_| f64::NAN, &tilt(), 8.0, 0.125, 100, 3);
        assert!(matches!(res, Err(Error::NonFiniteSamples { .. })));
    }

    #[test]
    fn tail_probability_matches_gamma_law() {
        let w = w_expectation(
            |s| if s.u <= 0.5 { 1.0 } else { 0.0 },
            &tilt(),
            8.0,
            0.125,
            20_000,
            13,
        )
        .unwrap();
        let target = gamma_half_cdf(0.5);
        let z = (w.estimate.mean() - target) / w.estimate.stderr();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn sign_of_tail_is_fair() {
        let w = w_expectation(
            |s| s.sign.as_f64(),
            &tilt(),
            8.0,
            0.125,
            20_000,
            17,
        )
        .unwrap();
        let z = w.estimate.mean() / w.estimate.stderr();
        assert!(z.abs() < 4.0, "z = {z}");
    }

    #[test]
    fn wg_probability_consistent_with_direct_estimate() {
        // Weight = phi(g) reproduces the tilted path marginal itself.
        let t = tilt();
        let (p, se) = wg_probability(
            |s| s.u <= 0.5,
            |s| (-s.u).exp(),
            &t,
            8.0,
            0.125,
            20_000,
            19,
        )
        .unwrap();
        let target = gamma_half_cdf(0.5);
        assert!(((p - target) / se).abs() < 4.0, "p = {p} +- {se}");
        // Full space has probability exactly 1.
        let (one, se1) = wg_probability(|_| true, |s| (-s.u).exp(), &t, 8.0, 0.125, 500, 19).unwrap();
        assert_eq!(one, 1.0);
        assert_eq!(se1, 0.0);
    }

    #[test]
    fn wg_probability_sign_event_is_half() {
        let t = tilt();
        let (p, se) = wg_probability(
            |s| s.sign == Sign::Plus,
            |s| (-s.u).exp(),
            &t,
            8.0,
            0.125,
            20_000,
            23,
        )
        .unwrap();
        assert!(((p - 0.5) / se).abs() < 4.0, "p = {p}");
    }

    #[test]
    fn lambda_closed_form_matches_quadrature() {
        for (x, t) in [(0.0, 1.0), (1.0, 1.0), (0.3, 2.0), (2.5, 0.5), (0.07, 4.0)] {
            let direct = lambda_tail_quadrature(x, t).unwrap();
            let closed =
                (-t).exp() * (-core::f64::consts::SQRT_2 * x).exp() / core::f64::consts::SQRT_2;
            assert!(
                (direct - closed).abs() <= 1e-8 * closed.abs(),
                "x={x} t={t}: {direct} vs {closed}"
            );
        }
    }

    #[test]
    fn lambda_at_zero_endpoint() {
        // A path pinned at 0 up to T has g_T = T and X_T = 0.
        let grid = TimeGrid::uniform(1.0, 0.25).unwrap();
        let path = SamplePath::new(grid, alloc::vec![0.0; 5]).unwrap();
        let v = lambda_t(&path, 1.0);
        let target = (-1.0f64).exp() / core::f64::consts::SQRT_2;
        assert!((v - target).abs() < 1e-15);
        assert!(v > 0.0);
    }

    #[test]
    fn truncation_mass_is_tiny_at_default_horizon() {
        let m = truncation_mass(&tilt(), 16.0).unwrap();
        assert!(m < 1e-6, "truncation mass {m}");
        assert!((m - libm::erfc(4.0)).abs() < 1e-9);
    }
}
