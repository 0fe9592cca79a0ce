//! Wiener-integral evaluators for deterministic step integrands: plain
//! Stieltjes sums, the bridge projection identity, the centered Bessel
//! integral, the decomposition before/after the last exit time, time-indexed
//! partial integrals, and the time-changed fourth-moment increments.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::funcspace::StepFunction;
use crate::measure::{sample_tilted, Estimate, TiltedSample};
use crate::numerics::TiltingConfig;
use crate::paths::{shift_path, BridgeSample, SamplePath, SeedSpec};

/// Whether an integral value depended on linear interpolation between nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiscretizationNote {
    /// All breakpoints hit grid nodes; the value carries no grid error.
    Exact,
    /// Some breakpoint was interpolated on a grid of the given nominal step.
    Interpolated { dt: f64 },
}

/// A Stieltjes integral value plus its discretization note.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralValue {
    pub value: f64,
    pub note: DiscretizationNote,
}

/// `sum of c_k (X_{t_k} - X_{t_{k-1}})` over the cells of `f`.
pub fn stieltjes(f: &StepFunction, path: &SamplePath) -> Result<IntegralValue> {
    let end = f.support_end();
    if end > path.span() {
        return Err(Error::SupportExceedsPath { support_end: end, span: path.span() });
    }
    let breaks = f.breakpoints();
    let mut all_nodes = true;
    let (mut prev, on_node) = path.lookup(breaks[0]);
    all_nodes &= on_node;
    let mut sum = 0.0;
    for (k, &c) in f.levels().iter().enumerate() {
        let (next, on_node) = path.lookup(breaks[k + 1]);
        all_nodes &= on_node;
        sum += c * (next - prev);
        prev = next;
    }
    let note = if all_nodes {
        DiscretizationNote::Exact
    } else {
        DiscretizationNote::Interpolated { dt: path.grid().dt_hint().unwrap_or(f64::NAN) }
    };
    Ok(IntegralValue { value: sum, note })
}

/// A bridge integral together with its projected replay through the
/// generating Brownian path, when that generator is available.
#[derive(Clone, Copy, Debug)]
pub struct BridgeIntegral {
    pub value: IntegralValue,
    /// `integral of (pi_u f) dB` over the generator, if retained.
    pub via_generator: Option<IntegralValue>,
    /// `|value - via_generator|` relative to `1 + magnitude`; `None` when the
    /// generator was absent and the identity could not be replayed.
    pub identity_residual: Option<f64>,
}

/// Integral of `f` against a length-`u` bridge. When the sample retains its
/// generating Brownian motion, also evaluates the projected integrand against
/// the generator; the two agree up to rounding.
pub fn bridge_integral(f: &StepFunction, bridge: &BridgeSample) -> Result<BridgeIntegral> {
    let u = bridge.path.span();
    let value = stieltjes(f, &bridge.path)?;
    let (via, residual) = match &bridge.generator {
        Some(gen) => {
            let projected = f.truncate(u)?.project_bridge(u)?;
            let replay = stieltjes(&projected, gen)?;
            let scale = 1.0 + value.value.abs().max(replay.value.abs());
            (Some(replay), Some((value.value - replay.value).abs() / scale))
        }
        None => (None, None),
    };
    Ok(BridgeIntegral { value, via_generator: via, identity_residual: residual })
}

/// Integral of `f` against the centered Bessel path: the raw Stieltjes sum
/// minus the running-mean term `sqrt(2/pi) integral of f(s)/sqrt(s) ds`
/// (closed form for step `f`).
pub fn bessel_integral_centered(f: &StepFunction, bessel: &SamplePath) -> Result<IntegralValue> {
    let raw = stieltjes(f, bessel)?;
    let drift = (2.0 / core::f64::consts::PI).sqrt() * f.integral_inv_sqrt();
    Ok(IntegralValue { value: raw.value - drift, note: raw.note })
}

/// The integral split at the sample's last-exit time.
#[derive(Clone, Copy, Debug)]
pub struct Decomposition {
    /// Integral over the whole concatenated path.
    pub whole: IntegralValue,
    /// Bridge part: integral of `f 1_{[0,u)}` over the bridge segment.
    pub j1: IntegralValue,
    /// Tail part: integral of `f(. + u)` over the shifted tail.
    pub j2: IntegralValue,
}

impl Decomposition {
    /// `|whole - (j1 + j2)|` relative to `1 + |whole|`; pure floating-point
    /// regrouping error, zero in exact arithmetic.
    pub fn residual(&self) -> f64 {
        (self.whole.value - (self.j1.value + self.j2.value)).abs() / (1.0 + self.whole.value.abs())
    }
}

/// Split the integral of `f` over a tilted sample into its bridge and tail
/// parts. The sum of the parts reproduces the whole up to rounding, because
/// `u` is a node of the assembled grid.
pub fn decompose_integral(f: &StepFunction, sample: &TiltedSample) -> Result<Decomposition> {
    if f.support_end() > sample.horizon {
        return Err(Error::SupportExceedsPath {
            support_end: f.support_end(),
            span: sample.horizon,
        });
    }
    let whole = stieltjes(f, &sample.full)?;
    let j1 = stieltjes(&f.truncate(sample.u)?, &sample.bridge)?;
    let tail = shift_path(&sample.full, sample.u)?;
    let j2 = stieltjes(&f.shift(sample.u)?, &tail)?;
    Ok(Decomposition { whole, j1, j2 })
}

/// The cumulative integrals `I_t` for each `t` in `t_grid`, each computed by
/// decomposing the truncated integrand. Increments are consistent: for
/// `t' < t`, `I_t - I_{t'}` equals the integral of `f 1_{[t', t)}`.
pub fn partial_integrals(
    f: &StepFunction,
    sample: &TiltedSample,
    t_grid: &[f64],
) -> Result<Vec<IntegralValue>> {
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t >= 0.0) || t > sample.horizon {
            return Err(Error::InvalidArgument("partial integral times must lie in [0, horizon]"));
        }
        let d = decompose_integral(&f.truncate(t)?, sample)?;
        out.push(d.whole);
    }
    Ok(out)
}

/// `J3` at truncation time `t`: the centered-Bessel integral of
/// `f 1_{[0,t)}(. + u)` against the sample's (unsigned) Bessel tail.
fn centered_tail_integral(f: &StepFunction, t: f64, sample: &TiltedSample) -> Result<f64> {
    let shifted = f.truncate(t)?.shift(sample.u)?;
    Ok(bessel_integral_centered(&shifted, &sample.bessel)?.value)
}

/// Increment of the centered tail integral between the time-changed instants
/// `L(v1)` and `L(v2)` of `f`'s clock `M(t) = t + integral of f^2`.
pub fn holder_increment(
    f: &StepFunction,
    v1: f64,
    v2: f64,
    sample: &TiltedSample,
) -> Result<f64> {
    if !(0.0 <= v1 && v1 <= v2) {
        return Err(Error::InvalidArgument("need 0 <= v1 <= v2"));
    }
    if v1 == v2 {
        return Ok(0.0);
    }
    let t1 = f.time_change_l(v1)?;
    let t2 = f.time_change_l(v2)?;
    Ok(centered_tail_integral(f, t2, sample)? - centered_tail_integral(f, t1, sample)?)
}

/// Monte Carlo estimate of the fourth moment of the time-changed increment,
/// to be compared against the bound `3 (v2 - v1)^2`.
pub fn holder_increment_moment(
    f: &StepFunction,
    tilt: &TiltingConfig,
    horizon: f64,
    dt: f64,
    v1: f64,
    v2: f64,
    n_paths: u64,
    root_seed: u64,
) -> Result<Estimate> {
    let mut est = Estimate::new();
    for stream in 0..n_paths {
        let sample = sample_tilted(tilt, horizon, dt, SeedSpec::new(root_seed, stream))?;
        let inc = holder_increment(f, v1, v2, &sample)?;
        est.push(inc * inc * inc * inc);
    }
    Ok(est)
}
