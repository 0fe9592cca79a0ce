//! Deterministic quadrature for integrands with inverse-square-root endpoint
//! singularities, the weighted norms classifying admissible integrands, the
//! arcsine kernel, and its large-time limit.

pub(crate) mod quad;

use alloc::sync::Arc;

use crate::error::{Error, Result};
use quad::{adaptive, dyadic_head, dyadic_tail, Improper};

/// A deterministic integrand on (0, infinity).
///
/// `support_hint`, when present, promises the evaluator returns 0 outside
/// `[a, b)`; improper integrals then clip their dyadic sweeps to it.
#[derive(Clone)]
pub struct Integrand1D {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    support: Option<(f64, f64)>,
}

impl core::fmt::Debug for Integrand1D {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Integrand1D")
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

impl Integrand1D {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self { eval: Arc::new(f), support: None }
    }

    /// Declare that the evaluator vanishes outside `[a, b)`.
    pub fn with_support<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, a: f64, b: f64) -> Self {
        Self { eval: Arc::new(f), support: Some((a, b)) }
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn support_hint(&self) -> Option<(f64, f64)> {
        self.support
    }
}

/// Weighted norms of an integrand, with `f64::INFINITY` marking divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandProfile {
    /// L2(ds) norm.
    pub l2_norm: f64,
    /// L1(ds/sqrt(s)) norm.
    pub l1_sqrt_norm: f64,
    /// L1(ds/(1+sqrt(s))) norm.
    pub l1_one_plus_sqrt_norm: f64,
    /// Tilt-weighted norm (see [`phi_norm`]).
    pub phi_norm: f64,
}

impl IntegrandProfile {
    /// Membership in the class admitting step approximation in both norms.
    pub fn is_admissible(&self) -> bool {
        self.l2_norm.is_finite() && self.l1_one_plus_sqrt_norm.is_finite()
    }
}

/// A non-negative, non-increasing tilting function with finite
/// `c_phi = integral of phi(u)/sqrt(u) du` over (0, infinity).
#[derive(Clone, Debug)]
pub struct TiltingConfig {
    phi: Integrand1D,
    c_phi: f64,
    phi_origin: f64,
    /// Bound M with phi(u) <= M exp(-u), used by the rejection sampler.
    envelope_bound: f64,
}

impl TiltingConfig {
    pub fn new(phi: Integrand1D, envelope_bound: f64) -> Result<Self> {
        if !(envelope_bound > 0.0) || !envelope_bound.is_finite() {
            return Err(Error::InvalidTilt("envelope bound must be positive and finite"));
        }
        let phi_origin = phi.eval(1e-12);
        if !phi_origin.is_finite() || phi_origin < 0.0 {
            return Err(Error::InvalidTilt("phi(0+) must be finite and non-negative"));
        }
        // Coarse probe of monotonicity and sign on a geometric grid.
        let mut prev = phi_origin;
        let mut k = -40i32;
        while k <= 6 {
            let u = libm::exp2(k as f64);
            let v = phi.eval(u);
            if !v.is_finite() || v < -1e-12 {
                return Err(Error::InvalidTilt("phi must be finite and non-negative"));
            }
            if v > prev + 1e-9 * (1.0 + prev.abs()) {
                return Err(Error::InvalidTilt("phi must be non-increasing"));
            }
            prev = v;
            k += 1;
        }
        let c_phi = improper_abs(|u| phi.eval(u) / u.sqrt(), phi.support_hint())?;
        if !c_phi.is_finite() || c_phi <= 0.0 {
            return Err(Error::InvalidTilt("c_phi must be finite and positive"));
        }
        Ok(Self { phi, c_phi, phi_origin, envelope_bound })
    }

    /// The default tilt `phi(u) = exp(-u)`, for which `c_phi = sqrt(pi)` and
    /// the rejection envelope is tight.
    pub fn default_exp() -> Self {
        Self::new(Integrand1D::new(|u: f64| (-u).exp()), 1.0)
            .expect("exponential tilt is admissible")
    }

    pub fn phi(&self) -> &Integrand1D {
        &self.phi
    }

    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    pub fn phi_origin(&self) -> f64 {
        self.phi_origin
    }

    pub fn envelope_bound(&self) -> f64 {
        self.envelope_bound
    }
}

/// Integral of `g` over (a, b), where `g` may blow up like an inverse square
/// root at whichever endpoints are flagged. Flagged endpoints are removed by
/// substitution (u = a + (b-a) sin^2(theta) when both are flagged, a power map
/// when one is), so quadrature nodes never touch them.
pub fn integrate_singular(
    g: &Integrand1D,
    a: f64,
    b: f64,
    singular_left: bool,
    singular_right: bool,
) -> Result<f64> {
    integrate_singular_fn(|u| g.eval(u), a, b, singular_left, singular_right)
}

pub(crate) fn integrate_singular_fn<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    singular_left: bool,
    singular_right: bool,
) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("integrate_singular needs finite a < b"));
    }
    let width = b - a;
    match (singular_left, singular_right) {
        (false, false) => adaptive(&g, a, b),
        (true, false) => adaptive(&|t: f64| g(a + width * t * t) * 2.0 * width * t, 0.0, 1.0),
        (false, true) => adaptive(&|t: f64| g(b - width * t * t) * 2.0 * width * t, 0.0, 1.0),
        (true, true) => adaptive(
            &|theta: f64| {
                let s = theta.sin();
                g(a + width * s * s) * width * (2.0 * theta).sin()
            },
            0.0,
            core::f64::consts::FRAC_PI_2,
        ),
    }
}

/// Integral of `g` over (0, infinity), split at 1 into a descending dyadic
/// head and an ascending dyadic tail. Returns `f64::INFINITY` when either
/// sweep is classified divergent. Expects `|g|`-style one-signed integrands.
pub(crate) fn improper_abs<F: Fn(f64) -> f64>(g: F, support: Option<(f64, f64)>) -> Result<f64> {
    let (lo, hi) = match support {
        Some((a, b)) => (a.max(0.0), b),
        None => (0.0, f64::INFINITY),
    };
    if hi <= lo {
        return Ok(0.0);
    }
    let split = 1.0f64;
    let mut total = 0.0f64;
    if lo < split.min(hi) {
        match dyadic_head(&g, split.min(hi))? {
            Improper::Finite(v) => total += v,
            Improper::Divergent => return Ok(f64::INFINITY),
        }
    }
    if hi > split {
        let upper = if hi.is_finite() { Some(hi) } else { None };
        match dyadic_tail(&g, lo.max(split), upper)? {
            Improper::Finite(v) => total += v,
            Improper::Divergent => return Ok(f64::INFINITY),
        }
    }
    Ok(total)
}

/// The arcsine kernel `integral over (0, s) of phi(u) du / sqrt(u (s - u))`.
///
/// For constant phi this is pi for every s; for admissible non-increasing phi
/// it interpolates between `phi(0+) pi` near 0 and `c_phi / sqrt(s)` at
/// infinity.
pub fn arcsine_kernel(phi: &Integrand1D, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument("arcsine_kernel needs s > 0"));
    }
    integrate_singular_fn(|u| phi.eval(u) / (u * (s - u)).sqrt(), 0.0, s, true, true)
}

/// `sqrt(t)` times the arcsine kernel at `t`; converges to `c_phi` as t grows.
pub fn limit_ratio(phi: &Integrand1D, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument("limit_ratio needs t > 0"));
    }
    Ok(t.sqrt() * arcsine_kernel(phi, t)?)
}

/// Tilt-weighted norm via the kernel form:
/// `integral of |f(s)| K_phi(s) ds` with `K_phi` the arcsine kernel.
pub fn phi_norm(f: &Integrand1D, tilt: &TiltingConfig) -> Result<f64> {
    let phi = tilt.phi().clone();
    let weighted = move |s: f64| {
        let v = f.eval(s).abs();
        if v == 0.0 {
            return 0.0;
        }
        match arcsine_kernel(&phi, s) {
            Ok(k) => v * k,
            Err(_) => f64::NAN,
        }
    };
    improper_abs(weighted, f.support_hint())
}

/// `integral over (0, infinity) of |f(s + u)| / sqrt(s) ds`.
pub fn tail_weight(f: &Integrand1D, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::InvalidArgument("tail_weight needs u >= 0"));
    }
    let support = f.support_hint().map(|(a, b)| ((a - u).max(0.0), b - u));
    improper_abs(|s: f64| f.eval(s + u).abs() / s.sqrt(), support)
}

/// All four norms of `f`. Divergent integrals are reported as infinity, as
/// decided by the dyadic-block decay rule.
pub fn profile_integrand(f: &Integrand1D, tilt: &TiltingConfig) -> Result<IntegrandProfile> {
    let support = f.support_hint();
    let l2_sq = improper_abs(
        |s: f64| {
            let v = f.eval(s);
            v * v
        },
        support,
    )?;
    let l1_sqrt = improper_abs(|s: f64| f.eval(s).abs() / s.sqrt(), support)?;
    let l1_one_plus = improper_abs(|s: f64| f.eval(s).abs() / (1.0 + s.sqrt()), support)?;
    let phi = phi_norm(f, tilt)?;
    Ok(IntegrandProfile {
        l2_norm: l2_sq.sqrt(),
        l1_sqrt_norm: l1_sqrt,
        l1_one_plus_sqrt_norm: l1_one_plus,
        phi_norm: phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    
    const SQRT_PI: f64 = 1.7724538509055159;

    #[test]
    fn constant_integrand_no_flags() {
        let g = Integrand1D::new(|_| 1.0);
        let v = integrate_singular(&g, 0.0, 1.0, false, false).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arcsine_density_integrates_to_pi() {
        let g = Integrand1D::new(|u: f64| 1.0 / (u * (1.0 - u)).sqrt());
        let v = integrate_singular(&g, 0.0, 1.0, true, true).unwrap();
        assert!((v - core::f64::consts::PI).abs() < 1e-8 * core::f64::consts::PI);
    }

    #[test]
    fn gamma_half_integral_is_sqrt_pi() {
        // integral over (0, inf) of exp(-u)/sqrt(u), split at 1 with a left flag.
        let g = Integrand1D::new(|u: f64| (-u).exp() / u.sqrt());
        let head = integrate_singular(&g, 0.0, 1.0, true, false).unwrap();
        let tail = improper_abs(|u: f64| if u >= 1.0 { g.eval(u) } else { 0.0 }, None).unwrap();
        assert!((head + tail - SQRT_PI).abs() < 1e-8 * SQRT_PI);
    }

    #[test]
    fn singular_both_ends_matches_shifted_interval() {
        // integral over (2, 5) of 1/sqrt((u-2)(5-u)) = pi as well.
        let g = Integrand1D::new(|u: f64| 1.0 / ((u - 2.0) * (5.0 - u)).sqrt());
        let v = integrate_singular(&g, 2.0, 5.0, true, true).unwrap();
        assert!((v - core::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn argument_order_is_checked() {
        let g = Integrand1D::new(|_| 1.0);
        assert!(matches!(
            integrate_singular(&g, 1.0, 1.0, false, false),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kernel_of_constant_phi_is_pi_for_all_s() {
        let one = Integrand1D::new(|_| 1.0);
        for s in [0.125, 1.0, 7.0, 250.0] {
            let k = arcsine_kernel(&one, s).unwrap();
            assert!(
                (k - core::f64::consts::PI).abs() < 1e-8,
                "kernel at s={s} was {k}"
            );
        }
    }

    #[test]
    fn kernel_of_exp_tilt_near_zero_approaches_pi() {
        let phi = Integrand1D::new(|u: f64| (-u).exp());
        let k = arcsine_kernel(&phi, 1e-6).unwrap();
        assert!((k - core::f64::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn kernel_of_exp_tilt_at_large_s_scales_like_c_phi_over_sqrt_s() {
        let phi = Integrand1D::new(|u: f64| (-u).exp());
        let k = arcsine_kernel(&phi, 100.0).unwrap();
        let target = SQRT_PI / 10.0;
        assert!((k - target).abs() < 0.02 * target, "kernel {k} vs {target}");
    }

    /// Modified Bessel I0 by power series; oracle for the closed form
    /// `kernel(s) = pi exp(-s/2) I0(s/2)` of the exponential tilt.
    fn bessel_i0(z: f64) -> f64 {
        let q = z * z / 4.0;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn kernel_of_exp_tilt_matches_bessel_closed_form() {
        let phi = Integrand1D::new(|u: f64| (-u).exp());
        for s in [0.25, 1.0, 4.0, 25.0] {
            let k = arcsine_kernel(&phi, s).unwrap();
            let oracle = core::f64::consts::PI * (-s / 2.0).exp() * bessel_i0(s / 2.0);
            assert!(
                (k - oracle).abs() < 1e-8 * oracle,
                "kernel({s}) = {k}, closed form {oracle}"
            );
        }
    }

    #[test]
    fn limit_ratio_small_t_expansion() {
        let phi = Integrand1D::new(|u: f64| (-u).exp());
        let v = limit_ratio(&phi, 0.01).unwrap();
        let pi_sqrt_t = core::f64::consts::PI * 0.1;
        assert!((v - pi_sqrt_t).abs() < 0.01 * pi_sqrt_t, "{v} vs {pi_sqrt_t}");
    }

    #[test]
    fn limit_ratio_truncated_constant_at_one() {
        let phi = Integrand1D::with_support(|_| 1.0, 0.0, 1.0);
        let v = limit_ratio(&phi, 1.0).unwrap();
        assert!((v - core::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn limit_ratio_converges_to_c_phi() {
        let phi = Integrand1D::new(|u: f64| (-u).exp());
        let mut prev_gap = f64::INFINITY;
        for t in [25.0, 100.0, 400.0] {
            let gap = (limit_ratio(&phi, t).unwrap() - SQRT_PI).abs();
            assert!(gap < prev_gap, "gap not decreasing at t={t}");
            prev_gap = gap;
        }
        assert!(prev_gap <= 0.05);
    }

    #[test]
    fn default_exp_tilt_has_sqrt_pi_mass() {
        let tilt = TiltingConfig::default_exp();
        assert!((tilt.c_phi() - SQRT_PI).abs() < 1e-8 * SQRT_PI);
        assert!((tilt.phi_origin() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn increasing_phi_is_rejected() {
        let phi = Integrand1D::new(|u: f64| u);
        assert!(matches!(
            TiltingConfig::new(phi, 1.0),
            Err(Error::InvalidTilt(_))
        ));
    }

    #[test]
    fn profile_of_unit_indicator() {
        let tilt = TiltingConfig::default_exp();
        let f = Integrand1D::with_support(|_| 1.0, 0.0, 1.0);
        let p = profile_integrand(&f, &tilt).unwrap();
        assert!((p.l2_norm - 1.0).abs() < 1e-9);
        assert!((p.l1_sqrt_norm - 2.0).abs() < 1e-9);
        let one_plus = 2.0 - 2.0 * 2.0f64.ln();
        assert!((p.l1_one_plus_sqrt_norm - one_plus).abs() < 1e-9);
        assert!(p.phi_norm.is_finite());
        // Kernel is bounded by phi(0+) pi, so the phi-norm is below pi here.
        assert!(p.phi_norm < core::f64::consts::PI);
    }

    #[test]
    fn profile_of_zero_function() {
        let tilt = TiltingConfig::default_exp();
        let f = Integrand1D::new(|_| 0.0);
        let p = profile_integrand(&f, &tilt).unwrap();
        assert_eq!(p.l2_norm, 0.0);
        assert_eq!(p.l1_sqrt_norm, 0.0);
        assert_eq!(p.l1_one_plus_sqrt_norm, 0.0);
        assert_eq!(p.phi_norm, 0.0);
    }

    #[test]
    fn profile_classifies_slow_log_counterexample() {
        let tilt = TiltingConfig::default_exp();
        let f = Integrand1D::new(|s: f64| {
            if s > 2.0 {
                1.0 / (s.sqrt() * s.ln())
            } else {
                0.0
            }
        });
        let p = profile_integrand(&f, &tilt).unwrap();
        // The squared norm is 1/ln 2; the far tail decays like 1/(s log^2 s),
        // so the value comes from the extrapolated polynomial-remainder stop
        // and carries a correspondingly coarser tolerance.
        let l2_sq_target = 1.0 / 2.0f64.ln();
        assert!(
            (p.l2_norm * p.l2_norm - l2_sq_target).abs() < 5e-3 * l2_sq_target,
            "l2 squared = {} vs {}",
            p.l2_norm * p.l2_norm,
            l2_sq_target
        );
        assert!(p.l1_sqrt_norm.is_infinite());
        assert!(p.l1_one_plus_sqrt_norm.is_infinite());
        assert!(p.phi_norm.is_infinite());
    }

    #[test]
    fn finite_l1_sqrt_implies_finite_one_plus() {
        let tilt = TiltingConfig::default_exp();
        let f = Integrand1D::new(|s: f64| if s >= 1.0 { 1.0 / s } else { 0.0 });
        let p = profile_integrand(&f, &tilt).unwrap();
        assert!((p.l1_sqrt_norm - 2.0).abs() < 1e-8, "got {}", p.l1_sqrt_norm);
        assert!(p.l1_one_plus_sqrt_norm.is_finite());
        assert!(p.l1_one_plus_sqrt_norm <= p.l1_sqrt_norm);
    }

    #[test]
    fn tail_weight_finite_for_positive_shift_of_origin_singular_integrand() {
        // f(s) = s^{-3/4} on (0,1): not integrable against 1/sqrt(s) at u=0,
        // but every positive shift is fine.
        let f = Integrand1D::with_support(|s: f64| libm::pow(s, -0.75), 0.0, 1.0);
        let w0 = tail_weight(&f, 0.0).unwrap();
        assert!(w0.is_infinite());
        let w = tail_weight(&f, 0.125).unwrap();
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn integrate_singular_is_linear_and_additive() {
        let g1 = Integrand1D::new(|u: f64| (1.0 + u).ln());
        let g2 = Integrand1D::new(|u: f64| (-u).exp());
        let combo = Integrand1D::new(|u: f64| 2.5 * (1.0 + u).ln() - 0.5 * (-u).exp());
        let a = 0.0;
        let b = 3.0;
        let v1 = integrate_singular(&g1, a, b, false, false).unwrap();
        let v2 = integrate_singular(&g2, a, b, false, false).unwrap();
        let vc = integrate_singular(&combo, a, b, false, false).unwrap();
        assert!((vc - (2.5 * v1 - 0.5 * v2)).abs() < 1e-10 * vc.abs().max(1.0));

        let mid = 1.3;
        let left = integrate_singular(&g1, a, mid, false, false).unwrap();
        let right = integrate_singular(&g1, mid, b, false, false).unwrap();
        assert!((v1 - (left + right)).abs() < 1e-10 * v1.abs().max(1.0));
    }
}
