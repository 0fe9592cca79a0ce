//! Adaptive Gauss-Kronrod quadrature on finite intervals, plus dyadic-block
//! evaluation of improper integrals over (0, b] and [a, +inf).
//!
//! Endpoint singularities up to 1/sqrt strength are removed by the callers in
//! the parent module via power/trigonometric substitutions before the panels
//! ever see them; the panel rule itself never evaluates at interval endpoints.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae on [0, 1] (symmetric about 0; positive half).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Embedded 7-point Gauss weights (for `XGK[1]`, `XGK[3]`, `XGK[5]`, center).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7/K15 panel. Returns the Kronrod value and an error estimate.
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::IntegrandNotFinite { at: x })
        }
    };

    let f_center = eval(center)?;
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;
    let mut res_abs = kronrod.abs();

    let mut fv = [0.0f64; 15];
    fv[7] = f_center;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = eval(center - x)?;
        let f2 = eval(center + x)?;
        fv[j] = f1;
        fv[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    res_asc *= half.abs();
    res_abs *= half.abs();

    let value = kronrod * half;
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        let t = 200.0 * err / res_asc;
        let scale = t * t.sqrt();
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

/// Relative tolerance driven to comfortably clear the 1e-8 calibration targets.
pub(crate) const REL_TOL: f64 = 1e-11;
const MAX_PANELS: usize = 4096;

/// Adaptive bisection over G7/K15 panels until the summed error estimate is
/// below `REL_TOL` relative to the accumulated value.
pub(crate) fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("quadrature needs finite a < b"));
    }
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = panel(f, a, b)?;
    let mut segs = Vec::with_capacity(32);
    segs.push(Seg { a, b, value, err });
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        if total_err <= REL_TOL * total.abs().max(1e-300) || total_err <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if segs.len() >= MAX_PANELS {
            return Err(Error::QuadratureDidNotConverge);
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a, b, .. } = segs.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // Interval at floating-point resolution; keep its estimate as is.
            let (v, _) = panel(f, a, b)?;
            segs.push(Seg { a, b, value: v, err: 0.0 });
            continue;
        }
        let (v1, e1) = panel(f, a, mid)?;
        let (v2, e2) = panel(f, mid, b)?;
        segs.push(Seg { a, b: mid, value: v1, err: e1 });
        segs.push(Seg { a: mid, b, value: v2, err: e2 });
    }
}

/// Outcome of a dyadic-block improper integral.
pub(crate) enum Improper {
    Finite(f64),
    Divergent,
}

/// Divergence gate on the fitted block-decay exponent: with blocks modeled as
/// `c_k ~ k^(-p)` in the dyadic block index `k`, `p <= 1` means divergence
/// (1/(s log s) tails give p -> 1, 1/(s log^2 s) tails give p -> 2, and any
/// power tail gives p growing linearly in k).
const DIVERGENT_EXPONENT: f64 = 1.15;
const DIVERGENT_STREAK: u32 = 8;
/// A block this small relative to the running total ends the sweep.
const BLOCK_REL_STOP: f64 = 1e-13;
/// Zero blocks needed to conclude the integrand has no further support.
const QUIET_STOP: u32 = 2;
const QUIET_STOP_EMPTY: u32 = 8;
const MAX_BLOCKS: u32 = 1100;

#[derive(Default)]
struct SweepState {
    total: f64,
    k: u32,
    prev_block: Option<f64>,
    streak: u32,
    quiet: u32,
    /// Recent decay exponents, for the polynomial-remainder stop.
    recent_p: [f64; 6],
    recent_n: usize,
}

enum Feed {
    Continue,
    Finite(f64),
    Divergent,
}

impl SweepState {
    fn feed(&mut self, block: f64) -> Feed {
        self.k += 1;
        self.total += block;
        if !self.total.is_finite() {
            return Feed::Divergent;
        }
        let block = block.abs();
        let small = block <= BLOCK_REL_STOP * self.total.abs().max(1e-300) + f64::MIN_POSITIVE;
        if small {
            self.quiet += 1;
            let needed = if self.total == 0.0 { QUIET_STOP_EMPTY } else { QUIET_STOP };
            if self.quiet >= needed {
                return Feed::Finite(self.total);
            }
        } else {
            self.quiet = 0;
        }
        if let Some(prev) = self.prev_block {
            if prev > 0.0 && block > 0.0 && self.k >= 2 {
                let idx_ratio = (self.k as f64 / (self.k as f64 - 1.0)).ln();
                let p = (prev / block).ln() / idx_ratio;
                if p <= DIVERGENT_EXPONENT {
                    self.streak += 1;
                    if self.streak >= DIVERGENT_STREAK {
                        return Feed::Divergent;
                    }
                } else {
                    self.streak = 0;
                }
                self.recent_p[self.recent_n % 6] = p;
                self.recent_n += 1;
                // Stable polynomial decay: stop and extrapolate the remainder
                // sum_{j>k} c_k (j/k)^(-p) ~ c_k k / (p - 1).
                if self.k >= 24 && self.recent_n >= 6 {
                    let lo = self.recent_p.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = self.recent_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if lo > DIVERGENT_EXPONENT && hi < 8.0 && hi - lo < 0.4 {
                        let p_bar = self.recent_p.iter().sum::<f64>() / 6.0;
                        let remainder = block * self.k as f64 / (p_bar - 1.0);
                        return Feed::Finite(self.total + remainder.copysign(self.total));
                    }
                }
            }
        }
        self.prev_block = Some(block);
        Feed::Continue
    }
}

/// Integral over [a, +inf) by ascending dyadic blocks. Callers pass
/// one-signed (absolute-value style) integrands; `upper` clips the domain.
pub(crate) fn dyadic_tail<F: Fn(f64) -> f64>(f: &F, a: f64, upper: Option<f64>) -> Result<Improper> {
    debug_assert!(a >= 0.0);
    if let Some(hi) = upper {
        if hi <= a {
            return Ok(Improper::Finite(0.0));
        }
    }
    let mut lo = a;
    // First block edge: the smallest power of two strictly above `a` (at least 1).
    let mut edge = 1.0f64;
    while edge <= lo {
        edge *= 2.0;
    }
    let mut state = SweepState::default();
    for _ in 0..MAX_BLOCKS {
        let hi = match upper {
            Some(u) => edge.min(u),
            None => edge,
        };
        let block = if hi > lo { adaptive(f, lo, hi)? } else { 0.0 };
        let clipped = upper.is_some_and(|u| hi >= u);
        match state.feed(block) {
            Feed::Finite(v) => return Ok(Improper::Finite(v)),
            Feed::Divergent => return Ok(Improper::Divergent),
            Feed::Continue => {
                if clipped {
                    return Ok(Improper::Finite(state.total));
                }
            }
        }
        lo = edge;
        edge *= 2.0;
    }
    Ok(Improper::Divergent)
}

/// Integral over (0, b] by descending dyadic blocks [b/2^{k+1}, b/2^k].
/// Detects non-integrable origin behaviour the same way `dyadic_tail` does.
pub(crate) fn dyadic_head<F: Fn(f64) -> f64>(f: &F, b: f64) -> Result<Improper> {
    debug_assert!(b > 0.0);
    let mut hi = b;
    let mut state = SweepState::default();
    for _ in 0..MAX_BLOCKS {
        let lo = hi * 0.5;
        let block = adaptive(f, lo, hi)?;
        match state.feed(block) {
            Feed::Finite(v) => return Ok(Improper::Finite(v)),
            Feed::Divergent => return Ok(Improper::Divergent),
            Feed::Continue => {}
        }
        hi = lo;
        if hi < 1e-280 {
            return Ok(Improper::Finite(state.total));
        }
    }
    Ok(Improper::Divergent)
}
