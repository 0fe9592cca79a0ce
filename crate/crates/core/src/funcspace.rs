//! Finitely supported piecewise-constant integrands: the class every Wiener
//! integral is built from, closed under shifting, truncation, windowing, the
//! bridge projection, and dyadic conditional averaging.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_singular_fn, Integrand1D};

/// A step function: value `levels[k]` on `[breaks[k], breaks[k+1])`, zero on
/// `[breaks[n], infinity)`. `breaks[0]` is always 0.
///
/// Serializes as a JSON array of `(right_endpoint, level)` pairs, so
/// `[[1.0, 1.0]]` is the indicator of `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StepFunction {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<Vec<(f64, f64)>> for StepFunction {
    type Error = Error;
    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        StepFunction::new(pairs)
    }
}

impl From<StepFunction> for Vec<(f64, f64)> {
    fn from(f: StepFunction) -> Self {
        f.breaks[1..].iter().copied().zip(f.levels.iter().copied()).collect()
    }
}

impl StepFunction {
    /// The zero function.
    pub fn zero() -> Self {
        Self { breaks: vec![0.0], levels: Vec::new() }
    }

    /// Build from `(right_endpoint, level)` pairs with strictly increasing
    /// positive endpoints; the left endpoint of the first cell is 0.
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let mut breaks = Vec::with_capacity(pairs.len() + 1);
        let mut levels = Vec::with_capacity(pairs.len());
        breaks.push(0.0);
        for (t, c) in pairs {
            if !t.is_finite() || !c.is_finite() {
                return Err(Error::InvalidArgument("step function entries must be finite"));
            }
            if t <= *breaks.last().unwrap() {
                return Err(Error::InvalidArgument(
                    "step function breakpoints must be strictly increasing and positive",
                ));
            }
            breaks.push(t);
            levels.push(c);
        }
        Ok(Self { breaks, levels }.normalized())
    }

    fn from_raw(breaks: Vec<f64>, levels: Vec<f64>) -> Self {
        debug_assert_eq!(breaks.len(), levels.len() + 1);
        debug_assert!(breaks[0] == 0.0);
        Self { breaks, levels }.normalized()
    }

    /// Merge adjacent cells with bit-identical levels and drop trailing zeros.
    fn normalized(mut self) -> Self {
        let mut w = 0usize;
        for r in 0..self.levels.len() {
            if w > 0 && self.levels[r] == self.levels[w - 1] {
                self.breaks[w] = self.breaks[r + 1];
            } else {
                self.levels[w] = self.levels[r];
                self.breaks[w + 1] = self.breaks[r + 1];
                w += 1;
            }
        }
        self.levels.truncate(w);
        self.breaks.truncate(w + 1);
        while self.levels.last() == Some(&0.0) {
            self.levels.pop();
            self.breaks.pop();
        }
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// End of the support; 0 for the zero function.
    pub fn support_end(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 || s >= self.support_end() {
            return 0.0;
        }
        // partition_point returns the first break > s; cell index is that - 1.
        let idx = self.breaks.partition_point(|&b| b <= s);
        if idx == 0 {
            0.0
        } else {
            self.levels.get(idx - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// `integral of f ds` over the support.
    pub fn integral(&self) -> f64 {
        self.cells().map(|(a, b, c)| c * (b - a)).sum()
    }

    /// `integral of f^2 ds`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.cells().map(|(a, b, c)| c * c * (b - a)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `integral of f(s)/sqrt(s) ds`, exactly `sum c_k 2(sqrt(t_k) - sqrt(t_{k-1}))`.
    pub fn integral_inv_sqrt(&self) -> f64 {
        self.cells().map(|(a, b, c)| 2.0 * c * (b.sqrt() - a.sqrt())).sum()
    }

    /// `integral of |f(s)|/(1 + sqrt(s)) ds` in closed form per cell.
    pub fn l1_one_plus_sqrt(&self) -> f64 {
        // integral of ds/(1+sqrt s) = 2 sqrt(s) - 2 ln(1 + sqrt(s))
        let prim = |s: f64| 2.0 * s.sqrt() - 2.0 * (1.0 + s.sqrt()).ln();
        self.cells().map(|(a, b, c)| c.abs() * (prim(b) - prim(a))).sum()
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.breaks[k], self.breaks[k + 1], c))
    }

    /// View as a deterministic integrand (for norm profiling).
    pub fn to_integrand(&self) -> Integrand1D {
        let f = self.clone();
        let end = self.support_end().max(f64::MIN_POSITIVE);
        Integrand1D::with_support(move |s| f.eval(s), 0.0, end)
    }

    /// Pointwise sum, on the merged breakpoint set.
    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a + b)
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> StepFunction {
        StepFunction::from_raw(self.breaks.clone(), self.levels.iter().map(|c| c * k).collect())
    }

    fn combine(&self, other: &StepFunction, op: impl Fn(f64, f64) -> f64) -> StepFunction {
        let mut breaks = Vec::with_capacity(self.breaks.len() + other.breaks.len());
        breaks.push(0.0);
        let (mut i, mut j) = (1usize, 1usize);
        while i < self.breaks.len() || j < other.breaks.len() {
            let a = self.breaks.get(i).copied().unwrap_or(f64::INFINITY);
            let b = other.breaks.get(j).copied().unwrap_or(f64::INFINITY);
            let next = a.min(b);
            if a == next {
                i += 1;
            }
            if b == next {
                j += 1;
            }
            breaks.push(next);
        }
        let levels = breaks[..breaks.len() - 1]
            .iter()
            .map(|&left| op(self.eval(left), other.eval(left)))
            .collect();
        StepFunction::from_raw(breaks, levels)
    }

    /// `s -> f(s + u)` for `u >= 0`.
    pub fn shift(&self, u: f64) -> Result<StepFunction> {
        if !(u >= 0.0) {
            return Err(Error::InvalidArgument("shift needs u >= 0"));
        }
        let mut breaks = vec![0.0];
        let mut levels = Vec::new();
        for (a, b, c) in self.cells() {
            if b <= u {
                continue;
            }
            let right = b - u;
            if a > u {
                let left = a - u;
                if left > *breaks.last().unwrap() {
                    breaks.push(left);
                    levels.push(0.0);
                }
            }
            breaks.push(right);
            levels.push(c);
        }
        Ok(StepFunction::from_raw(breaks, levels))
    }

    /// `f * 1_{[0, t)}`, inserting `t` as a breakpoint when needed.
    pub fn truncate(&self, t: f64) -> Result<StepFunction> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument("truncate needs t >= 0"));
        }
        let mut breaks = vec![0.0];
        let mut levels = Vec::new();
        for (a, b, c) in self.cells() {
            if a >= t {
                break;
            }
            breaks.push(b.min(t));
            levels.push(c);
        }
        Ok(StepFunction::from_raw(breaks, levels))
    }

    /// `f * 1_{[a, b)}`.
    pub fn window(&self, a: f64, b: f64) -> Result<StepFunction> {
        if !(0.0 <= a && a <= b) {
            return Err(Error::InvalidArgument("window needs 0 <= a <= b"));
        }
        Ok(self.truncate(b)?.sub(&self.truncate(a)?))
    }

    /// Bridge projection on `[0, u)`: subtract the mean of `f` over `[0, u)`.
    ///
    /// The result integrates to exactly zero over `[0, u)` (up to rounding)
    /// and its squared norm drops by `(integral)^2 / u`.
    pub fn project_bridge(&self, u: f64) -> Result<StepFunction> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::InvalidArgument("project_bridge needs u > 0"));
        }
        let clipped = self.truncate(u)?;
        let mean = clipped.integral() / u;
        let mut breaks = clipped.breaks.clone();
        let mut levels: Vec<f64> = clipped.levels.iter().map(|c| c - mean).collect();
        if *breaks.last().unwrap() < u {
            breaks.push(u);
            levels.push(-mean);
        }
        Ok(StepFunction::from_raw(breaks, levels))
    }

    /// The time change `M(t) = t + integral over [0, t] of f^2`, strictly
    /// increasing and piecewise linear.
    pub fn time_change_m(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument("time_change_m needs t >= 0"));
        }
        let mut acc = 0.0;
        for (a, b, c) in self.cells() {
            if t <= a {
                break;
            }
            acc += c * c * (t.min(b) - a);
        }
        Ok(t + acc)
    }

    /// Exact inverse of [`Self::time_change_m`].
    pub fn time_change_l(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument("time_change_l needs v >= 0"));
        }
        let mut m_left = 0.0;
        let mut t_left = 0.0;
        for (a, b, c) in self.cells() {
            // Gap of slope 1 before this cell.
            if a > t_left {
                let m_at_a = m_left + (a - t_left);
                if v <= m_at_a {
                    return Ok(t_left + (v - m_left));
                }
                m_left = m_at_a;
                t_left = a;
            }
            let slope = 1.0 + c * c;
            let m_at_b = m_left + slope * (b - a);
            if v <= m_at_b {
                return Ok(t_left + (v - m_left) / slope);
            }
            m_left = m_at_b;
            t_left = b;
        }
        // Beyond the support M has slope 1.
        Ok(t_left + (v - m_left))
    }
}

/// Conditional average of `f` on the dyadic mesh `2^-level` over `[0, 2^level)`.
///
/// Averages (rather than pointwise samples) converge to `f` simultaneously in
/// L2(ds) and in the weighted L1 norms for every admissible `f`.
pub fn approximate(f: &Integrand1D, level: u32) -> Result<StepFunction> {
    if level == 0 || level > 20 {
        return Err(Error::InvalidArgument("approximation level must be in 1..=20"));
    }
    let dt = libm::exp2(-(level as f64));
    let span = libm::exp2(level as f64);
    let cells = 1u64 << (2 * level);
    let (sup_lo, sup_hi) = f.support_hint().unwrap_or((0.0, f64::INFINITY));
    let mut breaks = Vec::with_capacity(64);
    let mut levels = Vec::with_capacity(64);
    breaks.push(0.0);
    for k in 0..cells {
        let a = k as f64 * dt;
        let b = (k + 1) as f64 * dt;
        debug_assert!(b <= span + 1e-9);
        let avg = if b <= sup_lo || a >= sup_hi {
            0.0
        } else {
            // Flag the origin: admissible integrands may blow up there.
            let v = integrate_singular_fn(|s| f.eval(s), a, b, k == 0, false)
                .map_err(|_| Error::NotApproximable)?;
            if !v.is_finite() {
                return Err(Error::NotApproximable);
            }
            v / dt
        };
        breaks.push(b);
        levels.push(avg);
    }
    Ok(StepFunction::from_raw(breaks, levels))
}
