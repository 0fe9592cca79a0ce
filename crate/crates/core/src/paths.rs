//! Seeded simulation of Brownian motion, Brownian bridge and the
//! three-dimensional Bessel process on discrete time grids, together with the
//! path operations (sign flip, concatenation, shift, last exit from zero)
//! that assemble the concatenated measure's samples.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A strictly increasing time mesh starting at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    /// Nominal uniform spacing the grid was built from, if any; survives node
    /// insertion as a resolution descriptor.
    dt_hint: Option<f64>,
}

impl TimeGrid {
    /// Uniform grid over `[0, span]` with spacing `dt` (span must be an
    /// integer multiple of dt; dyadic spacings keep every node exact).
    pub fn uniform(span: f64, dt: f64) -> Result<Self> {
        if !(span > 0.0) || !(dt > 0.0) || !span.is_finite() || !dt.is_finite() {
            return Err(Error::InvalidArgument("grid span and dt must be positive"));
        }
        let steps = (span / dt).round();
        if steps < 1.0 || (steps * dt - span).abs() > 1e-9 * span {
            return Err(Error::InvalidArgument("span must be a multiple of dt"));
        }
        let n = steps as usize;
        let mut times = Vec::with_capacity(n + 1);
        for i in 0..n {
            times.push(i as f64 * dt);
        }
        times.push(span);
        Ok(Self { times, dt_hint: Some(dt) })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::InvalidArgument("grid must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidArgument("grid times must be strictly increasing and finite"));
        }
        Ok(Self { times, dt_hint: None })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dt_hint(&self) -> Option<f64> {
        self.dt_hint
    }

    /// Index of `t` if it is a node (bitwise match).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let idx = self.times.partition_point(|&x| x < t);
        (self.times.get(idx) == Some(&t)).then_some(idx)
    }

    /// Grid with `t` inserted as a node (no-op when already present).
    pub fn with_node(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || t > self.span() {
            return Err(Error::InvalidArgument("inserted node must lie in (0, span]"));
        }
        let mut times = self.times.clone();
        let idx = times.partition_point(|&x| x < t);
        if times[idx] != t {
            times.insert(idx, t);
        }
        Ok(Self { times, dt_hint: self.dt_hint })
    }

    /// Split at node `u` into the head grid `[0, u]` and the tail grid
    /// `[0, span - u]` (tail times are `t - u` for original nodes `t >= u`).
    pub fn split_at(&self, u: f64) -> Result<(TimeGrid, TimeGrid)> {
        let idx = self.index_of(u).ok_or(Error::NotAGridNode { t: u })?;
        if idx == 0 || idx + 1 == self.times.len() {
            return Err(Error::InvalidArgument("split point must be interior"));
        }
        let head = Self { times: self.times[..=idx].to_vec(), dt_hint: self.dt_hint };
        let mut tail_times = Vec::with_capacity(self.times.len() - idx);
        tail_times.push(0.0);
        for &t in &self.times[idx + 1..] {
            tail_times.push(t - u);
        }
        let tail = Self { times: tail_times, dt_hint: self.dt_hint };
        Ok((head, tail))
    }
}

/// Path values on a grid, interpreted piecewise-linearly between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidArgument("values must match grid length"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn span(&self) -> f64 {
        self.grid.span()
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Value at `t`, with the flag telling whether `t` was an exact node.
    /// `t` must lie in `[0, span]`.
    pub fn lookup(&self, t: f64) -> (f64, bool) {
        let times = self.grid.times();
        debug_assert!(t >= 0.0 && t <= self.span());
        let idx = times.partition_point(|&x| x < t);
        if times.get(idx) == Some(&t) {
            return (self.values[idx], true);
        }
        let (t0, t1) = (times[idx - 1], times[idx]);
        let w = (t - t0) / (t1 - t0);
        (self.values[idx - 1] * (1.0 - w) + self.values[idx] * w, false)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.lookup(t).0
    }

    /// Values at every mesh time in one linear sweep; `mesh` must be sorted
    /// and contained in `[0, span]`.
    pub fn values_on_mesh(&self, mesh: &[f64]) -> Vec<f64> {
        let times = self.grid.times();
        let mut out = Vec::with_capacity(mesh.len());
        let mut idx = 0usize;
        for &t in mesh {
            while times[idx] < t {
                idx += 1;
            }
            if times[idx] == t {
                out.push(self.values[idx]);
            } else {
                let (t0, t1) = (times[idx - 1], times[idx]);
                let w = (t - t0) / (t1 - t0);
                out.push(self.values[idx - 1] * (1.0 - w) + self.values[idx] * w);
            }
        }
        out
    }
}

/// Root seed plus stream index; distinct pairs give independent ChaCha streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        Self { root_seed, stream_index }
    }

    pub fn with_stream(self, stream_index: u64) -> Self {
        Self { stream_index, ..self }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Fair sign for the symmetrized Bessel tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidArgument("sign must be +1 or -1")),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// A bridge path together with the Brownian motion that realized it, kept so
/// the projection identity can be replayed pathwise.
#[derive(Clone, Debug)]
pub struct BridgeSample {
    pub path: SamplePath,
    pub generator: Option<SamplePath>,
}

pub(crate) fn sample_bm_with<R: Rng + ?Sized>(grid: &TimeGrid, rng: &mut R) -> SamplePath {
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    let mut x = 0.0f64;
    values.push(x);
    for w in times.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        x += (w[1] - w[0]).sqrt() * z;
        values.push(x);
    }
    SamplePath { grid: grid.clone(), values }
}

/// Standard Brownian motion: partial sums of independent centered Gaussian
/// increments with variance matching each grid step.
pub fn sample_bm(grid: &TimeGrid, seed: SeedSpec) -> SamplePath {
    sample_bm_with(grid, &mut seed.rng())
}

pub(crate) fn sample_bridge_with<R: Rng + ?Sized>(
    u: f64,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<BridgeSample> {
    if !(u > 0.0) {
        return Err(Error::InvalidArgument("bridge length must be positive"));
    }
    if grid.span() != u {
        return Err(Error::InvalidArgument("bridge grid must span exactly [0, u]"));
    }
    let bm = sample_bm_with(grid, rng);
    let b_end = bm.end_value();
    let values = grid
        .times()
        .iter()
        .zip(bm.values())
        .map(|(&t, &b)| b - (t / u) * b_end)
        .collect();
    let path = SamplePath { grid: grid.clone(), values };
    Ok(BridgeSample { path, generator: Some(bm) })
}

/// Brownian bridge from 0 to 0 of length `u`, realized as `B_s - (s/u) B_u`
/// from a single Brownian draw (terminal value exactly 0). The generating
/// Brownian path is retained.
pub fn sample_bridge(u: f64, grid: &TimeGrid, seed: SeedSpec) -> Result<BridgeSample> {
    sample_bridge_with(u, grid, &mut seed.rng())
}

pub(crate) fn sample_bessel3_with<R: Rng + ?Sized>(grid: &TimeGrid, rng: &mut R) -> SamplePath {
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    let (mut x, mut y, mut z) = (0.0f64, 0.0f64, 0.0f64);
    values.push(0.0);
    for w in times.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let gz: f64 = rng.sample(StandardNormal);
        x += sd * gx;
        y += sd * gy;
        z += sd * gz;
        values.push((x * x + y * y + z * z).sqrt());
    }
    SamplePath { grid: grid.clone(), values }
}

/// Three-dimensional Bessel process from 0, simulated as the norm of a
/// three-dimensional Brownian motion (exact finite-dimensional marginals; no
/// drift singularity to integrate through).
pub fn sample_bessel3(grid: &TimeGrid, seed: SeedSpec) -> SamplePath {
    sample_bessel3_with(grid, &mut seed.rng())
}

/// Multiply all values by the sign.
pub fn symmetrize(path: &SamplePath, sign: Sign) -> SamplePath {
    match sign {
        Sign::Plus => path.clone(),
        Sign::Minus => SamplePath {
            grid: path.grid.clone(),
            values: path.values.iter().map(|v| -v).collect(),
        },
    }
}

/// Concatenation of `head` on `[0, u]` with `tail` started at `u`: follows
/// the time-shifted tail when `head(u) == tail(0)` and otherwise freezes at
/// `head(u)` forever.
pub fn concat(head: &SamplePath, tail: &SamplePath) -> SamplePath {
    let u = head.span();
    let mut times = head.grid.times().to_vec();
    let mut values = head.values.clone();
    if head.end_value() == tail.values[0] {
        for (&t, &v) in tail.grid.times().iter().zip(tail.values()).skip(1) {
            times.push(u + t);
            values.push(v);
        }
    } else {
        let frozen = head.end_value();
        for &t in tail.grid.times().iter().skip(1) {
            times.push(u + t);
            values.push(frozen);
        }
    }
    SamplePath {
        grid: TimeGrid { times, dt_hint: head.grid.dt_hint },
        values,
    }
}

/// The shifted path `s -> X_{u+s}`; `u` must be a grid node.
pub fn shift_path(path: &SamplePath, u: f64) -> Result<SamplePath> {
    if u == 0.0 {
        return Ok(path.clone());
    }
    let idx = path.grid.index_of(u).ok_or(Error::NotAGridNode { t: u })?;
    let times = path.grid.times()[idx..].iter().map(|&t| t - u).collect();
    let values = path.values[idx..].to_vec();
    Ok(SamplePath {
        grid: TimeGrid { times, dt_hint: path.grid.dt_hint },
        values,
    })
}

/// Last exit from 0 before `horizon`: the linearly interpolated zero in the
/// last grid cell (ending at or before `horizon`) whose endpoint values change
/// sign or touch zero. Returns 0 when the path never revisits zero.
pub fn last_exit(path: &SamplePath, horizon: f64) -> f64 {
    let times = path.grid.times();
    let n_cells = times.partition_point(|&t| t <= horizon).saturating_sub(1);
    for k in (0..n_cells).rev() {
        let (v0, v1) = (path.values[k], path.values[k + 1]);
        if v1 == 0.0 {
            return times[k + 1];
        }
        if v0 == 0.0 {
            return times[k];
        }
        if (v0 < 0.0) != (v1 < 0.0) {
            let w = v0 / (v0 - v1);
            return times[k] + w * (times[k + 1] - times[k]);
        }
    }
    0.0
}
