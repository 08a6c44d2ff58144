//! Deterministic-seed stochastic primitives: time grids, Brownian paths and a
//! small Euler-Maruyama kernel with exact-rotation splitting.
//!
//! Everything downstream (polar integrators, couplings, spectral sweeps) builds
//! on these, so reproducibility lives here: a path is a pure function of its
//! `RngSeed` and grid, independent of thread count or call order.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Hierarchical seed: one experiment holds many streams, one stream many paths.
///
/// Distinct triples yield statistically independent generators; equal triples
/// yield bit-identical ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub experiment_id: u64,
    pub stream_id: u64,
    pub path_id: u64,
}

impl RngSeed {
    pub fn new(experiment_id: u64, stream_id: u64, path_id: u64) -> Self {
        RngSeed { experiment_id, stream_id, path_id }
    }

    pub fn with_path(&self, path_id: u64) -> Self {
        RngSeed { path_id, ..*self }
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        RngSeed { stream_id, ..*self }
    }

    /// Derive the generator for this seed.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let h0 = splitmix64(self.experiment_id.wrapping_add(0x9e37_79b9_7f4a_7c15));
        let h1 = splitmix64(h0 ^ splitmix64(self.stream_id.wrapping_add(0xbf58_476d_1ce4_e5b9)));
        let h2 = splitmix64(h1 ^ splitmix64(self.path_id.wrapping_add(0x94d0_49bb_1331_11eb)));
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(h2.wrapping_add(i as u64 + 1)).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Which coordinate the grid is (roughly) uniform in. Purely descriptive; the
/// nodes are always stored in the coordinate they were built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridCoord {
    Native,
    LogTime,
}

/// Strictly increasing time nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    pub uniform_in: GridCoord,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>, uniform_in: GridCoord) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::config("a time grid needs at least two nodes"));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::config(format!(
                    "grid nodes must be strictly increasing (got {} then {})",
                    w[0], w[1]
                )));
            }
        }
        if !nodes.iter().all(|t| t.is_finite()) {
            return Err(Error::config("grid nodes must be finite"));
        }
        Ok(TimeGrid { nodes, uniform_in })
    }

    pub fn uniform(t0: f64, t1: f64, n_steps: usize, coord: GridCoord) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::config("uniform grid needs at least one step"));
        }
        let dt = (t1 - t0) / n_steps as f64;
        let mut nodes: Vec<f64> = (0..n_steps).map(|k| t0 + k as f64 * dt).collect();
        nodes.push(t1);
        TimeGrid::new(nodes, coord)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    /// Index of the node exactly at `t`, or of the last node `<= t`.
    pub fn index_at_or_before(&self, t: f64) -> Result<usize> {
        if t < self.first() || t > self.last() {
            return Err(Error::range(format!(
                "t = {t} outside grid range [{}, {}]",
                self.first(),
                self.last()
            )));
        }
        Ok(match self.nodes.partition_point(|&x| x <= t) {
            0 => 0,
            p => p - 1,
        })
    }

    /// Index of the node nearest to `t` (for node-snapped evaluation).
    pub fn nearest_index(&self, t: f64) -> Result<usize> {
        let k = self.index_at_or_before(t)?;
        if k + 1 < self.nodes.len() && (self.nodes[k + 1] - t) < (t - self.nodes[k]) {
            Ok(k + 1)
        } else {
            Ok(k)
        }
    }

    /// Zero-node index for two-sided sampling. The grid must contain 0.
    pub fn zero_index(&self) -> Result<usize> {
        let scale = self.last().abs().max(self.first().abs()).max(1.0);
        self.nodes
            .iter()
            .position(|&t| t.abs() <= 1e-12 * scale)
            .ok_or_else(|| Error::domain("two-sided sampling needs a grid containing 0"))
    }

    /// New grid with extra nodes merged in (duplicates within 1e-12 of the
    /// span are dropped). Nodes outside [first, last] are a range error.
    pub fn with_nodes(&self, extra: &[f64]) -> Result<TimeGrid> {
        let tol = 1e-12 * (self.last() - self.first()).max(1.0);
        let mut nodes = self.nodes.clone();
        for &t in extra {
            if t < self.first() - tol || t > self.last() + tol {
                return Err(Error::range(format!(
                    "required node {t} outside grid range [{}, {}]",
                    self.first(),
                    self.last()
                )));
            }
            let p = nodes.partition_point(|&x| x < t);
            let dup = (p < nodes.len() && (nodes[p] - t).abs() <= tol)
                || (p > 0 && (t - nodes[p - 1]).abs() <= tol);
            if !dup {
                nodes.insert(p, t);
            }
        }
        TimeGrid::new(nodes, self.uniform_in)
    }
}

/// Step-size policy for `make_grid`: every gap obeys `gap <= max_step` and
/// `gap * fast_rate(left node) <= phase_cap`.
pub struct GridPolicy<'a> {
    pub max_step: f64,
    pub phase_cap: f64,
    pub fast_rate: Option<&'a dyn Fn(f64) -> f64>,
}

impl<'a> GridPolicy<'a> {
    pub fn uniform(max_step: f64) -> Self {
        GridPolicy { max_step, phase_cap: f64::INFINITY, fast_rate: None }
    }

    pub fn capped(max_step: f64, phase_cap: f64, fast_rate: &'a dyn Fn(f64) -> f64) -> Self {
        GridPolicy { max_step, phase_cap, fast_rate: Some(fast_rate) }
    }
}

const MAX_GRID_NODES: usize = 100_000_000;

/// Greedy grid construction on `[t0, t1]` under a step policy.
pub fn make_grid(t0: f64, t1: f64, policy: &GridPolicy, coord: GridCoord) -> Result<TimeGrid> {
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::config(format!("need finite t1 > t0, got [{t0}, {t1}]")));
    }
    if !(policy.max_step > 0.0) {
        return Err(Error::config("max_step must be positive"));
    }
    if !(policy.phase_cap > 0.0) {
        return Err(Error::config("phase_cap must be positive"));
    }
    let mut nodes = vec![t0];
    let mut t = t0;
    while t < t1 {
        let mut dt = policy.max_step;
        if let Some(rate) = policy.fast_rate {
            let r = rate(t);
            if !r.is_finite() || r < 0.0 {
                return Err(Error::config(format!("fast_rate({t}) = {r} is not usable")));
            }
            if r > 0.0 && policy.phase_cap.is_finite() {
                dt = dt.min(policy.phase_cap / r);
            }
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config(format!("phase cap unattainable at t = {t}")));
        }
        // Snap to the endpoint once the remaining gap fits in ~one step.
        if t + 1.5 * dt >= t1 {
            let remaining = t1 - t;
            if remaining > dt * (1.0 + 1e-9) {
                // Split the tail evenly so no gap exceeds dt.
                let mid = t + 0.5 * remaining;
                nodes.push(mid);
            }
            nodes.push(t1);
            break;
        }
        t += dt;
        nodes.push(t);
        if nodes.len() > MAX_GRID_NODES {
            return Err(Error::config(
                "phase cap unattainable: grid would exceed the node budget",
            ));
        }
    }
    TimeGrid::new(nodes, coord)
}

/// Logarithmic time `s = -log(1 - c t)`, the bijection `[0, 1/c) -> [0, inf)`.
pub fn log_time(t: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("log_time needs c > 0, got {c}")));
    }
    let ct = c * t;
    if ct >= 1.0 {
        return Err(Error::domain(format!("log_time undefined at c*t = {ct} >= 1")));
    }
    Ok(-(-ct).ln_1p())
}

/// Inverse of `log_time`: `t = (1 - e^{-s})/c`.
pub fn log_time_inverse(s: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("log_time_inverse needs c > 0, got {c}")));
    }
    Ok(-(-s).exp_m1() / c)
}

/// Scalar path sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl RealPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "path has {} values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(RealPath { grid, values })
    }

    pub fn increment(&self, k: usize) -> f64 {
        self.values[k + 1] - self.values[k]
    }

    /// Linear interpolation; times outside the grid are a range error.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let k = self.grid.index_at_or_before(t)?;
        if k + 1 == self.grid.len() {
            return Ok(self.values[k]);
        }
        let (t0, t1) = (self.grid.nodes()[k], self.grid.nodes()[k + 1]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[k] * (1.0 - w) + self.values[k + 1] * w)
    }
}

/// Complex path; real and imaginary parts are independent components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPath {
    pub grid: TimeGrid,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexPath {
    pub fn value(&self, k: usize) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re[k], self.im[k])
    }

    pub fn re_path(&self) -> RealPath {
        RealPath { grid: self.grid.clone(), values: self.re.clone() }
    }

    pub fn im_path(&self) -> RealPath {
        RealPath { grid: self.grid.clone(), values: self.im.clone() }
    }
}

/// Standard Brownian motion on the grid, pinned to 0 at the grid start, or at
/// the zero node when `two_sided` is set (the two halves are independent).
pub fn sample_brownian(seed: &RngSeed, grid: &TimeGrid, two_sided: bool) -> Result<RealPath> {
    let mut rng = seed.rng();
    let n = grid.len();
    let mut values = vec![0.0; n];
    if !two_sided {
        for k in 0..n - 1 {
            let z: f64 = rng.sample(StandardNormal);
            values[k + 1] = values[k] + grid.step(k).sqrt() * z;
        }
    } else {
        let zero = grid.zero_index()?;
        for k in zero..n - 1 {
            let z: f64 = rng.sample(StandardNormal);
            values[k + 1] = values[k] + grid.step(k).sqrt() * z;
        }
        for k in (0..zero).rev() {
            let z: f64 = rng.sample(StandardNormal);
            values[k] = values[k + 1] + grid.step(k).sqrt() * z;
        }
    }
    RealPath::new(grid.clone(), values)
}

/// Standard complex Brownian motion: independent real and imaginary parts.
pub fn sample_complex_brownian(seed: &RngSeed, grid: &TimeGrid) -> Result<ComplexPath> {
    let mut rng = seed.rng();
    let n = grid.len();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n - 1 {
        let sq = grid.step(k).sqrt();
        let zr: f64 = rng.sample(StandardNormal);
        let zi: f64 = rng.sample(StandardNormal);
        re[k + 1] = re[k] + sq * zr;
        im[k + 1] = im[k] + sq * zi;
    }
    Ok(ComplexPath { grid: grid.clone(), re, im })
}

/// Exact per-step update for a separated fast rotation: maps the state across
/// `[t0, t1]` using the closed-form integral of the rotation rate.
pub type Rotation<'a, const N: usize> = &'a dyn Fn(f64, f64, &[f64; N]) -> [f64; N];

/// Euler-Maruyama with optional exact-rotation splitting.
///
/// Per step: `x <- rotation(t_k, t_{k+1}, x + drift(t_k, x) dt + sum_m
/// diffusion_m(t_k, x) dW_m)`. The `M` noise components are read as increments
/// of the supplied paths, which must live on the integration grid.
pub fn integrate_sde<const N: usize, const M: usize>(
    drift: impl Fn(f64, &[f64; N]) -> [f64; N],
    diffusion: impl Fn(f64, &[f64; N]) -> [[f64; N]; M],
    rotation: Option<Rotation<'_, N>>,
    init: [f64; N],
    grid: &TimeGrid,
    noise: [&RealPath; M],
) -> Result<Vec<[f64; N]>> {
    for path in noise.iter() {
        if path.grid.nodes() != grid.nodes() {
            return Err(Error::config("noise path grid differs from integration grid"));
        }
    }
    let n = grid.len();
    let mut states = Vec::with_capacity(n);
    states.push(init);
    let mut x = init;
    for k in 0..n - 1 {
        let t = grid.nodes()[k];
        let dt = grid.step(k);
        let a = drift(t, &x);
        let b = diffusion(t, &x);
        let mut next = x;
        for i in 0..N {
            next[i] += a[i] * dt;
        }
        for (m, path) in noise.iter().enumerate() {
            let dw = path.increment(k);
            for i in 0..N {
                next[i] += b[m][i] * dw;
            }
        }
        if let Some(rot) = rotation {
            next = rot(t, grid.nodes()[k + 1], &next);
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                t: grid.nodes()[k + 1],
                message: "state became non-finite".into(),
            });
        }
        x = next;
        states.push(x);
    }
    Ok(states)
}
