//! Coupling of the Bessel driving noise to a complex Brownian motion, and the
//! comparison statistics that quantify how fast the hard-edge phase functions
//! ride that coupled motion into the bulk.
//!
//! The construction partitions the shifted native interval into blocks of
//! equal log-time length `sigma^2`, integrates the rotating noise
//! `i e^{-2i theta} sqrt(2c/(1-cs)) dB` over each block, whitens the block
//! integral by its exact covariance, and rotates by the g-phase at the block's
//! left endpoint. The resulting complex increments are iid `CN(0, sigma^2 I)`
//! by construction; their cumulative sums pin a complex Brownian motion that
//! is extended between pins with independent bridges.

use num_complex::Complex64;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_PI_2;

use crate::bessel::{BesselParams, GridOptions, PolarPair, ShiftParams};
use crate::bessel::{bessel_time_grid, FundamentalPair};
use crate::error::{Error, Result};
use crate::linalg::Sym2;
use crate::stochastic::{log_time, log_time_inverse, ComplexPath, GridCoord, RealPath, RngSeed, TimeGrid};

/// Exponents of the coupling window and its error budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouplingConfig {
    /// Window exponent: statistics run over c t <= 1 - E^{-1/2+alpha}.
    pub alpha: f64,
    /// Slack exponent in the decay rates.
    pub delta: f64,
}

impl CouplingConfig {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::config(format!("coupling alpha = {alpha} must lie in (0, 1/2)")));
        }
        if !(delta > 0.0 && delta < alpha / 3.0) {
            return Err(Error::config(format!(
                "coupling delta = {delta} must lie in (0, alpha/3) = (0, {})",
                alpha / 3.0
            )));
        }
        Ok(CouplingConfig { alpha, delta })
    }

    /// Block-length exponent p = 2 alpha / 3; blocks have log-time length
    /// log(1 + E^{-p}).
    pub fn p(&self) -> f64 {
        2.0 * self.alpha / 3.0
    }

    /// Right end of the comparison window in log time: (1/2 - alpha) log E.
    pub fn s_window(&self, shift: &ShiftParams) -> f64 {
        (0.5 - self.alpha) * shift.log_e
    }
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { alpha: 0.3, delta: 0.05 }
    }
}

/// Guard against pathological partitions at extreme E.
const MAX_INTERVALS: f64 = 2e7;

/// The block partition of `[0, tau_E]` used by the coupling, together with
/// the deterministic rotation phase.
#[derive(Debug, Clone)]
pub struct CouplingPartition {
    /// Native-time block boundaries, t[0] = 0, t[N] = tau_E.
    pub t: Vec<f64>,
    /// Log-time block boundaries s_j = j sigma^2, last forced to (log E)/2.
    pub s: Vec<f64>,
    /// Common block variance sigma^2 = log(1 + E^{-p}).
    pub sigma2: f64,
    /// Variance of the final, shorter block.
    pub sigma2_last: f64,
    /// Edge scaling c_E of the shift.
    pub c: f64,
    two_c_sqrt_e: f64,
}

impl CouplingPartition {
    /// Number of blocks N.
    pub fn n(&self) -> usize {
        self.t.len() - 1
    }

    /// Deterministic phase theta(t) = pi/2 - 2 c sqrt(E) t.
    pub fn theta(&self, t: f64) -> f64 {
        FRAC_PI_2 - self.two_c_sqrt_e * t
    }

    /// Variance of block j (1-based); the final block carries the remainder.
    pub fn block_sigma2(&self, j: usize) -> f64 {
        if j == self.n() { self.sigma2_last } else { self.sigma2 }
    }
}

/// Build the coupling partition c t_j = 1 - (1 + E^{-p})^{-j} with the last
/// node forced to tau_E.
pub fn coupling_partition(shift: &ShiftParams, config: &CouplingConfig) -> Result<CouplingPartition> {
    let q = (-config.p() * shift.log_e).exp();
    let sigma2 = q.ln_1p();
    let n_real = shift.log_e / (2.0 * sigma2);
    if !(n_real < MAX_INTERVALS) {
        return Err(Error::config(format!(
            "coupling partition needs {n_real:.3e} blocks at E = {}; raise alpha",
            shift.e
        )));
    }
    let n = n_real.ceil() as usize;
    let n = n.max(1);
    let mut t = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    t.push(0.0);
    s.push(0.0);
    for j in 1..n {
        let sj = j as f64 * sigma2;
        // Same map the grid builder uses, so partition nodes land on grid
        // nodes bit-exactly when passed as required pins.
        t.push(log_time_inverse(sj, shift.c)?);
        s.push(sj);
    }
    t.push(shift.tau);
    s.push(0.5 * shift.log_e);
    let sigma2_last = 0.5 * shift.log_e - (n - 1) as f64 * sigma2;
    debug_assert!(sigma2_last > 0.0);
    Ok(CouplingPartition {
        t,
        s,
        sigma2,
        sigma2_last,
        c: shift.c,
        two_c_sqrt_e: 2.0 * shift.c * shift.sqrt_e,
    })
}

/// Native grid for a coupled run: the usual Bessel grid refined by the
/// partition's log-time pins. `s_max` defaults to (log E)/2 and must not be
/// smaller than it.
pub fn coupling_time_grid(
    shift: &ShiftParams,
    partition: &CouplingPartition,
    opts: &GridOptions,
    s_max: Option<f64>,
) -> Result<TimeGrid> {
    let s_end = s_max.unwrap_or(0.5 * shift.log_e);
    if s_end < 0.5 * shift.log_e {
        return Err(Error::config(format!(
            "coupling grid horizon s_max = {s_end} must reach (log E)/2 = {}",
            0.5 * shift.log_e
        )));
    }
    bessel_time_grid(shift, opts, s_end, &partition.s)
}

/// One block of the coupling: the rotated noise integral, its exact
/// covariance, and the whitened complex increment.
#[derive(Debug, Clone)]
pub struct CouplingInterval {
    /// Block index, 1-based.
    pub j: usize,
    /// Ito sum of i e^{-2i theta} sqrt(2c/(1-cs)) dB over the block.
    pub b_theta: Complex64,
    /// Exact covariance of (Re, Im) of `b_theta` on the fine grid.
    pub sigma_mat: Sym2,
    /// Target variance sigma^2 of the block.
    pub sigma2: f64,
    /// The whitened, rotated increment W_j ~ CN(0, sigma^2 I).
    pub w: Complex64,
}

/// The coupled pair: the native Brownian path and the complex Brownian motion
/// built from it, pinned at the partition's log-times.
#[derive(Debug, Clone)]
pub struct CoupledNoise {
    /// The driving native Brownian motion B_E.
    pub b_e: RealPath,
    /// The coupled complex Brownian motion W on the log-time grid.
    pub w: ComplexPath,
    /// Per-block records.
    pub intervals: Vec<CouplingInterval>,
    pub partition: CouplingPartition,
    /// Fine-grid indices of the partition nodes.
    pub pin_indices: Vec<usize>,
}

impl CoupledNoise {
    /// W at the j-th pin (cumulative sum of the block increments).
    pub fn pin_value(&self, j: usize) -> Complex64 {
        self.w.value(self.pin_indices[j])
    }
}

fn locate_pins(s_nodes: &[f64], pins: &[f64]) -> Result<Vec<usize>> {
    let span = s_nodes.last().copied().unwrap_or(1.0).max(1.0);
    let tol = 1e-9 * span;
    let mut out = Vec::with_capacity(pins.len());
    for &p in pins {
        let k = match s_nodes.binary_search_by(|v| v.partial_cmp(&p).unwrap()) {
            Ok(k) => k,
            Err(k) => {
                let before = k.checked_sub(1).filter(|&i| (s_nodes[i] - p).abs() <= tol);
                let after = (k < s_nodes.len() && (s_nodes[k] - p).abs() <= tol).then_some(k);
                match before.or(after) {
                    Some(k) => k,
                    None => {
                        return Err(Error::config(format!(
                            "partition pin s = {p} is not a grid node; build the grid with coupling_time_grid"
                        )))
                    }
                }
            }
        };
        out.push(k);
    }
    Ok(out)
}

/// Build the coupled complex Brownian motion from a native Brownian path and
/// the g-phase it drives.
///
/// `seed_fill` seeds the independent Brownian bridges between pins; `None`
/// freezes the bridges at their conditional mean, which is the right control
/// when the driving increments themselves vanish.
pub fn build_coupled_w(
    b_e: &RealPath,
    xi_g: &RealPath,
    partition: &CouplingPartition,
    shift: &ShiftParams,
    seed_fill: Option<&RngSeed>,
) -> Result<CoupledNoise> {
    if xi_g.grid != b_e.grid {
        return Err(Error::config("coupling needs xi_g and B_E on the same grid"));
    }
    let t_nodes = b_e.grid.nodes();
    let n_nodes = t_nodes.len();
    let mut s_nodes = Vec::with_capacity(n_nodes);
    for &t in t_nodes {
        s_nodes.push(log_time(t, shift.c)?);
    }
    let pin_indices = locate_pins(&s_nodes, &partition.s)?;

    // Block integrals with their exact discrete covariances. The covariance
    // of a left-point Ito sum against independent Gaussian increments is the
    // matching left-point quadrature of the outer product of the integrand,
    // so the whitened increment is exactly standard normal at any step size.
    let n_blocks = partition.n();
    let mut intervals = Vec::with_capacity(n_blocks);
    let mut pin_w = Vec::with_capacity(n_blocks + 1);
    pin_w.push(Complex64::new(0.0, 0.0));
    for j in 1..=n_blocks {
        let (ka, kb) = (pin_indices[j - 1], pin_indices[j]);
        let mut b_theta = Complex64::new(0.0, 0.0);
        let mut cov = Sym2::ZERO;
        for k in ka..kb {
            // i e^{-2i theta} = sin 2theta + i cos 2theta.
            let (sin2t, cos2t) = (2.0 * partition.theta(t_nodes[k])).sin_cos();
            let g2 = 2.0 * shift.c * s_nodes[k].exp();
            let g = g2.sqrt();
            let db = b_e.values[k + 1] - b_e.values[k];
            b_theta += Complex64::new(sin2t * g * db, cos2t * g * db);
            let dt = t_nodes[k + 1] - t_nodes[k];
            cov = cov.add(&Sym2::new(
                sin2t * sin2t * g2 * dt,
                sin2t * cos2t * g2 * dt,
                cos2t * cos2t * g2 * dt,
            ));
        }
        let white = cov.inv_sqrt().ok_or_else(|| Error::Coupling {
            j,
            message: format!("block covariance is numerically singular (det = {:.3e})", cov.det()),
        })?;
        let v = [
            white.a * b_theta.re + white.b * b_theta.im,
            white.b * b_theta.re + white.d * b_theta.im,
        ];
        let sigma2 = partition.block_sigma2(j);
        let sigma = sigma2.sqrt();
        let ang = -2.0 * (xi_g.values[ka] - partition.theta(t_nodes[ka]));
        let rot = Complex64::new(ang.cos(), ang.sin());
        let w = rot * Complex64::new(sigma * v[0], sigma * v[1]);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::Coupling { j, message: "block increment is not finite".to_string() });
        }
        pin_w.push(pin_w[j - 1] + w);
        intervals.push(CouplingInterval { j, b_theta, sigma_mat: cov, sigma2, w });
    }

    // Fill between pins with independent complex Brownian bridges, sampled
    // sequentially from the conditional law given the right pin.
    let mut rng = seed_fill.map(|s| s.rng());
    let draw = |rng: &mut Option<rand_chacha::ChaCha12Rng>| -> f64 {
        match rng {
            Some(r) => rand::Rng::sample(r, StandardNormal),
            None => 0.0,
        }
    };
    let mut re = vec![0.0; n_nodes];
    let mut im = vec![0.0; n_nodes];
    for j in 1..=n_blocks {
        let (ka, kb) = (pin_indices[j - 1], pin_indices[j]);
        let wb = pin_w[j];
        let mut cur = pin_w[j - 1];
        let mut s_cur = s_nodes[ka];
        for k in ka + 1..kb {
            let denom = s_nodes[kb] - s_cur;
            let dt = s_nodes[k] - s_cur;
            let frac = dt / denom;
            let var = dt * (s_nodes[kb] - s_nodes[k]) / denom;
            let sd = var.max(0.0).sqrt();
            let zr = draw(&mut rng);
            let zi = draw(&mut rng);
            cur = Complex64::new(
                cur.re + frac * (wb.re - cur.re) + sd * zr,
                cur.im + frac * (wb.im - cur.im) + sd * zi,
            );
            re[k] = cur.re;
            im[k] = cur.im;
            s_cur = s_nodes[k];
        }
        re[kb] = wb.re;
        im[kb] = wb.im;
    }
    // Past the last pin (extended horizons): free Brownian continuation.
    let last_pin = *pin_indices.last().expect("partition has nodes");
    for k in last_pin..n_nodes - 1 {
        let sd = (s_nodes[k + 1] - s_nodes[k]).sqrt();
        re[k + 1] = re[k] + sd * draw(&mut rng);
        im[k + 1] = im[k] + sd * draw(&mut rng);
    }

    let w_grid = TimeGrid::new(s_nodes, GridCoord::LogTime)?;
    let w = ComplexPath { grid: w_grid, re, im };
    Ok(CoupledNoise { b_e: b_e.clone(), w, intervals, partition: partition.clone(), pin_indices })
}

/// Cumulative Ito sums of int_0^t i e^{-2i xi(s)} sqrt(2c/(1-cs)) dB_E(s) on
/// every grid node.
pub fn oscillatory_path(xi: &RealPath, b_e: &RealPath, shift: &ShiftParams) -> Result<ComplexPath> {
    if xi.grid != b_e.grid {
        return Err(Error::config("oscillatory integral needs xi and B_E on the same grid"));
    }
    let t_nodes = b_e.grid.nodes();
    let n = t_nodes.len();
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut s_prev = 0.0;
    for k in 0..n - 1 {
        let s = if k == 0 { log_time(t_nodes[0], shift.c)? } else { s_prev };
        let (sin2x, cos2x) = (2.0 * xi.values[k]).sin_cos();
        let g = (2.0 * shift.c * s.exp()).sqrt();
        let db = b_e.values[k + 1] - b_e.values[k];
        re[k + 1] = re[k] + sin2x * g * db;
        im[k + 1] = im[k] + cos2x * g * db;
        s_prev = log_time(t_nodes[k + 1], shift.c)?;
    }
    Ok(ComplexPath { grid: b_e.grid.clone(), re, im })
}

/// The oscillatory integral at time `t` (nearest grid node at or before it).
pub fn oscillatory_integral(
    xi: &RealPath,
    b_e: &RealPath,
    shift: &ShiftParams,
    t: f64,
) -> Result<Complex64> {
    let path = oscillatory_path(xi, b_e, shift)?;
    let k = path.grid.index_at_or_before(t)?;
    Ok(path.value(k))
}

/// Sup over the alpha-window of the distance between the oscillatory integral
/// and the coupled Brownian motion read at matching log-times.
pub fn deviation_sup(
    coupled: &CoupledNoise,
    xi_g: &RealPath,
    shift: &ShiftParams,
    config: &CouplingConfig,
) -> Result<f64> {
    let osc = oscillatory_path(xi_g, &coupled.b_e, shift)?;
    let s_end = config.s_window(shift);
    let s_nodes = coupled.w.grid.nodes();
    let mut sup = 0.0f64;
    for k in 0..s_nodes.len() {
        if s_nodes[k] > s_end + 1e-12 {
            break;
        }
        sup = sup.max((osc.value(k) - coupled.w.value(k)).norm());
    }
    Ok(sup)
}

/// Sup over `t <= window_end` of |int_0^t e^{ik xi} c/(1-cs) ds|, by
/// phase-midpoint quadrature with exact log-time weights.
pub fn averaging_sup(
    xi: &RealPath,
    harmonic: i32,
    shift: &ShiftParams,
    window_end: f64,
) -> Result<f64> {
    if harmonic == 0 {
        return Err(Error::domain("averaging needs a nonzero harmonic"));
    }
    if window_end > shift.tau * (1.0 + 1e-12) {
        return Err(Error::range(format!(
            "averaging window end {window_end} exceeds tau = {}",
            shift.tau
        )));
    }
    let t_nodes = xi.grid.nodes();
    let k_end = xi.grid.index_at_or_before(window_end)?;
    let kh = f64::from(harmonic);
    let mut cum = Complex64::new(0.0, 0.0);
    let mut sup = 0.0f64;
    let mut s_prev = log_time(t_nodes[0], shift.c)?;
    for k in 0..k_end {
        let s_next = log_time(t_nodes[k + 1], shift.c)?;
        let phase = kh * 0.5 * (xi.values[k] + xi.values[k + 1]);
        let (sp, cp) = phase.sin_cos();
        let ds = s_next - s_prev;
        cum += Complex64::new(cp * ds, sp * ds);
        s_prev = s_next;
        sup = sup.max(cum.norm());
    }
    Ok(sup)
}

/// The geometric Brownian motion read off the coupled W:
/// Z(t) = exp((2/sqrt(beta)) Im W(s) - (2/beta) s) at s = -log(1-ct).
#[derive(Debug, Clone)]
pub struct GbmReference {
    /// Z on the native grid.
    pub z: RealPath,
}

pub fn gbm_reference(coupled: &CoupledNoise, params: &BesselParams) -> Result<GbmReference> {
    let amp = params.noise_amp();
    let decay = if params.beta.is_finite() { 2.0 / params.beta } else { 0.0 };
    let s_nodes = coupled.w.grid.nodes();
    let mut z = Vec::with_capacity(s_nodes.len());
    for k in 0..s_nodes.len() {
        z.push((amp * coupled.w.im[k] - decay * s_nodes[k]).exp());
    }
    RealPath::new(coupled.b_e.grid.clone(), z).map(|z| GbmReference { z })
}

/// Sup statistics comparing the g-radius to the geometric Brownian motion.
#[derive(Debug, Clone, Copy)]
pub struct GbmCompare {
    /// sup |2 rho_g + log Z| over the alpha-window.
    pub sup_log: f64,
    /// sup |e^{-2 rho_g} - Z| over the alpha-window.
    pub sup_lin: f64,
}

pub fn gbm_compare(
    pair_g: &PolarPair,
    coupled: &CoupledNoise,
    params: &BesselParams,
    shift: &ShiftParams,
    config: &CouplingConfig,
) -> Result<GbmCompare> {
    if pair_g.t_grid != coupled.b_e.grid {
        return Err(Error::config("gbm comparison needs the pair on the coupled grid"));
    }
    let amp = params.noise_amp();
    let decay = if params.beta.is_finite() { 2.0 / params.beta } else { 0.0 };
    let s_end = config.s_window(shift);
    let s_nodes = coupled.w.grid.nodes();
    let mut sup_log = 0.0f64;
    let mut sup_lin = 0.0f64;
    for k in 0..s_nodes.len() {
        if s_nodes[k] > s_end + 1e-12 {
            break;
        }
        let log_z = amp * coupled.w.im[k] - decay * s_nodes[k];
        sup_log = sup_log.max((2.0 * pair_g.rho[k] + log_z).abs());
        sup_lin = sup_lin.max(((-2.0 * pair_g.rho[k]).exp() - log_z.exp()).abs());
    }
    Ok(GbmCompare { sup_log, sup_lin })
}

/// Sup over the alpha-window of the distance between -e^{-delta rho} cos(delta
/// xi) and the Ito integral (2/sqrt(beta)) int Z d(Re W), the real part of the
/// limiting hyperbolic Brownian motion.
pub fn rehbm_compare(
    pairs: &FundamentalPair,
    coupled: &CoupledNoise,
    shift: &ShiftParams,
    config: &CouplingConfig,
) -> Result<f64> {
    if *pairs.t_grid() != coupled.b_e.grid {
        return Err(Error::config("rehbm comparison needs the pair on the coupled grid"));
    }
    let amp = pairs.params.noise_amp();
    let decay = if pairs.params.beta.is_finite() { 2.0 / pairs.params.beta } else { 0.0 };
    let s_end = config.s_window(shift);
    let s_nodes = coupled.w.grid.nodes();
    let mut cum = 0.0f64;
    let mut sup = 0.0f64;
    for k in 0..s_nodes.len() {
        if s_nodes[k] > s_end + 1e-12 {
            break;
        }
        let lhs = -(-pairs.delta_rho(k)).exp() * pairs.delta_xi(k).cos();
        sup = sup.max((lhs - amp * cum).abs());
        if k + 1 < s_nodes.len() {
            let z = (amp * coupled.w.im[k] - decay * s_nodes[k]).exp();
            cum += z * (coupled.w.re[k + 1] - coupled.w.re[k]);
        }
    }
    Ok(sup)
}
