//! Right-boundary data for the truncated Bessel canonical system.
//!
//! The system on [0, tau_E] needs a boundary condition at the right endpoint.
//! Two regimes:
//!
//! * |a| < 1: the operator is limit circle at infinity. The boundary vector is
//!   the direction singled out by the solution with `lim p h' = 0`, read off
//!   from Wronskian limits of the fundamental pair at a far horizon where the
//!   weight w has collapsed.
//! * beta > 2, a >= 1: limit point. The boundary becomes z-dependent: the
//!   decaying solution of the unshifted problem at eigenparameter
//!   `1 + z/(2 sqrt E)` is produced by backward integration on the translated
//!   noise and pushed through the fundamental pair at tau_E.

use num_complex::Complex64;

use crate::bessel::{
    bessel_time_grid, fundamental_pair_on, integrate_bessel_sde_backward, BesselNoise,
    BesselParams, FundamentalPair, GridOptions, ShiftParams, SolutionValues,
};
use crate::besselfn::bessel_jy_with_deriv;
use crate::error::{Error, Result};
use crate::spectral::BoundaryData;
use crate::stochastic::{GridCoord, RealPath, RngSeed, TimeGrid};

/// Weight threshold defining the default limit-circle truncation horizon.
pub const WEIGHT_THRESHOLD: f64 = 1e-8;

/// Limit-circle right boundary: a fixed direction plus the horizon it was
/// read at.
#[derive(Debug, Clone, Copy)]
pub struct LcBoundary {
    /// Unit boundary vector.
    pub vector: [f64; 2],
    /// Native time of the horizon node.
    pub horizon_t: f64,
    pub horizon_index: usize,
}

impl LcBoundary {
    pub fn boundary_data(&self) -> BoundaryData {
        BoundaryData::Vector(self.vector)
    }
}

/// Boundary direction for |a| < 1 from the fundamental pair.
///
/// The Neumann-type solution h (with `lim p h' -> 0`) satisfies
/// `(kappa, mu) ~ ((p g')(t_h), -(p f')(t_h))` in the basis `h = kappa f + mu g`,
/// and the induced boundary vector `(E^{-1/4} mu, E^{1/4} kappa)` reduces in
/// polar coordinates to the direction `(-e^{rho_f} sin xi_f, e^{rho_g} sin xi_g)`
/// at the horizon; every other factor is common and positive. The larger of
/// the two radial exponents is subtracted before exponentiating, so the
/// computation never overflows.
///
/// `horizon` overrides the default weight-threshold horizon with the first
/// grid node at or past the given native time.
pub fn bessel_right_boundary_lc(
    pairs: &FundamentalPair,
    horizon: Option<f64>,
) -> Result<LcBoundary> {
    if pairs.params.a.abs() >= 1.0 {
        return Err(Error::Usage(format!(
            "limit-circle boundary needs |a| < 1, got a = {}",
            pairs.params.a
        )));
    }
    let nodes = pairs.t_grid().nodes();
    let k = match horizon {
        Some(t) => {
            let k = nodes.partition_point(|&x| x < t);
            if k == nodes.len() {
                return Err(Error::range(format!(
                    "horizon t = {t} beyond the pair grid end {}",
                    pairs.t_grid().last()
                )));
            }
            k
        }
        None => pairs.weight_horizon(WEIGHT_THRESHOLD).ok_or_else(|| {
            Error::Horizon(format!(
                "weight never drops below {WEIGHT_THRESHOLD} on the pair grid; extend s_max"
            ))
        })?,
    };
    let (rf, xf) = (pairs.f.rho[k], pairs.f.xi[k]);
    let (rg, xg) = (pairs.g.rho[k], pairs.g.xi[k]);
    let m = rf.max(rg);
    let v = [-((rf - m).exp()) * xf.sin(), (rg - m).exp() * xg.sin()];
    let norm = v[0].hypot(v[1]);
    if !(norm.is_finite() && norm > 1e-12) {
        return Err(Error::Horizon(format!(
            "boundary direction degenerate at the horizon t = {} (norm {norm:.3e})",
            nodes[k]
        )));
    }
    Ok(LcBoundary {
        vector: [v[0] / norm, v[1] / norm],
        horizon_t: nodes[k],
        horizon_index: k,
    })
}

/// Deterministic control for [`bessel_right_boundary_lc`]: at beta = infinity
/// the Neumann-type solution is the J-branch `e^{au/2} J_a(2 sqrt E e^{-u/2})`,
/// whose coordinates in the (f, g) basis follow from its value and derivative
/// at u = 0. Returns the unit boundary direction.
pub fn lc_oracle_direction(a: f64, e: f64) -> Result<[f64; 2]> {
    if !(e > 1.0) {
        return Err(Error::domain(format!("need E > 1, got {e}")));
    }
    let x0 = 2.0 * e.sqrt();
    let (j, _, jp, _) = bessel_jy_with_deriv(a, x0);
    let kappa = j;
    let mu = 0.5 * a * j - e.sqrt() * jp;
    let q = e.powf(0.25);
    let v = [mu / q, kappa * q];
    let norm = v[0].hypot(v[1]);
    if !(norm > 0.0) {
        return Err(Error::domain("oracle direction degenerate"));
    }
    Ok([v[0] / norm, v[1] / norm])
}

/// Options for the beta > 2 z-dependent boundary.
#[derive(Debug, Clone, Copy)]
pub struct BetaGt2Options {
    /// Backward-integration span past log E, in operator time.
    pub t_phi: f64,
    /// Override for the good-event threshold on `p(log E) |W|`; the default
    /// is `E^{-a/2}`.
    pub threshold: Option<f64>,
}

impl Default for BetaGt2Options {
    fn default() -> Self {
        BetaGt2Options { t_phi: 20.0, threshold: None }
    }
}

/// Log-time horizon the master noise must reach so that the backward pass has
/// `t_phi` units of operator time past log E.
pub fn beta_gt2_s_max(shift: &ShiftParams, t_phi: f64) -> f64 {
    0.5 * (shift.log_e + t_phi)
}

/// Build a fundamental pair whose grid pins tau_E and whose noise extends far
/// enough for a beta > 2 boundary with span `t_phi`.
pub fn beta_gt2_pair(
    params: &BesselParams,
    shift: &ShiftParams,
    seed: &RngSeed,
    gopts: &GridOptions,
    t_phi: f64,
) -> Result<FundamentalPair> {
    let grid = bessel_time_grid(shift, gopts, beta_gt2_s_max(shift, t_phi), &[0.5 * shift.log_e])?;
    let noise = BesselNoise::sample(seed, shift, &grid)?;
    fundamental_pair_on(params, shift, noise)
}

/// z-dependent right boundary for beta > 2, a >= 1.
///
/// For each z the decaying solution Phi of the unshifted operator at
/// eigenparameter `1 + z/(2 sqrt E)` is produced by backward integration from
/// `(1, 0)` at operator time `t_phi` on the translated noise
/// `B(. + log E) - B(log E)`, then normalized so that the weighted Wronskian
/// with `E^{1/4} g` at log E equals one. The boundary vector is
///
/// `u_z = ( -e^{-drho} cos(dxi) + e^{-rho_g} sqrt(p) (cos(xi_g) h + sin(xi_g) h'), 1 )`
///
/// with all tail quantities read at tau_E; the second component is exactly 1
/// by the normalization, so the interesting content sits in the first.
#[derive(Debug, Clone)]
pub struct BetaGt2Boundary {
    params: BesselParams,
    shift: ShiftParams,
    delta_rho_tau: f64,
    delta_xi_tau: f64,
    rho_g_tau: f64,
    xi_g_tau: f64,
    p_log_e: f64,
    sv_tau: SolutionValues,
    phi_grid: TimeGrid,
    phi_noise: RealPath,
    pub t_phi: f64,
    pub threshold: f64,
}

impl BetaGt2Boundary {
    pub fn new(pairs: &FundamentalPair, opts: &BetaGt2Options) -> Result<Self> {
        let params = pairs.params;
        let shift = pairs.shift;
        if !(params.beta > 2.0) || params.a < 1.0 {
            return Err(Error::Usage(format!(
                "z-dependent boundary needs beta > 2 and a >= 1, got beta = {}, a = {}",
                params.beta, params.a
            )));
        }
        if !(opts.t_phi > 0.0) {
            return Err(Error::Usage("t_phi must be positive".into()));
        }
        let k_tau = pairs.t_grid().nearest_index(shift.tau)?;
        if (pairs.t_grid().nodes()[k_tau] - shift.tau).abs() > 1e-9 * shift.tau.max(1.0) {
            return Err(Error::Usage(
                "pair grid does not contain tau_E as a node; build it with required_s = [log E / 2]"
                    .into(),
            ));
        }
        let sv_tau = pairs.solution_values(k_tau);

        // Translated operator-time noise for the backward pass: keep the
        // sampled nodes themselves so the Brownian increments stay exact.
        let b_op = pairs.noise.b_op_path();
        let u_nodes = b_op.grid.nodes();
        let j0 = b_op.grid.nearest_index(shift.log_e)?;
        if (u_nodes[j0] - shift.log_e).abs() > 1e-8 * shift.log_e.max(1.0) {
            return Err(Error::Usage("noise grid does not contain log E as a node".into()));
        }
        let j1 = match (j0..u_nodes.len()).find(|&j| u_nodes[j] - u_nodes[j0] >= opts.t_phi - 1e-9) {
            Some(j) => j,
            None => {
                return Err(Error::Usage(format!(
                    "master noise reaches only u = {:.3}, need log E + t_phi = {:.3}; \
                     build the pair with s_max >= beta_gt2_s_max",
                    u_nodes[u_nodes.len() - 1],
                    shift.log_e + opts.t_phi
                )))
            }
        };
        let mut tu: Vec<f64> = u_nodes[j0..=j1].iter().map(|&u| u - u_nodes[j0]).collect();
        tu[0] = 0.0;
        let mut tv: Vec<f64> = b_op.values[j0..=j1].iter().map(|&v| v - b_op.values[j0]).collect();
        tv[0] = 0.0;
        let t_phi = tu[tu.len() - 1];
        let phi_grid = TimeGrid::new(tu, GridCoord::LogTime)?;
        let phi_noise = RealPath::new(phi_grid.clone(), tv)?;

        Ok(BetaGt2Boundary {
            params,
            shift,
            delta_rho_tau: pairs.delta_rho(k_tau),
            delta_xi_tau: pairs.delta_xi(k_tau),
            rho_g_tau: pairs.g.rho[k_tau],
            xi_g_tau: pairs.g.xi[k_tau],
            p_log_e: sv_tau.p,
            sv_tau,
            phi_grid,
            phi_noise,
            t_phi,
            threshold: opts.threshold.unwrap_or(shift.e.powf(-0.5 * params.a)),
        })
    }

    /// Leading deterministic part of the first component,
    /// `-e^{-drho(tau)} cos(dxi(tau))`.
    pub fn leading_term(&self) -> f64 {
        -(-self.delta_rho_tau).exp() * self.delta_xi_tau.cos()
    }

    /// Backward-integrated solution at u = 0, normalized so that
    /// `W[h, E^{1/4} g](log E) = 1`.
    fn normalized_h(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let zt = Complex64::new(1.0, 0.0) + z / (2.0 * self.shift.sqrt_e);
        let vals = integrate_bessel_sde_backward(
            &self.params,
            zt,
            &self.phi_grid,
            &self.phi_noise,
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )?;
        let phi0 = vals[0][0];
        let phi0p = vals[0][1];
        let q = self.shift.e.powf(0.25);
        let wt = (phi0 * self.sv_tau.g_prime - phi0p * self.sv_tau.g) * q;
        let good = self.p_log_e * wt.norm();
        if !(good >= self.threshold) {
            return Err(Error::DegenerateBoundary(format!(
                "normalizing Wronskian p|W| = {good:.3e} below threshold {:.3e}",
                self.threshold
            )));
        }
        let gamma = (wt * self.p_log_e).inv();
        Ok((gamma * phi0, gamma * phi0p))
    }

    /// Boundary vector at spectral parameter z (second component exactly 1).
    pub fn vector(&self, z: Complex64) -> Result<[Complex64; 2]> {
        let (h, hp) = self.normalized_h(z)?;
        let tail = (-self.rho_g_tau).exp() * self.p_log_e.sqrt();
        let first = Complex64::new(self.leading_term(), 0.0)
            + (h * self.xi_g_tau.cos() + hp * self.xi_g_tau.sin()) * tail;
        Ok([first, Complex64::new(1.0, 0.0)])
    }

    /// Cross-check route: the raw matrix of reconstructed solution values at
    /// tau_E applied to `(p h', h)`. Agrees with [`Self::vector`] up to the
    /// integrator's Wronskian defect.
    pub fn vector_via_matrix(&self, z: Complex64) -> Result<[Complex64; 2]> {
        let (h, hp) = self.normalized_h(z)?;
        let sv = &self.sv_tau;
        let p = self.p_log_e;
        let q = self.shift.e.powf(0.25);
        let u1 = (hp * sv.f * p - h * p * sv.f_prime) / q;
        let u2 = (h * p * sv.g_prime - hp * sv.g * p) * q;
        Ok([u1, u2])
    }

    /// Deviation of the first component from the leading term; the paper's
    /// correction, expected to shrink as E grows.
    pub fn correction(&self, z: Complex64) -> Result<f64> {
        let v = self.vector(z)?;
        Ok((v[0] - Complex64::new(self.leading_term(), 0.0)).norm())
    }

    pub fn into_boundary_data(self) -> BoundaryData {
        BoundaryData::ZDependent(std::sync::Arc::new(move |z| self.vector(z)))
    }
}

pub fn bessel_right_boundary_beta_gt2(
    pairs: &FundamentalPair,
    opts: &BetaGt2Options,
) -> Result<BetaGt2Boundary> {
    BetaGt2Boundary::new(pairs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{eta_inverse, fundamental_pair, shift_params};
    use approx::assert_relative_eq;

    fn zero_noise_pair(params: &BesselParams, shift: &ShiftParams, s_max: f64, opts: &GridOptions) -> FundamentalPair {
        let grid = bessel_time_grid(shift, opts, s_max, &[0.5 * shift.log_e]).unwrap();
        let noise = BesselNoise::zero(shift, &grid).unwrap();
        fundamental_pair_on(params, shift, noise).unwrap()
    }

    #[test]
    fn lc_direction_matches_bessel_oracle_zero_noise() {
        let params = BesselParams::new(f64::INFINITY, 0.0).unwrap();
        let e = 25.0;
        let shift = shift_params(&params, e).unwrap();
        assert_eq!(shift.c, 1.0);
        let pair = zero_noise_pair(&params, &shift, 9.5, &GridOptions::default());
        let lc = bessel_right_boundary_lc(&pair, None).unwrap();
        let oracle = lc_oracle_direction(0.0, e).unwrap();
        let d_plus = (lc.vector[0] - oracle[0]).hypot(lc.vector[1] - oracle[1]);
        let d_minus = (lc.vector[0] + oracle[0]).hypot(lc.vector[1] + oracle[1]);
        assert!(
            d_plus.min(d_minus) < 1e-3,
            "direction {:?} vs oracle {:?}",
            lc.vector,
            oracle
        );
    }

    #[test]
    fn lc_horizon_doubling_is_stable() {
        let params = BesselParams::new(4.0, 0.0).unwrap();
        let shift = shift_params(&params, 1e4).unwrap();
        let opts = GridOptions::default();
        for path in 0..3 {
            let seed = RngSeed::new(7, 40, path);
            let grid = bessel_time_grid(&shift, &opts, 25.0, &[]).unwrap();
            let noise = BesselNoise::sample(&seed, &shift, &grid).unwrap();
            let pair = fundamental_pair_on(&params, &shift, noise).unwrap();
            let lc1 = bessel_right_boundary_lc(&pair, None).unwrap();
            let u1 = 2.0 * pair.noise.s_nodes[lc1.horizon_index];
            // Double the weight horizon, staying on the sampled grid.
            let t2 = eta_inverse(2.0 * u1, &shift).min(pair.t_grid().last());
            let lc2 = bessel_right_boundary_lc(&pair, Some(t2)).unwrap();
            let dot = (lc1.vector[0] * lc2.vector[0] + lc1.vector[1] * lc2.vector[1]).abs();
            let angle = dot.clamp(-1.0, 1.0).acos();
            assert!(
                angle <= 1e-2,
                "path {path}: direction moved by {angle:.3e} rad when doubling the horizon"
            );
        }
    }

    #[test]
    fn lc_validations() {
        let params = BesselParams::new(4.0, 1.2).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        let pair = fundamental_pair(&params, &shift, &RngSeed::new(1, 1, 1), &GridOptions::default()).unwrap();
        assert!(matches!(bessel_right_boundary_lc(&pair, None), Err(Error::Usage(_))));

        let params = BesselParams::new(4.0, 0.0).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        // s_max = log(E)/2 = 2.3 stops far short of the weight horizon.
        let pair = fundamental_pair(&params, &shift, &RngSeed::new(1, 1, 2), &GridOptions::default()).unwrap();
        assert!(matches!(bessel_right_boundary_lc(&pair, None), Err(Error::Horizon(_))));
        assert!(matches!(bessel_right_boundary_lc(&pair, Some(5.0)), Err(Error::Range(_))));
    }

    #[test]
    fn beta_gt2_zero_noise_phi_matches_bessel_ratio() {
        // At beta = infinity and z = 0 the backward pass must reproduce the
        // J-branch of the unshifted operator at eigenparameter 1:
        // Phi(0)/Phi'(0) = J_1(2) / (J_1(2)/2 - J_1'(2)).
        let params = BesselParams::new(f64::INFINITY, 1.0).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        let opts = GridOptions::default();
        let grid = bessel_time_grid(&shift, &opts, beta_gt2_s_max(&shift, 20.0), &[0.5 * shift.log_e]).unwrap();
        let noise = BesselNoise::zero(&shift, &grid).unwrap();
        let pair = fundamental_pair_on(&params, &shift, noise).unwrap();
        let boundary = BetaGt2Boundary::new(&pair, &BetaGt2Options::default()).unwrap();
        let zt = Complex64::new(1.0, 0.0);
        let vals = integrate_bessel_sde_backward(
            &params,
            zt,
            &boundary.phi_grid,
            &boundary.phi_noise,
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let ratio = (vals[0][0] / vals[0][1]).re;
        let (j, _, jp, _) = bessel_jy_with_deriv(1.0, 2.0);
        let oracle = j / (0.5 * j - jp);
        assert_relative_eq!(ratio, oracle, max_relative = 0.05);
    }

    #[test]
    fn beta_gt2_structure_and_stability() {
        let params = BesselParams::new(4.0, 1.0).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        // A seed whose draw lands in the good event at this small E; most
        // draws at E = 100 leave the normalizing Wronskian below threshold.
        let seed = RngSeed::new(11, 41, 5);
        // One pair, noise long enough for t_phi = 40; boundaries with spans
        // 20 and 40 then share every Brownian increment.
        let pair = beta_gt2_pair(&params, &shift, &seed, &GridOptions::default(), 40.0).unwrap();
        let b20 = BetaGt2Boundary::new(&pair, &BetaGt2Options { t_phi: 20.0, threshold: None }).unwrap();
        let b40 = BetaGt2Boundary::new(&pair, &BetaGt2Options { t_phi: 40.0, threshold: None }).unwrap();
        let z = Complex64::new(0.0, 1.0);

        let v = b20.vector(z).unwrap();
        assert_eq!(v[1], Complex64::new(1.0, 0.0));
        assert!(v[0].is_finite());

        // The backward pass is anchored on the decaying solution, so doubling
        // the span barely moves the result.
        let v40 = b40.vector(z).unwrap();
        let rel = (v[0] - v40[0]).norm() / v[0].norm().max(1.0);
        assert!(rel <= 1e-3, "t_phi doubling moved u_z by {rel:.3e}");

        // Matrix route: second component 1 up to rounding, first within the
        // integrator's Wronskian defect of the stabilized route.
        let vm = b20.vector_via_matrix(z).unwrap();
        assert!((vm[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((vm[0] - v[0]).norm() <= 5e-2 * v[0].norm().max(0.1));

        // Correction decomposition is consistent.
        let corr = b20.correction(z).unwrap();
        assert_relative_eq!(
            corr,
            (v[0] - Complex64::new(b20.leading_term(), 0.0)).norm(),
            epsilon = 1e-15
        );

        // An impossible threshold reports the degenerate good event.
        let strict = BetaGt2Boundary::new(&pair, &BetaGt2Options { t_phi: 20.0, threshold: Some(1e12) }).unwrap();
        assert!(matches!(strict.vector(z), Err(Error::DegenerateBoundary(_))));
    }

    #[test]
    fn beta_gt2_validations() {
        let params = BesselParams::new(2.0, 1.0).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        let pair = fundamental_pair(&params, &shift, &RngSeed::new(1, 1, 3), &GridOptions::default()).unwrap();
        assert!(matches!(
            BetaGt2Boundary::new(&pair, &BetaGt2Options::default()),
            Err(Error::Usage(_))
        ));

        // Right regime but noise stops at log E: no room for the backward pass.
        let params = BesselParams::new(4.0, 1.5).unwrap();
        let shift = shift_params(&params, 100.0).unwrap();
        let pair = fundamental_pair(&params, &shift, &RngSeed::new(1, 1, 4), &GridOptions::default()).unwrap();
        let err = BetaGt2Boundary::new(&pair, &BetaGt2Options::default()).unwrap_err();
        assert!(matches!(err, Error::Usage(_)), "got {err:?}");
    }
}
