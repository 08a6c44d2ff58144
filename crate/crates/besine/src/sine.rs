//! Hyperbolic Brownian motion and the sine canonical system.
//!
//! The sine operator at inverse temperature beta is the canonical system on
//! [0, 1) with coefficient matrix `R(B(s))` evaluated along a hyperbolic
//! Brownian motion `B` run in logarithmic time `s = -log(1 - t)`, where
//! `R(x + iy) = [[1, -x], [-x, x^2 + y^2]] / (2y)`.

use crate::error::{Error, Result};
use crate::linalg::Sym2;
use crate::spectral::CoefficientMatrixField;
use crate::stochastic::{log_time, ComplexPath, TimeGrid};
use num_complex::Complex64;

/// Hyperbolic Brownian motion started at `i`, sampled in logarithmic time.
///
/// The imaginary part is stored in logarithmic coordinates: it is a geometric
/// Brownian motion and the closed form keeps it exactly positive.
#[derive(Debug, Clone)]
pub struct HyperbolicPath {
    pub beta: f64,
    /// Log-time grid (the first node is time 0 of the motion).
    pub s_grid: TimeGrid,
    /// Real part x(s).
    pub x: Vec<f64>,
    /// log of the imaginary part y(s).
    pub log_y: Vec<f64>,
}

impl HyperbolicPath {
    pub fn value(&self, k: usize) -> Complex64 {
        Complex64::new(self.x[k], self.log_y[k].exp())
    }

    pub fn horizon(&self) -> f64 {
        self.s_grid.last()
    }

    /// Linear interpolation in s of (x, log y).
    pub fn value_at(&self, s: f64) -> Result<Complex64> {
        let k = self.s_grid.index_at_or_before(s)?;
        if k + 1 == self.s_grid.len() {
            return Ok(self.value(k));
        }
        let (s0, s1) = (self.s_grid.nodes()[k], self.s_grid.nodes()[k + 1]);
        let w = (s - s0) / (s1 - s0);
        let x = self.x[k] * (1.0 - w) + self.x[k + 1] * w;
        let ly = self.log_y[k] * (1.0 - w) + self.log_y[k + 1] * w;
        Ok(Complex64::new(x, ly.exp()))
    }
}

/// Right-boundary data estimated from a finite horizon.
#[derive(Debug, Clone, Copy)]
pub struct SineBoundary {
    /// Estimate of lim Re B(s).
    pub x_limit: f64,
    /// Horizon s used for the estimate.
    pub horizon_s: f64,
    /// Boundary vector (x_limit, 1).
    pub vector: [f64; 2],
}

/// Drive a hyperbolic Brownian motion with the given complex noise.
///
/// `d B = (2/sqrt(beta)) Im(B) dW`: the imaginary part integrates exactly in
/// log coordinates, the real part by an Euler-Maruyama sum against Re W.
pub fn simulate_hbm(beta: f64, noise: &ComplexPath) -> Result<HyperbolicPath> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!("simulate_hbm needs beta > 0, got {beta}")));
    }
    let grid = &noise.grid;
    let n = grid.len();
    let s0 = grid.first();
    let sigma = 2.0 / beta.sqrt();
    let mut x = vec![0.0; n];
    let mut log_y = vec![0.0; n];
    for k in 0..n {
        log_y[k] = sigma * (noise.im[k] - noise.im[0]) - 2.0 / beta * (grid.nodes()[k] - s0);
    }
    for k in 0..n - 1 {
        let y = log_y[k].exp();
        x[k + 1] = x[k] + sigma * y * (noise.re[k + 1] - noise.re[k]);
        if !x[k + 1].is_finite() {
            return Err(Error::Integration {
                t: grid.nodes()[k + 1],
                message: "hyperbolic Brownian motion diverged".into(),
            });
        }
    }
    Ok(HyperbolicPath { beta, s_grid: grid.clone(), x, log_y })
}

/// Coefficient matrix of the sine system at one point of the upper half plane.
pub fn sine_matrix(b: Complex64) -> Result<Sym2> {
    let (x, y) = (b.re, b.im);
    if !(y > 0.0) {
        return Err(Error::Integrity {
            t: f64::NAN,
            message: format!("sine matrix needs Im > 0, got {y}"),
        });
    }
    let inv2y = 0.5 / y;
    Ok(Sym2::new(inv2y, -x * inv2y, (x * x + y * y) * inv2y))
}

/// Sample the sine-system coefficient matrix field on a native-time grid in
/// [0, 1). Times whose log-time image exceeds the sampled horizon are a range
/// error.
pub fn sine_field(hbm: &HyperbolicPath, native_grid: &TimeGrid) -> Result<CoefficientMatrixField> {
    let mut mats = Vec::with_capacity(native_grid.len());
    for &t in native_grid.nodes() {
        let s = log_time(t, 1.0)?;
        if s > hbm.horizon() + 1e-12 {
            return Err(Error::range(format!(
                "native time {t} maps to log time {s} beyond the sampled horizon {}",
                hbm.horizon()
            )));
        }
        mats.push(sine_matrix(hbm.value_at(s.min(hbm.horizon()))?)?);
    }
    CoefficientMatrixField::new(native_grid.clone(), mats, hbm.beta > 2.0)
}

/// Right-boundary vector (Re B(horizon), 1) for beta > 2.
pub fn sine_right_boundary(hbm: &HyperbolicPath) -> Result<SineBoundary> {
    if hbm.beta <= 2.0 {
        return Err(Error::Usage(format!(
            "the sine system has no right boundary data for beta = {} <= 2",
            hbm.beta
        )));
    }
    let x_limit = *hbm.x.last().unwrap();
    Ok(SineBoundary {
        x_limit,
        horizon_s: hbm.horizon(),
        vector: [x_limit, 1.0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample_complex_brownian, GridCoord, RngSeed};
    use approx::assert_relative_eq;

    fn grid_to(s_max: f64, n: usize) -> TimeGrid {
        TimeGrid::uniform(0.0, s_max, n, GridCoord::LogTime).unwrap()
    }

    #[test]
    fn sine_matrix_reference_points() {
        let at_i = sine_matrix(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(at_i, Sym2::new(0.5, 0.0, 0.5));
        let shifted = sine_matrix(Complex64::new(1.0, 1.0)).unwrap();
        assert_eq!(shifted, Sym2::new(0.5, -0.5, 1.0));
        assert!(sine_matrix(Complex64::new(0.3, 0.0)).is_err());
        assert!(sine_matrix(Complex64::new(0.3, -1.0)).is_err());
    }

    #[test]
    fn sine_matrix_det_quarter_and_psd() {
        let pts = [
            Complex64::new(0.0, 1.0),
            Complex64::new(3.0, 0.01),
            Complex64::new(-17.0, 120.0),
            Complex64::new(0.2, 1e-6),
        ];
        for b in pts {
            let m = sine_matrix(b).unwrap();
            // The identity is algebraic; evaluating a*d - b^2 in floats loses
            // digits in proportion to b^2 when Im(b) is tiny.
            let tol = 1e-12 * (1.0 + m.b * m.b);
            assert!((m.det() - 0.25).abs() <= tol, "det {} at {b}", m.det());
            assert!(m.min_eigenvalue() > 0.0);
        }
    }

    #[test]
    fn hbm_imaginary_part_closed_form() {
        let grid = grid_to(2.0, 100);
        let noise = sample_complex_brownian(&RngSeed::new(5, 0, 3), &grid).unwrap();
        let hbm = simulate_hbm(4.0, &noise).unwrap();
        for k in [0, 25, 99] {
            let s = grid.nodes()[k];
            let expect = noise.im[k] - 0.5 * s;
            assert_relative_eq!(hbm.log_y[k], expect, epsilon = 1e-13);
        }
        assert_eq!(hbm.value(0), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn log_y_at_unit_log_time_matches_gaussian_law() {
        // At beta = 4, log y(1) ~ Normal(-1/2, 1).
        use statrs::distribution::{ContinuousCDF, Normal};
        let grid = grid_to(1.0, 16);
        let n_paths = 10_000;
        let mut samples: Vec<f64> = (0..n_paths)
            .map(|p| {
                let noise =
                    sample_complex_brownian(&RngSeed::new(21, 0, p), &grid).unwrap();
                let hbm = simulate_hbm(4.0, &noise).unwrap();
                *hbm.log_y.last().unwrap()
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        let normal = Normal::new(-0.5, 1.0).unwrap();
        let ks = crate::stats::ks_one_sample(&samples, |v| normal.cdf(v)).unwrap();
        assert!(ks <= 0.02, "KS distance {ks} too large");
    }

    #[test]
    fn sine_field_evaluates_and_respects_horizon() {
        let grid = grid_to(3.0, 300);
        let noise = sample_complex_brownian(&RngSeed::new(6, 0, 0), &grid).unwrap();
        let hbm = simulate_hbm(2.0, &noise).unwrap();
        let native = TimeGrid::uniform(0.0, 0.9, 50, GridCoord::Native).unwrap();
        let field = sine_field(&hbm, &native).unwrap();
        assert_eq!(field.len(), 51);
        for m in field.matrices() {
            assert_relative_eq!(m.det(), 0.25, epsilon = 1e-12);
        }
        // -log(1 - 0.999) ~ 6.9 > 3: beyond the horizon.
        let too_far = TimeGrid::uniform(0.0, 0.999, 10, GridCoord::Native).unwrap();
        assert!(sine_field(&hbm, &too_far).is_err());
    }

    #[test]
    fn right_boundary_requires_beta_above_two() {
        let grid = grid_to(2.0, 50);
        let noise = sample_complex_brownian(&RngSeed::new(7, 0, 0), &grid).unwrap();
        let hbm2 = simulate_hbm(2.0, &noise).unwrap();
        assert!(sine_right_boundary(&hbm2).is_err());
        let hbm4 = simulate_hbm(4.0, &noise).unwrap();
        let bc = sine_right_boundary(&hbm4).unwrap();
        assert_eq!(bc.vector[1], 1.0);
        assert_eq!(bc.vector[0], *hbm4.x.last().unwrap());
    }

    #[test]
    fn boundary_estimate_stabilizes_with_horizon() {
        // Compare horizons s = 8 and s = 12 at beta = 4: the tail movement is
        // conditionally Gaussian with variance (4/beta) int_8^12 y^2 ds, so
        // 3-sigma covers it for ~99% of paths.
        let beta = 4.0;
        let grid = grid_to(12.0, 1200);
        let idx8 = grid.index_at_or_before(8.0).unwrap();
        let n_paths = 400;
        let mut within = 0;
        for p in 0..n_paths {
            let noise = sample_complex_brownian(&RngSeed::new(8, 1, p), &grid).unwrap();
            let hbm = simulate_hbm(beta, &noise).unwrap();
            let tail_move = (hbm.x.last().unwrap() - hbm.x[idx8]).abs();
            let mut var = 0.0;
            for k in idx8..grid.len() - 1 {
                let y = hbm.log_y[k].exp();
                var += 4.0 / beta * y * y * grid.step(k);
            }
            if tail_move <= 3.0 * var.sqrt() {
                within += 1;
            }
        }
        assert!(
            within as f64 >= 0.95 * n_paths as f64,
            "only {within}/{n_paths} paths within the conditional 3-sigma bound"
        );
    }
}
