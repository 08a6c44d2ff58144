//! Right boundary data for the Bessel system in its two regimes.
//!
//! For |a| < 1 (limit circle) the boundary direction comes straight from the
//! fundamental pair at a horizon node; at beta = infinity it must agree with
//! the direction of the classical Neumann-type solution, which this prints.
//! For beta > 2 with a >= 1 the boundary is z-dependent, built by a backward
//! pass on the translated noise; the example evaluates it at a few z and
//! checks the second component is pinned to one by the Wronskian
//! normalization.
//!
//! Run with `cargo run --release --example boundaries`.

use besine::bessel::{
    bessel_time_grid, fundamental_pair_on, shift_params, BesselNoise, BesselParams, GridOptions,
};
use besine::boundary::{
    bessel_right_boundary_lc, beta_gt2_pair, lc_oracle_direction, BetaGt2Boundary, BetaGt2Options,
};
use besine::stochastic::RngSeed;
use num_complex::Complex64;

fn main() -> besine::Result<()> {
    // Limit-circle side, noiseless: direction against the closed form. The
    // weight-threshold horizon needs the grid to run past tau_E until the
    // weight has died, a few extra log-time units.
    let e = 1e3;
    let params = BesselParams { beta: f64::INFINITY, a: 0.5 };
    let shift = shift_params(&params, e)?;
    let grid = bessel_time_grid(&shift, &GridOptions::default(), 0.5 * shift.log_e + 4.0, &[])?;
    let pair = fundamental_pair_on(&params, &shift, BesselNoise::zero(&shift, &grid)?)?;
    let lc = bessel_right_boundary_lc(&pair, None)?;
    let oracle = lc_oracle_direction(params.a, e)?;
    // Directions are defined modulo sign.
    let dot = lc.vector[0] * oracle[0] + lc.vector[1] * oracle[1];
    let dev = (1.0 - dot.abs()).abs();
    println!("limit circle, E = {e}, a = {} (noiseless)", params.a);
    println!("  boundary vector  ({:+.8}, {:+.8}) at t = {:.5}", lc.vector[0], lc.vector[1], lc.horizon_t);
    println!("  oracle direction ({:+.8}, {:+.8})", oracle[0], oracle[1]);
    println!("  |1 - |cos angle|| = {dev:.3e}");

    // beta > 2, a >= 1: the z-dependent boundary on a random path.
    let params = BesselParams { beta: 4.0, a: 1.5 };
    let shift = shift_params(&params, e)?;
    let opts = BetaGt2Options::default();
    let pair = beta_gt2_pair(&params, &shift, &RngSeed::new(11, 0, 0), &GridOptions::default(), opts.t_phi)?;
    let boundary = BetaGt2Boundary::new(&pair, &opts)?;
    println!("\nbeta > 2 boundary, E = {e}, beta = {}, a = {}", params.beta, params.a);
    println!("  leading term u(0) = {:+.8}", boundary.leading_term());
    for &z in &[Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5)] {
        let u = boundary.vector(z)?;
        println!(
            "  z = {:>5.1}{:+.1}i   u_z = ({:+.6}{:+.6}i, {:+.3}{:+.3}i)",
            z.re, z.im, u[0].re, u[0].im, u[1].re, u[1].im
        );
    }
    Ok(())
}
