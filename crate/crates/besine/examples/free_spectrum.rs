//! The flat canonical system on [0, pi]: the one fixture whose spectrum is
//! known in closed form. With H identically the identity and boundary
//! directions (1, 0) on both sides, the eigenvalues are the integers, every
//! spectral mass is 1/pi, and the half-line Weyl function at z = i equals
//! i coth(pi).
//!
//! Run with `cargo run --release --example free_spectrum`.

use besine::linalg::Sym2;
use besine::spectral::{
    spectral_measure, weyl_m_limit_circle, BoundaryData, CoefficientMatrixField, EPS_SCHEDULE,
};
use num_complex::Complex64;

fn main() -> besine::Result<()> {
    let field = CoefficientMatrixField::constant(Sym2::IDENTITY, std::f64::consts::PI, 512, false)?;
    let boundary = BoundaryData::Vector([1.0, 0.0]);

    let measure = spectral_measure(&field, &boundary, (-5.5, 5.5), 0.05, &EPS_SCHEDULE)?;
    println!("eigenvalue       mass          mass - 1/pi");
    for &(loc, mass) in measure.atoms() {
        println!(
            "{:>10.6}   {:.9}   {:+.2e}",
            loc,
            mass,
            mass - 1.0 / std::f64::consts::PI
        );
    }

    let m = weyl_m_limit_circle(&field, &boundary);
    let at_i = m(Complex64::i())?;
    let coth_pi = 1.0 / std::f64::consts::PI.tanh();
    println!();
    println!("m(i)        = {:.12} + {:.12}i", at_i.re, at_i.im);
    println!("i coth(pi)  = 0 + {coth_pi:.12}i");
    println!("deviation   = {:.2e}", (at_i - Complex64::new(0.0, coth_pi)).norm());
    Ok(())
}
