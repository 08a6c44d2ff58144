//! Zero-noise sanity check for the Bessel system. At beta = infinity the
//! noise amplitude vanishes and the polar integrator must reproduce the
//! classical Bessel-function solution of the shifted operator. This prints
//! the worst sup-norm relative deviation of (f, f', g, g') over operator
//! times u in [0, 3] for the six (E, a) combinations the oracle suite pins.
//!
//! Run with `cargo run --release --example bessel_deterministic`.

use besine::harness::bessel_oracle_deviation;

fn main() -> besine::Result<()> {
    println!("   E      a    sup-norm rel deviation");
    for &e in &[100.0, 1e4] {
        for &a in &[0.0, 0.5, 1.0] {
            let worst = bessel_oracle_deviation(e, a, 3.0)?;
            let verdict = if worst <= 1e-3 { "ok" } else { "FAIL" };
            println!("{:>7.0}  {:>4.1}   {:.3e}  {}", e, a, worst, verdict);
        }
    }
    Ok(())
}
