//! Reversed-time asymptotics of the Bessel solution at a fixed spectral
//! parameter: the radial part grows linearly in native time with slope
//! 1/(2 beta) - a/2, fluctuations stay inside a t^0.6 envelope, and the
//! angular part equidistributes on the circle. The run fits the slope per
//! path and reports the mean, the envelope fraction, and the phase KS.
//!
//! Run with `cargo run --release --example asymptotics`.

use besine::config::ExperimentConfig;
use besine::harness::run_asymptotics;

fn main() -> besine::Result<()> {
    let cfg = ExperimentConfig::default();
    // beta = 2, a = 0: expected slope 1/(2*2) - 0 = 0.25. The phase KS
    // tolerance is sized for thousands of paths, so do not trim this down
    // too far.
    let report = run_asymptotics(&cfg, 1.0, 30.0, 500)?;

    for row in &report.rows {
        let pass = match row.pass {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        println!("{:<22} {:<8} {:>13.6e}  {}", row.statistic, row.quantile, row.value, pass);
    }
    println!("\noverall pass: {}", report.passed());
    Ok(())
}
