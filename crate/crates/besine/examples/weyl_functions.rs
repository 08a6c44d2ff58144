//! Weyl function comparison: evaluate the Bessel and sine half-plane
//! functions m_B and m_R at a few upper half-plane points on coupled paths,
//! track max_z |m_B - m_R| across the shift sweep, and confirm the Herglotz
//! property (Im m >= 0 up to roundoff) at every evaluation.
//!
//! Run with `cargo run --release --example weyl_functions`.

use besine::config::ExperimentConfig;
use besine::harness::run_wt_convergence;
use num_complex::Complex64;

fn main() -> besine::Result<()> {
    let cfg = ExperimentConfig { paths_per_e: 24, ..ExperimentConfig::default() };
    let z_grid = [
        Complex64::new(0.0, 1.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-1.0, 2.0),
    ];
    let report = run_wt_convergence(&cfg, &z_grid)?;

    for row in &report.rows {
        let pass = match row.pass {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        println!(
            "{:>8.0}  {:<22} {:<8} {:>13.6e}  {}",
            row.e, row.statistic, row.quantile, row.value, pass
        );
    }
    println!("\noverall pass: {}", report.passed());
    Ok(())
}
