//! The coupling sweep: per shift E, the sine system's complex Brownian
//! motion is rebuilt from the Bessel path's native noise, and the sup
//! deviation between the coupled drivers (plus the GBM, re-HBM and
//! averaging comparisons) is tracked across E. The medians should fall as
//! E grows; the deviation slope row reports the fitted log-log rate.
//!
//! Run with `cargo run --release --example coupling_decay`. A 40-path sweep
//! takes a few seconds; the pinned report comes from 200 paths.

use besine::config::ExperimentConfig;
use besine::harness::run_coupling_decay;

fn main() -> besine::Result<()> {
    let cfg = ExperimentConfig { paths_per_e: 40, ..ExperimentConfig::default() };
    let report = run_coupling_decay(&cfg)?;

    println!("{:>8}  {:<22} {:<8} {:>13}  pass", "E", "statistic", "quantile", "value");
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
