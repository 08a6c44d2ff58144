//! Vague convergence of the Bessel coefficient field to the sine field:
//! integrate a smooth compactly supported test function against the
//! difference of the two coupled fields, path by path, and watch the median
//! pairing shrink as E grows.
//!
//! Run with `cargo run --release --example vague_pairing`.

use besine::config::ExperimentConfig;
use besine::harness::{run_vague_convergence, TestFunction};

fn main() -> besine::Result<()> {
    let cfg = ExperimentConfig { paths_per_e: 24, ..ExperimentConfig::default() };
    // A bump against the first coordinate on [0.1, 0.6]: well inside the
    // window every E in the sweep can cover.
    let bump = TestFunction::bump(0.1, 0.6, [1.0, 0.0])?;
    let report = run_vague_convergence(&cfg, &bump)?;

    for row in &report.rows {
        let pass = match row.pass {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        println!(
            "{:>8.0}  {:<24} {:<8} {:>13.6e}  {}",
            row.e, row.statistic, row.quantile, row.value, pass
        );
    }
    println!("\noverall pass: {}", report.passed());
    Ok(())
}
