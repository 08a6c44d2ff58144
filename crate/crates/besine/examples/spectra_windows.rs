//! Point process comparison in a fixed spectral window: eigenvalues of the
//! coupled Bessel and sine systems are extracted per path, then compared
//! through pooled nearest-neighbor spacings (KS) and the per-path Hausdorff
//! distance inside the core of the window. Both statistics should decrease
//! as E grows.
//!
//! Run with `cargo run --release --example spectra_windows`. Eigenvalue
//! scans dominate the runtime; 20 paths on two shifts takes a minute or so.

use besine::config::ExperimentConfig;
use besine::harness::{run_spectral_convergence, RightBcPolicy};

fn main() -> besine::Result<()> {
    let cfg = ExperimentConfig {
        a: 0.5,
        e_list: vec![1e3, 1e4],
        paths_per_e: 20,
        ..ExperimentConfig::default()
    };
    let report = run_spectral_convergence(&cfg, (-8.0, 8.0), &RightBcPolicy::Auto)?;

    for row in &report.rows {
        let pass = match row.pass {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        println!(
            "{:>8.0}  {:<26} {:<8} {:>13.6e}  {}",
            row.e, row.statistic, row.quantile, row.value, pass
        );
    }
    for note in &report.meta.notes {
        println!("note: {note}");
    }
    println!("\noverall pass: {}", report.passed());
    Ok(())
}
