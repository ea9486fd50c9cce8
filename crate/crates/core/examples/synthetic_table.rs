//! All five methods on the three-cluster task at prior noise `s = 0.3`.
//!
//! ```text
//! cargo run --release --example synthetic_table [trials]
//! ```

use taskalloc::experiment::{run_synthetic, ExperimentConfig};
use taskalloc::metrics::write_results;

fn main() -> taskalloc::Result<()> {
    let mut cfg = ExperimentConfig::synthetic();
    if let Some(t) = std::env::args().nth(1) {
        cfg.set("trials", &t)?;
    }
    cfg.validate()?;
    let rows = run_synthetic(&cfg)?;

    println!("{:<8} {:>18} {:>18}", "method", "label acc", "assignment acc");
    for m in &cfg.methods {
        let cell = |metric: &str| {
            rows.iter()
                .find(|r| r.method == m.name() && r.metric == metric)
                .map(|r| format!("{:.3} ({:.3})", r.mean, r.stderr.unwrap_or(0.0)))
                .unwrap_or_default()
        };
        println!("{:<8} {:>18} {:>18}", m.name(), cell("label_accuracy"), cell("assignment_accuracy"));
    }
    println!();
    write_results(std::io::stdout().lock(), &[], &rows)
}
