//! Label accuracy of both matching algorithms as the prior degrades.

use taskalloc::experiment::{run_sweep, ExperimentConfig, Method};

fn main() -> taskalloc::Result<()> {
    let mut cfg = ExperimentConfig::sweep();
    cfg.trials = 5;
    let blocks = run_sweep(&cfg)?;
    println!("{:>5} {:>8} {:>8}", "s", "smooth", "strict");
    for (s, rows) in &blocks {
        let acc = |m: Method| {
            rows.iter()
                .find(|r| r.method == m.name() && r.metric == "label_accuracy")
                .map_or(f64::NAN, |r| r.mean)
        };
        println!("{s:>5.2} {:>8.3} {:>8.3}", acc(Method::Smooth), acc(Method::Strict));
    }
    Ok(())
}
