//! Run every statement check on the tabular update model and print the
//! cells that do not hold.

use taskalloc::theoryval::{run_validators, TheoryConfig};

fn main() -> taskalloc::Result<()> {
    let report = run_validators(&TheoryConfig {
        trials: 2000,
        ..TheoryConfig::default()
    })?;
    for row in report.summary() {
        let failing = row.params["failing"].as_u64().unwrap_or(0);
        let cells = row.params["cells"].as_u64().unwrap_or(0);
        println!("{:<9} {}/{} cells hold", row.check, cells - failing, cells);
    }
    println!();
    for row in report.all().filter(|r| !r.pass).take(12) {
        println!("{:<9} observed {:>9.5} bound {:>9.5} {}", row.check, row.observed, row.bound, row.params);
    }
    Ok(())
}
