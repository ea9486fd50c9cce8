//! Layer a key-value config over the defaults, then derive the per-trial
//! seed streams and print the manifest a run would write.

use taskalloc::experiment::{trial_seeds, ExperimentConfig, Manifest};

const CONFIG: &str = "
# smaller, faster run
trials = 4
seed = 42
s = 0.1
smooth.eta = 0.05
tran.budget = 800
";

fn main() -> taskalloc::Result<()> {
    let mut cfg = ExperimentConfig::synthetic();
    cfg.apply_text(CONFIG)?;
    cfg.set("methods", "smooth,strict")?;
    cfg.validate()?;
    for t in 0..cfg.trials as u64 {
        println!("trial {t}: {:?}", trial_seeds(&cfg, t));
    }
    let mut bad = cfg.clone();
    bad.smooth.k = 4;
    println!("validate even k: {:?}", bad.validate().err().map(|e| e.to_string()));
    Manifest::new(&cfg).write(std::io::stdout().lock())?;
    println!();
    Ok(())
}
