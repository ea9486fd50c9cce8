//! Generate a surrogate replay file, load it back, and replay it under
//! availability constraints with both gold columns.

use taskalloc::datagen::{gen_surrogate_replay, load_replay, save_replay, SurrogateSpec};
use taskalloc::experiment::{run_replay, ExperimentConfig, GoldMode};

fn main() -> taskalloc::Result<()> {
    let dir = std::env::temp_dir().join("taskalloc-replay-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("surrogate.txt");
    save_replay(&gen_surrogate_replay(&SurrogateSpec::default())?, &path)?;
    let ds = load_replay(&path)?;
    println!(
        "{} tasks, {} annotators, {} categories ({})",
        ds.tasks.len(),
        ds.n_annotators(),
        ds.n_categories(),
        path.display()
    );

    for gold in [GoldMode::Subjective, GoldMode::Objective] {
        let mut cfg = ExperimentConfig::replay();
        cfg.trials = 5;
        cfg.gold = Some(gold);
        println!("\n{gold:?} gold");
        for r in run_replay(&cfg, &ds)?.iter().filter(|r| r.metric == "auc") {
            println!("  {:<8} auc {:.3} ({:.3})", r.method, r.mean, r.stderr.unwrap_or(0.0));
        }
    }
    Ok(())
}
