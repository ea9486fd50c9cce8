//! Reward/penalty updates on a tabular allocation: a biased pool keeps
//! its group gap, and the expected one-step gain of a favoured expert.

use taskalloc::allocation::TabularAllocator;
use taskalloc::domain::CategoryId;
use taskalloc::theoryval::{claim1_disparity_trajectory, theorem1_exact, theorem2_threshold, StylizedPool};

fn main() -> taskalloc::Result<()> {
    let mut tab = TabularAllocator::uniform(1, 4);
    tab.update(CategoryId(0), &[true, false, false, false], 0.1);
    println!("one reward on a uniform row: {:?}", tab.row(CategoryId(0)));

    let pool = StylizedPool::new(10, 0.7, 1.0)?;
    let traj = claim1_disparity_trajectory(&pool, 100, 500, 0.01, 1)?;
    for step in [0, 25, 50, 100] {
        println!("step {step:>3}: group gap {:.4} ({:.4})", traj[step].mean, traj[step].stderr);
    }

    for (beta, m) in [(0.1, 2), (0.2, 5), (0.3, 10)] {
        println!("beta {beta} m {m:>2}: expected gain {:.4} at delta 0.1", theorem1_exact(beta, m, 0.1)?);
    }
    for k in [1, 3, 5] {
        println!("committee size {k}: stated threshold at m=5 is {:.4}", theorem2_threshold(k, 5));
    }
    Ok(())
}
