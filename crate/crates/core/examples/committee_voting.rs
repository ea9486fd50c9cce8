//! Sample committees from an allocation, collect labels from simulated
//! cluster experts and aggregate them by majority vote.

use taskalloc::annotators::{AnnotatorPool, ClusterExpert, SimulatedPool};
use taskalloc::datagen::{gen_clusters, SyntheticDatasetSpec};
use taskalloc::domain::{majority_vote, AllocationDist};
use taskalloc::rng::rng_from_seed;

fn main() -> taskalloc::Result<()> {
    let ds = gen_clusters(&SyntheticDatasetSpec {
        n_points: 3000,
        ..SyntheticDatasetSpec::with_seed(5)
    })?;
    let pool = SimulatedPool::new(ClusterExpert::panel(3), ds.gold.clone());
    let mut rng = rng_from_seed(9);

    let uniform = AllocationDist::uniform(3)?;
    for k in [1, 3, 7, 15] {
        for (name, oracle) in [("uniform", false), ("expert-heavy", true)] {
            let correct = ds
                .tasks
                .iter()
                .filter(|t| {
                    let dist = if oracle {
                        let mut w = vec![0.1; 3];
                        w[t.category.0] = 0.8;
                        AllocationDist::normalize(&w).expect("positive weights")
                    } else {
                        uniform.clone()
                    };
                    let c = pool.convene(t, &dist, k, &mut rng);
                    majority_vote(&c.labels).expect("odd committee") == ds.gold[t.id]
                })
                .count();
            println!("k={k:<3} {name:<13} majority accuracy {:.3}", correct as f64 / ds.tasks.len() as f64);
        }
    }
    Ok(())
}
