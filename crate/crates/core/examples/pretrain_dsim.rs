//! Encode a similarity prior into a logistic allocator with unlabeled
//! tasks, then compare its argmax with the prior's on held-out tasks.

use taskalloc::allocation::{dsim_prior_dist, pretrain_mse, pretrain_to_dsim, LogisticAllocator};
use taskalloc::datagen::{gen_clusters, gen_dsim_noisy, SyntheticDatasetSpec};

fn main() -> taskalloc::Result<()> {
    let ds = gen_clusters(&SyntheticDatasetSpec::with_seed(3))?;
    let (unlabeled, held) = ds.tasks.split_at(500);

    for s in [0.0, 0.3, 0.6] {
        let dsim = gen_dsim_noisy(s)?;
        let zero = LogisticAllocator::zeros(3, 2);
        let model = pretrain_to_dsim(&zero, unlabeled, &dsim, 0.5, 1000)?;
        let agree = held
            .iter()
            .filter(|t| {
                let learned = model.distribution(t).map(|d| d.argmax()).ok();
                learned == Some(dsim_prior_dist(&dsim, t.category).argmax())
            })
            .count();
        println!(
            "s={s:.1}  mse {:.4} -> {:.4}  argmax agreement {:.3}",
            pretrain_mse(&zero, unlabeled, &dsim)?,
            pretrain_mse(&model, unlabeled, &dsim)?,
            agree as f64 / held.len() as f64
        );
    }
    Ok(())
}
