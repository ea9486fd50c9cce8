//! The three baselines run directly on one dataset: accuracy-estimate
//! mixing, explore-then-assign under a budget, and feedback-only learning.

use taskalloc::annotators::{ClusterExpert, SimulatedPool};
use taskalloc::baselines::{goel_run, keswani_run, tran_run, GoelConfig, TranConfig};
use taskalloc::datagen::{gen_clusters, SyntheticDatasetSpec};
use taskalloc::domain::LabelBit;
use taskalloc::training::TrainConfig;

fn main() -> taskalloc::Result<()> {
    let ds = gen_clusters(&SyntheticDatasetSpec::with_seed(21))?;
    let pool = SimulatedPool::new(ClusterExpert::panel(3), ds.gold.clone());
    let (train, test) = ds.tasks.split_at(7000);

    let (dist, est, _) = goel_run(train, &pool, &GoelConfig::default())?;
    println!("goel: final mix {:?}", dist.probs());
    for a in 0..3 {
        println!(
            "  annotator {a}: acc|y=0 {:.3}  acc|y=1 {:.3}",
            est.acc(a, LabelBit::ZERO),
            est.acc(a, LabelBit::ONE)
        );
    }

    let out = tran_run(train, test, &pool, &TranConfig::default())?;
    let right = out.assignments.iter().filter(|a| a.label == ds.gold[a.task]).count();
    println!(
        "tran: {} assigned, {} unassigned, load {:?}, label accuracy {:.3}",
        out.assignments.len(),
        out.unassigned.len(),
        out.load(3),
        right as f64 / out.assignments.len().max(1) as f64
    );

    let (model, history) = keswani_run(train, &pool, &TrainConfig::keswani_synthetic())?;
    let probe = &test[0];
    println!(
        "keswani: {} updates; allocation for a colour-{} task {:?}",
        history.updates,
        probe.category.0,
        model.distribution(probe)?.probs()
    );
    Ok(())
}
