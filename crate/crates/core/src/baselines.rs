//! Prior-work baselines adapted to the closed loop.
//!
//! None of them sees gold labels: accuracy is always measured against
//! the committee's majority vote.
//!
//! The accuracy-estimate baseline (Goel) solves its allocation program
//! only loosely specified in its source; here the program is concretized
//! as `w_i = beta/m + (1 - beta) * p_i / sum(p)` with
//! `p_i = max(0, mean_y acc(i, y) - 0.5)`, falling back to uniform when
//! no annotator beats chance.

use serde::{Deserialize, Serialize};

use crate::allocation::LogisticAllocator;
use crate::annotators::AnnotatorPool;
use crate::domain::{majority_vote, AllocationDist, DSimMatrix, LabelBit, Task};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::training::{smooth_matching_run, StepRecord, SYNTHETIC_K, TrainConfig, TrainHistory};

/// Estimate used for cells with no observations.
pub const PRIOR_ACCURACY: f64 = 0.5;

/// Running agreement rates of each annotator with the majority, split by
/// the majority's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimates {
    agree: Vec<[u64; 2]>,
    seen: Vec<[u64; 2]>,
}

impl AccuracyEstimates {
    pub fn new(m: usize) -> Self {
        AccuracyEstimates {
            agree: vec![[0; 2]; m],
            seen: vec![[0; 2]; m],
        }
    }

    pub fn m(&self) -> usize {
        self.seen.len()
    }

    pub fn acc(&self, annotator: usize, y: LabelBit) -> f64 {
        let b = y.as_u8() as usize;
        match self.seen[annotator][b] {
            0 => PRIOR_ACCURACY,
            n => self.agree[annotator][b] as f64 / n as f64,
        }
    }

    pub fn count(&self, annotator: usize, y: LabelBit) -> u64 {
        self.seen[annotator][y.as_u8() as usize]
    }

    /// Mean of the two per-label estimates.
    pub fn mean_acc(&self, annotator: usize) -> f64 {
        0.5 * (self.acc(annotator, LabelBit::ZERO) + self.acc(annotator, LabelBit::ONE))
    }

    fn observe(&mut self, annotator: usize, label: LabelBit, yhat: LabelBit) {
        let b = yhat.as_u8() as usize;
        self.seen[annotator][b] += 1;
        if label == yhat {
            self.agree[annotator][b] += 1;
        }
    }
}

/// One task's worth of evidence: who answered what, and the majority.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub predictions: Vec<(usize, LabelBit)>,
    pub yhat: LabelBit,
}

/// Folds a batch into the estimates. An annotator drawn more than once
/// for a task counts once.
pub fn goel_update_estimates(est: &AccuracyEstimates, batch: &[Observation]) -> AccuracyEstimates {
    let mut next = est.clone();
    for obs in batch {
        let mut done: Vec<usize> = Vec::with_capacity(obs.predictions.len());
        for &(a, y) in &obs.predictions {
            if !done.contains(&a) {
                next.observe(a, y, obs.yhat);
                done.push(a);
            }
        }
    }
    next
}

/// Input-independent allocation from the estimates.
pub fn goel_allocate(est: &AccuracyEstimates, beta: f64) -> Result<AllocationDist> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let m = est.m();
    let edge: Vec<f64> = (0..m).map(|i| (est.mean_acc(i) - 0.5).max(0.0)).collect();
    let total: f64 = edge.iter().sum();
    if total <= 0.0 {
        return AllocationDist::uniform(m);
    }
    let w: Vec<f64> = edge
        .iter()
        .map(|e| beta / m as f64 + (1.0 - beta) * e / total)
        .collect();
    AllocationDist::normalize(&w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoelConfig {
    pub k: usize,
    pub batch_size: usize,
    pub beta: f64,
    pub seed: u64,
}

impl Default for GoelConfig {
    fn default() -> Self {
        GoelConfig {
            k: SYNTHETIC_K,
            batch_size: 10,
            beta: 0.1,
            seed: 0,
        }
    }
}

/// Streams tasks from a single shared allocation, re-solving it from
/// refreshed estimates after every batch.
pub fn goel_run<P: AnnotatorPool + ?Sized>(
    stream: &[Task],
    pool: &P,
    config: &GoelConfig,
) -> Result<(AllocationDist, AccuracyEstimates, TrainHistory)> {
    if config.k % 2 == 0 {
        return Err(Error::EvenCommittee(config.k));
    }
    if config.batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    let m = pool.size();
    let mut rng: SimRng = rng_from_seed(config.seed);
    let mut est = AccuracyEstimates::new(m);
    let mut dist = goel_allocate(&est, config.beta)?;
    let mut history = TrainHistory::default();
    let mut buffer = Vec::with_capacity(config.batch_size);
    for (i, task) in stream.iter().enumerate() {
        let c = pool.convene(task, &dist, config.k, &mut rng);
        let yhat = majority_vote(&c.labels)?;
        history.records.push(StepRecord {
            step: i + 1,
            mu: None,
            committee: c.members.clone(),
            yhat,
            loss: None,
        });
        buffer.push(Observation {
            predictions: c.members.into_iter().zip(c.labels).collect(),
            yhat,
        });
        if buffer.len() == config.batch_size {
            est = goel_update_estimates(&est, &buffer);
            dist = goel_allocate(&est, config.beta)?;
            history.updates += 1;
            buffer.clear();
        }
    }
    Ok((dist, est, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranConfig {
    /// Fraction of the training stream spent exploring.
    pub explore_frac: f64,
    /// Test tasks each annotator may take.
    pub budget: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for TranConfig {
    fn default() -> Self {
        TranConfig {
            explore_frac: 0.1,
            budget: 1000,
            k: SYNTHETIC_K,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub task: usize,
    pub annotator: usize,
    pub label: LabelBit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranOutcome {
    /// Agreement of each annotator with the majority during exploration.
    pub estimates: Vec<f64>,
    pub assignments: Vec<Assignment>,
    /// Tasks nobody with remaining budget could label.
    pub unassigned: Vec<usize>,
}

impl TranOutcome {
    pub fn load(&self, m: usize) -> Vec<usize> {
        let mut load = vec![0; m];
        for a in &self.assignments {
            load[a.annotator] += 1;
        }
        load
    }
}

/// Each exploration task goes to a uniformly drawn committee; members
/// are scored on agreement with its majority. Returns the agreement
/// rates (0.5 for annotators never drawn).
pub fn tran_explore<P: AnnotatorPool + ?Sized>(
    tasks: &[Task],
    pool: &P,
    k: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    let m = pool.size();
    let uniform = AllocationDist::uniform(m)?;
    let mut agree = vec![0u64; m];
    let mut seen = vec![0u64; m];
    for task in tasks {
        let c = pool.convene(task, &uniform, k, rng);
        let yhat = majority_vote(&c.labels)?;
        let mut done = Vec::new();
        for (&a, &y) in c.members.iter().zip(&c.labels) {
            if !done.contains(&a) {
                seen[a] += 1;
                agree[a] += u64::from(y == yhat);
                done.push(a);
            }
        }
    }
    Ok((0..m)
        .map(|i| match seen[i] {
            0 => PRIOR_ACCURACY,
            n => agree[i] as f64 / n as f64,
        })
        .collect())
}

/// Greedy knapsack: each task goes to the best-estimated annotator who
/// still has budget and can label it.
pub fn tran_assign<P: AnnotatorPool + ?Sized>(
    tasks: &[Task],
    pool: &P,
    estimates: &[f64],
    budget: usize,
    rng: &mut SimRng,
) -> Result<(Vec<Assignment>, Vec<usize>)> {
    let m = pool.size();
    let total = budget.saturating_mul(m);
    if total < tasks.len() {
        return Err(Error::BudgetInfeasible {
            total,
            needed: tasks.len(),
        });
    }
    let mut ranked: Vec<usize> = (0..m).collect();
    ranked.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));
    let mut left = vec![budget; m];
    let mut assignments = Vec::with_capacity(tasks.len());
    let mut unassigned = Vec::new();
    for task in tasks {
        let mut placed = false;
        for &a in &ranked {
            if left[a] == 0 {
                continue;
            }
            if let Some(label) = pool.query(a, task, rng) {
                left[a] -= 1;
                assignments.push(Assignment {
                    task: task.id,
                    annotator: a,
                    label,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            unassigned.push(task.id);
        }
    }
    Ok((assignments, unassigned))
}

/// Explores on the leading `explore_frac` of `train`, then assigns `test`.
pub fn tran_run<P: AnnotatorPool + ?Sized>(
    train: &[Task],
    test: &[Task],
    pool: &P,
    config: &TranConfig,
) -> Result<TranOutcome> {
    if config.budget == 0 {
        return Err(Error::config("budget", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&config.explore_frac) {
        return Err(Error::config("explore_frac", "must lie in [0, 1]"));
    }
    if config.k % 2 == 0 {
        return Err(Error::EvenCommittee(config.k));
    }
    let mut rng = rng_from_seed(config.seed);
    let n_explore = (config.explore_frac * train.len() as f64).round() as usize;
    let estimates = tran_explore(&train[..n_explore.min(train.len())], pool, config.k, &mut rng)?;
    let (assignments, unassigned) = tran_assign(test, pool, &estimates, config.budget, &mut rng)?;
    Ok(TranOutcome {
        estimates,
        assignments,
        unassigned,
    })
}

/// Smooth-Matching with the prior weight pinned to zero: a learned
/// allocator with no similarity prior at all.
pub fn keswani_run<P: AnnotatorPool + ?Sized>(
    stream: &[Task],
    pool: &P,
    config: &TrainConfig,
) -> Result<(LogisticAllocator, TrainHistory)> {
    let config = TrainConfig {
        mu_override: Some(0.0),
        ..config.clone()
    };
    let n_categories = stream.iter().map(|t| t.category.0 + 1).max().unwrap_or(1);
    // Never consulted numerically at mu = 0.
    let blank = DSimMatrix::from_rows(vec![vec![1.0; n_categories]; pool.size()])?;
    smooth_matching_run(stream, pool, &blank, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotators::{ClusterExpert, SimulatedPool};
    use crate::domain::CategoryId;
    use proptest::prelude::*;

    fn obs(preds: &[(usize, u8)], yhat: u8) -> Observation {
        Observation {
            predictions: preds
                .iter()
                .map(|&(a, y)| (a, LabelBit::from_u8(y).unwrap()))
                .collect(),
            yhat: LabelBit::from_u8(yhat).unwrap(),
        }
    }

    #[test]
    fn estimate_examples() {
        let e = AccuracyEstimates::new(2);
        assert_eq!(e.acc(0, LabelBit::ONE), 0.5);
        let batch: Vec<_> = (0..4).map(|i| obs(&[(0, 1), (1, u8::from(i != 3))], 1)).collect();
        let e = goel_update_estimates(&e, &batch);
        assert_eq!(e.acc(0, LabelBit::ONE), 1.0);
        assert_eq!(e.acc(1, LabelBit::ONE), 0.75);
        assert_eq!(e.acc(1, LabelBit::ZERO), 0.5);
        assert_eq!(e.count(1, LabelBit::ONE), 4);
        // A repeated member counts once.
        let e = goel_update_estimates(&AccuracyEstimates::new(1), &[obs(&[(0, 1), (0, 1), (0, 1)], 1)]);
        assert_eq!(e.count(0, LabelBit::ONE), 1);
    }

    #[test]
    fn allocate_examples() {
        let e = AccuracyEstimates::new(3);
        assert_eq!(goel_allocate(&e, 0.1).unwrap(), AllocationDist::uniform(3).unwrap());
        let batch = vec![obs(&[(0, 1)], 1), obs(&[(0, 0)], 0)];
        let e = goel_update_estimates(&e, &batch);
        let d = goel_allocate(&e, 0.1).unwrap();
        assert!((d.get(0) - (0.1 / 3.0 + 0.9)).abs() < 1e-9);
        assert!((d.get(0) - 0.933_333).abs() < 1e-6);
        let u = goel_allocate(&e, 1.0).unwrap();
        for i in 0..3 {
            assert!((u.get(i) - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(goel_allocate(&e, 1.5).is_err());
    }

    fn pool(n: usize) -> (Vec<Task>, SimulatedPool<ClusterExpert>) {
        let tasks: Vec<Task> = (0..n)
            .map(|i| Task::new(i, vec![i as f64], CategoryId(i % 3)))
            .collect();
        let gold = (0..n).map(|i| LabelBit::new(i % 2 == 0)).collect();
        (tasks, SimulatedPool::new(ClusterExpert::panel(3), gold))
    }

    #[test]
    fn tran_single_top_annotator_takes_everything() {
        let (tasks, p) = pool(30);
        let mut rng = rng_from_seed(0);
        let (a, un) = tran_assign(&tasks, &p, &[0.2, 0.9, 0.4], 30, &mut rng).unwrap();
        assert!(un.is_empty());
        assert!(a.iter().all(|x| x.annotator == 1));
    }

    #[test]
    fn tran_unit_budgets_use_everyone_once() {
        let (tasks, p) = pool(3);
        let mut rng = rng_from_seed(0);
        let (a, _) = tran_assign(&tasks, &p, &[0.5, 0.5, 0.5], 1, &mut rng).unwrap();
        let mut who: Vec<usize> = a.iter().map(|x| x.annotator).collect();
        who.sort_unstable();
        assert_eq!(who, vec![0, 1, 2]);
        assert!(matches!(
            tran_assign(&pool(4).0, &p, &[0.5; 3], 1, &mut rng),
            Err(Error::BudgetInfeasible { total: 3, needed: 4 })
        ));
    }

    #[test]
    fn tran_run_respects_budget() {
        let (tasks, p) = pool(300);
        let cfg = TranConfig {
            budget: 40,
            ..TranConfig::default()
        };
        let out = tran_run(&tasks[..200], &tasks[200..], &p, &cfg).unwrap();
        assert!(out.load(3).iter().all(|&l| l <= 40));
        assert_eq!(out.assignments.len(), 100);
    }

    #[test]
    fn goel_run_is_deterministic() {
        let (tasks, p) = pool(200);
        let cfg = GoelConfig {
            seed: 4,
            ..GoelConfig::default()
        };
        let a = goel_run(&tasks, &p, &cfg).unwrap();
        let b = goel_run(&tasks, &p, &cfg).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.2, b.2);
        assert_eq!(a.2.updates, 20);
    }

    proptest! {
        #[test]
        fn goel_allocate_is_simplex(
            beta in 0.0f64..=1.0,
            cells in prop::collection::vec((0u64..20, 0u64..20, 0u64..20, 0u64..20), 1..8),
        ) {
            let mut e = AccuracyEstimates::new(cells.len());
            for (i, &(a0, s0, a1, s1)) in cells.iter().enumerate() {
                e.seen[i] = [a0 + s0, a1 + s1];
                e.agree[i] = [a0, a1];
            }
            let d = goel_allocate(&e, beta).unwrap();
            prop_assert!(d.validate().is_ok());
        }
    }
}
