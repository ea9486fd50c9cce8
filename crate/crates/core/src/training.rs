//! Closed-loop training.
//!
//! Both algorithms stream tasks through the same loop: pick a sampling
//! distribution, convene a committee, take its majority vote as the label,
//! and buffer the committee's votes. Every `batch_size` tasks the buffer
//! is spent on one gradient step of the agreement loss, which raises the
//! confidence of members who voted with the majority and lowers it for
//! those who did not.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{
    dsim_prior_dist, mu_schedule, pretrain_to_dsim, sigmoid, smooth_combine, LogisticAllocator,
};
use crate::annotators::{AnnotatorPool, Convened};
use crate::domain::{majority_vote, AllocationDist, Committee, DSimMatrix, LabelBit, Task};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Committee size for the synthetic track, at training and test time.
pub const SYNTHETIC_K: usize = 15;

/// Probabilities are clamped to `[LOSS_CLAMP, 1 - LOSS_CLAMP]` inside logs.
pub const LOSS_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Committee size during training; odd.
    pub k: usize,
    pub batch_size: usize,
    pub eta: f64,
    /// Smoothing horizon `T_d`; the prior weight at step `t` is
    /// `T_d / (t + T_d)`. Only used by Smooth-Matching.
    pub horizon: f64,
    pub seed: u64,
    /// Strict-Matching only: regress onto the prior before streaming.
    pub pretrain: bool,
    pub pretrain_samples: usize,
    pub pretrain_lr: f64,
    pub pretrain_iters: usize,
    /// Pins the prior weight instead of following the schedule.
    pub mu_override: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::strict_synthetic()
    }
}

impl TrainConfig {
    pub fn strict_synthetic() -> Self {
        TrainConfig {
            k: SYNTHETIC_K,
            batch_size: 10,
            eta: 0.001,
            horizon: 1e4,
            seed: 0,
            pretrain: true,
            pretrain_samples: 500,
            pretrain_lr: 0.5,
            pretrain_iters: 1000,
            mu_override: None,
        }
    }

    pub fn smooth_synthetic() -> Self {
        TrainConfig {
            eta: 0.1,
            pretrain: false,
            ..Self::strict_synthetic()
        }
    }

    /// Smooth-Matching with the prior switched off.
    pub fn keswani_synthetic() -> Self {
        TrainConfig {
            mu_override: Some(0.0),
            ..Self::smooth_synthetic()
        }
    }

    pub fn strict_replay() -> Self {
        TrainConfig {
            k: 7,
            batch_size: 1000,
            eta: 0.25,
            horizon: 1e6,
            seed: 0,
            pretrain: true,
            pretrain_samples: 500,
            pretrain_lr: 0.5,
            pretrain_iters: 500,
            mu_override: None,
        }
    }

    pub fn smooth_replay() -> Self {
        TrainConfig {
            pretrain: false,
            ..Self::strict_replay()
        }
    }

    pub fn keswani_replay() -> Self {
        TrainConfig {
            mu_override: Some(0.0),
            ..Self::smooth_replay()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k % 2 == 0 {
            return Err(Error::config("k", format!("committee size must be odd, got {}", self.k)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be a finite non-negative rate"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::config("horizon", "T_d must be positive"));
        }
        if let Some(mu) = self.mu_override {
            if !(0.0..=1.0).contains(&mu) {
                return Err(Error::config("mu", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One streamed task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based position in the stream.
    pub step: usize,
    pub mu: Option<f64>,
    pub committee: Vec<usize>,
    pub yhat: LabelBit,
    /// Agreement loss of the batch, recorded on steps that closed one.
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
    pub updates: usize,
}

impl TrainHistory {
    /// CSV with columns `step,mu,committee,yhat,loss`; committee members
    /// are `;`-separated and absent values are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "mu", "committee", "yhat", "loss"])?;
        for r in &self.records {
            let committee: Vec<String> = r.committee.iter().map(usize::to_string).collect();
            w.write_record([
                r.step.to_string(),
                r.mu.map(|m| m.to_string()).unwrap_or_default(),
                committee.join(";"),
                r.yhat.to_string(),
                r.loss.map(|l| l.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `k` draws with replacement from `dist`.
pub fn sample_committee<R: Rng + ?Sized>(dist: &AllocationDist, k: usize, rng: &mut R) -> Result<Committee> {
    if k % 2 == 0 {
        return Err(Error::EvenCommittee(k));
    }
    let index = WeightedIndex::new(dist.probs())
        .map_err(|e| Error::Validation(format!("cannot sample from distribution: {e}")))?;
    let members = (0..k).map(|_| index.sample(rng)).collect();
    Committee::new(members, dist.len())
}

/// A buffered training example: the task's features, who voted, what
/// each voted, and the majority.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub features: Vec<f64>,
    pub members: Vec<usize>,
    pub labels: Vec<LabelBit>,
    pub yhat: LabelBit,
}

impl BatchItem {
    pub fn new(task: &Task, convened: Convened, yhat: LabelBit) -> Self {
        BatchItem {
            features: task.features.clone(),
            members: convened.members,
            labels: convened.labels,
            yhat,
        }
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP)
}

/// Mean over the batch of each committee's mean binary cross-entropy
/// between member confidence and agreement with the majority.
pub fn agreement_loss(model: &LogisticAllocator, batch: &[BatchItem]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .iter()
        .map(|item| {
            let k = item.members.len() as f64;
            item.members
                .iter()
                .zip(&item.labels)
                .map(|(&j, &y)| {
                    let d = clamp_prob(sigmoid(model.logit(j, &item.features)));
                    if y == item.yhat {
                        -d.ln()
                    } else {
                        -(1.0 - d).ln()
                    }
                })
                .sum::<f64>()
                / k
        })
        .sum();
    total / batch.len() as f64
}

/// Gradient of [`agreement_loss`] with respect to every weight (ignoring
/// the clamp, which only binds at saturated confidences).
pub fn agreement_grad(model: &LogisticAllocator, batch: &[BatchItem]) -> Vec<f64> {
    let n = model.n_features();
    let mut grad = vec![0.0; model.weights().len()];
    if batch.is_empty() {
        return grad;
    }
    let inv_b = 1.0 / batch.len() as f64;
    for item in batch {
        let scale = inv_b / item.members.len() as f64;
        for (&j, &y) in item.members.iter().zip(&item.labels) {
            let d = sigmoid(model.logit(j, &item.features));
            let target = if y == item.yhat { 1.0 } else { 0.0 };
            let g = scale * (d - target);
            let row = &mut grad[j * (n + 1)..(j + 1) * (n + 1)];
            for (gw, x) in row[..n].iter_mut().zip(&item.features) {
                *gw += g * x;
            }
            row[n] += g;
        }
    }
    grad
}

/// One full-batch gradient step on the agreement loss. Rows of annotators
/// that sat on no committee in the batch are untouched.
pub fn sgd_step(model: &LogisticAllocator, batch: &[BatchItem], eta: f64) -> LogisticAllocator {
    let mut next = model.clone();
    sgd_step_in_place(&mut next, batch, eta);
    next
}

pub(crate) fn sgd_step_in_place(model: &mut LogisticAllocator, batch: &[BatchItem], eta: f64) {
    if eta == 0.0 {
        return;
    }
    let g = agreement_grad(model, batch);
    for (w, gw) in model.weights_mut().iter_mut().zip(g) {
        *w -= eta * gw;
    }
}

/// The shared streaming loop. `choose` maps (model, task, 1-based step)
/// to the sampling distribution and the prior weight used, if any.
fn closed_loop<P, F>(
    stream: &[Task],
    pool: &P,
    mut model: LogisticAllocator,
    config: &TrainConfig,
    mut choose: F,
) -> Result<(LogisticAllocator, TrainHistory)>
where
    P: AnnotatorPool + ?Sized,
    F: FnMut(&LogisticAllocator, &Task, usize) -> Result<(AllocationDist, Option<f64>)>,
{
    let mut rng: SimRng = rng_from_seed(config.seed);
    let mut history = TrainHistory {
        records: Vec::with_capacity(stream.len()),
        updates: 0,
    };
    let mut buffer: Vec<BatchItem> = Vec::with_capacity(config.batch_size);
    for (i, task) in stream.iter().enumerate() {
        let step = i + 1;
        let (dist, mu) = choose(&model, task, step)?;
        debug_assert!(dist.validate().is_ok());
        let convened = pool.convene(task, &dist, config.k, &mut rng);
        let yhat = majority_vote(&convened.labels)?;
        let committee = convened.members.clone();
        buffer.push(BatchItem::new(task, convened, yhat));
        let mut loss = None;
        if buffer.len() == config.batch_size {
            loss = Some(agreement_loss(&model, &buffer));
            sgd_step_in_place(&mut model, &buffer, config.eta);
            history.updates += 1;
            buffer.clear();
        }
        history.records.push(StepRecord {
            step,
            mu,
            committee,
            yhat,
            loss,
        });
    }
    Ok((model, history))
}

fn feature_dim(stream: &[Task]) -> Result<usize> {
    let n = stream.first().map_or(0, Task::dim);
    if let Some(t) = stream.iter().find(|t| t.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: t.dim(),
        });
    }
    Ok(n)
}

/// Encodes the prior into the starting model (when `config.pretrain`),
/// then trains on the committees' own majority votes.
///
/// Pre-training uses the first `pretrain_samples` stream tasks, unlabeled.
pub fn strict_matching_run<P: AnnotatorPool + ?Sized>(
    stream: &[Task],
    pool: &P,
    dsim: &DSimMatrix,
    config: &TrainConfig,
) -> Result<(LogisticAllocator, TrainHistory)> {
    config.validate()?;
    check_pool(pool, dsim)?;
    let n = feature_dim(stream)?;
    let mut model = LogisticAllocator::zeros(pool.size(), n);
    if config.pretrain {
        let head = &stream[..config.pretrain_samples.min(stream.len())];
        model = pretrain_to_dsim(&model, head, dsim, config.pretrain_lr, config.pretrain_iters)?;
    }
    closed_loop(stream, pool, model, config, |m, task, _| {
        Ok((m.distribution(task)?, None))
    })
}

/// Starts from zero weights (a uniform learned distribution) and samples
/// committees from `mu * prior + (1 - mu) * learned`, with `mu` decaying
/// as `T_d / (t + T_d)`.
pub fn smooth_matching_run<P: AnnotatorPool + ?Sized>(
    stream: &[Task],
    pool: &P,
    dsim: &DSimMatrix,
    config: &TrainConfig,
) -> Result<(LogisticAllocator, TrainHistory)> {
    config.validate()?;
    check_pool(pool, dsim)?;
    let n = feature_dim(stream)?;
    let model = LogisticAllocator::zeros(pool.size(), n);
    closed_loop(stream, pool, model, config, |m, task, step| {
        let mu = config
            .mu_override
            .unwrap_or_else(|| mu_schedule(step, config.horizon));
        let prior = dsim_prior_dist(dsim, task.category);
        let learned = m.distribution(task)?;
        Ok((smooth_combine(&prior, &learned, mu)?, Some(mu)))
    })
}

fn check_pool<P: AnnotatorPool + ?Sized>(pool: &P, dsim: &DSimMatrix) -> Result<()> {
    if pool.size() != dsim.m() {
        return Err(Error::DimensionMismatch {
            expected: pool.size(),
            got: dsim.m(),
        });
    }
    Ok(())
}

/// A trained allocator as deployed at evaluation time.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Normalized scores of a logistic model.
    Learned(LogisticAllocator),
    /// Prior mixed in at a fixed weight, as at the end of Smooth-Matching.
    Smoothed {
        model: LogisticAllocator,
        dsim: DSimMatrix,
        mu: f64,
    },
    /// Input-independent distribution with per-annotator confidences.
    Fixed {
        dist: AllocationDist,
        confidence: Vec<f64>,
    },
}

impl Policy {
    pub fn dist(&self, task: &Task) -> Result<AllocationDist> {
        match self {
            Policy::Learned(m) => m.distribution(task),
            Policy::Smoothed { model, dsim, mu } => smooth_combine(
                &dsim_prior_dist(dsim, task.category),
                &model.distribution(task)?,
                *mu,
            ),
            Policy::Fixed { dist, .. } => Ok(dist.clone()),
        }
    }

    /// Confidence that `annotator` labels `task` correctly, in `[0, 1]`.
    pub fn confidence(&self, annotator: usize, task: &Task) -> Result<f64> {
        match self {
            Policy::Learned(m) | Policy::Smoothed { model: m, .. } => m.score(annotator, &task.features),
            Policy::Fixed { confidence, .. } => Ok(confidence[annotator]),
        }
    }
}
