//! Experiment configuration, trial orchestration and output.
//!
//! Configuration is layered: kind-specific defaults, then an optional
//! `key = value` file, then command-line overrides. Keys are the field
//! names below; per-method training settings use a `method.` prefix
//! (`smooth.eta`, `strict.pretrain_iters`, `goel.beta`, `tran.budget`,
//! `theory.delta`, ...). Blank lines and `#` comments are ignored.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{mu_schedule, LogisticAllocator};
use crate::annotators::{ranked_available_query, AnnotatorPool, Convened, ClusterExpert, ReplayPool, SimulatedPool};
use crate::baselines::{goel_run, keswani_run, tran_run, AccuracyEstimates, GoelConfig, TranConfig};
use crate::datagen::{gen_clusters, gen_dsim_noisy, ReplayDataset, SyntheticDatasetSpec, MAX_DSIM_NOISE};
use crate::domain::{majority_vote, CategoryId, Committee, DSimMatrix, LabelBit, Task};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, auc, label_accuracy, write_results, ResultRow, TrialReport};
use crate::rng::{derive_seed, rng_from_seed, tag, SimRng};
use crate::theoryval::{run_validators, TheoryConfig, TheoryReport};
use crate::training::{smooth_matching_run, strict_matching_run, Policy, TrainConfig, TrainHistory, SYNTHETIC_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Synthetic,
    Sweep,
    Replay,
    Theory,
}

/// The compared allocation methods. Ids are stable and key the random
/// streams, so reordering or dropping methods does not perturb the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smooth,
    Strict,
    Goel,
    Tran,
    Keswani,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Smooth, Method::Strict, Method::Goel, Method::Tran, Method::Keswani];

    pub fn id(self) -> u64 {
        match self {
            Method::Smooth => 0,
            Method::Strict => 1,
            Method::Goel => 2,
            Method::Tran => 3,
            Method::Keswani => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Smooth => "smooth",
            Method::Strict => "strict",
            Method::Goel => "goel",
            Method::Tran => "tran",
            Method::Keswani => "keswani",
        }
    }

    fn train_tag(self) -> u64 {
        tag::METHOD_BASE + 2 * self.id()
    }

    fn eval_tag(self) -> u64 {
        tag::METHOD_BASE + 2 * self.id() + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::config("methods", format!("unknown method `{s}`")))
    }
}

/// Which replay gold column scores the test labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldMode {
    Objective,
    Subjective,
}

impl FromStr for GoldMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "objective" => Ok(GoldMode::Objective),
            "subjective" => Ok(GoldMode::Subjective),
            other => Err(Error::config("gold", format!("expected objective or subjective, got `{other}`"))),
        }
    }
}

/// How the test committee is formed from the final distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// `eval_k` draws with replacement.
    Sample,
    /// The `eval_k` highest-ranked annotators.
    Top,
}

impl FromStr for Selection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sample" => Ok(Selection::Sample),
            "top" => Ok(Selection::Top),
            other => Err(Error::config("eval_select", format!("expected sample or top, got `{other}`"))),
        }
    }
}

/// Which distribution a trained Smooth-Matching allocator deploys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deploy {
    /// The prior mixture at the last training step's weight.
    Final,
    /// The learned model alone.
    Learned,
}

impl FromStr for Deploy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "final" => Ok(Deploy::Final),
            "learned" => Ok(Deploy::Learned),
            other => Err(Error::config("smooth_deploy", format!("expected final or learned, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    /// Prior noise for `synthetic`.
    pub s: f64,
    /// Noise grid for `sweep`.
    pub s_values: Vec<f64>,
    pub n_points: usize,
    /// Share of tasks used for training.
    pub train_frac: f64,
    /// Committee size at test time.
    pub eval_k: usize,
    pub eval_select: Selection,
    pub smooth_deploy: Deploy,
    pub replay: Option<PathBuf>,
    pub gold: Option<GoldMode>,
    pub strict: TrainConfig,
    pub smooth: TrainConfig,
    pub keswani: TrainConfig,
    pub goel: GoelConfig,
    pub tran: TranConfig,
    pub theory: TheoryConfig,
}

impl ExperimentConfig {
    pub fn synthetic() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Synthetic,
            methods: Method::ALL.to_vec(),
            trials: 50,
            seed: 0,
            s: 0.3,
            s_values: (0..=6).map(|i| i as f64 / 10.0).collect(),
            n_points: 10_000,
            train_frac: 0.7,
            eval_k: SYNTHETIC_K,
            eval_select: Selection::Sample,
            smooth_deploy: Deploy::Final,
            replay: None,
            gold: None,
            strict: TrainConfig::strict_synthetic(),
            smooth: TrainConfig::smooth_synthetic(),
            keswani: TrainConfig::keswani_synthetic(),
            goel: GoelConfig::default(),
            tran: TranConfig::default(),
            theory: TheoryConfig::default(),
        }
    }

    pub fn sweep() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Sweep,
            methods: vec![Method::Smooth, Method::Strict],
            trials: 20,
            ..Self::synthetic()
        }
    }

    pub fn replay() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Replay,
            trials: 25,
            eval_k: 1,
            gold: Some(GoldMode::Subjective),
            strict: TrainConfig::strict_replay(),
            smooth: TrainConfig::smooth_replay(),
            keswani: TrainConfig::keswani_replay(),
            goel: GoelConfig {
                k: 7,
                batch_size: 1000,
                ..GoelConfig::default()
            },
            tran: TranConfig {
                budget: 25,
                k: 7,
                ..TranConfig::default()
            },
            ..Self::synthetic()
        }
    }

    pub fn theory() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Theory,
            trials: crate::theoryval::DEFAULT_TRIALS,
            ..Self::synthetic()
        }
    }

    pub fn for_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Synthetic => Self::synthetic(),
            ExperimentKind::Sweep => Self::sweep(),
            ExperimentKind::Replay => Self::replay(),
            ExperimentKind::Theory => Self::theory(),
        }
    }

    pub fn train_config(&self, method: Method) -> Option<&TrainConfig> {
        match method {
            Method::Strict => Some(&self.strict),
            Method::Smooth => Some(&self.smooth),
            Method::Keswani => Some(&self.keswani),
            Method::Goel | Method::Tran => None,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        if let Some((prefix, field)) = key.split_once('.') {
            return match prefix {
                "strict" => set_train(&mut self.strict, key, field, value),
                "smooth" => set_train(&mut self.smooth, key, field, value),
                "keswani" => set_train(&mut self.keswani, key, field, value),
                "goel" => match field {
                    "k" => parse_into(key, value, &mut self.goel.k),
                    "batch_size" => parse_into(key, value, &mut self.goel.batch_size),
                    "beta" => parse_into(key, value, &mut self.goel.beta),
                    _ => Err(unknown(key)),
                },
                "tran" => match field {
                    "k" => parse_into(key, value, &mut self.tran.k),
                    "budget" => parse_into(key, value, &mut self.tran.budget),
                    "explore_frac" => parse_into(key, value, &mut self.tran.explore_frac),
                    _ => Err(unknown(key)),
                },
                "theory" => match field {
                    "alpha" => parse_into(key, value, &mut self.theory.claim1_alpha),
                    "m" => parse_into(key, value, &mut self.theory.claim1_m),
                    "steps" => parse_into(key, value, &mut self.theory.claim1_steps),
                    "claim1_delta" => parse_into(key, value, &mut self.theory.claim1_delta),
                    "delta" => parse_into(key, value, &mut self.theory.theorem_delta),
                    "claim2_alpha" => {
                        let mut a = 0.0;
                        parse_into(key, value, &mut a)?;
                        self.theory.claim2_alpha = Some(a);
                        Ok(())
                    }
                    _ => Err(unknown(key)),
                },
                _ => Err(unknown(key)),
            };
        }
        match key {
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?;
                Ok(())
            }
            "trials" => parse_into(key, value, &mut self.trials),
            "seed" => parse_into(key, value, &mut self.seed),
            "s" => parse_into(key, value, &mut self.s),
            "s_values" => {
                self.s_values = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|v| v.trim().parse().map_err(|_| Error::config(key, format!("not a number: `{v}`"))))
                    .collect::<Result<_>>()?;
                Ok(())
            }
            "n_points" => parse_into(key, value, &mut self.n_points),
            "train_frac" => parse_into(key, value, &mut self.train_frac),
            "eval_k" => parse_into(key, value, &mut self.eval_k),
            "eval_select" => {
                self.eval_select = value.parse()?;
                Ok(())
            }
            "smooth_deploy" => {
                self.smooth_deploy = value.parse()?;
                Ok(())
            }
            "replay" => {
                self.replay = Some(PathBuf::from(value));
                Ok(())
            }
            "gold" => {
                self.gold = Some(value.parse()?);
                Ok(())
            }
            _ => Err(unknown(key)),
        }
    }

    /// Applies every setting in a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let s_ok = |s: f64| (0.0..=MAX_DSIM_NOISE + 1e-12).contains(&s);
        if !s_ok(self.s) {
            return Err(Error::config("s", format!("must lie in [0, 2/3], got {}", self.s)));
        }
        if self.kind == ExperimentKind::Sweep {
            if self.s_values.is_empty() {
                return Err(Error::config("s_values", "sweep needs at least one s value"));
            }
            if let Some(s) = self.s_values.iter().find(|&&s| !s_ok(s)) {
                return Err(Error::config("s_values", format!("must lie in [0, 2/3], got {s}")));
            }
        }
        if self.kind != ExperimentKind::Theory && self.methods.is_empty() {
            return Err(Error::config("methods", "need at least one method"));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::config("train_frac", "must lie strictly between 0 and 1"));
        }
        if self.eval_k % 2 == 0 {
            return Err(Error::config("eval_k", "must be odd"));
        }
        if self.eval_select == Selection::Top && self.eval_k > 3 {
            return Err(Error::config("eval_k", "top selection takes at most 3 distinct annotators"));
        }
        if self.kind == ExperimentKind::Replay && self.gold.is_none() {
            return Err(Error::config("gold", "replay needs a gold mode"));
        }
        for (name, c) in [("strict", &self.strict), ("smooth", &self.smooth), ("keswani", &self.keswani)] {
            c.validate().map_err(|e| match e {
                Error::Config { field, msg } => Error::config(format!("{name}.{field}"), msg),
                other => other,
            })?;
        }
        if !(0.0..=1.0).contains(&self.goel.beta) {
            return Err(Error::config("goel.beta", "must lie in [0, 1]"));
        }
        if self.tran.budget == 0 {
            return Err(Error::config("tran.budget", "must be at least 1"));
        }
        Ok(())
    }
}

fn unknown(key: &str) -> Error {
    Error::config(key, "unknown setting")
}

fn parse_into<T: FromStr>(key: &str, value: &str, slot: &mut T) -> Result<()> {
    *slot = value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))?;
    Ok(())
}

fn set_train(c: &mut TrainConfig, key: &str, field: &str, value: &str) -> Result<()> {
    match field {
        "k" => parse_into(key, value, &mut c.k),
        "batch_size" => parse_into(key, value, &mut c.batch_size),
        "eta" => parse_into(key, value, &mut c.eta),
        "horizon" | "t_d" => parse_into(key, value, &mut c.horizon),
        "pretrain" => parse_into(key, value, &mut c.pretrain),
        "pretrain_samples" => parse_into(key, value, &mut c.pretrain_samples),
        "pretrain_lr" => parse_into(key, value, &mut c.pretrain_lr),
        "pretrain_iters" => parse_into(key, value, &mut c.pretrain_iters),
        "mu" => {
            let mut mu = 0.0;
            parse_into(key, value, &mut mu)?;
            c.mu_override = Some(mu);
            Ok(())
        }
        _ => Err(unknown(key)),
    }
}

/// Seeds of one trial, as echoed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub trial: u64,
    pub dataset: u64,
    pub split: u64,
    pub methods: Vec<(Method, u64, u64)>,
}

pub fn trial_seeds(cfg: &ExperimentConfig, trial: u64) -> TrialSeeds {
    TrialSeeds {
        trial,
        dataset: derive_seed(cfg.seed, trial, tag::DATASET),
        split: derive_seed(cfg.seed, trial, tag::SPLIT),
        methods: cfg
            .methods
            .iter()
            .map(|&m| {
                (
                    m,
                    derive_seed(cfg.seed, trial, m.train_tag()),
                    derive_seed(cfg.seed, trial, m.eval_tag()),
                )
            })
            .collect(),
    }
}

/// Everything needed to rerun an experiment byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub trials: Vec<TrialSeeds>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let trials = if cfg.kind == ExperimentKind::Theory {
            Vec::new()
        } else {
            (0..cfg.trials as u64).map(|t| trial_seeds(cfg, t)).collect()
        };
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            master_seed: cfg.seed,
            trials,
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Validation(e.to_string()))
    }
}

/// Shuffles task indices and cuts them at `frac`.
pub fn split_indices(n: usize, frac: f64, rng: &mut SimRng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let cut = ((n as f64) * frac).round() as usize;
    let test = idx.split_off(cut.min(n));
    (idx, test)
}

fn pick(tasks: &[Task], idx: &[usize]) -> Vec<Task> {
    idx.iter().map(|&i| tasks[i].clone()).collect()
}

/// Output of training one method: a deployable policy, plus Tran's
/// already-made test assignments.
pub struct Trained {
    pub policy: Option<Policy>,
    pub tran: Option<crate::baselines::TranOutcome>,
    pub history: TrainHistory,
}

fn final_mu(c: &TrainConfig, steps: usize) -> f64 {
    c.mu_override.unwrap_or_else(|| mu_schedule(steps.max(1), c.horizon))
}

/// Trains `method` on `train`. `test` is only used by Tran, whose test
/// phase is part of the method.
pub fn train_method<P: AnnotatorPool + ?Sized>(
    cfg: &ExperimentConfig,
    method: Method,
    train: &[Task],
    test: &[Task],
    pool: &P,
    dsim: &DSimMatrix,
    seed: u64,
) -> Result<Trained> {
    Ok(match method {
        Method::Strict => {
            let (model, history) = strict_matching_run(train, pool, dsim, &cfg.strict.clone().with_seed(seed))?;
            Trained {
                policy: Some(Policy::Learned(model)),
                tran: None,
                history,
            }
        }
        Method::Smooth => {
            let c = cfg.smooth.clone().with_seed(seed);
            let (model, history) = smooth_matching_run(train, pool, dsim, &c)?;
            let policy = match cfg.smooth_deploy {
                Deploy::Final => Policy::Smoothed {
                    model,
                    dsim: dsim.clone(),
                    mu: final_mu(&c, train.len()),
                },
                Deploy::Learned => Policy::Learned(model),
            };
            Trained {
                policy: Some(policy),
                tran: None,
                history,
            }
        }
        Method::Keswani => {
            let (model, history) = keswani_run(train, pool, &cfg.keswani.clone().with_seed(seed))?;
            Trained {
                policy: Some(Policy::Learned(model)),
                tran: None,
                history,
            }
        }
        Method::Goel => {
            let gc = GoelConfig { seed, ..cfg.goel.clone() };
            let (dist, est, history) = goel_run(train, pool, &gc)?;
            Trained {
                policy: Some(Policy::Fixed {
                    dist,
                    confidence: confidences(&est),
                }),
                tran: None,
                history,
            }
        }
        Method::Tran => {
            let tc = TranConfig { seed, ..cfg.tran.clone() };
            Trained {
                policy: None,
                tran: Some(tran_run(train, test, pool, &tc)?),
                history: TrainHistory::default(),
            }
        }
    })
}

fn confidences(est: &AccuracyEstimates) -> Vec<f64> {
    (0..est.m()).map(|i| est.mean_acc(i)).collect()
}

/// Test-time committee vote and assignment correctness on the synthetic
/// track.
pub fn evaluate_synthetic(
    trained: &Trained,
    test: &[Task],
    pool: &SimulatedPool<ClusterExpert>,
    eval_k: usize,
    select: Selection,
    rng: &mut SimRng,
) -> Result<(f64, f64)> {
    let gold: Vec<LabelBit> = test.iter().map(|t| pool.gold[t.id]).collect();
    if let Some(out) = &trained.tran {
        let preds: Vec<LabelBit> = out.assignments.iter().map(|a| a.label).collect();
        let their_gold: Vec<LabelBit> = out.assignments.iter().map(|a| pool.gold[a.task]).collect();
        let category: HashMap<usize, CategoryId> = test.iter().map(|t| (t.id, t.category)).collect();
        let right = out
            .assignments
            .iter()
            .filter(|a| pool.expert_for(category[&a.task]) == Some(a.annotator))
            .count();
        return Ok((
            label_accuracy(&preds, &their_gold)?,
            right as f64 / test.len().max(1) as f64,
        ));
    }
    let policy = trained.policy.as_ref().expect("non-Tran methods carry a policy");
    let mut preds = Vec::with_capacity(test.len());
    let mut right = 0usize;
    for t in test {
        let dist = policy.dist(t)?;
        let c = match select {
            Selection::Sample => pool.convene(t, &dist, eval_k, rng),
            Selection::Top => {
                let members: Vec<usize> = dist.ranking().into_iter().take(eval_k).collect();
                let labels = members
                    .iter()
                    .map(|&a| pool.query(a, t, rng).expect("simulated annotators always answer"))
                    .collect();
                Convened { members, labels }
            }
        };
        preds.push(majority_vote(&c.labels)?);
        let modal = Committee::new(c.members, pool.size())?.modal_member(&dist);
        if pool.expert_for(t.category) == Some(modal) {
            right += 1;
        }
    }
    Ok((label_accuracy(&preds, &gold)?, right as f64 / test.len() as f64))
}

/// Runs every method on one synthetic trial.
pub fn synthetic_trial(cfg: &ExperimentConfig, s: f64, trial: u64) -> Result<Vec<TrialReport>> {
    let seeds = trial_seeds(cfg, trial);
    let ds = gen_clusters(&SyntheticDatasetSpec {
        n_points: cfg.n_points,
        seed: seeds.dataset,
        ..Default::default()
    })?;
    let dsim = gen_dsim_noisy(s)?;
    let (tr, te) = split_indices(ds.tasks.len(), cfg.train_frac, &mut rng_from_seed(seeds.split));
    let train = pick(&ds.tasks, &tr);
    let test = pick(&ds.tasks, &te);
    let pool = SimulatedPool::new(ClusterExpert::panel(3), ds.gold.clone());
    seeds
        .methods
        .iter()
        .map(|&(method, train_seed, eval_seed)| {
            let trained = train_method(cfg, method, &train, &test, &pool, &dsim, train_seed)?;
            let (label, assign) = evaluate_synthetic(&trained, &test, &pool, cfg.eval_k, cfg.eval_select, &mut rng_from_seed(eval_seed))?;
            Ok(TrialReport {
                seed: seeds.dataset,
                method: method.name().to_string(),
                label_accuracy: label,
                assignment_accuracy: Some(assign),
                auc: None,
            })
        })
        .collect()
}

fn run_trials<F>(trials: usize, f: F) -> Result<Vec<TrialReport>>
where
    F: Fn(u64) -> Result<Vec<TrialReport>> + Sync + Send,
{
    let per: Vec<Vec<TrialReport>> = (0..trials as u64).into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn synthetic_reports(cfg: &ExperimentConfig, s: f64) -> Result<Vec<TrialReport>> {
    run_trials(cfg.trials, |t| synthetic_trial(cfg, s, t))
}

pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    Ok(aggregate(&synthetic_reports(cfg, cfg.s)?))
}

/// One block of rows per noise level.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<(f64, Vec<ResultRow>)>> {
    cfg.validate()?;
    cfg.s_values
        .iter()
        .map(|&s| Ok((s, aggregate(&synthetic_reports(cfg, s)?))))
        .collect()
}

fn gold_column(ds: &ReplayDataset, mode: GoldMode) -> &[LabelBit] {
    match mode {
        GoldMode::Objective => &ds.gold_objective,
        GoldMode::Subjective => &ds.gold_subjective,
    }
}

/// One label per test task from the top-ranked available annotator,
/// scored by that annotator's confidence.
pub fn evaluate_replay(
    trained: &Trained,
    ds: &ReplayDataset,
    test: &[Task],
    gold: &[LabelBit],
) -> Result<(f64, f64)> {
    let mut preds = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    let mut truth = Vec::with_capacity(test.len());
    let mut push = |label: LabelBit, conf: f64, task: &Task| {
        preds.push(label);
        scores.push(if label.is_one() { conf } else { 1.0 - conf });
        truth.push(gold[task.id]);
    };
    if let Some(out) = &trained.tran {
        for a in &out.assignments {
            push(a.label, out.estimates[a.annotator], &ds.tasks[a.task]);
        }
    } else {
        let policy = trained.policy.as_ref().expect("non-Tran methods carry a policy");
        for t in test {
            let dist = policy.dist(t)?;
            if let Some(&(j, y)) = ranked_available_query(ds, t.id, &dist, 1).first() {
                push(y, policy.confidence(j, t)?, t);
            }
        }
    }
    Ok((label_accuracy(&preds, &truth)?, auc(&scores, &truth)?))
}

/// The replay prior: annotators match the category of their own group;
/// category 2 targets no group and gets no prior mass.
pub fn replay_dsim(ds: &ReplayDataset) -> DSimMatrix {
    ds.matching_dsim(&[CategoryId(2)])
}

pub fn replay_trial(cfg: &ExperimentConfig, ds: &ReplayDataset, trial: u64) -> Result<Vec<TrialReport>> {
    let seeds = trial_seeds(cfg, trial);
    let gold = gold_column(ds, cfg.gold.ok_or_else(|| Error::config("gold", "replay needs a gold mode"))?);
    let (tr, te) = split_indices(ds.tasks.len(), cfg.train_frac, &mut rng_from_seed(seeds.split));
    let train = pick(&ds.tasks, &tr);
    let test = pick(&ds.tasks, &te);
    let pool = ReplayPool::new(ds);
    let dsim = replay_dsim(ds);
    seeds
        .methods
        .iter()
        .map(|&(method, train_seed, _)| {
            let trained = train_method(cfg, method, &train, &test, &pool, &dsim, train_seed)?;
            let (label, area) = evaluate_replay(&trained, ds, &test, gold)?;
            Ok(TrialReport {
                seed: seeds.split,
                method: method.name().to_string(),
                label_accuracy: label,
                assignment_accuracy: None,
                auc: Some(area),
            })
        })
        .collect()
}

pub fn replay_reports(cfg: &ExperimentConfig, ds: &ReplayDataset) -> Result<Vec<TrialReport>> {
    cfg.validate()?;
    ds.validate()?;
    run_trials(cfg.trials, |t| replay_trial(cfg, ds, t))
}

pub fn run_replay(cfg: &ExperimentConfig, ds: &ReplayDataset) -> Result<Vec<ResultRow>> {
    Ok(aggregate(&replay_reports(cfg, ds)?))
}

pub fn write_sweep<W: Write>(out: W, blocks: &[(f64, Vec<ResultRow>)]) -> Result<()> {
    let mut s_col = Vec::new();
    let mut rows = Vec::new();
    for (s, block) in blocks {
        for r in block {
            s_col.push(format!("{s:.4}"));
            rows.push(r.clone());
        }
    }
    write_results(out, &[("s", s_col)], &rows)
}

/// All four validators with the run's trial count and master seed.
pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryReport> {
    cfg.validate()?;
    run_validators(&TheoryConfig {
        trials: cfg.trials,
        seed: cfg.seed,
        ..cfg.theory.clone()
    })
}

/// Histories of the first trial, one per trained method, for inspection.
pub fn synthetic_histories(cfg: &ExperimentConfig) -> Result<Vec<(Method, TrainHistory, Option<LogisticAllocator>)>> {
    let seeds = trial_seeds(cfg, 0);
    let ds = gen_clusters(&SyntheticDatasetSpec {
        n_points: cfg.n_points,
        seed: seeds.dataset,
        ..Default::default()
    })?;
    let dsim = gen_dsim_noisy(cfg.s)?;
    let (tr, te) = split_indices(ds.tasks.len(), cfg.train_frac, &mut rng_from_seed(seeds.split));
    let train = pick(&ds.tasks, &tr);
    let test = pick(&ds.tasks, &te);
    let pool = SimulatedPool::new(ClusterExpert::panel(3), ds.gold.clone());
    seeds
        .methods
        .iter()
        .map(|&(m, seed, _)| {
            let t = train_method(cfg, m, &train, &test, &pool, &dsim, seed)?;
            let model = match t.policy {
                Some(Policy::Learned(model)) | Some(Policy::Smoothed { model, .. }) => Some(model),
                _ => None,
            };
            Ok((m, t.history, model))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            trials: 2,
            n_points: 600,
            ..ExperimentConfig::synthetic()
        }
    }

    #[test]
    fn config_text_and_precedence() {
        let mut c = ExperimentConfig::synthetic();
        c.apply_text("# comment\ntrials = 7\nsmooth.eta = 0.2\nmethods = smooth, goel\n\n").unwrap();
        assert_eq!(c.trials, 7);
        assert_eq!(c.smooth.eta, 0.2);
        assert_eq!(c.methods, vec![Method::Smooth, Method::Goel]);
        c.set("trials", "3").unwrap();
        assert_eq!(c.trials, 3);
        assert!(matches!(c.apply_text("trials 3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(c.set("bogus", "1"), Err(Error::Config { .. })));
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ExperimentConfig::sweep();
        c.s_values.clear();
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "s_values"),
            other => panic!("{other:?}"),
        }
        let mut c = ExperimentConfig::synthetic();
        c.s = 0.9;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::synthetic();
        c.smooth.k = 4;
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "smooth.k"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seeds_do_not_depend_on_method_list() {
        let a = trial_seeds(&ExperimentConfig::synthetic(), 3);
        let mut cfg = ExperimentConfig::synthetic();
        cfg.methods = vec![Method::Keswani];
        let b = trial_seeds(&cfg, 3);
        assert_eq!(a.dataset, b.dataset);
        let k = a.methods.iter().find(|m| m.0 == Method::Keswani).unwrap();
        assert_eq!(k, &b.methods[0]);
    }

    #[test]
    fn synthetic_small_run_is_deterministic() {
        let c = small();
        let a = run_synthetic(&c).unwrap();
        let b = run_synthetic(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        let mut one = c.clone();
        one.trials = 1;
        assert!(run_synthetic(&one).unwrap().iter().all(|r| r.stderr.is_none()));
    }

    #[test]
    fn split_sizes() {
        let (a, b) = split_indices(10, 0.7, &mut rng_from_seed(0));
        assert_eq!((a.len(), b.len()), (7, 3));
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }
}
