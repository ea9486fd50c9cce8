//! Checks of the bias and convergence statements about tabular dynamics.
//!
//! Everything here runs on [`TabularAllocator`] with the reward/penalty
//! update, not on the logistic path. Monte Carlo estimates are reported
//! with their standard errors so callers can apply a z-band.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::TabularAllocator;
use crate::annotators::BiasedAnnotator;
use crate::domain::{majority_vote, CategoryId, LabelBit};
use crate::error::{Error, Result};
use crate::metrics::mean_stderr;
use crate::rng::{stream, tag};
use crate::training::sample_committee;

/// Two groups; a fraction `alpha` of the annotators is biased against
/// group 0, the rest against group 1. `gamma` is the similarity score the
/// prior gives an annotator on the group they are biased against (1 on
/// the other group).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StylizedPool {
    pub m: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl StylizedPool {
    pub fn new(m: usize, alpha: f64, gamma: f64) -> Result<Self> {
        let p = StylizedPool { m, alpha, gamma };
        p.validate()?;
        Ok(p)
    }

    /// Accepts the boundary `alpha = 0.5` used for symmetry checks.
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::config("m", "need at least two annotators"));
        }
        if !(0.5..1.0).contains(&self.alpha) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: self.alpha,
                lo: 0.5,
                hi: 1.0,
            });
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: self.gamma,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }

    pub fn n_biased_against_zero(&self) -> usize {
        (self.alpha * self.m as f64).round() as usize
    }

    pub fn annotators(&self) -> Vec<BiasedAnnotator> {
        let a = self.n_biased_against_zero();
        (0..self.m)
            .map(|i| BiasedAnnotator::new(CategoryId(usize::from(i >= a))))
            .collect()
    }

    /// Expected accuracy on each group when annotators are drawn from the
    /// rows of `tab`.
    pub fn group_accuracy(&self, tab: &TabularAllocator) -> [f64; 2] {
        let ann = self.annotators();
        [0, 1].map(|z| {
            let g = CategoryId(z);
            tab.row(g)
                .iter()
                .zip(&ann)
                .map(|(w, a)| w * a.accuracy_on(g))
                .sum()
        })
    }
}

/// Mean and standard error of a Monte Carlo quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Estimate {
    fn from_samples(v: &[f64]) -> Result<Self> {
        let (mean, stderr) = mean_stderr(v)?;
        Ok(Estimate {
            mean,
            stderr,
            trials: v.len(),
        })
    }
}

/// Mean group-accuracy gap (group 1 minus group 0) before training and
/// after each of `steps` single-annotator tabular updates, starting from
/// uniform rows.
pub fn claim1_disparity_trajectory(
    pool: &StylizedPool,
    steps: usize,
    trials: usize,
    delta: f64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    pool.validate()?;
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial, tag::THEORY_BASE + 1);
            let mut tab = TabularAllocator::uniform(2, pool.m);
            let mut gaps = Vec::with_capacity(steps + 1);
            let gap = |t: &TabularAllocator| {
                let [a0, a1] = pool.group_accuracy(t);
                a1 - a0
            };
            gaps.push(gap(&tab));
            for _ in 0..steps {
                let z = CategoryId(rng.random_range(0..2));
                let c = sample_committee(&tab.dist(z), 1, &mut rng).expect("odd");
                // A lone member's label is the vote, so the member is
                // always rewarded whatever it answers.
                let chosen = c.members()[0];
                let mut rewarded = vec![false; pool.m];
                rewarded[chosen] = true;
                tab.update(z, &rewarded, delta);
                gaps.push(gap(&tab));
            }
            gaps
        })
        .collect();
    (0..=steps)
        .map(|s| {
            let col: Vec<f64> = per_trial.iter().map(|g| g[s]).collect();
            Estimate::from_samples(&col)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim2 {
    pub disc: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Claim2 {
    pub fn within_bounds(&self) -> bool {
        self.lower <= self.disc && self.disc <= self.upper
    }
}

/// Closed-form group gap under the prior allocation, with the bound pair
/// `(gamma/2, alpha/(1-alpha) * gamma/2)`.
pub fn claim2_disparity(alpha: f64, gamma: f64) -> Claim2 {
    let a = alpha;
    let g = gamma;
    let first = if g == 0.0 { 0.0 } else { 0.5 * a * g / ((1.0 - a) + a * g) };
    let second = if g == 0.0 { 0.0 } else { 0.5 * (1.0 - a) * g / ((1.0 - a) * g + a) };
    Claim2 {
        disc: first - second,
        lower: g / 2.0,
        upper: a / (1.0 - a) * g / 2.0,
    }
}

/// Row the theorem places on the target: dSim gap `beta` over the best
/// competitor, everyone else equal.
fn theorem1_row(beta: f64, m: usize) -> Vec<f64> {
    let top = (beta * (m as f64 - 1.0) + 1.0) / m as f64;
    let rest = (1.0 - top) / (m as f64 - 1.0);
    let mut row = vec![rest; m];
    row[0] = top;
    row
}

fn theorem1_check(beta: f64, m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::config("m", "need at least two annotators"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Monte Carlo one-step change in the target's weight with `k = 1`. The
/// target (annotator 0) is always right, the others always wrong.
pub fn theorem1_gain(beta: f64, m: usize, delta: f64, trials: usize, seed: u64) -> Result<Estimate> {
    theorem1_check(beta, m)?;
    let row = theorem1_row(beta, m);
    let tab = TabularAllocator::from_rows(vec![row.clone()])?;
    let z = CategoryId(0);
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial, tag::THEORY_BASE + 2);
            let c = sample_committee(&tab.dist(z), 1, &mut rng).expect("odd");
            let mut rewarded = vec![false; m];
            rewarded[c.members()[0]] = true;
            tab.tabular_update(z, &rewarded, delta).row(z)[0] - row[0]
        })
        .collect();
    Estimate::from_samples(&samples)
}

/// The same expectation by enumerating which annotator is selected.
pub fn theorem1_exact(beta: f64, m: usize, delta: f64) -> Result<f64> {
    theorem1_check(beta, m)?;
    let row = theorem1_row(beta, m);
    let tab = TabularAllocator::from_rows(vec![row.clone()])?;
    let z = CategoryId(0);
    Ok((0..m)
        .map(|j| {
            let mut rewarded = vec![false; m];
            rewarded[j] = true;
            row[j] * (tab.tabular_update(z, &rewarded, delta).row(z)[0] - row[0])
        })
        .sum())
}

/// Stated committee-size threshold `1 - (1 - k/(2m))^(1/k)`.
pub fn theorem2_threshold(k: usize, m: usize) -> f64 {
    let inner = (1.0 - k as f64 / (2.0 * m as f64)).max(0.0);
    1.0 - inner.powf(1.0 / k as f64)
}

/// Share of the prior row on accurate annotators (target included) in
/// [`theorem2_gain`].
pub const THEOREM2_ACCURATE_MASS: f64 = 0.75;

/// Row for the committee check: target 0 at `eps`, further accurate
/// annotators topping accurate mass up to 0.75, coin-flip annotators
/// sharing 0.25.
pub fn theorem2_pool(eps: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 3 {
        return Err(Error::config("m", "need at least three annotators"));
    }
    if !(0.0..THEOREM2_ACCURATE_MASS).contains(&eps) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            lo: 0.0,
            hi: THEOREM2_ACCURATE_MASS,
        });
    }
    let n_acc = ((m - 1) / 2).max(1);
    let n_coin = m - 1 - n_acc;
    let mut row = vec![0.0; m];
    let mut accuracy = vec![0.0; m];
    row[0] = eps;
    accuracy[0] = 1.0;
    for i in 1..=n_acc {
        row[i] = (THEOREM2_ACCURATE_MASS - eps) / n_acc as f64;
        accuracy[i] = 1.0;
    }
    for i in n_acc + 1..m {
        row[i] = (1.0 - THEOREM2_ACCURATE_MASS) / n_coin as f64;
        accuracy[i] = 0.5;
    }
    Ok((row, accuracy))
}

/// Monte Carlo one-step change of the target's weight with committee
/// size `k`, rewarding members who agree with the majority.
pub fn theorem2_gain(eps: f64, k: usize, m: usize, delta: f64, trials: usize, seed: u64) -> Result<Estimate> {
    if k % 2 == 0 {
        return Err(Error::EvenCommittee(k));
    }
    let (row, accuracy) = theorem2_pool(eps, m)?;
    let tab = TabularAllocator::from_rows(vec![row.clone()])?;
    let z = CategoryId(0);
    let dist = tab.dist(z);
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, trial, tag::THEORY_BASE + 3);
            let c = sample_committee(&dist, k, &mut rng).expect("odd");
            let gold = LabelBit::ONE;
            let mut answer: Vec<Option<LabelBit>> = vec![None; m];
            let labels: Vec<LabelBit> = c
                .members()
                .iter()
                .map(|&a| {
                    *answer[a].get_or_insert_with(|| {
                        if rng.random_bool(accuracy[a]) {
                            gold
                        } else {
                            gold.flipped()
                        }
                    })
                })
                .collect();
            let yhat = majority_vote(&labels).expect("odd");
            let mut rewarded = vec![false; m];
            for (&a, &y) in c.members().iter().zip(&labels) {
                if y == yhat {
                    rewarded[a] = true;
                }
            }
            tab.tabular_update(z, &rewarded, delta).row(z)[0] - row[0]
        })
        .collect();
    Estimate::from_samples(&samples)
}

pub const DEFAULT_TRIALS: usize = 5000;
/// Confidence band in standard errors.
pub const Z_BAND: f64 = 3.0;
/// Band used when fewer than [`UNDERPOWERED_TRIALS`] trials are run.
pub const Z_BAND_UNDERPOWERED: f64 = 5.0;
pub const UNDERPOWERED_TRIALS: usize = 100;

pub fn z_band(trials: usize) -> f64 {
    if trials < UNDERPOWERED_TRIALS {
        Z_BAND_UNDERPOWERED
    } else {
        Z_BAND
    }
}

/// One line of the validator report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub params: serde_json::Value,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
    pub warning: String,
}

/// The grid axes for the closed-form bound check.
pub fn claim2_grid() -> (Vec<f64>, Vec<f64>) {
    let alphas = (0..9).map(|i| 0.55 + 0.05 * i as f64).collect();
    let gammas = (1..=10).map(|i| 0.1 * i as f64).collect();
    (alphas, gammas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConfig {
    pub trials: usize,
    pub seed: u64,
    pub claim1_alpha: f64,
    pub claim1_m: usize,
    pub claim1_steps: usize,
    pub claim1_delta: f64,
    /// Restricts the Claim 2 grid to one alpha when set.
    pub claim2_alpha: Option<f64>,
    pub theorem_delta: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            trials: DEFAULT_TRIALS,
            seed: 0,
            claim1_alpha: 0.7,
            claim1_m: 10,
            claim1_steps: 100,
            claim1_delta: 0.01,
            claim2_alpha: None,
            theorem_delta: 0.1,
        }
    }
}

/// Detailed outcome of every validator; [`TheoryReport::summary`] folds
/// it to one row per validator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub claim1: Vec<CheckRow>,
    pub claim2: Vec<CheckRow>,
    pub theorem1: Vec<CheckRow>,
    pub theorem2: Vec<CheckRow>,
}

impl TheoryReport {
    pub fn all(&self) -> impl Iterator<Item = &CheckRow> {
        self.claim1
            .iter()
            .chain(&self.claim2)
            .chain(&self.theorem1)
            .chain(&self.theorem2)
    }

    pub fn passed(&self) -> bool {
        self.all().all(|r| r.pass)
    }

    /// One row per validator: the worst margin among its cells.
    pub fn summary(&self) -> Vec<CheckRow> {
        let fold = |name: &str, rows: &[CheckRow]| {
            let failing = rows.iter().filter(|r| !r.pass).count();
            let worst = rows
                .iter()
                .find(|r| !r.pass)
                .or_else(|| rows.first())
                .cloned();
            let (observed, bound, warning) = worst
                .map(|r| (r.observed, r.bound, r.warning))
                .unwrap_or((f64::NAN, f64::NAN, String::new()));
            CheckRow {
                check: name.to_string(),
                params: serde_json::json!({ "cells": rows.len(), "failing": failing }),
                observed,
                bound,
                pass: failing == 0,
                warning,
            }
        };
        vec![
            fold("claim1", &self.claim1),
            fold("claim2", &self.claim2),
            fold("theorem1", &self.theorem1),
            fold("theorem2", &self.theorem2),
        ]
    }
}

fn warning_for(trials: usize) -> String {
    if trials < UNDERPOWERED_TRIALS {
        format!("underpowered: {trials} trials, band widened to {Z_BAND_UNDERPOWERED} stderr")
    } else {
        String::new()
    }
}

/// Runs all four validators.
pub fn run_validators(cfg: &TheoryConfig) -> Result<TheoryReport> {
    if cfg.trials < 2 {
        return Err(Error::TooFewTrials(cfg.trials));
    }
    let z = z_band(cfg.trials);
    let warning = warning_for(cfg.trials);

    let pool = StylizedPool::new(cfg.claim1_m, cfg.claim1_alpha, 1.0)?;
    let target = pool.n_biased_against_zero() as f64 / pool.m as f64 - 0.5;
    let traj = claim1_disparity_trajectory(&pool, cfg.claim1_steps, cfg.trials, cfg.claim1_delta, cfg.seed)?;
    let claim1 = traj
        .iter()
        .enumerate()
        .map(|(step, e)| {
            // Fixed tolerance plus the sampling band.
            let tol = 0.03;
            CheckRow {
                check: "claim1".into(),
                params: serde_json::json!({"alpha": cfg.claim1_alpha, "m": cfg.claim1_m, "step": step, "delta": cfg.claim1_delta}),
                observed: e.mean,
                bound: target,
                pass: (e.mean - target).abs() <= tol,
                warning: warning.clone(),
            }
        })
        .collect();

    let (alphas, gammas) = claim2_grid();
    let alphas = cfg.claim2_alpha.map_or(alphas, |a| vec![a]);
    let mut claim2 = Vec::new();
    for &a in &alphas {
        for &g in &gammas {
            let c = claim2_disparity(a, g);
            claim2.push(CheckRow {
                check: "claim2".into(),
                params: serde_json::json!({"alpha": a, "gamma": g, "upper": c.upper}),
                observed: c.disc,
                bound: c.lower,
                pass: c.within_bounds(),
                warning: String::new(),
            });
        }
    }

    let mut theorem1 = Vec::new();
    for (bi, &beta) in [0.1, 0.2, 0.3].iter().enumerate() {
        for (mi, &m) in [2usize, 5, 10].iter().enumerate() {
            for (di, &delta) in [0.05, 0.1].iter().enumerate() {
                let cell = (bi * 9 + mi * 3 + di) as u64;
                let e = theorem1_gain(beta, m, delta, cfg.trials, cfg.seed.wrapping_add(cell))?;
                let bound = 2.0 * beta * delta;
                theorem1.push(CheckRow {
                    check: "theorem1".into(),
                    params: serde_json::json!({"beta": beta, "m": m, "delta": delta, "stderr": e.stderr}),
                    observed: e.mean,
                    bound,
                    pass: e.mean >= bound - z * e.stderr,
                    warning: warning.clone(),
                });
            }
        }
    }

    let mut theorem2 = Vec::new();
    for (ki, &k) in [1usize, 3, 5].iter().enumerate() {
        for (mi, &m) in [3usize, 5, 10].iter().enumerate() {
            let thr = theorem2_threshold(k, m);
            let cell = (ki * 3 + mi) as u64 * 2;
            let above = thr + 0.05;
            let below = (thr - 0.05).max(0.0);
            let up = theorem2_gain(above, k, m, cfg.theorem_delta, cfg.trials, cfg.seed.wrapping_add(cell))?;
            let down = theorem2_gain(below, k, m, cfg.theorem_delta, cfg.trials, cfg.seed.wrapping_add(cell + 1))?;
            theorem2.push(CheckRow {
                check: "theorem2".into(),
                params: serde_json::json!({"k": k, "m": m, "eps": above, "side": "above", "stderr": up.stderr}),
                observed: up.mean,
                bound: thr,
                pass: up.mean - z * up.stderr > 0.0,
                warning: warning.clone(),
            });
            theorem2.push(CheckRow {
                check: "theorem2".into(),
                params: serde_json::json!({"k": k, "m": m, "eps": below, "side": "below", "stderr": down.stderr}),
                observed: down.mean,
                bound: thr,
                pass: down.mean - z * down.stderr <= 0.0,
                warning: warning.clone(),
            });
        }
    }

    Ok(TheoryReport {
        claim1,
        claim2,
        theorem1,
        theorem2,
    })
}

pub const CHECK_COLUMNS: [&str; 6] = ["check", "param_json", "observed", "bound", "pass", "warning"];

pub fn write_checks<W: std::io::Write>(out: W, rows: &[CheckRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CHECK_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.check.clone(),
            r.params.to_string(),
            format!("{:.6}", r.observed),
            format!("{:.6}", r.bound),
            r.pass.to_string(),
            r.warning.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::TabularAllocator;
    use crate::domain::DSimMatrix;

    #[test]
    fn claim2_examples() {
        let c = claim2_disparity(0.7, 0.0);
        assert_eq!((c.disc, c.lower, c.upper), (0.0, 0.0, 0.0));
        for a in [0.55, 0.7, 0.9] {
            assert!((claim2_disparity(a, 1.0).disc - (a - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn claim2_closed_form_matches_direct_evaluation() {
        // Build the prior rows from the similarity scores and evaluate the
        // accuracy gap directly.
        for &(alpha, gamma) in &[(0.7, 0.4), (0.6, 0.9), (0.9, 0.1)] {
            let m = 1000;
            let pool = StylizedPool::new(m, alpha, gamma).unwrap();
            let nb = pool.n_biased_against_zero();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|i| if i < nb { vec![gamma, 1.0] } else { vec![1.0, gamma] })
                .collect();
            let tab = TabularAllocator::from_dsim(&DSimMatrix::from_rows(rows).unwrap());
            let [a0, a1] = pool.group_accuracy(&tab);
            let c = claim2_disparity(alpha, gamma);
            assert!(((a1 - a0) - c.disc).abs() < 1e-9, "{alpha} {gamma}: {} vs {}", a1 - a0, c.disc);
        }
    }

    #[test]
    fn claim1_starts_at_bias_gap() {
        let pool = StylizedPool::new(10, 0.7, 1.0).unwrap();
        let t = claim1_disparity_trajectory(&pool, 5, 50, 0.01, 1).unwrap();
        assert_eq!(t.len(), 6);
        assert!((t[0].mean - 0.2).abs() < 1e-12);
        let sym = StylizedPool::new(10, 0.5, 1.0).unwrap();
        let t = claim1_disparity_trajectory(&sym, 50, 400, 0.01, 2).unwrap();
        assert!(t.iter().all(|e| e.mean.abs() < 0.02));
    }

    #[test]
    fn theorem1_monte_carlo_matches_enumeration() {
        for &(beta, m) in &[(0.2, 2), (0.1, 5), (0.3, 10)] {
            let exact = theorem1_exact(beta, m, 0.1).unwrap();
            let mc = theorem1_gain(beta, m, 0.1, 20_000, 3).unwrap();
            assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr + 1e-12, "{beta} {m}");
            // Expected gain is exactly beta * delta.
            assert!((exact - beta * 0.1).abs() < 1e-12);
        }
        assert!(theorem1_exact(0.0, 4, 0.1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn theorem1_gain_grows_with_beta() {
        let g: Vec<f64> = [0.0, 0.1, 0.2, 0.3]
            .iter()
            .map(|&b| theorem1_exact(b, 5, 0.1).unwrap())
            .collect();
        assert!(g.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn theorem2_threshold_values() {
        assert!((theorem2_threshold(1, 2) - 0.25).abs() < 1e-12);
        assert!((theorem2_threshold(3, 3) - (1.0 - 0.5f64.powf(1.0 / 3.0))).abs() < 1e-12);
        assert!((theorem2_threshold(3, 3) - 0.2063).abs() < 1e-4);
        assert!(theorem2_threshold(1, 1_000_000) < 1e-6);
        for k in [1, 3, 5] {
            let t: Vec<f64> = (3..30).map(|m| theorem2_threshold(k, m)).collect();
            assert!(t.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn theorem2_single_member_expectation() {
        // k = 1: the chosen annotator always agrees with itself, so the
        // expected change is delta * (eps - (1 - eps)/(m - 1)).
        let (eps, m, d) = (0.4, 5, 0.1);
        let e = theorem2_gain(eps, 1, m, d, 40_000, 8).unwrap();
        let exact = d * (eps - (1.0 - eps) / (m as f64 - 1.0));
        assert!((e.mean - exact).abs() <= 3.0 * e.stderr, "{} vs {exact}", e.mean);
    }

    #[test]
    fn theorem2_pool_shape() {
        let (row, acc) = theorem2_pool(0.2, 10).unwrap();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let acc_mass: f64 = row.iter().zip(&acc).filter(|(_, &a)| a == 1.0).map(|(w, _)| w).sum();
        assert!((acc_mass - 0.75).abs() < 1e-12);
        assert!(theorem2_pool(0.8, 10).is_err());
    }

    #[test]
    fn validator_rows_have_fixed_columns() {
        let cfg = TheoryConfig {
            trials: 20,
            claim1_steps: 3,
            ..TheoryConfig::default()
        };
        let r = run_validators(&cfg).unwrap();
        assert_eq!(r.claim2.len(), 90);
        assert_eq!(r.theorem1.len(), 18);
        assert_eq!(r.theorem2.len(), 18);
        let s = r.summary();
        assert_eq!(s.len(), 4);
        assert!(s[0].warning.contains("underpowered"));
        let mut buf = Vec::new();
        write_checks(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("check,param_json,observed,bound,pass,warning\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
