//! Allocation models.
//!
//! [`LogisticAllocator`] is the model trained by the closed-loop
//! algorithms: one linear scorer per annotator, squashed through a
//! sigmoid. [`TabularAllocator`] is a per-category weight table updated by
//! additive reward/penalty steps; it is the model the bias and convergence
//! statements in [`crate::theoryval`] are about.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{AllocationDist, CategoryId, DSimMatrix, Task, SIMPLEX_TOL};
use crate::error::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `m` per-annotator logistic scorers over `n` features plus a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticAllocator {
    m: usize,
    n: usize,
    /// Row-major `m x (n + 1)`; the last column is the bias.
    weights: Vec<f64>,
}

impl LogisticAllocator {
    pub fn zeros(m: usize, n: usize) -> Self {
        LogisticAllocator {
            m,
            n,
            weights: vec![0.0; m * (n + 1)],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Validation("allocator needs at least one annotator".into()));
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(Error::Validation("weight rows need a bias column".into()));
        }
        let mut weights = Vec::with_capacity(m * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: r.len(),
                });
            }
            if r.iter().any(|w| !w.is_finite()) {
                return Err(Error::Validation("weights must be finite".into()));
            }
            weights.extend(r);
        }
        Ok(LogisticAllocator {
            m,
            n: width - 1,
            weights,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_features(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n + 1;
        &self.weights[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.n + 1;
        &mut self.weights[i * w..(i + 1) * w]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `w_i . [x; 1]`, unchecked.
    pub(crate) fn logit(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.row(i);
        r[..self.n].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + r[self.n]
    }

    /// Confidence of annotator `i` on features `x`.
    pub fn score(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(sigmoid(self.logit(i, x)))
    }

    /// Every annotator's confidence for a task, each in `(0, 1)`.
    pub fn alloc_scores(&self, task: &Task) -> Result<Vec<f64>> {
        self.scores(&task.features)
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok((0..self.m).map(|i| sigmoid(self.logit(i, x))).collect())
    }

    /// Scores normalized onto the simplex.
    pub fn distribution(&self, task: &Task) -> Result<AllocationDist> {
        AllocationDist::normalize(&self.alloc_scores(task)?)
    }

    /// Writes `m n` on the first line, then one row of `n + 1` weights per
    /// annotator with 17 significant digits.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.m, self.n)?;
        for i in 0..self.m {
            let line: Vec<String> = self.row(i).iter().map(|w| format!("{w:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty checkpoint"))?;
        let header = header?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::parse(1, format!("bad dimension `{s}`"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(Error::parse(1, "header must be `m n`"));
        };
        let mut rows = Vec::with_capacity(m);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::parse(i + 1, format!("bad weight `{s}`"))))
                .collect::<Result<_>>()?;
            if row.len() != n + 1 {
                return Err(Error::parse(i + 1, format!("expected {} weights", n + 1)));
            }
            rows.push(row);
        }
        if rows.len() != m {
            return Err(Error::Validation(format!("checkpoint declares {m} rows, has {}", rows.len())));
        }
        Self::from_rows(rows)
    }
}

/// The allocation a similarity prior induces on its own: the category's
/// dSim column, normalized.
pub fn dsim_prior_dist(dsim: &DSimMatrix, category: CategoryId) -> AllocationDist {
    AllocationDist::normalize(&dsim.column(category)).expect("dSim has at least one annotator")
}

/// Mean squared error of the scores against normalized dSim targets,
/// summed over annotators.
pub fn pretrain_mse(model: &LogisticAllocator, tasks: &[Task], dsim: &DSimMatrix) -> Result<f64> {
    let mut total = 0.0;
    for t in tasks {
        let target = dsim_prior_dist(dsim, t.category);
        let s = model.alloc_scores(t)?;
        total += s
            .iter()
            .zip(target.probs())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok(total / tasks.len() as f64)
}

/// Gradient of [`pretrain_mse`] with respect to every weight.
pub fn pretrain_mse_grad(
    model: &LogisticAllocator,
    tasks: &[Task],
    dsim: &DSimMatrix,
) -> Result<Vec<f64>> {
    let n = model.n_features();
    let mut grad = vec![0.0; model.weights().len()];
    let scale = 2.0 / tasks.len() as f64;
    for t in tasks {
        model.check_dim(&t.features)?;
        let target = dsim_prior_dist(dsim, t.category);
        for i in 0..model.m() {
            let s = sigmoid(model.logit(i, &t.features));
            let g = scale * (s - target.get(i)) * s * (1.0 - s);
            let row = &mut grad[i * (n + 1)..(i + 1) * (n + 1)];
            for (gw, x) in row[..n].iter_mut().zip(&t.features) {
                *gw += g * x;
            }
            row[n] += g;
        }
    }
    Ok(grad)
}

/// Regresses the scores onto the prior by gradient descent on
/// [`pretrain_mse`] over the whole sample, so that the normalized output
/// starts out proportional to dSim. The tasks are used unlabeled.
pub fn pretrain_to_dsim(
    model: &LogisticAllocator,
    tasks: &[Task],
    dsim: &DSimMatrix,
    lr: f64,
    iters: usize,
) -> Result<LogisticAllocator> {
    let mut out = model.clone();
    if iters == 0 || tasks.is_empty() {
        return Ok(out);
    }
    if dsim.m() != model.m() {
        return Err(Error::DimensionMismatch {
            expected: model.m(),
            got: dsim.m(),
        });
    }
    for _ in 0..iters {
        let g = pretrain_mse_grad(&out, tasks, dsim)?;
        for (w, gw) in out.weights.iter_mut().zip(g) {
            *w -= lr * gw;
        }
    }
    Ok(out)
}

/// `mu * prior + (1 - mu) * learned`.
pub fn smooth_combine(
    prior: &AllocationDist,
    learned: &AllocationDist,
    mu: f64,
) -> Result<AllocationDist> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::MuOutOfRange(mu));
    }
    if prior.len() != learned.len() {
        return Err(Error::LengthMismatch {
            left: prior.len(),
            right: learned.len(),
        });
    }
    let probs = prior
        .probs()
        .iter()
        .zip(learned.probs())
        .map(|(p, l)| mu * p + (1.0 - mu) * l)
        .collect();
    Ok(AllocationDist::from_probs_unchecked(probs))
}

/// Weight of the prior at step `t` (1-based): `T_d / (t + T_d)`.
/// An infinite horizon keeps the prior at full weight.
pub fn mu_schedule(t: usize, horizon: f64) -> f64 {
    if horizon.is_infinite() {
        return 1.0;
    }
    horizon / (t as f64 + horizon)
}

/// Per-category weights over annotators; each row is a simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularAllocator {
    rows: Vec<Vec<f64>>,
}

impl TabularAllocator {
    pub fn uniform(n_categories: usize, m: usize) -> Self {
        TabularAllocator {
            rows: vec![vec![1.0 / m as f64; m]; n_categories],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        for r in &rows {
            AllocationDist::from_probs(r.clone())?;
        }
        Ok(TabularAllocator { rows })
    }

    /// Row `z` is the normalized dSim column for category `z`.
    pub fn from_dsim(dsim: &DSimMatrix) -> Self {
        TabularAllocator {
            rows: (0..dsim.n_categories())
                .map(|z| dsim_prior_dist(dsim, CategoryId(z)).probs().to_vec())
                .collect(),
        }
    }

    pub fn row(&self, category: CategoryId) -> &[f64] {
        &self.rows[category.0]
    }

    pub fn dist(&self, category: CategoryId) -> AllocationDist {
        AllocationDist::from_probs_unchecked(self.rows[category.0].clone())
    }

    pub fn m(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Additive reward/penalty step on one category row.
    ///
    /// Each of the `r` rewarded annotators gains `delta`; each of the `p`
    /// others loses `delta * r / p`, which keeps the row sum fixed. With
    /// `r = 1` this is the `delta_reward = (m - 1) delta_penalty`
    /// normalization, and with `r = k'` correct committee members it is
    /// `delta_reward = (m / k' - 1) delta_penalty`. `delta` is scaled down
    /// if a full step would push a penalized weight below zero.
    pub fn update(&mut self, category: CategoryId, rewarded: &[bool], delta: f64) {
        let row = &mut self.rows[category.0];
        debug_assert_eq!(row.len(), rewarded.len());
        let r = rewarded.iter().filter(|&&b| b).count();
        let p = rewarded.len() - r;
        if r == 0 || p == 0 || delta <= 0.0 {
            return;
        }
        let ratio = r as f64 / p as f64;
        let min_penalized = row
            .iter()
            .zip(rewarded)
            .filter(|(_, &b)| !b)
            .map(|(w, _)| *w)
            .fold(f64::INFINITY, f64::min);
        let step = delta.min(min_penalized / ratio);
        for (w, &b) in row.iter_mut().zip(rewarded) {
            if b {
                *w += step;
            } else {
                *w = (*w - step * ratio).max(0.0);
            }
        }
        let total: f64 = row.iter().sum();
        for w in row.iter_mut() {
            *w /= total;
        }
    }

    /// Returns an updated copy; see [`TabularAllocator::update`].
    pub fn tabular_update(&self, category: CategoryId, rewarded: &[bool], delta: f64) -> Self {
        let mut next = self.clone();
        next.update(category, rewarded, delta);
        next
    }

    pub fn is_simplex(&self) -> bool {
        self.rows.iter().all(|r| {
            r.iter().all(|&w| (0.0..=1.0).contains(&w))
                && (r.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_clusters, gen_dsim_noisy, SyntheticDatasetSpec};
    use proptest::prelude::*;

    #[test]
    fn zero_weights_give_half() {
        let m = LogisticAllocator::zeros(4, 3);
        let s = m.scores(&[1.0, -2.0, 3.0]).unwrap();
        assert!(s.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn bias_saturates() {
        let m = LogisticAllocator::from_rows(vec![vec![0.0, 0.0, 10.0]]).unwrap();
        let s = m.score(0, &[3.0, -1.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        let m = LogisticAllocator::zeros(2, 2);
        assert!(matches!(
            m.scores(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn identical_features_identical_scores() {
        let m = LogisticAllocator::from_rows(vec![vec![0.3, -0.2, 0.1], vec![1.0, 2.0, -1.0]]).unwrap();
        let a = Task::new(0, vec![0.4, 0.9], CategoryId(0));
        let b = Task::new(1, vec![0.4, 0.9], CategoryId(2));
        assert_eq!(m.alloc_scores(&a).unwrap(), m.alloc_scores(&b).unwrap());
    }

    #[test]
    fn prior_examples() {
        let d = dsim_prior_dist(&gen_dsim_noisy(0.0).unwrap(), CategoryId(1));
        assert!(d.get(1) > 1.0 - 1e-9);
        assert!(d.get(0) < 1e-9);
        let d = dsim_prior_dist(&gen_dsim_noisy(2.0 / 3.0).unwrap(), CategoryId(0));
        for &p in d.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // 6 unbiased annotators at 1, 4 biased at 0.5 for category 0.
        let rows = (0..10).map(|i| vec![if i < 6 { 1.0 } else { 0.5 }]).collect();
        let d = dsim_prior_dist(&DSimMatrix::from_rows(rows).unwrap(), CategoryId(0));
        assert!((d.get(0) - 1.0 / 8.0).abs() < 1e-12);
        assert!((d.get(9) - 0.5 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn combine_examples() {
        let a = AllocationDist::from_probs(vec![1.0, 0.0]).unwrap();
        let b = AllocationDist::from_probs(vec![0.0, 1.0]).unwrap();
        assert_eq!(smooth_combine(&a, &b, 1.0).unwrap(), a);
        assert_eq!(smooth_combine(&a, &b, 0.0).unwrap(), b);
        assert_eq!(smooth_combine(&a, &b, 0.5).unwrap().probs(), &[0.5, 0.5]);
        assert!(matches!(smooth_combine(&a, &b, 1.5), Err(Error::MuOutOfRange(_))));
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_schedule(10, 10.0), 0.5);
        assert_eq!(mu_schedule(1, 1e4), 1e4 / 10001.0);
        assert!(mu_schedule(1_000_000_000, 10.0) < 1e-7);
        assert!(mu_schedule(2, 5.0) < mu_schedule(1, 5.0));
        assert_eq!(mu_schedule(3, f64::INFINITY), 1.0);
    }

    #[test]
    fn tabular_examples() {
        let t = TabularAllocator::uniform(1, 3);
        let next = t.tabular_update(CategoryId(0), &[false, true, false], 0.1);
        let r = next.row(CategoryId(0));
        assert!((r[1] - (1.0 / 3.0 + 0.1)).abs() < 1e-12);
        assert!((r[0] - (1.0 / 3.0 - 0.05)).abs() < 1e-12);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(t.tabular_update(CategoryId(0), &[true, false, false], 0.0), t);
    }

    #[test]
    fn tabular_clips_at_zero() {
        let mut t = TabularAllocator::from_rows(vec![vec![0.98, 0.01, 0.01]]).unwrap();
        t.update(CategoryId(0), &[true, false, false], 0.5);
        assert!(t.is_simplex());
        assert!(t.row(CategoryId(0))[1] >= 0.0);
    }

    #[test]
    fn tabular_one_step_expected_gain_for_two_annotators() {
        // Row [0.6, 0.4]; annotator 0 is always right, k = 1.
        // Exact expectation: 0.6 * 0.1 - 0.4 * 0.1 = 0.02.
        let t = TabularAllocator::from_rows(vec![vec![0.6, 0.4]]).unwrap();
        let up = t.tabular_update(CategoryId(0), &[true, false], 0.1).row(CategoryId(0))[0] - 0.6;
        let down = t.tabular_update(CategoryId(0), &[false, true], 0.1).row(CategoryId(0))[0] - 0.6;
        let expected = 0.6 * up + 0.4 * down;
        assert!((expected - 0.02).abs() < 1e-12);
    }

    #[test]
    fn pretrain_zero_iterations_is_noop() {
        let ds = gen_clusters(&SyntheticDatasetSpec {
            n_points: 50,
            ..Default::default()
        })
        .unwrap();
        let m = LogisticAllocator::zeros(3, 2);
        let out = pretrain_to_dsim(&m, &ds.tasks, &gen_dsim_noisy(0.0).unwrap(), 0.5, 0).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn pretrain_matches_perfect_prior_argmax() {
        let ds = gen_clusters(&SyntheticDatasetSpec::with_seed(17)).unwrap();
        let dsim = gen_dsim_noisy(0.0).unwrap();
        let model = pretrain_to_dsim(
            &LogisticAllocator::zeros(3, 2),
            &ds.tasks[..500],
            &dsim,
            0.5,
            1000,
        )
        .unwrap();
        let held = &ds.tasks[500..];
        let agree = held
            .iter()
            .filter(|t| model.distribution(t).unwrap().argmax() == t.category.0)
            .count();
        let frac = agree as f64 / held.len() as f64;
        assert!(frac >= 0.9, "argmax agreement {frac}");
    }

    #[test]
    fn pretrain_uniform_target_flattens_scores() {
        let ds = gen_clusters(&SyntheticDatasetSpec::with_seed(8)).unwrap();
        let dsim = gen_dsim_noisy(2.0 / 3.0).unwrap();
        let start = LogisticAllocator::from_rows(vec![
            vec![0.5, -0.3, 0.2],
            vec![-0.4, 0.1, 0.0],
            vec![0.2, 0.2, -1.0],
        ])
        .unwrap();
        let model = pretrain_to_dsim(&start, &ds.tasks[..500], &dsim, 0.5, 1000).unwrap();
        for t in &ds.tasks[500..1500] {
            let s = model.alloc_scores(t).unwrap();
            let hi = s.iter().cloned().fold(f64::MIN, f64::max);
            let lo = s.iter().cloned().fold(f64::MAX, f64::min);
            assert!(hi - lo < 0.1, "{s:?}");
        }
    }

    #[test]
    fn pretrain_gradient_matches_finite_differences() {
        let ds = gen_clusters(&SyntheticDatasetSpec {
            n_points: 40,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let dsim = gen_dsim_noisy(0.3).unwrap();
        let model = LogisticAllocator::from_rows(vec![
            vec![0.3, -0.1, 0.2],
            vec![-0.2, 0.4, -0.5],
            vec![0.1, 0.1, 0.1],
        ])
        .unwrap();
        let g = pretrain_mse_grad(&model, &ds.tasks, &dsim).unwrap();
        let h = 1e-5;
        for j in 0..g.len() {
            let mut plus = model.clone();
            plus.weights_mut()[j] += h;
            let mut minus = model.clone();
            minus.weights_mut()[j] -= h;
            let fd = (pretrain_mse(&plus, &ds.tasks, &dsim).unwrap()
                - pretrain_mse(&minus, &ds.tasks, &dsim).unwrap())
                / (2.0 * h);
            let rel = (fd - g[j]).abs() / g[j].abs().max(1e-8);
            assert!(rel < 1e-4, "weight {j}: analytic {} vs fd {fd}", g[j]);
        }
    }

    #[test]
    fn checkpoint_round_trips_bit_exact() {
        let m = LogisticAllocator::from_rows(vec![
            vec![0.1, -1.0 / 3.0, std::f64::consts::PI],
            vec![1e-300, -2.5e17, 0.0],
        ])
        .unwrap();
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        let back = LogisticAllocator::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(m, back);
        assert!(LogisticAllocator::read_checkpoint("2 2\n1 2 3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn tabular_update_preserves_simplex(
            raw in proptest::collection::vec(0.0f64..1.0, 2..12),
            mask in proptest::collection::vec(any::<bool>(), 12),
            delta in 0.0f64..1.0,
        ) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let row: Vec<f64> = raw.iter().map(|w| (w + 1e-9 / raw.len() as f64) / total).collect();
            let mut t = TabularAllocator::from_rows(vec![row]).unwrap();
            let m = t.m();
            t.update(CategoryId(0), &mask[..m], delta);
            let s: f64 = t.row(CategoryId(0)).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(t.row(CategoryId(0)).iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn combine_is_simplex(
            a in proptest::collection::vec(0.0f64..1.0, 1..10),
            b in proptest::collection::vec(0.0f64..1.0, 10),
            mu in 0.0f64..=1.0,
        ) {
            let p = AllocationDist::normalize(&a).unwrap();
            let l = AllocationDist::normalize(&b[..a.len()]).unwrap();
            prop_assert!(smooth_combine(&p, &l, mu).unwrap().validate().is_ok());
        }

        #[test]
        fn prior_is_scale_invariant(
            col in proptest::collection::vec(0.01f64..1.0, 1..8),
            c in 0.05f64..1.0,
        ) {
            let rows: Vec<Vec<f64>> = col.iter().map(|&v| vec![v]).collect();
            let scaled: Vec<Vec<f64>> = col.iter().map(|&v| vec![v * c]).collect();
            let a = dsim_prior_dist(&DSimMatrix::from_rows(rows).unwrap(), CategoryId(0));
            let b = dsim_prior_dist(&DSimMatrix::from_rows(scaled).unwrap(), CategoryId(0));
            prop_assert_eq!(a.argmax(), b.argmax());
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
