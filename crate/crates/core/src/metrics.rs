//! Accuracy, rank AUC and aggregation across trials.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::LabelBit;
use crate::error::{Error, Result};

/// Fraction of positions where `preds` and `gold` agree.
pub fn label_accuracy(preds: &[LabelBit], gold: &[LabelBit]) -> Result<f64> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: gold.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Validation("accuracy of an empty sample".into()));
    }
    let hits = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Area under the ROC curve via the Mann-Whitney statistic, with tied
/// scores given their average rank (a tie counts one half).
pub fn auc(scores: &[f64], gold: &[LabelBit]) -> Result<f64> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: gold.len(),
        });
    }
    let n_pos = gold.iter().filter(|g| g.is_one()).count();
    let n_neg = gold.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share their mean.
        let rank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&t| gold[t].is_one()).count();
        pos_rank_sum += rank * positives as f64;
        i = j;
    }
    let np = n_pos as f64;
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Sample mean and standard error (sample standard deviation over root n).
pub fn mean_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewTrials(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Metrics of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub method: String,
    pub label_accuracy: f64,
    pub assignment_accuracy: Option<f64>,
    pub auc: Option<f64>,
}

impl TrialReport {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        let ok = in_unit(self.label_accuracy)
            && self.assignment_accuracy.is_none_or(in_unit)
            && self.auc.is_none_or(in_unit);
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("metric out of [0, 1] in {self:?}")))
        }
    }
}

/// One aggregated line of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub metric: String,
    pub mean: f64,
    /// Absent for a single trial.
    pub stderr: Option<f64>,
    pub trials: usize,
}

pub const RESULT_COLUMNS: [&str; 5] = ["method", "metric", "mean", "stderr", "trials"];

fn summarize(method: &str, metric: &str, values: &[f64]) -> ResultRow {
    let (mean, stderr) = match mean_stderr(values) {
        Ok((m, s)) => (m, Some(s)),
        Err(_) => (values.first().copied().unwrap_or(f64::NAN), None),
    };
    ResultRow {
        method: method.to_string(),
        metric: metric.to_string(),
        mean,
        stderr,
        trials: values.len(),
    }
}

/// Aggregates reports per method (in first-seen order) and metric.
pub fn aggregate(reports: &[TrialReport]) -> Vec<ResultRow> {
    let mut methods: Vec<&str> = Vec::new();
    for r in reports {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut rows = Vec::new();
    for m in methods {
        let of: Vec<&TrialReport> = reports.iter().filter(|r| r.method == m).collect();
        let label: Vec<f64> = of.iter().map(|r| r.label_accuracy).collect();
        rows.push(summarize(m, "label_accuracy", &label));
        let assign: Vec<f64> = of.iter().filter_map(|r| r.assignment_accuracy).collect();
        if !assign.is_empty() {
            rows.push(summarize(m, "assignment_accuracy", &assign));
        }
        let aucs: Vec<f64> = of.iter().filter_map(|r| r.auc).collect();
        if !aucs.is_empty() {
            rows.push(summarize(m, "auc", &aucs));
        }
    }
    rows
}

/// Writes rows as CSV; `prefix` prepends fixed leading columns (the sweep
/// uses it for `s`).
pub fn write_results<W: Write>(out: W, prefix: &[(&str, Vec<String>)], rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = prefix.iter().map(|(name, _)| *name).collect();
    header.extend(RESULT_COLUMNS);
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec: Vec<String> = prefix.iter().map(|(_, vals)| vals[i].clone()).collect();
        rec.push(row.method.clone());
        rec.push(row.metric.clone());
        rec.push(format!("{:.6}", row.mean));
        rec.push(row.stderr.map(|s| format!("{s:.6}")).unwrap_or_default());
        rec.push(row.trials.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn bits(v: &[u8]) -> Vec<LabelBit> {
        v.iter().map(|&b| LabelBit::from_u8(b).unwrap()).collect()
    }

    fn brute_auc(scores: &[f64], gold: &[LabelBit]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, gi) in gold.iter().enumerate() {
            for (j, gj) in gold.iter().enumerate() {
                if gi.is_one() && !gj.is_one() {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn accuracy_examples() {
        let a = bits(&[1, 0, 1, 1, 0, 0, 1, 0, 1, 1]);
        assert_eq!(label_accuracy(&a, &a).unwrap(), 1.0);
        let c: Vec<_> = a.iter().map(|b| b.flipped()).collect();
        assert_eq!(label_accuracy(&a, &c).unwrap(), 0.0);
        let mut b = a.clone();
        b[3] = b[3].flipped();
        assert!((label_accuracy(&a, &b).unwrap() - 0.9).abs() < 1e-12);
        assert!(matches!(label_accuracy(&a, &a[..3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn auc_examples() {
        let g = bits(&[0, 0, 1, 1]);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &g).unwrap(), 0.75);
        assert_eq!(auc(&[0.0, 0.1, 0.9, 1.0], &g).unwrap(), 1.0);
        assert!(matches!(auc(&[0.1, 0.2], &bits(&[1, 1])), Err(Error::SingleClass)));
        assert_eq!(auc(&[0.5; 4], &g).unwrap(), 0.5);
    }

    #[test]
    fn auc_of_noise_is_half() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let s: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let g: Vec<LabelBit> = (0..n).map(|_| LabelBit::new(rng.random_bool(0.5))).collect();
        assert!((auc(&s, &g).unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn brute_force_agreement_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let n = rng.random_range(2..=50);
            // Coarse scores force plenty of ties.
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
            let g: Vec<LabelBit> = (0..n).map(|_| LabelBit::new(rng.random_bool(0.4))).collect();
            let Ok(fast) = auc(&s, &g) else { continue };
            assert!((fast - brute_auc(&s, &g)).abs() < 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn stderr_examples() {
        assert_eq!(mean_stderr(&[0.3; 5]).unwrap(), (0.3, 0.0));
        assert_eq!(mean_stderr(&[0.0, 1.0]).unwrap(), (0.5, 0.5));
        assert!(matches!(mean_stderr(&[1.0]), Err(Error::TooFewTrials(1))));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..50).map(|_| f64::from(u8::from(rng.random_bool(0.9)))).collect();
        let (_, se) = mean_stderr(&v).unwrap();
        assert!((0.02..=0.07).contains(&se), "{se}");
    }

    #[test]
    fn aggregate_single_trial_has_no_stderr() {
        let r = TrialReport {
            seed: 1,
            method: "goel".into(),
            label_accuracy: 0.5,
            assignment_accuracy: Some(0.3),
            auc: None,
        };
        let rows = aggregate(&[r]);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.stderr.is_none() && r.trials == 1));
        let mut buf = Vec::new();
        write_results(&mut buf, &[], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,metric,mean,stderr,trials\ngoel,label_accuracy,0.500000,,1\n"));
    }

    proptest! {
        #[test]
        fn auc_monotone_invariant(pairs in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)) {
            let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let g: Vec<LabelBit> = pairs.iter().map(|p| LabelBit::new(p.1)).collect();
            prop_assume!(g.iter().any(|b| b.is_one()) && g.iter().any(|b| !b.is_one()));
            let a = auc(&s, &g).unwrap();
            let t: Vec<f64> = s.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            prop_assert!((a - auc(&t, &g).unwrap()).abs() < 1e-12);
            let flipped: Vec<LabelBit> = g.iter().map(|b| b.flipped()).collect();
            prop_assert!((a + auc(&s, &flipped).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((a - brute_auc(&s, &g)).abs() < 1e-12);
        }

        #[test]
        fn accuracy_permutation_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80), seed in any::<u64>()) {
            let p: Vec<LabelBit> = pairs.iter().map(|x| LabelBit::new(x.0)).collect();
            let g: Vec<LabelBit> = pairs.iter().map(|x| LabelBit::new(x.1)).collect();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
            let pp: Vec<LabelBit> = idx.iter().map(|&i| p[i]).collect();
            let gg: Vec<LabelBit> = idx.iter().map(|&i| g[i]).collect();
            prop_assert_eq!(label_accuracy(&p, &g).unwrap(), label_accuracy(&pp, &gg).unwrap());
        }
    }
}
