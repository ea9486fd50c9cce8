//! Shared domain types and simplex arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries are floored at this value before normalization, so a row of
/// zeros (e.g. a category no annotator is matched to) resolves to uniform.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance used when checking that a vector lies on the simplex.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryId(pub usize);

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelBit(bool);

impl LabelBit {
    pub const ZERO: LabelBit = LabelBit(false);
    pub const ONE: LabelBit = LabelBit(true);

    pub fn new(value: bool) -> Self {
        LabelBit(value)
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::ZERO),
            1 => Some(Self::ONE),
            _ => None,
        }
    }

    pub fn is_one(self) -> bool {
        self.0
    }

    pub fn as_u8(self) -> u8 {
        self.0 as u8
    }

    pub fn as_f64(self) -> f64 {
        self.0 as u8 as f64
    }

    pub fn flipped(self) -> Self {
        LabelBit(!self.0)
    }
}

impl fmt::Display for LabelBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// The unit of allocation: a feature vector tagged with one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub features: Vec<f64>,
    pub category: CategoryId,
}

impl Task {
    pub fn new(id: usize, features: Vec<f64>, category: CategoryId) -> Self {
        Task {
            id,
            features,
            category,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A probability distribution over the `m` annotators of a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationDist {
    probs: Vec<f64>,
}

impl AllocationDist {
    /// Floors every weight at [`PROB_FLOOR`] and divides by the sum.
    ///
    /// Negative or non-finite weights are treated as zero.
    pub fn normalize(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::AllZero);
        }
        let floored: Vec<f64> = weights
            .iter()
            .map(|&w| if w.is_finite() { w.max(PROB_FLOOR) } else { PROB_FLOOR })
            .collect();
        let total: f64 = floored.iter().sum();
        Ok(AllocationDist {
            probs: floored.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::AllZero);
        }
        Ok(AllocationDist {
            probs: vec![1.0 / m as f64; m],
        })
    }

    /// Wraps an existing simplex vector after checking it.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let d = AllocationDist { probs };
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn from_probs_unchecked(probs: Vec<f64>) -> Self {
        AllocationDist { probs }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.is_empty() {
            return Err(Error::Validation("empty distribution".into()));
        }
        if let Some(p) = self
            .probs
            .iter()
            .find(|p| !(0.0..=1.0).contains(*p) || !p.is_finite())
        {
            return Err(Error::Validation(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Annotator indices by descending probability, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.probs.len()).collect();
        idx.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        idx
    }
}

/// Prior similarity scores in `[0, 1]` for every (annotator, category) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DSimMatrix {
    m: usize,
    n_categories: usize,
    // annotator-major
    scores: Vec<f64>,
}

impl DSimMatrix {
    /// `rows[i][z]` is the score of annotator `i` for category `z`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Validation("dSim needs at least one annotator".into()));
        }
        let n_categories = rows[0].len();
        let mut scores = Vec::with_capacity(m * n_categories);
        for row in &rows {
            if row.len() != n_categories {
                return Err(Error::DimensionMismatch {
                    expected: n_categories,
                    got: row.len(),
                });
            }
            for &s in row {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::OutOfRange {
                        name: "dSim",
                        value: s,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
            }
            scores.extend_from_slice(row);
        }
        Ok(DSimMatrix {
            m,
            n_categories,
            scores,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn get(&self, annotator: usize, category: CategoryId) -> f64 {
        self.scores[annotator * self.n_categories + category.0]
    }

    /// Scores of every annotator for one category.
    pub fn column(&self, category: CategoryId) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, category)).collect()
    }
}

/// `k` annotator indices sampled with replacement; `k` is odd.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Committee {
    members: Vec<usize>,
}

impl Committee {
    pub fn new(members: Vec<usize>, m: usize) -> Result<Self> {
        if members.len() % 2 == 0 {
            return Err(Error::EvenCommittee(members.len()));
        }
        if let Some(&bad) = members.iter().find(|&&i| i >= m) {
            return Err(Error::Validation(format!(
                "committee member {bad} outside pool of {m}"
            )));
        }
        Ok(Committee { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Most frequent member; ties go to the member with the larger
    /// probability under `dist`, then the lower index.
    pub fn modal_member(&self, dist: &AllocationDist) -> usize {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for &i in &self.members {
            match counts.iter_mut().find(|(a, _)| *a == i) {
                Some((_, c)) => *c += 1,
                None => counts.push((i, 1)),
            }
        }
        counts
            .into_iter()
            .max_by(|(a, ca), (b, cb)| {
                ca.cmp(cb)
                    .then(dist.get(*a).total_cmp(&dist.get(*b)))
                    .then(b.cmp(a))
            })
            .map(|(i, _)| i)
            .expect("committee is never empty")
    }

    pub(crate) fn into_members(self) -> Vec<usize> {
        self.members
    }
}

/// Returns 1 iff strictly more than half the labels are 1.
pub fn majority_vote(labels: &[LabelBit]) -> Result<LabelBit> {
    if labels.len() % 2 == 0 {
        return Err(Error::EvenCommittee(labels.len()));
    }
    let ones = labels.iter().filter(|l| l.is_one()).count();
    Ok(LabelBit::new(2 * ones > labels.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[u8]) -> Vec<LabelBit> {
        v.iter().map(|&b| LabelBit::from_u8(b).unwrap()).collect()
    }

    #[test]
    fn normalize_examples() {
        let d = AllocationDist::normalize(&[0.5, 0.5, 1.0]).unwrap();
        assert!((d.get(0) - 0.25).abs() < 1e-12);
        assert!((d.get(2) - 0.5).abs() < 1e-12);

        let d = AllocationDist::normalize(&[0.0, 0.0, 0.0]).unwrap();
        for &p in d.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }

        let d = AllocationDist::normalize(&[2e-12, 1e-12]).unwrap();
        assert!((d.get(0) - 2.0 / 3.0).abs() < 1e-6);
        assert!((d.get(1) - 1.0 / 3.0).abs() < 1e-6);

        assert!(matches!(AllocationDist::normalize(&[]), Err(Error::AllZero)));
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority_vote(&bits(&[1])).unwrap(), LabelBit::ONE);
        assert_eq!(majority_vote(&bits(&[1, 0, 1])).unwrap(), LabelBit::ONE);
        assert_eq!(majority_vote(&bits(&[0, 0, 1, 0, 1])).unwrap(), LabelBit::ZERO);
        assert!(matches!(
            majority_vote(&bits(&[1, 0])),
            Err(Error::EvenCommittee(2))
        ));
        assert!(matches!(majority_vote(&[]), Err(Error::EvenCommittee(0))));
    }

    #[test]
    fn committee_rejects_even_and_out_of_pool() {
        assert!(Committee::new(vec![0, 1], 3).is_err());
        assert!(Committee::new(vec![0, 1, 3], 3).is_err());
        assert!(Committee::new(vec![0, 0, 2], 3).is_ok());
    }

    #[test]
    fn modal_member_tie_breaks_on_distribution() {
        let d = AllocationDist::from_probs(vec![0.2, 0.5, 0.3]).unwrap();
        let c = Committee::new(vec![0, 1, 2], 3).unwrap();
        assert_eq!(c.modal_member(&d), 1);
        let c = Committee::new(vec![2, 0, 2], 3).unwrap();
        assert_eq!(c.modal_member(&d), 2);
    }

    #[test]
    fn ranking_breaks_ties_by_index() {
        let d = AllocationDist::from_probs(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(d.ranking(), vec![1, 0, 2]);
    }

    #[test]
    fn dsim_rejects_out_of_range() {
        assert!(DSimMatrix::from_rows(vec![vec![0.5, 1.2]]).is_err());
        assert!(DSimMatrix::from_rows(vec![vec![0.5, 1.0], vec![0.1]]).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_simplex_and_scale_invariant(
            w in proptest::collection::vec(0.0f64..1e3, 1..20),
            c in 1e-3f64..1e3,
        ) {
            let d = AllocationDist::normalize(&w).unwrap();
            prop_assert!(d.validate().is_ok());
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let d2 = AllocationDist::normalize(&scaled).unwrap();
            // The floor breaks exact scale invariance for entries near it.
            if w.iter().all(|&x| x == 0.0 || x * c.min(1.0) > 1e-6) {
                for (a, b) in d.probs().iter().zip(d2.probs()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn majority_is_permutation_invariant_and_flips(
            v in proptest::collection::vec(any::<bool>(), 0..5usize).prop_map(|mut v| {
                if v.len() % 2 == 0 { v.push(true); }
                v
            }),
            seed in any::<u64>(),
        ) {
            let labels: Vec<LabelBit> = v.iter().map(|&b| LabelBit::new(b)).collect();
            let y = majority_vote(&labels).unwrap();
            let mut shuffled = labels.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(majority_vote(&shuffled).unwrap(), y);
            let flipped: Vec<LabelBit> = labels.iter().map(|l| l.flipped()).collect();
            prop_assert_eq!(majority_vote(&flipped).unwrap(), y.flipped());
        }
    }
}
