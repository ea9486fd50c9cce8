//! Simulated annotators and annotator pools.
//!
//! A pool answers two questions for the training loops: given a task and a
//! distribution over its members, who sits on the committee and what did
//! they say ([`AnnotatorPool::convene`]); and what does one named annotator
//! say about a task, if they are available at all ([`AnnotatorPool::query`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::ReplayDataset;
use crate::domain::{AllocationDist, CategoryId, LabelBit, Task};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::training::sample_committee;

/// Behaviour of one simulated annotator.
pub trait SimAnnotator {
    fn label<R: Rng + ?Sized>(&self, task: &Task, gold: LabelBit, rng: &mut R) -> LabelBit;

    /// The category this annotator is the designated expert for, if any.
    fn expertise(&self) -> Option<CategoryId> {
        None
    }
}

/// Perfect (by default) on its own colour, mostly wrong elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterExpert {
    pub expert_color: CategoryId,
    pub acc_in: f64,
    pub acc_out: f64,
}

impl ClusterExpert {
    pub fn new(expert_color: CategoryId) -> Self {
        ClusterExpert {
            expert_color,
            acc_in: 1.0,
            acc_out: 0.2,
        }
    }

    pub fn with_accuracies(expert_color: CategoryId, acc_in: f64, acc_out: f64) -> Result<Self> {
        if !(0.0 <= acc_out && acc_out <= acc_in && acc_in <= 1.0) {
            return Err(Error::Validation(format!(
                "need 0 <= acc_out ({acc_out}) <= acc_in ({acc_in}) <= 1"
            )));
        }
        Ok(ClusterExpert {
            expert_color,
            acc_in,
            acc_out,
        })
    }

    /// One expert per colour, expert `c` for colour `c`.
    pub fn panel(n_colors: usize) -> Vec<ClusterExpert> {
        (0..n_colors).map(|c| ClusterExpert::new(CategoryId(c))).collect()
    }
}

fn correct_with<R: Rng + ?Sized>(p: f64, gold: LabelBit, rng: &mut R) -> LabelBit {
    if p >= 1.0 || rng.random_bool(p) {
        gold
    } else {
        gold.flipped()
    }
}

impl SimAnnotator for ClusterExpert {
    fn label<R: Rng + ?Sized>(&self, task: &Task, gold: LabelBit, rng: &mut R) -> LabelBit {
        let acc = if task.category == self.expert_color {
            self.acc_in
        } else {
            self.acc_out
        };
        correct_with(acc, gold, rng)
    }

    fn expertise(&self) -> Option<CategoryId> {
        Some(self.expert_color)
    }
}

/// Always right on the group it is not biased against, a coin flip on the
/// group it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasedAnnotator {
    pub biased_against: CategoryId,
}

impl BiasedAnnotator {
    pub fn new(biased_against: CategoryId) -> Self {
        BiasedAnnotator { biased_against }
    }

    pub fn accuracy_on(&self, category: CategoryId) -> f64 {
        if category == self.biased_against {
            0.5
        } else {
            1.0
        }
    }
}

impl SimAnnotator for BiasedAnnotator {
    fn label<R: Rng + ?Sized>(&self, task: &Task, gold: LabelBit, rng: &mut R) -> LabelBit {
        correct_with(self.accuracy_on(task.category), gold, rng)
    }

    fn expertise(&self) -> Option<CategoryId> {
        // Unbiased on the other group of a binary attribute.
        Some(CategoryId(1 - self.biased_against.0.min(1)))
    }
}

/// The members of a convened committee and their labels, aligned by
/// position. Always odd-length and non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convened {
    pub members: Vec<usize>,
    pub labels: Vec<LabelBit>,
}

pub trait AnnotatorPool: Sync {
    fn size(&self) -> usize;

    /// Forms a committee of (at most) `k` members for `task` guided by `dist`.
    fn convene(&self, task: &Task, dist: &AllocationDist, k: usize, rng: &mut SimRng) -> Convened;

    /// Label from one annotator, `None` if they cannot label this task.
    fn query(&self, annotator: usize, task: &Task, rng: &mut SimRng) -> Option<LabelBit>;

    /// True expert for a category, when the pool has one.
    fn expert_for(&self, _category: CategoryId) -> Option<usize> {
        None
    }
}

/// Simulated annotators answering against hidden gold labels indexed by
/// task id. Committees are sampled with replacement; a member sampled
/// twice answers once and votes twice.
#[derive(Debug, Clone)]
pub struct SimulatedPool<A> {
    pub annotators: Vec<A>,
    pub gold: Vec<LabelBit>,
}

impl<A: SimAnnotator> SimulatedPool<A> {
    pub fn new(annotators: Vec<A>, gold: Vec<LabelBit>) -> Self {
        SimulatedPool { annotators, gold }
    }
}

impl<A: SimAnnotator + Sync> AnnotatorPool for SimulatedPool<A> {
    fn size(&self) -> usize {
        self.annotators.len()
    }

    fn convene(&self, task: &Task, dist: &AllocationDist, k: usize, rng: &mut SimRng) -> Convened {
        let members = sample_committee(dist, k, rng)
            .expect("k is validated odd by the caller")
            .into_members();
        let gold = self.gold[task.id];
        let mut answered: Vec<(usize, LabelBit)> = Vec::with_capacity(members.len());
        let labels = members
            .iter()
            .map(|&a| match answered.iter().find(|(b, _)| *b == a) {
                Some(&(_, y)) => y,
                None => {
                    let y = self.annotators[a].label(task, gold, rng);
                    answered.push((a, y));
                    y
                }
            })
            .collect();
        Convened { members, labels }
    }

    fn query(&self, annotator: usize, task: &Task, rng: &mut SimRng) -> Option<LabelBit> {
        Some(self.annotators[annotator].label(task, self.gold[task.id], rng))
    }

    fn expert_for(&self, category: CategoryId) -> Option<usize> {
        self.annotators
            .iter()
            .position(|a| a.expertise() == Some(category))
    }
}

/// Result of asking one annotator for a recorded label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayAnswer {
    Label(LabelBit),
    Unavailable,
}

pub fn replay_label(dataset: &ReplayDataset, annotator: usize, task: usize) -> ReplayAnswer {
    match dataset.label(task, annotator) {
        Some(y) => ReplayAnswer::Label(y),
        None => ReplayAnswer::Unavailable,
    }
}

/// Walks annotators by descending probability (ties by ascending index)
/// and collects recorded labels until `want` are in hand or the pool runs
/// out.
pub fn ranked_available_query(
    dataset: &ReplayDataset,
    task: usize,
    dist: &AllocationDist,
    want: usize,
) -> Vec<(usize, LabelBit)> {
    let recorded = &dataset.annotations[task];
    let mut out = Vec::with_capacity(want.min(recorded.len()));
    if want == 0 {
        return out;
    }
    // Only recorded annotators can answer; rank those instead of all m.
    let mut available: Vec<(usize, LabelBit)> = recorded.iter().map(|(&a, &y)| (a, y)).collect();
    available.sort_by(|(a, _), (b, _)| dist.get(*b).total_cmp(&dist.get(*a)).then(a.cmp(b)));
    out.extend(available.into_iter().take(want));
    out
}

/// Annotators available only where the replay file recorded them.
#[derive(Debug, Clone, Copy)]
pub struct ReplayPool<'a> {
    pub dataset: &'a ReplayDataset,
}

impl<'a> ReplayPool<'a> {
    pub fn new(dataset: &'a ReplayDataset) -> Self {
        ReplayPool { dataset }
    }
}

impl AnnotatorPool for ReplayPool<'_> {
    fn size(&self) -> usize {
        self.dataset.n_annotators()
    }

    /// Ranked walk; an even shortfall drops the last label so the vote
    /// stays odd.
    fn convene(&self, task: &Task, dist: &AllocationDist, k: usize, _rng: &mut SimRng) -> Convened {
        let mut got = ranked_available_query(self.dataset, task.id, dist, k);
        if got.len() % 2 == 0 {
            got.pop();
        }
        let (members, labels) = got.into_iter().unzip();
        Convened { members, labels }
    }

    fn query(&self, annotator: usize, task: &Task, _rng: &mut SimRng) -> Option<LabelBit> {
        self.dataset.label(task.id, annotator)
    }
}
