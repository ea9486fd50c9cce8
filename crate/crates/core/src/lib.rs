//! Closed-loop task allocation.
//!
//! A task allocator routes each input to a committee of human annotators,
//! aggregates their votes by majority, and feeds that aggregated (noisy)
//! label straight back as its own training signal. No gold label is ever
//! seen during training. A weak annotator/category similarity prior
//! (`dSim`) is used to bootstrap the loop, either by pre-training the
//! allocator to match it ([`training::strict_matching_run`]) or by mixing
//! it into the sampling distribution with a decaying weight
//! ([`training::smooth_matching_run`]).
//!
//! Module map:
//!
//! - [`domain`]: tasks, labels, simplex arithmetic, committee voting.
//! - [`datagen`]: the synthetic three-cluster dataset, noisy `dSim`
//!   matrices, and the replay file format plus a surrogate generator.
//! - [`annotators`]: simulated annotator behaviour and the
//!   availability-constrained replay pool.
//! - [`allocation`]: logistic and tabular allocation models.
//! - [`training`]: the agreement loss and the two closed-loop algorithms.
//! - [`baselines`]: accuracy-estimate, bandit-budget and prior-free
//!   baselines run in the same closed loop.
//! - [`theoryval`]: Monte Carlo and closed-form checks of the bias and
//!   convergence statements about the tabular dynamics.
//! - [`metrics`]: accuracy, rank AUC, trial aggregation.
//! - [`experiment`]: configuration, trial orchestration and CSV output
//!   used by the `taskalloc` binary.

pub mod allocation;
pub mod annotators;
pub mod baselines;
pub mod datagen;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod rng;
pub mod theoryval;
pub mod training;

pub use error::{Error, Result};

pub use allocation::{LogisticAllocator, TabularAllocator};
pub use annotators::{AnnotatorPool, BiasedAnnotator, ClusterExpert, ReplayPool, SimulatedPool};
pub use datagen::{ReplayDataset, SyntheticDataset, SyntheticDatasetSpec};
pub use domain::{AllocationDist, CategoryId, Committee, DSimMatrix, LabelBit, Task};
pub use training::{TrainConfig, TrainHistory};
