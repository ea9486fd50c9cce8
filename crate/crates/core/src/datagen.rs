//! Dataset generators and the replay file format.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{majority_vote, CategoryId, DSimMatrix, LabelBit, Task};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Number of expertise colours in the synthetic experiment.
pub const N_COLORS: usize = 3;

/// Upper end of the dSim noise range; at this value every score is 1/3.
pub const MAX_DSIM_NOISE: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDatasetSpec {
    pub n_points: usize,
    /// One offset per cluster, added to the shared mean on both coordinates.
    pub cluster_offsets: Vec<f64>,
    pub seed: u64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        SyntheticDatasetSpec {
            n_points: 10_000,
            cluster_offsets: vec![0.0, 2.5, 5.0],
            seed: 0,
        }
    }
}

impl SyntheticDatasetSpec {
    pub fn with_seed(seed: u64) -> Self {
        SyntheticDatasetSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::config("n_points", "must be positive"));
        }
        if self.cluster_offsets.is_empty() {
            return Err(Error::config("cluster_offsets", "need at least one cluster"));
        }
        if self.cluster_offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("cluster_offsets", "must be strictly increasing"));
        }
        Ok(())
    }
}

/// Tasks with their hidden gold labels. `gold[i]` belongs to the task with id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub tasks: Vec<Task>,
    pub gold: Vec<LabelBit>,
    pub mean: f64,
    pub variances: [f64; 2],
}

/// Three (by default) Gaussian clusters sharing one mean and one diagonal
/// covariance, shifted along the diagonal. Labels are coin flips,
/// independent of the features.
pub fn gen_clusters(spec: &SyntheticDatasetSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let mean: f64 = rng.random();
    let variances: [f64; 2] = [rng.random(), rng.random()];
    let sd = [variances[0].sqrt(), variances[1].sqrt()];
    let n_clusters = spec.cluster_offsets.len();

    let mut tasks = Vec::with_capacity(spec.n_points);
    let mut gold = Vec::with_capacity(spec.n_points);
    for id in 0..spec.n_points {
        let c = rng.random_range(0..n_clusters);
        let centre = mean + spec.cluster_offsets[c];
        let features = sd
            .iter()
            .map(|&s| {
                let z: f64 = StandardNormal.sample(&mut rng);
                centre + s * z
            })
            .collect();
        tasks.push(Task::new(id, features, CategoryId(c)));
        gold.push(LabelBit::new(rng.random::<bool>()));
    }
    Ok(SyntheticDataset {
        tasks,
        gold,
        mean,
        variances,
    })
}

/// Expert `c` scores `1 - s` on colour `c` and `s / 2` elsewhere.
pub fn gen_dsim_noisy(s: f64) -> Result<DSimMatrix> {
    if !(0.0..=MAX_DSIM_NOISE + 1e-12).contains(&s) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            lo: 0.0,
            hi: MAX_DSIM_NOISE,
        });
    }
    let rows = (0..N_COLORS)
        .map(|e| {
            (0..N_COLORS)
                .map(|z| if e == z { 1.0 - s } else { s / 2.0 })
                .collect()
        })
        .collect();
    DSimMatrix::from_rows(rows)
}

/// Recorded annotations for a fixed set of tasks, as loaded from a replay
/// file. Tasks and annotators are addressed by dense index; the original
/// file ids are kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayDataset {
    /// `tasks[i].id == i`.
    pub tasks: Vec<Task>,
    pub task_ids: Vec<u64>,
    pub annotator_ids: Vec<u64>,
    pub annotator_category: Vec<CategoryId>,
    /// Per task: annotator index to recorded label.
    pub annotations: Vec<BTreeMap<usize, LabelBit>>,
    pub gold_objective: Vec<LabelBit>,
    pub gold_subjective: Vec<LabelBit>,
}

impl ReplayDataset {
    pub fn n_annotators(&self) -> usize {
        self.annotator_ids.len()
    }

    pub fn n_categories(&self) -> usize {
        let from_tasks = self.tasks.iter().map(|t| t.category.0 + 1).max().unwrap_or(0);
        let from_annotators = self
            .annotator_category
            .iter()
            .map(|c| c.0 + 1)
            .max()
            .unwrap_or(0);
        from_tasks.max(from_annotators)
    }

    pub fn feature_dim(&self) -> usize {
        self.tasks.first().map(Task::dim).unwrap_or(0)
    }

    pub fn label(&self, task: usize, annotator: usize) -> Option<LabelBit> {
        self.annotations[task].get(&annotator).copied()
    }

    /// Identity-matching prior: 1 when the annotator's group equals the
    /// task category, 0 otherwise. Columns listed in `unmatched` (e.g. a
    /// control category that targets no group) are all zero.
    pub fn matching_dsim(&self, unmatched: &[CategoryId]) -> DSimMatrix {
        let nz = self.n_categories();
        let rows = self
            .annotator_category
            .iter()
            .map(|&g| {
                (0..nz)
                    .map(|z| {
                        let z = CategoryId(z);
                        if z == g && !unmatched.contains(&z) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        DSimMatrix::from_rows(rows).expect("0/1 scores are in range")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tasks.len();
        if n == 0 {
            return Err(Error::Validation("replay has no tasks".into()));
        }
        let dim = self.feature_dim();
        for (i, t) in self.tasks.iter().enumerate() {
            if t.id != i {
                return Err(Error::Validation(format!("task index {i} carries id {}", t.id)));
            }
            if t.dim() != dim {
                return Err(Error::Validation(format!(
                    "task {} has {} features, expected {dim}",
                    self.task_ids[i],
                    t.dim()
                )));
            }
        }
        if self.annotator_category.len() != self.annotator_ids.len() {
            return Err(Error::Validation("annotator table is ragged".into()));
        }
        if self.annotations.len() != n {
            return Err(Error::Validation("annotation table does not cover every task".into()));
        }
        let m = self.n_annotators();
        for (i, labels) in self.annotations.iter().enumerate() {
            if labels.is_empty() {
                return Err(Error::Validation(format!(
                    "task {} has no available annotator",
                    self.task_ids[i]
                )));
            }
            if let Some(&a) = labels.keys().find(|&&a| a >= m) {
                return Err(Error::Validation(format!("annotation references annotator index {a}")));
            }
        }
        if self.gold_objective.len() != n || self.gold_subjective.len() != n {
            return Err(Error::Validation("gold labels missing for some task".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub seed: u64,
    pub n_tasks: usize,
    pub n_annotators_per_group: usize,
    pub feature_dim: usize,
    /// Annotators recorded per group on every task.
    pub labels_per_group: usize,
    /// Accuracy of an annotator whose group matches the task category.
    pub p_match: f64,
    pub p_other: f64,
    /// Base rate of the latent positive class.
    pub positive_rate: f64,
    /// Distance of each category centroid from the origin, in noise units.
    pub separation: f64,
}

/// Number of annotator groups (and task categories) in the surrogate.
pub const SURROGATE_GROUPS: usize = 3;

impl Default for SurrogateSpec {
    fn default() -> Self {
        SurrogateSpec {
            seed: 0,
            n_tasks: 6000,
            n_annotators_per_group: 30,
            feature_dim: 25,
            labels_per_group: 5,
            p_match: 0.8,
            p_other: 0.65,
            positive_rate: 0.12,
            separation: 2.0,
        }
    }
}

impl SurrogateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.feature_dim == 0 {
            return Err(Error::config("n_tasks", "counts must be positive"));
        }
        if self.labels_per_group == 0 || self.labels_per_group % 2 == 0 {
            return Err(Error::config("labels_per_group", "must be odd"));
        }
        if self.n_annotators_per_group < self.labels_per_group {
            return Err(Error::config(
                "n_annotators_per_group",
                format!("need at least {} per group", self.labels_per_group),
            ));
        }
        for (name, p) in [
            ("p_match", self.p_match),
            ("p_other", self.p_other),
            ("positive_rate", self.positive_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(name, "must be a probability"));
            }
        }
        Ok(())
    }
}

/// A synthetic stand-in for a demographically annotated moderation corpus:
/// three task categories, three annotator groups, and every task labelled
/// by `labels_per_group` random annotators from each group.
///
/// Labels are drawn against a latent truth; the subjective gold is the
/// majority of the group-matched labels, the objective gold the majority
/// of all recorded labels.
pub fn gen_surrogate_replay(spec: &SurrogateSpec) -> Result<ReplayDataset> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let groups = SURROGATE_GROUPS;
    let per = spec.n_annotators_per_group;
    let m = groups * per;

    let centroids: Vec<Vec<f64>> = (0..groups)
        .map(|_| {
            let v: Vec<f64> = (0..spec.feature_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| spec.separation * x / norm).collect()
        })
        .collect();
    let noise = Normal::new(0.0, 1.0 / (spec.feature_dim as f64).sqrt()).expect("valid sd");

    let annotator_category: Vec<CategoryId> = (0..m).map(|a| CategoryId(a / per)).collect();
    let mut tasks = Vec::with_capacity(spec.n_tasks);
    let mut annotations = Vec::with_capacity(spec.n_tasks);
    let mut gold_objective = Vec::with_capacity(spec.n_tasks);
    let mut gold_subjective = Vec::with_capacity(spec.n_tasks);

    for id in 0..spec.n_tasks {
        let z = rng.random_range(0..groups);
        let features = centroids[z]
            .iter()
            .map(|&c| c + noise.sample(&mut rng))
            .collect();
        tasks.push(Task::new(id, features, CategoryId(z)));
        let truth = LabelBit::new(rng.random_bool(spec.positive_rate));

        let mut labels = BTreeMap::new();
        let mut matched = Vec::with_capacity(spec.labels_per_group);
        let mut all = Vec::with_capacity(groups * spec.labels_per_group);
        for g in 0..groups {
            let p = if g == z { spec.p_match } else { spec.p_other };
            for offset in sample(&mut rng, per, spec.labels_per_group).into_iter() {
                let a = g * per + offset;
                let y = if rng.random_bool(p) { truth } else { truth.flipped() };
                labels.insert(a, y);
                all.push(y);
                if g == z {
                    matched.push(y);
                }
            }
        }
        gold_subjective.push(majority_vote(&matched)?);
        gold_objective.push(majority_vote(&all)?);
        annotations.push(labels);
    }

    let ds = ReplayDataset {
        task_ids: (0..spec.n_tasks as u64).collect(),
        annotator_ids: (0..m as u64).collect(),
        tasks,
        annotator_category,
        annotations,
        gold_objective,
        gold_subjective,
    };
    ds.validate()?;
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Tasks,
    Annotators,
    Annotations,
    GoldObjective,
    GoldSubjective,
}

fn parse_u64(field: &str, line: usize, what: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{}`", field.trim())))
}

fn parse_label(field: &str, line: usize) -> Result<LabelBit> {
    match field.trim() {
        "0" => Ok(LabelBit::ZERO),
        "1" => Ok(LabelBit::ONE),
        other => Err(Error::parse(line, format!("label must be 0 or 1, got `{other}`"))),
    }
}

fn expect_fields(line: &str, n: usize, lineno: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(Error::parse(
            lineno,
            format!("expected {n} comma-separated fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

/// Parses the line-oriented replay format:
///
/// ```text
/// #tasks
/// id,category,v1,...,vn
/// #annotators
/// id,category
/// #annotations
/// task_id,annotator_id,label
/// #gold_objective
/// task_id,label
/// #gold_subjective
/// task_id,label
/// ```
///
/// Blank lines are ignored. Syntax problems are reported as
/// [`Error::Parse`] with a 1-based line number; dangling references and
/// missing coverage as [`Error::Validation`].
pub fn parse_replay(text: &str) -> Result<ReplayDataset> {
    let mut section = None;
    let mut raw_tasks: Vec<(u64, usize, Vec<f64>)> = Vec::new();
    let mut raw_annotators: Vec<(u64, usize)> = Vec::new();
    let mut raw_annotations: Vec<(u64, u64, LabelBit)> = Vec::new();
    let mut raw_obj: Vec<(u64, LabelBit)> = Vec::new();
    let mut raw_subj: Vec<(u64, LabelBit)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            section = Some(match header.trim() {
                "tasks" => Section::Tasks,
                "annotators" => Section::Annotators,
                "annotations" => Section::Annotations,
                "gold_objective" => Section::GoldObjective,
                "gold_subjective" => Section::GoldSubjective,
                other => return Err(Error::parse(lineno, format!("unknown section `#{other}`"))),
            });
            continue;
        }
        match section {
            None => return Err(Error::parse(lineno, "data before the first section header")),
            Some(Section::Tasks) => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 3 {
                    return Err(Error::parse(lineno, "task needs id, category and features"));
                }
                let id = parse_u64(fields[0], lineno, "task id")?;
                let cat = parse_u64(fields[1], lineno, "category")? as usize;
                let features = fields[2..]
                    .iter()
                    .map(|f| {
                        f.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| Error::parse(lineno, format!("bad feature `{}`", f.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                raw_tasks.push((id, cat, features));
            }
            Some(Section::Annotators) => {
                let f = expect_fields(line, 2, lineno)?;
                raw_annotators.push((
                    parse_u64(f[0], lineno, "annotator id")?,
                    parse_u64(f[1], lineno, "category")? as usize,
                ));
            }
            Some(Section::Annotations) => {
                let f = expect_fields(line, 3, lineno)?;
                raw_annotations.push((
                    parse_u64(f[0], lineno, "task id")?,
                    parse_u64(f[1], lineno, "annotator id")?,
                    parse_label(f[2], lineno)?,
                ));
            }
            Some(s @ (Section::GoldObjective | Section::GoldSubjective)) => {
                let f = expect_fields(line, 2, lineno)?;
                let entry = (parse_u64(f[0], lineno, "task id")?, parse_label(f[1], lineno)?);
                if s == Section::GoldObjective {
                    raw_obj.push(entry);
                } else {
                    raw_subj.push(entry);
                }
            }
        }
    }

    let mut task_index = HashMap::new();
    let mut tasks = Vec::with_capacity(raw_tasks.len());
    let mut task_ids = Vec::with_capacity(raw_tasks.len());
    for (id, cat, features) in raw_tasks {
        if task_index.insert(id, tasks.len()).is_some() {
            return Err(Error::Validation(format!("duplicate task id {id}")));
        }
        tasks.push(Task::new(tasks.len(), features, CategoryId(cat)));
        task_ids.push(id);
    }
    let mut annotator_index = HashMap::new();
    let mut annotator_ids = Vec::new();
    let mut annotator_category = Vec::new();
    for (id, cat) in raw_annotators {
        if annotator_index.insert(id, annotator_ids.len()).is_some() {
            return Err(Error::Validation(format!("duplicate annotator id {id}")));
        }
        annotator_ids.push(id);
        annotator_category.push(CategoryId(cat));
    }

    let mut annotations = vec![BTreeMap::new(); tasks.len()];
    for (t, a, y) in raw_annotations {
        let ti = *task_index
            .get(&t)
            .ok_or_else(|| Error::Validation(format!("annotation references unknown task {t}")))?;
        let ai = *annotator_index
            .get(&a)
            .ok_or_else(|| Error::Validation(format!("annotation references unknown annotator {a}")))?;
        if annotations[ti].insert(ai, y).is_some() {
            return Err(Error::Validation(format!("annotator {a} labels task {t} twice")));
        }
    }

    let gold = |raw: Vec<(u64, LabelBit)>, which: &str| -> Result<Vec<LabelBit>> {
        let mut out: Vec<Option<LabelBit>> = vec![None; tasks.len()];
        for (t, y) in raw {
            let ti = *task_index
                .get(&t)
                .ok_or_else(|| Error::Validation(format!("{which} gold references unknown task {t}")))?;
            out[ti] = Some(y);
        }
        out.into_iter()
            .enumerate()
            .map(|(i, y)| {
                y.ok_or_else(|| Error::Validation(format!("task {} has no {which} gold", task_ids[i])))
            })
            .collect()
    };
    let gold_objective = gold(raw_obj, "objective")?;
    let gold_subjective = gold(raw_subj, "subjective")?;

    let ds = ReplayDataset {
        tasks,
        task_ids,
        annotator_ids,
        annotator_category,
        annotations,
        gold_objective,
        gold_subjective,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn load_replay(path: impl AsRef<Path>) -> Result<ReplayDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_replay(&text)
}

/// Serializes in the format read by [`parse_replay`]. Features are written
/// with Rust's shortest round-trip representation.
pub fn format_replay(ds: &ReplayDataset) -> String {
    let mut out = String::new();
    out.push_str("#tasks\n");
    for (t, id) in ds.tasks.iter().zip(&ds.task_ids) {
        write!(out, "{id},{}", t.category).unwrap();
        for v in &t.features {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out.push_str("#annotators\n");
    for (id, c) in ds.annotator_ids.iter().zip(&ds.annotator_category) {
        writeln!(out, "{id},{c}").unwrap();
    }
    out.push_str("#annotations\n");
    for (ti, labels) in ds.annotations.iter().enumerate() {
        for (&a, y) in labels {
            writeln!(out, "{},{},{y}", ds.task_ids[ti], ds.annotator_ids[a]).unwrap();
        }
    }
    out.push_str("#gold_objective\n");
    for (id, y) in ds.task_ids.iter().zip(&ds.gold_objective) {
        writeln!(out, "{id},{y}").unwrap();
    }
    out.push_str("#gold_subjective\n");
    for (id, y) in ds.task_ids.iter().zip(&ds.gold_subjective) {
        writeln!(out, "{id},{y}").unwrap();
    }
    out
}

pub fn save_replay(ds: &ReplayDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_replay(ds))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TASKS: &str = "\
#tasks
10,0,0.5,1.5
11,1,-1.0,2.0
#annotators
7,0
8,1
#annotations
10,7,1
10,8,0
11,8,1
#gold_objective
10,1
11,1
#gold_subjective
10,1
11,0
";

    #[test]
    fn parses_well_formed_file() {
        let ds = parse_replay(TWO_TASKS).unwrap();
        assert_eq!(ds.tasks.len(), 2);
        assert_eq!(ds.n_annotators(), 2);
        assert_eq!(ds.label(0, 0), Some(LabelBit::ONE));
        assert_eq!(ds.label(1, 0), None);
        assert_eq!(ds.gold_subjective[1], LabelBit::ZERO);
        assert_eq!(ds.tasks[1].features, vec![-1.0, 2.0]);
    }

    #[test]
    fn rejects_unknown_task_reference() {
        let bad = TWO_TASKS.replace("11,8,1", "12,8,1");
        assert!(matches!(parse_replay(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_task_without_annotations() {
        let bad = TWO_TASKS.replace("11,8,1\n", "");
        match parse_replay(&bad) {
            Err(Error::Validation(msg)) => assert!(msg.contains("no available annotator"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn reports_line_numbers() {
        let bad = TWO_TASKS.replace("10,8,0", "10,8,2");
        match parse_replay(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_replay("1,2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn dsim_noise_endpoints() {
        let d = gen_dsim_noisy(0.0).unwrap();
        assert_eq!(d.get(1, CategoryId(1)), 1.0);
        assert_eq!(d.get(1, CategoryId(0)), 0.0);
        let d = gen_dsim_noisy(MAX_DSIM_NOISE).unwrap();
        for e in 0..3 {
            for z in 0..3 {
                assert!((d.get(e, CategoryId(z)) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let d = gen_dsim_noisy(0.3).unwrap();
        assert!((d.get(2, CategoryId(2)) - 0.7).abs() < 1e-15);
        assert!((d.get(2, CategoryId(0)) - 0.15).abs() < 1e-15);
        assert!(gen_dsim_noisy(0.7).is_err());
        assert!(gen_dsim_noisy(-0.01).is_err());
    }

    #[test]
    fn dsim_rows_sum_to_one() {
        for i in 0..=20 {
            let s = MAX_DSIM_NOISE * i as f64 / 20.0;
            let d = gen_dsim_noisy(s).unwrap();
            for e in 0..3 {
                let total: f64 = (0..3).map(|z| d.get(e, CategoryId(z))).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clusters_are_deterministic() {
        let spec = SyntheticDatasetSpec {
            n_points: 3,
            seed: 99,
            ..Default::default()
        };
        assert_eq!(gen_clusters(&spec).unwrap(), gen_clusters(&spec).unwrap());
    }

    #[test]
    fn cluster_sizes_labels_and_means() {
        let ds = gen_clusters(&SyntheticDatasetSpec::with_seed(5)).unwrap();
        let mut sizes = [0usize; 3];
        let mut sums = [[0.0f64; 2]; 3];
        for t in &ds.tasks {
            sizes[t.category.0] += 1;
            sums[t.category.0][0] += t.features[0];
            sums[t.category.0][1] += t.features[1];
        }
        for c in 0..3 {
            assert!((3100..=3567).contains(&sizes[c]), "cluster {c} size {}", sizes[c]);
            let centre = ds.mean + [0.0, 2.5, 5.0][c];
            for d in 0..2 {
                let m = sums[c][d] / sizes[c] as f64;
                assert!((m - centre).abs() < 0.1, "cluster {c} dim {d} mean {m} vs {centre}");
            }
        }
        let ones = ds.gold.iter().filter(|y| y.is_one()).count() as f64 / ds.gold.len() as f64;
        assert!((0.47..=0.53).contains(&ones), "{ones}");
    }

    #[test]
    fn rejects_bad_spec() {
        let mut spec = SyntheticDatasetSpec::default();
        spec.cluster_offsets = vec![0.0, 0.0, 1.0];
        assert!(gen_clusters(&spec).is_err());
        spec.cluster_offsets = vec![0.0, 1.0];
        spec.n_points = 0;
        assert!(gen_clusters(&spec).is_err());
    }

    #[test]
    fn surrogate_structure() {
        let spec = SurrogateSpec {
            n_tasks: 700,
            n_annotators_per_group: 12,
            feature_dim: 5,
            seed: 3,
            ..Default::default()
        };
        let ds = gen_surrogate_replay(&spec).unwrap();
        let mut matched_agree = 0usize;
        let mut matched_total = 0usize;
        for (ti, labels) in ds.annotations.iter().enumerate() {
            assert_eq!(labels.len(), 15);
            let z = ds.tasks[ti].category;
            let matched: Vec<LabelBit> = labels
                .iter()
                .filter(|(a, _)| ds.annotator_category[**a] == z)
                .map(|(_, y)| *y)
                .collect();
            assert_eq!(matched.len(), 5);
            assert_eq!(majority_vote(&matched).unwrap(), ds.gold_subjective[ti]);
            let first = labels.values().next().unwrap();
            if labels.values().all(|y| y == first) {
                assert_eq!(ds.gold_objective[ti], ds.gold_subjective[ti]);
            }
            matched_total += matched.len();
            matched_agree += matched.iter().filter(|&&y| y == ds.gold_subjective[ti]).count();
        }
        // 700 * 5 = 3500 draws here; the 10k-draw band is checked in the
        // integration tests.
        let acc = matched_agree as f64 / matched_total as f64;
        assert!((0.74..=0.86).contains(&acc), "{acc}");
    }

    #[test]
    fn replay_round_trips_through_text() {
        let spec = SurrogateSpec {
            n_tasks: 20,
            n_annotators_per_group: 6,
            feature_dim: 4,
            seed: 11,
            ..Default::default()
        };
        let ds = gen_surrogate_replay(&spec).unwrap();
        let back = parse_replay(&format_replay(&ds)).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn matching_dsim_zeroes_unmatched_columns() {
        let ds = parse_replay(TWO_TASKS).unwrap();
        let d = ds.matching_dsim(&[]);
        assert_eq!(d.get(0, CategoryId(0)), 1.0);
        assert_eq!(d.get(1, CategoryId(0)), 0.0);
        let d = ds.matching_dsim(&[CategoryId(1)]);
        assert_eq!(d.get(1, CategoryId(1)), 0.0);
    }
}
