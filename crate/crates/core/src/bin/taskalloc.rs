use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use taskalloc::datagen::{gen_surrogate_replay, load_replay, save_replay, SurrogateSpec};
use taskalloc::experiment::{
    run_replay, run_sweep, run_synthetic, run_theory, synthetic_histories, write_sweep, ExperimentConfig,
    ExperimentKind, Manifest,
};
use taskalloc::metrics::write_results;
use taskalloc::theoryval::write_checks;
use taskalloc::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "taskalloc", version, about = "Closed-loop task allocation experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Compare all methods on the three-cluster synthetic task.
    Synthetic(Common),
    /// Repeat the synthetic comparison across prior noise levels.
    Sweep(Common),
    /// Availability-constrained replay of recorded annotations.
    Replay(Common),
    /// Check the tabular-dynamics statements.
    Theory(Common),
    /// Write a surrogate replay file.
    GenReplay(GenReplay),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file, applied before other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method names.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated noise levels for `sweep`.
    #[arg(long)]
    s_values: Option<String>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    replay: Option<PathBuf>,
    /// objective or subjective.
    #[arg(long)]
    gold: Option<String>,
    /// Any setting as `key=value`; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Results CSV; the manifest goes next to it.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write first-trial training histories into this directory.
    #[arg(long)]
    history_dir: Option<PathBuf>,
    /// Theory only: write every checked cell, not just the summary.
    #[arg(long)]
    detail: Option<PathBuf>,
}

#[derive(Args)]
struct GenReplay {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6000)]
    n_tasks: usize,
    #[arg(long, default_value_t = 30)]
    per_group: usize,
    #[arg(long, default_value_t = 25)]
    dim: usize,
}

fn build_config(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::for_kind(kind);
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    let flags: [(&str, Option<String>); 8] = [
        ("trials", c.trials.map(|v| v.to_string())),
        ("seed", c.seed.map(|v| v.to_string())),
        ("methods", c.methods.clone()),
        ("s", c.s.map(|v| v.to_string())),
        ("s_values", c.s_values.clone()),
        ("n_points", c.n_points.map(|v| v.to_string())),
        ("replay", c.replay.as_ref().map(|p| p.display().to_string())),
        ("gold", c.gold.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &c.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest(cfg: &ExperimentConfig, out: &Path) -> Result<(), Error> {
    let mut w = create(&manifest_path(out))?;
    Manifest::new(cfg).write(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Returns whether every check passed.
fn run(verb: Verb) -> Result<bool, Error> {
    let (kind, common) = match verb {
        Verb::GenReplay(g) => {
            let ds = gen_surrogate_replay(&SurrogateSpec {
                seed: g.seed,
                n_tasks: g.n_tasks,
                n_annotators_per_group: g.per_group,
                feature_dim: g.dim,
                ..SurrogateSpec::default()
            })?;
            save_replay(&ds, &g.out)?;
            return Ok(true);
        }
        Verb::Synthetic(c) => (ExperimentKind::Synthetic, c),
        Verb::Sweep(c) => (ExperimentKind::Sweep, c),
        Verb::Replay(c) => (ExperimentKind::Replay, c),
        Verb::Theory(c) => (ExperimentKind::Theory, c),
    };
    let cfg = build_config(kind, &common)?;
    write_manifest(&cfg, &common.out)?;
    let mut out = create(&common.out)?;
    let mut passed = true;
    match kind {
        ExperimentKind::Synthetic => {
            write_results(&mut out, &[], &run_synthetic(&cfg)?)?;
            if let Some(dir) = &common.history_dir {
                for (method, history, _) in synthetic_histories(&cfg)? {
                    history.write_csv(create(&dir.join(format!("{method}.csv")))?)?;
                }
            }
        }
        ExperimentKind::Sweep => write_sweep(&mut out, &run_sweep(&cfg)?)?,
        ExperimentKind::Replay => {
            let path = cfg
                .replay
                .clone()
                .ok_or_else(|| Error::Validation("replay needs --replay PATH".into()))?;
            let ds = load_replay(path)?;
            write_results(&mut out, &[], &run_replay(&cfg, &ds)?)?;
        }
        ExperimentKind::Theory => {
            let report = run_theory(&cfg)?;
            write_checks(&mut out, &report.summary())?;
            if let Some(path) = &common.detail {
                let rows: Vec<_> = report.all().cloned().collect();
                write_checks(create(path)?, &rows)?;
            }
            passed = report.passed();
        }
    }
    out.flush()?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("taskalloc: one or more checks failed");
            ExitCode::from(EXIT_CHECK)
        }
        Err(e) => {
            let _ = writeln!(io::stderr(), "taskalloc: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
