//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use appletaste_core::learners::LearnerSpec;
use appletaste_core::protocol::{run_game, FeedbackMode};
use appletaste_core::HypothesisClass;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::experiments::{
    adversary_experiment, default_mode, default_trichotomy_cases, dims_report, eval_seeds,
    experts_csv, generate_stream, list_experts, outcomes_csv, run_seeds, trichotomy,
    trichotomy_csv, AdversarySettings, StreamSpec, SweepSummary, TrichotomyCase, DEFAULT_HORIZONS,
    DEFAULT_TRICHOTOMY_SEEDS,
};
use crate::formats::{
    parse_json_arg, stream_to_json, transcript_csv, ClassSpec, OutputDir, Summary,
};

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_BENCH_SEEDS: usize = 100;
pub const DEFAULT_EVAL_SEEDS: usize = 200;

#[derive(Debug, Parser)]
#[command(
    name = "appletaste",
    version,
    about = "Online classification under apple-tasting feedback"
)]
pub struct Cli {
    /// Experiment config JSON, inline or a file path. Flags override it.
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Littlestone and apple Littlestone dimensions of a class.
    Dims {
        #[command(flatten)]
        class: ClassArg,
        /// Largest width to report.
        #[arg(long)]
        width: Option<u32>,
        /// Also emit a shattered tree at the largest width.
        #[arg(long)]
        witness: bool,
    },
    /// One game, written as a transcript.
    Play(RunArgs),
    /// Seed sweeps over every learner and horizon.
    Bench(RunArgs),
    /// Lower-bound adversary planned against a learner.
    Adversary {
        #[command(flatten)]
        class: ClassArg,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        sims: Option<usize>,
        #[arg(long)]
        eval_seeds: Option<usize>,
    },
    /// Expert set of the agnostic learner.
    Experts {
        #[command(flatten)]
        class: ClassArg,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        max_experts: Option<usize>,
    },
    /// Mistake scaling across horizons with fitted log-log exponents.
    Trichotomy {
        /// Comma-separated horizons.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
        /// Evaluation seeds per cell.
        #[arg(long)]
        seeds: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct ClassArg {
    /// Class JSON, inline or a file path.
    #[arg(long)]
    pub class: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub class: ClassArg,
    /// Learner kind name or learner JSON; repeatable for bench.
    #[arg(long)]
    pub learner: Vec<String>,
    /// Width for learner kinds that take one.
    #[arg(long)]
    pub width: Option<u32>,
    /// Stream JSON, inline or a file path: `[[x, y], ...]` or a generator.
    #[arg(long)]
    pub stream: Option<String>,
    /// Horizon for generated streams; repeatable for bench.
    #[arg(long, value_delimiter = ',')]
    pub horizon: Vec<usize>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<FeedbackMode>,
    /// Number of seeds for bench.
    #[arg(long)]
    pub seeds: Option<usize>,
}

fn parse_mode(s: &str) -> Result<FeedbackMode, String> {
    match s {
        "apple_tasting" => Ok(FeedbackMode::AppleTasting),
        "full_information" => Ok(FeedbackMode::FullInformation),
        _ => Err(format!(
            "unknown mode {s:?}; expected apple_tasting or full_information"
        )),
    }
}

/// Everything that determines a run's outputs. Stored in the manifest and
/// accepted back through `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub learners: Vec<LearnerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<FeedbackMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_experts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<TrichotomyCase>>,
    /// Not part of the config hash; outputs do not depend on it.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Not part of the config hash; outputs do not depend on it.
    #[serde(default, skip_serializing)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    fn class(&self) -> AppResult<HypothesisClass> {
        self.class
            .as_ref()
            .ok_or_else(|| AppError::config("no class given; pass --class"))?
            .build()
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn jobs(&self) -> usize {
        self.jobs.unwrap_or(0)
    }

    fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn single_learner(&self) -> AppResult<&LearnerSpec> {
        match self.learners.as_slice() {
            [one] => Ok(one),
            [] => Err(AppError::config("no learner given; pass --learner")),
            _ => Err(AppError::config("this command takes exactly one learner")),
        }
    }
}

/// A learner argument: a kind name, or learner JSON inline or in a file.
pub fn parse_learner(arg: &str, width: Option<u32>) -> AppResult<LearnerSpec> {
    let t = arg.trim_start();
    if t.starts_with('{') || Path::new(arg).is_file() {
        return parse_json_arg(arg, "learner");
    }
    Ok(LearnerSpec::named(arg, width)?)
}

fn load_config(cli: &Cli) -> AppResult<ExperimentConfig> {
    let mut c: ExperimentConfig = match &cli.config {
        Some(arg) => parse_json_arg(arg, "config")?,
        None => ExperimentConfig::default(),
    };
    if cli.seed.is_some() {
        c.seed = cli.seed;
    }
    if cli.out_dir.is_some() {
        c.out_dir = cli.out_dir.clone();
    }
    if cli.jobs.is_some() {
        c.jobs = cli.jobs;
    }
    let set_class = |c: &mut ExperimentConfig, a: &ClassArg| -> AppResult<()> {
        if let Some(arg) = &a.class {
            c.class = Some(parse_json_arg(arg, "class")?);
        }
        Ok(())
    };
    match &cli.command {
        Command::Dims {
            class,
            width,
            witness,
        } => {
            set_class(&mut c, class)?;
            c.width = width.or(c.width);
            if *witness {
                c.witness = Some(true);
            }
        }
        Command::Play(r) | Command::Bench(r) => {
            set_class(&mut c, &r.class)?;
            c.width = r.width.or(c.width);
            if !r.learner.is_empty() {
                c.learners = r
                    .learner
                    .iter()
                    .map(|l| parse_learner(l, c.width))
                    .collect::<AppResult<_>>()?;
            }
            if let Some(s) = &r.stream {
                c.stream = Some(parse_json_arg(s, "stream")?);
            }
            if !r.horizon.is_empty() {
                c.horizons = r.horizon.clone();
            }
            c.mode = r.mode.or(c.mode);
            c.seeds = r.seeds.or(c.seeds);
        }
        Command::Adversary {
            class,
            learner,
            width,
            horizon,
            sims,
            eval_seeds,
        } => {
            set_class(&mut c, class)?;
            c.width = width.or(c.width);
            if let Some(l) = learner {
                c.learners = vec![parse_learner(l, c.width)?];
            }
            if let Some(h) = horizon {
                c.horizons = vec![*h];
            }
            c.sims = sims.or(c.sims);
            c.eval_seeds = eval_seeds.or(c.eval_seeds);
        }
        Command::Experts {
            class,
            horizon,
            max_experts,
        } => {
            set_class(&mut c, class)?;
            if let Some(h) = horizon {
                c.horizons = vec![*h];
            }
            c.max_experts = max_experts.or(c.max_experts);
        }
        Command::Trichotomy { horizons, seeds } => {
            if !horizons.is_empty() {
                c.horizons = horizons.clone();
            }
            c.seeds = seeds.or(c.seeds);
        }
    }
    Ok(c)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Dims { .. } => "dims",
        Command::Play(_) => "play",
        Command::Bench(_) => "bench",
        Command::Adversary { .. } => "adversary",
        Command::Experts { .. } => "experts",
        Command::Trichotomy { .. } => "trichotomy",
    }
}

fn print_json<T: Serialize>(value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports always serialize");
    text.push('\n');
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(AppError::Runtime(format!("writing stdout: {e}")))
        }
        _ => Ok(()),
    }
}

fn single_horizon(c: &ExperimentConfig) -> AppResult<Option<usize>> {
    match c.horizons.as_slice() {
        [] => Ok(None),
        [h] => Ok(Some(*h)),
        _ => Err(AppError::config("this command takes exactly one horizon")),
    }
}

fn stream_horizon(stream: &StreamSpec, horizon: Option<usize>) -> AppResult<usize> {
    match (stream, horizon) {
        (StreamSpec::Explicit(s), None) => Ok(s.len()),
        (StreamSpec::Explicit(s), Some(h)) if h != s.len() => Err(AppError::Config(format!(
            "horizon {h} differs from the stream length {}",
            s.len()
        ))),
        (_, Some(h)) => Ok(h),
        (StreamSpec::Generated(_), None) => {
            Err(AppError::config("generated streams need --horizon"))
        }
    }
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> AppResult<()> {
    let config = load_config(&cli)?;
    let name = command_name(&cli.command);
    match cli.command {
        Command::Dims { .. } => cmd_dims(&config, cli.out_dir.is_some()),
        Command::Play(_) => cmd_play(&config),
        Command::Bench(_) => cmd_bench(&config),
        Command::Adversary { .. } => cmd_adversary(&config),
        Command::Experts { .. } => cmd_experts(&config),
        Command::Trichotomy { .. } => cmd_trichotomy(&config),
    }
    .map_err(|e| match e {
        AppError::Config(m) => AppError::Config(format!("{name}: {m}")),
        AppError::Cap(m) => AppError::Cap(format!("{name}: {m}")),
        AppError::Runtime(m) => AppError::Runtime(format!("{name}: {m}")),
    })
}

fn cmd_dims(c: &ExperimentConfig, write_files: bool) -> AppResult<()> {
    let class = c.class()?;
    let report = dims_report(&class, c.width, None)?;
    let report = if c.witness == Some(true) {
        let top = *report
            .aldim_by_width
            .keys()
            .last()
            .expect("at least one width");
        dims_report(&class, c.width, Some(top))?
    } else {
        report
    };
    print_json(&report)?;
    if write_files {
        let mut out = OutputDir::create(&c.out_dir())?;
        out.write_json("dims.json", &report)?;
        out.finish("dims", c)?;
    }
    Ok(())
}

fn cmd_play(c: &ExperimentConfig) -> AppResult<()> {
    let class = Arc::new(c.class()?);
    let spec = c.single_learner()?;
    let stream_spec = c
        .stream
        .as_ref()
        .ok_or_else(|| AppError::config("no stream given; pass --stream"))?;
    let horizon = stream_horizon(stream_spec, single_horizon(c)?)?;
    let mode = c.mode.unwrap_or_else(|| default_mode(spec));
    let mut learner = spec.build(class.clone(), horizon)?;
    let generated = generate_stream(
        &class,
        stream_spec,
        learner.as_mut(),
        horizon,
        mode,
        c.seed(),
    )?;
    let transcript = run_game(learner.as_mut(), &generated.stream, mode, c.seed());
    let summary = Summary::of(&transcript, &class);
    let mut out = OutputDir::create(&c.out_dir())?;
    out.write("transcript.csv", &transcript_csv(&transcript)?)?;
    out.write_json("summary.json", &summary)?;
    out.write("stream.json", stream_to_json(&generated.stream).as_bytes())?;
    if let Some(plan) = &generated.plan {
        out.write_json("plan.json", plan)?;
    }
    out.finish("play", c)?;
    print_json(&summary)?;
    match transcript.error {
        Some(e) => Err(AppError::Runtime(format!(
            "learner failed at round {}: {e}",
            transcript.rounds.len()
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct BenchCell {
    learner: String,
    horizon: usize,
    mode: FeedbackMode,
    summary: SweepSummary,
}

#[derive(Serialize)]
struct BenchRow<'a> {
    learner: &'a str,
    horizon: usize,
    seed: u64,
    mistakes: usize,
    false_pos: usize,
    false_neg: usize,
    regret: i64,
    complete: bool,
    overrun: bool,
}

fn cmd_bench(c: &ExperimentConfig) -> AppResult<()> {
    let class = Arc::new(c.class()?);
    if c.learners.is_empty() {
        return Err(AppError::config("no learner given; pass --learner"));
    }
    let stream_spec = c
        .stream
        .as_ref()
        .ok_or_else(|| AppError::config("no stream given; pass --stream"))?;
    let horizons: Vec<Option<usize>> = if c.horizons.is_empty() {
        vec![None]
    } else {
        c.horizons.iter().copied().map(Some).collect()
    };
    let seeds = eval_seeds(c.seed(), c.seeds.unwrap_or(DEFAULT_BENCH_SEEDS));
    if seeds.len() < 2 {
        return Err(AppError::config("bench needs at least two seeds"));
    }
    let mut cells = Vec::new();
    let mut rows = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| AppError::Runtime(format!("writing results: {e}"));
    for spec in &c.learners {
        for &h in &horizons {
            let horizon = stream_horizon(stream_spec, h)?;
            let mode = c.mode.unwrap_or_else(|| default_mode(spec));
            let mut learner = spec.build(class.clone(), horizon)?;
            let generated = generate_stream(
                &class,
                stream_spec,
                learner.as_mut(),
                horizon,
                mode,
                c.seed(),
            )?;
            let outcomes = run_seeds(
                &class,
                learner.as_ref(),
                &generated.stream,
                mode,
                &seeds,
                c.jobs(),
            )?;
            for o in &outcomes {
                rows.serialize(BenchRow {
                    learner: spec.kind(),
                    horizon,
                    seed: o.seed,
                    mistakes: o.mistakes,
                    false_pos: o.false_pos,
                    false_neg: o.false_neg,
                    regret: o.regret,
                    complete: o.complete,
                    overrun: o.overrun,
                })
                .map_err(csv_err)?;
            }
            cells.push(BenchCell {
                learner: spec.kind().to_string(),
                horizon,
                mode,
                summary: SweepSummary::of(&outcomes),
            });
        }
    }
    let mut out = OutputDir::create(&c.out_dir())?;
    out.write(
        "results.csv",
        &rows
            .into_inner()
            .map_err(|e| AppError::Runtime(format!("writing results: {e}")))?,
    )?;
    out.write_json("bench.json", &cells)?;
    out.finish("bench", c)?;
    print_json(&cells)
}

fn cmd_adversary(c: &ExperimentConfig) -> AppResult<()> {
    let class = Arc::new(c.class()?);
    let spec = c.single_learner()?;
    let horizon =
        single_horizon(c)?.ok_or_else(|| AppError::config("no horizon given; pass --horizon"))?;
    let width = c.width.unwrap_or(1);
    let mut learner = spec.build(class.clone(), horizon)?;
    let settings = AdversarySettings {
        width,
        horizon,
        num_sims: c
            .sims
            .unwrap_or(appletaste_core::adversary::DEFAULT_NUM_SIMS),
        eval_count: c.eval_seeds.unwrap_or(DEFAULT_EVAL_SEEDS),
        seed: c.seed(),
        jobs: c.jobs(),
    };
    let (report, outcomes) = adversary_experiment(&class, learner.as_mut(), settings)?;
    let mut out = OutputDir::create(&c.out_dir())?;
    out.write_json("plan.json", &report)?;
    out.write("results.csv", &outcomes_csv(&outcomes)?)?;
    out.write("stream.json", stream_to_json(&report.stream).as_bytes())?;
    out.finish("adversary", c)?;
    print_json(&serde_json::json!({
        "depth": report.depth,
        "sigma": report.sigma,
        "p_hat": report.p_hat,
        "floor": report.floor,
        "slack": report.slack,
        "summary": report.summary,
    }))
}

fn cmd_experts(c: &ExperimentConfig) -> AppResult<()> {
    let class = Arc::new(c.class()?);
    let horizon =
        single_horizon(c)?.ok_or_else(|| AppError::config("no horizon given; pass --horizon"))?;
    let listing = list_experts(class, horizon, c.max_experts)?;
    let mut out = OutputDir::create(&c.out_dir())?;
    out.write("experts.csv", &experts_csv(&listing)?)?;
    out.write_json("experts.json", &listing)?;
    out.finish("experts", c)?;
    print_json(
        &serde_json::json!({ "ldim": listing.ldim, "horizon": listing.horizon, "count": listing.count }),
    )
}

fn cmd_trichotomy(c: &ExperimentConfig) -> AppResult<()> {
    let horizons = if c.horizons.is_empty() {
        DEFAULT_HORIZONS.to_vec()
    } else {
        c.horizons.clone()
    };
    let (lo, hi) = (
        horizons.iter().min().copied().unwrap_or(0),
        horizons.iter().max().copied().unwrap_or(0),
    );
    if horizons.len() >= 2 && (horizons.len() < 4 || hi < 10 * lo.max(1)) {
        eprintln!(
            "warning: fits are most meaningful with 4 or more horizons spanning a factor of 10"
        );
    }
    let cases = c.cases.clone().unwrap_or_else(default_trichotomy_cases);
    let report = trichotomy(
        &cases,
        &horizons,
        c.seeds.unwrap_or(DEFAULT_TRICHOTOMY_SEEDS),
        c.seed(),
        c.jobs(),
    )?;
    let mut out = OutputDir::create(&c.out_dir())?;
    out.write("trichotomy.csv", &trichotomy_csv(&report)?)?;
    out.write_json("trichotomy.json", &report)?;
    out.finish("trichotomy", c)?;
    print_json(&report.fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("appletaste").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let cli = parse(&[
            "--config",
            r#"{"seed": 3, "learners": [{"kind": "soa"}], "horizons": [5]}"#,
            "--seed",
            "9",
            "play",
            "--class",
            r#"{"family": "singletons", "n": 3}"#,
            "--learner",
            "det_w1",
        ]);
        let c = load_config(&cli).unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.learners, vec![LearnerSpec::DetW1 {}]);
        assert_eq!(c.horizons, vec![5]);
        assert_eq!(c.class, Some(ClassSpec::singletons(3)));
    }

    #[test]
    fn learner_arguments() {
        assert_eq!(
            parse_learner("conversion", Some(2)).unwrap(),
            LearnerSpec::Conversion {
                width: 2,
                false_negative_budget: None
            }
        );
        assert_eq!(
            parse_learner(r#"{"kind": "det_ldim1", "threshold": 3}"#, None).unwrap(),
            LearnerSpec::DetLdim1 { threshold: Some(3) }
        );
        assert!(matches!(
            parse_learner("halving", None),
            Err(AppError::Config(_))
        ));
        assert!(matches!(
            parse_learner(r#"{"kind": "soa", "x": 1}"#, None),
            Err(AppError::Config(_))
        ));
    }

    #[test]
    fn hashed_config_excludes_paths_and_jobs() {
        let mut a = ExperimentConfig {
            seed: Some(1),
            ..Default::default()
        };
        let h = crate::formats::config_hash(&a);
        a.out_dir = Some("elsewhere".into());
        a.jobs = Some(8);
        assert_eq!(crate::formats::config_hash(&a), h);
    }

    #[test]
    fn horizon_resolution() {
        let explicit: StreamSpec = serde_json::from_str("[[0,1],[1,0]]").unwrap();
        assert_eq!(stream_horizon(&explicit, None).unwrap(), 2);
        assert!(stream_horizon(&explicit, Some(3)).is_err());
        let generated: StreamSpec = serde_json::from_str(r#"{"generator": "greedy"}"#).unwrap();
        assert!(stream_horizon(&generated, None).is_err());
        assert_eq!(stream_horizon(&generated, Some(7)).unwrap(), 7);
    }
}
