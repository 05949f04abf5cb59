//! Experiment drivers shared by the CLI and the acceptance suite: stream
//! generation, parallel seed sweeps, the lower-bound adversary, expert
//! listings and the trichotomy scaling study.

use std::sync::Arc;

use appletaste_core::adversary::{
    estimation_slack, greedy_worst_stream, lower_bound_tree, plan_adversary, realize_stream,
    stochastic_agnostic_stream, AdversaryPlan, DEFAULT_NUM_SIMS,
};
use appletaste_core::dimensions::{
    witness_tree, AppleTreeWitness, DimensionCache, EffectiveWidth, UNBOUNDED,
};
use appletaste_core::learners::{ExpertSet, Learner, LearnerSpec, DEFAULT_EXPERT_CAP};
use appletaste_core::protocol::{run_game, FeedbackMode};
use appletaste_core::rngs::{derive, seeded};
use appletaste_core::stats::{fit_power_law, PowerFit, SampleSummary};
use appletaste_core::{HypothesisClass, Label, LabeledStream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::formats::ClassSpec;

/// Stream index used when deriving evaluation seeds from the run seed.
const EVAL_STREAM: u64 = u64::MAX;

/// Evaluation seeds `derive(seed, EVAL_STREAM, i)` for `i < count`.
pub fn eval_seeds(seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| derive(seed, EVAL_STREAM, i))
        .collect()
}

/// How the labeled stream of a run is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StreamSpec {
    Explicit(LabeledStream),
    Generated(StreamGenerator),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamGenerator {
    /// Instances `t mod |X|` labeled by one hypothesis.
    Cycle { hypothesis: usize },
    /// Uniform instances labeled by a uniform hypothesis, each label flipped
    /// with probability `noise`.
    Noisy {
        #[serde(default)]
        noise: f64,
    },
    /// The lower-bound adversary at `width`, planned against the learner.
    Adversary {
        width: u32,
        #[serde(default)]
        sims: Option<usize>,
    },
    /// Adaptive search for the realizable stream with the most mistakes.
    Greedy,
}

/// A stream plus the adversary plan that produced it, if any.
pub struct GeneratedStream {
    pub stream: LabeledStream,
    pub plan: Option<AdversaryPlan>,
}

pub fn generate_stream(
    class: &HypothesisClass,
    spec: &StreamSpec,
    learner: &mut dyn Learner,
    horizon: usize,
    mode: FeedbackMode,
    seed: u64,
) -> AppResult<GeneratedStream> {
    let generator = match spec {
        StreamSpec::Explicit(s) => {
            s.validate(class)?;
            return Ok(GeneratedStream {
                stream: s.clone(),
                plan: None,
            });
        }
        StreamSpec::Generated(g) => g,
    };
    if horizon == 0 {
        return Err(AppError::config("horizon must be positive"));
    }
    Ok(match generator {
        StreamGenerator::Cycle { hypothesis } => {
            if *hypothesis >= class.len() {
                return Err(AppError::Config(format!(
                    "hypothesis {hypothesis} out of range for a class of {}",
                    class.len()
                )));
            }
            let xs: Vec<usize> = (0..horizon).map(|t| t % class.instance_count()).collect();
            GeneratedStream {
                stream: class.label_stream(*hypothesis, &xs),
                plan: None,
            }
        }
        StreamGenerator::Noisy { noise } => {
            let mut rng = seeded(seed);
            let (_, stream) = stochastic_agnostic_stream(class, *noise, horizon, &mut rng)?;
            GeneratedStream { stream, plan: None }
        }
        StreamGenerator::Adversary { width, sims } => {
            let tree = lower_bound_tree(class, *width, horizon)?;
            let plan = plan_adversary(
                class,
                &tree,
                learner,
                sims.unwrap_or(DEFAULT_NUM_SIMS),
                seed,
            )?;
            let stream = realize_stream(&plan, horizon)?;
            GeneratedStream {
                stream,
                plan: Some(plan),
            }
        }
        StreamGenerator::Greedy => {
            let worst = greedy_worst_stream(class, learner, horizon, mode, seed)?;
            GeneratedStream {
                stream: worst.stream,
                plan: None,
            }
        }
    })
}

/// Default feedback mode for a learner: full information for learners that
/// need every label, apple tasting otherwise.
pub fn default_mode(spec: &LearnerSpec) -> FeedbackMode {
    if spec.needs_full_information() {
        FeedbackMode::FullInformation
    } else {
        FeedbackMode::AppleTasting
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub mistakes: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub regret: i64,
    pub complete: bool,
    pub overrun: bool,
}

fn pool(jobs: usize) -> AppResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AppError::Runtime(format!("cannot start worker pool: {e}")))
}

/// Replays `stream` once per seed, spread over `jobs` threads (0 means one
/// per core). Results come back in seed order and do not depend on `jobs`.
pub fn run_seeds(
    class: &HypothesisClass,
    learner: &dyn Learner,
    stream: &LabeledStream,
    mode: FeedbackMode,
    seeds: &[u64],
    jobs: usize,
) -> AppResult<Vec<SeedOutcome>> {
    let best = class.best_loss(stream) as i64;
    let pool = pool(jobs)?;
    let chunk = seeds.len().div_ceil(pool.current_num_threads() * 4).max(1);
    let work: Vec<(Box<dyn Learner>, &[u64])> = seeds
        .chunks(chunk)
        .map(|c| (learner.boxed_clone(), c))
        .collect();
    let chunks: Vec<Vec<SeedOutcome>> = pool.install(|| {
        work.into_par_iter()
            .map(|(mut l, seeds)| {
                seeds
                    .iter()
                    .map(|&seed| {
                        let t = run_game(l.as_mut(), stream, mode, seed);
                        SeedOutcome {
                            seed,
                            mistakes: t.mistakes,
                            false_pos: t.false_pos,
                            false_neg: t.false_neg,
                            regret: t.mistakes as i64 - best,
                            complete: t.is_complete(),
                            overrun: t.budget_overrun,
                        }
                    })
                    .collect()
            })
            .collect()
    });
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub mistakes: SampleSummary,
    pub regret: SampleSummary,
    pub errors: usize,
    pub overruns: usize,
}

impl SweepSummary {
    pub fn of(outcomes: &[SeedOutcome]) -> Self {
        let regret: Vec<f64> = outcomes.iter().map(|o| o.regret as f64).collect();
        SweepSummary {
            mistakes: SampleSummary::from_counts(outcomes.iter().map(|o| o.mistakes)),
            regret: SampleSummary::from_samples(&regret),
            errors: outcomes.iter().filter(|o| !o.complete).count(),
            overruns: outcomes.iter().filter(|o| o.overrun).count(),
        }
    }
}

/// Outcome CSV with one row per seed.
pub fn outcomes_csv(outcomes: &[SeedOutcome]) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for o in outcomes {
        w.serialize(o)
            .map_err(|e| AppError::Runtime(format!("writing results: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| AppError::Runtime(format!("writing results: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimsReport {
    pub ldim: u32,
    /// `aldim` at each width from 1 to the requested maximum.
    pub aldim_by_width: std::collections::BTreeMap<u32, u32>,
    pub effective_width: EffectiveWidth,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<AppleTreeWitness>,
}

/// Dimensions of the full class at widths `1..=max_width` (default
/// `ldim + 1`), with a witness tree at `witness_width` when asked.
pub fn dims_report(
    class: &HypothesisClass,
    max_width: Option<u32>,
    witness_width: Option<u32>,
) -> AppResult<DimsReport> {
    let full = class.full_space();
    let mut cache = DimensionCache::new();
    let ldim = cache.ldim(class, &full)?;
    let top = max_width.unwrap_or(ldim.saturating_add(1));
    if top == 0 || top == UNBOUNDED {
        return Err(AppError::config("--width must be a positive finite width"));
    }
    let mut aldim_by_width = std::collections::BTreeMap::new();
    for w in 1..=top {
        aldim_by_width.insert(w, cache.aldim(class, &full, w)?);
    }
    let witness = match witness_width {
        None => None,
        Some(w) => {
            let d = cache.aldim(class, &full, w)?;
            Some(witness_tree(class, &full, w, d).ok_or_else(|| {
                AppError::Runtime(format!("no witness tree at width {w}, depth {d}"))
            })?)
        }
    };
    let effective_width = appletaste_core::dimensions::effective_width(class, &full)?;
    Ok(DimsReport {
        ldim,
        aldim_by_width,
        effective_width,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub depth: u32,
    pub width: u32,
    pub horizon: usize,
    pub block_size: usize,
    /// Labels chosen along the tree path.
    pub sigma: Vec<Label>,
    /// Estimated probability of a 1-prediction in each block.
    pub p_hat: Vec<f64>,
    pub num_sims: usize,
    pub floor: f64,
    /// `d·exp(−2·num_sims·δ²)` at `delta`.
    pub slack: f64,
    pub delta: f64,
    pub plan: AdversaryPlan,
    pub stream: LabeledStream,
    pub summary: SweepSummary,
}

pub const SLACK_DELTA: f64 = 0.1;

#[derive(Clone, Copy, Debug)]
pub struct AdversarySettings {
    pub width: u32,
    pub horizon: usize,
    pub num_sims: usize,
    pub eval_count: usize,
    pub seed: u64,
    pub jobs: usize,
}

/// Plans the lower-bound stream against `learner`, then evaluates it under
/// apple tasting on `eval_count` derived seeds.
pub fn adversary_experiment(
    class: &HypothesisClass,
    learner: &mut dyn Learner,
    settings: AdversarySettings,
) -> AppResult<(AdversaryReport, Vec<SeedOutcome>)> {
    let AdversarySettings {
        width,
        horizon,
        num_sims,
        eval_count,
        seed,
        jobs,
    } = settings;
    if eval_count < 2 {
        return Err(AppError::config("--eval-seeds must be at least 2"));
    }
    let tree = lower_bound_tree(class, width, horizon)?;
    let plan = plan_adversary(class, &tree, learner, num_sims, seed)?;
    let stream = realize_stream(&plan, horizon)?;
    let outcomes = run_seeds(
        class,
        learner,
        &stream,
        FeedbackMode::AppleTasting,
        &eval_seeds(seed, eval_count),
        jobs,
    )?;
    let report = AdversaryReport {
        depth: tree.depth,
        width,
        horizon,
        block_size: plan.block_size,
        sigma: plan.path.clone(),
        p_hat: plan.estimates.clone(),
        num_sims,
        floor: tree.depth as f64 / 4.0,
        slack: estimation_slack(tree.depth, num_sims, SLACK_DELTA),
        delta: SLACK_DELTA,
        summary: SweepSummary::of(&outcomes),
        plan,
        stream,
    };
    Ok((report, outcomes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpertListing {
    pub ldim: u32,
    pub horizon: usize,
    pub count: usize,
    pub flip_sets: Vec<Vec<u32>>,
}

pub fn list_experts(
    class: Arc<HypothesisClass>,
    horizon: usize,
    cap: Option<usize>,
) -> AppResult<ExpertListing> {
    if horizon == 0 {
        return Err(AppError::config("horizon must be positive"));
    }
    let ldim = appletaste_core::dimensions::ldim(&class, &class.full_space())?;
    let set = ExpertSet::new(class, horizon, cap.unwrap_or(DEFAULT_EXPERT_CAP))?;
    let flip_sets: Vec<Vec<u32>> = set.flip_sets().map(|f| f.to_vec()).collect();
    Ok(ExpertListing {
        ldim,
        horizon,
        count: flip_sets.len(),
        flip_sets,
    })
}

/// Experts CSV: index and the space-separated rounds each expert flips.
pub fn experts_csv(listing: &ExpertListing) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| AppError::Runtime(format!("writing experts: {e}"));
    w.write_record(["index", "flip_set"]).map_err(err)?;
    for (i, f) in listing.flip_sets.iter().enumerate() {
        let rounds: Vec<String> = f.iter().map(|r| r.to_string()).collect();
        w.write_record([i.to_string(), rounds.join(" ")])
            .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| AppError::Runtime(format!("writing experts: {e}")))
}

/// Class of a trichotomy case: fixed, or a family grown to `n = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseClass {
    Growing { growing: GrowingFamily },
    Fixed(ClassSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowingFamily {
    Singletons,
    FlippedSingletons,
}

impl CaseClass {
    pub fn build(&self, horizon: usize) -> AppResult<HypothesisClass> {
        Ok(match self {
            CaseClass::Growing {
                growing: GrowingFamily::Singletons,
            } => HypothesisClass::singletons(horizon)?,
            CaseClass::Growing {
                growing: GrowingFamily::FlippedSingletons,
            } => HypothesisClass::flipped_singletons(horizon)?,
            CaseClass::Fixed(spec) => spec.build()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrichotomyCase {
    pub name: String,
    pub class: CaseClass,
    pub learner: LearnerSpec,
    pub stream: StreamSpec,
    #[serde(default)]
    pub band: Option<Band>,
}

/// Accepted range for a fitted exponent; a missing end is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.min.is_none_or(|lo| x >= lo) && self.max.is_none_or(|hi| x <= hi)
    }
}

pub const DEFAULT_HORIZONS: [usize; 5] = [16, 32, 64, 128, 256];
pub const DEFAULT_TRICHOTOMY_SEEDS: usize = 400;

pub fn default_trichotomy_cases() -> Vec<TrichotomyCase> {
    vec![
        TrichotomyCase {
            name: "flipped_singletons".into(),
            class: CaseClass::Fixed(ClassSpec::Family(
                appletaste_core::hypothesis::Family::FlippedSingletons { n: 8 },
            )),
            learner: LearnerSpec::DetW1 {},
            stream: StreamSpec::Generated(StreamGenerator::Cycle { hypothesis: 0 }),
            band: Some(Band {
                min: None,
                max: Some(0.15),
            }),
        },
        TrichotomyCase {
            name: "two_constants".into(),
            class: CaseClass::Fixed(ClassSpec::Matrix {
                matrix: vec![vec![1, 1, 1, 1], vec![0, 0, 0, 0]],
            }),
            learner: LearnerSpec::DetW1 {},
            stream: StreamSpec::Generated(StreamGenerator::Cycle { hypothesis: 1 }),
            band: Some(Band {
                min: None,
                max: Some(0.15),
            }),
        },
        TrichotomyCase {
            name: "growing_singletons".into(),
            class: CaseClass::Growing {
                growing: GrowingFamily::Singletons,
            },
            learner: LearnerSpec::Conversion {
                width: 2,
                false_negative_budget: None,
            },
            stream: StreamSpec::Generated(StreamGenerator::Adversary {
                width: 1,
                sims: None,
            }),
            band: Some(Band {
                min: Some(0.35),
                max: Some(0.65),
            }),
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyRow {
    pub case: String,
    pub learner: String,
    pub horizon: usize,
    pub instances: usize,
    pub hypotheses: usize,
    pub mean_mistakes: f64,
    pub std_err: f64,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseFit {
    pub case: String,
    pub fit: Option<PowerFit>,
    pub band: Option<Band>,
    pub in_band: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrichotomyReport {
    pub horizons: Vec<usize>,
    pub seeds_per_cell: usize,
    pub rows: Vec<TrichotomyRow>,
    pub fits: Vec<CaseFit>,
}

/// Mean mistakes for every `(case, T)` cell and the log-log exponent fitted
/// per case.
pub fn trichotomy(
    cases: &[TrichotomyCase],
    horizons: &[usize],
    seeds_per_cell: usize,
    seed: u64,
    jobs: usize,
) -> AppResult<TrichotomyReport> {
    if horizons.len() < 2 {
        return Err(AppError::config("trichotomy needs at least two horizons"));
    }
    if horizons.contains(&0) {
        return Err(AppError::config("horizons must be positive"));
    }
    if seeds_per_cell < 2 {
        return Err(AppError::config(
            "trichotomy needs at least two seeds per cell",
        ));
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (ci, case) in cases.iter().enumerate() {
        let mut points = Vec::new();
        for (hi, &horizon) in horizons.iter().enumerate() {
            let class = Arc::new(case.class.build(horizon)?);
            let mut learner = case.learner.build(class.clone(), horizon)?;
            let mode = default_mode(&case.learner);
            let cell_seed = derive(seed, ci as u64, hi as u64);
            let generated = generate_stream(
                &class,
                &case.stream,
                learner.as_mut(),
                horizon,
                mode,
                cell_seed,
            )?;
            let outcomes = run_seeds(
                &class,
                learner.as_ref(),
                &generated.stream,
                mode,
                &eval_seeds(cell_seed, seeds_per_cell),
                jobs,
            )?;
            let summary = SweepSummary::of(&outcomes);
            points.push((horizon as f64, summary.mistakes.mean));
            rows.push(TrichotomyRow {
                case: case.name.clone(),
                learner: case.learner.kind().to_string(),
                horizon,
                instances: class.instance_count(),
                hypotheses: class.len(),
                mean_mistakes: summary.mistakes.mean,
                std_err: summary.mistakes.std_err,
                errors: summary.errors,
            });
        }
        let fit = if points.iter().all(|&(_, y)| y == points[0].1 && y > 0.0) {
            Some(PowerFit {
                exponent: 0.0,
                log_coefficient: points[0].1.ln(),
                r_squared: 1.0,
            })
        } else {
            fit_power_law(&points)
        };
        let in_band = match (&fit, case.band) {
            (Some(f), Some(b)) => Some(b.contains(f.exponent)),
            (None, Some(_)) => Some(false),
            _ => None,
        };
        fits.push(CaseFit {
            case: case.name.clone(),
            fit,
            band: case.band,
            in_band,
        });
    }
    Ok(TrichotomyReport {
        horizons: horizons.to_vec(),
        seeds_per_cell,
        rows,
        fits,
    })
}

pub fn trichotomy_csv(report: &TrichotomyReport) -> AppResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(r)
            .map_err(|e| AppError::Runtime(format!("writing table: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| AppError::Runtime(format!("writing table: {e}")))
}
