//! Hard realizable streams against black-box learners, plus simple noisy
//! streams for agnostic runs.
//!
//! The lower-bound construction walks a shattered apple tree of width `w`
//! and depth `d`. At node `j` it estimates the probability that the learner,
//! replayed on the blocks chosen so far and then shown `⌊d/w⌋` copies of the
//! node's instance, predicts 1 at least once. The label goes against the
//! likely behavior: 0 if that probability is at least ½, 1 otherwise. The
//! planner touches the learner only through `reset`, `predict` and `update`.

use alloc::vec::Vec;
use rand::{Rng, RngCore};

use crate::dimensions::{AppleNode, AppleTreeWitness, DimensionCache, UNBOUNDED};
use crate::learners::Learner;
use crate::protocol::{run_game, FeedbackMode, Game, MonteCarlo};
use crate::rngs::{derive, seeded};
use crate::{Error, HypothesisClass, Instance, Label, LabeledStream, Result};

pub const DEFAULT_NUM_SIMS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdversaryPlan {
    pub tree: AppleTreeWitness,
    pub block_size: usize,
    /// Labels along the chosen root-to-leaf path.
    pub path: Vec<Label>,
    /// Instance at each node of the path.
    pub instances: Vec<Instance>,
    /// Estimated probability of a 1-prediction within each block.
    pub estimates: Vec<f64>,
    pub num_sims: usize,
    pub seed: u64,
}

impl AdversaryPlan {
    pub fn ones(&self) -> usize {
        self.path.iter().filter(|y| y.is_one()).count()
    }

    /// Length of the block part of the realized stream.
    pub fn block_rounds(&self) -> usize {
        self.path.len() * self.block_size
    }
}

fn block_event(
    learner: &mut dyn Learner,
    blocks: &[(Instance, Label)],
    block_size: usize,
    x: Instance,
    seed: u64,
) -> Result<bool> {
    learner.reset();
    let mut rng = seeded(seed);
    for &(bx, by) in blocks {
        for _ in 0..block_size {
            let yhat = learner.predict(bx, &mut rng)?;
            learner.update(bx, yhat, yhat.is_one().then_some(by))?;
        }
    }
    for _ in 0..block_size {
        let yhat = learner.predict(x, &mut rng)?;
        if yhat.is_one() {
            return Ok(true);
        }
        learner.update(x, yhat, None)?;
    }
    Ok(false)
}

/// Chooses a path through `tree` against `learner`.
///
/// Replay `s` of step `j` uses a generator seeded from `(seed, j, s)`, so the
/// plan is a pure function of its inputs.
pub fn plan_adversary(
    class: &HypothesisClass,
    tree: &AppleTreeWitness,
    learner: &mut dyn Learner,
    num_sims: usize,
    seed: u64,
) -> Result<AdversaryPlan> {
    if num_sims == 0 {
        return Err(Error::InvalidParameter(
            "num_sims must be at least 1".into(),
        ));
    }
    let (w, d) = (tree.width, tree.depth);
    if w == 0 || w == UNBOUNDED || d < w {
        return Err(Error::InvalidParameter(alloc::format!(
            "block construction needs 1 <= w <= d, got w = {w}, d = {d}"
        )));
    }
    if !crate::dimensions::verify_shattered(class, tree, &class.full_space()) {
        return Err(Error::InvalidParameter(
            "tree is not shattered by the class".into(),
        ));
    }
    let block_size = (d / w) as usize;
    let mut node = &tree.root;
    let mut path = Vec::new();
    let mut instances = Vec::new();
    let mut estimates = Vec::new();
    let mut blocks: Vec<(Instance, Label)> = Vec::new();
    while let AppleNode::Internal {
        instance,
        zero,
        one,
    } = node
    {
        let j = path.len() as u64;
        let mut hits = 0usize;
        for s in 0..num_sims {
            if block_event(
                learner,
                &blocks,
                block_size,
                *instance,
                derive(seed, j, s as u64),
            )? {
                hits += 1;
            }
        }
        let estimate = hits as f64 / num_sims as f64;
        let label = if estimate >= 0.5 {
            Label::Zero
        } else {
            Label::One
        };
        estimates.push(estimate);
        path.push(label);
        instances.push(*instance);
        blocks.push((*instance, label));
        node = if label.is_one() { one } else { zero };
    }
    learner.reset();
    Ok(AdversaryPlan {
        tree: tree.clone(),
        block_size,
        path,
        instances,
        estimates,
        num_sims,
        seed,
    })
}

/// Blocks of `block_size` copies of each labeled path node, padded to length
/// `horizon` with the last labeled node.
pub fn realize_stream(plan: &AdversaryPlan, horizon: usize) -> Result<LabeledStream> {
    let needed = plan.block_rounds();
    if plan.path.is_empty() {
        return Err(Error::InvalidParameter("plan has an empty path".into()));
    }
    if horizon < needed {
        return Err(Error::InvalidParameter(alloc::format!(
            "horizon {horizon} shorter than the {needed} block rounds"
        )));
    }
    let mut rounds = Vec::with_capacity(horizon);
    for (&x, &y) in plan.instances.iter().zip(&plan.path) {
        rounds.extend(core::iter::repeat_n((x, y), plan.block_size));
    }
    let last = (*plan.instances.last().unwrap(), *plan.path.last().unwrap());
    rounds.resize(horizon, last);
    Ok(LabeledStream::new(rounds))
}

/// Depth `⌊√(w·min(T, aldim(H, w)))⌋` of the lower-bound tree, after
/// checking `1 <= w <= min(ldim(H), T)`.
pub fn lower_bound_depth(
    class: &HypothesisClass,
    cache: &mut DimensionCache,
    width: u32,
    horizon: usize,
) -> Result<u32> {
    let full = class.full_space();
    let l = cache.ldim(class, &full)?;
    if width == 0 || width > l || width as usize > horizon {
        return Err(Error::InvalidParameter(alloc::format!(
            "lower bound needs 1 <= w <= min(ldim, T) = {}, got w = {width}",
            (l as usize).min(horizon)
        )));
    }
    let a = cache.aldim(class, &full, width)? as u64;
    let product = width as u64 * a.min(horizon as u64);
    let mut d = libm::sqrt(product as f64) as u64;
    while d * d > product {
        d -= 1;
    }
    while (d + 1) * (d + 1) <= product {
        d += 1;
    }
    Ok(d as u32)
}

/// The lowest-index shattered tree of the lower-bound depth.
pub fn lower_bound_tree(
    class: &HypothesisClass,
    width: u32,
    horizon: usize,
) -> Result<AppleTreeWitness> {
    let mut cache = DimensionCache::new();
    let d = lower_bound_depth(class, &mut cache, width, horizon)?;
    cache
        .witness_tree(class, &class.full_space(), width, d)
        .ok_or_else(|| {
            Error::Invariant(alloc::format!(
                "no shattered ({width}, {d}) tree despite aldim >= {d}"
            ))
        })
}

/// Allowance for Monte Carlo error in the thresholded estimates:
/// `d·exp(−2·num_sims·δ²)`.
pub fn estimation_slack(depth: u32, num_sims: usize, delta: f64) -> f64 {
    depth as f64 * libm::exp(-2.0 * num_sims as f64 * delta * delta)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LowerBoundReport {
    pub depth: u32,
    pub plan: AdversaryPlan,
    pub stream: LabeledStream,
    pub evaluation: MonteCarlo,
    /// `d/4`, the expected-mistake floor of the construction.
    pub floor: f64,
}

/// Builds the tree, plans against `learner`, realizes a length-`horizon`
/// stream and replays it under apple tasting once per evaluation seed.
pub fn lower_bound_experiment(
    class: &HypothesisClass,
    width: u32,
    learner: &mut dyn Learner,
    horizon: usize,
    num_sims: usize,
    eval_seeds: &[u64],
    seed: u64,
) -> Result<LowerBoundReport> {
    let tree = lower_bound_tree(class, width, horizon)?;
    let plan = plan_adversary(class, &tree, learner, num_sims, seed)?;
    let stream = realize_stream(&plan, horizon)?;
    let evaluation =
        crate::protocol::monte_carlo(learner, &stream, FeedbackMode::AppleTasting, eval_seeds)?;
    Ok(LowerBoundReport {
        depth: tree.depth,
        floor: tree.depth as f64 / 4.0,
        plan,
        stream,
        evaluation,
    })
}

/// A uniformly chosen hypothesis labels uniformly chosen instances; each label
/// is flipped independently with probability `noise_rate`. Returns the
/// hypothesis with the stream.
pub fn stochastic_agnostic_stream(
    class: &HypothesisClass,
    noise_rate: f64,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<(usize, LabeledStream)> {
    if !(0.0..=0.5).contains(&noise_rate) {
        return Err(Error::InvalidParameter(alloc::format!(
            "noise rate {noise_rate} outside [0, 1/2]"
        )));
    }
    let h = rng.gen_range(0..class.len());
    let rounds = (0..horizon)
        .map(|_| {
            let x = rng.gen_range(0..class.instance_count());
            let flip = rng.gen_bool(noise_rate);
            let y = class.label(h, x);
            (x, if flip { y.flip() } else { y })
        })
        .collect();
    Ok((h, LabeledStream::new(rounds)))
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorstStream {
    pub stream: LabeledStream,
    pub mistakes: usize,
    pub switch_round: usize,
    pub patience: usize,
}

/// Adaptive run that picks each label after seeing the prediction, keeping
/// the stream realizable. Before `switch_round` it labels 0 whenever it can,
/// collecting false positives; from then on it answers every 0-prediction
/// with a 1 when that stays consistent. It stays on one instance while that
/// instance keeps producing false negatives or until `patience` quiet
/// 0-predictions pass, and moves on after every 1-prediction.
fn adaptive_run(
    class: &HypothesisClass,
    learner: &mut dyn Learner,
    horizon: usize,
    mode: FeedbackMode,
    seed: u64,
    switch_round: usize,
    patience: usize,
) -> Result<LabeledStream> {
    let mut game = Game::new(learner, mode, seed);
    let mut consistent = class.full_space();
    let mut focus = 0;
    let mut idle = 0;
    for t in 0..horizon {
        let x = focus;
        let yhat = game.predict(x)?;
        let (zero_ok, one_ok) = class.projection_labels(&consistent, x);
        let y = if yhat.is_one() {
            if zero_ok {
                Label::Zero
            } else {
                Label::One
            }
        } else if t >= switch_round && one_ok {
            Label::One
        } else if zero_ok {
            Label::Zero
        } else {
            Label::One
        };
        game.reveal(y)?;
        consistent = class.project(&consistent, x, y);
        if yhat.is_one() {
            focus = (focus + 1) % class.instance_count();
            idle = 0;
        } else if y.is_one() {
            idle = 0;
        } else {
            idle += 1;
            if idle >= patience {
                focus = (focus + 1) % class.instance_count();
                idle = 0;
            }
        }
    }
    Ok(game.finish().stream())
}

/// Searches the adaptive strategy family over every switch round in `0..=T`
/// and patience in `1..=T`, and returns the realizable stream with
/// the most mistakes on a replay with `seed`.
pub fn greedy_worst_stream(
    class: &HypothesisClass,
    learner: &mut dyn Learner,
    horizon: usize,
    mode: FeedbackMode,
    seed: u64,
) -> Result<WorstStream> {
    let mut best: Option<WorstStream> = None;
    for switch_round in 0..=horizon {
        for patience in 1..=horizon.max(1) {
            let stream = adaptive_run(class, learner, horizon, mode, seed, switch_round, patience)?;
            let t = run_game(learner, &stream, mode, seed);
            if let Some(e) = t.error {
                return Err(Error::Invariant(e));
            }
            if best.as_ref().is_none_or(|b| t.mistakes > b.mistakes) {
                best = Some(WorstStream {
                    stream,
                    mistakes: t.mistakes,
                    switch_round,
                    patience,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty search".into()))
}
