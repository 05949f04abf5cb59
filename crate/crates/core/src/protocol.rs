//! Learner-versus-stream games and their accounting.
//!
//! The runner owns the feedback rule. Under apple tasting it physically
//! withholds the label from `update` on rounds predicted 0; learners cannot
//! observe it any other way.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::learners::Learner;
use crate::rngs::{seeded, SimRng};
use crate::stats::SampleSummary;
use crate::{Error, HypothesisClass, Instance, Label, LabeledStream, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeedbackMode {
    FullInformation,
    AppleTasting,
}

impl FeedbackMode {
    pub fn reveals(self, predicted: Label) -> bool {
        match self {
            FeedbackMode::FullInformation => true,
            FeedbackMode::AppleTasting => predicted.is_one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MistakeKind {
    None,
    FalsePos,
    FalseNeg,
}

impl MistakeKind {
    pub fn of(predicted: Label, truth: Label) -> Self {
        match (predicted, truth) {
            (Label::One, Label::Zero) => MistakeKind::FalsePos,
            (Label::Zero, Label::One) => MistakeKind::FalseNeg,
            _ => MistakeKind::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MistakeKind::None => "none",
            MistakeKind::FalsePos => "false_pos",
            MistakeKind::FalseNeg => "false_neg",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    pub instance: Instance,
    pub prediction: Label,
    pub feedback_visible: bool,
    pub true_label: Label,
    pub mistake_kind: MistakeKind,
    pub p1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameTranscript {
    pub learner: String,
    pub mode: FeedbackMode,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub mistakes: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    /// Set when the learner raised; `rounds` then stops before the failing
    /// round.
    pub error: Option<String>,
    pub budget_overrun: bool,
}

impl GameTranscript {
    pub fn predictions(&self) -> Vec<Label> {
        self.rounds.iter().map(|r| r.prediction).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.error.is_none()
    }

    pub fn stream(&self) -> LabeledStream {
        LabeledStream::new(
            self.rounds
                .iter()
                .map(|r| (r.instance, r.true_label))
                .collect(),
        )
    }
}

/// A game driven one round at a time: [`Game::predict`] asks the learner,
/// then [`Game::reveal`] supplies the true label. Lets an adversary choose
/// labels after seeing predictions.
pub struct Game<'a> {
    learner: &'a mut dyn Learner,
    rng: SimRng,
    transcript: GameTranscript,
    pending: Option<(Instance, Label)>,
}

impl<'a> Game<'a> {
    /// Resets the learner and seeds its randomness.
    pub fn new(learner: &'a mut dyn Learner, mode: FeedbackMode, seed: u64) -> Self {
        learner.reset();
        let transcript = GameTranscript {
            learner: learner.name().to_string(),
            mode,
            seed,
            rounds: Vec::new(),
            mistakes: 0,
            false_pos: 0,
            false_neg: 0,
            error: None,
            budget_overrun: false,
        };
        Game {
            learner,
            rng: seeded(seed),
            transcript,
            pending: None,
        }
    }

    pub fn predict(&mut self, x: Instance) -> Result<Label> {
        if self.pending.is_some() {
            return Err(Error::Invariant(
                "predict called twice without reveal".into(),
            ));
        }
        let yhat = self.learner.predict(x, &mut self.rng)?;
        self.pending = Some((x, yhat));
        Ok(yhat)
    }

    pub fn reveal(&mut self, y: Label) -> Result<&RoundRecord> {
        let (x, yhat) = self
            .pending
            .take()
            .ok_or_else(|| Error::Invariant("reveal without predict".into()))?;
        let visible = self.transcript.mode.reveals(yhat);
        let p1 = self.learner.last_p1();
        self.learner.update(x, yhat, visible.then_some(y))?;
        let kind = MistakeKind::of(yhat, y);
        let t = &mut self.transcript;
        match kind {
            MistakeKind::FalsePos => t.false_pos += 1,
            MistakeKind::FalseNeg => t.false_neg += 1,
            MistakeKind::None => {}
        }
        t.mistakes = t.false_pos + t.false_neg;
        t.budget_overrun |= self.learner.budget_overrun();
        t.rounds.push(RoundRecord {
            round: t.rounds.len(),
            instance: x,
            prediction: yhat,
            feedback_visible: visible,
            true_label: y,
            mistake_kind: kind,
            p1,
        });
        Ok(t.rounds.last().unwrap())
    }

    pub fn step(&mut self, x: Instance, y: Label) -> Result<&RoundRecord> {
        self.predict(x)?;
        self.reveal(y)
    }

    pub fn transcript(&self) -> &GameTranscript {
        &self.transcript
    }

    pub fn finish(self) -> GameTranscript {
        self.transcript
    }

    fn fail(mut self, e: Error) -> GameTranscript {
        self.transcript.error = Some(e.to_string());
        self.transcript
    }
}

/// Plays `stream` in order against a freshly reset learner.
pub fn run_game(
    learner: &mut dyn Learner,
    stream: &LabeledStream,
    mode: FeedbackMode,
    seed: u64,
) -> GameTranscript {
    let mut game = Game::new(learner, mode, seed);
    for &(x, y) in &stream.rounds {
        if let Err(e) = game.step(x, y) {
            return game.fail(e);
        }
    }
    game.finish()
}

/// Mistakes minus the loss of the best hypothesis in hindsight.
pub fn regret(transcript: &GameTranscript, class: &HypothesisClass) -> i64 {
    transcript.mistakes as i64 - class.best_loss(&transcript.stream()) as i64
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonteCarlo {
    pub summary: SampleSummary,
    pub totals: Vec<usize>,
    pub seeds: Vec<u64>,
    pub errors: usize,
    pub overruns: usize,
}

impl MonteCarlo {
    /// Aggregates per-seed transcripts, in the order given.
    pub fn from_transcripts(seeds: &[u64], transcripts: &[GameTranscript]) -> Self {
        let totals: Vec<usize> = transcripts.iter().map(|t| t.mistakes).collect();
        MonteCarlo {
            summary: SampleSummary::from_counts(totals.iter().copied()),
            totals,
            seeds: seeds.to_vec(),
            errors: transcripts.iter().filter(|t| t.error.is_some()).count(),
            overruns: transcripts.iter().filter(|t| t.budget_overrun).count(),
        }
    }
}

/// Independent replays of `stream`, one per seed, in seed order.
pub fn monte_carlo(
    learner: &mut dyn Learner,
    stream: &LabeledStream,
    mode: FeedbackMode,
    seeds: &[u64],
) -> Result<MonteCarlo> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter(
            "monte carlo needs at least two seeds".into(),
        ));
    }
    let transcripts: Vec<GameTranscript> = seeds
        .iter()
        .map(|&s| run_game(learner, stream, mode, s))
        .collect();
    Ok(MonteCarlo::from_transcripts(seeds, &transcripts))
}
