//! Online learners behind a single predict/update interface.
//!
//! A round is `predict(x)` followed by `update(x, ŷ, feedback)`. Under apple
//! tasting the runner passes `feedback = Some(y)` only when `ŷ = 1`; under
//! full information it always does. Learners never see labels any other way.

use alloc::boxed::Box;
use rand::RngCore;

use crate::{Instance, Label, Result};

mod constrained;
mod conversion;
mod deterministic;
mod exp4at;
mod experts;
mod soa;
mod spec;

pub use constrained::ConstrainedSoa;
pub use conversion::Conversion;
pub use deterministic::{AlwaysOne, AlwaysZero, DetLdim1, DetW1};
pub use exp4at::{loss_estimate, Exp4At, FixedAdvice, HypothesisAdvice};
pub use experts::{agnostic_learner, expert_count, ExpertSet, DEFAULT_EXPERT_CAP};
pub use soa::{soa_predict, Soa};
pub use spec::{LearnerSpec, LEARNER_KINDS};

pub trait Learner: Send {
    fn name(&self) -> &'static str;

    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label>;

    /// Called once per round after `predict`, with the label only when the
    /// feedback mode reveals it.
    fn update(&mut self, x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()>;

    /// Back to the state before the first round.
    fn reset(&mut self);

    /// Probability of predicting 1 in the last `predict` call, for learners
    /// that randomize.
    fn last_p1(&self) -> Option<f64> {
        None
    }

    /// Whether an inner learner has exceeded its declared mistake budget.
    fn budget_overrun(&self) -> bool {
        false
    }

    fn boxed_clone(&self) -> Box<dyn Learner>;
}

impl Clone for Box<dyn Learner> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// A source of per-round expert advice for exponential-weights learners.
///
/// `advise` is called once per round and may advance internal state; expert
/// advice never depends on the true labels.
pub trait Advice: Send {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn advise(&mut self, x: Instance, out: &mut [Label]) -> Result<()>;

    fn reset(&mut self);

    fn boxed_clone(&self) -> Box<dyn Advice>;
}

impl Clone for Box<dyn Advice> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

pub(crate) fn require_feedback(feedback: Option<Label>, who: &'static str) -> Result<Label> {
    feedback.ok_or(crate::Error::FeedbackRequired(who))
}
