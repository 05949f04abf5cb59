use alloc::boxed::Box;
use alloc::format;
use rand::{Rng, RngCore};

use super::{require_feedback, Learner};
use crate::{Error, Instance, Label, Result};

/// Turns a full-information learner into an apple-tasting one.
///
/// Whenever the inner learner says 0 the wrapper still predicts 1 with
/// probability `√(M₋/T)`, where `M₋` is the inner learner's false-negative
/// budget. The inner learner is updated only on rounds where the wrapper
/// predicted 1 and therefore saw the label. Expected mistakes are at most
/// `M₊ + 2√(T·M₋)` when the inner budgets hold.
#[derive(Clone)]
pub struct Conversion {
    inner: Box<dyn Learner>,
    false_negative_budget: u32,
    horizon: usize,
    explore: f64,
    inner_prediction: Option<Label>,
    inner_false_negatives: u32,
    last_p1: Option<f64>,
}

impl Conversion {
    pub fn new(
        inner: Box<dyn Learner>,
        false_negative_budget: u32,
        horizon: usize,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter(
                "conversion needs a horizon T >= 1".into(),
            ));
        }
        if false_negative_budget as usize > horizon {
            return Err(Error::InvalidParameter(format!(
                "false-negative budget {false_negative_budget} exceeds horizon {horizon}"
            )));
        }
        let explore = libm::sqrt(false_negative_budget as f64 / horizon as f64);
        Ok(Conversion {
            inner,
            false_negative_budget,
            horizon,
            explore,
            inner_prediction: None,
            inner_false_negatives: 0,
            last_p1: None,
        })
    }

    pub fn exploration_probability(&self) -> f64 {
        self.explore
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// False negatives of the inner learner observed so far (on rounds the
    /// wrapper explored).
    pub fn inner_false_negatives(&self) -> u32 {
        self.inner_false_negatives
    }
}

impl Learner for Conversion {
    fn name(&self) -> &'static str {
        "conversion"
    }

    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        let inner = self.inner.predict(x, rng)?;
        let r: f64 = rng.gen();
        self.inner_prediction = Some(inner);
        self.last_p1 = Some(if inner.is_one() { 1.0 } else { self.explore });
        Ok(Label::from_bool(inner.is_one() || r < self.explore))
    }

    fn update(&mut self, x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()> {
        let inner = self
            .inner_prediction
            .take()
            .ok_or_else(|| Error::Invariant("update without a preceding predict".into()))?;
        if predicted.is_one() {
            let y = require_feedback(feedback, "conversion")?;
            if inner == Label::Zero && y == Label::One {
                self.inner_false_negatives += 1;
            }
            self.inner.update(x, inner, Some(y))?;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.inner_prediction = None;
        self.inner_false_negatives = 0;
        self.last_p1 = None;
    }

    fn last_p1(&self) -> Option<f64> {
        self.last_p1
    }

    fn budget_overrun(&self) -> bool {
        self.inner_false_negatives > self.false_negative_budget || self.inner.budget_overrun()
    }

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}
