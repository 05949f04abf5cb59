use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, RngCore};

use super::{require_feedback, Advice, Learner};
use crate::{Error, HypothesisClass, Instance, Label, Result};

/// Importance-weighted loss of label `y` after a round whose prediction was
/// `predicted` with probability `p1` of predicting 1 and whose true label is
/// `truth`. Only computable from what apple tasting reveals: when
/// `predicted = 0` it is zero whatever `truth` is.
pub fn loss_estimate(y: Label, truth: Label, predicted: Label, p1: f64) -> f64 {
    if predicted.is_one() && y != truth {
        1.0 / p1
    } else {
        0.0
    }
}

/// Exponential weights over expert advice with apple-tasting feedback.
///
/// Predicts 1 with probability `(1 − η)·Σ qᵢ·Eᵢ + η`, so exploration never
/// drops below `η`. Weights move only on rounds that predicted 1, by the
/// importance-weighted loss of each expert's advice.
#[derive(Clone)]
pub struct Exp4At {
    name: &'static str,
    advice: Box<dyn Advice>,
    eta: f64,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    current: Vec<Label>,
    p1: Option<f64>,
}

impl Exp4At {
    pub fn new(advice: Box<dyn Advice>, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {eta} outside (0, 1/2)"
            )));
        }
        let n = advice.len();
        if n == 0 {
            return Err(Error::InvalidParameter("no experts".into()));
        }
        Ok(Exp4At {
            name: "exp4at",
            advice,
            eta,
            log_weights: vec![0.0; n],
            weights: vec![1.0 / n as f64; n],
            current: vec![Label::Zero; n],
            p1: None,
        })
    }

    /// Uses the rate `√(ln N / 2T)`. A single expert gives a zero rate and
    /// is rejected.
    pub fn with_horizon(advice: Box<dyn Advice>, horizon: usize) -> Result<Self> {
        let n = advice.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "exponential weights needs at least two experts; follow the single expert instead"
                    .into(),
            ));
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let eta = libm::sqrt(libm::log(n as f64) / (2.0 * horizon as f64));
        Self::new(advice, eta)
    }

    pub(crate) fn renamed(mut self, name: &'static str) -> Self {
        self.name = name;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn expert_count(&self) -> usize {
        self.weights.len()
    }

    /// Current probability vector over experts.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Advice of every expert in the current round.
    pub fn current_advice(&self) -> &[Label] {
        &self.current
    }

    fn normalize(&mut self) {
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (lw, q) in self.log_weights.iter_mut().zip(self.weights.iter_mut()) {
            *lw -= max;
            *q = libm::exp(*lw);
            total += *q;
        }
        for q in &mut self.weights {
            *q /= total;
        }
    }
}

impl Learner for Exp4At {
    fn name(&self) -> &'static str {
        self.name
    }

    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        self.advice.advise(x, &mut self.current)?;
        let vote: f64 = self
            .weights
            .iter()
            .zip(&self.current)
            .filter(|(_, e)| e.is_one())
            .map(|(q, _)| q)
            .sum();
        let p1 = ((1.0 - self.eta) * vote + self.eta).min(1.0);
        self.p1 = Some(p1);
        let u: f64 = rng.gen();
        Ok(Label::from_bool(u < p1))
    }

    fn update(&mut self, _x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()> {
        if !predicted.is_one() {
            return Ok(());
        }
        let y = require_feedback(feedback, "exp4at")?;
        let p1 = self
            .p1
            .ok_or_else(|| Error::Invariant("update without a preceding predict".into()))?;
        for (lw, &e) in self.log_weights.iter_mut().zip(&self.current) {
            *lw -= self.eta * loss_estimate(e, y, predicted, p1);
        }
        self.normalize();
        Ok(())
    }

    fn reset(&mut self) {
        let n = self.weights.len();
        self.advice.reset();
        self.log_weights.iter_mut().for_each(|w| *w = 0.0);
        self.weights.iter_mut().for_each(|q| *q = 1.0 / n as f64);
        self.p1 = None;
    }

    fn last_p1(&self) -> Option<f64> {
        self.p1
    }

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}

/// Experts with a fixed advice sequence: `table[i][t]` is expert `i`'s label
/// in round `t`, ignoring the instance.
#[derive(Clone, Debug)]
pub struct FixedAdvice {
    table: Vec<Vec<Label>>,
    round: usize,
}

impl FixedAdvice {
    pub fn new(table: Vec<Vec<Label>>) -> Result<Self> {
        let len = table.first().map(|r| r.len()).unwrap_or(0);
        if let Some((i, r)) = table.iter().enumerate().find(|(_, r)| r.len() != len) {
            return Err(Error::InvalidParameter(format!(
                "expert {i} advises {} rounds, expected {len}",
                r.len()
            )));
        }
        Ok(FixedAdvice { table, round: 0 })
    }

    pub fn horizon(&self) -> usize {
        self.table.first().map(|r| r.len()).unwrap_or(0)
    }
}

impl Advice for FixedAdvice {
    fn len(&self) -> usize {
        self.table.len()
    }

    fn advise(&mut self, _x: Instance, out: &mut [Label]) -> Result<()> {
        if out.len() != self.table.len() {
            return Err(Error::AdviceLength {
                expected: self.table.len(),
                found: out.len(),
            });
        }
        if self.round >= self.horizon() {
            return Err(Error::InvalidParameter(format!(
                "fixed advice covers {} rounds only",
                self.horizon()
            )));
        }
        for (o, row) in out.iter_mut().zip(&self.table) {
            *o = row[self.round];
        }
        self.round += 1;
        Ok(())
    }

    fn reset(&mut self) {
        self.round = 0;
    }

    fn boxed_clone(&self) -> Box<dyn Advice> {
        Box::new(self.clone())
    }
}

/// Every hypothesis of a class as an expert.
#[derive(Clone, Debug)]
pub struct HypothesisAdvice {
    class: Arc<HypothesisClass>,
}

impl HypothesisAdvice {
    pub fn new(class: Arc<HypothesisClass>) -> Self {
        HypothesisAdvice { class }
    }
}

impl Advice for HypothesisAdvice {
    fn len(&self) -> usize {
        self.class.len()
    }

    fn advise(&mut self, x: Instance, out: &mut [Label]) -> Result<()> {
        self.class.check_instance(x)?;
        if out.len() != self.class.len() {
            return Err(Error::AdviceLength {
                expected: self.class.len(),
                found: out.len(),
            });
        }
        for (h, o) in out.iter_mut().enumerate() {
            *o = self.class.label(h, x);
        }
        Ok(())
    }

    fn reset(&mut self) {}

    fn boxed_clone(&self) -> Box<dyn Advice> {
        Box::new(self.clone())
    }
}
