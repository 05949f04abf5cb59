use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::sync::Arc;
use rand::RngCore;

use super::{require_feedback, Learner};
use crate::dimensions::DimensionCache;
use crate::{Error, HypothesisClass, Instance, Label, Result, VersionSpace};

/// Full-information learner with a width budget.
///
/// Predicts 1 on a contested instance only when the 0-restriction has a
/// strictly smaller apple dimension at the current width. Each false negative
/// spends one unit of width. Started at width `w`, it makes at most `w − 1`
/// false negatives and at most `aldim(H, w)` false positives on realizable
/// streams.
#[derive(Clone, Debug)]
pub struct ConstrainedSoa {
    class: Arc<HypothesisClass>,
    initial_width: u32,
    width: u32,
    space: VersionSpace,
    cache: DimensionCache,
}

impl ConstrainedSoa {
    pub fn new(class: Arc<HypothesisClass>, width: u32) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter(
                "constrained SOA needs width >= 1".into(),
            ));
        }
        let space = class.full_space();
        Ok(ConstrainedSoa {
            class,
            initial_width: width,
            width,
            space,
            cache: DimensionCache::new(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn initial_width(&self) -> u32 {
        self.initial_width
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.space
    }

    /// `aldim` of the current version space at the current width.
    pub fn potential(&mut self) -> Result<u32> {
        self.cache.aldim(&self.class, &self.space, self.width)
    }

    /// `(false-positive budget, false-negative budget)` from the initial state.
    pub fn mistake_budgets(&mut self) -> Result<(u32, u32)> {
        let full = self.class.full_space();
        Ok((
            self.cache.aldim(&self.class, &full, self.initial_width)?,
            self.initial_width - 1,
        ))
    }
}

impl Learner for ConstrainedSoa {
    fn name(&self) -> &'static str {
        "constrained_soa"
    }

    fn predict(&mut self, x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        if self.space.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        self.class.check_instance(x)?;
        match self.class.projection_labels(&self.space, x) {
            (true, false) => Ok(Label::Zero),
            (false, true) => Ok(Label::One),
            _ => {
                let zero = self.class.project(&self.space, x, Label::Zero);
                let below = self.cache.aldim(&self.class, &zero, self.width)?;
                let here = self.cache.aldim(&self.class, &self.space, self.width)?;
                Ok(Label::from_bool(below < here))
            }
        }
    }

    fn update(&mut self, x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()> {
        let y = require_feedback(feedback, "constrained_soa")?;
        self.space = self.class.project(&self.space, x, y);
        if self.space.is_empty() {
            return Err(Error::NonRealizable);
        }
        if predicted == Label::Zero && y == Label::One {
            if self.width == 1 {
                return Err(Error::Invariant(
                    "width budget exhausted by a false negative".to_string(),
                ));
            }
            self.width -= 1;
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.width = self.initial_width;
        self.space = self.class.full_space();
    }

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}
