use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

use super::{require_feedback, Learner};
use crate::dimensions::DimensionCache;
use crate::{Error, HypothesisClass, Instance, Label, Result, VersionSpace};

/// Predicts 1 whenever some member of the version space does. Makes at most
/// `aldim(H, 1)` mistakes on realizable streams.
#[derive(Clone, Debug)]
pub struct DetW1 {
    class: Arc<HypothesisClass>,
    space: VersionSpace,
}

impl DetW1 {
    pub fn new(class: Arc<HypothesisClass>) -> Self {
        let space = class.full_space();
        DetW1 { class, space }
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.space
    }
}

impl Learner for DetW1 {
    fn name(&self) -> &'static str {
        "det_w1"
    }

    fn predict(&mut self, x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        if self.space.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        self.class.check_instance(x)?;
        Ok(Label::from_bool(
            self.class.projection_labels(&self.space, x).1,
        ))
    }

    fn update(&mut self, x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()> {
        if predicted.is_one() {
            let y = require_feedback(feedback, "det_w1")?;
            self.space = self.class.project(&self.space, x, y);
            if self.space.is_empty() {
                return Err(Error::NonRealizable);
            }
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.space = self.class.full_space();
    }

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}

/// Deterministic apple-tasting learner for classes of Littlestone dimension 1.
///
/// On a contested instance it predicts 1 if the 0-restriction has dimension
/// 0, or if some member of the 1-restriction has already been passed over
/// `threshold` times; otherwise it predicts 0 and charges every member of
/// the 1-restriction. With threshold `⌈√T⌉` it makes at most `1 + 2√T`
/// mistakes on realizable streams.
#[derive(Clone, Debug)]
pub struct DetLdim1 {
    class: Arc<HypothesisClass>,
    space: VersionSpace,
    counters: Vec<u32>,
    threshold: u32,
    cache: DimensionCache,
}

impl DetLdim1 {
    pub fn new(class: Arc<HypothesisClass>, threshold: u32) -> Result<Self> {
        let mut cache = DimensionCache::new();
        let l = cache.ldim(&class, &class.full_space())?;
        if l != 1 {
            return Err(Error::InvalidParameter(format!(
                "det_ldim1 needs a class of Littlestone dimension 1, got {l}"
            )));
        }
        if threshold == 0 {
            return Err(Error::InvalidParameter(
                "det_ldim1 threshold must be at least 1".into(),
            ));
        }
        let space = class.full_space();
        let counters = vec![0; class.len()];
        Ok(DetLdim1 {
            class,
            space,
            counters,
            threshold,
            cache,
        })
    }

    /// The threshold `⌈√T⌉`.
    pub fn threshold_for(horizon: usize) -> u32 {
        let mut r = libm::sqrt(horizon as f64) as u32;
        while (r as u64) * (r as u64) < horizon as u64 {
            r += 1;
        }
        while r > 0 && ((r - 1) as u64) * ((r - 1) as u64) >= horizon as u64 {
            r -= 1;
        }
        r.max(1)
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn counter(&self, h: usize) -> u32 {
        self.counters[h]
    }
}

impl Learner for DetLdim1 {
    fn name(&self) -> &'static str {
        "det_ldim1"
    }

    fn predict(&mut self, x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        if self.space.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        self.class.check_instance(x)?;
        match self.class.projection_labels(&self.space, x) {
            (true, false) => return Ok(Label::Zero),
            (false, true) => return Ok(Label::One),
            _ => {}
        }
        let zero = self.class.project(&self.space, x, Label::Zero);
        if self.cache.ldim(&self.class, &zero)? == 0 {
            return Ok(Label::One);
        }
        let one = self.class.project(&self.space, x, Label::One);
        let triggered = one
            .members()
            .iter()
            .any(|h| self.counters[h] >= self.threshold);
        Ok(Label::from_bool(triggered))
    }

    fn update(&mut self, x: Instance, predicted: Label, feedback: Option<Label>) -> Result<()> {
        if predicted.is_one() {
            let y = require_feedback(feedback, "det_ldim1")?;
            self.space = self.class.project(&self.space, x, y);
            if self.space.is_empty() {
                return Err(Error::NonRealizable);
            }
        } else {
            for h in self
                .class
                .project(&self.space, x, Label::One)
                .members()
                .iter()
            {
                self.counters[h] += 1;
            }
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.space = self.class.full_space();
        self.counters.iter_mut().for_each(|c| *c = 0);
    }

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(self.clone())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysZero;

#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysOne;

impl Learner for AlwaysZero {
    fn name(&self) -> &'static str {
        "always0"
    }

    fn predict(&mut self, _x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        Ok(Label::Zero)
    }

    fn update(&mut self, _x: Instance, _predicted: Label, _feedback: Option<Label>) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self) {}

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(*self)
    }
}

impl Learner for AlwaysOne {
    fn name(&self) -> &'static str {
        "always1"
    }

    fn predict(&mut self, _x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        Ok(Label::One)
    }

    fn update(&mut self, _x: Instance, _predicted: Label, _feedback: Option<Label>) -> Result<()> {
        Ok(())
    }

    fn reset(&mut self) {}

    fn boxed_clone(&self) -> Box<dyn Learner> {
        Box::new(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::seeded;

    #[test]
    fn det_w1_rules() {
        let c = Arc::new(HypothesisClass::from_rows(&[[0u8, 1], [0, 0]]).unwrap());
        let mut l = DetW1::new(c);
        let mut rng = seeded(0);
        assert_eq!(l.predict(0, &mut rng), Ok(Label::Zero));
        l.update(0, Label::Zero, None).unwrap();
        assert_eq!(l.version_space().len(), 2);
        assert_eq!(l.predict(1, &mut rng), Ok(Label::One));
        l.update(1, Label::One, Some(Label::Zero)).unwrap();
        assert_eq!(l.version_space().len(), 1);
    }

    #[test]
    fn thresholds() {
        assert_eq!(DetLdim1::threshold_for(16), 4);
        assert_eq!(DetLdim1::threshold_for(17), 5);
        assert_eq!(DetLdim1::threshold_for(25), 5);
        assert_eq!(DetLdim1::threshold_for(1), 1);
        assert_eq!(DetLdim1::threshold_for(0), 1);
    }

    #[test]
    fn det_ldim1_rejects_other_classes() {
        let p = Arc::new(HypothesisClass::powerset(2, 16).unwrap());
        assert!(DetLdim1::new(p, 2).is_err());
        let one = Arc::new(HypothesisClass::from_rows(&[[1u8]]).unwrap());
        assert!(DetLdim1::new(one, 2).is_err());
    }

    #[test]
    fn det_ldim1_counter_triggers_prediction() {
        let c = Arc::new(HypothesisClass::singletons(5).unwrap());
        let mut l = DetLdim1::new(c, 2).unwrap();
        let mut rng = seeded(0);
        for _ in 0..2 {
            assert_eq!(l.predict(3, &mut rng), Ok(Label::Zero));
            l.update(3, Label::Zero, None).unwrap();
        }
        assert_eq!(l.counter(3), 2);
        assert_eq!(l.counter(2), 0);
        assert_eq!(l.predict(3, &mut rng), Ok(Label::One));
    }

    #[test]
    fn det_ldim1_two_members_left() {
        let c = Arc::new(HypothesisClass::singletons(3).unwrap());
        let mut l = DetLdim1::new(c, 9).unwrap();
        let mut rng = seeded(0);
        assert_eq!(l.predict(0, &mut rng), Ok(Label::Zero));
        l.update(0, Label::Zero, None).unwrap();
        assert_eq!(l.predict(1, &mut rng), Ok(Label::Zero));
        l.update(1, Label::Zero, None).unwrap();
        // the space never shrinks on 0 predictions, so force it with a 1
        l.space = l.class.project(&l.space, 2, Label::Zero);
        assert_eq!(l.predict(0, &mut rng), Ok(Label::One));
    }
}
