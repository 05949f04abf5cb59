use alloc::boxed::Box;
use alloc::sync::Arc;
use rand::RngCore;

use super::Learner;
use crate::dimensions::DimensionCache;
use crate::{Error, HypothesisClass, Instance, Label, Result, VersionSpace};

/// Standard Optimal Algorithm prediction: the forced label when `V(x)` is a
/// single value, otherwise the label whose restriction has the larger
/// Littlestone dimension, ties going to 1.
pub fn soa_predict(
    class: &HypothesisClass,
    cache: &mut DimensionCache,
    v: &VersionSpace,
    x: Instance,
) -> Result<Label> {
    if v.is_empty() {
        return Err(Error::EmptyVersionSpace);
    }
    class.check_instance(x)?;
    match class.projection_labels(v, x) {
        (true, false) => Ok(Label::Zero),
        (false, true) => Ok(Label::One),
        _ => {
            let zero = cache.ldim(class, &class.project(v, x, Label::Zero))?;
            let one = cache.ldim(class, &class.project(v, x, Label::One))?;
            Ok(Label::from_bool(one >= zero))
        }
    }
}

/// SOA as a learner. It shrinks its version space whenever a label is
/// revealed and keeps it otherwise.
#[derive(Clone, Debug)]
pub struct Soa {
    class: Arc<HypothesisClass>,
    space: VersionSpace,
    cache: DimensionCache,
}

impl Soa {
    pub fn new(class: Arc<HypothesisClass>) -> Self {
        let space = class.full_space();
        Soa {
            class,
            space,
            cache: DimensionCache::new(),
        }
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.space
    }
}

impl Learner for Soa {
    fn name(&self) -> &'static str {
        "soa"
    }

    fn predict(&mut self, x: Instance, _rng: &mut dyn RngCore) -> Result<Label> {
        soa_predict(&self.class, &mut self.cache, &self.space, x)
    }

    fn update(&mut self, x: Instance, _predicted: Label, feedback: Option<Label>) -> Result<()> {
        if let Some(y) = feedback {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::seeded;

    #[test]
    fn forced_and_tie_predictions() {
        let c = Arc::new(HypothesisClass::from_rows(&[[1u8, 0], [1, 1]]).unwrap());
        let mut s = Soa::new(c);
        let mut rng = seeded(0);
        assert_eq!(s.predict(0, &mut rng), Ok(Label::One));

        let p = Arc::new(HypothesisClass::powerset(2, 16).unwrap());
        let mut s = Soa::new(p);
        for x in 0..2 {
            assert_eq!(s.predict(x, &mut rng), Ok(Label::One));
        }
    }

    #[test]
    fn mistakes_within_ldim_on_realizable_streams() {
        let p = Arc::new(HypothesisClass::powerset(3, 16).unwrap());
        let mut s = Soa::new(p.clone());
        let mut rng = seeded(1);
        for h in 0..p.len() {
            s.reset();
            let stream = p.label_stream(h, &[0, 1, 2, 0, 1, 2]);
            let mut mistakes = 0;
            for &(x, y) in &stream.rounds {
                let yhat = s.predict(x, &mut rng).unwrap();
                mistakes += (yhat != y) as usize;
                s.update(x, yhat, Some(y)).unwrap();
            }
            assert!(mistakes <= 3);
        }
    }

    #[test]
    fn contradiction_is_reported() {
        let c = Arc::new(HypothesisClass::singletons(2).unwrap());
        let mut s = Soa::new(c);
        s.update(0, Label::One, Some(Label::One)).unwrap();
        assert_eq!(
            s.update(1, Label::Zero, Some(Label::One)),
            Err(Error::NonRealizable)
        );
    }
}
