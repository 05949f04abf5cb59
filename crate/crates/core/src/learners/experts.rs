use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use smallvec::SmallVec;

use super::{soa_predict, Advice, Exp4At};
use crate::dimensions::DimensionCache;
use crate::{Error, HypothesisClass, Instance, Label, Members, Result};

pub const DEFAULT_EXPERT_CAP: usize = 200_000;

/// `Σ_{k ≤ depth} C(horizon, k)`, saturating.
pub fn expert_count(horizon: usize, depth: u32) -> usize {
    let mut total: usize = 0;
    let mut binom: usize = 1;
    for k in 0..=(depth as usize).min(horizon) {
        total = total.saturating_add(binom);
        binom = binom.saturating_mul(horizon - k) / (k + 1);
    }
    total
}

type FlipSet = SmallVec<[u32; 4]>;

/// Experts that run SOA on their own past predictions and negate it on a
/// fixed set of rounds.
///
/// One expert per subset of rounds `L ⊆ {0, …, T−1}` with `|L| ≤ ldim(H)`,
/// ordered lexicographically as increasing round lists. For every hypothesis
/// and every instance sequence of length `T`, some expert reproduces the
/// hypothesis's labels exactly.
#[derive(Clone, Debug)]
pub struct ExpertSet {
    class: Arc<HypothesisClass>,
    horizon: usize,
    flips: Vec<FlipSet>,
    spaces: Vec<Members>,
    round: usize,
    cache: DimensionCache,
}

impl ExpertSet {
    pub fn new(class: Arc<HypothesisClass>, horizon: usize, cap: usize) -> Result<Self> {
        let depth = DimensionCache::new().ldim(&class, &class.full_space())?;
        let count = expert_count(horizon, depth);
        if count > cap {
            return Err(Error::CapExceeded(format!(
                "{count} experts for horizon {horizon} and ldim {depth} exceed the cap of {cap}; use a smaller horizon or class"
            )));
        }
        let mut flips = Vec::with_capacity(count);
        let mut prefix = FlipSet::new();
        fn extend(
            start: u32,
            horizon: u32,
            depth: u32,
            prefix: &mut FlipSet,
            out: &mut Vec<FlipSet>,
        ) {
            out.push(prefix.clone());
            if prefix.len() as u32 == depth {
                return;
            }
            for t in start..horizon {
                prefix.push(t);
                extend(t + 1, horizon, depth, prefix, out);
                prefix.pop();
            }
        }
        extend(0, horizon as u32, depth, &mut prefix, &mut flips);
        debug_assert_eq!(flips.len(), count);
        let full = class.full_space().members().clone();
        let spaces = alloc::vec![full; flips.len()];
        Ok(ExpertSet {
            class,
            horizon,
            flips,
            spaces,
            round: 0,
            cache: DimensionCache::new(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn flip_sets(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.flips.iter().map(|f| f.as_slice())
    }

    /// Full prediction sequence of every expert on `instances`, from a fresh
    /// state.
    pub fn trajectories(&mut self, instances: &[Instance]) -> Result<Vec<Vec<Label>>> {
        self.reset();
        let mut out = alloc::vec![Vec::with_capacity(instances.len()); self.flips.len()];
        let mut advice = alloc::vec![Label::Zero; self.flips.len()];
        for &x in instances {
            self.advise(x, &mut advice)?;
            for (seq, &a) in out.iter_mut().zip(&advice) {
                seq.push(a);
            }
        }
        self.reset();
        Ok(out)
    }
}

impl Advice for ExpertSet {
    fn len(&self) -> usize {
        self.flips.len()
    }

    fn advise(&mut self, x: Instance, out: &mut [Label]) -> Result<()> {
        if out.len() != self.flips.len() {
            return Err(Error::AdviceLength {
                expected: self.flips.len(),
                found: out.len(),
            });
        }
        self.class.check_instance(x)?;
        let t = self.round as u32;
        // experts with equal histories share a version space
        let mut by_space: BTreeMap<Members, (Label, Members, Members)> = BTreeMap::new();
        for (i, m) in self.spaces.iter_mut().enumerate() {
            if !by_space.contains_key(m) {
                let v = self.class.space(m.clone());
                let soa = soa_predict(&self.class, &mut self.cache, &v, x)?;
                let zero = self.class.project(&v, x, Label::Zero).members().clone();
                let one = self.class.project(&v, x, Label::One).members().clone();
                by_space.insert(m.clone(), (soa, zero, one));
            }
            let (soa, zero, one) = &by_space[m];
            let label = if self.flips[i].contains(&t) {
                soa.flip()
            } else {
                *soa
            };
            out[i] = label;
            let next = if label.is_one() { one } else { zero };
            // a flip against a forced label has no consistent member; the
            // expert keeps its previous history
            if !next.is_empty() {
                *m = next.clone();
            }
        }
        self.round += 1;
        Ok(())
    }

    fn reset(&mut self) {
        let full = self.class.full_space().members().clone();
        self.spaces.iter_mut().for_each(|m| *m = full.clone());
        self.round = 0;
    }

    fn boxed_clone(&self) -> Box<dyn Advice> {
        Box::new(self.clone())
    }
}

/// Exponential weights with apple-tasting feedback over the flip-set experts,
/// at the rate `√(ln N / 2T)`.
pub fn agnostic_learner(class: Arc<HypothesisClass>, horizon: usize, cap: usize) -> Result<Exp4At> {
    let experts = ExpertSet::new(class, horizon, cap)?;
    Ok(Exp4At::with_horizon(Box::new(experts), horizon)?.renamed("agnostic_experts"))
}
