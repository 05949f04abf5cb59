use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{
    agnostic_learner, AlwaysOne, AlwaysZero, ConstrainedSoa, Conversion, DetLdim1, DetW1, Exp4At,
    FixedAdvice, HypothesisAdvice, Learner, Soa, DEFAULT_EXPERT_CAP,
};
use crate::{Error, HypothesisClass, Label, Result};

/// Every learner kind the factory knows, by name.
pub const LEARNER_KINDS: &[&str] = &[
    "exp4at",
    "conversion",
    "constrained_soa",
    "soa",
    "det_w1",
    "det_ldim1",
    "agnostic_experts",
    "always0",
    "always1",
];

/// Serializable description of a learner; [`LearnerSpec::build`] turns it
/// into a fresh instance bound to a class and horizon.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum LearnerSpec {
    /// Exponential weights over fixed advice, or over the class's own
    /// hypotheses when `advice` is absent. `eta` defaults to `√(ln N / 2T)`.
    Exp4at {
        #[cfg_attr(feature = "serde", serde(default))]
        eta: Option<f64>,
        #[cfg_attr(feature = "serde", serde(default))]
        advice: Option<Vec<Vec<Label>>>,
    },
    /// Apple-tasting wrapper around the width-constrained learner. The
    /// false-negative budget defaults to `width − 1`.
    Conversion {
        width: u32,
        #[cfg_attr(feature = "serde", serde(default))]
        false_negative_budget: Option<u32>,
    },
    ConstrainedSoa {
        width: u32,
    },
    Soa {},
    DetW1 {},
    /// `threshold` defaults to `⌈√T⌉`.
    DetLdim1 {
        #[cfg_attr(feature = "serde", serde(default))]
        threshold: Option<u32>,
    },
    AgnosticExperts {
        #[cfg_attr(feature = "serde", serde(default))]
        max_experts: Option<usize>,
    },
    #[cfg_attr(feature = "serde", serde(rename = "always0"))]
    Always0 {},
    #[cfg_attr(feature = "serde", serde(rename = "always1"))]
    Always1 {},
}

impl LearnerSpec {
    /// Spec for a kind name with default parameters. `width` is used by the
    /// kinds that take one and defaults to 1.
    pub fn named(kind: &str, width: Option<u32>) -> Result<Self> {
        let width = width.unwrap_or(1);
        Ok(match kind {
            "exp4at" => LearnerSpec::Exp4at {
                eta: None,
                advice: None,
            },
            "conversion" => LearnerSpec::Conversion {
                width,
                false_negative_budget: None,
            },
            "constrained_soa" => LearnerSpec::ConstrainedSoa { width },
            "soa" => LearnerSpec::Soa {},
            "det_w1" => LearnerSpec::DetW1 {},
            "det_ldim1" => LearnerSpec::DetLdim1 { threshold: None },
            "agnostic_experts" => LearnerSpec::AgnosticExperts { max_experts: None },
            "always0" => LearnerSpec::Always0 {},
            "always1" => LearnerSpec::Always1 {},
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown learner kind {other:?}; expected one of {}",
                    LEARNER_KINDS.join(", ")
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LearnerSpec::Exp4at { .. } => "exp4at",
            LearnerSpec::Conversion { .. } => "conversion",
            LearnerSpec::ConstrainedSoa { .. } => "constrained_soa",
            LearnerSpec::Soa {} => "soa",
            LearnerSpec::DetW1 {} => "det_w1",
            LearnerSpec::DetLdim1 { .. } => "det_ldim1",
            LearnerSpec::AgnosticExperts { .. } => "agnostic_experts",
            LearnerSpec::Always0 {} => "always0",
            LearnerSpec::Always1 {} => "always1",
        }
    }

    /// Whether the learner needs every label (full-information only).
    pub fn needs_full_information(&self) -> bool {
        matches!(self, LearnerSpec::ConstrainedSoa { .. })
    }

    pub fn build(&self, class: Arc<HypothesisClass>, horizon: usize) -> Result<Box<dyn Learner>> {
        Ok(match self {
            LearnerSpec::Exp4at { eta, advice } => {
                let source: Box<dyn super::Advice> = match advice {
                    Some(table) => {
                        let fixed = FixedAdvice::new(table.clone())?;
                        if fixed.horizon() < horizon {
                            return Err(Error::InvalidParameter(format!(
                                "advice covers {} rounds, horizon is {horizon}",
                                fixed.horizon()
                            )));
                        }
                        Box::new(fixed)
                    }
                    None => Box::new(HypothesisAdvice::new(class)),
                };
                Box::new(match eta {
                    Some(eta) => Exp4At::new(source, *eta)?,
                    None => Exp4At::with_horizon(source, horizon)?,
                })
            }
            LearnerSpec::Conversion {
                width,
                false_negative_budget,
            } => {
                let inner = ConstrainedSoa::new(class, *width)?;
                let budget = false_negative_budget.unwrap_or(width - 1);
                Box::new(Conversion::new(Box::new(inner), budget, horizon)?)
            }
            LearnerSpec::ConstrainedSoa { width } => Box::new(ConstrainedSoa::new(class, *width)?),
            LearnerSpec::Soa {} => Box::new(Soa::new(class)),
            LearnerSpec::DetW1 {} => Box::new(DetW1::new(class)),
            LearnerSpec::DetLdim1 { threshold } => Box::new(DetLdim1::new(
                class,
                threshold.unwrap_or_else(|| DetLdim1::threshold_for(horizon)),
            )?),
            LearnerSpec::AgnosticExperts { max_experts } => Box::new(agnostic_learner(
                class,
                horizon,
                max_experts.unwrap_or(DEFAULT_EXPERT_CAP),
            )?),
            LearnerSpec::Always0 {} => Box::new(AlwaysZero),
            LearnerSpec::Always1 {} => Box::new(AlwaysOne),
        })
    }
}
