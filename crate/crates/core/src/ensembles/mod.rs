//! Ways of combining the ABAE model with the CAt prior.
//!
//! [`rule_ensemble`] merges the two label streams after the fact.
//! [`anchored_train`] instead pulls each sentence's reconstruction towards
//! the prior's label embedding during training.

mod anchor;
mod rule;

pub use anchor::{anchor_row, anchored_penalty, anchored_train, build_anchors, AnchorSet};
pub use rule::{
    ensemble_to_jsonl, rule_ensemble, CandidateMode, EnsemblePrediction, Fallback, Provenance, RuleConfig,
};
