//! Semi-supervised optimal-transport domain adaptation with a self-paced
//! under-sampling ensemble, for binary classification on imbalanced tabular
//! data.
//!
//! The pipeline: [`data`] builds source / target-labeled / target-unlabeled
//! pools, [`trainer`] fits an ensemble of feature-generator + classifier
//! networks ([`nn`]) whose training objective combines a label-adaptive
//! transport alignment ([`ot`], [`losses`]) with supervised terms, and the
//! [`sampler`] rebalances the labeled pools between ensemble members.
//! [`eval`] scores methods by AUC and runs whole experiments.

// `!(x > 0.0)` rejects NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod apportion;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod nn;
pub mod ot;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
