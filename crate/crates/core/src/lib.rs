//! Bias metrics for continuous (regression) scores produced by automated
//! employment decision tools.
//!
//! The crate covers the two ratio metrics used in NYC Local Law 144 audits
//! (`MeanDI`, `MedDI`), the fixed-threshold ratio `ThreshDI`, and the
//! whole-distribution metrics built on binary disparate impact curves
//! (`AucDI`, `PfDI`). Synthetic Gaussian-mixture families can be evaluated
//! either exactly, through their CDFs, or by Monte Carlo sampling.
//!
//! ```
//! use di_audit_core::{curve, metrics, GroupPartition};
//!
//! let partition = GroupPartition::from_groups(
//!     ["group"],
//!     [("a", vec![1.0, 2.0, 3.0, 10.0]), ("b", vec![4.0, 5.0, 6.0, 7.0])],
//! )
//! .unwrap();
//! let med = metrics::med_di(&partition).unwrap();
//! assert_eq!(med.value("a"), Some(0.25));
//!
//! let dc = curve::di_curve(&partition).unwrap();
//! let auc = curve::auc_di(&dc, &curve::ProportionPrior::flat()).unwrap();
//! assert!(auc.value("a").unwrap() < 0.8);
//! ```

pub mod curve;
pub mod dataset;
mod error;
pub mod exec;
pub mod ks;
pub mod metrics;
pub mod report;
pub mod synthetic;

pub use curve::{DiCurve, ProportionGrid, ProportionPrior};
pub use dataset::{GroupKey, GroupPartition, ScoreDataset, ScoreRecord};
pub use error::{AuditError, Result};
pub use exec::Execution;
pub use ks::KsResult;
pub use metrics::{GroupMetricVector, QuantileThreshold};
pub use report::AuditReport;

/// Default four-fifths fairness bound.
pub const DEFAULT_FAIRNESS_BOUND: f64 = 0.8;
