//! Confidence scoring: the three task models, k-fold orchestration and the
//! geometric-mean combination.

mod folds;
mod pipeline;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::ReviewLabel;
use crate::neuralnet::ProbabilityDistribution;
use crate::{Error, Result};

pub use folds::{make_folds, make_stratified_folds, FoldAssignment};
pub use pipeline::{
    run_pipeline, FoldReport, FoldResult, Pipeline, PipelineConfig, PipelineOutput, PreparedCorpus, PreparedReview,
    TaskFoldMetrics, TrainingAudit,
};

/// The three questions, each answered by its own model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Was it clear what to add? 2 classes.
    AddCode,
    /// Was it clear what to remove? 2 classes.
    RemoveCode,
    /// Replace 0, delete 1, insert 2.
    Operation,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::AddCode, TaskKind::RemoveCode, TaskKind::Operation];

    pub fn num_classes(self) -> usize {
        match self {
            TaskKind::AddCode | TaskKind::RemoveCode => 2,
            TaskKind::Operation => 3,
        }
    }

    /// Ground-truth class of a label for this task. `None` for reviews
    /// without enough information.
    pub fn class_of(self, label: &ReviewLabel) -> Option<usize> {
        let op_class = label.operation.class()?;
        Some(match self {
            TaskKind::AddCode => label.add_class(),
            TaskKind::RemoveCode => label.remove_class(),
            TaskKind::Operation => op_class,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::AddCode => "add_code",
            TaskKind::RemoveCode => "remove_code",
            TaskKind::Operation => "operation",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probability the model put on the developer's actual answer.
pub fn ground_truth_confidence(probs: &ProbabilityDistribution, true_class: usize) -> Result<f64> {
    probs.get(true_class).ok_or(Error::ClassOutOfRange {
        class: true_class,
        classes: probs.len(),
    })
}

/// Geometric mean of the three per-task confidences.
pub fn combine_confidence(c1: f64, c2: f64, c3: f64) -> Result<f64> {
    for c in [c1, c2, c3] {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::ConfidenceOutOfRange(c));
        }
    }
    // fixed multiplication order keeps the result symmetric bit for bit
    let mut c = [c1, c2, c3];
    c.sort_by(f64::total_cmp);
    // cbrt of a rounded product can land an ulp outside [min, max]
    Ok(libm::cbrt(c[0] * c[1] * c[2]).clamp(c[0], c[2]))
}

/// Scores of one review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub review_id: String,
    pub c_add: Option<f64>,
    pub c_remove: Option<f64>,
    pub c_operation: Option<f64>,
    pub score: f64,
    pub excluded: bool,
}

impl ConfidenceRecord {
    pub fn scored(review_id: impl Into<String>, c_add: f64, c_remove: f64, c_operation: f64) -> Result<Self> {
        Ok(Self {
            review_id: review_id.into(),
            c_add: Some(c_add),
            c_remove: Some(c_remove),
            c_operation: Some(c_operation),
            score: combine_confidence(c_add, c_remove, c_operation)?,
            excluded: false,
        })
    }

    /// A "not enough information" review: score 0, no components.
    pub fn excluded(review_id: impl Into<String>) -> Self {
        Self {
            review_id: review_id.into(),
            c_add: None,
            c_remove: None,
            c_operation: None,
            score: 0.0,
            excluded: true,
        }
    }

    pub fn component(&self, task: TaskKind) -> Option<f64> {
        match task {
            TaskKind::AddCode => self.c_add,
            TaskKind::RemoveCode => self.c_remove,
            TaskKind::Operation => self.c_operation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OperationType;
    use proptest::prelude::*;

    #[test]
    fn ground_truth_lookup() {
        let p = ProbabilityDistribution::new(alloc::vec![0.973, 0.027]);
        assert_eq!(ground_truth_confidence(&p, 0).unwrap(), 0.973);
        // printed distribution from a worked example; it does not sum to 1
        let p = ProbabilityDistribution::new(alloc::vec![0.027, 0.983, 0.222]);
        assert_eq!(ground_truth_confidence(&p, 1).unwrap(), 0.983);
        let p = ProbabilityDistribution::new(alloc::vec![0.5, 0.5]);
        assert_eq!(ground_truth_confidence(&p, 1).unwrap(), 0.5);
        assert!(matches!(ground_truth_confidence(&p, 2), Err(Error::ClassOutOfRange { class: 2, classes: 2 })));
    }

    #[test]
    fn combine_examples() {
        assert!((combine_confidence(0.973, 0.967, 0.983).unwrap() - 0.974).abs() <= 0.001);
        assert!((combine_confidence(0.999, 0.443, 0.888).unwrap() - 0.732).abs() <= 0.001);
        assert_eq!(combine_confidence(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(combine_confidence(0.0, 0.7, 0.9).unwrap(), 0.0);
        assert_eq!(combine_confidence(0.7, 0.9, 0.0).unwrap(), 0.0);
        assert!(matches!(combine_confidence(1.1, 0.5, 0.5), Err(Error::ConfidenceOutOfRange(_))));
        assert!(combine_confidence(-0.1, 0.5, 0.5).is_err());
        assert!(combine_confidence(f64::NAN, 0.5, 0.5).is_err());
    }

    #[test]
    fn task_classes() {
        let label = ReviewLabel::new(OperationType::Delete, false, true);
        assert_eq!(TaskKind::AddCode.class_of(&label), Some(0));
        assert_eq!(TaskKind::RemoveCode.class_of(&label), Some(1));
        assert_eq!(TaskKind::Operation.class_of(&label), Some(1));
        let nei = ReviewLabel::new(OperationType::NotEnoughInformation, true, true);
        assert!(TaskKind::ALL.iter().all(|t| t.class_of(&nei).is_none()));
        assert_eq!(TaskKind::Operation.num_classes(), 3);
    }

    proptest! {
        #[test]
        fn combine_properties(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, bump in 0.0f64..=1.0) {
            let g = combine_confidence(a, b, c).unwrap();
            prop_assert!(g >= a.min(b).min(c) && g <= a.max(b).max(c));
            for (x, y, z) in [(b, c, a), (c, a, b), (b, a, c), (a, c, b), (c, b, a)] {
                prop_assert_eq!(combine_confidence(x, y, z).unwrap(), g);
            }
            let raised = a + (1.0 - a) * bump;
            prop_assert!(combine_confidence(raised, b, c).unwrap() >= g);
            prop_assert_eq!(combine_confidence(a, a, a).unwrap(), a);
        }
    }
}
