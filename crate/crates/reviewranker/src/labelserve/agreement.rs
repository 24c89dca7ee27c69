use serde::Serialize;

use reviewranker_core::{OperationType, ReviewLabel};

use super::store::StoreView;

/// One labeler's answers to the three questions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Answers {
    pub labeler_id: String,
    pub operation: OperationType,
    #[serde(with = "reviewranker_core::corpus::binary")]
    pub add_understood: bool,
    #[serde(with = "reviewranker_core::corpus::binary")]
    pub remove_understood: bool,
}

impl Answers {
    fn new(labeler_id: &str, label: &ReviewLabel) -> Self {
        Self {
            labeler_id: labeler_id.to_string(),
            operation: label.operation,
            add_understood: label.add_understood,
            remove_understood: label.remove_understood,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub review_id: String,
    /// Questions without a unanimous answer.
    pub questions: Vec<&'static str>,
    pub answers: Vec<Answers>,
}

/// Fraction of compared reviews with unanimous answers; `None` when no
/// review qualifies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuestionRates {
    pub operation: Option<f64>,
    pub add_understood: Option<f64>,
    pub remove_understood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub shared_pool: Vec<String>,
    /// Shared reviews with answers from at least two labelers.
    pub compared: usize,
    pub rates: QuestionRates,
    pub disagreements: Vec<Disagreement>,
}

pub fn agreement_report(view: &StoreView, shared_pool: &[String]) -> AgreementReport {
    let mut compared = 0usize;
    let mut agree = [0usize; 3];
    let mut disagreements = Vec::new();
    for id in shared_pool {
        let Some(labels) = view.labels(id).filter(|l| l.len() >= 2) else {
            continue;
        };
        compared += 1;
        let answers: Vec<Answers> = labels.iter().map(|(who, l)| Answers::new(who, l)).collect();
        let first = &answers[0];
        let unanimous = [
            answers.iter().all(|a| a.operation == first.operation),
            answers.iter().all(|a| a.add_understood == first.add_understood),
            answers.iter().all(|a| a.remove_understood == first.remove_understood),
        ];
        let names = ["operation", "add_understood", "remove_understood"];
        let mut questions = Vec::new();
        for (i, same) in unanimous.into_iter().enumerate() {
            if same {
                agree[i] += 1;
            } else {
                questions.push(names[i]);
            }
        }
        if !questions.is_empty() {
            disagreements.push(Disagreement {
                review_id: id.clone(),
                questions,
                answers,
            });
        }
    }
    let rate = |n: usize| (compared > 0).then(|| n as f64 / compared as f64);
    AgreementReport {
        shared_pool: shared_pool.to_vec(),
        compared,
        rates: QuestionRates {
            operation: rate(agree[0]),
            add_understood: rate(agree[1]),
            remove_understood: rate(agree[2]),
        },
        disagreements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelserve::store::LogRecord;

    fn submit(view: &mut StoreView, review: &str, by: &str, op: OperationType, add: bool, remove: bool) {
        let mut label = ReviewLabel::new(op, add, remove);
        label.labeler_id = Some(by.to_string());
        view.apply(&LogRecord::Label {
            review_id: review.to_string(),
            label,
        });
    }

    fn pool(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unanimous_pool() {
        let mut view = StoreView::default();
        for who in ["a", "b", "c"] {
            submit(&mut view, "s1", who, OperationType::Delete, false, true);
            submit(&mut view, "s2", who, OperationType::Insert, true, false);
        }
        let report = agreement_report(&view, &pool(&["s1", "s2"]));
        assert_eq!(report.compared, 2);
        assert_eq!(report.rates.operation, Some(1.0));
        assert_eq!(report.rates.add_understood, Some(1.0));
        assert_eq!(report.rates.remove_understood, Some(1.0));
        assert!(report.disagreements.is_empty());
    }

    #[test]
    fn two_against_one() {
        let mut view = StoreView::default();
        for who in ["a", "b", "c"] {
            submit(&mut view, "s1", who, OperationType::Delete, false, true);
        }
        submit(&mut view, "s2", "a", OperationType::Replace, true, true);
        submit(&mut view, "s2", "b", OperationType::Replace, true, true);
        submit(&mut view, "s2", "c", OperationType::Insert, true, true);
        // a single labeler is not compared
        submit(&mut view, "s3", "a", OperationType::Insert, true, false);
        let report = agreement_report(&view, &pool(&["s1", "s2", "s3"]));
        assert_eq!(report.compared, 2);
        assert_eq!(report.rates.operation, Some(0.5));
        assert_eq!(report.rates.add_understood, Some(1.0));
        assert_eq!(report.disagreements.len(), 1);
        assert_eq!(report.disagreements[0].review_id, "s2");
        assert_eq!(report.disagreements[0].questions, vec!["operation"]);
        assert_eq!(report.disagreements[0].answers.len(), 3);
    }

    #[test]
    fn empty_pool_has_undefined_rates() {
        let report = agreement_report(&StoreView::default(), &[]);
        assert_eq!(report.compared, 0);
        assert_eq!(report.rates.operation, None);
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["rates"]["operation"].is_null());
    }
}
