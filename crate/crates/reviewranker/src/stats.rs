//! Corpus summary printed by `reviewranker stats`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use reviewranker_core::corpus::{deduplicate, lint_labels};
use reviewranker_core::ranker::PreparedCorpus;
use reviewranker_core::{LabeledCorpus, OperationType, SynonymMap, TaskKind};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub reviews: usize,
    pub after_dedup: usize,
    /// Counts per operation after dedup, keyed by operation name.
    pub operations: BTreeMap<String, usize>,
    pub not_enough_information: usize,
    /// Class totals over the trainable reviews after dedup.
    pub class_counts: BTreeMap<TaskKind, Vec<usize>>,
    pub vocabulary_size: usize,
    pub lint_warnings: Vec<String>,
}

impl CorpusStats {
    pub fn compute(corpus: &LabeledCorpus, synonyms: &SynonymMap) -> Self {
        let unique = deduplicate(corpus);
        let mut operations: BTreeMap<String, usize> =
            OperationType::ALL.iter().map(|op| (op.to_string(), 0)).collect();
        let mut class_counts: BTreeMap<TaskKind, Vec<usize>> =
            TaskKind::ALL.iter().map(|&t| (t, vec![0; t.num_classes()])).collect();
        for entry in &unique {
            *operations.entry(entry.label.operation.to_string()).or_default() += 1;
            for task in TaskKind::ALL {
                if let Some(class) = task.class_of(&entry.label) {
                    class_counts.get_mut(&task).expect("all tasks present")[class] += 1;
                }
            }
        }
        Self {
            reviews: corpus.len(),
            after_dedup: unique.len(),
            not_enough_information: operations[&OperationType::NotEnoughInformation.to_string()],
            operations,
            class_counts,
            vocabulary_size: PreparedCorpus::new(&unique, synonyms).vocabulary.len(),
            lint_warnings: lint_labels(&unique).iter().map(ToString::to_string).collect(),
        }
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        writeln!(out, "reviews: {} -> {} after dedup", self.reviews, self.after_dedup)?;
        for (op, n) in &self.operations {
            writeln!(out, "  {op}: {n}")?;
        }
        writeln!(out, "not enough information: {}", self.not_enough_information)?;
        for (task, counts) in &self.class_counts {
            let counts: Vec<String> = counts.iter().map(ToString::to_string).collect();
            writeln!(out, "{task} classes: {}", counts.join(" / "))?;
        }
        writeln!(out, "vocabulary size: {}", self.vocabulary_size)?;
        writeln!(out, "lint warnings: {}", self.lint_warnings.len())?;
        for w in &self.lint_warnings {
            writeln!(out, "  {w}")?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use reviewranker_core::{Entry, Review, ReviewLabel};

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats = CorpusStats::compute(&LabeledCorpus::default(), &SynonymMap::builtin());
        assert_eq!(stats.reviews, 0);
        assert_eq!(stats.after_dedup, 0);
        assert_eq!(stats.vocabulary_size, 0);
        assert!(stats.operations.values().all(|&n| n == 0));
        assert!(stats.class_counts.values().flatten().all(|&n| n == 0));
        assert!(stats.lint_warnings.is_empty());
    }

    #[test]
    fn counts_and_lint() {
        let entries = vec![
            Entry::new(
                Review::new("a", "outer parens not needed"),
                ReviewLabel::new(OperationType::Delete, false, true),
            ),
            Entry::new(
                Review::new("b", "Outer  parens not needed"),
                ReviewLabel::new(OperationType::Delete, false, true),
            ),
            Entry::new(Review::new("c", "rename this"), ReviewLabel::new(OperationType::Replace, true, false)),
            Entry::new(
                Review::new("d", "why?"),
                ReviewLabel::new(OperationType::NotEnoughInformation, false, false),
            ),
        ];
        let stats = CorpusStats::compute(&LabeledCorpus::new(entries).unwrap(), &SynonymMap::builtin());
        assert_eq!((stats.reviews, stats.after_dedup), (4, 3));
        assert_eq!(stats.not_enough_information, 1);
        assert_eq!(stats.class_counts[&TaskKind::Operation], vec![1, 1, 0]);
        assert_eq!(stats.lint_warnings.len(), 1);
        assert!(stats.lint_warnings[0].contains("`c`"));
        let text = stats.to_string();
        assert!(text.contains("reviews: 4 -> 3 after dedup"), "{text}");
    }
}
