//! Running the scoring pipeline with folds spread over threads, and the
//! JSON run report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use reviewranker_core::ranker::{FoldReport, Pipeline, PipelineOutput, TrainingAudit};
use reviewranker_core::{LabeledCorpus, PipelineConfig, SynonymMap, TaskKind};
use serde::Serialize;

use crate::error::{Error, Result};

/// Loads a synonym file: one group per line, canonical word first, `#`
/// starts a comment.
pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(SynonymMap::parse(&text)?)
}

/// Same output as `reviewranker_core::ranker::run_pipeline`, with folds
/// trained concurrently.
pub fn run_parallel(
    corpus: &LabeledCorpus,
    synonyms: &SynonymMap,
    config: PipelineConfig,
    audit: Option<&dyn TrainingAudit>,
) -> Result<PipelineOutput> {
    let pipeline = Pipeline::new(corpus, synonyms, config)?;
    let folds: Vec<usize> = pipeline.fold_numbers().collect();
    let results = folds
        .into_par_iter()
        .map(|fold| pipeline.run_fold(fold, audit))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pipeline.finish(results)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub reviews: usize,
    pub trainable: usize,
    pub excluded: usize,
    pub empty_reviews: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub k: usize,
    pub config: PipelineConfig,
    pub corpus: CorpusSummary,
    pub vocabulary_size: usize,
    pub oov_tokens: usize,
    pub class_counts: BTreeMap<TaskKind, Vec<usize>>,
    /// Mean validation accuracy over folds; absent when nothing was trained.
    pub mean_accuracy: BTreeMap<TaskKind, Option<f64>>,
    pub folds: Vec<FoldReport>,
}

impl RunReport {
    pub fn new(config: &PipelineConfig, output: &PipelineOutput) -> Self {
        Self {
            seed: config.seed,
            k: config.k,
            config: config.clone(),
            corpus: CorpusSummary {
                reviews: output.records.len(),
                trainable: output.records.len() - output.excluded,
                excluded: output.excluded,
                empty_reviews: output.empty_reviews.clone(),
            },
            vocabulary_size: output.vocabulary_size,
            oov_tokens: output.oov_tokens,
            class_counts: output.class_counts.clone(),
            mean_accuracy: TaskKind::ALL.iter().map(|&t| (t, output.mean_accuracy(t))).collect(),
            folds: output.folds.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use reviewranker_core::ranker::run_pipeline;
    use reviewranker_core::{Entry, OperationType, Review, ReviewLabel, TrainConfig};

    fn corpus() -> LabeledCorpus {
        let ops = [OperationType::Replace, OperationType::Delete, OperationType::Insert];
        let entries = (0..24)
            .map(|i| {
                let op = ops[i % 3];
                let text = format!("{} thing number{}", ["swap", "drop", "append"][i % 3], i);
                let label = ReviewLabel::new(op, op != OperationType::Delete, op != OperationType::Insert);
                Entry::new(Review::new(format!("r{i}"), text), label)
            })
            .chain([Entry::new(
                Review::new("vague", "hmm"),
                ReviewLabel::new(OperationType::NotEnoughInformation, false, false),
            )])
            .collect();
        LabeledCorpus::new(entries).unwrap()
    }

    fn config() -> PipelineConfig {
        PipelineConfig {
            k: 4,
            seed: 3,
            train: TrainConfig {
                hidden_sizes: vec![8],
                epochs: 20,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = corpus();
        let syn = SynonymMap::builtin();
        let seq = run_pipeline(&c, &syn, config(), None).unwrap();
        let par = run_parallel(&c, &syn, config(), None).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn report_fields() {
        let c = corpus();
        let out = run_parallel(&c, &SynonymMap::builtin(), config(), None).unwrap();
        let report = RunReport::new(&config(), &out);
        assert_eq!(report.corpus.reviews, 25);
        assert_eq!(report.corpus.excluded, 1);
        assert_eq!(report.folds.len(), 4);
        assert_eq!(report.class_counts[&TaskKind::Operation], vec![8, 8, 8]);
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(json["seed"], 3);
        assert!(json["mean_accuracy"]["operation"].is_number());
        assert!(json["folds"][0]["tasks"].as_array().unwrap().len() == 3);
    }
}
