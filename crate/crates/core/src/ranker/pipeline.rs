use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ground_truth_confidence, make_folds, make_stratified_folds, ConfidenceRecord, FoldAssignment, TaskKind};
use crate::corpus::{LabeledCorpus, ReviewLabel};
use crate::neuralnet::{predict_proba, train, ModelParams, TrainConfig};
use crate::textprep::{build_vocabulary, preprocess_review, SynonymMap, TokenSequence, Vocabulary};
use crate::vectorizer::{vectorize_with_oov, FeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub k: usize,
    pub seed: u64,
    /// Deal operation classes evenly across folds instead of a uniform split.
    pub stratify: bool,
    pub train: TrainConfig,
    /// Per-model replacements for `train`.
    pub task_train: BTreeMap<TaskKind, TrainConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            stratify: false,
            train: TrainConfig::default(),
            task_train: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    /// Training config for `task` in fold `fold`; the seed is `seed + fold`.
    pub fn train_config(&self, task: TaskKind, fold: usize) -> TrainConfig {
        let mut config = self.task_train.get(&task).unwrap_or(&self.train).clone();
        config.seed = self.seed.wrapping_add(fold as u64);
        config
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidFoldCount(self.k));
        }
        self.train.validate()?;
        self.task_train.values().try_for_each(TrainConfig::validate)
    }
}

/// Receives the review ids of every training split before the model is
/// trained on it.
pub trait TrainingAudit: Sync {
    fn training_split(&self, fold: usize, task: TaskKind, review_ids: &[&str]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedReview {
    pub id: String,
    pub label: ReviewLabel,
    pub tokens: TokenSequence,
    pub vector: FeatureVector,
}

/// Every review preprocessed and vectorized over the corpus-wide vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub reviews: Vec<PreparedReview>,
    pub vocabulary: Vocabulary,
    pub oov_tokens: usize,
}

impl PreparedCorpus {
    pub fn new(corpus: &LabeledCorpus, synonyms: &SynonymMap) -> Self {
        let tokens: Vec<TokenSequence> = corpus.iter().map(|e| preprocess_review(&e.review.text, synonyms)).collect();
        let vocabulary = build_vocabulary(&tokens);
        let mut oov_tokens = 0;
        let reviews = corpus
            .iter()
            .zip(tokens)
            .map(|(entry, tokens)| {
                let v = vectorize_with_oov(&tokens, &vocabulary);
                oov_tokens += v.oov;
                PreparedReview {
                    id: entry.review.id.clone(),
                    label: entry.label.clone(),
                    tokens,
                    vector: v.vector,
                }
            })
            .collect();
        Self {
            reviews,
            vocabulary,
            oov_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFoldMetrics {
    pub task: TaskKind,
    pub train_class_counts: Vec<usize>,
    pub validation_class_counts: Vec<usize>,
    /// Argmax accuracy on the validation fold.
    pub accuracy: f64,
    pub final_train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub tasks: Vec<TaskFoldMetrics>,
}

impl FoldReport {
    pub fn task(&self, task: TaskKind) -> Option<&TaskFoldMetrics> {
        self.tasks.iter().find(|m| m.task == task)
    }
}

/// Output of one fold: scores for its validation reviews, keyed by the
/// review's position in the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub report: FoldReport,
    pub records: Vec<(usize, ConfidenceRecord)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// One record per corpus review, in corpus order.
    pub records: Vec<ConfidenceRecord>,
    pub folds: Vec<FoldReport>,
    pub vocabulary_size: usize,
    pub oov_tokens: usize,
    /// Reviews with no tokens left after preprocessing. They are still scored.
    pub empty_reviews: Vec<String>,
    /// Class totals over the trainable reviews, per task.
    pub class_counts: BTreeMap<TaskKind, Vec<usize>>,
    pub excluded: usize,
}

impl PipelineOutput {
    /// Mean of the per-fold validation accuracies.
    pub fn mean_accuracy(&self, task: TaskKind) -> Option<f64> {
        let accs: Vec<f64> = self.folds.iter().filter_map(|f| f.task(task)).map(|m| m.accuracy).collect();
        if accs.is_empty() {
            return None;
        }
        Some(accs.iter().sum::<f64>() / accs.len() as f64)
    }
}

/// A planned k-fold run. Folds are independent, so [`Pipeline::run_fold`]
/// may be called for different folds concurrently; [`Pipeline::finish`]
/// accepts the results in any order.
#[derive(Debug, Clone)]
pub struct Pipeline {
    prepared: PreparedCorpus,
    /// Corpus positions of the trainable reviews.
    trainable: Vec<usize>,
    folds: Option<FoldAssignment>,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(corpus: &LabeledCorpus, synonyms: &SynonymMap, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let prepared = PreparedCorpus::new(corpus, synonyms);
        let trainable: Vec<usize> = prepared
            .reviews
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label.operation.is_labelable())
            .map(|(i, _)| i)
            .collect();
        let folds = if trainable.is_empty() {
            None
        } else {
            let ids: Vec<&str> = trainable.iter().map(|&i| prepared.reviews[i].id.as_str()).collect();
            Some(if config.stratify {
                let classes: Vec<usize> = trainable
                    .iter()
                    .map(|&i| TaskKind::Operation.class_of(&prepared.reviews[i].label).unwrap_or(0))
                    .collect();
                make_stratified_folds(&ids, &classes, config.k, config.seed)?
            } else {
                make_folds(&ids, config.k, config.seed)?
            })
        };
        Ok(Self {
            prepared,
            trainable,
            folds,
            config,
        })
    }

    pub fn prepared(&self) -> &PreparedCorpus {
        &self.prepared
    }

    pub fn folds(&self) -> Option<&FoldAssignment> {
        self.folds.as_ref()
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Fold numbers to run; empty when nothing is trainable.
    pub fn fold_numbers(&self) -> core::ops::RangeInclusive<usize> {
        match &self.folds {
            Some(f) => 1..=f.k(),
            #[allow(clippy::reversed_empty_ranges)]
            None => 1..=0,
        }
    }

    fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let folds = self.folds.as_ref().expect("folds exist when there are trainable reviews");
        self.trainable
            .iter()
            .partition(|&&i| folds.fold_of(&self.prepared.reviews[i].id) != Some(fold))
    }

    /// Trains all three models on every fold but `fold` and scores the
    /// reviews of `fold`.
    pub fn run_fold(&self, fold: usize, audit: Option<&dyn TrainingAudit>) -> Result<FoldResult> {
        let (train_idx, val_idx) = self.split(fold);
        let reviews = &self.prepared.reviews;

        let mut models: Vec<(TaskKind, ModelParams)> = Vec::with_capacity(3);
        let mut metrics = Vec::with_capacity(3);
        for task in TaskKind::ALL {
            let data: Vec<(&FeatureVector, usize)> = train_idx
                .iter()
                .map(|&i| (&reviews[i].vector, task.class_of(&reviews[i].label).expect("trainable")))
                .collect();
            let train_counts = class_counts(task, data.iter().map(|(_, c)| *c));
            if let Some(missing) = train_counts.iter().position(|&n| n == 0) {
                return Err(Error::MissingClass {
                    fold,
                    task,
                    class: missing,
                });
            }
            if let Some(audit) = audit {
                let ids: Vec<&str> = train_idx.iter().map(|&i| reviews[i].id.as_str()).collect();
                audit.training_split(fold, task, &ids);
            }
            let outcome = train(&data, task.num_classes(), &self.config.train_config(task, fold))?;
            metrics.push(TaskFoldMetrics {
                task,
                train_class_counts: train_counts,
                validation_class_counts: class_counts(
                    task,
                    val_idx.iter().map(|&i| task.class_of(&reviews[i].label).expect("trainable")),
                ),
                accuracy: 0.0,
                final_train_loss: outcome.epoch_losses.last().copied(),
            });
            models.push((task, outcome.params));
        }

        let mut correct = [0usize; 3];
        let mut records = Vec::with_capacity(val_idx.len());
        for &i in &val_idx {
            let review = &reviews[i];
            let input = review.vector.to_input();
            let mut components = [0.0; 3];
            for (t, (task, params)) in models.iter().enumerate() {
                let truth = task.class_of(&review.label).expect("trainable");
                let probs = predict_proba(params, &input)?;
                if probs.argmax() == truth {
                    correct[t] += 1;
                }
                components[t] = ground_truth_confidence(&probs, truth)?;
            }
            let record = ConfidenceRecord::scored(review.id.clone(), components[0], components[1], components[2])?;
            records.push((i, record));
        }
        for (m, c) in metrics.iter_mut().zip(correct) {
            m.accuracy = if val_idx.is_empty() {
                0.0
            } else {
                c as f64 / val_idx.len() as f64
            };
        }

        Ok(FoldResult {
            report: FoldReport {
                fold,
                train_size: train_idx.len(),
                validation_size: val_idx.len(),
                tasks: metrics,
            },
            records,
        })
    }

    /// Assembles fold results into one record per review. Reviews without
    /// enough information get an excluded record with score 0.
    pub fn finish(self, results: Vec<FoldResult>) -> Result<PipelineOutput> {
        let reviews = &self.prepared.reviews;
        let mut slots: Vec<Option<ConfidenceRecord>> = vec![None; reviews.len()];
        let mut folds = Vec::with_capacity(results.len());
        for result in results {
            for (i, record) in result.records {
                debug_assert!(slots[i].is_none(), "review scored twice");
                slots[i] = Some(record);
            }
            folds.push(result.report);
        }
        folds.sort_by_key(|f| f.fold);

        let records = slots
            .into_iter()
            .zip(reviews)
            .map(|(slot, review)| {
                if !review.label.operation.is_labelable() {
                    return Ok(ConfidenceRecord::excluded(review.id.clone()));
                }
                slot.ok_or_else(|| Error::InvalidConfig(alloc::format!("review `{}` was never scored", review.id)))
            })
            .collect::<Result<Vec<_>>>()?;

        let class_counts = TaskKind::ALL
            .iter()
            .map(|&task| {
                let counts = class_counts(task, self.trainable.iter().filter_map(|&i| task.class_of(&reviews[i].label)));
                (task, counts)
            })
            .collect();

        Ok(PipelineOutput {
            records,
            folds,
            vocabulary_size: self.prepared.vocabulary.len(),
            oov_tokens: self.prepared.oov_tokens,
            empty_reviews: reviews.iter().filter(|r| r.tokens.is_empty()).map(|r| r.id.clone()).collect(),
            class_counts,
            excluded: reviews.len() - self.trainable.len(),
        })
    }
}

fn class_counts(task: TaskKind, classes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut counts = vec![0; task.num_classes()];
    for c in classes {
        counts[c] += 1;
    }
    counts
}

/// Runs every fold in order on the current thread.
pub fn run_pipeline(
    corpus: &LabeledCorpus,
    synonyms: &SynonymMap,
    config: PipelineConfig,
    audit: Option<&dyn TrainingAudit>,
) -> Result<PipelineOutput> {
    let pipeline = Pipeline::new(corpus, synonyms, config)?;
    let results = pipeline
        .fold_numbers()
        .map(|fold| pipeline.run_fold(fold, audit))
        .collect::<Result<Vec<_>>>()?;
    pipeline.finish(results)
}
