//! Token-level evaluation: per-class precision/recall/F1, macro F1 and
//! accuracy.
//!
//! Counts are pooled over all tokens of a dataset; F1 is then averaged
//! unweighted over every class of the task, including classes with no
//! support. Zero denominators yield zero.

use alloc::vec::Vec;

use thiserror::Error;

use crate::tagger::{Tagger, TaggerError};
use crate::types::{label_set_for, Label, LabeledSequence, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{pred} predictions for {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("label for task {found} while evaluating {expected}")]
    MixedTasks { expected: Task, found: Task },
    #[error("no tokens to score")]
    EmptySequences,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Tagger(#[from] TaggerError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold tokens of this class.
    pub support: u64,
    /// Tokens predicted as this class.
    pub predicted: u64,
    pub correct: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    /// One row per class, in label-set order.
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub token_total: u64,
    /// `confusion[gold][pred]` token counts.
    pub confusion: Vec<Vec<u64>>,
}

/// Gold-by-predicted count matrix; merging is associative so partial counts
/// from parallel workers can be combined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Confusion {
    task: Task,
    k: usize,
    counts: Vec<u64>,
}

impl Confusion {
    pub fn new(task: Task) -> Confusion {
        let k = label_set_for(task).len();
        Confusion {
            task,
            k,
            counts: alloc::vec![0; k * k],
        }
    }

    pub fn add(&mut self, pred: &[Label], gold: &[Label]) -> Result<(), EvalError> {
        if pred.len() != gold.len() {
            return Err(EvalError::LengthMismatch {
                pred: pred.len(),
                gold: gold.len(),
            });
        }
        if let Some(bad) = pred.iter().chain(gold).find(|l| l.task() != self.task) {
            return Err(EvalError::MixedTasks {
                expected: self.task,
                found: bad.task(),
            });
        }
        for (p, g) in pred.iter().zip(gold) {
            self.counts[g.index() * self.k + p.index()] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Confusion) {
        assert_eq!(self.task, other.task, "merging confusions of different tasks");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn correct_total(&self) -> u64 {
        (0..self.k).map(|c| self.counts[c * self.k + c]).sum()
    }

    pub fn per_class(&self) -> Vec<ClassMetrics> {
        let set = label_set_for(self.task);
        (0..self.k)
            .map(|c| {
                let correct = self.counts[c * self.k + c];
                let support: u64 = self.counts[c * self.k..(c + 1) * self.k].iter().sum();
                let predicted: u64 = (0..self.k).map(|g| self.counts[g * self.k + c]).sum();
                let precision = ratio(correct, predicted);
                let recall = ratio(correct, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    label: set.label(c).expect("class in range"),
                    precision,
                    recall,
                    f1,
                    support,
                    predicted,
                    correct,
                }
            })
            .collect()
    }

    pub fn report(&self) -> Result<EvalReport, EvalError> {
        let total = self.total();
        if total == 0 {
            return Err(EvalError::EmptySequences);
        }
        let per_class = self.per_class();
        Ok(EvalReport {
            task: self.task,
            macro_f1: macro_f1(&per_class),
            accuracy: ratio(self.correct_total(), total),
            token_total: total,
            confusion: self.counts.chunks(self.k).map(<[u64]>::to_vec).collect(),
            per_class,
        })
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 over paired labels of `task`.
pub fn per_class_prf(task: Task, pred: &[Label], gold: &[Label]) -> Result<Vec<ClassMetrics>, EvalError> {
    let mut confusion = Confusion::new(task);
    confusion.add(pred, gold)?;
    Ok(confusion.per_class())
}

/// Unweighted mean F1 over all rows.
pub fn macro_f1(per_class: &[ClassMetrics]) -> f64 {
    if per_class.is_empty() {
        return 0.0;
    }
    per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
}

pub fn accuracy(pred: &[Label], gold: &[Label]) -> Result<f64, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptySequences);
    }
    let hits = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Runs `tagger` over every sequence and scores the pooled predictions.
pub fn evaluate(tagger: &dyn Tagger, dataset: &[LabeledSequence]) -> Result<EvalReport, EvalError> {
    let task = tagger.task();
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut confusion = Confusion::new(task);
    for seq in dataset {
        if seq.task() != task {
            return Err(EvalError::MixedTasks {
                expected: task,
                found: seq.task(),
            });
        }
        let pred = tagger.tag(seq.tokens())?;
        confusion.add(&pred, seq.labels())?;
    }
    confusion.report()
}
