//! Averaged structured perceptron with greedy left-to-right decoding.
//!
//! Weights are dense, indexed by `feature_id * n_classes + class_index`.
//! Averaging uses the accumulated-update trick: alongside the live weights
//! `w` we keep `u += t * delta` for every update made at step `t`, and the
//! average after `t` steps is `w - u / t`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::features::{prev_feature, static_features, BIAS};
use super::{Tagger, TaggerError};
use crate::eval;
use crate::types::{label_set_for, Label, LabelSet, LabeledSequence, Task, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub averaged: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            seed: crate::corpus::DEFAULT_SEED,
            shuffle_each_epoch: true,
            averaged: true,
        }
    }
}

/// Training provenance stored with the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ModelMeta {
    pub seed: u64,
    pub epochs: u32,
    pub corpus_hash: u32,
    pub averaged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dataset mixes tasks {0} and {1}")]
    MixedTasks(Task, Task),
    #[error("epochs must be at least 1")]
    ZeroEpochs,
}

/// Progress after one training epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: u32,
    /// Mistakes made online during the epoch.
    pub mistakes: u64,
    /// Token accuracy of the post-epoch (averaged) model on the training set.
    pub train_accuracy: f64,
    /// Validation macro F1 of the post-epoch model; `None` without a
    /// validation set.
    pub val_macro_f1: Option<f64>,
}

/// A trained linear sequence labeler for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaggerModel {
    task: Task,
    vocab: Vec<String>,
    index: BTreeMap<String, u32>,
    weights: Vec<f64>,
    meta: ModelMeta,
}

impl TaggerModel {
    /// Assembles a model from its parts. `weights` must hold
    /// `vocab.len() * n_classes` entries and `vocab` must be duplicate-free.
    pub fn from_parts(task: Task, vocab: Vec<String>, weights: Vec<f64>, meta: ModelMeta) -> Option<TaggerModel> {
        let k = label_set_for(task).len();
        if weights.len() != vocab.len().checked_mul(k)? || u32::try_from(vocab.len()).is_err() {
            return None;
        }
        let index: BTreeMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        if index.len() != vocab.len() {
            return None;
        }
        Some(TaggerModel {
            task,
            vocab,
            index,
            weights,
            meta,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn label_set(&self) -> LabelSet {
        label_set_for(self.task)
    }

    /// Features in id order.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn meta(&self) -> ModelMeta {
        self.meta
    }

    pub fn feature_id(&self, feature: &str) -> Option<u32> {
        self.index.get(feature).copied()
    }

    /// Weight of `(feature, class)`; zero for unknown features.
    pub fn weight(&self, feature: &str, class: usize) -> f64 {
        let k = self.label_set().len();
        self.feature_id(feature)
            .map_or(0.0, |id| self.weights[id as usize * k + class])
    }

    /// Multiplies every weight by `factor`.
    pub fn scale_weights(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
    }

    fn scorer(&self) -> Scorer<'_> {
        Scorer {
            task: self.task,
            index: &self.index,
            weights: &self.weights,
        }
    }

    /// Greedy decoding; ties go to the lowest class index.
    pub fn predict(&self, tokens: &[Token]) -> Vec<Label> {
        self.scorer().predict(tokens)
    }
}

impl Tagger for TaggerModel {
    fn task(&self) -> Task {
        self.task
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError> {
        Ok(self.predict(tokens))
    }
}

struct Scorer<'a> {
    task: Task,
    index: &'a BTreeMap<String, u32>,
    weights: &'a [f64],
}

impl Scorer<'_> {
    fn predict(&self, tokens: &[Token]) -> Vec<Label> {
        let k = label_set_for(self.task).len();
        let mut labels = Vec::with_capacity(tokens.len());
        let mut scores = alloc::vec![0.0; k];
        let mut prev = None;
        for pos in 0..tokens.len() {
            let ids: Vec<u32> = static_features(tokens, pos)
                .into_iter()
                .chain(core::iter::once(prev_feature(prev)))
                .filter_map(|f| self.index.get(&f).copied())
                .collect();
            score_into(self.weights, &ids, &mut scores);
            let label = Label::from_index(self.task, argmax(&scores)).expect("class index in range");
            labels.push(label);
            prev = Some(label);
        }
        labels
    }
}

fn score_into(weights: &[f64], ids: &[u32], scores: &mut [f64]) {
    let k = scores.len();
    scores.fill(0.0);
    for &id in ids {
        let row = &weights[id as usize * k..id as usize * k + k];
        for (s, w) in scores.iter_mut().zip(row) {
            *s += w;
        }
    }
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

fn common_task<'a>(seqs: impl IntoIterator<Item = &'a LabeledSequence>, task: Task) -> Result<(), TrainError> {
    match seqs.into_iter().find(|s| s.task() != task) {
        Some(s) => Err(TrainError::MixedTasks(task, s.task())),
        None => Ok(()),
    }
}

fn corpus_hash(train: &[LabeledSequence]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for seq in train {
        for (t, l) in seq.tokens().iter().zip(seq.labels()) {
            h.update(t.surface.as_bytes());
            h.update(&[t.sep_after as u8, u8::from(t.is_punct), l.index() as u8]);
        }
        h.update(&[0xff]);
    }
    h.finalize()
}

/// Trains an averaged perceptron. `on_epoch` receives a report after each
/// epoch. Deterministic given the data and `cfg`.
pub fn train(
    train: &[LabeledSequence],
    val: &[LabeledSequence],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochReport),
) -> Result<TaggerModel, TrainError> {
    let task = train.first().ok_or(TrainError::EmptyTrainingSet)?.task();
    common_task(train.iter().chain(val), task)?;
    if cfg.epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    let labels = label_set_for(task);
    let k = labels.len();

    // Vocabulary in first-seen order, then every possible history feature.
    let mut index: BTreeMap<String, u32> = BTreeMap::new();
    let mut vocab: Vec<String> = Vec::new();
    let mut intern = |f: String, index: &mut BTreeMap<String, u32>| -> u32 {
        if let Some(&id) = index.get(&f) {
            return id;
        }
        let id = vocab.len() as u32;
        vocab.push(f.clone());
        index.insert(f, id);
        id
    };
    let feats: Vec<Vec<Vec<u32>>> = train
        .iter()
        .map(|seq| {
            (0..seq.len())
                .map(|pos| {
                    static_features(seq.tokens(), pos)
                        .into_iter()
                        .map(|f| intern(f, &mut index))
                        .collect()
                })
                .collect()
        })
        .collect();
    let prev_ids: Vec<u32> = core::iter::once(None)
        .chain(labels.labels().map(Some))
        .map(|p| intern(prev_feature(p), &mut index))
        .collect();
    let gold: Vec<Vec<usize>> = train
        .iter()
        .map(|s| s.labels().iter().map(|l| l.index()).collect())
        .collect();

    let n = vocab.len() * k;
    let mut w = alloc::vec![0.0f64; n];
    let mut u = alloc::vec![0.0f64; n];
    let mut step = 1.0f64;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut scores = alloc::vec![0.0; k];
    let mut ids: Vec<u32> = Vec::new();
    let mut current = alloc::vec![0.0f64; n];

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut mistakes = 0u64;
        for &s in &order {
            let mut prev = 0usize;
            for (pos, static_ids) in feats[s].iter().enumerate() {
                ids.clear();
                ids.extend_from_slice(static_ids);
                ids.push(prev_ids[prev]);
                score_into(&w, &ids, &mut scores);
                let guess = argmax(&scores);
                let truth = gold[s][pos];
                if guess != truth {
                    mistakes += 1;
                    for &id in &ids {
                        let base = id as usize * k;
                        w[base + truth] += 1.0;
                        w[base + guess] -= 1.0;
                        u[base + truth] += step;
                        u[base + guess] -= step;
                    }
                }
                prev = guess + 1;
                step += 1.0;
            }
        }

        for ((c, wi), ui) in current.iter_mut().zip(&w).zip(&u) {
            *c = if cfg.averaged { wi - ui / step } else { *wi };
        }
        let scorer = Scorer {
            task,
            index: &index,
            weights: &current,
        };
        let train_accuracy = {
            let (mut hit, mut total) = (0usize, 0usize);
            for seq in train {
                let pred = scorer.predict(seq.tokens());
                hit += pred.iter().zip(seq.labels()).filter(|(p, g)| p == g).count();
                total += pred.len();
            }
            if total == 0 {
                1.0
            } else {
                hit as f64 / total as f64
            }
        };
        let val_macro_f1 = (!val.is_empty()).then(|| {
            let (pred, gold): (Vec<Label>, Vec<Label>) = val
                .iter()
                .flat_map(|seq| scorer.predict(seq.tokens()).into_iter().zip(seq.labels().iter().copied()))
                .unzip();
            eval::per_class_prf(task, &pred, &gold)
                .map(|rows| eval::macro_f1(&rows))
                .unwrap_or(0.0)
        });
        on_epoch(&EpochReport {
            epoch,
            mistakes,
            train_accuracy,
            val_macro_f1,
        });
    }

    Ok(TaggerModel {
        task,
        vocab,
        index,
        weights: current,
        meta: ModelMeta {
            seed: cfg.seed,
            epochs: cfg.epochs,
            corpus_hash: corpus_hash(train),
            averaged: cfg.averaged,
        },
    })
}

/// A model that predicts the most frequent training class everywhere
/// (ties resolved by class order).
pub fn majority_baseline(train: &[LabeledSequence]) -> Result<TaggerModel, TrainError> {
    let task = train.first().ok_or(TrainError::EmptyTrainingSet)?.task();
    common_task(train, task)?;
    let k = label_set_for(task).len();
    let mut counts = alloc::vec![0u64; k];
    for seq in train {
        for l in seq.labels() {
            counts[l.index()] += 1;
        }
    }
    let mut best = 0;
    for (i, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = i;
        }
    }
    let mut weights = alloc::vec![0.0; k];
    weights[best] = 1.0;
    Ok(TaggerModel::from_parts(
        task,
        alloc::vec![String::from(BIAS)],
        weights,
        ModelMeta {
            corpus_hash: corpus_hash(train),
            ..ModelMeta::default()
        },
    )
    .expect("one feature row"))
}
