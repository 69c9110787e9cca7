//! Optimization, data splits, early stopping and checkpoints.

use std::ops::Range;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{PairExampleI, PairExampleII};
use crate::error::{Error, Result};
use crate::model::{Udssm1Params, Udssm2Params};
use crate::nn::{check_rate, Mode};
use crate::tensor::{Graph, ParamStore, Var};

mod checkpoint;
mod optim;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION, MAGIC};
pub use optim::{adamax_step, AdamaxState};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout: 0.1,
            batch_size: 50,
            max_epochs: 10,
            patience: 3,
            seed: 0,
            val_fraction: 0.05,
        }
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 10] = [
        "lr",
        "beta1",
        "beta2",
        "epsilon",
        "dropout",
        "batch_size",
        "max_epochs",
        "patience",
        "seed",
        "val_fraction",
    ];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} outside [0, 1)"));
            }
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        check_rate(self.dropout)?;
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.val_fraction > 0.0 && self.val_fraction <= 0.5) {
            return bad(format!(
                "validation fraction {} outside (0, 0.5]",
                self.val_fraction
            ));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
        }
        match key {
            "lr" => self.lr = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "val_fraction" => self.val_fraction = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown training key {key:?}"))),
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let v = [
            self.lr.to_string(),
            self.beta1.to_string(),
            self.beta2.to_string(),
            self.epsilon.to_string(),
            self.dropout.to_string(),
            self.batch_size.to_string(),
            self.max_epochs.to_string(),
            self.patience.to_string(),
            self.seed.to_string(),
            self.val_fraction.to_string(),
        ];
        Self::KEYS.into_iter().zip(v).collect()
    }
}

/// Seeded shuffle, then the first `round(n · fraction)` records become the
/// validation set.
pub fn split_train_val<T: Clone>(
    records: &[T],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if records.is_empty() {
        return Err(Error::Config("cannot split an empty data set".into()));
    }
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::Config(format!(
            "validation fraction {fraction} outside (0, 0.5]"
        )));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (records.len() as f64 * fraction).round() as usize;
    let val = order[..n_val].iter().map(|&k| records[k].clone()).collect();
    let train = order[n_val..].iter().map(|&k| records[k].clone()).collect();
    Ok((train, val))
}

/// Consecutive ranges of `size`; a trailing range shorter than `min` is
/// merged into the one before it.
pub fn batch_ranges(n: usize, size: usize, min: usize) -> Result<Vec<Range<usize>>> {
    if n < min {
        return Err(Error::Config(format!(
            "{n} examples cannot fill a batch of at least {min}"
        )));
    }
    let size = size.max(min);
    let mut out: Vec<Range<usize>> = (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect();
    if out.len() > 1 && out.last().is_some_and(|r| r.len() < min) {
        let tail = out.pop().unwrap();
        out.last_mut().unwrap().end = tail.end;
    }
    Ok(out)
}

/// A model the generic training loop can drive.
pub trait Trainable: Clone {
    type Example: Clone;
    /// Smallest usable batch.
    const MIN_BATCH: usize;

    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    fn loss(&self, g: &mut Graph, batch: &[Self::Example], mode: &mut Mode) -> Result<Var>;
    /// Higher is better.
    fn metric(&self, data: &[Self::Example], batch_size: usize) -> Result<f64>;
}

impl Trainable for Udssm1Params {
    type Example = PairExampleI;
    const MIN_BATCH: usize = 2;

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn loss(&self, g: &mut Graph, batch: &[PairExampleI], mode: &mut Mode) -> Result<Var> {
        self.batch_nce_loss(g, batch, mode)
    }

    /// Fraction of examples whose positive logit beats every in-batch
    /// negative, with batches taken in order.
    fn metric(&self, data: &[PairExampleI], batch_size: usize) -> Result<f64> {
        let mut hits = 0;
        for r in batch_ranges(data.len(), batch_size, 2)? {
            hits += self.ranking_hits(&data[r])?;
        }
        Ok(hits as f64 / data.len() as f64)
    }
}

impl Trainable for Udssm2Params {
    type Example = PairExampleII;
    const MIN_BATCH: usize = 1;

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn loss(&self, g: &mut Graph, batch: &[PairExampleII], mode: &mut Mode) -> Result<Var> {
        self.pair_loss(g, batch, mode)
    }

    fn metric(&self, data: &[PairExampleII], _batch_size: usize) -> Result<f64> {
        self.classification_accuracy(data)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub metric: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    /// Metric of the starting parameters; `None` when no epoch ran.
    pub initial_metric: Option<f64>,
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept; `None` keeps the initial ones.
    pub best_epoch: Option<usize>,
}

impl History {
    pub fn best_metric(&self) -> Option<f64> {
        match self.best_epoch {
            Some(e) => Some(self.epochs[e - 1].metric),
            None => self.initial_metric,
        }
    }
}

/// Adamax training with per-epoch reshuffling and early stopping.
///
/// The metric is computed on `val`, or on `train` when `val` is empty. The
/// returned parameters are those of the best epoch (the initial parameters
/// count as epoch 0).
pub fn fit<M: Trainable>(
    mut model: M,
    train: &[M::Example],
    val: &[M::Example],
    cfg: &TrainConfig,
) -> Result<(M, History)> {
    cfg.validate()?;
    let mut history = History::default();
    if cfg.max_epochs == 0 {
        return Ok((model, history));
    }
    let batches = batch_ranges(train.len(), cfg.batch_size, M::MIN_BATCH)?;
    let monitor = if val.is_empty() { train } else { val };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamaxState::new(model.store());
    let mut best_metric = model.metric(monitor, cfg.batch_size)?;
    let mut best = model.clone();
    history.initial_metric = Some(best_metric);
    let mut stale = 0;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for r in &batches {
            let batch: Vec<M::Example> =
                order[r.clone()].iter().map(|&k| train[k].clone()).collect();
            let grads = {
                let mut g = Graph::new(model.store());
                let mut mode = Mode::Train {
                    rate: cfg.dropout,
                    rng: &mut rng,
                };
                let loss = model.loss(&mut g, &batch, &mut mode)?;
                total += g.value(loss).item() * batch.len() as f64;
                g.backward(loss)?
            };
            adamax_step(&mut state, model.store_mut(), &grads, cfg)?;
        }
        let train_loss = total / train.len() as f64;
        let metric = model.metric(monitor, cfg.batch_size)?;
        info!("epoch {epoch}: loss {train_loss:.6} metric {metric:.4}");
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            metric,
        });
        if metric > best_metric {
            best_metric = metric;
            best = model.clone();
            history.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                info!("stopping after {stale} epochs without improvement");
                break;
            }
        }
    }
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_determinism() {
        let data: Vec<u32> = (0..100).collect();
        let (tr, va) = split_train_val(&data, 0.05, 7).unwrap();
        assert_eq!((tr.len(), va.len()), (95, 5));
        let (tr2, va2) = split_train_val(&data, 0.05, 7).unwrap();
        assert_eq!((tr.clone(), va.clone()), (tr2, va2));
        let mut all: Vec<u32> = tr.into_iter().chain(va).collect();
        all.sort();
        assert_eq!(all, data);
        assert!(split_train_val::<u32>(&[], 0.05, 0).is_err());
        assert!(split_train_val(&data, 0.0, 0).is_err());
    }

    #[test]
    fn batch_tail_merging() {
        assert_eq!(batch_ranges(10, 4, 2).unwrap(), vec![0..4, 4..8, 8..10]);
        assert_eq!(batch_ranges(9, 4, 2).unwrap(), vec![0..4, 4..9]);
        assert_eq!(batch_ranges(9, 4, 1).unwrap(), vec![0..4, 4..8, 8..9]);
        assert_eq!(batch_ranges(3, 1, 2).unwrap(), vec![0..3]);
        assert!(batch_ranges(1, 4, 2).is_err());
    }

    #[test]
    fn config_round_trips_through_entries() {
        let mut cfg = TrainConfig {
            lr: 0.01,
            seed: 42,
            ..TrainConfig::default()
        };
        cfg.batch_size = 30;
        let mut back = TrainConfig::default();
        for (k, v) in cfg.entries() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, cfg);
        assert!(back.set("momentum", "0.5").is_err());
        assert!(back.set("lr", "fast").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        for (k, v) in [
            ("lr", "0"),
            ("dropout", "1"),
            ("val_fraction", "0.6"),
            ("batch_size", "0"),
            ("beta2", "1"),
        ] {
            let mut cfg = TrainConfig::default();
            cfg.set(k, v).unwrap();
            assert!(cfg.validate().is_err(), "{k}={v}");
        }
        TrainConfig::default().validate().unwrap();
    }
}
