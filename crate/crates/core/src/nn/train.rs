use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{Checkpoint, RngState};
use super::network::argmax;
use super::ops::{self, Mode};
use super::{Network, NnError, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 0.001,
            epochs: 400,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Flat storage of equally shaped inputs with class labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    item_shape: Vec<usize>,
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(item_shape: &[usize]) -> Self {
        Self {
            item_shape: item_shape.to_vec(),
            data: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, item: &[f64], label: usize) {
        assert_eq!(item.len(), self.item_len(), "item does not match set shape");
        self.data.extend_from_slice(item);
        self.labels.push(label);
    }

    pub fn item_len(&self) -> usize {
        self.item_shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn item(&self, i: usize) -> &[f64] {
        let n = self.item_len();
        &self.data[i * n..(i + 1) * n]
    }

    /// Stacks the given items into `[N, ...item_shape]`.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let mut data = Vec::with_capacity(indices.len() * self.item_len());
        for &i in indices {
            data.extend_from_slice(self.item(i));
        }
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(&self.item_shape);
        Tensor::from_vec(&shape, data).expect("batch shape is consistent")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: u64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    let mut out = format!("{EPOCH_LOG_HEADER}\n");
    for e in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
        );
    }
    out
}

/// Mean loss and accuracy in eval mode. Empty sets give NaN.
pub fn evaluate(net: &Network, set: &LabeledSet, batch_size: usize) -> Result<(f64, f64), NnError> {
    if set.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let indices: Vec<usize> = (0..set.len()).collect();
    let (mut loss_sum, mut correct) = (0.0, 0usize);
    for chunk in indices.chunks(batch_size.max(1)) {
        let logits = net.infer(&set.batch(chunk))?;
        let labels: Vec<usize> = chunk.iter().map(|&i| set.labels()[i]).collect();
        let (loss, _) = ops::softmax_cross_entropy(&logits, &ops::one_hot(&labels, net.class_count))?;
        loss_sum += loss * chunk.len() as f64;
        correct += count_correct(&logits, &labels, net.class_count);
    }
    Ok((loss_sum / set.len() as f64, correct as f64 / set.len() as f64))
}

fn count_correct(logits: &Tensor, labels: &[usize], classes: usize) -> usize {
    logits
        .data()
        .chunks_exact(classes)
        .zip(labels)
        .filter(|(z, &l)| argmax(z) == l)
        .count()
}

/// Mini-batch SGD driver. Holds the RNG used for shuffling and dropout so a
/// run can be checkpointed and resumed.
pub struct Trainer {
    pub net: Network,
    pub cfg: TrainConfig,
    rng: ChaCha8Rng,
    epoch: u64,
    log: Vec<EpochLog>,
}

impl Trainer {
    pub fn new(net: Network, cfg: TrainConfig) -> Result<Self, NnError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        // keep training draws apart from the stream used for initialization
        rng.set_stream(1);
        Ok(Self {
            net,
            cfg,
            rng,
            epoch: 0,
            log: Vec::new(),
        })
    }

    pub fn resume(ckpt: Checkpoint, cfg: TrainConfig) -> Result<Self, NnError> {
        cfg.validate()?;
        Ok(Self {
            net: ckpt.network,
            cfg,
            rng: ckpt.rng.restore(),
            epoch: ckpt.epoch,
            log: Vec::new(),
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn log(&self) -> &[EpochLog] {
        &self.log
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            network: self.net.clone(),
            epoch: self.epoch,
            rng: RngState::capture(&self.rng),
        }
    }

    /// One SGD update on the given batch; returns the batch loss and the number
    /// of correct train-mode predictions.
    pub fn step(&mut self, x: Tensor, labels: &[usize], mode: Mode) -> Result<(f64, usize), NnError> {
        let classes = self.net.class_count;
        let logits = self.net.forward(x, mode, &mut self.rng)?;
        let (loss, grad) = ops::softmax_cross_entropy(&logits, &ops::one_hot(labels, classes))?;
        let correct = count_correct(&logits, labels, classes);
        self.net.backward(&grad)?;
        self.net.sgd_step(self.cfg.learning_rate)?;
        Ok((loss, correct))
    }

    pub fn run_epoch(&mut self, train: &LabeledSet, val: &LabeledSet) -> Result<EpochLog, NnError> {
        if train.is_empty() {
            return Err(NnError::EmptySplit("train".into()));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        if self.cfg.shuffle {
            order.shuffle(&mut self.rng);
        }
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(self.cfg.batch_size) {
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels()[i]).collect();
            let (loss, ok) = self.step(train.batch(chunk), &labels, Mode::Train)?;
            loss_sum += loss * chunk.len() as f64;
            correct += ok;
        }
        let (val_loss, val_acc) = evaluate(&self.net, val, self.cfg.batch_size)?;
        self.epoch += 1;
        let entry = EpochLog {
            epoch: self.epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_loss,
            val_acc,
        };
        log::info!(
            "epoch {}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
            entry.epoch,
            entry.train_loss,
            entry.train_acc,
            entry.val_loss,
            entry.val_acc
        );
        self.log.push(entry);
        Ok(entry)
    }

    pub fn fit(&mut self, train: &LabeledSet, val: &LabeledSet) -> Result<&[EpochLog], NnError> {
        for _ in 0..self.cfg.epochs {
            self.run_epoch(train, val)?;
        }
        Ok(&self.log)
    }
}

/// Trains `net` for `cfg.epochs` epochs; returns the trained network and its log.
pub fn train(
    net: Network,
    train: &LabeledSet,
    val: &LabeledSet,
    cfg: &TrainConfig,
) -> Result<(Network, Vec<EpochLog>), NnError> {
    let mut trainer = Trainer::new(net, cfg.clone())?;
    trainer.fit(train, val)?;
    let log = trainer.log.clone();
    Ok((trainer.net, log))
}
