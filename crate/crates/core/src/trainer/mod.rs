//! The training loop.
//!
//! Each epoch shuffles the dataset into class-stratified batches. For every
//! batch the model encodes the images, draws `L` relaxed spike-and-slab
//! samples, evaluates `recon + kl + λ·jsd` with `λ` from the schedule, backs
//! the gradient out through decoder, sampler and encoder, and takes one Adam
//! step.
//!
//! Randomness is keyed by `(seed, purpose, epoch, batch)`, so a run resumed
//! from a checkpoint replays exactly the draws an uninterrupted run makes.

mod checkpoint;
mod config;
mod log;
mod objective;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, RngState, FORMAT_VERSION};
pub use config::TrainConfig;
pub use log::{EpochRecord, TrainingLog, LOG_HEADER};
pub use objective::{batch_objective, ObjectiveSettings};

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::data::{make_batches, BatchPlan, DataError, LabeledDataset};
use crate::losses::{ClassPairs, LossBreakdown, LossError};
use crate::model::{ModelError, VscModel};
use crate::nn::rng::{Purpose, RngStream};
use crate::nn::{AdamConfig, AdamState, NnError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {breakdown:?}")]
    NonFiniteLoss {
        epoch: u32,
        batch: usize,
        breakdown: LossBreakdown,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("malformed training log: {0}")]
    BadLog(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TrainError {
    /// Whether the error is a numeric abort (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. } | TrainError::Nn(NnError::NonFiniteGradient { .. })
        )
    }
}

fn adam_config(config: &TrainConfig) -> AdamConfig {
    AdamConfig {
        lr: config.learning_rate,
        ..AdamConfig::default()
    }
}

/// Runs one epoch over `plan`, updating `model` and `adam` in place.
pub fn train_epoch(
    model: &mut VscModel,
    adam: &mut AdamState,
    dataset: &LabeledDataset,
    plan: &BatchPlan,
    config: &TrainConfig,
    epoch: u32,
) -> Result<EpochRecord, TrainError> {
    let started = Instant::now();
    let settings = ObjectiveSettings {
        temperature: config.model.temperature.at(epoch),
        lambda: config.sched.at(epoch),
        mc_samples: config.mc_samples,
    };
    let mut elbo_sum = 0.0;
    let mut jsd_sum = 0.0;
    let mut seen = 0usize;
    for (b, indices) in plan.iter().enumerate() {
        let x = dataset.images().select_rows(indices);
        let labels: Vec<u8> = indices.iter().map(|&i| dataset.labels()[i]).collect();
        let mut pair_rng = RngStream::for_purpose(config.seed, Purpose::Pairs, u64::from(epoch), b as u64);
        let pairs = ClassPairs::capped(&labels, config.max_pairs_per_class, &mut pair_rng);
        let mut noise = RngStream::for_purpose(config.seed, Purpose::Noise, u64::from(epoch), b as u64);

        model.params_mut().zero_grads();
        let breakdown = batch_objective(model, &x, &pairs, &mut noise, settings, true)?;
        if !breakdown.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                epoch,
                batch: b,
                breakdown,
            });
        }
        adam.step(model.params_mut())?;

        let n = indices.len() as f64;
        elbo_sum += breakdown.neg_elbo() * n;
        jsd_sum += breakdown.jsd * n;
        seen += indices.len();
    }
    let n = seen.max(1) as f64;
    Ok(EpochRecord {
        epoch,
        neg_elbo: elbo_sum / n,
        jsd: jsd_sum / n,
        lambda: settings.lambda,
        temperature: settings.temperature,
        wall_time_s: if config.record_wall_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

/// A resumable training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    model: VscModel,
    adam: AdamState,
    epoch: u32,
    log: TrainingLog,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self, TrainError> {
        config.validate().map_err(TrainError::InvalidConfig)?;
        let model = VscModel::new(config.model, config.seed)?;
        let adam = AdamState::new(adam_config(&config), model.params());
        Ok(Trainer {
            config,
            model,
            adam,
            epoch: 0,
            log: TrainingLog::default(),
        })
    }

    /// Continues from a checkpoint. The log starts empty; callers that want
    /// the full history prepend the saved one.
    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self, TrainError> {
        ckpt.config.validate().map_err(TrainError::InvalidConfig)?;
        if ckpt.rng.seed != ckpt.config.seed || ckpt.rng.next_epoch != ckpt.epoch + 1 {
            return Err(CheckpointError::CorruptPayload("rng state disagrees with epoch or seed".into()).into());
        }
        let model = VscModel::from_params(ckpt.config.model, ckpt.params)?;
        Ok(Trainer {
            config: ckpt.config,
            model,
            adam: ckpt.adam,
            epoch: ckpt.epoch,
            log: TrainingLog::default(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Overrides the epoch budget, e.g. to extend a resumed run.
    pub fn set_epochs(&mut self, epochs: u32) {
        self.config.epochs = epochs;
    }

    pub fn model(&self) -> &VscModel {
        &self.model
    }

    pub fn epochs_done(&self) -> u32 {
        self.epoch
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.config.epochs
    }

    pub fn log(&self) -> &TrainingLog {
        &self.log
    }

    pub fn run_epoch(&mut self, dataset: &LabeledDataset) -> Result<EpochRecord, TrainError> {
        let epoch = self.epoch + 1;
        let plan = make_batches(
            dataset,
            self.config.batch_size,
            self.config.shuffle_seed(epoch),
            self.config.class_min_pairs,
        )?;
        let record = train_epoch(&mut self.model, &mut self.adam, dataset, &plan, &self.config, epoch)?;
        self.epoch = epoch;
        self.log.push(record);
        ::log::debug!(
            "epoch {epoch}: neg_elbo {:.3} jsd {:.4} lambda {:.3} c {:.1}",
            record.neg_elbo,
            record.jsd,
            record.lambda,
            record.temperature
        );
        Ok(record)
    }

    /// Runs epochs until `epoch` have been completed (or the budget is hit).
    pub fn run_until(&mut self, dataset: &LabeledDataset, epoch: u32) -> Result<(), TrainError> {
        while self.epoch < epoch.min(self.config.epochs) {
            self.run_epoch(dataset)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            epoch: self.epoch,
            params: self.model.params().clone(),
            adam: self.adam.clone(),
            rng: RngState {
                seed: self.config.seed,
                next_epoch: self.epoch + 1,
            },
        }
    }

    pub fn into_model(self) -> VscModel {
        self.model
    }
}

/// Trains for `config.epochs` epochs.
///
/// With `out_dir`, writes `checkpoint.bin` every `checkpoint_every` epochs
/// and at the end, and `log.csv` alongside each checkpoint.
pub fn train(
    config: TrainConfig,
    dataset: &LabeledDataset,
    out_dir: Option<&Path>,
) -> Result<(Checkpoint, TrainingLog), TrainError> {
    let mut trainer = Trainer::new(config)?;
    run_to_end(&mut trainer, dataset, out_dir, &TrainingLog::default())?;
    let log = trainer.log.clone();
    Ok((trainer.checkpoint(), log))
}

/// Finishes a (possibly resumed) run, persisting as [`train`] does. `prior`
/// is prepended to the log written to disk.
pub fn run_to_end(
    trainer: &mut Trainer,
    dataset: &LabeledDataset,
    out_dir: Option<&Path>,
    prior: &TrainingLog,
) -> Result<(), TrainError> {
    let persist = |t: &Trainer| -> Result<(), TrainError> {
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir).map_err(|source| TrainError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            save_checkpoint(&dir.join("checkpoint.bin"), &t.checkpoint())?;
            let mut full = prior.clone();
            full.records.extend(t.log.records.iter().copied());
            full.save(&dir.join("log.csv"))?;
        }
        Ok(())
    };
    while !trainer.is_finished() {
        trainer.run_epoch(dataset)?;
        let every = trainer.config.checkpoint_every;
        if every > 0 && trainer.epoch.is_multiple_of(every) && !trainer.is_finished() {
            persist(trainer)?;
        }
    }
    persist(trainer)
}

/// Mean objective over a dataset without updating the model, using the
/// evaluation noise streams.
pub fn evaluate(
    model: &VscModel,
    dataset: &LabeledDataset,
    config: &TrainConfig,
    epoch: u32,
) -> Result<LossBreakdown, TrainError> {
    let settings = ObjectiveSettings {
        temperature: config.model.temperature.at(epoch),
        lambda: config.sched.at(epoch),
        mc_samples: config.mc_samples,
    };
    let mut scratch = model.clone();
    let order: Vec<usize> = (0..dataset.len()).collect();
    let (mut recon, mut kl, mut jsd, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (b, indices) in order.chunks(config.batch_size).enumerate() {
        let x = dataset.images().select_rows(indices);
        let labels: Vec<u8> = indices.iter().map(|&i| dataset.labels()[i]).collect();
        let pairs = ClassPairs::all(&labels);
        let mut rng = RngStream::for_purpose(config.seed, Purpose::Eval, u64::from(epoch), b as u64);
        let br = batch_objective(&mut scratch, &x, &pairs, &mut rng, settings, false)?;
        let w = indices.len() as f64;
        recon += br.recon * w;
        kl += br.kl * w;
        jsd += br.jsd * w;
        n += indices.len();
    }
    let n = n.max(1) as f64;
    Ok(LossBreakdown::new(recon / n, kl / n, jsd / n, settings.lambda))
}
