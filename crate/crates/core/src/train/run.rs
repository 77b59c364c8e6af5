use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::data::{Dataset, PatchSampler, Prefetcher};
use crate::error::{Error, Result};
use crate::eval::{evaluate_pairs, EnsembleMode};

use super::checkpoint::Checkpoint;
use super::config::lr_schedule;
use super::step::train_step;

pub const LOG_FILE: &str = "train.log";
pub const FINAL_CHECKPOINT: &str = "final.fc2n";
const SAMPLER_SALT: u64 = 0xda7a_5eed;

/// One line of the training log. `step` counts completed updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRecord {
    pub step: u64,
    pub loss: f64,
    pub lr: f64,
    pub val_psnr: Option<f64>,
}

impl fmt::Display for LogRecord {
    /// `step<TAB>loss<TAB>lr<TAB>val_psnr`, the last field empty when absent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:.8}\t{:e}\t", self.step, self.loss, self.lr)?;
        match self.val_psnr {
            Some(p) => write!(f, "{p:.4}"),
            None => Ok(()),
        }
    }
}

pub fn checkpoint_path(out_dir: &Path, step: u64) -> PathBuf {
    out_dir.join(format!("checkpoint_{step:08}.fc2n"))
}

/// Where a training run reads and writes.
#[derive(Clone, Debug)]
pub struct TrainData<'a> {
    pub train: Arc<Dataset>,
    /// Held-out images scored on full frames, ensemble off.
    pub validation: Option<&'a Dataset>,
    /// Checkpoints and `train.log`; nothing is written when `None`.
    pub out_dir: Option<&'a Path>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Every update of this run, in order.
    pub steps: Vec<LogRecord>,
    /// Summaries every `validate_every` steps plus one for the final state;
    /// `loss` is the mean training loss since the previous summary.
    pub records: Vec<LogRecord>,
}

/// Mean validation Y-PSNR of the checkpoint's model.
pub fn validate(ckpt: &Checkpoint, data: &Dataset) -> Result<f64> {
    Ok(evaluate_pairs(&ckpt.model, data, "validation", EnsembleMode::None, None)?.mean_psnr)
}

/// Runs the remaining `start.step..total_steps` updates.
///
/// Batches depend only on the seed and the step, so resuming from any saved
/// checkpoint replays exactly what the uninterrupted run would have done.
pub fn train_loop(start: Checkpoint, data: TrainData<'_>) -> Result<TrainOutcome> {
    train_loop_with(start, data, |_| {})
}

/// [`train_loop`] with a callback for every summary record.
pub fn train_loop_with(
    start: Checkpoint,
    data: TrainData<'_>,
    mut on_record: impl FnMut(&LogRecord),
) -> Result<TrainOutcome> {
    let mut ckpt = start;
    let cfg = ckpt.train;
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::EmptyDataset("training set has no images".into()));
    }
    if data.train.scale != ckpt.scale() {
        return Err(Error::ScaleMismatch {
            checkpoint: ckpt.scale(),
            requested: data.train.scale,
        });
    }
    if ckpt.step > cfg.total_steps {
        return Err(Error::Config(format!(
            "checkpoint is at step {} but total_steps is {}",
            ckpt.step, cfg.total_steps
        )));
    }

    let mut log = match data.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            Some(open_log(dir, ckpt.step)?)
        }
        None => None,
    };

    let sampler = PatchSampler::new(
        data.train.clone(),
        cfg.patch_size,
        cfg.batch_size,
        cfg.seed ^ SAMPLER_SALT,
    )?;
    let first = ckpt.step;
    let batches = Prefetcher::spawn(sampler, first, cfg.total_steps, cfg.workers, 2 * cfg.workers);
    let mut hyper = ckpt.adam();

    let mut steps = Vec::new();
    let mut records = Vec::new();
    let mut since_record = Vec::new();
    for (i, batch) in (first..cfg.total_steps).zip(batches) {
        let batch = batch?;
        hyper.lr = lr_schedule(i, &cfg);
        let loss = train_step(&mut ckpt.model, &batch, &mut hyper, i)?;
        ckpt.step = i + 1;
        since_record.push(loss);

        let mut record = LogRecord {
            step: ckpt.step,
            loss,
            lr: hyper.lr,
            val_psnr: None,
        };
        let is_last = ckpt.step == cfg.total_steps;
        let periodic = ckpt.step % cfg.validate_every == 0;
        let mut summary = None;
        if periodic || is_last {
            let val_psnr = data.validation.map(|v| validate(&ckpt, v)).transpose()?;
            record.val_psnr = val_psnr;
            summary = Some(LogRecord {
                loss: since_record.iter().sum::<f64>() / since_record.len() as f64,
                ..record
            });
            since_record.clear();
        }
        if let Some(f) = log.as_mut() {
            writeln!(f, "{record}").map_err(|e| Error::io(LOG_FILE, e))?;
        }
        steps.push(record);
        if let Some(s) = summary {
            if periodic {
                records.push(s);
                on_record(&s);
            }
            if is_last {
                records.push(s);
                on_record(&s);
            }
        }
        if let Some(dir) = data.out_dir {
            if ckpt.step % cfg.checkpoint_every == 0 {
                ckpt.save(checkpoint_path(dir, ckpt.step))?;
            }
        }
    }
    if steps.len() as u64 != cfg.total_steps - first {
        return Err(Error::Argument("batch producer stopped early".into()));
    }
    if let Some(dir) = data.out_dir {
        ckpt.save(dir.join(FINAL_CHECKPOINT))?;
    }
    Ok(TrainOutcome {
        checkpoint: ckpt,
        steps,
        records,
    })
}

/// Opens `train.log` for appending, dropping lines past `step` left by an
/// earlier run that went further than the checkpoint being resumed.
fn open_log(dir: &Path, step: u64) -> Result<fs::File> {
    let path = dir.join(LOG_FILE);
    let kept: String = match fs::read_to_string(&path) {
        Ok(text) => text
            .lines()
            .filter(|l| {
                l.split('\t')
                    .next()
                    .and_then(|s| s.parse::<u64>().ok())
                    .is_some_and(|s| s <= step)
            })
            .map(|l| format!("{l}\n"))
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(Error::io(&path, e)),
    };
    fs::write(&path, kept).map_err(|e| Error::io(&path, e))?;
    fs::OpenOptions::new()
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))
}
