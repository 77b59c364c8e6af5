//! The `fc2n` command line: train, eval, infer, params, downsample.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! run fails (I/O, corrupt files, non-finite loss).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::data::{downscale, load_image, save_image, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate_dataset, super_resolve, BicubicUpscaler, EnsembleMode, Upscaler};
use crate::model::{build_model, compute_multiadds, count_params, ModelConfig};
use crate::train::{train_loop_with, Checkpoint, TrainData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const THREADS_ENV: &str = "FC2N_THREADS";

/// Checkpoint argument of `eval` that selects the interpolation baseline.
pub const BICUBIC_CKPT: &str = "bicubic";

#[derive(Parser, Debug)]
#[command(name = "fc2n", version, about = "Concat-in-concat super-resolution networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train from a key=value run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a checkpoint (or `bicubic`) on a directory of HR images.
    Eval {
        #[arg(long)]
        ckpt: String,
        /// Directory of HR images.
        #[arg(long)]
        data: PathBuf,
        /// Paired LR images named `<stem>x<scale>.<ext>`; synthesised when absent.
        #[arg(long)]
        lr_dir: Option<PathBuf>,
        #[arg(long)]
        scale: usize,
        #[arg(long, default_value = "none")]
        ensemble: EnsembleMode,
        /// Border pixels ignored by the metrics; defaults to the scale.
        #[arg(long)]
        shave: Option<usize>,
        /// CSV destination; defaults to `eval_<dataset>_x<scale>_<ensemble>.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Super-resolve one image.
    Infer {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "none")]
        ensemble: EnsembleMode,
    },
    /// Print parameter count and MultiAdds at 720p.
    Params {
        #[arg(long)]
        config: PathBuf,
    },
    /// Make a bicubic LR image.
    Downsample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: usize,
        #[arg(long)]
        no_antialias: bool,
        /// Defaults to `<stem>x<scale>.png` beside the input.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Argument(_) | Error::ScaleMismatch { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // a pool that already exists (repeated in-process runs) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train { config, resume } => cmd_train(&config, resume.as_deref()),
        Command::Eval {
            ckpt,
            data,
            lr_dir,
            scale,
            ensemble,
            shave,
            csv,
        } => cmd_eval(&ckpt, &data, lr_dir.as_deref(), scale, ensemble, shave, csv.as_deref()),
        Command::Infer {
            ckpt,
            input,
            output,
            ensemble,
        } => cmd_infer(&ckpt, &input, &output, ensemble),
        Command::Params { config } => cmd_params(&config),
        Command::Downsample {
            input,
            scale,
            no_antialias,
            output,
        } => cmd_downsample(&input, scale, !no_antialias, output.as_deref()),
    }
}

pub fn cmd_train(config: &Path, resume: Option<&Path>) -> Result<()> {
    let run = RunConfig::load(config)?;
    run.validate()?;
    let data_dir = run
        .data_dir
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{}: missing required key `data_dir`", config.display())))?;

    let start = match resume {
        Some(path) => {
            let mut ckpt = Checkpoint::load(path)?;
            if ckpt.model.config != run.model {
                return Err(Error::Config(format!(
                    "{} was trained with a different architecture than {}",
                    path.display(),
                    config.display()
                )));
            }
            if ckpt.step > run.train.total_steps {
                return Err(Error::Config(format!(
                    "{} is at step {}, beyond total_steps = {}",
                    path.display(),
                    ckpt.step,
                    run.train.total_steps
                )));
            }
            ckpt.train = run.train;
            ckpt
        }
        None => Checkpoint::new(build_model(run.model, run.train.seed)?, run.train),
    };
    let scale = run.model.scale;
    let train = Arc::new(Dataset::load_dir(data_dir, None, scale)?);
    let validation = run
        .val_dir
        .as_deref()
        .map(|dir| Dataset::load_dir(dir, None, scale))
        .transpose()?;

    println!(
        "training {} ({} parameters) on {} images, steps {}..{}",
        describe(&run.model),
        start.model.num_params(),
        train.len(),
        start.step,
        run.train.total_steps
    );
    let outcome = train_loop_with(
        start,
        TrainData {
            train,
            validation: validation.as_ref(),
            out_dir: Some(&run.out_dir),
        },
        |r| match r.val_psnr {
            Some(p) => println!("step {:>8}  loss {:.6}  lr {:.3e}  val {:.3} dB", r.step, r.loss, r.lr, p),
            None => println!("step {:>8}  loss {:.6}  lr {:.3e}", r.step, r.loss, r.lr),
        },
    )?;
    println!(
        "finished at step {}; checkpoints and log in {}",
        outcome.checkpoint.step,
        run.out_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_eval(
    ckpt: &str,
    data: &Path,
    lr_dir: Option<&Path>,
    scale: usize,
    mode: EnsembleMode,
    shave: Option<usize>,
    csv: Option<&Path>,
) -> Result<()> {
    let model: Box<dyn Upscaler> = if ckpt == BICUBIC_CKPT {
        if scale == 0 {
            return Err(Error::Argument("scale must be >= 1".into()));
        }
        Box::new(BicubicUpscaler { scale })
    } else {
        let c = Checkpoint::load(ckpt)?;
        if c.scale() != scale {
            return Err(Error::ScaleMismatch {
                checkpoint: c.scale(),
                requested: scale,
            });
        }
        Box::new(c.model)
    };
    let report = evaluate_dataset(model.as_ref(), data, lr_dir, scale, mode, shave)?;
    print!("{}", report.to_table());
    let csv_path = csv.map(Path::to_path_buf).unwrap_or_else(|| {
        PathBuf::from(format!(
            "eval_{}_x{}_{}.csv",
            report.dataset,
            scale,
            mode.to_string().replace('+', "_")
        ))
    });
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn cmd_infer(ckpt: &Path, input: &Path, output: &Path, mode: EnsembleMode) -> Result<()> {
    let ckpt = Checkpoint::load(ckpt)?;
    let lr = load_image(input)?;
    let sr = super_resolve(&ckpt.model, &lr, mode)?;
    save_image(&sr, output)?;
    println!(
        "{}x{} -> {}x{} written to {}",
        lr.height(),
        lr.width(),
        sr.height(),
        sr.width(),
        output.display()
    );
    Ok(())
}

/// Output frame used for MultiAdds.
pub const REFERENCE_HEIGHT: usize = 720;
pub const REFERENCE_WIDTH: usize = 1280;

pub fn cmd_params(config: &Path) -> Result<()> {
    let run = RunConfig::load(config)?;
    run.model.validate()?;
    let params = count_params(&run.model);
    let mult_adds = compute_multiadds(&run.model, REFERENCE_HEIGHT, REFERENCE_WIDTH);
    println!("model: {}", describe(&run.model));
    println!("params: {params} ({})", human_count(params as f64));
    println!(
        "multiadds@{REFERENCE_WIDTH}x{REFERENCE_HEIGHT}: {mult_adds} ({:.1}G)",
        mult_adds as f64 / 1e9
    );
    Ok(())
}

pub fn cmd_downsample(input: &Path, scale: usize, antialias: bool, output: Option<&Path>) -> Result<()> {
    if scale == 0 {
        return Err(Error::Argument("scale must be >= 1".into()));
    }
    let output = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Argument(format!("bad input path {}", input.display())))?;
            input.with_file_name(format!("{stem}x{scale}.png"))
        }
    };
    let hr = load_image(input)?.crop_to_multiple(scale)?;
    let lr = downscale(&hr, scale, antialias)?.quantize();
    save_image(&lr, &output)?;
    println!(
        "{}x{} -> {}x{} written to {}",
        hr.height(),
        hr.width(),
        lr.height(),
        lr.width(),
        output.display()
    );
    Ok(())
}

fn describe(m: &ModelConfig) -> String {
    format!(
        "n={} m={} widths {}/{} x{} [{}]",
        m.n,
        m.m,
        m.base_width,
        m.expand_width,
        m.scale,
        m.variant_name()
    )
}

/// `1,314K` below five million, `9.82M` above.
pub fn human_count(v: f64) -> String {
    if v >= 5e6 {
        format!("{:.2}M", v / 1e6)
    } else {
        let k = (v / 1e3).round() as u64;
        if k >= 1000 {
            format!("{},{:03}K", k / 1000, k % 1000)
        } else {
            format!("{k}K")
        }
    }
}
