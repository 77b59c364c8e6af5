//! Flat `key = value` run description shared by the CLI and checkpoints.
//!
//! Blank lines and lines starting with `#` are ignored. Missing keys keep the
//! lightweight preset and the [`TrainConfig`] defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, SkipMode};
use crate::train::TrainConfig;

pub const KEYS: [&str; 21] = [
    "n",
    "m",
    "base_width",
    "expand_width",
    "scale",
    "weighted_wgff",
    "weighted_cg",
    "weighted_cb",
    "skip_mode",
    "batch_size",
    "patch_size",
    "lr_init",
    "lr_halve_every",
    "total_steps",
    "seed",
    "checkpoint_every",
    "validate_every",
    "workers",
    "data_dir",
    "val_dir",
    "out_dir",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data_dir: Option<PathBuf>,
    pub val_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::lightweight(2),
            train: TrainConfig::default(),
            data_dir: None,
            val_dir: None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

fn parse_num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid number"))
}

/// Integer that may be written in float notation, e.g. `4.0e5`.
fn parse_count(value: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = value.parse::<u64>() {
        return Ok(v);
    }
    match value.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 => Ok(f as u64),
        _ => Err(format!("`{value}` is not a non-negative integer")),
    }
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean")),
    }
}

impl RunConfig {
    /// Parses the whole text, reporting every bad line at once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut problems = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {lineno}: expected `key = value`"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                problems.push(format!("line {lineno}: unknown key `{key}`"));
                continue;
            }
            if seen.contains(&key) {
                problems.push(format!("line {lineno}: duplicate key `{key}`"));
                continue;
            }
            seen.push(key);
            if let Err(msg) = cfg.set(key, value) {
                problems.push(format!("line {lineno}: {key}: {msg}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        cfg.train.scale = cfg.model.scale;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "n" => m.n = parse_num(value)?,
            "m" => m.m = parse_num(value)?,
            "base_width" => m.base_width = parse_num(value)?,
            "expand_width" => m.expand_width = parse_num(value)?,
            "scale" => m.scale = parse_num(value)?,
            "weighted_wgff" => m.weighted_wgff = parse_bool(value)?,
            "weighted_cg" => m.weighted_cg = parse_bool(value)?,
            "weighted_cb" => m.weighted_cb = parse_bool(value)?,
            "skip_mode" => m.skip_mode = value.parse::<SkipMode>().map_err(|e| strip_prefix(&e))?,
            "batch_size" => t.batch_size = parse_num(value)?,
            "patch_size" => t.patch_size = parse_num(value)?,
            "lr_init" => t.lr_init = parse_num(value)?,
            "lr_halve_every" => t.lr_halve_every = parse_count(value)?,
            "total_steps" => t.total_steps = parse_count(value)?,
            "seed" => t.seed = parse_num(value)?,
            "checkpoint_every" => t.checkpoint_every = parse_count(value)?,
            "validate_every" => t.validate_every = parse_count(value)?,
            "workers" => t.workers = parse_num(value)?,
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "val_dir" => self.val_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.train.scale != self.model.scale {
            return Err(Error::Config(format!(
                "training scale x{} differs from model scale x{}",
                self.train.scale, self.model.scale
            )));
        }
        Ok(())
    }

    /// Model and optimisation keys only; paths are left out so the text is
    /// portable between machines.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let t = &self.train;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n", m.n.to_string());
        kv("m", m.m.to_string());
        kv("base_width", m.base_width.to_string());
        kv("expand_width", m.expand_width.to_string());
        kv("scale", m.scale.to_string());
        kv("weighted_wgff", m.weighted_wgff.to_string());
        kv("weighted_cg", m.weighted_cg.to_string());
        kv("weighted_cb", m.weighted_cb.to_string());
        kv("skip_mode", m.skip_mode.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("patch_size", t.patch_size.to_string());
        // `{:e}` round-trips f64 exactly
        kv("lr_init", format!("{:e}", t.lr_init));
        kv("lr_halve_every", t.lr_halve_every.to_string());
        kv("total_steps", t.total_steps.to_string());
        kv("seed", t.seed.to_string());
        kv("checkpoint_every", t.checkpoint_every.to_string());
        kv("validate_every", t.validate_every.to_string());
        kv("workers", t.workers.to_string());
        s
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}
