use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::image::{load_image, ImageRGB};
use super::patch::{extract_patch_pair, random_augment, PatchPair};
use super::resize::downscale;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pnm"];

/// One HR image with its LR counterpart.
#[derive(Clone, Debug)]
pub struct ImagePair {
    pub name: String,
    pub hr: ImageRGB,
    pub lr: ImageRGB,
}

impl ImagePair {
    /// Crops `hr` to a multiple of `scale` and synthesises an 8-bit LR image
    /// with antialiased bicubic downscaling.
    pub fn synthesize(name: impl Into<String>, hr: &ImageRGB, scale: usize) -> Result<Self> {
        let hr = hr.crop_to_multiple(scale)?;
        let lr = downscale(&hr, scale, true)?.quantize();
        Ok(ImagePair {
            name: name.into(),
            hr,
            lr,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub scale: usize,
    pub pairs: Vec<ImagePair>,
}

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// LR counterpart of `hr_path` under the `{stem}x{scale}.{ext}` convention.
pub fn paired_lr_path(lr_dir: &Path, hr_path: &Path, scale: usize) -> Option<PathBuf> {
    let stem = hr_path.file_stem()?.to_str()?;
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| lr_dir.join(format!("{stem}x{scale}.{ext}")))
        .find(|p| p.is_file())
}

impl Dataset {
    pub fn from_hr_images(images: Vec<(String, ImageRGB)>, scale: usize) -> Result<Self> {
        let pairs = images
            .iter()
            .map(|(name, hr)| ImagePair::synthesize(name.clone(), hr, scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { scale, pairs })
    }

    /// Loads every image in `hr_dir`. LR images come from `lr_dir` when
    /// given (and must be exactly `1/scale` of the cropped HR size),
    /// otherwise they are synthesised.
    pub fn load_dir(hr_dir: impl AsRef<Path>, lr_dir: Option<&Path>, scale: usize) -> Result<Self> {
        let hr_dir = hr_dir.as_ref();
        let files = list_images(hr_dir)?;
        if files.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "no PNG/PPM images in {}",
                hr_dir.display()
            )));
        }
        let mut pairs = Vec::with_capacity(files.len());
        for path in files {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            let hr = load_image(&path)?;
            let pair = match lr_dir {
                Some(dir) => {
                    let lr_path = paired_lr_path(dir, &path, scale).ok_or_else(|| {
                        Error::EmptyDataset(format!(
                            "no x{scale} LR image for {name} in {}",
                            dir.display()
                        ))
                    })?;
                    let lr = load_image(&lr_path)?;
                    let hr = hr.crop(0, 0, lr.height() * scale, lr.width() * scale)?;
                    ImagePair { name, hr, lr }
                }
                None => ImagePair::synthesize(name, &hr, scale)?,
            };
            pairs.push(pair);
        }
        Ok(Dataset { scale, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Draws training batches as a pure function of `(seed, step)`.
///
/// Each step gets its own ChaCha stream, so any worker can produce any step
/// and a resumed run sees exactly the batches the uninterrupted run would.
#[derive(Clone, Debug)]
pub struct PatchSampler {
    dataset: Arc<Dataset>,
    eligible: Vec<usize>,
    pub patch: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub augment: bool,
}

impl PatchSampler {
    pub fn new(dataset: Arc<Dataset>, patch: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Argument("batch size must be >= 1".into()));
        }
        let eligible: Vec<usize> = dataset
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.lr.height() >= patch && p.lr.width() >= patch)
            .map(|(i, _)| i)
            .collect();
        if eligible.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "no training image holds a {patch}x{patch} LR patch"
            )));
        }
        Ok(PatchSampler {
            dataset,
            eligible,
            patch,
            batch_size,
            seed,
            augment: true,
        })
    }

    pub fn scale(&self) -> usize {
        self.dataset.scale
    }

    pub fn batch(&self, step: u64) -> Result<Vec<PatchPair>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        (0..self.batch_size)
            .map(|_| {
                let idx = self.eligible[rng.random_range(0..self.eligible.len())];
                let pair = &self.dataset.pairs[idx];
                let patch =
                    extract_patch_pair(&pair.hr, &pair.lr, self.patch, self.dataset.scale, &mut rng)?;
                Ok(if self.augment {
                    random_augment(&patch, &mut rng)
                } else {
                    patch
                })
            })
            .collect()
    }
}

/// Background batch producer with a bounded queue.
///
/// Worker `w` of `W` produces steps `start + w`, `start + w + W`, ...;
/// batches are handed out strictly in step order.
pub struct Prefetcher {
    rx: Receiver<(u64, Result<Vec<PatchPair>>)>,
    pending: BTreeMap<u64, Result<Vec<PatchPair>>>,
    next: u64,
    end: u64,
    workers: Vec<thread::JoinHandle<()>>,
}

impl Prefetcher {
    /// Produces batches for steps in `start..end`.
    pub fn spawn(sampler: PatchSampler, start: u64, end: u64, workers: usize, capacity: usize) -> Self {
        let workers = workers.max(1);
        let (tx, rx) = sync_channel(capacity.max(1));
        let handles = (0..workers)
            .map(|w| {
                let tx = tx.clone();
                let sampler = sampler.clone();
                thread::spawn(move || {
                    let mut step = start + w as u64;
                    while step < end {
                        if tx.send((step, sampler.batch(step))).is_err() {
                            return;
                        }
                        step += workers as u64;
                    }
                })
            })
            .collect();
        Prefetcher {
            rx,
            pending: BTreeMap::new(),
            next: start,
            end,
            workers: handles,
        }
    }
}

impl Iterator for Prefetcher {
    type Item = Result<Vec<PatchPair>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        loop {
            if let Some(b) = self.pending.remove(&self.next) {
                self.next += 1;
                return Some(b);
            }
            match self.rx.recv() {
                Ok((step, batch)) => {
                    self.pending.insert(step, batch);
                }
                Err(_) => return None,
            }
        }
    }
}

impl Drop for Prefetcher {
    fn drop(&mut self) {
        // unblock workers waiting on a full queue
        while self.rx.try_recv().is_ok() {}
        let (_, dead) = sync_channel(0);
        self.rx = dead;
        for h in self.workers.drain(..) {
            let _ = h.join();
        }
    }
}
