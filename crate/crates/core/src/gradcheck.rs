//! Central finite-difference verification of tape gradients.
//!
//! Anything that should be checked with respect to an input tensor can be
//! registered in the [`ParamStore`] like a weight; the harness treats every
//! store entry the same way.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Tape, Var};
use crate::error::Result;
use crate::param::ParamStore;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckConfig {
    /// Half-width of the central difference.
    pub step: f64,
    /// Largest accepted relative error.
    pub tolerance: f64,
    /// Coordinates probed per parameter (all of them if the tensor is smaller).
    pub samples: usize,
    /// Lower bound for the relative-error denominator.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            tolerance: 1e-4,
            samples: 10,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub probes: Vec<Probe>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&Probe> {
        self.probes
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn max_rel_error(&self) -> f64 {
        self.worst().map_or(0.0, |p| p.rel_error)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Probe> {
        self.probes.iter().filter(|p| !(p.rel_error < self.tolerance))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares the gradient of the scalar built by `loss` against central
/// differences on randomly chosen coordinates of every parameter.
///
/// `loss` must record a scalar on the supplied fresh tape. Parameter values
/// are restored exactly; gradients are left holding the analytic result.
pub fn check_gradients<F>(
    store: &mut ParamStore<f64>,
    loss: F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore<f64>, &mut Tape<f64>) -> Result<Var>,
{
    store.zero_grads();
    let mut tape = Tape::new();
    let out = loss(store, &mut tape)?;
    tape.backward(out, store)?;

    let eval = |store: &ParamStore<f64>| -> Result<f64> {
        let mut tape = Tape::new();
        let v = loss(store, &mut tape)?;
        tape.value(v).item()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut probes = Vec::new();
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let numel = store.get(id).numel();
        let picks: Vec<usize> = if numel <= cfg.samples {
            (0..numel).collect()
        } else {
            sample(&mut rng, numel, cfg.samples).into_vec()
        };
        for i in picks {
            let original = store.get(id).value.data()[i];
            store.get_mut(id).value.data_mut()[i] = original + cfg.step;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = original - cfg.step;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * cfg.step);
            let analytic = store.get(id).grad.data()[i];
            probes.push(Probe {
                param: store.get(id).name.clone(),
                index: i,
                analytic,
                numeric,
                rel_error: relative_error(analytic, numeric, cfg.floor),
            });
        }
    }
    Ok(GradCheckReport {
        probes,
        tolerance: cfg.tolerance,
    })
}
