use crate::autograd::Tape;
use crate::data::{ImageRGB, PatchPair};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::optim::{adam_step, AdamHyper};
use crate::tensor::{Element, Tensor4};

/// Stacks LR and HR patches into `[N, p, p, 3]` and `[N, sp, sp, 3]` tensors in [0, 1].
pub fn batch_tensors<T: Element>(batch: &[PatchPair], scale: usize) -> Result<(Tensor4<T>, Tensor4<T>)> {
    if batch.is_empty() {
        return Err(Error::Argument("empty training batch".into()));
    }
    for p in batch {
        let (h, w) = p.lr.dims();
        if p.hr.dims() != (h * scale, w * scale) {
            return Err(Error::dim(format!(
                "patch pair {h}x{w} -> {}x{} does not match model scale x{scale}",
                p.hr.height(),
                p.hr.width()
            )));
        }
    }
    let lr: Vec<&ImageRGB> = batch.iter().map(|p| &p.lr).collect();
    let hr: Vec<&ImageRGB> = batch.iter().map(|p| &p.hr).collect();
    Ok((ImageRGB::batch_to_tensor(&lr)?, ImageRGB::batch_to_tensor(&hr)?))
}

/// One optimisation step: forward, mean L1 loss, backward, Adam update.
///
/// Returns the loss measured before the update. A non-finite loss or
/// gradient aborts without touching the parameters. `step` is only used in
/// the diagnostics.
pub fn train_step<T: Element>(
    model: &mut Model<T>,
    batch: &[PatchPair],
    hyper: &mut AdamHyper,
    step: u64,
) -> Result<f64> {
    let (lr, hr) = batch_tensors::<T>(batch, model.scale())?;
    model.params.zero_grads();
    let mut tape = Tape::new();
    let pred = model.forward_tape(&mut tape, lr)?;
    let target = tape.input(hr);
    let loss_var = tape.l1_loss(pred, target)?;
    let loss = tape.value(loss_var).item()?.as_f64();
    tape.backward(loss_var, &mut model.params)?;
    drop(tape);

    let (grad_norm, worst_param) = model.params.grad_norm();
    if !loss.is_finite() || !grad_norm.is_finite() {
        model.params.zero_grads();
        return Err(Error::NonFiniteLoss {
            step,
            lr: hyper.lr,
            grad_norm,
            worst_param,
        });
    }
    adam_step(&mut model.params, hyper);
    Ok(loss)
}
