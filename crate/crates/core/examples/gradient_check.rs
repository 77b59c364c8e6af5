//! Central finite differences against the tape on a whole tiny network.

use fc2n::autograd::{Graph, Recorder};
use fc2n::gradcheck::{check_gradients, GradCheckConfig};
use fc2n::model::{build_model, ModelConfig};
use fc2n::tensor::{Shape, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fc2n::Result<()> {
    let config = ModelConfig {
        n: 2,
        m: 2,
        base_width: 8,
        expand_width: 32,
        ..ModelConfig::lightweight(2)
    };
    let mut model = build_model::<f64>(config, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // move lambdas and biases off their initial values so nothing is trivially symmetric
    for p in model.params.iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let input = Tensor4::from_fn(Shape::new(1, 5, 6, 3), |_, _, _, _| rng.random_range(0.0..1.0));
    let target = Tensor4::from_fn(Shape::new(1, 10, 12, 3), |_, _, _, _| rng.random_range(0.0..1.0));

    let net = model.clone();
    let report = check_gradients(
        &mut model.params,
        |store, tape| {
            let mut g = Recorder::new(tape, store);
            let x = g.input(input.clone());
            let y = net.forward_on(&mut g, &x)?;
            let t = tape.input(target.clone());
            tape.l1_loss(y, t)
        },
        &GradCheckConfig::default(),
    )?;

    println!("{} probes over {} tensors", report.probes.len(), model.params.len());
    if let Some(w) = report.worst() {
        println!("worst: {}[{}] analytic {:.6e} numeric {:.6e} rel {:.2e}", w.param, w.index, w.analytic, w.numeric, w.rel_error);
    }
    for p in report.failures() {
        println!("FAILED {}[{}] rel {:.2e}", p.param, p.index, p.rel_error);
    }
    println!("{}", if report.passed() { "all gradients agree" } else { "gradient mismatch" });
    Ok(())
}
