//! A concat block whose 1x1 fusion kernel is `[I; I]` behaves exactly like
//! `l1 * x + l2 * H(x)`, i.e. a (weighted) residual block.

use fc2n::autograd::Eager;
use fc2n::model::{ConcatBlock, SkipMode};
use fc2n::ops::kernel_shape;
use fc2n::param::ParamStore;
use fc2n::tensor::{Shape, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fc2n::Result<()> {
    let base = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::<f64>::new();
    let block = ConcatBlock::register(&mut store, "cb", base, 4 * base, true, SkipMode::Wcc, &mut rng)?;
    let fuse = block.fuse.expect("wcc blocks fuse");
    store.get_mut(fuse.weight).value =
        Tensor4::from_fn(kernel_shape(1, 2 * base, base), |_, _, ci, co| if ci % base == co { 1.0 } else { 0.0 });
    store.get_mut(fuse.bias).value.fill(0.0);

    let x = Tensor4::from_fn(Shape::new(1, 12, 12, base), |_, _, _, _| rng.random_range(-1.0..1.0));
    let h = block.branch(&mut Eager::new(&store), &x)?;
    let [lx, lh] = block.lambdas.expect("weighted block");

    for (l1, l2) in [(1.0, 1.0), (0.5, 2.0), (-1.5, 0.25)] {
        store.get_mut(lx).value = Tensor4::scalar(l1);
        store.get_mut(lh).value = Tensor4::scalar(l2);
        let out = block.forward(&mut Eager::new(&store), &x)?;
        let want = Tensor4::from_fn(x.shape(), |n, y, xx, c| l1 * x.at(n, y, xx, c) + l2 * h.at(n, y, xx, c));
        println!("lambda = ({l1}, {l2}): max |wcc - residual| = {:.2e}", out.max_abs_diff(&want)?);
    }
    Ok(())
}
