//! Reverse-mode differentiation over a recorded tape.
//!
//! Network code is written once against the [`Graph`] trait and runs either
//! on a [`Recorder`] (records every op on a [`Tape`] for a later backward
//! pass) or on [`Eager`] (computes values and drops intermediates as soon
//! as they go out of scope, for inference).

use crate::error::{Error, Result};
use crate::ops;
use crate::param::{ParamId, ParamStore};
use crate::tensor::{Element, Shape, Tensor4};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    Conv2d { x: Var, kernel: Var, bias: Var },
    Relu(Var),
    Concat(Vec<Var>),
    Scale { x: Var, lambda: Var },
    Add(Var, Var),
    PixelShuffle { x: Var, r: usize },
    L1 { pred: Var, target: Var },
    Sum(Var),
}

#[derive(Clone, Debug)]
struct Node<T> {
    value: Tensor4<T>,
    op: Op,
}

/// Ordered record of executed operations.
///
/// Values are immutable once recorded. [`Tape::backward`] walks the record
/// in exact reverse order and may run once; call [`Tape::reset`] to reuse
/// the allocation for a new forward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Tensor4<T>>>,
    consumed: bool,
}

impl<T: Element> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            grads: Vec::new(),
            consumed: false,
        }
    }

    pub fn reset(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.consumed = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor4<T>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor4<T> {
        &self.nodes[v.0].value
    }

    /// Gradient of the last backward pass with respect to `v`, if `v` was reachable.
    pub fn grad(&self, v: Var) -> Option<&Tensor4<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn input(&mut self, t: Tensor4<T>) -> Var {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    pub fn conv2d(&mut self, x: Var, kernel: Var, bias: Var) -> Result<Var> {
        let out = ops::conv2d_forward(self.value(x), self.value(kernel), self.value(bias))?;
        Ok(self.push(out, Op::Conv2d { x, kernel, bias }))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = ops::relu_forward(self.value(x));
        self.push(out, Op::Relu(x))
    }

    pub fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let values: Vec<&Tensor4<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let out = ops::concat_channels_forward(&values)?;
        Ok(self.push(out, Op::Concat(parts.to_vec())))
    }

    pub fn scale(&mut self, x: Var, lambda: Var) -> Result<Var> {
        let out = ops::scale_forward(self.value(x), self.value(lambda))?;
        Ok(self.push(out, Op::Scale { x, lambda }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::add_forward(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn pixel_shuffle(&mut self, x: Var, r: usize) -> Result<Var> {
        let out = ops::pixel_shuffle_forward(self.value(x), r)?;
        Ok(self.push(out, Op::PixelShuffle { x, r }))
    }

    /// Mean absolute error as a 1x1x1x1 node.
    pub fn l1_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let l = ops::l1_forward(self.value(pred), self.value(target))?;
        Ok(self.push(Tensor4::scalar(l), Op::L1 { pred, target }))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor4::scalar(s), Op::Sum(x))
    }

    /// Propagates d`loss` back through the tape and accumulates parameter
    /// gradients into `store`.
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore<T>) -> Result<()> {
        if self.consumed {
            return Err(Error::StaleTape);
        }
        if self.nodes.is_empty() {
            return Err(Error::Argument("backward on an empty tape".into()));
        }
        if !self.value(loss).shape().is_scalar() {
            return Err(Error::dim(format!(
                "backward needs a scalar loss, got {}",
                self.value(loss).shape()
            )));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Tensor4<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor4::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else {
                continue;
            };
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(id) => store.get_mut(*id).grad.add_assign(&g)?,
                Op::Conv2d { x, kernel, bias } => {
                    let (gx, gk, gb) =
                        ops::conv2d_backward(self.value(*x), self.value(*kernel), &g)?;
                    accumulate(&mut grads, *x, gx)?;
                    accumulate(&mut grads, *kernel, gk)?;
                    accumulate(&mut grads, *bias, gb)?;
                }
                Op::Relu(x) => {
                    let gx = ops::relu_backward(self.value(*x), &g);
                    accumulate(&mut grads, *x, gx)?;
                }
                Op::Concat(parts) => {
                    let widths: Vec<usize> =
                        parts.iter().map(|&p| self.value(p).shape().c).collect();
                    let split = ops::concat_channels_backward(&g, &widths)?;
                    for (&p, gp) in parts.iter().zip(split) {
                        accumulate(&mut grads, p, gp)?;
                    }
                }
                Op::Scale { x, lambda } => {
                    let (gx, gl) = ops::scale_backward(self.value(*x), self.value(*lambda), &g)?;
                    accumulate(&mut grads, *x, gx)?;
                    accumulate(&mut grads, *lambda, gl)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone())?;
                    accumulate(&mut grads, *b, g.clone())?;
                }
                Op::PixelShuffle { x, r } => {
                    let gx = ops::pixel_shuffle_backward(&g, *r)?;
                    accumulate(&mut grads, *x, gx)?;
                }
                Op::L1 { pred, target } => {
                    let gp = ops::l1_backward(self.value(*pred), self.value(*target), g.item()?);
                    let gt = gp.map(|v| -v);
                    accumulate(&mut grads, *pred, gp)?;
                    accumulate(&mut grads, *target, gt)?;
                }
                Op::Sum(x) => {
                    let gx = Tensor4::full(self.value(*x).shape(), g.item()?);
                    accumulate(&mut grads, *x, gx)?;
                }
            }
            grads[i] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }
}

fn accumulate<T: Element>(
    grads: &mut [Option<Tensor4<T>>],
    v: Var,
    g: Tensor4<T>,
) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Operations the network is written against.
pub trait Graph<T: Element> {
    type Value: Clone;

    fn input(&mut self, t: Tensor4<T>) -> Self::Value;
    fn shape(&self, v: &Self::Value) -> Shape;
    fn conv2d(&mut self, x: &Self::Value, kernel: ParamId, bias: ParamId) -> Result<Self::Value>;
    fn relu(&mut self, x: &Self::Value) -> Self::Value;
    fn concat_channels(&mut self, parts: &[Self::Value]) -> Result<Self::Value>;
    fn scale(&mut self, x: &Self::Value, lambda: ParamId) -> Result<Self::Value>;
    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn pixel_shuffle(&mut self, x: &Self::Value, r: usize) -> Result<Self::Value>;
}

/// [`Graph`] that records onto a tape for differentiation.
pub struct Recorder<'a, T> {
    pub tape: &'a mut Tape<T>,
    pub store: &'a ParamStore<T>,
}

impl<'a, T: Element> Recorder<'a, T> {
    pub fn new(tape: &'a mut Tape<T>, store: &'a ParamStore<T>) -> Self {
        Recorder { tape, store }
    }
}

impl<T: Element> Graph<T> for Recorder<'_, T> {
    type Value = Var;

    fn input(&mut self, t: Tensor4<T>) -> Var {
        self.tape.input(t)
    }

    fn shape(&self, v: &Var) -> Shape {
        self.tape.value(*v).shape()
    }

    fn conv2d(&mut self, x: &Var, kernel: ParamId, bias: ParamId) -> Result<Var> {
        let k = self.tape.param(self.store, kernel);
        let b = self.tape.param(self.store, bias);
        self.tape.conv2d(*x, k, b)
    }

    fn relu(&mut self, x: &Var) -> Var {
        self.tape.relu(*x)
    }

    fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        self.tape.concat_channels(parts)
    }

    fn scale(&mut self, x: &Var, lambda: ParamId) -> Result<Var> {
        let l = self.tape.param(self.store, lambda);
        self.tape.scale(*x, l)
    }

    fn add(&mut self, a: &Var, b: &Var) -> Result<Var> {
        self.tape.add(*a, *b)
    }

    fn pixel_shuffle(&mut self, x: &Var, r: usize) -> Result<Var> {
        self.tape.pixel_shuffle(*x, r)
    }
}

/// [`Graph`] that computes values directly without recording.
pub struct Eager<'a, T> {
    pub store: &'a ParamStore<T>,
}

impl<'a, T: Element> Eager<'a, T> {
    pub fn new(store: &'a ParamStore<T>) -> Self {
        Eager { store }
    }
}

impl<T: Element> Graph<T> for Eager<'_, T> {
    type Value = Tensor4<T>;

    fn input(&mut self, t: Tensor4<T>) -> Tensor4<T> {
        t
    }

    fn shape(&self, v: &Tensor4<T>) -> Shape {
        v.shape()
    }

    fn conv2d(&mut self, x: &Tensor4<T>, kernel: ParamId, bias: ParamId) -> Result<Tensor4<T>> {
        ops::conv2d_forward(x, self.store.value(kernel), self.store.value(bias))
    }

    fn relu(&mut self, x: &Tensor4<T>) -> Tensor4<T> {
        ops::relu_forward(x)
    }

    fn concat_channels(&mut self, parts: &[Tensor4<T>]) -> Result<Tensor4<T>> {
        let refs: Vec<&Tensor4<T>> = parts.iter().collect();
        ops::concat_channels_forward(&refs)
    }

    fn scale(&mut self, x: &Tensor4<T>, lambda: ParamId) -> Result<Tensor4<T>> {
        ops::scale_forward(x, self.store.value(lambda))
    }

    fn add(&mut self, a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
        ops::add_forward(a, b)
    }

    fn pixel_shuffle(&mut self, x: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
        ops::pixel_shuffle_forward(x, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summed_unit_scale_gives_all_ones_gradient() {
        let mut store = ParamStore::<f64>::new();
        let lam = store.add("lambda", Tensor4::scalar(1.0)).unwrap();
        let mut tape = Tape::new();
        let x = tape.input(Tensor4::full(Shape::new(1, 2, 3, 4), 0.7));
        let l = tape.param(&store, lam);
        let y = tape.scale(x, l).unwrap();
        let s = tape.sum(y);
        tape.backward(s, &mut store).unwrap();
        assert!(tape.grad(x).unwrap().data().iter().all(|&g| g == 1.0));
    }

    #[test]
    fn disconnected_parameter_keeps_zero_grad() {
        let mut store = ParamStore::<f64>::new();
        let used = store.add("used", Tensor4::scalar(2.0)).unwrap();
        let unused = store.add("unused", Tensor4::scalar(3.0)).unwrap();
        let mut tape = Tape::new();
        let x = tape.input(Tensor4::full(Shape::new(1, 2, 2, 1), 1.5));
        let l = tape.param(&store, used);
        let y = tape.scale(x, l).unwrap();
        let s = tape.sum(y);
        tape.backward(s, &mut store).unwrap();
        assert_eq!(store.get(used).grad.item().unwrap(), 6.0);
        assert_eq!(store.get(unused).grad.item().unwrap(), 0.0);
    }

    #[test]
    fn second_backward_is_stale() {
        let mut store = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.input(Tensor4::scalar(1.0));
        let s = tape.sum(x);
        tape.backward(s, &mut store).unwrap();
        assert!(matches!(tape.backward(s, &mut store), Err(Error::StaleTape)));
        tape.reset();
        let x = tape.input(Tensor4::scalar(1.0));
        let s = tape.sum(x);
        assert!(tape.backward(s, &mut store).is_ok());
    }

    #[test]
    fn empty_tape_and_non_scalar_loss_are_rejected() {
        let mut store = ParamStore::<f64>::new();
        let mut tape = Tape::<f64>::new();
        assert!(tape.backward(Var(0), &mut store).is_err());
        let x = tape.input(Tensor4::zeros(Shape::new(1, 1, 1, 2)));
        assert!(matches!(
            tape.backward(x, &mut store),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn shared_input_accumulates_gradient() {
        let mut store = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.input(Tensor4::full(Shape::new(1, 1, 2, 1), 3.0));
        let y = tape.add(x, x).unwrap();
        let s = tape.sum(y);
        tape.backward(s, &mut store).unwrap();
        assert_eq!(tape.grad(x).unwrap().data(), &[2.0, 2.0]);
    }
}
