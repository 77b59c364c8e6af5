use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor4};

/// Index of a [`Parameter`] inside its [`ParamStore`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A learnable tensor with its gradient accumulator and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor4<T>,
    pub grad: Tensor4<T>,
    pub adam_m: Tensor4<T>,
    pub adam_v: Tensor4<T>,
}

impl<T: Element> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor4<T>) -> Self {
        let shape = value.shape();
        Parameter {
            name: name.into(),
            value,
            grad: Tensor4::zeros(shape),
            adam_m: Tensor4::zeros(shape),
            adam_v: Tensor4::zeros(shape),
        }
    }

    pub fn shape(&self) -> Shape {
        self.value.shape()
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }
}

/// Ordered parameter registry with unique names.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, usize>,
}

impl<T: Element> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor4<T>) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Argument(format!("duplicate parameter name {name}")));
        }
        let id = self.params.len();
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter::new(name, value));
        Ok(ParamId(id))
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter<T>> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn value(&self, id: ParamId) -> &Tensor4<T> {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total element count across all parameters.
    pub fn numel(&self) -> usize {
        self.params.iter().map(Parameter::numel).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    /// Euclidean norm of all gradients, with the name of the largest contributor.
    pub fn grad_norm(&self) -> (f64, String) {
        let mut total = 0.0;
        let mut worst = (f64::NEG_INFINITY, String::new());
        for p in &self.params {
            let s: f64 = p.grad.data().iter().map(|g| g.as_f64() * g.as_f64()).sum();
            total += s;
            if !(s <= worst.0) {
                worst = (s, p.name.clone());
            }
        }
        (total.sqrt(), worst.1)
    }

    pub fn cast<U: Element>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Parameter {
                    name: p.name.clone(),
                    value: p.value.cast(),
                    grad: p.grad.cast(),
                    adam_m: p.adam_m.cast(),
                    adam_v: p.adam_v.cast(),
                })
                .collect(),
            by_name: self.by_name.clone(),
        }
    }
}
