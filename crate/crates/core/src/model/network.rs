use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, SkipMode};
use crate::autograd::{Eager, Graph, Recorder, Tape, Var};
use crate::error::{Error, Result};
use crate::ops::{bias_shape, kernel_shape};
use crate::param::{ParamId, ParamStore};
use crate::tensor::{Element, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub k: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl ConvLayer {
    /// Registers `{prefix}.weight` (uniform in +-sqrt(1/fan_in)) and a zero `{prefix}.bias`.
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        k: usize,
        c_in: usize,
        c_out: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let bound = (1.0 / (k * k * c_in) as f64).sqrt();
        let shape = kernel_shape(k, c_in, c_out);
        let data = (0..shape.len())
            .map(|_| T::from_f64_lossy(rng.random_range(-bound..=bound)))
            .collect();
        let weight = store.add(format!("{prefix}.weight"), Tensor4::from_vec(shape, data)?)?;
        let bias = store.add(format!("{prefix}.bias"), Tensor4::zeros(bias_shape(c_out)))?;
        Ok(ConvLayer {
            weight,
            bias,
            k,
            c_in,
            c_out,
        })
    }

    pub fn apply<T: Element, G: Graph<T>>(&self, g: &mut G, x: &G::Value) -> Result<G::Value> {
        g.conv2d(x, self.weight, self.bias)
    }
}

/// Two weighting factors of a WCC merge. `None` when the merge is unweighted.
pub type LambdaPair = Option<[ParamId; 2]>;

fn register_lambdas<T: Element>(
    store: &mut ParamStore<T>,
    names: [String; 2],
    weighted: bool,
) -> Result<LambdaPair> {
    if !weighted {
        return Ok(None);
    }
    let [a, b] = names;
    Ok(Some([
        store.add(a, Tensor4::scalar(T::one()))?,
        store.add(b, Tensor4::scalar(T::one()))?,
    ]))
}

fn maybe_scale<T: Element, G: Graph<T>>(
    g: &mut G,
    x: &G::Value,
    lambda: Option<ParamId>,
) -> Result<G::Value> {
    match lambda {
        Some(id) => g.scale(x, id),
        None => Ok(x.clone()),
    }
}

/// `L([l1 * a, l2 * b])`: weighted channel concatenation followed by a 1x1 conv.
pub fn wcc<T: Element, G: Graph<T>>(
    g: &mut G,
    a: &G::Value,
    b: &G::Value,
    lambdas: LambdaPair,
    fuse: &ConvLayer,
) -> Result<G::Value> {
    let a = maybe_scale(g, a, lambdas.map(|l| l[0]))?;
    let b = maybe_scale(g, b, lambdas.map(|l| l[1]))?;
    let cat = g.concat_channels(&[a, b])?;
    fuse.apply(g, &cat)
}

/// Conv-ReLU-Conv branch merged with its input by WCC (or a residual add).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatBlock {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    /// 1x1 fusion conv over `2 * base` channels; absent in residual mode.
    pub fuse: Option<ConvLayer>,
    pub lambdas: LambdaPair,
}

impl ConcatBlock {
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        base: usize,
        expand: usize,
        weighted: bool,
        skip_mode: SkipMode,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let conv1 = ConvLayer::register(store, &format!("{prefix}.conv1"), 3, base, expand, rng)?;
        let conv2 = ConvLayer::register(store, &format!("{prefix}.conv2"), 3, expand, base, rng)?;
        let (fuse, lambdas) = match skip_mode {
            SkipMode::Wcc => (
                Some(ConvLayer::register(
                    store,
                    &format!("{prefix}.fuse"),
                    1,
                    2 * base,
                    base,
                    rng,
                )?),
                register_lambdas(
                    store,
                    [format!("{prefix}.lambda_x"), format!("{prefix}.lambda_h")],
                    weighted,
                )?,
            ),
            SkipMode::Residual => (None, None),
        };
        Ok(ConcatBlock {
            conv1,
            conv2,
            fuse,
            lambdas,
        })
    }

    /// The nonlinear branch `H(x)`.
    pub fn branch<T: Element, G: Graph<T>>(&self, g: &mut G, x: &G::Value) -> Result<G::Value> {
        let h = self.conv1.apply(g, x)?;
        let h = g.relu(&h);
        self.conv2.apply(g, &h)
    }

    pub fn forward<T: Element, G: Graph<T>>(&self, g: &mut G, x: &G::Value) -> Result<G::Value> {
        let c = g.shape(x).c;
        if c != self.conv1.c_in {
            return Err(Error::dim(format!(
                "concat block expects {} channels, got {c}",
                self.conv1.c_in
            )));
        }
        let h = self.branch(g, x)?;
        match &self.fuse {
            Some(fuse) => wcc(g, x, &h, self.lambdas, fuse),
            None => g.add(x, &h),
        }
    }
}

/// `m` chained blocks whose input and output are merged by another WCC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatGroup {
    pub blocks: Vec<ConcatBlock>,
    pub fuse: Option<ConvLayer>,
    pub lambdas: LambdaPair,
}

impl ConcatGroup {
    /// Registers `config.m` blocks under `{prefix}.cb{j}` plus the group merge.
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        config: &ModelConfig,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let b = config.base_width;
        let blocks = (0..config.m)
            .map(|j| {
                ConcatBlock::register(
                    store,
                    &format!("{prefix}.cb{j}"),
                    b,
                    config.expand_width,
                    config.weighted_cb,
                    config.skip_mode,
                    rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let (fuse, lambdas) = match config.skip_mode {
            SkipMode::Wcc => (
                Some(ConvLayer::register(
                    store,
                    &format!("{prefix}.fuse"),
                    1,
                    2 * b,
                    b,
                    rng,
                )?),
                register_lambdas(
                    store,
                    [format!("{prefix}.lambda_in"), format!("{prefix}.lambda_out")],
                    config.weighted_cg,
                )?,
            ),
            SkipMode::Residual => (None, None),
        };
        Ok(ConcatGroup {
            blocks,
            fuse,
            lambdas,
        })
    }

    pub fn forward<T: Element, G: Graph<T>>(&self, g: &mut G, x: &G::Value) -> Result<G::Value> {
        let mut h = x.clone();
        for block in &self.blocks {
            h = block.forward(g, &h)?;
        }
        match &self.fuse {
            Some(fuse) => wcc(g, x, &h, self.lambdas, fuse),
            None => g.add(x, &h),
        }
    }
}

/// Weighted global feature fusion: concat of the shallow features and every
/// group output, then a 1x1 and a 3x3 conv.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalFusion {
    pub lambdas: Option<Vec<ParamId>>,
    pub fuse: ConvLayer,
    pub conv: ConvLayer,
}

impl GlobalFusion {
    pub fn forward<T: Element, G: Graph<T>>(
        &self,
        g: &mut G,
        features: &[G::Value],
    ) -> Result<G::Value> {
        let parts = match &self.lambdas {
            Some(ls) => {
                if ls.len() != features.len() {
                    return Err(Error::dim(format!(
                        "global fusion has {} weights for {} features",
                        ls.len(),
                        features.len()
                    )));
                }
                features
                    .iter()
                    .zip(ls)
                    .map(|(f, &l)| g.scale(f, l))
                    .collect::<Result<Vec<_>>>()?
            }
            None => features.to_vec(),
        };
        let cat = g.concat_channels(&parts)?;
        let fused = self.fuse.apply(g, &cat)?;
        self.conv.apply(g, &fused)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub shallow: ConvLayer,
    pub groups: Vec<ConcatGroup>,
    pub fusion: GlobalFusion,
    /// Conv before each pixel shuffle, paired with its shuffle factor.
    pub upscale: Vec<(ConvLayer, usize)>,
    pub output: ConvLayer,
}

/// The full network: parameter registry plus the layer graph over it.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
    pub layout: Layout,
}

/// Deterministically builds the network for `config`; all weighting factors
/// start at 1.0, conv biases at 0.
pub fn build_model<T: Element>(config: ModelConfig, seed: u64) -> Result<Model<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let b = config.base_width;
    let wcc_mode = config.skip_mode == SkipMode::Wcc;

    let shallow = ConvLayer::register(&mut store, "shallow", 3, 3, b, &mut rng)?;

    let groups = (0..config.n)
        .map(|i| ConcatGroup::register(&mut store, &format!("cg{i}"), &config, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let lambdas = if wcc_mode && config.weighted_wgff {
        Some(
            (0..=config.n)
                .map(|k| store.add(format!("wgff.lambda{k}"), Tensor4::scalar(T::one())))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let fusion = GlobalFusion {
        lambdas,
        fuse: ConvLayer::register(&mut store, "wgff.fuse", 1, (config.n + 1) * b, b, &mut rng)?,
        conv: ConvLayer::register(&mut store, "wgff.conv", 3, b, b, &mut rng)?,
    };

    let upscale = config
        .upscale_stages()
        .into_iter()
        .enumerate()
        .map(|(s, r)| {
            ConvLayer::register(&mut store, &format!("upscale{s}"), 3, b, b * r * r, &mut rng)
                .map(|c| (c, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let output = ConvLayer::register(&mut store, "output", 3, b, 3, &mut rng)?;

    Ok(Model {
        config,
        params: store,
        layout: Layout {
            shallow,
            groups,
            fusion,
            upscale,
            output,
        },
    })
}

impl<T: Element> Model<T> {
    /// Runs the network on any [`Graph`]. `input` is `[N, h, w, 3]` in [0, 1].
    pub fn forward_on<G: Graph<T>>(&self, g: &mut G, input: &G::Value) -> Result<G::Value> {
        let c = g.shape(input).c;
        if c != 3 {
            return Err(Error::dim(format!(
                "model input must have 3 channels, got {c}"
            )));
        }
        let l = &self.layout;
        let x0 = l.shallow.apply(g, input)?;
        let mut features = Vec::with_capacity(l.groups.len() + 1);
        features.push(x0);
        for group in &l.groups {
            let next = group.forward(g, features.last().expect("non-empty"))?;
            features.push(next);
        }
        let deep = l.fusion.forward(g, &features)?;
        drop(features);
        let mut up = deep;
        for (conv, r) in &l.upscale {
            let y = conv.apply(g, &up)?;
            up = g.pixel_shuffle(&y, *r)?;
        }
        l.output.apply(g, &up)
    }

    /// Inference without recording.
    pub fn forward(&self, input: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut g = Eager::new(&self.params);
        self.forward_on(&mut g, input)
    }

    /// Records the forward pass on `tape` and returns the output node.
    pub fn forward_tape(&self, tape: &mut Tape<T>, input: Tensor4<T>) -> Result<Var> {
        let mut g = Recorder::new(tape, &self.params);
        let x = g.input(input);
        self.forward_on(&mut g, &x)
    }

    pub fn scale(&self) -> usize {
        self.config.scale
    }

    pub fn num_params(&self) -> usize {
        self.params.numel()
    }

    pub fn cast<U: Element>(&self) -> Model<U> {
        Model {
            config: self.config,
            params: self.params.cast(),
            layout: self.layout.clone(),
        }
    }

    /// Every weighting-factor parameter, in registration order.
    pub fn lambda_ids(&self) -> Vec<ParamId> {
        self.params
            .ids()
            .filter(|&id| self.params.get(id).name.contains("lambda"))
            .collect()
    }
}
