//! Fixed-architecture feed-forward network: a ReLU feature generator `G`
//! followed by a classifier `F` (ReLU hidden layers, softmax output), with
//! a hand-written backward pass.

mod checkpoint;
mod sgd;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use sgd::{sgd_step, OptimizerConfig, Sgd};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Layer widths. [`Architecture::standard`] gives `G: input_dim → 256 → 128`
/// and `F: 128 → 128 → 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    /// Output widths of the generator layers; empty means `G` is the identity.
    pub generator: Vec<usize>,
    /// Hidden widths of the classifier; the 2-way output layer is implied.
    pub classifier_hidden: Vec<usize>,
}

pub const N_CLASSES: usize = 2;

impl Architecture {
    pub fn standard(input_dim: usize) -> Self {
        Self {
            input_dim,
            generator: vec![256, 128],
            classifier_hidden: vec![128],
        }
    }

    /// A single affine layer plus softmax (logistic-regression stand-in).
    pub fn linear(input_dim: usize) -> Self {
        Self {
            input_dim,
            generator: vec![],
            classifier_hidden: vec![],
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.generator.last().copied().unwrap_or(self.input_dim)
    }

    fn generator_shapes(&self) -> Vec<(usize, usize)> {
        let mut fan_in = self.input_dim;
        self.generator
            .iter()
            .map(|&w| {
                let s = (fan_in, w);
                fan_in = w;
                s
            })
            .collect()
    }

    fn classifier_shapes(&self) -> Vec<(usize, usize)> {
        let mut fan_in = self.embedding_dim();
        self.classifier_hidden
            .iter()
            .chain(std::iter::once(&N_CLASSES))
            .map(|&w| {
                let s = (fan_in, w);
                fan_in = w;
                s
            })
            .collect()
    }
}

/// Affine layer `y = x·W + b` with `W` stored `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Uniform Glorot initialisation, zero bias.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        Self {
            weights: Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights) + &self.bias
    }

    /// Gradients for this layer given its input and `dL/dy`; also returns
    /// `dL/dx`.
    pub fn backward(&self, input: ArrayView2<'_, f64>, grad_out: ArrayView2<'_, f64>) -> (Dense, Array2<f64>) {
        let grad = Dense {
            weights: input.t().dot(&grad_out),
            bias: grad_out.sum_axis(Axis(0)),
        };
        (grad, grad_out.dot(&self.weights.t()))
    }

    fn shape(&self) -> (usize, usize) {
        self.weights.dim()
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Weights of `G` and `F`.
///
/// `version` counts parameter updates; forward caches remember it so a
/// backward pass against modified parameters is refused.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub generator: Vec<Dense>,
    pub classifier: Vec<Dense>,
    version: u64,
}

/// Same shapes as [`ModelParams`], one entry per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub generator: Vec<Dense>,
    pub classifier: Vec<Dense>,
}

impl GradientSet {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let z = |layers: &[Dense]| {
            layers
                .iter()
                .map(|l| Dense::zeros(l.shape().0, l.shape().1))
                .collect()
        };
        Self {
            generator: z(&params.generator),
            classifier: z(&params.classifier),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.generator.iter().chain(&self.classifier)
    }

    pub(crate) fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.generator.iter_mut().chain(&mut self.classifier)
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(Dense::is_finite)
    }

    pub fn max_abs(&self) -> f64 {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ModelParams {
    pub fn new(arch: Architecture, generator: Vec<Dense>, classifier: Vec<Dense>) -> Result<Self> {
        let check = |layers: &[Dense], shapes: Vec<(usize, usize)>, context| {
            if layers.len() != shapes.len() {
                return Err(Error::Dimension {
                    context,
                    expected: shapes.len(),
                    actual: layers.len(),
                });
            }
            for (l, (i, o)) in layers.iter().zip(shapes) {
                if l.shape() != (i, o) || l.bias.len() != o {
                    return Err(Error::Dimension {
                        context,
                        expected: i * o,
                        actual: l.weights.len(),
                    });
                }
            }
            Ok(())
        };
        check(&generator, arch.generator_shapes(), "generator layers")?;
        check(&classifier, arch.classifier_shapes(), "classifier layers")?;
        Ok(Self {
            arch,
            generator,
            classifier,
            version: 0,
        })
    }

    pub fn init(arch: Architecture, rng: &mut impl Rng) -> Self {
        let generator = arch
            .generator_shapes()
            .into_iter()
            .map(|(i, o)| Dense::glorot(i, o, rng))
            .collect();
        let classifier = arch
            .classifier_shapes()
            .into_iter()
            .map(|(i, o)| Dense::glorot(i, o, rng))
            .collect();
        Self {
            arch,
            generator,
            classifier,
            version: 0,
        }
    }

    pub fn zeros(arch: Architecture) -> Self {
        let mk = |shapes: Vec<(usize, usize)>| shapes.into_iter().map(|(i, o)| Dense::zeros(i, o)).collect();
        Self {
            generator: mk(arch.generator_shapes()),
            classifier: mk(arch.classifier_shapes()),
            arch,
            version: 0,
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.generator.iter().chain(&self.classifier)
    }

    pub(crate) fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.generator.iter_mut().chain(&mut self.classifier)
    }

    pub fn n_params(&self) -> usize {
        self.layers().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(Dense::is_finite)
    }

    fn check_input(&self, x: ArrayView2<'_, f64>, expected: usize, context: &'static str) -> Result<()> {
        if x.ncols() != expected {
            return Err(Error::Dimension {
                context,
                expected,
                actual: x.ncols(),
            });
        }
        Ok(())
    }
}

fn relu(mut z: Array2<f64>) -> Array2<f64> {
    z.mapv_inplace(|v| v.max(0.0));
    z
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Embeddings `G(x)`.
pub fn forward_features(params: &ModelParams, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    params.check_input(x, params.arch.input_dim, "generator input")?;
    let mut h = x.to_owned();
    for layer in &params.generator {
        h = relu(layer.forward(h.view()));
    }
    Ok(h)
}

/// Class probabilities `F(h)`.
pub fn forward_classifier(params: &ModelParams, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    params.check_input(h, params.arch.embedding_dim(), "classifier input")?;
    let last = params.classifier.len() - 1;
    let mut a = h.to_owned();
    for (i, layer) in params.classifier.iter().enumerate() {
        let z = layer.forward(a.view());
        a = if i == last { softmax_rows(z.view()) } else { relu(z) };
    }
    Ok(a)
}

/// Intermediates of a full forward pass, needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    /// Input of every layer, generator first; the entry after the generator
    /// layers is the embedding batch.
    layer_inputs: Vec<Array2<f64>>,
    /// Pre-activations of every layer.
    pre_activations: Vec<Array2<f64>>,
    pub probs: Array2<f64>,
}

impl ForwardCache {
    pub fn embeddings(&self, params: &ModelParams) -> ArrayView2<'_, f64> {
        self.layer_inputs[params.generator.len()].view()
    }

    pub fn rows(&self) -> usize {
        self.probs.nrows()
    }

    /// Positive-class probabilities.
    pub fn positive_probs(&self) -> Vec<f64> {
        self.probs.column(1).to_vec()
    }
}

/// Forward pass through `G` and `F`, keeping what [`backward`] needs.
pub fn forward(params: &ModelParams, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
    params.check_input(x, params.arch.input_dim, "generator input")?;
    let n_gen = params.generator.len();
    let n_layers = n_gen + params.classifier.len();
    let mut layer_inputs = Vec::with_capacity(n_layers + 1);
    let mut pre_activations = Vec::with_capacity(n_layers);
    let mut a = x.to_owned();
    for (i, layer) in params.layers().enumerate() {
        let z = layer.forward(a.view());
        layer_inputs.push(a);
        a = if i + 1 == n_layers {
            softmax_rows(z.view())
        } else {
            relu(z.clone())
        };
        pre_activations.push(z);
    }
    Ok(ForwardCache {
        version: params.version,
        layer_inputs,
        pre_activations,
        probs: a,
    })
}

/// Backpropagate `dL/dprobs` (through the softmax) and `dL/dembeddings`
/// into parameter gradients. Either upstream gradient may be omitted.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    grad_probs: Option<ArrayView2<'_, f64>>,
    grad_embeddings: Option<ArrayView2<'_, f64>>,
) -> Result<GradientSet> {
    if cache.version != params.version {
        return Err(Error::StaleCache(format!(
            "cache built at parameter version {}, parameters are at {}",
            cache.version, params.version
        )));
    }
    let rows = cache.rows();
    let n_gen = params.generator.len();
    let n_layers = n_gen + params.classifier.len();
    if cache.pre_activations.len() != n_layers {
        return Err(Error::StaleCache("cache built for a different architecture".into()));
    }
    let emb_dim = params.arch.embedding_dim();
    for (g, cols, context) in [
        (grad_probs, N_CLASSES, "probability gradient"),
        (grad_embeddings, emb_dim, "embedding gradient"),
    ] {
        if let Some(g) = g {
            if g.dim() != (rows, cols) {
                return Err(Error::Dimension {
                    context,
                    expected: rows * cols,
                    actual: g.len(),
                });
            }
        }
    }

    // softmax backward: dz = p ⊙ (g − ⟨g, p⟩)
    let mut grad = match grad_probs {
        Some(g) => {
            let p = &cache.probs;
            let mut dz = Array2::zeros((rows, N_CLASSES));
            for ((mut dz_row, g_row), p_row) in dz.outer_iter_mut().zip(g.outer_iter()).zip(p.outer_iter()) {
                let dot: f64 = g_row.iter().zip(p_row.iter()).map(|(a, b)| a * b).sum();
                for k in 0..N_CLASSES {
                    dz_row[k] = p_row[k] * (g_row[k] - dot);
                }
            }
            dz
        }
        None => Array2::zeros((rows, N_CLASSES)),
    };

    let mut grads: Vec<Dense> = Vec::with_capacity(n_layers);
    let layers: Vec<&Dense> = params.layers().collect();
    for i in (0..n_layers).rev() {
        let (g, mut grad_in) = layers[i].backward(cache.layer_inputs[i].view(), grad.view());
        grads.push(g);
        if i == 0 {
            break;
        }
        if i == n_gen {
            if let Some(ge) = grad_embeddings {
                grad_in += &ge;
            }
        }
        // every layer except the last is followed by a ReLU
        let pre = &cache.pre_activations[i - 1];
        grad_in.zip_mut_with(pre, |g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
        grad = grad_in;
    }
    grads.reverse();
    let classifier = grads.split_off(n_gen);
    Ok(GradientSet {
        generator: grads,
        classifier,
    })
}

/// Anything that scores samples with a positive-class probability.
pub trait ProbabilityModel {
    fn input_dim(&self) -> usize;
    fn predict_positive(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>>;
}

impl ProbabilityModel for ModelParams {
    fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    fn predict_positive(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let h = forward_features(self, x)?;
        Ok(forward_classifier(self, h.view())?.column(1).to_vec())
    }
}
