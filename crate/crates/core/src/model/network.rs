use crate::cvconv::{complex_conv_backward, complex_conv_forward, ComplexConvLayer};
use crate::error::{invalid_config, invalid_input, Result};
use crate::model::config::ModelConfig;
use crate::realnet::{
    maxpool, maxpool_backward, relu, relu_backward, softmax_cross_entropy, ConvLayer, DenseLayer, Padding, PoolSpec,
};
use crate::tensor::{ComplexTensor, RealTensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Complex convolution followed by the modulus.
    ComplexConv(ComplexConvLayer),
    Conv(ConvLayer),
    Relu,
    MaxPool(PoolSpec),
    Flatten,
    Dense(DenseLayer),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::ComplexConv(_) => "cconv",
            Layer::Conv(_) => "conv",
            Layer::Relu => "relu",
            Layer::MaxPool(_) => "pool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::ComplexConv(l) => l.param_count(),
            Layer::Conv(l) => l.param_count(),
            Layer::Dense(l) => l.param_count(),
            _ => 0,
        }
    }
}

/// A batch at the network input: `[batch, channels, len]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Batch {
    Complex(ComplexTensor),
    Real(RealTensor),
}

impl Batch {
    pub fn shape(&self) -> &[usize] {
        match self {
            Batch::Complex(t) => t.shape(),
            Batch::Real(t) => t.shape(),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.shape().first().copied().unwrap_or(0)
    }
}

enum Cache {
    ComplexConv {
        input: ComplexTensor,
        u: ComplexTensor,
        y: RealTensor,
    },
    Conv {
        input: RealTensor,
    },
    Relu {
        output: RealTensor,
    },
    MaxPool {
        in_shape: Vec<usize>,
        argmax: Vec<usize>,
    },
    Flatten {
        in_shape: Vec<usize>,
    },
    Dense {
        input: RealTensor,
    },
}

/// Saved intermediate values of one forward pass.
pub struct ForwardTrace {
    caches: Vec<Cache>,
    logits: RealTensor,
}

impl ForwardTrace {
    /// `[batch, n_classes]`
    pub fn logits(&self) -> &RealTensor {
        &self.logits
    }

    /// ReLU on/off states and pool winners; two passes with equal patterns lie on
    /// the same smooth piece of the loss.
    pub fn pattern(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for c in &self.caches {
            match c {
                Cache::Relu { output } => out.extend(output.data().iter().map(|&v| (v > 0.0) as usize)),
                Cache::MaxPool { argmax, .. } => out.extend_from_slice(argmax),
                _ => {}
            }
        }
        out
    }

    /// Smallest pre-modulus magnitude seen in complex layers.
    pub fn min_modulus(&self) -> f64 {
        self.caches
            .iter()
            .filter_map(|c| match c {
                Cache::ComplexConv { y, .. } => y.data().iter().cloned().reduce(f64::min),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Parameter gradients of one layer. Complex entries hold `dL/dW*`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad {
    None,
    Complex { kernels: ComplexTensor, biases: ComplexTensor },
    Real { weights: RealTensor, biases: RealTensor },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<LayerGrad>);

impl Gradients {
    /// Gradient with respect to each real scalar, in [`Model::parameters`] order.
    ///
    /// For a complex weight `w = a + ib`, `dL/da = 2 Re(dL/dw*)` and `dL/db = 2 Im(dL/dw*)`.
    pub fn to_real_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.0 {
            match g {
                LayerGrad::None => {}
                LayerGrad::Complex { kernels, biases } => {
                    for t in [kernels, biases] {
                        out.extend(t.re().iter().map(|v| 2.0 * v));
                        out.extend(t.im().iter().map(|v| 2.0 * v));
                    }
                }
                LayerGrad::Real { weights, biases } => {
                    out.extend_from_slice(weights.data());
                    out.extend_from_slice(biases.data());
                }
            }
        }
        out
    }
}

/// One row of the parameter and memory table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSummary {
    pub name: String,
    /// Per-sample output shape `[channels, len]` or `[features]`.
    pub output_shape: Vec<usize>,
    pub params: usize,
    /// Real scalars held per sample by this layer's output.
    pub activations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamTable {
    pub rows: Vec<LayerSummary>,
}

impl ParamTable {
    pub fn total_params(&self) -> usize {
        self.rows.iter().map(|r| r.params).sum()
    }

    pub fn total_activations(&self) -> usize {
        self.rows.iter().map(|r| r.activations).sum()
    }

    /// Parameter counts of rows whose name starts with `prefix`.
    pub fn params_of(&self, prefix: &str) -> Vec<usize> {
        self.rows.iter().filter(|r| r.name.starts_with(prefix)).map(|r| r.params).collect()
    }
}

impl fmt::Display for ParamTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>12} {:>12} {:>12}", "layer", "output", "params", "memory")?;
        for r in &self.rows {
            let shape = r.output_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
            writeln!(f, "{:<10} {:>12} {:>12} {:>12}", r.name, shape, r.params, r.activations)?;
        }
        write!(
            f,
            "{:<10} {:>12} {:>12} {:>12}",
            "total",
            "",
            self.total_params(),
            self.total_activations()
        )
    }
}

/// A layer stack plus the configuration it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub layers: Vec<Layer>,
}

fn rng_for(config: &ModelConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(config.seed)
}

fn push_dense_head(layers: &mut Vec<Layer>, mut width: usize, config: &ModelConfig, rng: &mut ChaCha8Rng) -> Result<()> {
    for &h in &config.hidden {
        layers.push(Layer::Dense(DenseLayer::init(width, h, rng)?));
        layers.push(Layer::Relu);
        width = h;
    }
    layers.push(Layer::Dense(DenseLayer::init(width, config.n_classes, rng)?));
    Ok(())
}

fn push_real_trunk(
    layers: &mut Vec<Layer>,
    in_channels: usize,
    len: usize,
    config: &ModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let c1 = ConvLayer::init(in_channels, config.conv1.channels, config.conv1.width, 1, Padding::Same, rng)?;
    let len = c1.output_len(len)?;
    layers.push(Layer::Conv(c1));
    layers.push(Layer::Relu);
    let len = config
        .pool
        .output_len(len)
        .map_err(|e| invalid_config!("input too short for pooling: {e}"))?;
    layers.push(Layer::MaxPool(config.pool));
    let c2 = ConvLayer::init(config.conv1.channels, config.conv2.channels, config.conv2.width, 1, Padding::Same, rng)?;
    let len = c2.output_len(len)?;
    layers.push(Layer::Conv(c2));
    layers.push(Layer::Relu);
    layers.push(Layer::Flatten);
    push_dense_head(layers, config.conv2.channels * len, config, rng)
}

/// Complex conv and modulus, then the real trunk and dense head.
pub fn build_hybrid(config: &ModelConfig) -> Result<Model> {
    config.validate()?;
    if !config.encoding.is_complex() {
        return Err(invalid_config!("the hybrid network needs the complex encoding, got {}", config.encoding));
    }
    let mut rng = rng_for(config);
    let spec = &config.complex;
    let cconv = ComplexConvLayer::init(1, spec.out_channels, spec.width, spec.stride, spec.padding, spec.sigma, &mut rng)
        .map_err(|e| invalid_config!("{e}"))?;
    let len = cconv
        .output_len(config.input_len)
        .map_err(|e| invalid_config!("complex layer: {e}"))?;
    let mut layers = vec![Layer::ComplexConv(cconv)];
    push_real_trunk(&mut layers, spec.out_channels, len, config, &mut rng)?;
    Ok(Model { config: config.clone(), layers })
}

/// Real-valued comparison network for a non-complex encoding.
pub fn build_baseline_real(config: &ModelConfig) -> Result<Model> {
    config.validate()?;
    if config.encoding.is_complex() {
        return Err(invalid_config!("the real baseline cannot take the complex encoding"));
    }
    let mut rng = rng_for(config);
    let mut layers = Vec::new();
    push_real_trunk(&mut layers, config.encoding.channels(), config.input_len, config, &mut rng)?;
    Ok(Model { config: config.clone(), layers })
}

/// Hybrid for the complex encoding, baseline otherwise.
pub fn build(config: &ModelConfig) -> Result<Model> {
    if config.encoding.is_complex() {
        build_hybrid(config)
    } else {
        build_baseline_real(config)
    }
}

impl Model {
    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn check_input(&self, input: &Batch) -> Result<()> {
        let want_complex = matches!(self.layers.first(), Some(Layer::ComplexConv(_)));
        let channels = match self.layers.first() {
            Some(Layer::ComplexConv(l)) => l.in_channels(),
            Some(Layer::Conv(l)) => l.in_channels(),
            _ => return Err(invalid_input!("model has no input layer")),
        };
        let ok_kind = matches!(input, Batch::Complex(_)) == want_complex;
        let shape = input.shape();
        if !ok_kind || shape.len() != 3 || shape[1] != channels || shape[2] != self.config.input_len {
            return Err(invalid_input!(
                "model expects a {} batch of shape [_, {channels}, {}], got {} {:?}",
                if want_complex { "complex" } else { "real" },
                self.config.input_len,
                if matches!(input, Batch::Complex(_)) { "complex" } else { "real" },
                shape
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: Batch) -> Result<ForwardTrace> {
        self.check_input(&input)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut complex_in = None;
        let mut x = match input {
            Batch::Complex(z) => {
                complex_in = Some(z);
                RealTensor::zeros(&[0])
            }
            Batch::Real(r) => r,
        };
        for layer in &self.layers {
            x = match layer {
                Layer::ComplexConv(l) => {
                    let z = complex_in
                        .take()
                        .ok_or_else(|| invalid_input!("complex layer must come first"))?;
                    let (u, y) = complex_conv_forward(&z, l)?;
                    caches.push(Cache::ComplexConv { input: z, u, y: y.clone() });
                    y
                }
                Layer::Conv(l) => {
                    let out = l.forward(&x)?;
                    caches.push(Cache::Conv { input: x });
                    out
                }
                Layer::Relu => {
                    let out = relu(&x);
                    caches.push(Cache::Relu { output: out.clone() });
                    out
                }
                Layer::MaxPool(spec) => {
                    let pooled = maxpool(&x, *spec)?;
                    caches.push(Cache::MaxPool {
                        in_shape: x.shape().to_vec(),
                        argmax: pooled.argmax,
                    });
                    pooled.output
                }
                Layer::Flatten => {
                    let in_shape = x.shape().to_vec();
                    let batch = in_shape[0];
                    let width = x.len() / batch.max(1);
                    caches.push(Cache::Flatten { in_shape });
                    x.reshape(vec![batch, width])?
                }
                Layer::Dense(l) => {
                    let out = l.forward(&x)?;
                    caches.push(Cache::Dense { input: x });
                    out
                }
            };
        }
        Ok(ForwardTrace { caches, logits: x })
    }

    /// Logits without keeping the trace.
    pub fn logits(&self, input: Batch) -> Result<RealTensor> {
        Ok(self.forward(input)?.logits)
    }

    /// Predicted class per sample; ties go to the lowest index.
    pub fn predict(&self, input: Batch) -> Result<Vec<usize>> {
        let logits = self.logits(input)?;
        Ok(logits.data().chunks(self.n_classes()).map(argmax).collect())
    }

    pub fn backward(&self, trace: ForwardTrace, grad_logits: RealTensor) -> Result<Gradients> {
        if grad_logits.shape() != trace.logits.shape() {
            return Err(invalid_input!("logit gradient shape mismatch"));
        }
        let mut grads = vec![LayerGrad::None; self.layers.len()];
        let mut g = grad_logits;
        for (idx, (layer, cache)) in self.layers.iter().zip(trace.caches).enumerate().rev() {
            match (layer, cache) {
                (Layer::ComplexConv(l), Cache::ComplexConv { input, u, y }) => {
                    let (dk, db) = complex_conv_backward(&input, l, &u, &y, &g)?;
                    grads[idx] = LayerGrad::Complex { kernels: dk, biases: db };
                }
                (Layer::Conv(l), Cache::Conv { input }) => {
                    let cg = l.backward(&input, &g)?;
                    grads[idx] = LayerGrad::Real {
                        weights: cg.weights,
                        biases: cg.biases,
                    };
                    g = cg.input;
                }
                (Layer::Relu, Cache::Relu { output }) => g = relu_backward(&output, &g),
                (Layer::MaxPool(_), Cache::MaxPool { in_shape, argmax }) => {
                    g = maxpool_backward(&in_shape, &argmax, &g)?;
                }
                (Layer::Flatten, Cache::Flatten { in_shape }) => g = g.reshape(in_shape)?,
                (Layer::Dense(l), Cache::Dense { input }) => {
                    let dg = l.backward(&input, &g)?;
                    grads[idx] = LayerGrad::Real {
                        weights: dg.weights,
                        biases: dg.biases,
                    };
                    g = dg.input;
                }
                _ => return Err(invalid_input!("trace does not belong to this model")),
            }
        }
        Ok(Gradients(grads))
    }

    /// Mean cross-entropy over the batch, its gradients, and the per-sample losses.
    pub fn loss_and_grad(&self, input: Batch, labels: &[usize]) -> Result<(f64, Gradients)> {
        let (trace, loss, grad) = self.loss_trace(input, labels)?;
        Ok((loss, self.backward(trace, grad)?))
    }

    /// Forward pass plus mean loss and logit gradient, without backpropagating.
    pub fn loss_trace(&self, input: Batch, labels: &[usize]) -> Result<(ForwardTrace, f64, RealTensor)> {
        let batch = input.batch_size();
        if labels.len() != batch || batch == 0 {
            return Err(invalid_input!("{} labels for a batch of {batch}", labels.len()));
        }
        let trace = self.forward(input)?;
        let n = self.n_classes();
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(batch * n);
        for (row, &label) in trace.logits.data().chunks(n).zip(labels) {
            let (l, g) = softmax_cross_entropy(row, label)?;
            loss += l;
            grad.extend(g.into_iter().map(|v| v / batch as f64));
        }
        Ok((trace, loss / batch as f64, RealTensor::from_parts(vec![batch, n], grad)))
    }

    /// All learnable scalars; complex tensors contribute their real then imaginary parts.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            match layer {
                Layer::ComplexConv(l) => {
                    for t in [&l.kernels, &l.biases] {
                        out.extend_from_slice(t.re());
                        out.extend_from_slice(t.im());
                    }
                }
                Layer::Conv(l) => {
                    out.extend_from_slice(l.weights.data());
                    out.extend_from_slice(l.biases.data());
                }
                Layer::Dense(l) => {
                    out.extend_from_slice(l.weights.data());
                    out.extend_from_slice(l.biases.data());
                }
                _ => {}
            }
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(invalid_input!("expected {} parameters, got {}", self.param_count(), values.len()));
        }
        let mut rest = values;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for layer in &mut self.layers {
            match layer {
                Layer::ComplexConv(l) => {
                    for t in [&mut l.kernels, &mut l.biases] {
                        take(t.re_mut());
                        take(t.im_mut());
                    }
                }
                Layer::Conv(l) => {
                    take(l.weights.data_mut());
                    take(l.biases.data_mut());
                }
                Layer::Dense(l) => {
                    take(l.weights.data_mut());
                    take(l.biases.data_mut());
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Per-layer parameter counts and per-sample activation sizes.
    pub fn count_params(&self) -> ParamTable {
        let encoding = self.config.encoding;
        let mut shape = vec![encoding.channels(), self.config.input_len];
        let mut rows = vec![LayerSummary {
            name: "input".into(),
            output_shape: shape.clone(),
            params: 0,
            activations: shape.iter().product::<usize>() * if encoding.is_complex() { 2 } else { 1 },
        }];
        for layer in &self.layers {
            match layer {
                Layer::ComplexConv(l) => {
                    let len = l.output_len(shape[1]).unwrap_or(0);
                    shape = vec![l.out_channels(), len];
                    let n = l.out_channels() * len;
                    rows.push(LayerSummary {
                        name: "cconv".into(),
                        output_shape: shape.clone(),
                        params: l.param_count(),
                        activations: 2 * n,
                    });
                    rows.push(LayerSummary {
                        name: "abs".into(),
                        output_shape: shape.clone(),
                        params: 0,
                        activations: n,
                    });
                }
                Layer::Conv(l) => {
                    shape = vec![l.out_channels(), l.output_len(shape[1]).unwrap_or(0)];
                    rows.push(LayerSummary {
                        name: "conv".into(),
                        output_shape: shape.clone(),
                        params: l.param_count(),
                        activations: shape.iter().product(),
                    });
                }
                Layer::MaxPool(p) => {
                    shape = vec![shape[0], p.output_len(shape[1]).unwrap_or(0)];
                    rows.push(LayerSummary {
                        name: "pool".into(),
                        output_shape: shape.clone(),
                        params: 0,
                        activations: shape.iter().product(),
                    });
                }
                Layer::Flatten => shape = vec![shape.iter().product()],
                Layer::Dense(l) => {
                    shape = vec![l.outputs()];
                    rows.push(LayerSummary {
                        name: "fc".into(),
                        output_shape: shape.clone(),
                        params: l.param_count(),
                        activations: l.outputs(),
                    });
                }
                Layer::Relu => {}
            }
        }
        ParamTable { rows }
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
