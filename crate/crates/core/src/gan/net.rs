//! Fully connected networks with leaky-ReLU hidden layers and hand-written
//! reverse-mode gradients.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputSquash {
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    /// Input, hidden and output widths.
    pub sizes: Vec<usize>,
    pub leaky_slope: f64,
    pub output: OutputSquash,
}

impl NetSpec {
    pub fn new(sizes: Vec<usize>, leaky_slope: f64, output: OutputSquash) -> Result<Self> {
        if sizes.len() < 3 {
            return Err(Error::Shape(format!(
                "need input, >= 1 hidden and output layer, got sizes {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Shape(format!("layer sizes must be >= 1, got {sizes:?}")));
        }
        if !leaky_slope.is_finite() {
            return Err(Error::Shape("leaky slope must be finite".into()));
        }
        Ok(Self {
            sizes,
            leaky_slope,
            output,
        })
    }

    /// Generator taking `concat(z, c)`.
    pub fn generator(z_dim: usize, c_dim: usize, hidden: &[usize], out_dim: usize, slope: f64, output: OutputSquash) -> Result<Self> {
        let mut sizes = vec![z_dim + c_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(out_dim);
        Self::new(sizes, slope, output)
    }

    /// Discriminator taking `concat(x, c)` and returning a probability.
    pub fn discriminator(x_dim: usize, c_dim: usize, hidden: &[usize], slope: f64) -> Result<Self> {
        let mut sizes = vec![x_dim + c_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self::new(sizes, slope, OutputSquash::Sigmoid)
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated nonempty")
    }

    /// `(rows, cols)` of each weight matrix; each is followed by a bias of
    /// length `rows` in the flat vector.
    pub fn schema(&self) -> Vec<(usize, usize)> {
        self.sizes.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn n_params(&self) -> usize {
        self.schema().iter().map(|(r, c)| r * c + r).sum()
    }

    fn lrelu(&self, v: f64) -> f64 {
        if v > 0.0 {
            v
        } else {
            self.leaky_slope * v
        }
    }

    fn lrelu_grad(&self, v: f64) -> f64 {
        if v > 0.0 {
            1.0
        } else {
            self.leaky_slope
        }
    }
}

/// Flat parameter vector with its layer schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBundle {
    schema: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl ParamBundle {
    pub fn new(schema: Vec<(usize, usize)>, values: Vec<f64>) -> Result<Self> {
        let total: usize = schema.iter().map(|(r, c)| r * c + r).sum();
        if values.len() != total {
            return Err(Error::Shape(format!("{} values for a schema of {total}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter bundle".into()));
        }
        Ok(Self { schema, values })
    }

    pub fn zeros(spec: &NetSpec) -> Self {
        Self {
            schema: spec.schema(),
            values: vec![0.0; spec.n_params()],
        }
    }

    /// He initialization for leaky ReLU, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: &NetSpec, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(spec.n_params());
        let gain = 2.0 / (1.0 + spec.leaky_slope * spec.leaky_slope);
        for (rows, cols) in spec.schema() {
            let std = (gain / cols as f64).sqrt();
            for _ in 0..rows * cols {
                let z: f64 = StandardNormal.sample(rng);
                values.push(std * z);
            }
            values.extend(std::iter::repeat_n(0.0, rows));
        }
        Self {
            schema: spec.schema(),
            values,
        }
    }

    pub fn schema(&self) -> &[(usize, usize)] {
        &self.schema
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.schema.len());
        let mut at = 0;
        for (r, c) in &self.schema {
            off.push(at);
            at += r * c + r;
        }
        off
    }

    /// Weight matrix (row-major) and bias of layer `k`.
    pub fn layer(&self, k: usize) -> (&[f64], &[f64]) {
        let at = self.offsets()[k];
        let (r, c) = self.schema[k];
        (&self.values[at..at + r * c], &self.values[at + r * c..at + r * c + r])
    }

    fn check(&self, spec: &NetSpec) -> Result<()> {
        if self.schema != spec.schema() {
            return Err(Error::Shape(format!(
                "parameter schema {:?} does not match network {:?}",
                self.schema,
                spec.schema()
            )));
        }
        Ok(())
    }
}

/// Activations retained by [`forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

pub fn forward(spec: &NetSpec, params: &ParamBundle, input: &[f64]) -> Result<Trace> {
    params.check(spec)?;
    if input.len() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "network expects {} inputs, got {}",
            spec.input_dim(),
            input.len()
        )));
    }
    let layers = spec.sizes.len() - 1;
    let mut inputs = Vec::with_capacity(layers);
    let mut pre = Vec::with_capacity(layers);
    let mut a = input.to_vec();
    for k in 0..layers {
        let (w, b) = params.layer(k);
        let (rows, cols) = params.schema[k];
        let z: Vec<f64> = (0..rows)
            .map(|i| {
                let row = &w[i * cols..(i + 1) * cols];
                b[i] + row.iter().zip(&a).map(|(wi, ai)| wi * ai).sum::<f64>()
            })
            .collect();
        let next = if k + 1 < layers {
            z.iter().map(|&v| spec.lrelu(v)).collect()
        } else {
            match spec.output {
                OutputSquash::Linear => z.clone(),
                OutputSquash::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            }
        };
        inputs.push(a);
        pre.push(z);
        a = next;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    Ok(Trace {
        inputs,
        pre,
        output: a,
    })
}

/// Accumulates `dL/dparams` into `grad_params` and returns `dL/dinput`,
/// given `dL/doutput`.
pub fn backward(spec: &NetSpec, params: &ParamBundle, trace: &Trace, grad_output: &[f64], grad_params: &mut [f64]) -> Result<Vec<f64>> {
    if grad_output.len() != spec.output_dim() || grad_params.len() != params.len() {
        return Err(Error::Shape("gradient buffer sizes do not match the network".into()));
    }
    let layers = spec.sizes.len() - 1;
    let offsets = params.offsets();
    let last = &trace.pre[layers - 1];
    let mut g: Vec<f64> = match spec.output {
        OutputSquash::Linear => grad_output.to_vec(),
        OutputSquash::Sigmoid => grad_output
            .iter()
            .zip(last)
            .map(|(go, &z)| {
                let s = sigmoid(z);
                go * s * (1.0 - s)
            })
            .collect(),
    };
    for k in (0..layers).rev() {
        let (rows, cols) = params.schema[k];
        let (w, _) = params.layer(k);
        let at = offsets[k];
        let a = &trace.inputs[k];
        for i in 0..rows {
            let gw = &mut grad_params[at + i * cols..at + (i + 1) * cols];
            for (gwj, aj) in gw.iter_mut().zip(a) {
                *gwj += g[i] * aj;
            }
            grad_params[at + rows * cols + i] += g[i];
        }
        let mut ga = vec![0.0; cols];
        for i in 0..rows {
            let row = &w[i * cols..(i + 1) * cols];
            for (gaj, wij) in ga.iter_mut().zip(row) {
                *gaj += wij * g[i];
            }
        }
        if k == 0 {
            if ga.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("input gradient".into()));
            }
            return Ok(ga);
        }
        g = ga
            .iter()
            .zip(&trace.pre[k - 1])
            .map(|(gai, &z)| gai * spec.lrelu_grad(z))
            .collect();
    }
    unreachable!("networks have at least one layer")
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Generator output for `concat(z, c)`.
pub fn gen_forward(spec: &NetSpec, params: &ParamBundle, z: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    Ok(forward(spec, params, &[z, c].concat())?.output)
}

/// Discriminator probability for `concat(x, c)`, clamped to
/// `[PROB_EPS, 1 - PROB_EPS]`.
pub fn disc_forward(spec: &NetSpec, params: &ParamBundle, x: &[f64], c: &[f64]) -> Result<f64> {
    if spec.output_dim() != 1 || spec.output != OutputSquash::Sigmoid {
        return Err(Error::Shape("discriminator must have one sigmoid output".into()));
    }
    let p = forward(spec, params, &[x, c].concat())?.output[0];
    Ok(super::loss::clamp_prob(p))
}
