//! ReLU multilayer perceptrons: representation, JSON I/O and evaluation.
//!
//! A network maps `R^d` (d = 2 or 3) to a scalar. Layer `k` computes
//! `z = W a + b` followed by its activation; every hidden layer is a ReLU and
//! only the final layer may be linear. Networks trained with a sinusoidal
//! positional encoding carry an [`Encoding`]; they evaluate exactly, and
//! [`Network::with_pwl_surrogate`] turns them into plain ReLU networks for
//! extraction.

mod surrogate;

pub use surrogate::{pe_to_relu_layers, periodic_surrogate, Periodic, PwlSurrogate1D};

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;

/// Half-width of the default domain `[-0.95, 0.95]^d`.
pub const DEFAULT_DOMAIN_HALF_WIDTH: f64 = 0.95;

const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn parse(s: &str, layer: usize) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::UnsupportedActivation {
                layer,
                activation: other.to_string(),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }
}

/// One fully connected layer; weights are row-major, one row per output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        Self::checked(weights, bias, activation, 0)
    }

    fn checked(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation, index: usize) -> Result<Self> {
        let rows = weights.len();
        if rows == 0 {
            return Err(Error::ShapeMismatch {
                layer: index,
                detail: "layer has no neurons".into(),
            });
        }
        if rows != bias.len() {
            return Err(Error::ShapeMismatch {
                layer: index,
                detail: format!("{rows} weight rows but {} bias entries", bias.len()),
            });
        }
        let cols = weights[0].len();
        let mut flat = Vec::with_capacity(rows * cols);
        for (r, row) in weights.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    layer: index,
                    detail: format!("row {r} has {} columns, expected {cols}", row.len()),
                });
            }
            flat.extend_from_slice(row);
        }
        if flat.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("layer {index} contains a non-finite value")));
        }
        Ok(Layer {
            rows,
            cols,
            weights: flat,
            bias,
            activation,
        })
    }

    pub fn from_flat(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Self {
        assert_eq!(weights.len(), rows * cols);
        assert_eq!(bias.len(), rows);
        Layer {
            rows,
            cols,
            weights,
            bias,
            activation,
        }
    }

    /// Number of output neurons.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of inputs.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activations `W x + b`.
    pub fn pre_activation(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.cols);
        out.clear();
        for i in 0..self.rows {
            let mut acc = 0.0;
            for (w, x) in self.row(i).iter().zip(input) {
                acc += w * x;
            }
            out.push(acc + self.bias[i]);
        }
    }

    /// Post-activations `σ(W x + b)`.
    pub fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        self.pre_activation(input, out);
        if self.activation == Activation::Relu {
            for v in out.iter_mut() {
                *v = v.max(0.0);
            }
        }
    }

    fn to_file(&self) -> LayerFile {
        LayerFile {
            weights: (0..self.rows).map(|i| self.row(i).to_vec()).collect(),
            bias: self.bias.clone(),
            activation: self.activation.name().to_string(),
        }
    }
}

/// Applies `layers` in order, including each layer's activation.
pub fn apply_layers(layers: &[Layer], x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let mut next = Vec::new();
    for layer in layers {
        layer.forward(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Sinusoidal positional encoding applied before the first layer.
///
/// Per input coordinate the features are `[x, sin(ω₁x), cos(ω₁x), sin(ω₂x), ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub freqs: Vec<f64>,
}

impl Encoding {
    pub fn features_per_dim(&self) -> usize {
        1 + 2 * self.freqs.len()
    }

    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len() * self.features_per_dim());
        for &t in x {
            out.push(t);
            for &w in &self.freqs {
                out.push((w * t).sin());
                out.push((w * t).cos());
            }
        }
        out
    }
}

/// An affine map `x ↦ W x + b` with `W` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        let mut w = vec![0.0; d * d];
        for i in 0..d {
            w[i * d + i] = 1.0;
        }
        AffineMap {
            rows: d,
            cols: d,
            w,
            b: vec![0.0; d],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.cols..(i + 1) * self.cols]
    }

    /// Component `i` of the map at `x`.
    #[inline]
    pub fn eval_row(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.row(i).iter().zip(x) {
            acc += w * v;
        }
        acc + self.b[i]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.eval_row(i, x)).collect()
    }
}

/// A layered ReLU MLP over an axis-aligned domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
    domain: Aabb,
    encoding: Option<Encoding>,
    metadata: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DomainFile {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoding: Option<Encoding>,
    layers: Vec<LayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>, domain: Option<Aabb>) -> Result<Self> {
        let domain = domain.unwrap_or_else(|| Aabb::symmetric(input_dim, DEFAULT_DOMAIN_HALF_WIDTH));
        let net = Network {
            input_dim,
            layers,
            domain,
            encoding: None,
            metadata: None,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn with_encoding(mut self, encoding: Encoding) -> Result<Self> {
        self.encoding = Some(encoding);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.input_dim) {
            return Err(Error::InvalidNetwork(format!(
                "input_dim must be 2 or 3, got {}",
                self.input_dim
            )));
        }
        if self.layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        if self.domain.dim != self.input_dim {
            return Err(Error::InvalidNetwork(format!(
                "domain has {} dimensions, network input has {}",
                self.domain.dim, self.input_dim
            )));
        }
        if !self.domain.is_valid() {
            return Err(Error::InvalidNetwork("domain must satisfy lo < hi componentwise".into()));
        }
        let first_cols = match &self.encoding {
            Some(enc) => {
                if enc.freqs.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                    return Err(Error::InvalidNetwork("encoding frequencies must be positive".into()));
                }
                self.input_dim * enc.features_per_dim()
            }
            None => self.input_dim,
        };
        let mut expected = first_cols;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.cols != expected {
                return Err(Error::ShapeMismatch {
                    layer: i,
                    detail: format!("expects {} inputs, previous stage provides {expected}", layer.cols),
                });
            }
            if i < last && layer.activation != Activation::Relu {
                return Err(Error::UnsupportedActivation {
                    layer: i,
                    activation: layer.activation.name().to_string(),
                });
            }
            expected = layer.rows;
        }
        if expected != 1 {
            return Err(Error::ShapeMismatch {
                layer: last,
                detail: format!("final layer must have 1 output, has {expected}"),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut layers = Vec::with_capacity(file.layers.len());
        for (i, lf) in file.layers.into_iter().enumerate() {
            let act = Activation::parse(&lf.activation, i)?;
            layers.push(Layer::checked(lf.weights, lf.bias, act, i)?);
        }
        let domain = match file.domain {
            Some(d) => {
                if d.lo.len() != file.input_dim || d.hi.len() != file.input_dim {
                    return Err(Error::InvalidNetwork("domain bounds must have input_dim entries".into()));
                }
                Some(Aabb::new(&d.lo, &d.hi))
            }
            None => None,
        };
        let domain = domain.unwrap_or_else(|| Aabb::symmetric(file.input_dim.clamp(1, 3), DEFAULT_DOMAIN_HALF_WIDTH));
        let net = Network {
            input_dim: file.input_dim,
            layers,
            domain,
            encoding: file.encoding,
            metadata: file.metadata,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            input_dim: self.input_dim,
            domain: Some(DomainFile {
                lo: self.domain.lo().to_vec(),
                hi: self.domain.hi().to_vec(),
            }),
            encoding: self.encoding.clone(),
            layers: self.layers.iter().map(Layer::to_file).collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string(&file).expect("network serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn set_domain(&mut self, domain: Aabb) -> Result<()> {
        let old = std::mem::replace(&mut self.domain, domain);
        if let Err(e) = self.validate() {
            self.domain = old;
            return Err(e);
        }
        Ok(())
    }

    pub fn encoding(&self) -> Option<&Encoding> {
        self.encoding.as_ref()
    }

    /// Free-form generator metadata carried through from the file.
    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    pub fn set_metadata(&mut self, metadata: Option<serde_json::Value>) {
        self.metadata = metadata;
    }

    /// Total neuron count over hidden layers.
    pub fn hidden_neurons(&self) -> usize {
        self.layers[..self.layers.len() - 1].iter().map(Layer::rows).sum()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Evaluates the network at `x` in 64-bit arithmetic.
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim, "point dimension does not match network input");
        let mut cur = match &self.encoding {
            Some(enc) => enc.encode(x),
            None => x.to_vec(),
        };
        let mut next = Vec::with_capacity(cur.len());
        for layer in &self.layers {
            layer.forward(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Evaluates every point; bitwise identical to calling [`Network::eval`] on each.
    pub fn eval_batch<P: AsRef<[f64]> + Sync>(&self, xs: &[P]) -> Vec<f64> {
        xs.par_chunks(EVAL_CHUNK).flat_map_iter(|c| self.eval_chunk(c)).collect()
    }

    /// Layer-by-layer evaluation of a few points at once, stored feature-major
    /// so the inner loop runs over points. The summation order per point is
    /// the one of [`Layer::pre_activation`].
    fn eval_chunk<P: AsRef<[f64]>>(&self, xs: &[P]) -> Vec<f64> {
        let m = xs.len();
        let mut cur = Vec::new();
        for (p, x) in xs.iter().enumerate() {
            let x = x.as_ref();
            assert_eq!(x.len(), self.input_dim, "point dimension does not match network input");
            let feats = match &self.encoding {
                Some(enc) => enc.encode(x),
                None => x.to_vec(),
            };
            if p == 0 {
                cur = vec![0.0; feats.len() * m];
            }
            for (c, v) in feats.into_iter().enumerate() {
                cur[c * m + p] = v;
            }
        }
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            next.resize(layer.rows * m, 0.0);
            for (r, out) in next.chunks_exact_mut(m.max(1)).enumerate().take(layer.rows) {
                for (c, &w) in layer.row(r).iter().enumerate() {
                    for (o, &x) in out.iter_mut().zip(&cur[c * m..(c + 1) * m]) {
                        *o += w * x;
                    }
                }
                let b = layer.bias[r];
                for o in out.iter_mut() {
                    *o += b;
                    if layer.activation == Activation::Relu {
                        *o = o.max(0.0);
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur.truncate(m);
        cur
    }

    /// Replaces the positional encoding by exact piecewise-linear ReLU layers.
    ///
    /// The result is a plain ReLU network whose sinusoidal features are
    /// interpolated at `knots_per_period` knots per period over the domain.
    pub fn with_pwl_surrogate(&self, knots_per_period: usize) -> Result<Network> {
        let enc = self
            .encoding
            .as_ref()
            .ok_or_else(|| Error::InvalidNetwork("network has no positional encoding".into()))?;
        let mut layers = pe_to_relu_layers(&enc.freqs, knots_per_period, &self.domain)?;
        // The surrogate emits each feature g as the pair (relu(g), relu(-g)),
        // so the first original layer sees g = g⁺ − g⁻.
        let first = &self.layers[0];
        let mut w = Vec::with_capacity(first.rows * first.cols * 2);
        for i in 0..first.rows {
            for &v in first.row(i) {
                w.push(v);
                w.push(-v);
            }
        }
        layers.push(Layer::from_flat(
            first.rows,
            first.cols * 2,
            w,
            first.bias.clone(),
            first.activation,
        ));
        layers.extend(self.layers[1..].iter().cloned());
        let mut net = Network::new(self.input_dim, layers, Some(self.domain))?;
        net.metadata = self.metadata.clone();
        Ok(net)
    }
}
