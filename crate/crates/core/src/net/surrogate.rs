//! Piecewise-linear surrogates for sinusoidal positional encodings.
//!
//! A continuous piecewise-linear function with knots `k_0 < ... < k_{n-1}` is
//! `a + s_0 x + Σ_{j=1}^{n-2} (s_j − s_{j−1}) relu(x − k_j)`, so each encoded
//! feature can be produced by one hidden ReLU layer of hinges followed by a
//! readout layer.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::net::{Activation, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodic {
    Sin,
    Cos,
}

impl Periodic {
    fn eval(self, t: f64) -> f64 {
        match self {
            Periodic::Sin => t.sin(),
            Periodic::Cos => t.cos(),
        }
    }
}

/// Continuous piecewise-linear interpolant with linear extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlSurrogate1D {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PwlSurrogate1D {
    /// Interpolates `values` at strictly increasing `knots`; end segments extend linearly.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::DegenerateKnots(format!(
                "need at least 2 knots with matching values, got {} knots and {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateKnots("knots and values must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateKnots("knots must be strictly increasing".into()));
        }
        let n = knots.len();
        let left_slope = (values[1] - values[0]) / (knots[1] - knots[0]);
        let right_slope = (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2]);
        Ok(PwlSurrogate1D {
            knots,
            values,
            left_slope,
            right_slope,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.left_slope, self.right_slope)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return self.values[0] + self.left_slope * (t - self.knots[0]);
        }
        if t >= self.knots[n - 1] {
            return self.values[n - 1] + self.right_slope * (t - self.knots[n - 1]);
        }
        // first knot strictly greater than t; t lies in [k_{j-1}, k_j)
        let j = self.knots.partition_point(|&k| k <= t);
        let (k0, k1) = (self.knots[j - 1], self.knots[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        if t == k0 {
            return v0;
        }
        v0 + (v1 - v0) * ((t - k0) / (k1 - k0))
    }

    /// Hinge decomposition `(a, s_0, [(k_j, Δs_j)])` for the interior knots.
    pub fn hinge_form(&self) -> (f64, f64, Vec<(f64, f64)>) {
        let n = self.knots.len();
        let slopes: Vec<f64> = (0..n - 1)
            .map(|j| (self.values[j + 1] - self.values[j]) / (self.knots[j + 1] - self.knots[j]))
            .collect();
        let intercept = self.values[0] - slopes[0] * self.knots[0];
        let hinges = (1..n - 1).map(|j| (self.knots[j], slopes[j] - slopes[j - 1])).collect();
        (intercept, slopes[0], hinges)
    }
}

/// Knot grid for frequency `freq`: spacing `2π/(freq·k)`, phase-anchored so
/// `freq·t = π/2` is a knot, covering `[lo, hi]` with one knot at or beyond each end.
fn knot_grid(freq: f64, knots_per_period: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if knots_per_period < 3 {
        return Err(Error::InvalidArgument(format!(
            "knots_per_period must be at least 3, got {knots_per_period}"
        )));
    }
    if !(freq.is_finite() && freq > 0.0) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {freq}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::DegenerateKnots(format!("interval [{lo}, {hi}] spans fewer than 2 knots")));
    }
    let spacing = 2.0 * PI / (freq * knots_per_period as f64);
    let anchor = PI / (2.0 * freq);
    let first = ((lo - anchor) / spacing).floor() as i64;
    let last = ((hi - anchor) / spacing).ceil() as i64;
    let knots: Vec<f64> = (first..=last).map(|m| anchor + m as f64 * spacing).collect();
    if knots.len() < 2 {
        return Err(Error::DegenerateKnots(format!("interval [{lo}, {hi}] spans fewer than 2 knots")));
    }
    Ok(knots)
}

/// Piecewise-linear interpolant of `sin(freq·t)` or `cos(freq·t)` over `[lo, hi]`.
pub fn periodic_surrogate(
    freq: f64,
    kind: Periodic,
    knots_per_period: usize,
    lo: f64,
    hi: f64,
) -> Result<PwlSurrogate1D> {
    let knots = knot_grid(freq, knots_per_period, lo, hi)?;
    let values = knots.iter().map(|&k| kind.eval(freq * k)).collect();
    PwlSurrogate1D::new(knots, values)
}

/// ReLU layers computing a piecewise-linear version of the positional encoding.
///
/// Returns `[hinges, readout]`. For every input coordinate the hinge layer
/// holds `relu(x)`, `relu(−x)` and one `relu(x − k_j)` per interior knot of
/// each frequency. The readout layer emits every encoded feature `g` (in the
/// order `[x, sin(ω₁x), cos(ω₁x), ...]` per coordinate) as the pair
/// `relu(g), relu(−g)`, so a following layer recovers `g = g⁺ − g⁻` exactly.
pub fn pe_to_relu_layers(freqs: &[f64], knots_per_period: usize, domain: &Aabb) -> Result<Vec<Layer>> {
    let dim = domain.dim;
    // (hinge neuron index range, sin surrogate, cos surrogate) per (coordinate, frequency)
    struct Block {
        pos: usize,
        neg: usize,
        per_freq: Vec<(usize, PwlSurrogate1D, PwlSurrogate1D)>,
    }

    let mut hinge_rows: Vec<(usize, f64)> = Vec::new(); // (coordinate, offset)
    let mut blocks = Vec::with_capacity(dim);
    for d in 0..dim {
        let (lo, hi) = (domain.lo[d], domain.hi[d]);
        let pos = hinge_rows.len();
        hinge_rows.push((d, 0.0));
        let neg = hinge_rows.len();
        hinge_rows.push((d, f64::NAN)); // marks the negated pass-through neuron
        let mut per_freq = Vec::with_capacity(freqs.len());
        for &w in freqs {
            let s = periodic_surrogate(w, Periodic::Sin, knots_per_period, lo, hi)?;
            let c = periodic_surrogate(w, Periodic::Cos, knots_per_period, lo, hi)?;
            let start = hinge_rows.len();
            let interior = &s.knots()[1..s.knots().len() - 1];
            hinge_rows.extend(interior.iter().map(|&k| (d, k)));
            per_freq.push((start, s, c));
        }
        blocks.push(Block { pos, neg, per_freq });
    }

    let n_hidden = hinge_rows.len();
    let mut w1 = vec![0.0; n_hidden * dim];
    let mut b1 = vec![0.0; n_hidden];
    for (r, &(d, k)) in hinge_rows.iter().enumerate() {
        if k.is_nan() {
            w1[r * dim + d] = -1.0;
        } else {
            w1[r * dim + d] = 1.0;
            b1[r] = -k;
        }
    }
    let hinges = Layer::from_flat(n_hidden, dim, w1, b1, Activation::Relu);

    let mut w2: Vec<f64> = Vec::new();
    let mut b2: Vec<f64> = Vec::new();
    let mut push_pair = |row: Vec<f64>, bias: f64| {
        w2.extend(row.iter().copied());
        b2.push(bias);
        w2.extend(row.iter().map(|v| -v));
        b2.push(-bias);
    };
    for block in &blocks {
        let mut row = vec![0.0; n_hidden];
        row[block.pos] = 1.0;
        row[block.neg] = -1.0;
        push_pair(row, 0.0);
        for (start, s, c) in &block.per_freq {
            for surrogate in [s, c] {
                let (a, s0, hs) = surrogate.hinge_form();
                let mut row = vec![0.0; n_hidden];
                row[block.pos] = s0;
                row[block.neg] = -s0;
                for (j, &(_, ds)) in hs.iter().enumerate() {
                    row[start + j] = ds;
                }
                push_pair(row, a);
            }
        }
    }
    let n_out = b2.len();
    let readout = Layer::from_flat(n_out, n_hidden, w2, b2, Activation::Relu);
    Ok(vec![hinges, readout])
}
