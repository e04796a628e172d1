//! Sound range bounds of a network tail over a box, in affine arithmetic.
//!
//! Values are `center + Σ coeffs[i]·ε_i ± err` with one noise symbol `ε_i ∈ [−1, 1]`
//! per box dimension. Arithmetic runs in `f32`; every step folds a bound on its
//! rounding error (and on the `f64 → f32` conversion of the weights) into
//! `err`, so the returned interval always contains the exact `f64` range.
//! Nonlinear ReLU contributions are condensed into `err` instead of creating
//! new noise symbols.

use crate::geometry::Aabb;
use crate::net::{Activation, AffineMap, Network};

pub const MAX_SYMBOLS: usize = 3;

const EPS: f32 = f32::EPSILON;
// absorbs underflow in tiny products
const TINY: f32 = f32::MIN_POSITIVE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineForm {
    pub center: f32,
    pub coeffs: [f32; MAX_SYMBOLS],
    pub err: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeResult {
    pub lo: f64,
    pub hi: f64,
}

impl RangeResult {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// True when the range certifies a constant sign (it cannot contain a root).
    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

impl AffineForm {
    pub fn zero() -> Self {
        AffineForm {
            center: 0.0,
            coeffs: [0.0; MAX_SYMBOLS],
            err: 0.0,
        }
    }

    pub fn constant(c: f32) -> Self {
        AffineForm {
            center: c,
            ..Self::zero()
        }
    }

    /// Total deviation radius `Σ|coeffs| + err`, rounded up.
    pub fn radius(&self) -> f32 {
        let s: f32 = self.coeffs.iter().map(|c| c.abs()).sum::<f32>() + self.err;
        s * (1.0 + 4.0 * EPS) + TINY
    }

    fn magnitude(&self) -> f32 {
        self.center.abs() + self.radius()
    }

    /// Outward-rounded enclosure `[lo, hi]` of the represented values.
    pub fn interval(&self) -> (f32, f32) {
        let r = self.radius();
        let pad = EPS * (self.center.abs() + r) + TINY;
        (self.center - r - pad, self.center + r + pad)
    }

    pub fn range(&self) -> RangeResult {
        let (lo, hi) = self.interval();
        RangeResult {
            lo: lo as f64,
            hi: hi as f64,
        }
    }
}

/// Sound affine relaxation of `max(0, t)`.
///
/// On a sign-changing interval `[l, u]` it uses the min-range linearization
/// `λ = u/(u−l)`, `δ = −λl/2`, i.e. `relu(t) ∈ λt + δ ± δ`.
pub fn relu_affine(a: &AffineForm) -> AffineForm {
    relu_affine_on(a, a.interval())
}

/// [`relu_affine`] where the argument is known to stay inside `[l, u]`, an
/// interval that may be tighter than the form's own.
fn relu_affine_on(a: &AffineForm, (l, u): (f32, f32)) -> AffineForm {
    let (l0, u0) = a.interval();
    let (l, u) = (l.max(l0), u.min(u0));
    if l >= 0.0 {
        return *a;
    }
    if u <= 0.0 {
        return AffineForm::zero();
    }
    let lambda = u / (u - l);
    let delta = -lambda * l * 0.5;
    let mut out = AffineForm {
        center: lambda * a.center + delta,
        coeffs: [0.0; MAX_SYMBOLS],
        err: lambda * a.err + delta,
    };
    for (o, c) in out.coeffs.iter_mut().zip(&a.coeffs) {
        *o = lambda * c;
    }
    // rounding in λ, δ and the scaled terms; λ's relative error moves the
    // supporting lines by at most a few ulp of (u − l)
    let pad = 8.0 * EPS * (lambda * a.magnitude() + delta + (u - l)) + TINY;
    out.err = out.err * (1.0 + 4.0 * EPS) + pad;
    out
}

/// `out[k] = Σ_j w[k, j]·inputs[j] + b[k]` over affine forms.
fn affine_layer(inputs: &[AffineForm], w: &[f64], b: &[f64], out: &mut Vec<AffineForm>) {
    let cols = inputs.len();
    let rows = b.len();
    debug_assert_eq!(w.len(), rows * cols);
    let mags: Vec<f32> = inputs.iter().map(AffineForm::magnitude).collect();
    // dot-product rounding plus weight conversion, with slack
    let gamma = (2 * cols + 8) as f32 * EPS;
    out.clear();
    for k in 0..rows {
        let bk = b[k] as f32;
        let mut f = AffineForm::constant(bk);
        let mut mag = (b[k].abs() as f32) * (1.0 + EPS);
        for (j, a) in inputs.iter().enumerate() {
            let wj = w[k * cols + j] as f32;
            if wj == 0.0 {
                continue;
            }
            f.center += wj * a.center;
            for s in 0..MAX_SYMBOLS {
                f.coeffs[s] += wj * a.coeffs[s];
            }
            f.err += wj.abs() * a.err;
            mag += wj.abs() * mags[j];
        }
        f.err = f.err * (1.0 + 4.0 * EPS) + gamma * mag * (1.0 + 4.0 * EPS) + TINY;
        out.push(f);
    }
}

fn activate(forms: &mut [AffineForm], act: Activation) {
    if act == Activation::Relu {
        for f in forms.iter_mut() {
            *f = relu_affine(f);
        }
    }
}

/// Affine forms of the box coordinates, one noise symbol per dimension.
pub fn box_forms(bx: &Aabb) -> Vec<AffineForm> {
    (0..bx.dim)
        .map(|k| {
            let c64 = 0.5 * (bx.lo[k] + bx.hi[k]);
            let c = c64 as f32;
            // radius covering both box ends from the rounded center
            let r64 = (bx.hi[k] - c as f64).max(c as f64 - bx.lo[k]).max(0.0);
            let mut r = r64 as f32;
            if (r as f64) < r64 {
                r = r.next_up();
            }
            let mut f = AffineForm::constant(c);
            f.coeffs[k] = r;
            f
        })
        .collect()
}

/// Bounds the network tail starting at layer `start_layer` over `bx`.
///
/// `entry` maps box coordinates to the values entering the tail: for
/// `start_layer > 0` these are the pre-activations of layer `start_layer − 1`
/// (that layer's activation is applied before continuing), for
/// `start_layer == 0` they are the network inputs themselves. With
/// `start_layer == num_layers` the entry map is the network output.
pub fn bound_over_box(net: &Network, start_layer: usize, entry: &AffineMap, bx: &Aabb) -> RangeResult {
    bound_over_box_hinted(net, start_layer, entry, bx, EntryHints::default())
}

/// Extra knowledge about the entry values over the region actually bounded,
/// which may be smaller than the box.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntryHints<'a> {
    /// Fixed activation states of the first entry neurons (`true` passes the
    /// value, `false` zeroes it).
    pub known: &'a [bool],
    /// Enclosures `[lo, hi]` of every entry value over the region.
    pub ranges: Option<&'a [(f64, f64)]>,
}

/// Like [`bound_over_box`], refined with `hints` that hold on a subset of `bx`.
/// The result then bounds the network over that subset only.
pub fn bound_over_box_hinted(
    net: &Network,
    start_layer: usize,
    entry: &AffineMap,
    bx: &Aabb,
    hints: EntryHints<'_>,
) -> RangeResult {
    let layers = net.layers();
    debug_assert!(start_layer <= layers.len());
    debug_assert_eq!(entry.cols, bx.dim);
    debug_assert!(hints.known.is_empty() || start_layer > 0);
    let mut cur = Vec::with_capacity(entry.rows);
    affine_layer(&box_forms(bx), &entry.w, &entry.b, &mut cur);
    if start_layer == layers.len() {
        debug_assert_eq!(cur.len(), 1);
        let r = cur[0].range();
        return match hints.ranges {
            Some(&[(lo, hi)]) => RangeResult {
                lo: r.lo.max(lo),
                hi: r.hi.min(hi),
            },
            _ => r,
        };
    }
    if start_layer > 0 {
        let relu = layers[start_layer - 1].activation == Activation::Relu;
        for (i, f) in cur.iter_mut().enumerate() {
            if let Some(&m) = hints.known.get(i) {
                if !m {
                    *f = AffineForm::zero();
                }
            } else if relu {
                *f = match hints.ranges {
                    Some(r) => relu_affine_on(f, outward(r[i])),
                    None => relu_affine(f),
                };
            }
        }
    }
    let mut next = Vec::new();
    for layer in &layers[start_layer..] {
        affine_layer(&cur, layer.weights(), layer.bias(), &mut next);
        activate(&mut next, layer.activation);
        std::mem::swap(&mut cur, &mut next);
    }
    debug_assert_eq!(cur.len(), 1);
    cur[0].range()
}

fn outward((lo, hi): (f64, f64)) -> (f32, f32) {
    let mut l = lo as f32;
    if l as f64 > lo {
        l = l.next_down();
    }
    let mut h = hi as f32;
    if (h as f64) < hi {
        h = h.next_up();
    }
    (l, h)
}

/// Bounds the whole network over `bx`.
pub fn bound_network(net: &Network, bx: &Aabb) -> RangeResult {
    bound_over_box(net, 0, &AffineMap::identity(net.input_dim()), bx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Layer;

    fn form(center: f32, c0: f32) -> AffineForm {
        let mut f = AffineForm::constant(center);
        f.coeffs[0] = c0;
        f
    }

    #[test]
    fn relu_on_positive_interval_is_identity() {
        let f = form(1.5, 0.5);
        assert_eq!(relu_affine(&f), f);
    }

    #[test]
    fn relu_on_negative_interval_is_zero() {
        let r = relu_affine(&form(-1.5, 0.5));
        assert_eq!(r, AffineForm::zero());
        assert!(r.interval().0 <= 0.0);
    }

    #[test]
    fn relu_on_straddling_interval() {
        let r = relu_affine(&form(0.0, 1.0));
        let (lo, hi) = r.interval();
        assert!(lo <= 0.0 && hi >= 1.0, "[{lo}, {hi}]");
        assert!(hi - lo <= 2.0);
        // containment over dense samples of t = ε, ε ∈ [−1, 1]
        for i in 0..=1000 {
            let e = -1.0 + 2.0 * i as f32 / 1000.0;
            let exact = e.max(0.0);
            let lin = r.center + r.coeffs[0] * e;
            assert!((exact - lin).abs() <= r.err, "ε={e}");
        }
    }

    #[test]
    fn linear_tail_is_exact_up_to_rounding() {
        let layer = Layer::new(vec![vec![2.0, 0.0]], vec![-1.0], Activation::Linear).unwrap();
        let net = Network::new(2, vec![layer], None).unwrap();
        let r = bound_network(&net, &Aabb::new(&[0.0, 0.0], &[1.0, 1.0]));
        assert!(r.lo <= -1.0 && r.lo > -1.0 - 1e-5, "{r:?}");
        assert!(r.hi >= 1.0 && r.hi < 1.0 + 1e-5, "{r:?}");
    }

    #[test]
    fn degenerate_box_gives_point_range() {
        let layer = Layer::new(vec![vec![2.0, 3.0]], vec![-1.0], Activation::Linear).unwrap();
        let net = Network::new(2, vec![layer], None).unwrap();
        let r = bound_network(&net, &Aabb::new(&[0.25, 0.5], &[0.25, 0.5]));
        assert!(r.contains(1.0));
        assert!(r.hi - r.lo < 1e-4, "{r:?}");
    }

    #[test]
    fn box_forms_cover_box() {
        let bx = Aabb::new(&[0.1, -0.3], &[0.7000001, 0.2]);
        for (k, f) in box_forms(&bx).iter().enumerate() {
            let (lo, hi) = f.interval();
            assert!(lo as f64 <= bx.lo[k] && hi as f64 >= bx.hi[k]);
        }
    }
}
