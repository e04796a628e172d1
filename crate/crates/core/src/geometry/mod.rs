//! Convex cells and exact plane clipping.
//!
//! 2D cells are counterclockwise polygons, 3D cells are boundary-represented
//! convex polyhedra whose face loops wind counterclockwise seen from outside.
//! Both are cut by hyperplanes `w·x + b = 0` with a Sutherland-Hodgman style
//! walk; vertices within a small dead zone of the plane are treated as lying
//! on it and are shared by both halves.

mod polygon;
mod polyhedron;

pub use polygon::{clip_polygon, Polygon2, PolygonClip};
pub use polyhedron::{clip_polyhedron, Polygon3, Polyhedron3, PolyhedronClip};
pub(crate) use polyhedron::newell_normal;

use serde::{Deserialize, Serialize};

/// Geometric tolerances shared by clipping, welding and extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative dead zone for "on the plane" classification.
    pub on: f64,
    /// Vertex welding distance.
    pub weld: f64,
    /// Minimum polygon area for a clipped side to be kept.
    pub area: f64,
    /// Minimum polyhedron volume for a clipped side to be kept.
    pub volume: f64,
    /// Convexity check slack.
    pub geom: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on: 1e-12,
            weld: 1e-10,
            area: 1e-18,
            volume: 1e-24,
            geom: 1e-9,
        }
    }
}

/// Axis-aligned box in 2 or 3 dimensions. Unused trailing components are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub dim: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        assert!(lo.len() == hi.len() && (1..=3).contains(&lo.len()));
        let mut b = Aabb {
            dim: lo.len(),
            lo: [0.0; 3],
            hi: [0.0; 3],
        };
        b.lo[..lo.len()].copy_from_slice(lo);
        b.hi[..hi.len()].copy_from_slice(hi);
        b
    }

    /// The cube `[-h, h]^dim`.
    pub fn symmetric(dim: usize, h: f64) -> Self {
        Aabb::new(&vec![-h; dim], &vec![h; dim])
    }

    /// Smallest box containing all points; `None` for an empty slice.
    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Aabb::new(first, first);
        for p in &points[1..] {
            for (k, &x) in p.iter().enumerate() {
                b.lo[k] = b.lo[k].min(x);
                b.hi[k] = b.hi[k].max(x);
            }
        }
        Some(b)
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }

    pub fn is_valid(&self) -> bool {
        (0..self.dim).all(|k| self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k])
    }
}

/// The hyperplane `normal·x + offset = 0`; the negative side is `normal·x + offset <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpaceCut<const D: usize> {
    pub normal: [f64; D],
    pub offset: f64,
}

impl<const D: usize> HalfSpaceCut<D> {
    pub fn new(normal: [f64; D], offset: f64) -> Self {
        debug_assert!(normal.iter().any(|&w| w != 0.0), "cut normal must be nonzero");
        HalfSpaceCut { normal, offset }
    }

    /// Builds a cut from a matrix row and bias entry.
    pub fn from_row(row: &[f64], offset: f64) -> Self {
        let mut normal = [0.0; D];
        normal.copy_from_slice(&row[..D]);
        HalfSpaceCut { normal, offset }
    }

    pub fn eval(&self, p: &[f64; D]) -> f64 {
        dot(&self.normal, p) + self.offset
    }

    pub fn normal_len(&self) -> f64 {
        norm(&self.normal)
    }

    /// Signed classification with dead zone `eps·‖w‖·(1 + ‖p‖)`.
    pub(crate) fn classify(&self, p: &[f64; D], value: f64, eps: f64) -> i8 {
        let scale = self.normal_len() * (1.0 + norm(p));
        if value.abs() <= eps * scale {
            0
        } else if value < 0.0 {
            -1
        } else {
            1
        }
    }
}

pub(crate) fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        s += a[k] * b[k];
    }
    s
}

pub(crate) fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    let mut r = [0.0; D];
    for k in 0..D {
        r[k] = a[k] - b[k];
    }
    r
}

pub(crate) fn lerp<const D: usize>(a: &[f64; D], b: &[f64; D], t: f64) -> [f64; D] {
    let mut r = [0.0; D];
    for k in 0..D {
        r[k] = a[k] + t * (b[k] - a[k]);
    }
    r
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Intersection of segment `a→b` with the cut, given the signed values at both ends.
pub(crate) fn edge_crossing<const D: usize>(a: &[f64; D], b: &[f64; D], da: f64, db: f64) -> [f64; D] {
    let t = da / (da - db);
    lerp(a, b, t)
}
