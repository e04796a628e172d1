//! Triangulation of convex polygon faces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, newell_normal, norm, sub};
use crate::mesh::{PolyMesh, TriMesh};

/// Allowed distance of a face vertex from the face plane, relative to the face size.
pub const PLANARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Fan from the first vertex: `k − 2` triangles.
    Fan0,
    /// Fan from an added centroid vertex: `k` triangles.
    Centroid,
    /// Strip alternating between the two ends of the loop: `k − 2` triangles.
    Strip,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Fan0, Strategy::Centroid, Strategy::Strip];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fan0 => "fan0",
            Strategy::Centroid => "centroid",
            Strategy::Strip => "strip",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy `{s}` (expected fan0, centroid or strip)")))
    }
}

/// Largest distance of a face vertex from the plane through the face centroid.
fn planarity_deviation(points: &[[f64; 3]]) -> (f64, f64) {
    let n = newell_normal(points.iter());
    let len = norm(&n);
    let c = centroid(points);
    let size = points.iter().map(|p| norm(&sub(p, &c))).fold(0.0, f64::max);
    if len == 0.0 {
        return (0.0, size);
    }
    let dev = points
        .iter()
        .map(|p| (dot(&n, &sub(p, &c)) / len).abs())
        .fold(0.0, f64::max);
    (dev, size)
}

fn centroid(points: &[[f64; 3]]) -> [f64; 3] {
    let k = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for d in 0..3 {
            c[d] += p[d] / k;
        }
    }
    c
}

/// Vertex order of the strip `i₀, i₁, i_{k−1}, i₂, i_{k−2}, …`.
fn strip_order(k: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(k);
    let (mut lo, mut hi) = (1, k - 1);
    order.push(0);
    while lo <= hi {
        order.push(lo);
        lo += 1;
        if lo <= hi {
            order.push(hi);
            hi -= 1;
        }
    }
    order
}

/// Splits every face into triangles with the chosen strategy, keeping the
/// face orientation. `centroid` appends one vertex per face after the
/// original vertices.
pub fn tessellate(mesh: &PolyMesh, strategy: Strategy) -> Result<TriMesh> {
    let mut vertices = mesh.vertices.clone();
    let mut triangles = Vec::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        let k = f.len();
        if k < 3 {
            return Err(Error::InvalidArgument(format!(
                "face {fi} has {k} vertices; polylines cannot be tessellated"
            )));
        }
        let points: Vec<[f64; 3]> = f.iter().map(|&i| mesh.vertices[i]).collect();
        if k > 3 {
            let (dev, size) = planarity_deviation(&points);
            if dev > PLANARITY_TOL * size.max(1.0) {
                return Err(Error::NonPlanarFace { face: fi, deviation: dev });
            }
        }
        match strategy {
            Strategy::Fan0 => {
                for j in 1..k - 1 {
                    triangles.push([f[0], f[j], f[j + 1]]);
                }
            }
            Strategy::Centroid => {
                let c = vertices.len();
                vertices.push(centroid(&points));
                for j in 0..k {
                    triangles.push([c, f[j], f[(j + 1) % k]]);
                }
            }
            Strategy::Strip => {
                let s: Vec<usize> = strip_order(k).into_iter().map(|j| f[j]).collect();
                for j in 0..k - 2 {
                    // every other strip triangle is flipped to keep the face winding
                    if j % 2 == 0 {
                        triangles.push([s[j], s[j + 1], s[j + 2]]);
                    } else {
                        triangles.push([s[j + 1], s[j], s[j + 2]]);
                    }
                }
            }
        }
    }
    Ok(TriMesh { vertices, triangles })
}
