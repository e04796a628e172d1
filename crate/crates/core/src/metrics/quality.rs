//! Per-triangle shape quality: extreme angles, equiangle skew, edge ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cross, dot, norm, sub};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleQuality {
    /// Smallest angle in degrees.
    pub theta_min: f64,
    /// Largest angle in degrees.
    pub theta_max: f64,
    /// `max((θ_M − 60)/120, (60 − θ_m)/60)`, 0 for equilateral triangles.
    pub skew: f64,
    /// Longest over shortest edge.
    pub edge_ratio: f64,
}

/// Bin counts over `edges`; values outside the range go to the first or last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Self {
        assert!(edges.len() >= 2 && edges.windows(2).all(|w| w[0] < w[1]));
        let counts = vec![0; edges.len() - 1];
        Histogram { edges, counts }
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram::new((0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect())
    }

    pub fn add(&mut self, v: f64) {
        let last = self.counts.len() - 1;
        let bin = self.edges[1..].iter().position(|&e| v < e).unwrap_or(last).min(last);
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityHistograms {
    pub theta_min: Histogram,
    pub theta_max: Histogram,
    pub equiangle_skew: Histogram,
    pub edge_ratio: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySummary {
    pub theta_min_mean: f64,
    pub theta_max_mean: f64,
    pub equiangle_skew_mean: f64,
    pub edge_ratio_mean: f64,
    pub histograms: QualityHistograms,
    #[serde(skip)]
    pub per_triangle: Vec<TriangleQuality>,
}

impl QualitySummary {
    /// CSV with one row per triangle.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("triangle,theta_min,theta_max,equiangle_skew,edge_ratio\n");
        for (i, q) in self.per_triangle.iter().enumerate() {
            s.push_str(&format!("{i},{},{},{},{}\n", q.theta_min, q.theta_max, q.skew, q.edge_ratio));
        }
        s
    }
}

pub fn equiangle_skew(theta_min: f64, theta_max: f64) -> f64 {
    ((theta_max - 60.0) / 120.0).max((60.0 - theta_min) / 60.0)
}

/// Quality of one triangle, `None` if it is degenerate (zero edge or zero area).
pub fn triangle_shape(tri: &[[f64; 3]; 3]) -> Option<TriangleQuality> {
    let mut angles = [0.0; 3];
    let mut lens = [0.0; 3];
    for k in 0..3 {
        let a = &tri[k];
        let u = sub(&tri[(k + 1) % 3], a);
        let v = sub(&tri[(k + 2) % 3], a);
        let c = norm(&cross(&u, &v));
        if c == 0.0 {
            return None;
        }
        angles[k] = c.atan2(dot(&u, &v)).to_degrees();
        lens[k] = norm(&u);
    }
    let theta_min = angles.iter().copied().fold(f64::INFINITY, f64::min);
    let theta_max = angles.iter().copied().fold(0.0, f64::max);
    let l_min = lens.iter().copied().fold(f64::INFINITY, f64::min);
    let l_max = lens.iter().copied().fold(0.0, f64::max);
    Some(TriangleQuality {
        theta_min,
        theta_max,
        skew: equiangle_skew(theta_min, theta_max).clamp(0.0, 1.0),
        edge_ratio: l_max / l_min,
    })
}

pub fn triangle_quality(mesh: &TriMesh) -> Result<QualitySummary> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let per_triangle = (0..mesh.triangles.len())
        .map(|t| triangle_shape(&mesh.triangle(t)).ok_or(Error::DegenerateTriangle { index: t }))
        .collect::<Result<Vec<_>>>()?;
    let mut h = QualityHistograms {
        theta_min: Histogram::uniform(0.0, 60.0, 12),
        theta_max: Histogram::uniform(60.0, 180.0, 12),
        equiangle_skew: Histogram::uniform(0.0, 1.0, 10),
        edge_ratio: Histogram::new(vec![1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0, f64::INFINITY]),
    };
    let n = per_triangle.len() as f64;
    let mut sums = [0.0; 4];
    for q in &per_triangle {
        sums[0] += q.theta_min;
        sums[1] += q.theta_max;
        sums[2] += q.skew;
        sums[3] += q.edge_ratio;
        h.theta_min.add(q.theta_min);
        h.theta_max.add(q.theta_max);
        h.equiangle_skew.add(q.skew);
        h.edge_ratio.add(q.edge_ratio);
    }
    Ok(QualitySummary {
        theta_min_mean: sums[0] / n,
        theta_max_mean: sums[1] / n,
        equiangle_skew_mean: sums[2] / n,
        edge_ratio_mean: sums[3] / n,
        histograms: h,
        per_triangle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral() {
        let q = triangle_shape(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]]).unwrap();
        assert!((q.theta_min - 60.0).abs() < 1e-12 && (q.theta_max - 60.0).abs() < 1e-12);
        assert!(q.skew.abs() < 1e-12);
        assert!((q.edge_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_isoceles() {
        let q = triangle_shape(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert!((q.theta_max - 90.0).abs() < 1e-12);
        assert!((q.theta_min - 45.0).abs() < 1e-12);
        assert!((q.skew - 0.25).abs() < 1e-12);
        assert!((q.edge_ratio - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_is_named() {
        let mesh = TriMesh {
            vertices: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]],
            triangles: vec![[0, 1, 2], [0, 1, 3]],
        };
        assert!(matches!(triangle_quality(&mesh), Err(Error::DegenerateTriangle { index: 1 })));
    }

    #[test]
    fn histogram_bins() {
        let mut h = Histogram::uniform(0.0, 1.0, 4);
        for v in [0.0, 0.3, 0.99, 1.0, 7.0, -1.0] {
            h.add(v);
        }
        assert_eq!(h.counts, vec![2, 1, 0, 3]);
        assert_eq!(h.total(), 6);
    }
}
