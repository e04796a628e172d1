//! Surface accuracy and triangle quality metrics.
//!
//! Soft precision is the mean `|f|` over points sampled uniformly on the
//! reconstructed surface. Soft recall projects reference points onto the
//! zero set with normalized Newton steps and averages their distance to the
//! reconstructed mesh.

mod bvh;
mod quality;

pub use bvh::{closest_point_on_triangle, TriangleBvh};
pub use quality::{
    equiangle_skew, triangle_quality, triangle_shape, Histogram, QualityHistograms, QualitySummary, TriangleQuality,
};

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{PolyMesh, TriMesh};
use crate::net::Network;

pub const DEFAULT_SAMPLES: usize = 1 << 20;

/// Area-weighted uniform samples on a triangle mesh.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let areas: Vec<f64> = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).collect();
    let pick = WeightedIndex::new(&areas).map_err(|_| Error::EmptyMesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let [a, b, c] = mesh.triangle(pick.sample(&mut rng));
            let s = rng.gen::<f64>().sqrt();
            let r = rng.gen::<f64>();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r), s * r);
            std::array::from_fn(|k| wa * a[k] + wb * b[k] + wc * c[k])
        })
        .collect())
}

/// Length-weighted uniform samples on the segments of a polyline mesh.
pub fn sample_polyline(mesh: &PolyMesh, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let segs: Vec<[[f64; 3]; 2]> = mesh
        .faces
        .iter()
        .filter(|f| f.len() == 2)
        .map(|f| [mesh.vertices[f[0]], mesh.vertices[f[1]]])
        .collect();
    let lens: Vec<f64> = segs
        .iter()
        .map(|[a, b]| (0..3).map(|k| (b[k] - a[k]).powi(2)).sum::<f64>().sqrt())
        .collect();
    let pick = WeightedIndex::new(&lens).map_err(|_| Error::EmptyMesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let [a, b] = segs[pick.sample(&mut rng)];
            let t = rng.gen::<f64>();
            std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
        })
        .collect())
}

fn mean_abs(net: &Network, points: &[[f64; 3]]) -> f64 {
    let d = net.input_dim();
    let inputs: Vec<&[f64]> = points.iter().map(|p| &p[..d]).collect();
    let values = net.eval_batch(&inputs);
    values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
}

/// Mean `|f|` over `n_samples` area-weighted samples of the mesh.
pub fn soft_precision(net: &Network, mesh: &TriMesh, n_samples: usize, seed: u64) -> Result<f64> {
    if mesh.is_empty() || n_samples == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok(mean_abs(net, &sample_surface(mesh, n_samples, seed)?))
}

/// Soft precision of a 2D polyline (points stored with `z = 0`).
pub fn soft_precision_polyline(net: &Network, mesh: &PolyMesh, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::EmptyMesh);
    }
    Ok(mean_abs(net, &sample_polyline(mesh, n_samples, seed)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Step scale `η` of `x ← x − η f ∇f / ‖∇f‖²`.
    pub step: f64,
    pub iters: usize,
    /// Stop once `|f|` falls to this value.
    pub tol: f64,
    /// Central difference spacing for `∇f`.
    pub h: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            step: 1.0,
            iters: 50,
            tol: 1e-6,
            h: 1e-5,
        }
    }
}

pub fn gradient(net: &Network, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + h;
            let fp = net.eval(&p);
            p[k] = x[k] - h;
            let fm = net.eval(&p);
            p[k] = x[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Moves `x` toward the zero set. Returns `None` if `|f|` was not reduced.
pub fn project_to_zero_set(net: &Network, x: &[f64], cfg: &ProjectionConfig) -> Option<Vec<f64>> {
    let mut p = x.to_vec();
    let f0 = net.eval(&p);
    let mut f = f0;
    for _ in 0..cfg.iters {
        if f.abs() <= cfg.tol {
            break;
        }
        let g = gradient(net, &p, cfg.h);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 == 0.0 || !g2.is_finite() {
            break;
        }
        for (pk, gk) in p.iter_mut().zip(&g) {
            *pk -= cfg.step * f * gk / g2;
        }
        f = net.eval(&p);
        if !f.is_finite() {
            return None;
        }
    }
    (f.abs() <= cfg.tol || f.abs() < f0.abs()).then_some(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    /// Mean distance of the projected points to the mesh.
    pub value: f64,
    pub used: usize,
    /// Points dropped because the projection did not reduce `|f|`.
    pub dropped: usize,
}

/// Mean point-to-triangle distance from projected reference points to `mesh`.
pub fn soft_recall(net: &Network, mesh: &TriMesh, reference: &[[f64; 3]], cfg: &ProjectionConfig) -> Result<RecallResult> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("no reference points".into()));
    }
    if net.input_dim() != 3 {
        return Err(Error::InvalidArgument("soft recall needs a 3D network".into()));
    }
    let bvh = TriangleBvh::new(mesh);
    let dists: Vec<Option<f64>> = reference
        .par_iter()
        .map(|x| {
            project_to_zero_set(net, x, cfg).map(|p| bvh.nearest_distance(&[p[0], p[1], p[2]]))
        })
        .collect();
    let used: Vec<f64> = dists.iter().flatten().copied().collect();
    let dropped = dists.len() - used.len();
    if used.is_empty() {
        return Err(Error::AllPointsDiverged(dists.len()));
    }
    if dropped > 0 {
        log::warn!("soft recall: {dropped} of {} reference points diverged and were dropped", dists.len());
    }
    Ok(RecallResult {
        value: used.iter().sum::<f64>() / used.len() as f64,
        used: used.len(),
        dropped,
    })
}

/// Points on the closed-form shape recorded in a fixture's metadata.
///
/// Supported shapes: `sphere` (radius), `two_spheres` (radius, offset along
/// x), `octahedron` (radius), `box` (half_extent), `circle2d` (radius, z = 0).
pub fn reference_from_metadata(meta: &serde_json::Value, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let shape = meta.get("shape").and_then(|s| s.as_str()).unwrap_or("");
    let num = |key: &str| {
        meta.get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::InvalidArgument(format!("fixture metadata for `{shape}` lacks `{key}`")))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_dir = |rng: &mut ChaCha8Rng| loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let l2: f64 = v.iter().map(|c| c * c).sum();
        if l2 > 1e-6 && l2 <= 1.0 {
            let l = l2.sqrt();
            return v.map(|c| c / l);
        }
    };
    let points = match shape {
        "sphere" => {
            let r = num("radius")?;
            (0..n).map(|_| unit_dir(&mut rng).map(|c| r * c)).collect()
        }
        "two_spheres" => {
            let (r, o) = (num("radius")?, num("offset")?);
            (0..n)
                .map(|i| {
                    let d = unit_dir(&mut rng);
                    let cx = if i % 2 == 0 { -o } else { o };
                    [cx + r * d[0], r * d[1], r * d[2]]
                })
                .collect()
        }
        "octahedron" => {
            let r = num("radius")?;
            (0..n)
                .map(|_| {
                    // uniform on a random face: barycentric weights of the three axis tips
                    let s = rng.gen::<f64>().sqrt();
                    let t = rng.gen::<f64>();
                    let w = [1.0 - s, s * (1.0 - t), s * t];
                    std::array::from_fn(|k| if rng.gen() { r * w[k] } else { -r * w[k] })
                })
                .collect()
        }
        "box" => {
            let h = num("half_extent")?;
            (0..n)
                .map(|_| {
                    let axis = rng.gen_range(0..3);
                    let side = if rng.gen() { h } else { -h };
                    std::array::from_fn(|k| if k == axis { side } else { rng.gen_range(-h..=h) })
                })
                .collect()
        }
        "circle2d" => {
            let r = num("radius")?;
            (0..n)
                .map(|_| {
                    let t = rng.gen_range(0.0..2.0 * PI);
                    [r * t.cos(), r * t.sin(), 0.0]
                })
                .collect()
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "fixture shape `{other}` has no closed-form reference"
            )))
        }
    };
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriQualityMeans {
    pub theta_min_mean: f64,
    pub theta_max_mean: f64,
    pub equiangle_skew_mean: f64,
    pub edge_ratio_mean: f64,
}

impl From<&QualitySummary> for TriQualityMeans {
    fn from(q: &QualitySummary) -> Self {
        TriQualityMeans {
            theta_min_mean: q.theta_min_mean,
            theta_max_mean: q.theta_max_mean,
            equiangle_skew_mean: q.equiangle_skew_mean,
            edge_ratio_mean: q.edge_ratio_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub soft_precision: f64,
    pub soft_precision_e6: f64,
    pub soft_recall: Option<f64>,
    pub soft_recall_e6: Option<f64>,
    pub recall_dropped: usize,
    pub tri_quality: Option<TriQualityMeans>,
    pub histograms: Option<QualityHistograms>,
    pub triangle_count: usize,
    /// Time taken to produce the mesh, when known.
    pub runtime_s: Option<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.prec$}"))
}

/// Aligned text table, one row per report. SP and SR are scaled by 10⁶,
/// triangle counts divided by 10³.
pub fn format_table(rows: &[(String, &MetricReport)]) -> String {
    let header = ["method", "SP×1e6", "SR×1e6", "tris/1e3", "θm", "θM", "skew", "Lr", "time[s]"];
    let body: Vec<[String; 9]> = rows
        .iter()
        .map(|(name, r)| {
            let q = r.tri_quality.as_ref();
            [
                name.clone(),
                format!("{:.4}", r.soft_precision_e6),
                opt(r.soft_recall_e6, 4),
                format!("{:.3}", r.triangle_count as f64 / 1e3),
                opt(q.map(|q| q.theta_min_mean), 2),
                opt(q.map(|q| q.theta_max_mean), 2),
                opt(q.map(|q| q.equiangle_skew_mean), 3),
                opt(q.map(|q| q.edge_ratio_mean), 2),
                opt(r.runtime_s, 3),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|row| row[c].chars().count())
                .chain(std::iter::once(header[c].chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let pad = widths[c] - s.chars().count();
                if c == 0 {
                    format!("{s}{}", " ".repeat(pad))
                } else {
                    format!("{}{s}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    for row in &body {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}
