//! Marching Cubes over a regular grid of network samples.

mod tables;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::mesh::TriMesh;
use crate::net::Network;
use tables::{EDGE_TABLE, TRIANGLE_TABLE};

/// `resolution` cubes per axis, so `resolution + 1` samples per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub domain: Aabb,
}

impl GridSpec {
    pub fn new(resolution: usize, domain: Aabb) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!("grid resolution must be at least 2, got {resolution}")));
        }
        if domain.dim != 3 || !domain.is_valid() {
            return Err(Error::InvalidArgument("grid domain must be a nondegenerate 3D box".into()));
        }
        Ok(GridSpec { resolution, domain })
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let r = self.resolution as f64;
        let (lo, hi) = (self.domain.lo, self.domain.hi);
        [
            lo[0] + (hi[0] - lo[0]) * (i as f64 / r),
            lo[1] + (hi[1] - lo[1]) * (j as f64 / r),
            lo[2] + (hi[2] - lo[2]) * (k as f64 / r),
        ]
    }
}

// (axis, dx, dy, dz) of each cube edge's lower endpoint
/// Vertex key, exact corner hit if any, and position of one edge crossing.
type Crossing = (usize, Option<usize>, [f64; 3]);

const EDGES: [(usize, usize, usize, usize); 12] = [
    (0, 0, 0, 0),
    (1, 1, 0, 0),
    (0, 0, 1, 0),
    (1, 0, 0, 0),
    (0, 0, 0, 1),
    (1, 1, 0, 1),
    (0, 0, 1, 1),
    (1, 0, 0, 1),
    (2, 0, 0, 0),
    (2, 1, 0, 0),
    (2, 1, 1, 0),
    (2, 0, 1, 0),
];

const CORNERS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

struct Samples {
    n: usize,
    values: Vec<f64>,
}

impl Samples {
    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(k * self.n + j) * self.n + i]
    }
}

fn sample(net: &Network, grid: &GridSpec) -> Samples {
    let n = grid.resolution + 1;
    let values = (0..n)
        .into_par_iter()
        .flat_map_iter(|k| {
            let points: Vec<[f64; 3]> = (0..n * n).map(|q| grid.point(q % n, q / n, k)).collect();
            net.eval_batch(&points)
        })
        .collect();
    Samples { n, values }
}

/// Triangle mesh of the sampled zero level set, wound so that normals point
/// toward positive values.
///
/// A corner counts as inside when its value is negative. Edge vertices are
/// interpolated linearly from the lower to the upper grid endpoint, so
/// neighbouring cubes produce identical points. A value of exactly zero at a
/// corner yields one shared vertex there, and triangles collapsed by it are
/// dropped.
pub fn marching_cubes(net: &Network, grid: &GridSpec) -> Result<TriMesh> {
    if net.input_dim() != 3 {
        return Err(Error::InvalidArgument("marching cubes needs a 3D network".into()));
    }
    let s = sample(net, grid);
    let (n, r) = (s.n, grid.resolution);
    let lin = |i: usize, j: usize, k: usize| (k * n + j) * n + i;

    // one vertex per sign-changing grid edge; a crossing exactly at a grid
    // corner is shared by every edge meeting there
    let crossings: Vec<Vec<Crossing>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let v0 = s.at(i, j, k);
                    for (axis, (ii, jj, kk)) in [(i + 1, j, k), (i, j + 1, k), (i, j, k + 1)].into_iter().enumerate() {
                        if ii > r || jj > r || kk > r {
                            continue;
                        }
                        let v1 = s.at(ii, jj, kk);
                        if (v0 < 0.0) == (v1 < 0.0) {
                            continue;
                        }
                        let key = 3 * lin(i, j, k) + axis;
                        let (p0, p1) = (grid.point(i, j, k), grid.point(ii, jj, kk));
                        let item = if v0 == 0.0 {
                            (key, Some(lin(i, j, k)), p0)
                        } else if v1 == 0.0 {
                            (key, Some(lin(ii, jj, kk)), p1)
                        } else {
                            let t = v0 / (v0 - v1);
                            (key, None, std::array::from_fn(|c| p0[c] + t * (p1[c] - p0[c])))
                        };
                        out.push(item);
                    }
                }
            }
            out
        })
        .collect();
    let mut vertices = Vec::new();
    let mut edge_vertex: HashMap<usize, usize> = HashMap::with_capacity(crossings.iter().map(Vec::len).sum());
    let mut corner_vertex: HashMap<usize, usize> = HashMap::new();
    for (key, corner, p) in crossings.into_iter().flatten() {
        let idx = match corner {
            Some(c) => *corner_vertex.entry(c).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            }),
            None => {
                vertices.push(p);
                vertices.len() - 1
            }
        };
        edge_vertex.insert(key, idx);
    }

    let triangles: Vec<[usize; 3]> = (0..r)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut out = Vec::new();
            for j in 0..r {
                for i in 0..r {
                    let mut case = 0usize;
                    for (c, &(dx, dy, dz)) in CORNERS.iter().enumerate() {
                        if s.at(i + dx, j + dy, k + dz) < 0.0 {
                            case |= 1 << c;
                        }
                    }
                    if EDGE_TABLE[case] == 0 {
                        continue;
                    }
                    let vert = |e: i8| {
                        let (axis, dx, dy, dz) = EDGES[e as usize];
                        edge_vertex[&(3 * lin(i + dx, j + dy, k + dz) + axis)]
                    };
                    for t in TRIANGLE_TABLE[case].chunks(3).take_while(|t| t[0] >= 0) {
                        // the table winds toward the inside
                        let tri = [vert(t[0]), vert(t[2]), vert(t[1])];
                        if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                            out.push(tri);
                        }
                    }
                }
            }
            out
        })
        .collect();

    Ok(TriMesh { vertices, triangles })
}
