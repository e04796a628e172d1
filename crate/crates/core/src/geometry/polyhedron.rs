use std::collections::HashMap;

use super::{cross, dot, edge_crossing, norm, sub, HalfSpaceCut, Tolerances};
use crate::error::{Error, Result};

/// Planar polygon in 3D, vertices in loop order.
pub type Polygon3 = Vec<[f64; 3]>;

/// Convex polyhedron in boundary representation.
///
/// Face loops wind counterclockwise seen from outside (outward normal by the
/// right-hand rule) and index into `vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron3 {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

/// Result of cutting a polyhedron by a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedronClip {
    /// Part where `w·x + b <= 0`.
    pub neg: Option<Polyhedron3>,
    /// Part where `w·x + b >= 0`.
    pub pos: Option<Polyhedron3>,
    /// The section on the plane, wound so that its normal points along `+w`.
    pub cap: Option<Polygon3>,
}

impl Polyhedron3 {
    /// Axis-aligned box; vertex `i` has coordinate bits `(x, y, z) = (i & 1, i & 2, i & 4)`.
    pub fn cuboid(lo: [f64; 3], hi: [f64; 3]) -> Self {
        let vertices = (0..8)
            .map(|i| {
                [
                    if i & 1 == 0 { lo[0] } else { hi[0] },
                    if i & 2 == 0 { lo[1] } else { hi[1] },
                    if i & 4 == 0 { lo[2] } else { hi[2] },
                ]
            })
            .collect();
        let faces = vec![
            vec![0, 2, 3, 1],
            vec![4, 5, 7, 6],
            vec![0, 1, 5, 4],
            vec![2, 6, 7, 3],
            vec![0, 4, 6, 2],
            vec![1, 3, 7, 5],
        ];
        Polyhedron3 { vertices, faces }
    }

    /// Volume by the divergence theorem, relative to the vertex centroid.
    pub fn volume(&self) -> f64 {
        let c = self.vertex_centroid();
        let mut v6 = 0.0;
        for f in &self.faces {
            let p0 = sub(&self.vertices[f[0]], &c);
            for k in 1..f.len().saturating_sub(1) {
                let p1 = sub(&self.vertices[f[k]], &c);
                let p2 = sub(&self.vertices[f[k + 1]], &c);
                v6 += dot(&p0, &cross(&p1, &p2));
            }
        }
        v6 / 6.0
    }

    pub fn vertex_centroid(&self) -> [f64; 3] {
        let n = self.vertices.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.vertices {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }

    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..f.len()).map(move |i| (f[i].min(f[(i + 1) % f.len()]), f[i].max(f[(i + 1) % f.len()]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// `V − E + F`; 2 for any valid cell.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Every directed edge appears exactly once and its reverse exactly once.
    pub fn is_closed_manifold(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for i in 0..f.len() {
                *directed.entry((f[i], f[(i + 1) % f.len()])).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Newell normal of face `f` (not normalized).
    pub fn face_normal(&self, f: usize) -> [f64; 3] {
        newell_normal(self.faces[f].iter().map(|&i| &self.vertices[i]))
    }

    /// Every vertex lies inside every face plane within `eps`.
    pub fn is_convex(&self, eps: f64) -> bool {
        for (fi, f) in self.faces.iter().enumerate() {
            let n = self.face_normal(fi);
            let len = norm(&n);
            if len == 0.0 {
                return false;
            }
            let p0 = self.vertices[f[0]];
            for v in &self.vertices {
                if dot(&n, &sub(v, &p0)) / len > eps {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn approx_bytes(&self) -> usize {
        self.vertices.len() * 24 + self.faces.iter().map(|f| f.len() * 8 + 24).sum::<usize>()
    }
}

pub(crate) fn newell_normal<'a>(points: impl Iterator<Item = &'a [f64; 3]> + Clone) -> [f64; 3] {
    let pts: Vec<&[f64; 3]> = points.collect();
    let n = pts.len();
    let mut nrm = [0.0; 3];
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        nrm[0] += (a[1] - b[1]) * (a[2] + b[2]);
        nrm[1] += (a[2] - b[2]) * (a[0] + b[0]);
        nrm[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    nrm
}

/// Splits a convex polyhedron by a plane.
///
/// Each face loop is clipped Sutherland-Hodgman style; crossing points are
/// shared between the two faces of an edge. The open boundary left on each
/// side is closed by a cap face assembled from the unmatched directed edges,
/// which for a convex cell form exactly one loop. Sides thinner than
/// `tol.volume` are reported absent.
pub fn clip_polyhedron(p: &Polyhedron3, cut: &HalfSpaceCut<3>, tol: &Tolerances) -> Result<PolyhedronClip> {
    let values: Vec<f64> = p.vertices.iter().map(|v| cut.eval(v)).collect();
    let signs: Vec<i8> = p
        .vertices
        .iter()
        .zip(&values)
        .map(|(v, &d)| cut.classify(v, d, tol.on))
        .collect();
    let has_neg = signs.iter().any(|&s| s < 0);
    let has_pos = signs.iter().any(|&s| s > 0);

    if !has_neg || !has_pos {
        // a face lying on the plane is the section
        let cap = p
            .faces
            .iter()
            .find(|f| f.iter().all(|&i| signs[i] == 0))
            .map(|f| {
                let mut loop_: Polygon3 = f.iter().map(|&i| p.vertices[i]).collect();
                if dot(&newell_normal(loop_.iter()), &cut.normal) < 0.0 {
                    loop_.reverse();
                }
                loop_
            });
        let whole = Some(p.clone());
        return Ok(if has_pos {
            PolyhedronClip {
                neg: None,
                pos: whole,
                cap,
            }
        } else {
            PolyhedronClip {
                neg: whole,
                pos: None,
                cap,
            }
        });
    }

    // new vertices are appended after the originals and keyed by their edge
    let mut verts = p.vertices.clone();
    let mut crossings: HashMap<(usize, usize), usize> = HashMap::new();
    let mut neg_faces: Vec<Vec<usize>> = Vec::with_capacity(p.faces.len() + 1);
    let mut pos_faces: Vec<Vec<usize>> = Vec::with_capacity(p.faces.len() + 1);

    for f in &p.faces {
        let n = f.len();
        let mut nf = Vec::with_capacity(n + 2);
        let mut pf = Vec::with_capacity(n + 2);
        for k in 0..n {
            let (a, b) = (f[k], f[(k + 1) % n]);
            if signs[a] <= 0 {
                nf.push(a);
            }
            if signs[a] >= 0 {
                pf.push(a);
            }
            if signs[a] * signs[b] < 0 {
                let key = (a.min(b), a.max(b));
                let idx = *crossings.entry(key).or_insert_with(|| {
                    let (u, w) = key;
                    verts.push(edge_crossing(&p.vertices[u], &p.vertices[w], values[u], values[w]));
                    verts.len() - 1
                });
                nf.push(idx);
                pf.push(idx);
            }
        }
        if nf.len() >= 3 {
            neg_faces.push(nf);
        }
        if pf.len() >= 3 {
            pos_faces.push(pf);
        }
    }

    let neg_cap = close_with_cap(&neg_faces)?;
    let mut pos_cap = neg_cap.clone();
    pos_cap.reverse();
    neg_faces.push(neg_cap.clone());
    pos_faces.push(pos_cap);

    let neg = compact(&verts, neg_faces).filter(|q| q.volume() >= tol.volume);
    let pos = compact(&verts, pos_faces).filter(|q| q.volume() >= tol.volume);
    let cap = if neg.is_some() && pos.is_some() {
        Some(neg_cap.iter().map(|&i| verts[i]).collect())
    } else {
        None
    };
    Ok(PolyhedronClip { neg, pos, cap })
}

/// Loop of reversed boundary edges that closes an open face set.
fn close_with_cap(faces: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    for f in faces {
        for i in 0..f.len() {
            directed.insert((f[i], f[(i + 1) % f.len()]), ());
        }
    }
    // cap edge b→a for every boundary edge a→b
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) && next.insert(b, a).is_some() {
            return Err(Error::Topology(format!("vertex {b} starts two section edges")));
        }
    }
    if next.len() < 3 {
        return Err(Error::Topology(format!("section has only {} edges", next.len())));
    }
    let start = *next.keys().min().expect("nonempty");
    let mut loop_ = vec![start];
    let mut cur = start;
    loop {
        let n = *next
            .get(&cur)
            .ok_or_else(|| Error::Topology(format!("section loop breaks at vertex {cur}")))?;
        if n == start {
            break;
        }
        if loop_.len() > next.len() {
            return Err(Error::Topology("section edges do not close".into()));
        }
        loop_.push(n);
        cur = n;
    }
    if loop_.len() != next.len() {
        return Err(Error::Topology(format!(
            "section splits into several loops ({} of {} edges in the first)",
            loop_.len(),
            next.len()
        )));
    }
    Ok(loop_)
}

/// Keeps only referenced vertices, renumbered in order of first use.
fn compact(verts: &[[f64; 3]], faces: Vec<Vec<usize>>) -> Option<Polyhedron3> {
    if faces.len() < 4 {
        return None;
    }
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let faces = faces
        .into_iter()
        .map(|f| {
            f.into_iter()
                .map(|i| {
                    *remap.entry(i).or_insert_with(|| {
                        vertices.push(verts[i]);
                        vertices.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    Some(Polyhedron3 { vertices, faces })
}
