//! Indexed meshes, vertex welding and OBJ input/output.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::engine::SurfacePatch;
use crate::error::{Error, Result};
use crate::geometry::{cross, norm, sub, Tolerances};

/// Indexed polygon mesh. Faces with two indices are polyline segments (2D
/// extraction results, stored with `z = 0`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolyMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Number of connected components of the graph given by `edges`, over the
/// vertices that appear in some edge.
fn component_count(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in edges {
        used[a] = true;
        used[b] = true;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).filter(|&i| used[i] && find(&mut parent, i) == i).count()
}

impl PolyMesh {
    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// True when every face is a two-point segment.
    pub fn is_polyline(&self) -> bool {
        !self.faces.is_empty() && self.faces.iter().all(|f| f.len() == 2)
    }

    fn face_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.faces.iter().flat_map(|f| {
            let n = f.len();
            let count = if n == 2 { 1 } else { n };
            (0..count).map(move |i| (f[i], f[(i + 1) % n]))
        })
    }

    /// Undirected edge → number of incident faces.
    pub fn edge_face_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for (a, b) in self.face_edges() {
            *m.entry(edge_key(a, b)).or_insert(0) += 1;
        }
        m
    }

    pub fn edge_count(&self) -> usize {
        self.edge_face_counts().len()
    }

    /// Every edge is shared by exactly two faces, and every directed edge
    /// appears once (consistent orientation). For polylines: every vertex has
    /// degree two.
    pub fn is_watertight(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        if self.is_polyline() {
            let mut deg = vec![0usize; self.vertices.len()];
            for f in &self.faces {
                deg[f[0]] += 1;
                deg[f[1]] += 1;
            }
            return deg.iter().all(|&d| d == 0 || d == 2);
        }
        let mut directed = HashSet::new();
        for e in self.face_edges() {
            if !directed.insert(e) {
                return false;
            }
        }
        self.edge_face_counts().values().all(|&c| c == 2)
    }

    /// Connected components through shared vertices.
    pub fn connected_components(&self) -> usize {
        component_count(self.vertices.len(), self.face_edges())
    }

    /// Component label of each face, numbered in order of first appearance.
    pub fn component_labels(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (a, b) in self.face_edges() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut labels = HashMap::new();
        self.faces
            .iter()
            .map(|f| {
                let root = find(&mut parent, f[0]);
                let next = labels.len();
                *labels.entry(root).or_insert(next)
            })
            .collect()
    }

    /// Sum of face areas (polygon meshes) or segment lengths (polylines).
    pub fn measure(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                if f.len() == 2 {
                    norm(&sub(&self.vertices[f[1]], &self.vertices[f[0]]))
                } else {
                    polygon_area(f.iter().map(|&i| &self.vertices[i]))
                }
            })
            .sum()
    }
}

/// Area of a planar polygon in 3D.
pub fn polygon_area<'a>(points: impl Iterator<Item = &'a [f64; 3]> + Clone) -> f64 {
    0.5 * norm(&crate::geometry::newell_normal(points))
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle(t);
        0.5 * norm(&cross(&sub(&b, &a), &sub(&c, &a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn to_poly(&self) -> PolyMesh {
        PolyMesh {
            vertices: self.vertices.clone(),
            faces: self.triangles.iter().map(|t| t.to_vec()).collect(),
        }
    }

    /// Fails if some face is not a triangle.
    pub fn from_poly(mesh: &PolyMesh) -> Result<TriMesh> {
        let triangles = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                <[usize; 3]>::try_from(f.as_slice())
                    .map_err(|_| Error::InvalidArgument(format!("face {i} has {} vertices, expected 3", f.len())))
            })
            .collect::<Result<_>>()?;
        Ok(TriMesh {
            vertices: mesh.vertices.clone(),
            triangles,
        })
    }
}

/// Spatial hash that merges points closer than `eps`, first come first served.
pub(crate) struct Welder {
    eps: f64,
    cell: f64,
    grid: HashMap<[i64; 3], Vec<usize>>,
    pub(crate) vertices: Vec<[f64; 3]>,
}

impl Welder {
    pub(crate) fn new(eps: f64) -> Self {
        Welder {
            eps,
            cell: eps.max(f64::MIN_POSITIVE) * 2.0,
            grid: HashMap::new(),
            vertices: Vec::new(),
        }
    }

    fn key(&self, p: &[f64; 3]) -> [i64; 3] {
        p.map(|c| (c / self.cell).floor() as i64)
    }

    pub(crate) fn insert(&mut self, p: [f64; 3]) -> usize {
        let k = self.key(&p);
        let mut best: Option<usize> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &i in ids {
                            if norm(&sub(&self.vertices[i], &p)) <= self.eps && best.is_none_or(|b| i < b) {
                                best = Some(i);
                            }
                        }
                    }
                }
            }
        }
        if let Some(i) = best {
            return i;
        }
        let i = self.vertices.len();
        self.vertices.push(p);
        self.grid.entry(k).or_default().push(i);
        i
    }
}

/// Merges patch vertices within `tol.weld` into an indexed mesh.
///
/// Consecutive repeated indices are collapsed; faces left with too few
/// vertices, and faces repeating the vertex set of an earlier face, are dropped.
pub fn weld(patches: &[SurfacePatch], tol: &Tolerances) -> PolyMesh {
    let mut welder = Welder::new(tol.weld);
    let mut faces = Vec::with_capacity(patches.len());
    let mut seen = HashSet::new();
    for p in patches {
        let mut f: Vec<usize> = Vec::with_capacity(p.points.len());
        for &q in &p.points {
            let i = welder.insert(q);
            if f.last() != Some(&i) {
                f.push(i);
            }
        }
        while f.len() > 1 && f.first() == f.last() {
            f.pop();
        }
        let min_len = if p.points.len() == 2 { 2 } else { 3 };
        if f.len() < min_len {
            continue;
        }
        let mut key = f.clone();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        if seen.insert(key) {
            faces.push(f);
        }
    }
    PolyMesh {
        vertices: welder.vertices,
        faces,
    }
}

/// Writes `v`/`f` records (and `l` for segments) with 17 significant digits.
pub fn write_obj<W: Write>(mesh: &PolyMesh, out: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for v in &mesh.vertices {
        writeln!(w, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    for f in &mesh.faces {
        w.write_all(if f.len() == 2 { b"l" } else { b"f" })?;
        for i in f {
            write!(w, " {}", i + 1)?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Reads `v`, `f` and `l` records; other records are ignored. Face entries of
/// the form `i/t/n` use the vertex index, negative indices count from the end.
/// Polylines with more than two points become consecutive segments.
pub fn read_obj<R: std::io::Read>(input: R) -> Result<PolyMesh> {
    let mut mesh = PolyMesh::default();
    for (ln, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::Obj {
            line: ln + 1,
            msg: e.to_string(),
        })?;
        let err = |msg: String| Error::Obj { line: ln + 1, msg };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coordinate {t:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if c.len() < 2 {
                    return Err(err("vertex needs at least 2 coordinates".into()));
                }
                mesh.vertices.push([c[0], c[1], c.get(2).copied().unwrap_or(0.0)]);
            }
            Some(kind @ ("f" | "l")) => {
                let n = mesh.vertices.len() as i64;
                let idx: Vec<usize> = parts
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|e| err(format!("bad index {t:?}: {e}")))?;
                        let i = if i < 0 { n + i } else { i - 1 };
                        if i < 0 || i >= n {
                            return Err(err(format!("index {t} out of range")));
                        }
                        Ok(i as usize)
                    })
                    .collect::<Result<_>>()?;
                if kind == "l" {
                    if idx.len() < 2 {
                        return Err(err("line needs at least 2 vertices".into()));
                    }
                    mesh.faces.extend(idx.windows(2).map(|w| w.to_vec()));
                } else {
                    if idx.len() < 3 {
                        return Err(err("face needs at least 3 vertices".into()));
                    }
                    mesh.faces.push(idx);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn save_obj(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_obj(mesh, file).map_err(|e| Error::io(path, e))
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<PolyMesh> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_obj(file)
}
