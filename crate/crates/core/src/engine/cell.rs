use crate::affine::{bound_over_box_hinted, EntryHints, RangeResult};
use crate::error::Result;
use crate::geometry::{
    clip_polygon, clip_polyhedron, norm, Aabb, HalfSpaceCut, Polygon2, Polyhedron3, Tolerances,
};
use crate::net::{AffineMap, Network};

/// Convex region of the input domain.
#[derive(Debug, Clone, PartialEq)]
pub enum CellGeometry {
    Polygon(Polygon2),
    Polyhedron(Polyhedron3),
}

impl CellGeometry {
    pub fn dim(&self) -> usize {
        match self {
            CellGeometry::Polygon(_) => 2,
            CellGeometry::Polyhedron(_) => 3,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            CellGeometry::Polygon(p) => p.vertices.len(),
            CellGeometry::Polyhedron(p) => p.vertices.len(),
        }
    }

    /// Vertex `k` as a slice of length [`CellGeometry::dim`].
    pub fn vertex(&self, k: usize) -> &[f64] {
        match self {
            CellGeometry::Polygon(p) => &p.vertices[k],
            CellGeometry::Polyhedron(p) => &p.vertices[k],
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            CellGeometry::Polygon(p) => Aabb::from_points(&p.vertices),
            CellGeometry::Polyhedron(p) => Aabb::from_points(&p.vertices),
        }
        .expect("cells have vertices")
    }

    /// Area in 2D, volume in 3D.
    pub fn measure(&self) -> f64 {
        match self {
            CellGeometry::Polygon(p) => p.area(),
            CellGeometry::Polyhedron(p) => p.volume(),
        }
    }

    fn approx_bytes(&self) -> usize {
        match self {
            CellGeometry::Polygon(p) => p.approx_bytes(),
            CellGeometry::Polyhedron(p) => p.approx_bytes(),
        }
    }
}

/// A convex cell together with the affine map giving the current layer's
/// pre-activations inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Split path from the root, one `0` (inactive side) or `1` (active side) per split.
    pub id: String,
    pub geometry: CellGeometry,
    /// 0 for the input layer, `ℓ` when `map` yields the pre-activations of hidden layer `ℓ`,
    /// `L` (the layer count) when `map` is the network output.
    pub layer: usize,
    pub map: AffineMap,
    /// Activation pattern of the current layer; entries below `resolved` are final.
    pub mask: Vec<bool>,
    pub resolved: usize,
    pub(crate) needs_prune: bool,
}

impl Cell {
    /// The domain box with the identity map, fully active.
    pub fn root(net: &Network) -> Cell {
        let d = net.domain();
        let geometry = match d.dim {
            2 => CellGeometry::Polygon(Polygon2::rect([d.lo[0], d.lo[1]], [d.hi[0], d.hi[1]])),
            _ => CellGeometry::Polyhedron(Polyhedron3::cuboid(d.lo, d.hi)),
        };
        let dim = net.input_dim();
        Cell {
            id: String::new(),
            geometry,
            layer: 0,
            map: AffineMap::identity(dim),
            mask: vec![true; dim],
            resolved: 0,
            needs_prune: true,
        }
    }

    pub fn width(&self) -> usize {
        self.map.rows
    }

    pub fn aabb(&self) -> Aabb {
        self.geometry.aabb()
    }

    /// Values of neuron `i` at every vertex.
    pub fn neuron_values(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.geometry.vertex_count()).map(move |k| self.map.eval_row(i, self.geometry.vertex(k)))
    }

    pub(crate) fn approx_bytes(&self) -> usize {
        self.geometry.approx_bytes() + (self.map.w.len() + self.map.b.len()) * 8 + self.mask.len() + self.id.len() + 96
    }

    fn cut_row(&self, i: usize) -> (Vec<f64>, f64) {
        (self.map.row(i).to_vec(), self.map.b[i])
    }
}

/// How a neuron's pre-activation behaves over a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuronState {
    /// Strictly negative and strictly positive at some vertices.
    Critical,
    Active,
    Inactive,
}

/// Classifies neuron `i` by its values at the cell vertices.
///
/// Values within the clipping dead zone count as zero and do not make the
/// neuron critical. A non-critical neuron is active if some vertex is
/// strictly positive, inactive if some vertex is strictly negative, and
/// otherwise follows the sign of its largest-magnitude value (ties active).
pub fn neuron_state(cell: &Cell, i: usize, tol: &Tolerances) -> NeuronState {
    let row = cell.map.row(i);
    let wn = row.iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut has_neg = false;
    let mut has_pos = false;
    let mut extreme = 0.0f64;
    for k in 0..cell.geometry.vertex_count() {
        let v = cell.geometry.vertex(k);
        let z = cell.map.eval_row(i, v);
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if z.abs() > tol.on * wn * (1.0 + vn) {
            if z < 0.0 {
                has_neg = true;
            } else {
                has_pos = true;
            }
        }
        if z.abs() > extreme.abs() {
            extreme = z;
        }
    }
    match (has_neg, has_pos) {
        (true, true) => NeuronState::Critical,
        (false, true) => NeuronState::Active,
        (true, false) => NeuronState::Inactive,
        (false, false) if extreme < 0.0 => NeuronState::Inactive,
        (false, false) => NeuronState::Active,
    }
}

/// Neurons of the current layer whose pre-activation changes sign over the cell.
pub fn find_critical(cell: &Cell, net: &Network, tol: &Tolerances) -> Vec<usize> {
    if cell.layer == 0 || cell.layer >= net.num_layers() {
        return Vec::new();
    }
    (0..cell.width())
        .filter(|&i| neuron_state(cell, i, tol) == NeuronState::Critical)
        .collect()
}

/// Range of the network over the cell.
///
/// The tail is bounded on the cell's bounding box, with the already resolved
/// neurons of the current layer held at their states and every other
/// current-layer value clamped to its range over the cell's vertices (the map
/// is affine on a convex cell, so the vertices attain its extremes).
pub fn bound_cell(cell: &Cell, net: &Network) -> RangeResult {
    if cell.layer == 0 {
        return bound_over_box_hinted(net, 0, &cell.map, &cell.aabb(), EntryHints::default());
    }
    let ranges: Vec<(f64, f64)> = (0..cell.width()).map(|i| vertex_range(cell, i)).collect();
    let hints = EntryHints {
        known: &cell.mask[..cell.resolved],
        ranges: Some(&ranges),
    };
    bound_over_box_hinted(net, cell.layer, &cell.map, &cell.aabb(), hints)
}

/// Enclosure of neuron `i` over the cell from its vertex values, padded for
/// the rounding of the evaluation.
fn vertex_range(cell: &Cell, i: usize) -> (f64, f64) {
    let row = cell.map.row(i);
    let b = cell.map.b[i];
    let (mut lo, mut hi, mut mag) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for k in 0..cell.geometry.vertex_count() {
        let v = cell.geometry.vertex(k);
        let z = cell.map.eval_row(i, v);
        lo = lo.min(z);
        hi = hi.max(z);
        mag = mag.max(b.abs() + row.iter().zip(v).map(|(w, x)| (w * x).abs()).sum::<f64>());
    }
    let pad = 4.0 * (row.len() + 2) as f64 * f64::EPSILON * mag + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// Whether the cell may intersect the zero level set.
pub fn prune(cell: &Cell, net: &Network) -> bool {
    !bound_cell(cell, net).excludes_zero()
}

/// Splits `cell` along the zero set of `neuron`.
///
/// Returns the inactive and active parts; a part thinner than the clipping
/// tolerance is dropped. Maps are unchanged.
pub fn split_cell(cell: &Cell, neuron: usize, tol: &Tolerances) -> Result<(Option<Cell>, Option<Cell>)> {
    let (row, b) = cell.cut_row(neuron);
    let (neg, pos) = match &cell.geometry {
        CellGeometry::Polygon(p) => {
            let r = clip_polygon(p, &HalfSpaceCut::from_row(&row, b), tol);
            (r.neg.map(CellGeometry::Polygon), r.pos.map(CellGeometry::Polygon))
        }
        CellGeometry::Polyhedron(p) => {
            let r = clip_polyhedron(p, &HalfSpaceCut::from_row(&row, b), tol)?;
            (r.neg.map(CellGeometry::Polyhedron), r.pos.map(CellGeometry::Polyhedron))
        }
    };
    let child = |geometry: CellGeometry, active: bool| {
        let mut mask = cell.mask.clone();
        mask[neuron] = active;
        let mut id = String::with_capacity(cell.id.len() + 1);
        id.push_str(&cell.id);
        id.push(if active { '1' } else { '0' });
        Cell {
            id,
            geometry,
            layer: cell.layer,
            map: cell.map.clone(),
            mask,
            resolved: neuron + 1,
            needs_prune: false,
        }
    };
    Ok((neg.map(|g| child(g, false)), pos.map(|g| child(g, true))))
}

/// Folds the masked next layer into the cell map and advances one layer.
///
/// `W_c ← W⁽ℓ⁺¹⁾ diag(m) W_c`, `b_c ← W⁽ℓ⁺¹⁾ (m ⊙ b_c) + b⁽ℓ⁺¹⁾`.
pub fn collapse(cell: &Cell, net: &Network) -> Cell {
    let layer = &net.layers()[cell.layer];
    let d = cell.map.cols;
    let rows = layer.rows();
    let mut w = vec![0.0; rows * d];
    let mut b = Vec::with_capacity(rows);
    for r in 0..rows {
        let lw = layer.row(r);
        let out = &mut w[r * d..(r + 1) * d];
        let mut acc = 0.0;
        for (j, &m) in cell.mask.iter().enumerate() {
            if !m || lw[j] == 0.0 {
                continue;
            }
            let src = cell.map.row(j);
            for k in 0..d {
                out[k] += lw[j] * src[k];
            }
            acc += lw[j] * cell.map.b[j];
        }
        b.push(acc + layer.bias()[r]);
    }
    Cell {
        id: cell.id.clone(),
        geometry: cell.geometry.clone(),
        layer: cell.layer + 1,
        map: AffineMap { rows, cols: d, w, b },
        mask: vec![false; rows],
        resolved: 0,
        needs_prune: true,
    }
}

/// Exact zero level set inside a final-layer cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePatch {
    /// Coplanar loop in 3D (normal along `normal` by the right-hand rule), or
    /// a directed segment `[a, b]` in 2D with `z = 0` and `normal` to its right.
    pub points: Vec<[f64; 3]>,
    /// Unit gradient of the cell's output map.
    pub normal: [f64; 3],
    pub cell_id: String,
}

/// The level set `{x : W_c x + b_c = 0}` clipped to a final-layer cell.
pub fn extract_patch(cell: &Cell, tol: &Tolerances) -> Result<Option<SurfacePatch>> {
    debug_assert_eq!(cell.map.rows, 1);
    let (row, b) = cell.cut_row(0);
    if row.iter().all(|&w| w == 0.0) {
        return Ok(None);
    }
    let mut normal = [0.0; 3];
    normal[..row.len()].copy_from_slice(&row);
    let len = norm(&normal);
    normal.iter_mut().for_each(|v| *v /= len);
    let points: Option<Vec<[f64; 3]>> = match &cell.geometry {
        CellGeometry::Polygon(p) => clip_polygon(p, &HalfSpaceCut::from_row(&row, b), tol)
            .segment
            .map(|s| s.iter().map(|q| [q[0], q[1], 0.0]).collect()),
        CellGeometry::Polyhedron(p) => clip_polyhedron(p, &HalfSpaceCut::from_row(&row, b), tol)?.cap,
    };
    Ok(points.map(|points| SurfacePatch {
        points,
        normal,
        cell_id: cell.id.clone(),
    }))
}
