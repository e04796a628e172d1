//! Exact point-to-triangle distances through a bounding volume hierarchy.

use crate::geometry::{dot, sub};
use crate::mesh::TriMesh;

const LEAF_SIZE: usize = 4;

/// Closest point of triangle `abc` to `p` (Voronoi region walk).
pub fn closest_point_on_triangle(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return along(a, &ab, v);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return along(a, &ac, w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return along(b, &sub(c, b), w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

fn along(a: &[f64; 3], d: &[f64; 3], t: f64) -> [f64; 3] {
    [a[0] + d[0] * t, a[1] + d[1] * t, a[2] + d[2] * t]
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    fn grow(&mut self, p: &[f64; 3]) {
        for (k, &x) in p.iter().enumerate() {
            self.lo[k] = self.lo[k].min(x);
            self.hi[k] = self.hi[k].max(x);
        }
    }

    fn merge(&mut self, o: &Bounds) {
        self.grow(&o.lo);
        self.grow(&o.hi);
    }

    fn dist2(&self, p: &[f64; 3]) -> f64 {
        (0..3)
            .map(|k| {
                let d = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
                d * d
            })
            .sum()
    }
}

#[derive(Debug)]
enum Node {
    Leaf { bounds: Bounds, start: usize, end: usize },
    Inner { bounds: Bounds, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Bounds {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split BVH over the triangles of a mesh.
#[derive(Debug)]
pub struct TriangleBvh {
    tris: Vec<[[f64; 3]; 3]>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut tris: Vec<[[f64; 3]; 3]> = (0..mesh.triangles.len()).map(|t| mesh.triangle(t)).collect();
        let mut nodes = Vec::new();
        if !tris.is_empty() {
            let n = tris.len();
            build(&mut tris, 0, n, &mut nodes);
        }
        TriangleBvh { tris, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Squared distance from `p` to the nearest triangle (infinite for an empty mesh).
    pub fn nearest_dist2(&self, p: &[f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![(self.nodes.len() - 1, self.nodes.last().unwrap().bounds().dist2(p))];
        while let Some((i, d)) = stack.pop() {
            if d >= best {
                continue;
            }
            match &self.nodes[i] {
                Node::Leaf { start, end, .. } => {
                    for [a, b, c] in &self.tris[*start..*end] {
                        best = best.min(dist2(p, &closest_point_on_triangle(p, a, b, c)));
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().dist2(p);
                    let dr = self.nodes[*right].bounds().dist2(p);
                    // nearer child on top
                    if dl < dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }

    pub fn nearest_distance(&self, p: &[f64; 3]) -> f64 {
        self.nearest_dist2(p).sqrt()
    }
}

fn build(tris: &mut [[[f64; 3]; 3]], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let mut bounds = Bounds::empty();
    let mut centers = Bounds::empty();
    for t in &tris[start..end] {
        t.iter().for_each(|p| bounds.grow(p));
        centers.grow(&center(t));
    }
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return nodes.len() - 1;
    }
    let axis = (0..3)
        .max_by(|&a, &b| (centers.hi[a] - centers.lo[a]).total_cmp(&(centers.hi[b] - centers.lo[b])))
        .unwrap();
    let mid = (start + end) / 2;
    tris[start..end].select_nth_unstable_by(mid - start, |a, b| center(a)[axis].total_cmp(&center(b)[axis]));
    let left = build(tris, start, mid, nodes);
    let right = build(tris, mid, end, nodes);
    let mut merged = *nodes[left].bounds();
    merged.merge(nodes[right].bounds());
    nodes.push(Node::Inner {
        bounds: merged,
        left,
        right,
    });
    nodes.len() - 1
}

fn center(t: &[[f64; 3]; 3]) -> [f64; 3] {
    std::array::from_fn(|k| (t[0][k] + t[1][k] + t[2][k]) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let q = closest_point_on_triangle(&[0.2, 0.2, 3.0], &a, &b, &c);
        assert!(dist2(&q, &[0.2, 0.2, 0.0]) < 1e-30);
        assert_eq!(closest_point_on_triangle(&[-1.0, -1.0, 0.0], &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&[2.0, -0.5, 0.0], &a, &b, &c), b);
        assert_eq!(closest_point_on_triangle(&[0.5, -1.0, 1.0], &a, &b, &c), [0.5, 0.0, 0.0]);
        let q = closest_point_on_triangle(&[1.0, 1.0, 0.0], &a, &b, &c);
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bvh_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vertices: Vec<[f64; 3]> = (0..300).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let triangles = (0..100).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
        let mesh = TriMesh { vertices, triangles };
        let bvh = TriangleBvh::new(&mesh);
        for _ in 0..200 {
            let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let brute = (0..100)
                .map(|t| {
                    let [a, b, c] = mesh.triangle(t);
                    dist2(&p, &closest_point_on_triangle(&p, &a, &b, &c))
                })
                .fold(f64::INFINITY, f64::min);
            assert_eq!(bvh.nearest_dist2(&p), brute);
        }
    }
}
