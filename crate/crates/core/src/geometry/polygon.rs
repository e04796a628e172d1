use super::{edge_crossing, HalfSpaceCut, Tolerances};

/// Convex polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2 {
    pub vertices: Vec<[f64; 2]>,
}

/// Result of cutting a polygon by a line.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonClip {
    /// Part where `w·x + b <= 0`.
    pub neg: Option<Polygon2>,
    /// Part where `w·x + b >= 0`.
    pub pos: Option<Polygon2>,
    /// Chord on the line, directed so that `+w` lies to its right.
    pub segment: Option<[[f64; 2]; 2]>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Polygon2 { vertices }
    }

    /// Axis-aligned rectangle, counterclockwise from `lo`.
    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Polygon2::new(vec![lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]])
    }

    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        // shoelace relative to the first vertex
        let o = v[0];
        let mut s = 0.0;
        for i in 1..n - 1 {
            let a = [v[i][0] - o[0], v[i][1] - o[1]];
            let b = [v[i + 1][0] - o[0], v[i + 1][1] - o[1]];
            s += a[0] * b[1] - a[1] * b[0];
        }
        0.5 * s
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Every vertex lies on the inner side of every edge line within `eps`.
    pub fn is_convex(&self, eps: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if len == 0.0 {
                return false;
            }
            for p in v {
                let c = (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])) / len;
                if c < -eps {
                    return false;
                }
            }
        }
        true
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.vertices.len() as f64;
        let mut c = [0.0; 2];
        for p in &self.vertices {
            c[0] += p[0] / n;
            c[1] += p[1] / n;
        }
        c
    }

    pub(crate) fn approx_bytes(&self) -> usize {
        self.vertices.len() * 16
    }
}

/// Sutherland-Hodgman split of a convex polygon by a line.
///
/// Vertices within the dead zone of the line belong to both sides. A side
/// whose area falls below `tol.area` is reported absent.
pub fn clip_polygon(p: &Polygon2, cut: &HalfSpaceCut<2>, tol: &Tolerances) -> PolygonClip {
    let n = p.vertices.len();
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
        // untouched, possibly with an edge lying on the line
        let segment = (0..n)
            .find(|&i| signs[i] == 0 && signs[(i + 1) % n] == 0)
            .map(|i| orient_segment(p.vertices[i], p.vertices[(i + 1) % n], cut));
        let whole = Some(p.clone());
        return if has_pos {
            PolygonClip {
                neg: None,
                pos: whole,
                segment,
            }
        } else {
            PolygonClip {
                neg: whole,
                pos: None,
                segment,
            }
        };
    }

    let mut neg = Vec::with_capacity(n + 2);
    let mut pos = Vec::with_capacity(n + 2);
    let mut chord = Vec::with_capacity(2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (vi, si) = (p.vertices[i], signs[i]);
        if si <= 0 {
            neg.push(vi);
        }
        if si >= 0 {
            pos.push(vi);
        }
        if si == 0 {
            chord.push(vi);
        }
        if si * signs[j] < 0 {
            let x = edge_crossing(&vi, &p.vertices[j], values[i], values[j]);
            neg.push(x);
            pos.push(x);
            chord.push(x);
        }
    }

    let keep = |poly: Vec<[f64; 2]>| {
        let poly = Polygon2::new(poly);
        (poly.vertices.len() >= 3 && poly.area() >= tol.area).then_some(poly)
    };
    let neg = keep(neg);
    let pos = keep(pos);
    let segment = if neg.is_some() && pos.is_some() && chord.len() == 2 {
        Some(orient_segment(chord[0], chord[1], cut))
    } else {
        None
    };
    PolygonClip { neg, pos, segment }
}

fn orient_segment(a: [f64; 2], b: [f64; 2], cut: &HalfSpaceCut<2>) -> [[f64; 2]; 2] {
    // right-hand normal of a→b is (dy, −dx)
    let d = [b[0] - a[0], b[1] - a[1]];
    if d[1] * cut.normal[0] - d[0] * cut.normal[1] >= 0.0 {
        [a, b]
    } else {
        [b, a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn unit_square_split_in_half() {
        let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
        let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, 0.0], -0.5), &tol());
        let neg = r.neg.unwrap();
        let pos = r.pos.unwrap();
        assert!((neg.area() - 0.5).abs() < 1e-15);
        assert!((pos.area() - 0.5).abs() < 1e-15);
        assert!(neg.vertices.iter().all(|v| v[0] <= 0.5));
        assert!(pos.vertices.iter().all(|v| v[0] >= 0.5));
        let seg = r.segment.unwrap();
        let mut ends = [seg[0], seg[1]];
        ends.sort_by(|a, b| a[1].partial_cmp(&b[1]).unwrap());
        assert_eq!(ends, [[0.5, 0.0], [0.5, 1.0]]);
        // +x lies to the right of the directed chord
        assert_eq!(seg, [[0.5, 0.0], [0.5, 1.0]]);
    }

    #[test]
    fn cut_missing_polygon_keeps_it_whole() {
        let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
        let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, 0.0], -2.0), &tol());
        assert_eq!(r.neg.as_ref(), Some(&sq));
        assert!(r.pos.is_none());
        assert!(r.segment.is_none());
    }

    #[test]
    fn cut_through_vertices_shares_them() {
        let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
        // diagonal x − y = 0
        let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, -1.0], 0.0), &tol());
        assert_eq!(r.neg.as_ref().unwrap().vertices.len(), 3);
        assert_eq!(r.pos.as_ref().unwrap().vertices.len(), 3);
        assert!(r.segment.is_some());
    }

    #[test]
    fn edge_on_line_reports_segment() {
        let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
        let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, 0.0], -1.0), &tol());
        assert!(r.pos.is_none());
        let seg = r.segment.unwrap();
        assert!(seg.iter().all(|p| p[0] == 1.0));
    }

    #[test]
    fn clipping_twice_is_idempotent() {
        let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
        let cut = HalfSpaceCut::new([0.3, 0.7], -0.4);
        let neg = clip_polygon(&sq, &cut, &tol()).neg.unwrap();
        let again = clip_polygon(&neg, &cut, &tol());
        assert_eq!(again.neg.as_ref(), Some(&neg));
        assert!(again.pos.is_none());
    }
}
