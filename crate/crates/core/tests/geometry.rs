mod common;

use common::{random_polyhedron, random_unit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relumesh::geometry::{clip_polygon, clip_polyhedron, HalfSpaceCut, Polygon2, Polyhedron3};
use relumesh::{Aabb, Tolerances};

fn random_convex_polygon(rng: &mut ChaCha8Rng) -> Polygon2 {
    let k = rng.gen_range(3..12);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let (cx, cy, r) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.1..2.0));
    Polygon2::new(angles.iter().map(|t| [cx + r * t.cos(), cy + r * t.sin()]).collect())
}

fn max_plane_distance(points: &[[f64; 3]], cut: &HalfSpaceCut<3>) -> f64 {
    points.iter().map(|p| cut.eval(p).abs() / cut.normal_len()).fold(0.0, f64::max)
}

#[test]
fn unit_square_split_in_half() {
    let tol = Tolerances::default();
    let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
    let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, 0.0], -0.5), &tol);
    let (neg, pos) = (r.neg.unwrap(), r.pos.unwrap());
    assert!((neg.area() - 0.5).abs() < 1e-15 && (pos.area() - 0.5).abs() < 1e-15);
    assert!(neg.vertices.iter().all(|v| v[0] <= 0.5) && pos.vertices.iter().all(|v| v[0] >= 0.5));
    let mut seg = r.segment.unwrap();
    seg.sort_by(|a, b| a[1].total_cmp(&b[1]));
    assert_eq!(seg, [[0.5, 0.0], [0.5, 1.0]]);
}

#[test]
fn missing_cut_keeps_square() {
    let tol = Tolerances::default();
    let sq = Polygon2::rect([0.0, 0.0], [1.0, 1.0]);
    let r = clip_polygon(&sq, &HalfSpaceCut::new([1.0, 0.0], -2.0), &tol);
    assert_eq!(r.neg.as_ref(), Some(&sq));
    assert!(r.pos.is_none() && r.segment.is_none());
}

#[test]
fn cube_split_at_z0() {
    let tol = Tolerances::default();
    let cube = Polyhedron3::cuboid([-1.0; 3], [1.0; 3]);
    let cut = HalfSpaceCut::new([0.0, 0.0, 1.0], 0.0);
    let r = clip_polyhedron(&cube, &cut, &tol).unwrap();
    let (neg, pos) = (r.neg.unwrap(), r.pos.unwrap());
    assert!((neg.volume() - 4.0).abs() < 1e-14 && (pos.volume() - 4.0).abs() < 1e-14);
    assert_eq!(Aabb::from_points(&neg.vertices).unwrap(), Aabb::new(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 0.0]));
    let cap = r.cap.unwrap();
    assert_eq!(cap.len(), 4);
    assert!(cap.iter().all(|p| p[2] == 0.0 && p[0].abs() == 1.0 && p[1].abs() == 1.0));
}

#[test]
fn plane_missing_cube() {
    let tol = Tolerances::default();
    let cube = Polyhedron3::cuboid([-1.0; 3], [1.0; 3]);
    let r = clip_polyhedron(&cube, &HalfSpaceCut::new([1.0, 1.0, 1.0], -3.5), &tol).unwrap();
    assert_eq!(r.neg.as_ref(), Some(&cube));
    assert!(r.pos.is_none() && r.cap.is_none());
}

#[test]
fn cap_is_wound_along_the_normal() {
    let tol = Tolerances::default();
    let cube = Polyhedron3::cuboid([-1.0; 3], [1.0; 3]);
    let n = [0.3, -0.5, 0.8];
    let cap = clip_polyhedron(&cube, &HalfSpaceCut::new(n, 0.1), &tol).unwrap().cap.unwrap();
    let mut area = [0.0; 3];
    for k in 0..cap.len() {
        let (a, b) = (cap[k], cap[(k + 1) % cap.len()]);
        area[0] += (a[1] - b[1]) * (a[2] + b[2]);
        area[1] += (a[2] - b[2]) * (a[0] + b[0]);
        area[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    assert!(area.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn polygon_clip_conserves_area(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::default();
        let p = random_convex_polygon(&mut rng);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let cut = HalfSpaceCut::new([t.cos(), t.sin()], rng.gen_range(-1.5..1.5));
        let r = clip_polygon(&p, &cut, &tol);
        let sum = r.neg.as_ref().map_or(0.0, Polygon2::area) + r.pos.as_ref().map_or(0.0, Polygon2::area);
        prop_assert!((sum - p.area()).abs() <= 1e-10 * p.area().max(1.0));
        for side in [&r.neg, &r.pos].into_iter().flatten() {
            prop_assert!(side.is_convex(tol.geom));
        }
        if let Some(seg) = r.segment {
            for q in seg {
                prop_assert!(cut.eval(&q).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn polyhedron_clip_conserves_volume_and_topology(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::default();
        let cuts = rng.gen_range(3..25);
        let p = random_polyhedron(&mut rng, cuts);
        let cut = HalfSpaceCut::new(random_unit(&mut rng), rng.gen_range(-0.9..0.9));
        let r = clip_polyhedron(&p, &cut, &tol).unwrap();
        let sum = r.neg.as_ref().map_or(0.0, Polyhedron3::volume) + r.pos.as_ref().map_or(0.0, Polyhedron3::volume);
        prop_assert!((sum - p.volume()).abs() <= 1e-9 * p.volume());
        for side in [&r.neg, &r.pos].into_iter().flatten() {
            prop_assert_eq!(side.euler_characteristic(), 2);
            prop_assert!(side.is_closed_manifold());
            prop_assert!(side.is_convex(tol.geom));
        }
        if let Some(cap) = &r.cap {
            prop_assert!(max_plane_distance(cap, &cut) <= 1e-10);
        }
    }

    #[test]
    fn aabb_contains_every_vertex(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_polyhedron(&mut rng, 12);
        let bx = Aabb::from_points(&p.vertices).unwrap();
        for v in &p.vertices {
            prop_assert!(bx.contains(v));
        }
        for k in 0..3 {
            prop_assert!(p.vertices.iter().any(|v| v[k] == bx.lo[k]));
            prop_assert!(p.vertices.iter().any(|v| v[k] == bx.hi[k]));
        }
    }

    #[test]
    fn clipping_twice_changes_nothing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerances::default();
        let p = random_polyhedron(&mut rng, 10);
        let cut = HalfSpaceCut::new(random_unit(&mut rng), rng.gen_range(-0.5..0.5));
        let first = clip_polyhedron(&p, &cut, &tol).unwrap();
        for (side, is_neg) in [(&first.neg, true), (&first.pos, false)] {
            let Some(side) = side else { continue };
            let again = clip_polyhedron(side, &cut, &tol).unwrap();
            let (kept, other) = if is_neg { (again.neg, again.pos) } else { (again.pos, again.neg) };
            prop_assert_eq!(kept.as_ref(), Some(side));
            prop_assert!(other.is_none());
        }
        let poly = random_convex_polygon(&mut rng);
        let cut2 = HalfSpaceCut::new([1.0, 0.3], rng.gen_range(-1.0..1.0));
        if let Some(neg) = clip_polygon(&poly, &cut2, &tol).neg {
            let again = clip_polygon(&neg, &cut2, &tol);
            prop_assert_eq!(again.neg.as_ref(), Some(&neg));
            prop_assert!(again.pos.is_none());
        }
    }
}
