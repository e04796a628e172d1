mod common;

use common::fixture;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relumesh::mesh::{load_obj, read_obj, save_obj, write_obj};
use relumesh::metrics::{closest_point_on_triangle, gradient, TriangleBvh};
use relumesh::tessellate::{tessellate, Strategy};
use relumesh::{extract, EngineConfig, Network, PolyMesh};

fn analytic(net: &Network) -> PolyMesh {
    extract(net, &EngineConfig::default()).unwrap().weld(&Default::default())
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|k| a[k] - b[k])
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn hexagon() -> PolyMesh {
    let vertices = (0..6)
        .map(|i| {
            let t = std::f64::consts::PI / 3.0 * i as f64;
            [t.cos(), t.sin(), 0.0]
        })
        .collect();
    PolyMesh {
        vertices,
        faces: vec![(0..6).collect()],
    }
}

#[test]
fn hexagon_area_for_every_strategy() {
    let want = 1.5 * 3f64.sqrt();
    for s in Strategy::ALL {
        let t = tessellate(&hexagon(), s).unwrap();
        assert!((t.area() - want).abs() <= 1e-12, "{s}: {}", t.area());
    }
}

#[test]
fn tessellated_surfaces_face_along_the_gradient() {
    let net = fixture("sphere_d3_w32.json");
    let mesh = analytic(&net);
    for s in Strategy::ALL {
        let t = tessellate(&mesh, s).unwrap();
        for i in 0..t.triangles.len() {
            let [a, b, c] = t.triangle(i);
            let n = cross(&sub(&b, &a), &sub(&c, &a));
            let m: Vec<f64> = (0..3).map(|k| (a[k] + b[k] + c[k]) / 3.0).collect();
            let g = gradient(&net, &m, 1e-7);
            assert!(n.iter().zip(&g).map(|(x, y)| x * y).sum::<f64>() > 0.0, "{s} triangle {i}");
        }
    }
}

#[test]
fn analytic_mesh_survives_obj_file() {
    let mesh = analytic(&fixture("two_spheres_d3_w32.json"));
    let dir = std::env::temp_dir().join(format!("relumesh-obj-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.obj");
    save_obj(&mesh, &path).unwrap();
    assert_eq!(load_obj(&path).unwrap(), mesh);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn polylines_survive_obj() {
    let mesh = analytic(&fixture("identity_2d.json"));
    assert!(mesh.is_polyline());
    let mut buf = Vec::new();
    write_obj(&mesh, &mut buf).unwrap();
    assert_eq!(read_obj(&buf[..]).unwrap(), mesh);
}

/// Roots of `f` found by bisection along random segments lie on the mesh.
#[test]
fn bisection_roots_lie_on_the_mesh() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in ["octahedron.json", "sphere_d3_w32.json", "two_spheres_d3_w32.json", "box.json"] {
        let net = fixture(name);
        let tri = tessellate(&analytic(&net), Strategy::Fan0).unwrap();
        let bvh = TriangleBvh::new(&tri);
        let mut roots = 0;
        for _ in 0..200 {
            let a: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.9..0.9));
            let b: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.9..0.9));
            let at = |t: f64| -> [f64; 3] { std::array::from_fn(|k| a[k] + t * (b[k] - a[k])) };
            let steps = 64;
            for s in 0..steps {
                let (mut lo, mut hi) = (s as f64 / steps as f64, (s + 1) as f64 / steps as f64);
                let (flo, fhi) = (net.eval(&at(lo)), net.eval(&at(hi)));
                if (flo < 0.0) == (fhi < 0.0) {
                    continue;
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (net.eval(&at(mid)) < 0.0) == (flo < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let d = bvh.nearest_distance(&at(0.5 * (lo + hi)));
                assert!(d <= 1e-6, "{name}: root {d:e} from mesh");
                roots += 1;
            }
        }
        assert!(roots > 50, "{name}: {roots}");
    }
}

proptest! {
    #[test]
    fn obj_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..40);
        let vertices: Vec<[f64; 3]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1e3..1e3) * 10f64.powi(rng.gen_range(-12..3))))
            .collect();
        let faces = (0..rng.gen_range(1..20))
            .map(|_| (0..rng.gen_range(3..8)).map(|_| rng.gen_range(0..n)).collect())
            .collect();
        let mesh = PolyMesh { vertices, faces };
        let mut buf = Vec::new();
        write_obj(&mesh, &mut buf).unwrap();
        prop_assert_eq!(read_obj(&buf[..]).unwrap(), mesh);
    }

    #[test]
    fn closest_point_is_not_beaten_by_samples(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b, c]: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let q = closest_point_on_triangle(&p, &a, &b, &c);
        let d2 = |x: &[f64; 3]| (0..3).map(|k| (x[k] - p[k]).powi(2)).sum::<f64>();
        for _ in 0..200 {
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                (u, v) = (1.0 - u, 1.0 - v);
            }
            let s: [f64; 3] = std::array::from_fn(|k| a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]));
            prop_assert!(d2(&q) <= d2(&s) + 1e-12);
        }
    }
}
