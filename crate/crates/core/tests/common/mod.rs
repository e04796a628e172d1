#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use relumesh::geometry::{clip_polyhedron, HalfSpaceCut, Polyhedron3};
use relumesh::{Network, Tolerances};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> Network {
    Network::load(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const FIXTURES_3D: &[&str] = &[
    "octahedron.json",
    "box.json",
    "halfspace_z.json",
    "sphere_d3_w32.json",
    "two_spheres_d3_w32.json",
];

/// Intersection of the cube [−1, 1]³ with random planes tangent to the unit sphere.
pub fn random_polyhedron(rng: &mut ChaCha8Rng, cuts: usize) -> Polyhedron3 {
    let tol = Tolerances::default();
    let mut p = Polyhedron3::cuboid([-1.0; 3], [1.0; 3]);
    for _ in 0..cuts {
        let n = random_unit(rng);
        if let Some(neg) = clip_polyhedron(&p, &HalfSpaceCut::new(n, -1.0), &tol).unwrap().neg {
            p = neg;
        }
    }
    p
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if l > 1e-3 && l <= 1.0 {
            return v.map(|c| c / l);
        }
    }
}
