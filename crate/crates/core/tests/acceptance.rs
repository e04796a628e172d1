//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use common::{fixture, fixture_path, random_polyhedron, random_unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relumesh::affine::bound_network;
use relumesh::geometry::{clip_polyhedron, HalfSpaceCut};
use relumesh::mc::{marching_cubes, GridSpec};
use relumesh::mesh::write_obj;
use relumesh::metrics::{soft_precision, soft_precision_polyline, triangle_quality, TriangleBvh};
use relumesh::tessellate::{tessellate, Strategy};
use relumesh::{extract, Aabb, EngineConfig, Extraction, Network, PolyMesh, Tolerances, TriMesh};

const SP_EXACT: f64 = 1e-6;
const RUNTIME_LIMIT_S: f64 = 60.0;
const MC_GAP_FACTOR: f64 = 100.0;
const OCTA_TOL: f64 = 1e-9;
const ABLATION_CELLS: f64 = 5.0;
const ABLATION_TIME: f64 = 2.0;
const RANGE_BOXES: usize = 100;
const RANGE_SAMPLES: usize = 2000;
const CLIP_CASES: usize = 1000;
const CLIP_VOL_REL: f64 = 1e-9;
const MC_SLACK: f64 = 1.10;
const TESS_AREA_REL: f64 = 1e-9;
const SURROGATE_EXACT: f64 = 1e-7;
const SAMPLES: usize = 1 << 20;
const SEED: u64 = 20240601;

const ALL_FIXTURES: &[&str] = &[
    "octahedron.json",
    "box.json",
    "halfspace_z.json",
    "identity_2d.json",
    "const_pos.json",
    "sphere_d3_w32.json",
    "two_spheres_d3_w32.json",
    "circle2d_pe_d2_w16.json",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// The fixture as an extractable network: encodings become 6-knot surrogates.
fn extractable(name: &str) -> Network {
    let net = fixture(name);
    if net.encoding().is_some() {
        net.with_pwl_surrogate(6).unwrap()
    } else {
        net
    }
}

fn run(net: &Network, cfg: &EngineConfig) -> (Extraction, PolyMesh, f64) {
    let t = Instant::now();
    let ex = extract(net, cfg).unwrap();
    let mesh = ex.weld(&cfg.tolerances);
    (ex, mesh, t.elapsed().as_secs_f64())
}

fn tri(mesh: &PolyMesh) -> TriMesh {
    tessellate(mesh, Strategy::Fan0).unwrap()
}

fn obj_bytes(mesh: &PolyMesh) -> Vec<u8> {
    let mut buf = Vec::new();
    write_obj(mesh, &mut buf).unwrap();
    buf
}

fn exactness() -> Outcome {
    let mut worst_sp: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    let mut notes = Vec::new();
    let mut pass = true;
    for name in ALL_FIXTURES {
        let net = extractable(name);
        let (_, mesh, secs) = run(&net, &EngineConfig::default());
        worst_t = worst_t.max(secs);
        if mesh.is_empty() {
            notes.push(format!("{name}: no surface"));
            continue;
        }
        let sp = if mesh.is_polyline() {
            soft_precision_polyline(&net, &mesh, SAMPLES, SEED).unwrap()
        } else {
            soft_precision(&net, &tri(&mesh), SAMPLES, SEED).unwrap()
        };
        worst_sp = worst_sp.max(sp);
        if sp > SP_EXACT || secs > RUNTIME_LIMIT_S {
            pass = false;
            notes.push(format!("{name}: SP {sp:.3e}, {secs:.2}s"));
        }
    }
    let mut detail = format!("max SP {worst_sp:.3e} (limit {SP_EXACT:e}), max time {worst_t:.2}s (limit {RUNTIME_LIMIT_S}s)");
    if !notes.is_empty() {
        detail += &format!("; {}", notes.join("; "));
    }
    outcome(pass, detail)
}

fn mc_gap() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["sphere_d3_w32.json", "two_spheres_d3_w32.json"] {
        let net = fixture(name);
        let (_, mesh, _) = run(&net, &EngineConfig::default());
        let sp_a = soft_precision(&net, &tri(&mesh), SAMPLES, SEED).unwrap();
        let mc = marching_cubes(&net, &GridSpec::new(64, *net.domain()).unwrap()).unwrap();
        let sp_mc = soft_precision(&net, &mc, SAMPLES, SEED).unwrap();
        pass &= sp_a * MC_GAP_FACTOR <= sp_mc;
        parts.push(format!("{name}: analytic {sp_a:.3e} vs MC64 {sp_mc:.3e} (ratio {:.1e})", sp_mc / sp_a.max(f64::MIN_POSITIVE)));
    }
    outcome(pass, parts.join("; "))
}

fn components() -> Outcome {
    let (_, mesh, _) = run(&fixture("two_spheres_d3_w32.json"), &EngineConfig::default());
    let labels = mesh.component_labels();
    let n = mesh.connected_components();
    let mut watertight = Vec::new();
    for c in 0..n {
        let part = PolyMesh {
            vertices: mesh.vertices.clone(),
            faces: mesh.faces.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(f, _)| f.clone()).collect(),
        };
        watertight.push(part.is_watertight());
    }
    outcome(
        n == 2 && watertight.iter().all(|&w| w),
        format!("{n} components, watertight {watertight:?}, {} faces", mesh.faces.len()),
    )
}

fn exact_octahedron(r: f64) -> TriMesh {
    let vertices = vec![[r, 0.0, 0.0], [-r, 0.0, 0.0], [0.0, r, 0.0], [0.0, -r, 0.0], [0.0, 0.0, r], [0.0, 0.0, -r]];
    let mut triangles = Vec::new();
    for x in [0, 1] {
        for y in [2, 3] {
            for z in [4, 5] {
                triangles.push([x, y, z]);
            }
        }
    }
    TriMesh { vertices, triangles }
}

/// Symmetric Hausdorff distance estimated from vertices, edge points and dense surface samples.
fn hausdorff(a: &TriMesh, b: &TriMesh, samples: usize) -> f64 {
    let one_way = |from: &TriMesh, to: &TriMesh| {
        let bvh = TriangleBvh::new(to);
        let mut pts = from.vertices.clone();
        pts.extend(relumesh::metrics::sample_surface(from, samples, SEED).unwrap());
        pts.iter().map(|p| bvh.nearest_distance(p)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

fn octahedron() -> Outcome {
    let (_, mesh, _) = run(&fixture("octahedron.json"), &EngineConfig::default());
    let expected = exact_octahedron(0.5);
    let mut vertex_err: f64 = 0.0;
    let mut matched = [false; 6];
    for v in &mesh.vertices {
        let (k, d) = expected
            .vertices
            .iter()
            .enumerate()
            .map(|(k, e)| (k, (0..3).map(|c| (v[c] - e[c]).powi(2)).sum::<f64>().sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        matched[k] = true;
        vertex_err = vertex_err.max(d);
    }
    let h = hausdorff(&tri(&mesh), &expected, 100_000);
    let pass = mesh.vertices.len() == 6
        && matched.iter().all(|&m| m)
        && mesh.faces.len() == 8
        && vertex_err <= OCTA_TOL
        && h <= OCTA_TOL;
    outcome(
        pass,
        format!(
            "{} vertices (max deviation {vertex_err:.1e}), {} faces, Hausdorff {h:.1e} (limit {OCTA_TOL:e})",
            mesh.vertices.len(),
            mesh.faces.len()
        ),
    )
}

fn ablation() -> Outcome {
    let net = fixture("sphere_d3_w32.json");
    // best of three to damp timer noise
    let best = |cfg: &EngineConfig| {
        let mut runs: Vec<(Extraction, PolyMesh, f64)> = (0..3).map(|_| run(&net, cfg)).collect();
        runs.sort_by(|a, b| a.2.total_cmp(&b.2));
        runs.swap_remove(0)
    };
    let (with, mesh_with, t_with) = best(&EngineConfig::default());
    let (without, mesh_without, t_without) = best(&EngineConfig {
        disable_pruning: true,
        ..Default::default()
    });
    let cells = without.stats.cells_created as f64 / with.stats.cells_created as f64;
    let time = t_without / t_with;
    let same = obj_bytes(&mesh_with) == obj_bytes(&mesh_without);
    outcome(
        cells >= ABLATION_CELLS && time >= ABLATION_TIME && same,
        format!(
            "cells {} -> {} (x{cells:.2}, need {ABLATION_CELLS}), time {t_with:.3}s -> {t_without:.3}s (x{time:.2}, need {ABLATION_TIME}), identical meshes {same}",
            with.stats.cells_created, without.stats.cells_created
        ),
    )
}

fn range_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0usize;
    let mut checks = 0usize;
    for name in ALL_FIXTURES {
        let net = extractable(name);
        let d = *net.domain();
        let dim = d.dim;
        for _ in 0..RANGE_BOXES {
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            for k in 0..dim {
                let a = rng.gen_range(d.lo[k]..d.hi[k]);
                let b = rng.gen_range(d.lo[k]..d.hi[k]);
                lo[k] = a.min(b);
                hi[k] = a.max(b);
            }
            let bx = Aabb::new(&lo[..dim], &hi[..dim]);
            let r = bound_network(&net, &bx);
            let mut lo_s = f64::INFINITY;
            let mut hi_s = f64::NEG_INFINITY;
            let corners = 1usize << dim;
            for s in 0..RANGE_SAMPLES + corners {
                let x: Vec<f64> = (0..dim)
                    .map(|k| {
                        if s < corners {
                            if s >> k & 1 == 1 {
                                hi[k]
                            } else {
                                lo[k]
                            }
                        } else {
                            rng.gen_range(lo[k]..=hi[k])
                        }
                    })
                    .collect();
                let v = net.eval(&x);
                lo_s = lo_s.min(v);
                hi_s = hi_s.max(v);
            }
            checks += 1;
            if !(r.lo <= lo_s && hi_s <= r.hi) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{checks} boxes, {violations} violations"))
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    for name in ALL_FIXTURES {
        let net = extractable(name);
        let outs: Vec<Vec<u8>> = [1, 64, 4096]
            .iter()
            .map(|&b| {
                let (_, mesh, _) = run(&net, &EngineConfig { batch_size: b, ..Default::default() });
                obj_bytes(&mesh)
            })
            .collect();
        if outs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(*name);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} fixtures x batch sizes [1, 64, 4096], differing: {differing:?}", ALL_FIXTURES.len()),
    )
}

fn clip_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tol = Tolerances::default();
    let mut failures = 0usize;
    let mut errors = 0usize;
    let mut worst: f64 = 0.0;
    let mut both = 0usize;
    for case in 0..CLIP_CASES {
        let p = random_polyhedron(&mut rng, 4 + case % 20);
        let n = random_unit(&mut rng);
        let cut = HalfSpaceCut::new(n, rng.gen_range(-0.9..0.9));
        let r = match clip_polyhedron(&p, &cut, &tol) {
            Ok(r) => r,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let v = p.volume();
        let sum = r.neg.as_ref().map_or(0.0, |q| q.volume()) + r.pos.as_ref().map_or(0.0, |q| q.volume());
        let rel = (sum - v).abs() / v;
        worst = worst.max(rel);
        let euler_ok = [&r.neg, &r.pos]
            .iter()
            .all(|s| s.as_ref().is_none_or(|q| q.euler_characteristic() == 2 && q.is_closed_manifold()));
        if r.neg.is_some() && r.pos.is_some() {
            both += 1;
        }
        if rel > CLIP_VOL_REL || !euler_ok {
            failures += 1;
        }
    }
    outcome(
        failures == 0 && errors == 0,
        format!("{CLIP_CASES} cases ({both} split), worst relative volume error {worst:.1e}, {failures} failures, {errors} topology errors"),
    )
}

fn mc_convergence() -> Outcome {
    let net = fixture("sphere_d3_w32.json");
    let sps: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&r| {
            let mesh = marching_cubes(&net, &GridSpec::new(r, *net.domain()).unwrap()).unwrap();
            soft_precision(&net, &mesh, SAMPLES, SEED).unwrap()
        })
        .collect();
    let pass = sps.windows(2).all(|w| w[1] <= w[0] * MC_SLACK);
    outcome(pass, format!("SP at res 32/64/128: {:.3e} / {:.3e} / {:.3e}", sps[0], sps[1], sps[2]))
}

fn tessellation() -> Outcome {
    let (_, mesh, _) = run(&fixture("sphere_d3_w32.json"), &EngineConfig::default());
    let big = mesh.faces.iter().filter(|f| f.len() >= 5).count();
    let sum_k: usize = mesh.faces.iter().map(Vec::len).sum();
    let sum_k2: usize = mesh.faces.iter().map(|f| f.len() - 2).sum();
    let area = mesh.measure();
    let mut pass = big >= 1;
    let mut parts = vec![format!("{} faces, {big} with k >= 5", mesh.faces.len())];
    let mut skews = Vec::new();
    for s in Strategy::ALL {
        let t = tessellate(&mesh, s).unwrap();
        let want = if s == Strategy::Centroid { sum_k } else { sum_k2 };
        let rel = (t.area() - area).abs() / area;
        let skew = triangle_quality(&t).unwrap().equiangle_skew_mean;
        skews.push(skew);
        pass &= t.triangles.len() == want && rel <= TESS_AREA_REL;
        parts.push(format!("{s}: {} tris (want {want}), area err {rel:.1e}, skew {skew:.4}", t.triangles.len()));
    }
    // ALL is [fan0, centroid, strip]
    pass &= skews[1] <= skews[0];
    outcome(pass, parts.join("; "))
}

fn hausdorff_to_circle(mesh: &PolyMesh, r: f64) -> f64 {
    let segs: Vec<([f64; 3], [f64; 3])> = mesh.faces.iter().map(|f| (mesh.vertices[f[0]], mesh.vertices[f[1]])).collect();
    let mut h: f64 = 0.0;
    // polyline to circle: radial deviation, checked densely along each segment
    for (a, b) in &segs {
        for i in 0..=16 {
            let t = i as f64 / 16.0;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            h = h.max(((p[0] * p[0] + p[1] * p[1]).sqrt() - r).abs());
        }
    }
    // circle to polyline
    for i in 0..20_000 {
        let th = std::f64::consts::TAU * i as f64 / 20_000.0;
        let q = [r * th.cos(), r * th.sin()];
        let d = segs
            .iter()
            .map(|(a, b)| {
                let ab = [b[0] - a[0], b[1] - a[1]];
                let l2 = ab[0] * ab[0] + ab[1] * ab[1];
                let t = (((q[0] - a[0]) * ab[0] + (q[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
                let c = [a[0] + t * ab[0] - q[0], a[1] + t * ab[1] - q[1]];
                (c[0] * c[0] + c[1] * c[1]).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        h = h.max(d);
    }
    h
}

fn surrogate_2d() -> Outcome {
    let net = fixture("circle2d_pe_d2_w16.json");
    let r = net.metadata().and_then(|m| m["radius"].as_f64()).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut dists = Vec::new();
    for kpp in [6, 12] {
        let pwl = net.with_pwl_surrogate(kpp).unwrap();
        let (_, mesh, _) = run(&pwl, &EngineConfig::default());
        let closed = mesh.is_polyline() && mesh.is_watertight() && mesh.connected_components() == 1;
        let worst = mesh.vertices.iter().map(|v| pwl.eval(&v[..2]).abs()).fold(0.0, f64::max);
        let h = hausdorff_to_circle(&mesh, r);
        if kpp == 6 {
            pass &= closed && worst <= SURROGATE_EXACT;
        }
        dists.push(h);
        parts.push(format!(
            "{kpp} knots: {} segments, closed {closed}, max |f| {worst:.1e}, Hausdorff {h:.3e}",
            mesh.faces.len()
        ));
    }
    pass &= dists[1] < dists[0];
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    assert!(fixture_path("octahedron.json").exists(), "fixtures directory not found");
    let criteria: Vec<Criterion> = vec![
        ("exactness", exactness),
        ("accuracy gap vs marching cubes", mc_gap),
        ("disconnected components", components),
        ("octahedron oracle", octahedron),
        ("pruning ablation", ablation),
        ("range soundness", range_soundness),
        ("schedule determinism", determinism),
        ("clipping conservation", clip_conservation),
        ("marching cubes convergence", mc_convergence),
        ("tessellation counts and conservation", tessellation),
        ("2D surrogate demo", surrogate_2d),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
