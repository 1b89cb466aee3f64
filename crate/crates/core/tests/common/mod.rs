#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Invariant checks shared by the property suite and the acceptance runner.
//! Each returns `Err` with a description of the first violation.

#![allow(dead_code)]

use std::collections::HashMap;

use curvkit::estimators::{
    cotangent_sums, dllb, ssf_curvature, vertex_areas, weighted_vertex_normals, AreaMode, NormalScheme,
};
use curvkit::fem::{
    assemble_mass, assemble_stabilization, assemble_stiffness, basis_gradients, edge_jumps, CgSettings, SparseSpd,
    SurfaceOperators,
};
use curvkit::mesh::{edge_adjacency, generate_torus, shapes, triangle_angles, TorusMeshParams};
use curvkit::norms::{l2h_distance, l2h_norm, ElementSampler};
use curvkit::refine::{red_green_refine, Placer, PnPatch, RefineState, TessellationGrid};
use curvkit::search::golden_section;
use curvkit::{TriMesh, Vec3};
use nalgebra::{DMatrix, Rotation3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn torus(a: f64, n_u: usize, n_v: usize, jitter: f64, seed: u64) -> TriMesh {
    generate_torus(&TorusMeshParams::new(1.0, 0.5, a, n_u, n_v).jittered(jitter, seed)).expect("valid torus")
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Every edge has two faces traversing it in opposite directions, and the
/// Euler characteristic is as expected.
pub fn conformity(mesh: &TriMesh, euler: i64) -> Check {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    for (&(a, b), &c) in &directed {
        ensure!(c == 1, "directed edge ({a}, {b}) used {c} times");
        ensure!(
            directed.get(&(b, a)) == Some(&1),
            "edge ({a}, {b}) has no opposite half"
        );
    }
    let (v, e, f) = (
        mesh.num_vertices() as i64,
        mesh.num_edges() as i64,
        mesh.num_faces() as i64,
    );
    ensure!(2 * e == 3 * f, "2E = {} but 3F = {}", 2 * e, 3 * f);
    ensure!(directed.len() as i64 == 2 * e, "edge table size mismatch");
    ensure!(v - e + f == euler, "V - E + F = {} expected {euler}", v - e + f);
    Ok(())
}

/// Co-normals are unit, orthogonal to the edge and the face normal, and
/// point away from the opposite vertex.
pub fn conormal_exteriority(mesh: &TriMesh) -> Check {
    for e in edge_adjacency(mesh) {
        let [i, j] = e.vertices;
        let (pi, pj) = (mesh.vertices()[i], mesh.vertices()[j]);
        let t = (pj - pi).normalize();
        for side in 0..2 {
            let f = e.faces[side];
            let c = e.conormals[side];
            let third = mesh.faces()[f].iter().copied().find(|&v| v != i && v != j).unwrap();
            let inward = mesh.vertices()[third] - pi;
            ensure!((c.norm() - 1.0).abs() < 1e-12, "co-normal of edge ({i}, {j}) not unit");
            ensure!(c.dot(&t).abs() < 1e-10, "co-normal not orthogonal to edge ({i}, {j})");
            ensure!(
                c.dot(&mesh.face_normals()[f]).abs() < 1e-10,
                "co-normal leaves face {f}"
            );
            ensure!(
                c.dot(&inward) < 0.0,
                "co-normal of edge ({i}, {j}) points into face {f}"
            );
        }
    }
    Ok(())
}

/// `S 1 = 0`, `J 1 = 0`, symmetry, `M` positive definite, `S` and `J`
/// positive semidefinite on random vectors, lumped mass equals a third of the
/// star area.
pub fn operator_properties(mesh: &TriMesh, seed: u64) -> Check {
    let (m, s, j) = (
        assemble_mass(mesh),
        assemble_stiffness(mesh),
        assemble_stabilization(mesh),
    );
    let n = mesh.num_vertices();
    let ones = vec![1.0; n];
    let scale = mesh.total_area();
    for (name, a) in [("S", &s), ("J", &j)] {
        let r = a.mul_vec(&ones);
        let worst = r.iter().fold(0.0f64, |w, x| w.max(x.abs()));
        ensure!(worst < 1e-10 * scale.max(1.0), "{name} 1 has entry {worst:e}");
    }
    for (name, a) in [("M", &m), ("S", &s), ("J", &j)] {
        ensure!(a.is_symmetric(), "{name} is not symmetric");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let x = random_vec(&mut rng, n);
        ensure!(m.quadratic_form(&x) > 0.0, "x^T M x <= 0");
        ensure!(s.quadratic_form(&x) >= -1e-12, "x^T S x < 0");
        ensure!(j.quadratic_form(&x) >= -1e-12, "x^T J x < 0");
    }
    let mut star = vec![0.0; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        for &v in face {
            star[v] += mesh.face_areas()[f] / 3.0;
        }
    }
    for (v, (a, b)) in m.row_sums().iter().zip(&star).enumerate() {
        ensure!(
            (a - b).abs() < 1e-12 * b.max(1e-300) + 1e-15,
            "lumped mass {a} vs {b} at vertex {v}"
        );
    }
    Ok(())
}

fn dense(a: &SparseSpd) -> DMatrix<f64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a.get(i, j))
}

fn phi_block(v: usize, nv: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(3, 3 * nv);
    for c in 0..3 {
        p[(c, 3 * v + c)] = 1.0;
    }
    p
}

/// The componentwise scalar matrices, Kronecker-expanded, equal the vector
/// mass, stiffness and stabilisation matrices built from the 3N vector basis.
pub fn block_equivalence(mesh: &TriMesh) -> Check {
    let nv = mesh.num_vertices();
    let grads = basis_gradients(mesh);
    let mut mass = DMatrix::zeros(3 * nv, 3 * nv);
    let mut stiff = DMatrix::zeros(3 * nv, 3 * nv);
    for (f, face) in mesh.faces().iter().enumerate() {
        let area = mesh.face_areas()[f];
        for a in 0..3 {
            for b in 0..3 {
                let mab = if a == b { area / 6.0 } else { area / 12.0 };
                let (pa, pb) = (phi_block(face[a], nv), phi_block(face[b], nv));
                mass += pa.transpose() * &pb * mab;
                // Tangential gradient of every component of phi_a I.
                let bs = |v: usize, g: &Vec3| {
                    let mut m = DMatrix::zeros(9, 3 * nv);
                    for c in 0..3 {
                        for d in 0..3 {
                            m[(3 * c + d, 3 * v + c)] = g[d];
                        }
                    }
                    m
                };
                stiff += bs(face[a], &grads[f][a]).transpose() * bs(face[b], &grads[f][b]) * area;
            }
        }
    }
    let mut stab = DMatrix::zeros(3 * nv, 3 * nv);
    for (patch, jump, len) in edge_jumps(mesh, &grads) {
        let mut be = DMatrix::zeros(3, 3 * nv);
        for (slot, &v) in patch.iter().enumerate() {
            be += phi_block(v, nv) * jump[slot];
        }
        stab += be.transpose() * be * (len * len);
    }
    let ops = SurfaceOperators::assemble(mesh);
    let kron = |a: &SparseSpd| dense(a).kronecker(&DMatrix::<f64>::identity(3, 3));
    for (name, scalar, block) in [
        ("M", &ops.mass, &mass),
        ("S", &ops.stiffness, &stiff),
        ("J", &ops.stabilization, &stab),
    ] {
        let d = (kron(scalar) - block).amax();
        let s = block.amax().max(1.0);
        ensure!(d < 1e-12 * s, "{name} block form differs by {d:e}");
    }
    Ok(())
}

/// `H_h`, `n_h`, every weighted scheme, DLLB and SSF commute with a rigid
/// motion (vectors rotate, scalars are unchanged).
pub fn rigid_motion(mesh: &TriMesh, axis: Vec3, angle: f64, shift: Vec3) -> Check {
    let rot = Rotation3::new(axis.normalize() * angle);
    let moved = mesh.transformed(|p| rot * p + shift).map_err(|e| e.to_string())?;
    let cg = CgSettings::default();
    let vec_close = |a: &[Vec3], b: &[Vec3], tol: f64, what: &str| -> Check {
        let scale = a.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            ensure!(
                (rot * x - y).norm() < tol * scale,
                "{what} at vertex {k}: {x:?} vs {y:?}"
            );
        }
        Ok(())
    };
    let (o0, o1) = (SurfaceOperators::assemble(mesh), SurfaceOperators::assemble(&moved));
    let solve = |o: &SurfaceOperators| -> Result<(Vec<Vec3>, Vec<Vec3>), String> {
        let h = o.curvature_vector(0.05, &cg).map_err(|e| e.to_string())?.values;
        let n = o.normals(0.05, &cg).map_err(|e| e.to_string())?.values;
        Ok((h, n))
    };
    let ((h0, n0), (h1, n1)) = (solve(&o0)?, solve(&o1)?);
    vec_close(&h0, &h1, 1e-6, "H_h")?;
    vec_close(&n0, &n1, 1e-6, "n_h")?;
    for s in NormalScheme::ALL {
        let a = weighted_vertex_normals(mesh, s).field.values;
        let b = weighted_vertex_normals(&moved, s).field.values;
        vec_close(&a, &b, 1e-9, s.name())?;
    }
    let (d0, d1) = (dllb(mesh, AreaMode::MixedVoronoi), dllb(&moved, AreaMode::MixedVoronoi));
    vec_close(&d0.laplacian.values, &d1.laplacian.values, 1e-9, "DLLB K_h")?;
    let frame = |m: &TriMesh| weighted_vertex_normals(m, NormalScheme::Mwa).field;
    let s0 = ssf_curvature(mesh, &frame(mesh)).map_err(|e| e.to_string())?;
    let s1 = ssf_curvature(&moved, &frame(&moved)).map_err(|e| e.to_string())?;
    for (k, (a, b)) in s0.mean_curvature.iter().zip(&s1.mean_curvature).enumerate() {
        match (a, b) {
            (Some(a), Some(b)) => ensure!((a - b).abs() < 1e-6 * a.abs().max(1.0), "SSF at {k}: {a} vs {b}"),
            (None, None) => {}
            _ => return Err(format!("SSF validity differs at vertex {k}")),
        }
    }
    Ok(())
}

/// Cotangent sums vanish at interior vertices of a flat grid.
pub fn cotangent_flat_patch(n: usize, m: usize, jitter: f64, seed: u64) -> Check {
    let base = shapes::flat_square(n, m).map_err(|e| e.to_string())?;
    let interior = shapes::flat_square_interior(n, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verts = base.vertices().to_vec();
    let hx = jitter / n.max(m) as f64;
    for &v in &interior {
        verts[v].x += rng.random_range(-hx..=hx);
        verts[v].y += rng.random_range(-hx..=hx);
    }
    let mesh = base.with_vertices(verts).map_err(|e| e.to_string())?;
    let k = cotangent_sums(&mesh);
    for &v in &interior {
        ensure!(
            k[v].norm() < 1e-10,
            "cotangent sum {:e} at interior vertex {v}",
            k[v].norm()
        );
    }
    Ok(())
}

/// Barycentric and mixed-Voronoi areas partition the surface.
pub fn area_partition(mesh: &TriMesh) -> Check {
    let total = mesh.total_area();
    for mode in [AreaMode::Barycentric, AreaMode::MixedVoronoi] {
        let a = vertex_areas(mesh, mode);
        ensure!(a.iter().all(|&x| x > 0.0), "{mode:?} area is not positive");
        let s: f64 = a.iter().sum();
        ensure!(
            (s - total).abs() < 1e-12 * total,
            "{mode:?} areas sum to {s}, surface {total}"
        );
    }
    Ok(())
}

/// Norm axioms of the discrete L2 norm and `||u||^2 = sum_i m_i u_i^2` with
/// the lumped mass `m_i`.
pub fn l2h_axioms(mesh: &TriMesh, seed: u64, c: f64) -> Check {
    let n = mesh.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_vec(&mut rng, n);
    let v = random_vec(&mut rng, n);
    let w: Vec<Vec3> = (0..n)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    let nu = l2h_norm(mesh, &ElementSampler::Nodal(&u));
    let nv = l2h_norm(mesh, &ElementSampler::Nodal(&v));
    let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
    let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    ensure!(nu > 0.0, "norm of a nonzero field is {nu}");
    ensure!(
        l2h_norm(mesh, &ElementSampler::Constant(0.0)) == 0.0,
        "norm of zero is not zero"
    );
    let ncu = l2h_norm(mesh, &ElementSampler::Nodal(&cu));
    ensure!(
        (ncu - c.abs() * nu).abs() <= 1e-12 * ncu.max(1.0),
        "homogeneity: {ncu} vs {}",
        c.abs() * nu
    );
    let ns = l2h_norm(mesh, &ElementSampler::Nodal(&sum));
    ensure!(ns <= nu + nv + 1e-12, "triangle inequality: {ns} > {nu} + {nv}");
    let d = l2h_distance(mesh, &ElementSampler::Nodal(&u), &ElementSampler::Nodal(&v));
    let dr = l2h_distance(mesh, &ElementSampler::Nodal(&v), &ElementSampler::Nodal(&u));
    ensure!(d == dr, "distance not symmetric");
    let lumped = assemble_mass(mesh).row_sums();
    let expect: f64 = u.iter().zip(&lumped).map(|(x, m)| m * x * x).sum();
    ensure!(
        (nu * nu - expect).abs() < 1e-12 * expect,
        "lumped identity: {} vs {expect}",
        nu * nu
    );
    let expect: f64 = w.iter().zip(&lumped).map(|(x, m)| m * x.norm_squared()).sum();
    let nw = l2h_norm(mesh, &ElementSampler::Nodal(&w));
    ensure!((nw * nw - expect).abs() < 1e-12 * expect, "lumped identity for vectors");
    Ok(())
}

/// Corner interpolation, tangent-plane property, partition of unity, and
/// exact reproduction of planar triangles.
pub fn pn_properties(corners: [Vec3; 3], normals: [Vec3; 3]) -> Check {
    let normals = normals.map(|n| n.normalize());
    let patch = PnPatch::new(corners, normals);
    for ((u, v), k) in [((0.0, 1.0), 0), ((0.0, 0.0), 1), ((1.0, 0.0), 2)] {
        ensure!(patch.evaluate(u, v) == corners[k], "patch misses corner {k}");
    }
    let near = [0, 1, 1, 2, 2, 0];
    for (k, &c) in near.iter().enumerate() {
        let d = (patch.control[3 + k] - corners[c]).dot(&normals[c]);
        let scale = (patch.control[3 + k] - corners[c]).norm().max(1.0);
        ensure!(
            d.abs() < 1e-12 * scale,
            "edge control {k} leaves tangent plane of corner {c}"
        );
    }
    let grid = TessellationGrid::new(6).map_err(|e| e.to_string())?;
    for &(u, v) in &grid.params {
        let s: f64 = PnPatch::basis(u, v).iter().sum();
        ensure!((s - 1.0).abs() < 1e-14, "basis sums to {s} at ({u}, {v})");
    }
    let face_normal = (corners[1] - corners[0]).cross(&(corners[2] - corners[0]));
    if face_normal.norm() > 1e-9 {
        let nf = face_normal.normalize();
        let flat = PnPatch::new(corners, [nf; 3]);
        for &(u, v) in &grid.params {
            let x = corners[0] * v + corners[1] * (1.0 - u - v) + corners[2] * u;
            let scale = corners.iter().map(|c| c.norm()).fold(1.0, f64::max);
            ensure!(
                (flat.evaluate(u, v) - x).norm() < 1e-13 * scale,
                "planar patch not affine at ({u}, {v})"
            );
        }
    }
    Ok(())
}

/// Smallest angle of a triangle and of its three green halves.
fn green_bound(p: [Vec3; 3]) -> f64 {
    let mut m = triangle_angles(&p).into_iter().fold(f64::INFINITY, f64::min);
    for k in 0..3 {
        let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
        let mid = (b + c) / 2.0;
        for half in [[a, b, mid], [a, mid, c]] {
            m = triangle_angles(&half).into_iter().fold(m, f64::min);
        }
    }
    m
}

/// Five rounds of red-green refinement with random marks and midpoint
/// placement. Red children are similar to their parent and green pairs are
/// undone before being refined, so no angle may drop below the smallest angle
/// of a green half of an initial triangle. The result stays conforming.
pub fn red_green_angles(mesh: &TriMesh, euler: i64, seed: u64, fraction: f64) -> Check {
    let bound = (0..mesh.num_faces())
        .map(|f| green_bound(mesh.corners(f)))
        .fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = RefineState::new(mesh.clone());
    let area = mesh.total_area();
    for round in 0..5 {
        let marked: Vec<bool> = (0..state.mesh.num_faces()).map(|_| rng.random_bool(fraction)).collect();
        state =
            red_green_refine(&state, &marked, &Placer::LinearMidpoint).map_err(|e| format!("round {round}: {e}"))?;
        let min = state.mesh.min_angle();
        ensure!(min >= bound - 1e-9, "round {round}: angle {min} below bound {bound}");
        conformity(&state.mesh, euler).map_err(|e| format!("round {round}: {e}"))?;
        let a = state.mesh.total_area();
        ensure!(
            (a - area).abs() < 1e-9 * area,
            "round {round}: area changed {area} -> {a}"
        );
    }
    Ok(())
}

/// Brackets are nested, shrink, and keep the minimiser of a unimodal
/// function; every probed bracket end is no better than the result.
pub fn golden_containment(center: f64, lo: f64, hi: f64, power: f64, tol: f64) -> Check {
    let f = |x: f64| Ok((x - center).abs().powf(power));
    let r = golden_section(f, lo, hi, tol).map_err(|e| e.to_string())?;
    let target = center.clamp(lo, hi);
    for w in r.brackets.windows(2) {
        let ((a0, b0), (a1, b1)) = (w[0], w[1]);
        ensure!(a0 <= a1 && b1 <= b0, "bracket [{a1}, {b1}] not inside [{a0}, {b0}]");
        ensure!(b1 - a1 < b0 - a0, "bracket did not shrink");
    }
    for &(a, b) in &r.brackets {
        let slack = 1e-12 * (hi - lo);
        ensure!(
            a - slack <= target && target <= b + slack,
            "minimiser {target} left bracket [{a}, {b}]"
        );
    }
    let (a, b) = *r.brackets.last().unwrap();
    ensure!(b - a <= tol, "final bracket wider than tol");
    ensure!(r.gamma >= a && r.gamma <= b, "result outside final bracket");
    for &(x, y) in &r.probes {
        if x == a || x == b {
            ensure!(y >= r.value, "probed end {x} beats the result");
        }
    }
    Ok(())
}

/// Deterministic sweep over every check, used by the acceptance runner.
pub fn invariant_sweep() -> Vec<(&'static str, Check)> {
    let t1 = torus(1.0, 16, 8, 0.2, 11);
    let t4 = torus(4.0, 14, 7, 0.2, 5);
    let sphere = shapes::icosphere(1.0, 2);
    let small = torus(4.0, 8, 4, 0.1, 3);
    let mut out: Vec<(&'static str, Check)> = vec![
        ("conformity torus", conformity(&t1, 0).and(conformity(&t4, 0))),
        ("conformity sphere", conformity(&sphere, 2)),
        (
            "co-normal exteriority",
            conormal_exteriority(&t4).and(conormal_exteriority(&sphere)),
        ),
        (
            "operator properties",
            operator_properties(&t1, 1).and(operator_properties(&sphere, 2)),
        ),
        ("block equivalence", block_equivalence(&small)),
        (
            "rigid motion",
            rigid_motion(&t4, Vec3::new(1.0, -2.0, 0.5), 0.7, Vec3::new(0.3, -1.0, 2.0)),
        ),
        ("cotangent flat patch", cotangent_flat_patch(6, 5, 0.3, 9)),
        ("area partition", area_partition(&t4).and(area_partition(&sphere))),
        ("l2h axioms", l2h_axioms(&t1, 4, -2.5)),
        (
            "pn properties",
            pn_properties(
                [
                    Vec3::new(1.0, 0.0, 0.0),
                    Vec3::new(0.0, 1.0, 0.1),
                    Vec3::new(0.2, 0.1, 1.0),
                ],
                [
                    Vec3::new(1.0, 0.1, 0.0),
                    Vec3::new(0.0, 1.0, 0.2),
                    Vec3::new(0.1, 0.2, 1.0),
                ],
            ),
        ),
        ("golden containment", golden_containment(0.37, 0.0, 1.0, 1.5, 1e-6)),
    ];
    let rg = [11u64, 12, 13]
        .iter()
        .map(|&s| red_green_angles(&t4, 0, s, 0.3))
        .chain([red_green_angles(&sphere, 2, 21, 0.2)])
        .collect::<Check>();
    out.push(("red-green angles", rg));
    out
}
