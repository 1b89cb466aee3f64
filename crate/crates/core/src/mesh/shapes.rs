//! Small closed test surfaces.

use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{TriMesh, Vec3};

/// Regular tetrahedron inscribed in the unit sphere, outward oriented.
pub fn tetrahedron() -> TriMesh {
    let s = 1.0 / 3f64.sqrt();
    let v = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(v, f).expect("tetrahedron")
}

pub fn octahedron() -> TriMesh {
    let v = vec![Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
    let f = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    TriMesh::new(v, f).expect("octahedron")
}

/// Unit cube `[0,1]^3`, two triangles per side.
pub fn cube() -> TriMesh {
    let v: Vec<Vec3> = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let f = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(v, f).expect("cube")
}

/// Closed square pyramid with apex `(0, 0, height)` over the square `[-1,1]^2`.
pub fn square_pyramid(height: f64) -> TriMesh {
    let v = vec![
        Vec3::new(-1.0, -1.0, 0.0),
        Vec3::new(1.0, -1.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(-1.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, height),
    ];
    let f = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [0, 2, 1], [0, 3, 2]];
    TriMesh::new(v, f).expect("pyramid")
}

/// Subdivided icosahedron projected to a sphere of the given radius.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push((0.5 * (v[a] + v[b])).normalize());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        f = next;
    }
    for p in &mut v {
        *p *= radius;
    }
    TriMesh::new(v, f).expect("icosphere")
}

/// Closed flat "pillow" over `[0,1]^2` in the plane `z = 0`.
///
/// The top side is an `n x m` grid of squares split along alternating
/// diagonals (normal `+z`). The bottom side is a fan from a single centre
/// vertex to the boundary vertices (normal `-z`), so grid vertices that are
/// not on the boundary have a fully coplanar one-ring.
pub fn flat_square(n: usize, m: usize) -> Result<TriMesh> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("grid size must be positive".into()));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut v: Vec<Vec3> = Vec::with_capacity((n + 1) * (m + 1) + 1);
    for j in 0..=m {
        for i in 0..=n {
            v.push(Vec3::new(i as f64 / n as f64, j as f64 / m as f64, 0.0));
        }
    }
    let mut f = Vec::new();
    for j in 0..m {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                f.push([a, b, c]);
                f.push([a, c, d]);
            } else {
                f.push([a, b, d]);
                f.push([b, c, d]);
            }
        }
    }
    // Boundary loop, counter-clockwise seen from +z.
    let mut boundary = Vec::new();
    boundary.extend((0..n).map(|i| idx(i, 0)));
    boundary.extend((0..m).map(|j| idx(n, j)));
    boundary.extend((1..=n).rev().map(|i| idx(i, m)));
    boundary.extend((1..=m).rev().map(|j| idx(0, j)));
    let centre = v.len();
    v.push(Vec3::new(0.5, 0.5, 0.0));
    for k in 0..boundary.len() {
        let a = boundary[k];
        let b = boundary[(k + 1) % boundary.len()];
        f.push([centre, b, a]);
    }
    TriMesh::new(v, f)
}

/// Vertex indices of [`flat_square`] that are strictly inside the square.
pub fn flat_square_interior(n: usize, m: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 1..m {
        for i in 1..n {
            out.push(j * (n + 1) + i);
        }
    }
    out
}
