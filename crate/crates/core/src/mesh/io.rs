//! OFF / OBJ readers and OFF / OBJ / ASCII PLY writers.
//!
//! Only triangle meshes are accepted; faces with more than three corners are
//! rejected rather than triangulated.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{TriMesh, Vec3};

/// Extra per-vertex and per-face data written to PLY files.
#[derive(Clone, Debug, Default)]
pub struct PlyAttributes {
    pub vertex_scalars: Vec<(String, Vec<f64>)>,
    pub vertex_vectors: Vec<(String, Vec<Vec3>)>,
    pub face_scalars: Vec<(String, Vec<f64>)>,
}

impl PlyAttributes {
    pub fn vertex_scalar(mut self, name: &str, values: Vec<f64>) -> Self {
        self.vertex_scalars.push((name.to_string(), values));
        self
    }

    pub fn vertex_vector(mut self, name: &str, values: Vec<Vec3>) -> Self {
        self.vertex_vectors.push((name.to_string(), values));
        self
    }

    pub fn face_scalar(mut self, name: &str, values: Vec<f64>) -> Self {
        self.face_scalars.push((name.to_string(), values));
        self
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a mesh, choosing the format from the file extension.
pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let (v, f) = match ext.as_deref() {
        Some("off") => parse_off(&text).map_err(|m| parse_err(path, m))?,
        Some("obj") => parse_obj(&text).map_err(|m| parse_err(path, m))?,
        _ => return Err(parse_err(path, "unsupported extension (expected .off or .obj)")),
    };
    TriMesh::new(v, f)
}

type Soup = (Vec<Vec3>, Vec<[usize; 3]>);

pub fn parse_off(text: &str) -> std::result::Result<Soup, String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let header = tokens.next().ok_or("empty file")?;
    let mut first = None;
    if header != "OFF" {
        // Some writers glue the counts onto the header ("OFF4 4 6").
        let rest = header.strip_prefix("OFF").ok_or("missing OFF header")?;
        first = Some(rest);
    }
    let mut next_num = |what: &str| -> std::result::Result<&str, String> {
        if let Some(s) = first.take() {
            if !s.is_empty() {
                return Ok(s);
            }
        }
        tokens
            .next()
            .ok_or_else(|| format!("unexpected end of file reading {what}"))
    };
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| format!("bad integer {s:?}: {e}"));
    let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number {s:?}: {e}"));
    let nv = parse_usize(next_num("vertex count")?)?;
    let nf = parse_usize(next_num("face count")?)?;
    let _ne = parse_usize(next_num("edge count")?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f64(next_num("vertex")?)?;
        let y = parse_f64(next_num("vertex")?)?;
        let z = parse_f64(next_num("vertex")?)?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let k = parse_usize(next_num("face")?)?;
        if k != 3 {
            return Err(format!("face {f} has {k} corners; only triangles are supported"));
        }
        let a = parse_usize(next_num("face")?)?;
        let b = parse_usize(next_num("face")?)?;
        let c = parse_usize(next_num("face")?)?;
        faces.push([a, b, c]);
    }
    Ok((vertices, faces))
}

pub fn parse_obj(text: &str) -> std::result::Result<Soup, String> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                if c.len() != 3 {
                    return Err(format!("line {}: vertex needs 3 coordinates", lineno + 1));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let corners: Vec<&str> = it.collect();
                if corners.len() != 3 {
                    return Err(format!(
                        "line {}: face has {} corners; only triangles are supported",
                        lineno + 1,
                        corners.len()
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, c) in face.iter_mut().zip(corners) {
                    let first = c.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|e| format!("line {}: bad index {first:?}: {e}", lineno + 1))?;
                    let resolved = if i > 0 { i - 1 } else { vertices.len() as i64 + i };
                    if resolved < 0 || i == 0 {
                        return Err(format!("line {}: index {i} out of range", lineno + 1));
                    }
                    *slot = resolved as usize;
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn off_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "OFF\n{} {} {}",
        mesh.num_vertices(),
        mesh.num_faces(),
        mesh.num_edges()
    );
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn ply_string(mesh: &TriMesh, attrs: &PlyAttributes) -> Result<String> {
    let nv = mesh.num_vertices();
    let nf = mesh.num_faces();
    for (name, vals) in &attrs.vertex_scalars {
        check_len(name, vals.len(), nv)?;
    }
    for (name, vals) in &attrs.vertex_vectors {
        check_len(name, vals.len(), nv)?;
    }
    for (name, vals) in &attrs.face_scalars {
        check_len(name, vals.len(), nf)?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "ply\nformat ascii 1.0\nelement vertex {nv}");
    for c in ["x", "y", "z"] {
        let _ = writeln!(s, "property double {c}");
    }
    for (name, _) in &attrs.vertex_scalars {
        let _ = writeln!(s, "property double {name}");
    }
    for (name, _) in &attrs.vertex_vectors {
        for c in ["x", "y", "z"] {
            let _ = writeln!(s, "property double {name}_{c}");
        }
    }
    let _ = writeln!(s, "element face {nf}\nproperty list uchar int vertex_indices");
    for (name, _) in &attrs.face_scalars {
        let _ = writeln!(s, "property double {name}");
    }
    s.push_str("end_header\n");
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
        for (_, vals) in &attrs.vertex_scalars {
            let _ = write!(s, " {}", vals[v]);
        }
        for (_, vals) in &attrs.vertex_vectors {
            let q = vals[v];
            let _ = write!(s, " {} {} {}", q.x, q.y, q.z);
        }
        s.push('\n');
    }
    for (k, f) in mesh.faces().iter().enumerate() {
        let _ = write!(s, "3 {} {} {}", f[0], f[1], f[2]);
        for (_, vals) in &attrs.face_scalars {
            let _ = write!(s, " {}", vals[k]);
        }
        s.push('\n');
    }
    Ok(s)
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidParameter(format!(
            "attribute {name} has {got} values, expected {want}"
        )));
    }
    Ok(())
}

/// Writes OFF, OBJ or PLY depending on the extension. PLY carries `attrs`.
pub fn write_mesh(path: &Path, mesh: &TriMesh, attrs: &PlyAttributes) -> Result<()> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let text = match ext.as_deref() {
        Some("off") => off_string(mesh),
        Some("obj") => obj_string(mesh),
        Some("ply") => ply_string(mesh, attrs)?,
        _ => return Err(parse_err(path, "unsupported extension (expected .off, .obj or .ply)")),
    };
    fs::write(path, text)?;
    Ok(())
}
