//! PN triangles, red-green refinement and the normal-driven adaptive loop.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{weighted_vertex_normals, NormalScheme};
use crate::fem::{CgSettings, NodalField3, SurfaceOperators};
use crate::implicit::{LevelSet, DEFAULT_PROJECTION_TOL};
use crate::mesh::{mesh_size, MeshSizeMode, TriMesh, Vec3};
use crate::norms::{self, element_contributions, ElementSampler, GeomErrorMode};

/// Edge control point next to `p` on the edge towards `q`: the point a third
/// of the way along the edge, pulled into the tangent plane at `p`.
#[inline]
fn edge_control(p: &Vec3, n: &Vec3, q: &Vec3) -> Vec3 {
    let w = (q - p).dot(n);
    (2.0 * p + q - n * w) / 3.0
}

/// Cubic point-normal triangle.
///
/// Control points are ordered `b1..b3` (corners), then `b4..b9` (two per
/// edge: `b4` near `p1` towards `p2`, `b5` near `p2` towards `p1`, `b6` near
/// `p2` towards `p3`, `b7` near `p3` towards `p2`, `b8` near `p3` towards
/// `p1`, `b9` near `p1` towards `p3`), then the centre point `b10`.
#[derive(Clone, Debug, PartialEq)]
pub struct PnPatch {
    pub control: [Vec3; 10],
    pub corners: [Vec3; 3],
    pub normals: [Vec3; 3],
}

impl PnPatch {
    pub fn new(corners: [Vec3; 3], normals: [Vec3; 3]) -> Self {
        let [p1, p2, p3] = corners;
        let [n1, n2, n3] = normals;
        let edges = [
            edge_control(&p1, &n1, &p2),
            edge_control(&p2, &n2, &p1),
            edge_control(&p2, &n2, &p3),
            edge_control(&p3, &n3, &p2),
            edge_control(&p3, &n3, &p1),
            edge_control(&p1, &n1, &p3),
        ];
        let e: Vec3 = edges.iter().sum::<Vec3>() / 6.0;
        let v = (p1 + p2 + p3) / 3.0;
        let b10 = e + (e - v) / 2.0;
        let mut control = [Vec3::zeros(); 10];
        control[..3].copy_from_slice(&corners);
        control[3..9].copy_from_slice(&edges);
        control[9] = b10;
        Self {
            control,
            corners,
            normals,
        }
    }

    /// Bernstein weights matching the control-point order, for barycentric
    /// weights `v` on `p1`, `w` on `p2`, `u` on `p3`.
    pub fn basis(u: f64, v: f64) -> [f64; 10] {
        let w = 1.0 - u - v;
        [
            v * v * v,
            w * w * w,
            u * u * u,
            3.0 * w * v * v,
            3.0 * v * w * w,
            3.0 * u * w * w,
            3.0 * w * u * u,
            3.0 * v * u * u,
            3.0 * u * v * v,
            6.0 * u * v * w,
        ]
    }

    pub fn evaluate(&self, u: f64, v: f64) -> Vec3 {
        Self::basis(u, v).iter().zip(&self.control).map(|(b, c)| c * *b).sum()
    }

    pub fn evaluate_grid(&self, grid: &TessellationGrid) -> Vec<Vec3> {
        grid.params.iter().map(|&(u, v)| self.evaluate(u, v)).collect()
    }
}

/// Point of the PN curve over edge `pa`-`pb` at its midpoint parameter.
///
/// Depends only on the data at the two endpoints, so both faces sharing the
/// edge produce the same point.
pub fn pn_edge_midpoint(pa: &Vec3, na: &Vec3, pb: &Vec3, nb: &Vec3) -> Vec3 {
    (pa + pb) / 8.0 + (edge_control(pa, na, pb) + edge_control(pb, nb, pa)) * 0.375
}

/// Uniform barycentric grid of level `N` over one triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct TessellationGrid {
    pub level: usize,
    /// `(u, v)` with `u = i/N`, `v = j/N`, `w = 1 - u - v >= 0`.
    pub params: Vec<(f64, f64)>,
    /// Sub-triangles with the orientation of `(p1, p2, p3)`.
    pub triangles: Vec<[usize; 3]>,
}

impl TessellationGrid {
    pub fn new(level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("tessellation level must be at least 1".into()));
        }
        let n = level;
        let mut index = HashMap::new();
        let mut params = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for j in 0..=n {
            for i in 0..=(n - j) {
                index.insert((i, j), params.len());
                params.push((i as f64 / n as f64, j as f64 / n as f64));
            }
        }
        let mut triangles = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..(n - j) {
                triangles.push([index[&(i, j)], index[&(i + 1, j)], index[&(i, j + 1)]]);
                if i + j + 1 < n {
                    triangles.push([index[&(i + 1, j)], index[&(i + 1, j + 1)], index[&(i, j + 1)]]);
                }
            }
        }
        Ok(Self {
            level,
            params,
            triangles,
        })
    }
}

/// Element indicators `eta_K = sqrt(A_K/3 sum_i |n_h(x_K^i) - n_K|^2)`.
pub fn error_indicators(mesh: &TriMesh, normals: &[Vec3]) -> Vec<f64> {
    let faces = ElementSampler::PerFace(mesh.face_normals());
    element_contributions(mesh, &ElementSampler::Nodal(normals), Some(&faces))
        .into_iter()
        .map(f64::sqrt)
        .collect()
}

pub fn global_indicator(eta: &[f64]) -> f64 {
    eta.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Faces with `eta_K >= theta * max eta`.
pub fn mark_maximum(eta: &[f64], theta: f64) -> Vec<bool> {
    let max = eta.iter().copied().fold(0.0, f64::max);
    eta.iter().map(|&e| e >= theta * max).collect()
}

/// Where new edge vertices go.
#[derive(Clone, Copy)]
pub enum Placer<'a> {
    LinearMidpoint,
    /// PN curve through the edge endpoints with the given vertex normals.
    PnSurface(&'a [Vec3]),
    ExactProjection(&'a dyn LevelSet),
}

impl Placer<'_> {
    fn place(&self, mesh: &TriMesh, a: usize, b: usize) -> Result<Vec3> {
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        match self {
            Placer::LinearMidpoint => Ok((pa + pb) / 2.0),
            Placer::PnSurface(n) => Ok(pn_edge_midpoint(&pa, &n[a], &pb, &n[b])),
            Placer::ExactProjection(s) => s
                .project(&((pa + pb) / 2.0), DEFAULT_PROJECTION_TOL)
                .map(|p| p.position)
                .map_err(|e| Error::PlacementFailure(a, b, e.to_string())),
        }
    }
}

/// Green child bookkeeping: the parent triangle, rotated so that the split
/// edge is `parent[1]`-`parent[2]`, and the vertex on that edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GreenTag {
    pub parent: [usize; 3],
    pub midpoint: usize,
}

#[derive(Clone, Debug)]
pub struct RefineState {
    pub mesh: TriMesh,
    /// `Some` for faces that are one half of a green bisection.
    pub green: Vec<Option<GreenTag>>,
}

impl RefineState {
    pub fn new(mesh: TriMesh) -> Self {
        let green = vec![None; mesh.num_faces()];
        Self { mesh, green }
    }

    pub fn num_green(&self) -> usize {
        self.green.iter().filter(|g| g.is_some()).count()
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Element {
    corners: [usize; 3],
    marked: bool,
}

/// One red-green step. Marked faces are split into four; hanging nodes are
/// closed by green bisection. Green pairs are first merged back into their
/// parent, so a green triangle is never bisected again. Vertex indices of
/// the input are kept; new vertices are appended.
pub fn red_green_refine(state: &RefineState, marked: &[bool], placer: &Placer<'_>) -> Result<RefineState> {
    let mesh = &state.mesh;
    if marked.len() != mesh.num_faces() {
        return Err(Error::InvalidParameter(format!(
            "{} marks for {} faces",
            marked.len(),
            mesh.num_faces()
        )));
    }
    if let Placer::PnSurface(n) = placer {
        if n.len() != mesh.num_vertices() {
            return Err(Error::InvalidParameter(
                "PN placement needs one normal per vertex".into(),
            ));
        }
    }

    // Parent-level elements: ordinary faces, and green pairs merged.
    let mut elements: Vec<Element> = Vec::with_capacity(mesh.num_faces());
    let mut green_slot: HashMap<GreenTag, usize> = HashMap::new();
    let mut split: HashMap<(usize, usize), Option<usize>> = HashMap::new();
    // Halves of a merged parent's split edge; splitting one forces the parent red.
    let mut half_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        match state.green[f] {
            None => elements.push(Element {
                corners: *face,
                marked: marked[f],
            }),
            Some(tag) => {
                if let Some(&e) = green_slot.get(&tag) {
                    elements[e].marked |= marked[f];
                } else {
                    green_slot.insert(tag, elements.len());
                    split.insert(edge_key(tag.parent[1], tag.parent[2]), Some(tag.midpoint));
                    half_owner.insert(edge_key(tag.parent[1], tag.midpoint), elements.len());
                    half_owner.insert(edge_key(tag.midpoint, tag.parent[2]), elements.len());
                    elements.push(Element {
                        corners: tag.parent,
                        marked: marked[f],
                    });
                }
            }
        }
    }

    let local_edges = |c: &[usize; 3]| [edge_key(c[0], c[1]), edge_key(c[1], c[2]), edge_key(c[2], c[0])];
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(3 * elements.len() / 2);
    for (e, el) in elements.iter().enumerate() {
        for k in local_edges(&el.corners) {
            by_edge.entry(k).or_default().push(e);
        }
    }

    // Closure: two or more split edges promote an element to red.
    let mut red: Vec<bool> = elements.iter().map(|e| e.marked).collect();
    let mut work: Vec<usize> = (0..elements.len()).filter(|&e| red[e]).collect();
    while let Some(e) = work.pop() {
        for k in local_edges(&elements[e].corners) {
            if split.contains_key(&k) {
                continue;
            }
            split.insert(k, None);
            if let Some(&owner) = half_owner.get(&k) {
                if !red[owner] {
                    red[owner] = true;
                    work.push(owner);
                }
            }
            for &nb in &by_edge[&k] {
                if red[nb] {
                    continue;
                }
                let count = local_edges(&elements[nb].corners)
                    .iter()
                    .filter(|k| split.contains_key(k))
                    .count();
                if count >= 2 {
                    red[nb] = true;
                    work.push(nb);
                }
            }
        }
    }

    // New vertices, in element order.
    let mut vertices = mesh.vertices().to_vec();
    let mut pending = Vec::new();
    for el in &elements {
        for k in local_edges(&el.corners) {
            if let Some(slot @ None) = split.get_mut(&k) {
                *slot = Some(vertices.len() + pending.len());
                pending.push(k);
            }
        }
    }
    let placed: Vec<Result<Vec3>> = pending.par_iter().map(|&(a, b)| placer.place(mesh, a, b)).collect();
    for p in placed {
        vertices.push(p?);
    }
    let mid = |a: usize, b: usize| split.get(&edge_key(a, b)).copied().flatten();

    let mut faces = Vec::with_capacity(mesh.num_faces() * 2);
    let mut green = Vec::with_capacity(mesh.num_faces() * 2);
    // A child of a forced-red parent can carry one split half-edge, so red
    // children go through the same green test as unrefined elements.
    let mut emit = |c: [usize; 3]| {
        let [a, b, c] = c;
        let rotated = match (mid(a, b), mid(b, c), mid(c, a)) {
            (None, None, None) => None,
            (None, Some(m), None) => Some(([a, b, c], m)),
            (None, None, Some(m)) => Some(([b, c, a], m)),
            (Some(m), None, None) => Some(([c, a, b], m)),
            _ => unreachable!("closure leaves at most one split edge on non-red elements"),
        };
        match rotated {
            None => {
                faces.push([a, b, c]);
                green.push(None);
            }
            Some((p, m)) => {
                let tag = GreenTag { parent: p, midpoint: m };
                faces.extend([[p[0], p[1], m], [p[0], m, p[2]]]);
                green.extend([Some(tag); 2]);
            }
        }
    };
    for (e, el) in elements.iter().enumerate() {
        let [a, b, c] = el.corners;
        if red[e] {
            let (mab, mbc, mca) = (mid(a, b).unwrap(), mid(b, c).unwrap(), mid(c, a).unwrap());
            for child in [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]] {
                emit(child);
            }
        } else {
            emit(el.corners);
        }
    }
    let mesh = TriMesh::new(vertices, faces)?;
    Ok(RefineState { mesh, green })
}

/// Every face red-split once, new vertices on PN curves of `normals`.
pub fn pn_uniform_split(mesh: &TriMesh, normals: &[Vec3]) -> Result<TriMesh> {
    let state = RefineState::new(mesh.clone());
    let all = vec![true; mesh.num_faces()];
    Ok(red_green_refine(&state, &all, &Placer::PnSurface(normals))?.mesh)
}

/// Geometric error of the PN surface interpolating `mesh` with `normals`,
/// sampled at the vertices of one PN split.
pub fn interpolation_geom_error<S: LevelSet + ?Sized>(
    mesh: &TriMesh,
    normals: &[Vec3],
    surface: &S,
    mode: GeomErrorMode,
) -> Result<f64> {
    let fine = pn_uniform_split(mesh, normals)?;
    let d: Vec<f64> = match mode {
        GeomErrorMode::SignedDistance => fine
            .vertices()
            .par_iter()
            .map(|x| surface.signed_distance(x, DEFAULT_PROJECTION_TOL))
            .collect::<Result<_>>()?,
        GeomErrorMode::PhiSquared => fine.vertices().iter().map(|x| surface.value(x).powi(2)).collect(),
    };
    Ok(norms::l2h_norm(&fine, &ElementSampler::Nodal(&d)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalSource {
    /// Stabilised L2 projection.
    Stabilized,
    Scheme(NormalScheme),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlacerKind {
    LinearMidpoint,
    PnSurface,
    ExactProjection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveSettings {
    pub gamma_n: f64,
    pub cg: CgSettings,
    /// Stop once the global indicator is at most this.
    pub tol: Option<f64>,
    pub max_rounds: usize,
    /// Marking fraction of the maximum indicator; `0` refines uniformly.
    pub theta: f64,
    pub placer: PlacerKind,
    pub normals: NormalSource,
    pub geom_mode: GeomErrorMode,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        Self {
            gamma_n: 0.05,
            cg: CgSettings::default(),
            tol: None,
            max_rounds: 4,
            theta: 0.5,
            placer: PlacerKind::PnSurface,
            normals: NormalSource::Stabilized,
            geom_mode: GeomErrorMode::SignedDistance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub num_faces: usize,
    pub num_vertices: usize,
    /// Mean of `sqrt(A_K)`.
    pub h: f64,
    pub indicator: f64,
    pub geom_error: Option<f64>,
    pub effectivity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct AdaptiveRun {
    pub records: Vec<RoundRecord>,
    pub states: Vec<RefineState>,
    pub indicators: Vec<Vec<f64>>,
}

fn vertex_normals(mesh: &TriMesh, settings: &AdaptiveSettings) -> Result<NodalField3> {
    match settings.normals {
        NormalSource::Stabilized => SurfaceOperators::assemble(mesh).normals(settings.gamma_n, &settings.cg),
        NormalSource::Scheme(s) => Ok(weighted_vertex_normals(mesh, s).field),
    }
}

/// Solve, estimate, mark, refine until the indicator meets `tol` or the
/// round budget is spent. `max_rounds` refinements give `max_rounds + 1`
/// records.
pub fn adaptive_loop(
    mesh: &TriMesh,
    surface: Option<&dyn LevelSet>,
    settings: &AdaptiveSettings,
) -> Result<AdaptiveRun> {
    if !(0.0..=1.0).contains(&settings.theta) {
        return Err(Error::InvalidParameter(format!(
            "theta {} outside [0, 1]",
            settings.theta
        )));
    }
    if !(settings.gamma_n >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_n {} is negative",
            settings.gamma_n
        )));
    }
    if settings.placer == PlacerKind::ExactProjection && surface.is_none() {
        return Err(Error::InvalidParameter(
            "exact projection needs an analytic surface".into(),
        ));
    }
    let mut state = RefineState::new(mesh.clone());
    let mut run = AdaptiveRun {
        records: Vec::new(),
        states: Vec::new(),
        indicators: Vec::new(),
    };
    for round in 0.. {
        let m = &state.mesh;
        let normals = vertex_normals(m, settings)?;
        let eta = error_indicators(m, &normals.values);
        let indicator = global_indicator(&eta);
        let (geom_error, effectivity) = match surface {
            Some(s) => {
                let g = interpolation_geom_error(m, &normals.values, s, settings.geom_mode)?;
                let exact = norms::exact_normals(m, s)?;
                (Some(g), Some(norms::effectivity_index(m, &exact, &normals.values)?))
            }
            None => (None, None),
        };
        run.records.push(RoundRecord {
            round,
            num_faces: m.num_faces(),
            num_vertices: m.num_vertices(),
            h: mesh_size(m, MeshSizeMode::MeanRootArea).value,
            indicator,
            geom_error,
            effectivity,
        });
        let done = settings.tol.is_some_and(|t| indicator <= t) || round >= settings.max_rounds;
        if done {
            run.states.push(state);
            run.indicators.push(eta);
            break;
        }
        let marked = mark_maximum(&eta, settings.theta);
        let placer = match settings.placer {
            PlacerKind::LinearMidpoint => Placer::LinearMidpoint,
            PlacerKind::PnSurface => Placer::PnSurface(&normals.values),
            PlacerKind::ExactProjection => Placer::ExactProjection(surface.expect("checked above")),
        };
        let next = red_green_refine(&state, &marked, &placer)?;
        run.states.push(std::mem::replace(&mut state, next));
        run.indicators.push(eta);
    }
    Ok(run)
}
