//! Mesh ladders on the squished torus and the convergence studies run on
//! them. Every study returns typed rows and can render itself as a CSV table
//! with a `#` header echoing its configuration.

use std::fmt::Display;
use std::io::Write;

use crate::error::{Error, Result};
use crate::estimators::{dllb, ssf_curvature, weighted_vertex_normals, AreaMode, NormalScheme};
use crate::fem::{scalar_curvature, CgSettings, Preconditioner, SurfaceOperators};
use crate::implicit::SquishedTorus;
use crate::mesh::{generate_torus, mesh_size, MeshSizeMode, TorusMeshParams, TriMesh};
use crate::norms::{convergence_rates, curvature_error, exact_normals, normal_error, GeomErrorMode};
use crate::refine::{adaptive_loop, AdaptiveSettings, NormalSource, PlacerKind, RoundRecord};
use crate::search::{golden_section, SearchResult, DEFAULT_TOL_X};

/// Torus geometry `R`, `r`, `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGeometry {
    pub major_radius: f64,
    pub minor_radius: f64,
    pub squish: f64,
}

impl TorusGeometry {
    pub fn new(squish: f64) -> Self {
        Self {
            major_radius: 1.0,
            minor_radius: 0.5,
            squish,
        }
    }

    pub fn surface(&self) -> Result<SquishedTorus> {
        SquishedTorus::new(self.major_radius, self.minor_radius, self.squish)
    }

    pub fn mesh(&self, n_u: usize, n_v: usize, jitter: f64, seed: u64) -> Result<TriMesh> {
        generate_torus(
            &TorusMeshParams::new(self.major_radius, self.minor_radius, self.squish, n_u, n_v).jittered(jitter, seed),
        )
    }
}

/// Jittered parametric meshes of increasing resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    /// `(n_u, n_v)` per rung, coarse to fine.
    pub rungs: Vec<(usize, usize)>,
    pub jitter: f64,
    pub seed: u64,
}

impl Ladder {
    /// `count` rungs starting at `n_v0`, doubling `n_v` each time, with
    /// `n_u = 2 n_v`.
    pub fn doubling(n_v0: usize, count: usize, jitter: f64, seed: u64) -> Self {
        Self {
            rungs: (0..count).map(|k| (2 * (n_v0 << k), n_v0 << k)).collect(),
            jitter,
            seed,
        }
    }

    /// The rungs used for the a=1 and a=4 tables: 968 to 61952 vertices.
    pub fn standard() -> Self {
        Self::doubling(22, 4, 0.02, 7)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs.is_empty() {
            return Err(Error::InvalidParameter("ladder has no rungs".into()));
        }
        for w in self.rungs.windows(2) {
            if w[1].0 * w[1].1 <= w[0].0 * w[0].1 {
                return Err(Error::InvalidParameter(format!(
                    "ladder rungs must refine: {}x{} after {}x{}",
                    w[1].0, w[1].1, w[0].0, w[0].1
                )));
            }
        }
        Ok(())
    }
}

/// Shared settings of the studies.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub geometry: TorusGeometry,
    pub ladder: Ladder,
    pub gamma_h: f64,
    pub gamma_n: f64,
    /// Bracket for the normal stabilisation search.
    pub normal_bracket: (f64, f64),
    /// Bracket for the curvature stabilisation search.
    pub curvature_bracket: (f64, f64),
    pub tol_x: f64,
    pub cg: CgSettings,
    /// Frame normals of the surface fit.
    pub ssf_frame: NormalScheme,
}

impl StudyConfig {
    pub fn new(squish: f64) -> Self {
        Self {
            geometry: TorusGeometry::new(squish),
            ladder: Ladder::standard(),
            gamma_h: 0.05,
            gamma_n: 0.05,
            normal_bracket: (0.0, 1.0),
            curvature_bracket: (0.0, 0.15),
            tol_x: DEFAULT_TOL_X,
            cg: CgSettings {
                preconditioner: Preconditioner::IncompleteCholesky,
                ..Default::default()
            },
            ssf_frame: NormalScheme::Mwa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.surface()?;
        self.ladder.validate()?;
        if !(self.gamma_h >= 0.0 && self.gamma_n >= 0.0) {
            return Err(Error::InvalidParameter(
                "stabilisation factors must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Header lines describing this configuration.
    pub fn echo(&self) -> Vec<String> {
        let g = &self.geometry;
        let rungs: Vec<String> = self.ladder.rungs.iter().map(|(u, v)| format!("{u}x{v}")).collect();
        vec![
            format!("torus R={} r={} a={}", g.major_radius, g.minor_radius, g.squish),
            format!(
                "ladder {} jitter={} seed={}",
                rungs.join(","),
                self.ladder.jitter,
                self.ladder.seed
            ),
            format!(
                "gamma_h={} gamma_n={} normal_bracket=[{},{}] curvature_bracket=[{},{}] tol_x={}",
                self.gamma_h,
                self.gamma_n,
                self.normal_bracket.0,
                self.normal_bracket.1,
                self.curvature_bracket.0,
                self.curvature_bracket.1,
                self.tol_x
            ),
            format!(
                "cg tol={} preconditioner={:?} ssf_frame={}",
                self.cg.tol, self.cg.preconditioner, self.ssf_frame
            ),
        ]
    }
}

/// Plot-ready table: `h` (or the round) first, one column per quantity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

impl Table {
    fn new<S: Display>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Prefixes each line of `comments` with `# `.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rates with a leading NaN so that they line up with the rows.
fn padded_rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    let mut r = vec![f64::NAN];
    if h.len() >= 2 && e.iter().all(|&x| x > 0.0) {
        r.extend(convergence_rates(h, e).unwrap_or_default());
    }
    r.resize(h.len(), f64::NAN);
    r
}

/// Classical schemes in table order.
pub const TABLE_SCHEMES: [NormalScheme; 7] = [
    NormalScheme::Mwe,
    NormalScheme::Mwa,
    NormalScheme::Mwaat,
    NormalScheme::Mwelr,
    NormalScheme::Mwrelr,
    NormalScheme::Mwselr,
    NormalScheme::Dllb,
];

#[derive(Clone, Debug)]
pub struct NormalRow {
    pub num_vertices: usize,
    /// `1 / sqrt(N_v)`.
    pub h: f64,
    /// Unstabilised projection.
    pub l2: f64,
    /// Projection at the searched `gamma*`.
    pub l2_stab: f64,
    pub search: SearchResult,
    /// Errors of [`TABLE_SCHEMES`], same order.
    pub schemes: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct NormalStudy {
    pub config: StudyConfig,
    pub rows: Vec<NormalRow>,
}

impl NormalStudy {
    pub fn h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn l2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2).collect()
    }

    pub fn l2_stab(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2_stab).collect()
    }

    pub fn scheme(&self, s: NormalScheme) -> Vec<f64> {
        let k = TABLE_SCHEMES.iter().position(|&t| t == s).expect("scheme in table");
        self.rows.iter().map(|r| r.schemes[k]).collect()
    }

    /// `(eps(0) - eps(gamma*)) / eps(0)` per rung.
    pub fn improvement(&self) -> Vec<f64> {
        self.rows.iter().map(|r| (r.l2 - r.l2_stab) / r.l2).collect()
    }

    pub fn rates(&self, errors: &[f64]) -> Result<Vec<f64>> {
        convergence_rates(&self.h(), errors)
    }

    /// Errors and rates, one pair of columns per method.
    pub fn table(&self) -> Table {
        let mut header = vec!["h".to_string(), "vertices".into(), "gamma_star".into()];
        let mut columns: Vec<Vec<f64>> = vec![self.l2(), self.l2_stab()];
        header.extend(["L2".into(), "L2_rate".into(), "L2_stab".into(), "L2_stab_rate".into()]);
        for s in TABLE_SCHEMES {
            header.push(s.name().to_uppercase());
            header.push(format!("{}_rate", s.name().to_uppercase()));
            columns.push(self.scheme(s));
        }
        let h = self.h();
        let rates: Vec<Vec<f64>> = columns.iter().map(|c| padded_rates(&h, c)).collect();
        let mut t = Table::new(&header);
        for (k, r) in self.rows.iter().enumerate() {
            let mut row = vec![cell(r.h), r.num_vertices.to_string(), cell(r.search.gamma)];
            for (c, rate) in columns.iter().zip(&rates) {
                row.push(cell(c[k]));
                row.push(cell(rate[k]));
            }
            t.rows.push(row);
        }
        t
    }

    /// Search summary per rung.
    pub fn gamma_table(&self) -> Table {
        let mut t = Table::new(&[
            "h",
            "gamma_star",
            "eps_0",
            "eps_star",
            "delta",
            "relative_change",
            "evaluations",
        ]);
        for r in &self.rows {
            t.rows.push(vec![
                cell(r.h),
                cell(r.search.gamma),
                cell(r.l2),
                cell(r.l2_stab),
                cell(r.l2 - r.l2_stab),
                cell((r.l2 - r.l2_stab) / r.l2),
                r.search.evaluations.to_string(),
            ]);
        }
        t
    }

    /// Every `(gamma, eps)` probe, for error-versus-gamma curves.
    pub fn trace_table(&self) -> Table {
        trace_table(self.rows.iter().map(|r| (r.h, r.l2, &r.search)))
    }
}

fn trace_table<'a>(rows: impl Iterator<Item = (f64, f64, &'a SearchResult)>) -> Table {
    let mut t = Table::new(&["h", "gamma", "error"]);
    for (h, at_zero, s) in rows {
        let mut probes = s.probes.clone();
        probes.push((0.0, at_zero));
        probes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (g, e) in probes {
            t.rows.push(vec![cell(h), cell(g), cell(e)]);
        }
    }
    t
}

/// Normal errors of all methods on every rung, with `gamma_n*` searched per
/// rung against the exact normals.
pub fn normal_study(config: &StudyConfig) -> Result<NormalStudy> {
    config.validate()?;
    let surface = config.geometry.surface()?;
    let mut rows = Vec::new();
    for &(n_u, n_v) in &config.ladder.rungs {
        let mesh = config
            .geometry
            .mesh(n_u, n_v, config.ladder.jitter, config.ladder.seed)?;
        let exact = exact_normals(&mesh, &surface)?;
        let ops = SurfaceOperators::assemble(&mesh);
        let eps = |g: f64| -> Result<f64> { Ok(normal_error(&mesh, &ops.normals(g, &config.cg)?.values, &exact)) };
        let l2 = eps(0.0)?;
        let search = golden_section(eps, config.normal_bracket.0, config.normal_bracket.1, config.tol_x)?;
        let schemes = TABLE_SCHEMES
            .iter()
            .map(|&s| normal_error(&mesh, &weighted_vertex_normals(&mesh, s).field.values, &exact))
            .collect();
        rows.push(NormalRow {
            num_vertices: mesh.num_vertices(),
            h: mesh_size(&mesh, MeshSizeMode::VertexCount).value,
            l2,
            l2_stab: search.value,
            search,
            schemes,
        });
    }
    Ok(NormalStudy {
        config: config.clone(),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct CurvatureRow {
    pub num_vertices: usize,
    /// `1 / sqrt(N_v)`.
    pub h: f64,
    /// `H_h . n_h / 2` at `gamma_h`.
    pub fem: f64,
    /// `|H_h| / 2` at `gamma_h`.
    pub fem_magnitude: f64,
    pub ssf: f64,
    /// Vertices the surface fit could not handle.
    pub ssf_excluded: usize,
    pub dllb: f64,
    pub dllb_voronoi: f64,
}

#[derive(Clone, Debug)]
pub struct CurvatureStudy {
    pub config: StudyConfig,
    pub rows: Vec<CurvatureRow>,
}

impl CurvatureStudy {
    pub fn h(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn column(&self, f: impl Fn(&CurvatureRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn table(&self) -> Table {
        let h = self.h();
        let cols: Vec<(&str, Vec<f64>)> = vec![
            ("H_h", self.column(|r| r.fem)),
            ("H_h_abs", self.column(|r| r.fem_magnitude)),
            ("SSF", self.column(|r| r.ssf)),
            ("DLLB", self.column(|r| r.dllb)),
            ("DLLB_voronoi", self.column(|r| r.dllb_voronoi)),
        ];
        let mut header = vec!["h".to_string(), "vertices".into(), "gamma_h".into()];
        for (name, _) in &cols {
            header.push(name.to_string());
            header.push(format!("{name}_rate"));
        }
        header.push("SSF_excluded".into());
        let rates: Vec<Vec<f64>> = cols.iter().map(|(_, c)| padded_rates(&h, c)).collect();
        let mut t = Table::new(&header);
        for (k, r) in self.rows.iter().enumerate() {
            let mut row = vec![cell(r.h), r.num_vertices.to_string(), cell(self.config.gamma_h)];
            for ((_, c), rate) in cols.iter().zip(&rates) {
                row.push(cell(c[k]));
                row.push(cell(rate[k]));
            }
            row.push(r.ssf_excluded.to_string());
            t.rows.push(row);
        }
        t
    }
}

/// Mean curvature errors of the stabilised FEM, the surface fit and the
/// cotangent operator on every rung.
pub fn curvature_study(config: &StudyConfig) -> Result<CurvatureStudy> {
    config.validate()?;
    let surface = config.geometry.surface()?;
    let mut rows = Vec::new();
    for &(n_u, n_v) in &config.ladder.rungs {
        let mesh = config
            .geometry
            .mesh(n_u, n_v, config.ladder.jitter, config.ladder.seed)?;
        let ops = SurfaceOperators::assemble(&mesh);
        let hv = ops.curvature_vector(config.gamma_h, &config.cg)?;
        let n = ops.normals(config.gamma_n, &config.cg)?;
        let sc = scalar_curvature(&hv, &n);
        let err = |v: &[f64]| -> Result<f64> {
            let v: Vec<Option<f64>> = v.iter().map(|&x| Some(x)).collect();
            Ok(curvature_error(&mesh, &v, &surface)?.0)
        };
        let frame = weighted_vertex_normals(&mesh, config.ssf_frame).field;
        let ssf = ssf_curvature(&mesh, &frame)?;
        let (ssf_err, ssf_excluded) = curvature_error(&mesh, &ssf.mean_curvature, &surface)?;
        rows.push(CurvatureRow {
            num_vertices: mesh.num_vertices(),
            h: mesh_size(&mesh, MeshSizeMode::VertexCount).value,
            fem: err(&sc.signed)?,
            fem_magnitude: err(&sc.magnitude)?,
            ssf: ssf_err,
            ssf_excluded,
            dllb: err(&dllb(&mesh, AreaMode::Barycentric).mean_curvature)?,
            dllb_voronoi: err(&dllb(&mesh, AreaMode::MixedVoronoi).mean_curvature)?,
        });
    }
    Ok(CurvatureStudy {
        config: config.clone(),
        rows,
    })
}

#[derive(Clone, Debug)]
pub struct GammaCurvatureRow {
    pub h: f64,
    /// Error at `gamma_h = 0`.
    pub at_zero: f64,
    pub search: SearchResult,
}

/// `gamma_h*` minimising the mean curvature error on every rung.
pub fn curvature_gamma_study(config: &StudyConfig) -> Result<Vec<GammaCurvatureRow>> {
    config.validate()?;
    let surface = config.geometry.surface()?;
    let mut rows = Vec::new();
    for &(n_u, n_v) in &config.ladder.rungs {
        let mesh = config
            .geometry
            .mesh(n_u, n_v, config.ladder.jitter, config.ladder.seed)?;
        let ops = SurfaceOperators::assemble(&mesh);
        let n = ops.normals(config.gamma_n, &config.cg)?;
        let eps = |g: f64| -> Result<f64> {
            let hv = ops.curvature_vector(g, &config.cg)?;
            let v: Vec<Option<f64>> = scalar_curvature(&hv, &n).signed.into_iter().map(Some).collect();
            Ok(curvature_error(&mesh, &v, &surface)?.0)
        };
        let at_zero = eps(0.0)?;
        let search = golden_section(
            eps,
            config.curvature_bracket.0,
            config.curvature_bracket.1,
            config.tol_x,
        )?;
        rows.push(GammaCurvatureRow {
            h: mesh_size(&mesh, MeshSizeMode::VertexCount).value,
            at_zero,
            search,
        });
    }
    Ok(rows)
}

pub fn curvature_gamma_table(rows: &[GammaCurvatureRow]) -> Table {
    let mut t = Table::new(&["h", "gamma_star", "eps_star", "delta", "relative_change", "eps_rate"]);
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let best: Vec<f64> = rows.iter().map(|r| r.search.value).collect();
    let rates = padded_rates(&h, &best);
    for (r, rate) in rows.iter().zip(rates) {
        let delta = r.at_zero - r.search.value;
        t.rows.push(vec![
            cell(r.h),
            cell(r.search.gamma),
            cell(r.search.value),
            cell(delta),
            cell(delta / r.search.value),
            cell(rate),
        ]);
    }
    t
}

pub fn curvature_trace_table(rows: &[GammaCurvatureRow]) -> Table {
    trace_table(rows.iter().map(|r| (r.h, r.at_zero, &r.search)))
}

/// Settings of the PN refinement studies on one initial mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct PnConfig {
    pub geometry: TorusGeometry,
    /// `(n_u, n_v)` of the initial mesh.
    pub initial: (usize, usize),
    pub jitter: f64,
    pub seed: u64,
    pub rounds: usize,
    pub theta: f64,
    /// `None` searches `gamma_n*` on the initial mesh and keeps it.
    pub gamma_n: Option<f64>,
    pub tol_x: f64,
    pub cg: CgSettings,
    pub geom_mode: GeomErrorMode,
}

impl Default for PnConfig {
    fn default() -> Self {
        Self {
            geometry: TorusGeometry::new(4.0),
            initial: (22, 11),
            jitter: 0.02,
            seed: 7,
            rounds: 4,
            theta: 0.5,
            gamma_n: None,
            tol_x: DEFAULT_TOL_X,
            cg: CgSettings {
                preconditioner: Preconditioner::IncompleteCholesky,
                ..Default::default()
            },
            geom_mode: GeomErrorMode::SignedDistance,
        }
    }
}

impl PnConfig {
    pub fn initial_mesh(&self) -> Result<TriMesh> {
        self.geometry
            .mesh(self.initial.0, self.initial.1, self.jitter, self.seed)
    }

    /// `gamma_n` for the loops: fixed, or searched on the initial mesh.
    pub fn resolve_gamma(&self) -> Result<f64> {
        if let Some(g) = self.gamma_n {
            return Ok(g);
        }
        let mesh = self.initial_mesh()?;
        let surface = self.geometry.surface()?;
        let exact = exact_normals(&mesh, &surface)?;
        let ops = SurfaceOperators::assemble(&mesh);
        let eps = |g: f64| -> Result<f64> { Ok(normal_error(&mesh, &ops.normals(g, &self.cg)?.values, &exact)) };
        Ok(golden_section(eps, 0.0, 1.0, self.tol_x)?.gamma)
    }

    pub fn echo(&self, gamma_n: f64) -> Vec<String> {
        let g = &self.geometry;
        vec![
            format!("torus R={} r={} a={}", g.major_radius, g.minor_radius, g.squish),
            format!(
                "initial {}x{} jitter={} seed={}",
                self.initial.0, self.initial.1, self.jitter, self.seed
            ),
            format!(
                "rounds={} theta={} gamma_n={} ({}) geom_mode={:?}",
                self.rounds,
                self.theta,
                gamma_n,
                if self.gamma_n.is_some() {
                    "fixed"
                } else {
                    "searched on initial mesh"
                },
                self.geom_mode
            ),
        ]
    }
}

/// One adaptive run in a PN study.
#[derive(Clone, Debug)]
pub struct PnRun {
    pub normals: NormalSource,
    pub placer: PlacerKind,
    pub theta: f64,
    pub records: Vec<RoundRecord>,
}

impl PnRun {
    pub fn geom_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.geom_error.unwrap_or(f64::NAN)).collect()
    }

    pub fn h(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h).collect()
    }
}

pub fn pn_run(config: &PnConfig, gamma_n: f64, theta: f64, placer: PlacerKind, normals: NormalSource) -> Result<PnRun> {
    let surface = config.geometry.surface()?;
    let settings = AdaptiveSettings {
        gamma_n,
        cg: config.cg,
        tol: None,
        max_rounds: config.rounds,
        theta,
        placer,
        normals,
        geom_mode: config.geom_mode,
    };
    let run = adaptive_loop(&config.initial_mesh()?, Some(&surface), &settings)?;
    Ok(PnRun {
        normals,
        placer,
        theta,
        records: run.records,
    })
}

fn source_name(s: NormalSource) -> String {
    match s {
        NormalSource::Stabilized => "l2stab".into(),
        NormalSource::Scheme(s) => s.name().into(),
    }
}

/// Per-round table of one or more runs, long format.
pub fn pn_table(runs: &[PnRun]) -> Table {
    let mut t = Table::new(&[
        "round",
        "normals",
        "elements",
        "vertices",
        "h",
        "indicator",
        "geom_error",
        "geom_rate",
        "effectivity",
    ]);
    for run in runs {
        let rates = padded_rates(&run.h(), &run.geom_errors());
        for (r, rate) in run.records.iter().zip(rates) {
            t.rows.push(vec![
                r.round.to_string(),
                source_name(run.normals),
                r.num_faces.to_string(),
                r.num_vertices.to_string(),
                cell(r.h),
                cell(r.indicator),
                cell(r.geom_error.unwrap_or(f64::NAN)),
                cell(rate),
                cell(r.effectivity.unwrap_or(f64::NAN)),
            ]);
        }
    }
    t
}
