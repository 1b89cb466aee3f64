//! Command-line front end: mesh generation and inspection, single
//! computations on a mesh file, adaptive refinement and the study suite.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimators::{dllb, ssf_curvature, weighted_vertex_normals, AreaMode, NormalScheme};
use crate::fem::{scalar_curvature, CgSettings, Preconditioner, SurfaceOperators};
use crate::implicit::{LevelSet, Sphere, SquishedTorus};
use crate::mesh::io::{read_mesh, write_mesh, PlyAttributes};
use crate::mesh::{generate_torus, mesh_size, shapes, MeshSizeMode, TorusMeshParams, TriMesh, Vec3};
use crate::norms::{curvature_error, exact_mean_curvature, exact_normals, normal_error, GeomErrorMode};
use crate::refine::{adaptive_loop, AdaptiveSettings, NormalSource, PlacerKind};
use crate::study::{
    curvature_gamma_study, curvature_gamma_table, curvature_study, curvature_trace_table, normal_study, pn_run,
    pn_table, Ladder, PnConfig, PnRun, StudyConfig, Table, TorusGeometry,
};

#[derive(Debug, Parser)]
#[command(
    name = "curvkit",
    version,
    about = "Stabilised FEM normals and mean curvature on triangle meshes"
)]
pub struct Cli {
    /// Worker threads (also read from CURVKIT_THREADS).
    #[arg(long, global = true, env = "CURVKIT_THREADS")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub cg: CgArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CgArgs {
    /// Relative residual at which CG stops.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub cg_tol: f64,
    /// CG iteration cap; defaults to max(100 sqrt(N), 500).
    #[arg(long, global = true)]
    pub cg_max_iter: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = PreconditionerArg::Ic)]
    pub preconditioner: PreconditionerArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreconditionerArg {
    None,
    Jacobi,
    Ic,
}

impl CgArgs {
    fn settings(&self) -> Result<CgSettings> {
        if !(self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "--cg-tol {} must be positive",
                self.cg_tol
            )));
        }
        Ok(CgSettings {
            tol: self.cg_tol,
            max_iterations: self.cg_max_iter,
            preconditioner: match self.preconditioner {
                PreconditionerArg::None => Preconditioner::None,
                PreconditionerArg::Jacobi => Preconditioner::Jacobi,
                PreconditionerArg::Ic => Preconditioner::IncompleteCholesky,
            },
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Vertex normals of one or all schemes.
    Normals(NormalsArgs),
    /// Mean curvature from the stabilised FEM and the classical estimators.
    Curvature(CurvatureArgs),
    /// Adaptive refinement driven by the normal discrepancy.
    Refine(RefineArgs),
    /// Convergence studies on the squished torus, written as CSV.
    Study(StudyArgs),
}

#[derive(Debug, Subcommand)]
pub enum MeshCommand {
    Gen(GenArgs),
    Info { input: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Torus,
    Sphere,
    Square,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Shape::Torus)]
    pub shape: Shape,
    #[arg(long = "R", default_value_t = 1.0)]
    pub major_radius: f64,
    /// Minor radius of the torus, radius of the sphere.
    #[arg(long = "r", default_value_t = 0.5)]
    pub minor_radius: f64,
    #[arg(long = "a", default_value_t = 1.0)]
    pub squish: f64,
    #[arg(long, default_value_t = 64)]
    pub nu: usize,
    #[arg(long, default_value_t = 32)]
    pub nv: usize,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Icosphere subdivision level.
    #[arg(long, default_value_t = 4)]
    pub subdivisions: usize,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Exact surface for error reporting.
#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Squished torus `R,r,a`.
    #[arg(long, value_name = "R,r,a", conflicts_with = "exact_sphere")]
    pub exact_torus: Option<String>,
    /// Sphere of this radius about the origin.
    #[arg(long, value_name = "RADIUS")]
    pub exact_sphere: Option<f64>,
}

pub enum ExactSurface {
    Torus(SquishedTorus),
    Sphere(Sphere),
}

impl ExactSurface {
    pub fn level_set(&self) -> &dyn LevelSet {
        match self {
            ExactSurface::Torus(t) => t,
            ExactSurface::Sphere(s) => s,
        }
    }
}

pub fn parse_torus(s: &str) -> Result<SquishedTorus> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("--exact-torus '{s}': {e}")))?;
    match vals[..] {
        [r0, r1, a] => SquishedTorus::new(r0, r1, a),
        _ => Err(Error::InvalidParameter(format!(
            "--exact-torus '{s}' needs three values R,r,a"
        ))),
    }
}

impl ExactArgs {
    fn surface(&self) -> Result<Option<ExactSurface>> {
        if let Some(s) = &self.exact_torus {
            return Ok(Some(ExactSurface::Torus(parse_torus(s)?)));
        }
        if let Some(r) = self.exact_sphere {
            return Ok(Some(ExactSurface::Sphere(Sphere::new(Vec3::zeros(), r)?)));
        }
        Ok(None)
    }
}

#[derive(Debug, Args)]
pub struct NormalsArgs {
    pub input: PathBuf,
    /// `l2`, one of the weighted schemes (mwa, mwe, ...), or `all`.
    #[arg(long, default_value = "all")]
    pub scheme: String,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_n: f64,
    #[command(flatten)]
    pub exact: ExactArgs,
    /// PLY (or OFF/OBJ) with the per-vertex fields.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Global errors, one column per scheme.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_h: f64,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_n: f64,
    /// Frame normals of the surface fit.
    #[arg(long, default_value = "mwa")]
    pub ssf_frame: String,
    #[command(flatten)]
    pub exact: ExactArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlacerArg {
    Linear,
    Pn,
    Exact,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_n: f64,
    /// Maximum strategy fraction; 0 refines everything.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    /// Stop once the global indicator drops below this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = PlacerArg::Pn)]
    pub placer: PlacerArg,
    /// Normals the indicator compares against: `l2` or a weighted scheme.
    #[arg(long, default_value = "l2")]
    pub normals: String,
    /// Report the geometric error as phi^2 instead of the signed distance.
    #[arg(long)]
    pub use_phi_squared: bool,
    #[command(flatten)]
    pub exact: ExactArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    All,
    Normals,
    Curvature,
    Pn,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(value_enum, default_value_t = StudyKind::All)]
    pub kind: StudyKind,
    #[arg(long, default_value = "study")]
    pub out_dir: PathBuf,
    /// Squish factors of the normal study.
    #[arg(long = "a", value_delimiter = ',', default_values_t = [1.0, 4.0])]
    pub squish: Vec<f64>,
    /// `n_v` of the coarsest rung; `n_u = 2 n_v`, doubled per rung.
    #[arg(long, default_value_t = 22)]
    pub nv0: usize,
    #[arg(long, default_value_t = 4)]
    pub rungs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub jitter: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub gamma_h: f64,
    /// Normals used to take the scalar curvature.
    #[arg(long, default_value_t = 0.05)]
    pub gamma_n: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    /// `gamma_n` of the refinement loops; searched on the initial mesh if absent.
    #[arg(long)]
    pub pn_gamma_n: Option<f64>,
    /// `n_v` of the initial refinement mesh (a=4).
    #[arg(long, default_value_t = 11)]
    pub pn_nv: usize,
    #[arg(long)]
    pub use_phi_squared: bool,
}

/// Parses arguments, configures the thread pool and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cg = cli.cg.settings()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Mesh(MeshCommand::Gen(a)) => mesh_gen(&a),
        Command::Mesh(MeshCommand::Info { input }) => mesh_info(&read_mesh(&input)?, &mut out),
        Command::Normals(a) => normals(&a, &cg, &mut out),
        Command::Curvature(a) => curvature(&a, &cg, &mut out),
        Command::Refine(a) => refine(&a, &cg, &mut out),
        Command::Study(a) => study(&a, &cg, &mut out),
    }
}

fn mesh_gen(a: &GenArgs) -> Result<()> {
    let mesh = match a.shape {
        Shape::Torus => generate_torus(
            &TorusMeshParams::new(a.major_radius, a.minor_radius, a.squish, a.nu, a.nv).jittered(a.jitter, a.seed),
        )?,
        Shape::Sphere => {
            if !(a.minor_radius > 0.0) || a.subdivisions > 8 {
                return Err(Error::InvalidParameter(
                    "sphere needs r > 0 and at most 8 subdivisions".into(),
                ));
            }
            shapes::icosphere(a.minor_radius, a.subdivisions)
        }
        Shape::Square => shapes::flat_square(a.nu, a.nv)?,
    };
    write_mesh(&a.output, &mesh, &PlyAttributes::default())
}

fn mesh_info<W: Write>(mesh: &TriMesh, out: &mut W) -> Result<()> {
    writeln!(out, "vertices {}", mesh.num_vertices())?;
    writeln!(out, "edges {}", mesh.num_edges())?;
    writeln!(out, "faces {}", mesh.num_faces())?;
    writeln!(out, "euler {}", mesh.euler_characteristic())?;
    writeln!(
        out,
        "h_vertex_count {}",
        mesh_size(mesh, MeshSizeMode::VertexCount).value
    )?;
    writeln!(
        out,
        "h_mean_root_area {}",
        mesh_size(mesh, MeshSizeMode::MeanRootArea).value
    )?;
    writeln!(out, "min_angle_deg {}", mesh.min_angle().to_degrees())?;
    writeln!(out, "area {}", mesh.total_area())?;
    Ok(())
}

fn write_table(path: &Path, table: &Table, comments: &[String]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    table.write_csv(&mut w, comments)?;
    w.flush()?;
    Ok(())
}

fn single_row(header: Vec<String>, row: Vec<String>) -> Table {
    Table {
        header,
        rows: vec![row],
    }
}

/// `(name, field)` pairs selected by `--scheme`.
fn selected_normals(
    mesh: &TriMesh,
    ops: &SurfaceOperators,
    scheme: &str,
    gamma_n: f64,
    cg: &CgSettings,
) -> Result<Vec<(String, Vec<Vec3>)>> {
    let mut out = Vec::new();
    let all = scheme.eq_ignore_ascii_case("all");
    if all || scheme.eq_ignore_ascii_case("l2") {
        out.push(("l2".to_string(), ops.normals(gamma_n, cg)?.values));
    }
    let schemes: Vec<NormalScheme> = if all {
        NormalScheme::ALL.to_vec()
    } else if scheme.eq_ignore_ascii_case("l2") {
        Vec::new()
    } else {
        vec![scheme.parse()?]
    };
    for s in schemes {
        out.push((s.name().to_string(), weighted_vertex_normals(mesh, s).field.values));
    }
    Ok(out)
}

fn normals<W: Write>(a: &NormalsArgs, cg: &CgSettings, out: &mut W) -> Result<()> {
    let mesh = read_mesh(&a.input)?;
    let ops = SurfaceOperators::assemble(&mesh);
    let fields = selected_normals(&mesh, &ops, &a.scheme, a.gamma_n, cg)?;
    let surface = a.exact.surface()?;
    let mut attrs = PlyAttributes::default();
    let mut header = vec!["h".to_string(), "vertices".into(), "gamma_n".into()];
    let h = mesh_size(&mesh, MeshSizeMode::VertexCount).value;
    let mut row = vec![
        format!("{h}"),
        mesh.num_vertices().to_string(),
        format!("{}", a.gamma_n),
    ];
    let exact = surface
        .as_ref()
        .map(|s| exact_normals(&mesh, s.level_set()))
        .transpose()?;
    for (name, values) in &fields {
        if let Some(exact) = &exact {
            let err = normal_error(&mesh, values, exact);
            writeln!(out, "eps_{name} {err}")?;
            header.push(name.to_uppercase());
            row.push(format!("{err}"));
            let pointwise = values.iter().zip(exact).map(|(n, e)| (n - e).norm()).collect();
            attrs = attrs.vertex_scalar(&format!("err_{name}"), pointwise);
        }
        attrs = attrs.vertex_vector(&format!("n_{name}"), values.clone());
    }
    if let Some(exact) = exact {
        attrs = attrs.vertex_vector("n_exact", exact);
    }
    if let Some(p) = &a.output {
        write_mesh(p, &mesh, &attrs)?;
    }
    if let Some(p) = &a.csv {
        if surface.is_none() {
            return Err(Error::InvalidParameter("--csv needs an exact surface".into()));
        }
        write_table(p, &single_row(header, row), &[format!("input {}", a.input.display())])?;
    }
    Ok(())
}

fn curvature<W: Write>(a: &CurvatureArgs, cg: &CgSettings, out: &mut W) -> Result<()> {
    let mesh = read_mesh(&a.input)?;
    let frame_scheme: NormalScheme = a.ssf_frame.parse()?;
    let ops = SurfaceOperators::assemble(&mesh);
    let hv = ops.curvature_vector(a.gamma_h, cg)?;
    let n = ops.normals(a.gamma_n, cg)?;
    let sc = scalar_curvature(&hv, &n);
    let ssf = ssf_curvature(&mesh, &weighted_vertex_normals(&mesh, frame_scheme).field)?;
    let dl = dllb(&mesh, AreaMode::Barycentric).mean_curvature;
    let mean = sc.signed.iter().sum::<f64>() / sc.signed.len() as f64;
    writeln!(out, "mean_H {mean}")?;

    let nan = |v: &[Option<f64>]| -> Vec<f64> { v.iter().map(|x| x.unwrap_or(f64::NAN)).collect() };
    let methods: Vec<(&str, Vec<Option<f64>>)> = vec![
        ("H_h", sc.signed.iter().map(|&x| Some(x)).collect()),
        ("SSF", ssf.mean_curvature.clone()),
        ("DLLB", dl.iter().map(|&x| Some(x)).collect()),
    ];
    let mut attrs = PlyAttributes::default()
        .vertex_vector("Hvec", hv.values.clone())
        .vertex_vector("n_l2", n.values.clone());
    let surface = a.exact.surface()?;
    let h = mesh_size(&mesh, MeshSizeMode::VertexCount).value;
    let mut header = vec!["h".to_string(), "vertices".into(), "gamma_h".into()];
    let mut row = vec![
        format!("{h}"),
        mesh.num_vertices().to_string(),
        format!("{}", a.gamma_h),
    ];
    let exact = surface
        .as_ref()
        .map(|s| exact_mean_curvature(&mesh, s.level_set()))
        .transpose()?;
    for (name, values) in &methods {
        if let (Some(s), Some(exact)) = (&surface, &exact) {
            let (err, excluded) = curvature_error(&mesh, values, s.level_set())?;
            writeln!(out, "eps_H_{name} {err} (excluded {excluded})")?;
            header.push(name.to_string());
            row.push(format!("{err}"));
            let pointwise = values
                .iter()
                .zip(exact)
                .map(|(v, e)| v.map_or(f64::NAN, |v| (v - e).abs()))
                .collect();
            attrs = attrs.vertex_scalar(&format!("err_{name}"), pointwise);
        }
        attrs = attrs.vertex_scalar(name, nan(values));
    }
    if let Some(exact) = exact {
        attrs = attrs.vertex_scalar("H_exact", exact);
    }
    if let Some(p) = &a.output {
        write_mesh(p, &mesh, &attrs)?;
    }
    if let Some(p) = &a.csv {
        if surface.is_none() {
            return Err(Error::InvalidParameter("--csv needs an exact surface".into()));
        }
        write_table(p, &single_row(header, row), &[format!("input {}", a.input.display())])?;
    }
    Ok(())
}

fn normal_source(s: &str) -> Result<NormalSource> {
    if s.eq_ignore_ascii_case("l2") {
        Ok(NormalSource::Stabilized)
    } else {
        Ok(NormalSource::Scheme(s.parse()?))
    }
}

fn geom_mode(phi_squared: bool) -> GeomErrorMode {
    if phi_squared {
        GeomErrorMode::PhiSquared
    } else {
        GeomErrorMode::SignedDistance
    }
}

fn refine<W: Write>(a: &RefineArgs, cg: &CgSettings, out: &mut W) -> Result<()> {
    let mesh = read_mesh(&a.input)?;
    let surface = a.exact.surface()?;
    let placer = match a.placer {
        PlacerArg::Linear => PlacerKind::LinearMidpoint,
        PlacerArg::Pn => PlacerKind::PnSurface,
        PlacerArg::Exact => PlacerKind::ExactProjection,
    };
    if placer == PlacerKind::ExactProjection && surface.is_none() {
        return Err(Error::InvalidParameter("--placer exact needs an exact surface".into()));
    }
    let normals = normal_source(&a.normals)?;
    let settings = AdaptiveSettings {
        gamma_n: a.gamma_n,
        cg: *cg,
        tol: a.tol,
        max_rounds: a.rounds,
        theta: a.theta,
        placer,
        normals,
        geom_mode: geom_mode(a.use_phi_squared),
    };
    let run = adaptive_loop(&mesh, surface.as_ref().map(|s| s.level_set()), &settings)?;
    let records = run.records.clone();
    for r in &records {
        writeln!(
            out,
            "round {} elements {} indicator {} geom {} effectivity {}",
            r.round,
            r.num_faces,
            r.indicator,
            r.geom_error.map_or("-".into(), |e| e.to_string()),
            r.effectivity.map_or("-".into(), |e| e.to_string())
        )?;
    }
    if let (Some(p), Some(last)) = (&a.output, run.states.last()) {
        // Indicators exist for every state the loop evaluated.
        let mut attrs = PlyAttributes::default();
        if let Some(eta) = run.indicators.get(run.states.len() - 1) {
            attrs = attrs.face_scalar("indicator", eta.clone());
        }
        write_mesh(p, &last.mesh, &attrs)?;
    }
    if let Some(p) = &a.csv {
        let table = pn_table(&[PnRun {
            normals,
            placer,
            theta: a.theta,
            records,
        }]);
        write_table(
            p,
            &table,
            &[format!(
                "input {} theta={} placer={:?}",
                a.input.display(),
                a.theta,
                placer
            )],
        )?;
    }
    Ok(())
}

fn study<W: Write>(a: &StudyArgs, cg: &CgSettings, out: &mut W) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let ladder = Ladder::doubling(a.nv0, a.rungs, a.jitter, a.seed);
    let config = |squish: f64| StudyConfig {
        ladder: ladder.clone(),
        gamma_h: a.gamma_h,
        gamma_n: a.gamma_n,
        cg: *cg,
        ..StudyConfig::new(squish)
    };
    let file = |name: &str| a.out_dir.join(name);
    let seed_line = format!("seed {}", a.seed);

    if matches!(a.kind, StudyKind::All | StudyKind::Normals) {
        let mut gamma = Table::default();
        let mut trace = Table::default();
        let mut comments = Vec::new();
        for &squish in &a.squish {
            let c = config(squish);
            let s = normal_study(&c)?;
            let mut echo = c.echo();
            echo.push(seed_line.clone());
            let name = format!("normals_a{squish}.csv");
            write_table(&file(&name), &s.table(), &echo)?;
            writeln!(out, "wrote {name}")?;
            merge_with_squish(&mut gamma, s.gamma_table(), squish);
            merge_with_squish(&mut trace, s.trace_table(), squish);
            comments.extend(echo);
        }
        write_table(&file("gamma_normals.csv"), &gamma, &comments)?;
        write_table(&file("gamma_normals_trace.csv"), &trace, &comments)?;
        writeln!(out, "wrote gamma_normals.csv")?;
    }
    if matches!(a.kind, StudyKind::All | StudyKind::Curvature) {
        let c = config(1.0);
        let mut echo = c.echo();
        echo.push(seed_line.clone());
        write_table(&file("curvature.csv"), &curvature_study(&c)?.table(), &echo)?;
        writeln!(out, "wrote curvature.csv")?;
        let rows = curvature_gamma_study(&c)?;
        write_table(&file("gamma_curvature.csv"), &curvature_gamma_table(&rows), &echo)?;
        write_table(&file("gamma_curvature_trace.csv"), &curvature_trace_table(&rows), &echo)?;
        writeln!(out, "wrote gamma_curvature.csv")?;
    }
    if matches!(a.kind, StudyKind::All | StudyKind::Pn) {
        let pn = PnConfig {
            geometry: TorusGeometry::new(4.0),
            initial: (2 * a.pn_nv, a.pn_nv),
            jitter: a.jitter,
            seed: a.seed,
            rounds: a.rounds,
            theta: a.theta,
            gamma_n: a.pn_gamma_n,
            cg: *cg,
            geom_mode: geom_mode(a.use_phi_squared),
            ..Default::default()
        };
        let gamma_n = pn.resolve_gamma()?;
        let echo = pn.echo(gamma_n);
        let sources = [NormalSource::Stabilized, NormalSource::Scheme(NormalScheme::Mwa)];
        let suites = [
            ("pn_uniform.csv", 0.0, PlacerKind::PnSurface),
            ("pn_adaptive.csv", a.theta, PlacerKind::PnSurface),
            ("pn_exact.csv", a.theta, PlacerKind::ExactProjection),
        ];
        for (name, theta, placer) in suites {
            let runs = sources
                .iter()
                .map(|&s| pn_run(&pn, gamma_n, theta, placer, s))
                .collect::<Result<Vec<_>>>()?;
            let mut e = echo.clone();
            e.push(format!("theta={theta} placer={placer:?}"));
            write_table(&file(name), &pn_table(&runs), &e)?;
            writeln!(out, "wrote {name}")?;
        }
    }
    Ok(())
}

/// Appends `t` to `acc` with an `a` column after `h`.
fn merge_with_squish(acc: &mut Table, t: Table, squish: f64) {
    if acc.header.is_empty() {
        acc.header = t.header.clone();
        acc.header.insert(1, "a".into());
    }
    for mut r in t.rows {
        r.insert(1, format!("{squish}"));
        acc.rows.push(r);
    }
}
