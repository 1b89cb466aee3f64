//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. `ACCEPTANCE_ONLY=1,4` restricts the run.

mod common;

use std::time::{Duration, Instant};

use curvkit::estimators::NormalScheme;
use curvkit::fem::{CgSettings, Preconditioner, SurfaceOperators};
use curvkit::mesh::shapes;
use curvkit::norms::{convergence_rates, exact_normals, normal_error};
use curvkit::refine::{NormalSource, PlacerKind, RoundRecord};
use curvkit::search::golden_section;
use curvkit::study::{curvature_study, normal_study, pn_run, Ladder, NormalStudy, PnConfig, StudyConfig};

struct Verdict {
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    /// Records one condition and its evidence.
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.pass &= ok;
        self.details
            .push(format!("[{}] {}", if ok { "ok" } else { "FAIL" }, what.into()));
    }

    fn within(&mut self, elapsed: Duration, budget_s: u64) {
        self.check(
            elapsed <= Duration::from_secs(budget_s),
            format!("runtime {:.1}s <= {budget_s}s", elapsed.as_secs_f64()),
        );
    }
}

fn fmt(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", s.join(", "))
}

fn ic() -> CgSettings {
    CgSettings {
        preconditioner: Preconditioner::IncompleteCholesky,
        ..Default::default()
    }
}

fn last_rate(study: &NormalStudy, errors: &[f64]) -> (Vec<f64>, f64) {
    let r = study.rates(errors).expect("positive errors");
    let last = *r.last().unwrap();
    (r, last)
}

fn normal_rates(study: &NormalStudy, elapsed: Duration) -> Verdict {
    let mut v = Verdict::new();
    let (r, p) = last_rate(study, &study.l2_stab());
    v.check(
        p >= 1.5,
        format!("L2_stab finest rate {p:.4} >= 1.5, rates {}", fmt(&r)),
    );
    let (r, p) = last_rate(study, &study.l2());
    v.check(
        (0.9..=1.3).contains(&p),
        format!("L2 finest rate {p:.4} in [0.9, 1.3], rates {}", fmt(&r)),
    );
    let (r, p) = last_rate(study, &study.scheme(NormalScheme::Mwa));
    v.check(
        (1.1..=1.6).contains(&p),
        format!("MWA finest rate {p:.4} in [1.1, 1.6], rates {}", fmt(&r)),
    );
    v.details.push(format!(
        "vertices {:?}",
        study.rows.iter().map(|r| r.num_vertices).collect::<Vec<_>>()
    ));
    v.within(elapsed, 120);
    v
}

fn ranking(study: &NormalStudy) -> Verdict {
    let mut v = Verdict::new();
    let stab = *study.l2_stab().last().unwrap();
    let mwa = *study.scheme(NormalScheme::Mwa).last().unwrap();
    let mwaat = *study.scheme(NormalScheme::Mwaat).last().unwrap();
    v.check(
        stab < mwa && mwa < mwaat,
        format!("L2_stab {stab:.3e} < MWA {mwa:.3e} < MWAAT {mwaat:.3e}"),
    );
    v.check(stab <= 0.5 * mwa, format!("L2_stab / MWA = {:.3} <= 0.5", stab / mwa));
    v
}

fn curvature_rates(elapsed_budget: u64) -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    let s = curvature_study(&StudyConfig::new(1.0)).expect("curvature study");
    let elapsed = t.elapsed();
    let h = s.h();
    let rates = |e: Vec<f64>| convergence_rates(&h, &e).expect("positive errors");
    let fem = rates(s.column(|r| r.fem));
    v.check(
        fem.iter().all(|p| (0.8..=1.6).contains(p)),
        format!("H_h rates {} all in [0.8, 1.6]", fmt(&fem)),
    );
    let dl = rates(s.column(|r| r.dllb));
    v.check(
        dl.iter().all(|&p| p < 0.5),
        format!("DLLB rates {} all < 0.5", fmt(&dl)),
    );
    let ssf = rates(s.column(|r| r.ssf));
    let declining = ssf.windows(2).all(|w| w[1] < w[0]);
    let last = *ssf.last().unwrap();
    v.check(
        declining && last < 0.8,
        format!("SSF rates {} declining, finest < 0.8", fmt(&ssf)),
    );
    v.details.push(format!("H_h errors {}", fmt(&s.column(|r| r.fem))));
    v.within(elapsed, elapsed_budget);
    v
}

fn sphere_oracle() -> Verdict {
    let mut v = Verdict::new();
    let mesh = shapes::icosphere(2.0, 5);
    v.check(
        mesh.num_vertices() >= 10_000,
        format!("{} vertices >= 10000", mesh.num_vertices()),
    );
    let ops = SurfaceOperators::assemble(&mesh);
    let cg = ic();
    let hv = ops.curvature_vector(0.05, &cg).expect("curvature");
    let n = ops.normals(0.05, &cg).expect("normals");
    let sc = curvkit::fem::scalar_curvature(&hv, &n);
    let median = |mut x: Vec<f64>| {
        x.sort_by(f64::total_cmp);
        x[x.len() / 2]
    };
    let h = median(sc.signed.clone());
    v.check((h - 0.5).abs() <= 0.01, format!("median H_h {h:.6}, |H - 0.5| <= 0.01"));
    let angles: Vec<f64> = mesh
        .vertices()
        .iter()
        .zip(&n.values)
        .map(|(p, n)| n.angle(&p.normalize()).to_degrees())
        .collect();
    let a = median(angles);
    v.check(a < 0.2, format!("median angle(n_h, radial) {a:.2e} deg < 0.2"));
    v
}

fn gamma_search(study: &NormalStudy) -> Verdict {
    let mut v = Verdict::new();
    for r in &study.rows {
        v.check(
            r.search.gamma > 0.0 && r.l2_stab < r.l2,
            format!(
                "a=1 N_v={}: gamma* {:.5} > 0, eps(gamma*) {:.3e} < eps(0) {:.3e}",
                r.num_vertices, r.search.gamma, r.l2_stab, r.l2
            ),
        );
    }
    let imp = study.improvement();
    v.check(
        imp.windows(2).all(|w| w[1] > w[0]),
        format!("improvement ratios {} increase", fmt(&imp)),
    );
    let config = StudyConfig::new(4.0);
    let (n_u, n_v) = config.ladder.rungs[0];
    let mesh = config
        .geometry
        .mesh(n_u, n_v, config.ladder.jitter, config.ladder.seed)
        .expect("mesh");
    let exact = exact_normals(&mesh, &config.geometry.surface().unwrap()).unwrap();
    let ops = SurfaceOperators::assemble(&mesh);
    let r = golden_section(
        |g| Ok(normal_error(&mesh, &ops.normals(g, &config.cg)?.values, &exact)),
        0.0,
        1.0,
        config.tol_x,
    )
    .expect("search");
    v.check(
        r.gamma <= config.tol_x,
        format!(
            "a=4 N_v={}: gamma* {:.2e} <= tol {:.0e}",
            mesh.num_vertices(),
            r.gamma,
            config.tol_x
        ),
    );
    v
}

fn rates_of(records: &[RoundRecord]) -> Vec<f64> {
    let h: Vec<f64> = records.iter().map(|r| r.h).collect();
    let e: Vec<f64> = records.iter().map(|r| r.geom_error.unwrap()).collect();
    convergence_rates(&h, &e).expect("positive errors")
}

fn effectivity(config: &PnConfig, gamma_n: f64) -> Verdict {
    let mut v = Verdict::new();
    let run = pn_run(
        config,
        gamma_n,
        config.theta,
        PlacerKind::ExactProjection,
        NormalSource::Stabilized,
    )
    .expect("loop");
    let e: Vec<f64> = run.records.iter().map(|r| r.effectivity.unwrap()).collect();
    v.check(
        e.iter().all(|x| (0.95..=1.05).contains(x)),
        format!("E {} all in [0.95, 1.05]", fmt(&e)),
    );
    let r = rates_of(&run.records);
    v.check(
        r.iter().all(|p| (1.2..=2.0).contains(p)),
        format!("eps_geom rates {} all in [1.2, 2.0]", fmt(&r)),
    );
    v.details.push(format!("eps_geom {}", fmt(&run.geom_errors())));
    v
}

fn efficiency(config: &PnConfig, gamma_n: f64) -> Verdict {
    let mut v = Verdict::new();
    let run = |theta| pn_run(config, gamma_n, theta, PlacerKind::PnSurface, NormalSource::Stabilized).expect("loop");
    let (uni, ada) = (run(0.0), run(config.theta));
    // The cheapest adaptive record within 10% of some uniform indicator,
    // measured against that uniform record's element count.
    let best = uni
        .records
        .iter()
        .skip(1)
        .filter_map(|u| {
            ada.records
                .iter()
                .filter(|a| a.indicator <= 1.1 * u.indicator)
                .min_by_key(|a| a.num_faces)
                .map(|a| (u, a, a.num_faces as f64 / u.num_faces as f64))
        })
        .min_by(|x, y| x.2.total_cmp(&y.2));
    match best {
        Some((u, a, ratio)) => v.check(
            ratio <= 0.6,
            format!(
                "adaptive {}@{:.4} vs uniform {}@{:.4}: {:.0}% of the elements <= 60%",
                a.num_faces,
                a.indicator,
                u.num_faces,
                u.indicator,
                100.0 * ratio
            ),
        ),
        None => v.check(false, "no adaptive round within 10% of a uniform indicator"),
    }
    let trace = |r: &[RoundRecord]| {
        r.iter()
            .map(|x| format!("{}@{:.4}", x.num_faces, x.indicator))
            .collect::<Vec<_>>()
            .join(" ")
    };
    v.details.push(format!("uniform  {}", trace(&uni.records)));
    v.details.push(format!("adaptive {}", trace(&ada.records)));
    v
}

fn invariants() -> Verdict {
    let mut v = Verdict::new();
    let t = Instant::now();
    for (name, c) in common::invariant_sweep() {
        match c {
            Ok(()) => v.check(true, name),
            Err(e) => v.check(false, format!("{name}: {e}")),
        }
    }
    v.within(t.elapsed(), 60);
    v
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));

    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    if wanted(1) || wanted(2) || wanted(5) {
        let t = Instant::now();
        let config = StudyConfig {
            ladder: Ladder::standard(),
            ..StudyConfig::new(1.0)
        };
        let study = normal_study(&config).expect("normal study");
        let elapsed = t.elapsed();
        if wanted(1) {
            verdicts.push((1, "normal convergence rates", normal_rates(&study, elapsed)));
        }
        if wanted(2) {
            verdicts.push((2, "method ranking", ranking(&study)));
        }
        if wanted(5) {
            verdicts.push((5, "gamma search", gamma_search(&study)));
        }
    }
    if wanted(3) {
        verdicts.push((3, "curvature convergence", curvature_rates(180)));
    }
    if wanted(4) {
        verdicts.push((4, "sphere oracle", sphere_oracle()));
    }
    if wanted(6) || wanted(7) {
        let config = PnConfig::default();
        let gamma_n = config.resolve_gamma().expect("gamma search");
        if wanted(6) {
            verdicts.push((6, "effectivity index", effectivity(&config, gamma_n)));
        }
        if wanted(7) {
            verdicts.push((7, "adaptive efficiency", efficiency(&config, gamma_n)));
        }
    }
    if wanted(8) {
        verdicts.push((8, "invariant suites", invariants()));
    }
    verdicts.sort_by_key(|(k, ..)| *k);

    for (k, name, v) in &verdicts {
        println!("criterion {k} ({name}): {}", if v.pass { "PASS" } else { "FAIL" });
        for d in &v.details {
            println!("    {d}");
        }
    }
    let failed: Vec<usize> = verdicts.iter().filter(|(_, _, v)| !v.pass).map(|(k, ..)| *k).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        verdicts.len() - failed.len(),
        verdicts.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
