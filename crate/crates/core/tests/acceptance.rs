//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed; the
//! process fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use elastiform::bva::{self, BvaRun};
use elastiform::check::{
    displacement_patch_error, fd_consistency, fd_probe_fields, mixed_patch_errors, piola_divergence_gap,
    strong_weak_gap, transported_strain_gap, volume_identity_gaps, ComplianceGradient, FdRow, COARSE_H,
};
use elastiform::config::RunConfig;
use elastiform::gradient::gradient_error_study;
use elastiform::loads::LoadSpec;
use elastiform::mesh::{build_holed_cantilever, GeometryConfig};
use elastiform::{MaterialParams, Result, Vec2};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<Verdict> + 'a>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> Result<RunConfig> {
    RunConfig::from_file(configs().join(name))
}

/// The four bundled benchmark runs, without snapshots.
struct Benchmarks {
    bulky_mixed: BvaRun,
    bulky_disp: BvaRun,
    holes6_mixed: BvaRun,
    holes6_disp: BvaRun,
}

impl Benchmarks {
    fn run() -> Result<Self> {
        let run = |name: &str| -> Result<BvaRun> {
            let mut cfg = load(name)?;
            cfg.bva.snapshots.clear();
            cfg.bva.output_dir = None;
            bva::run(&cfg.bva, &cfg.geometry.build()?)
        };
        std::thread::scope(|s| {
            let bm = s.spawn(|| run("bulky_mixed.cfg"));
            let bd = s.spawn(|| run("bulky_disp.cfg"));
            let hm = s.spawn(|| run("holes6_mixed.cfg"));
            let hd = s.spawn(|| run("holes6_disp.cfg"));
            Ok(Benchmarks {
                bulky_mixed: bm.join().expect("bulky mixed run panicked")?,
                bulky_disp: bd.join().expect("bulky displacement run panicked")?,
                holes6_mixed: hm.join().expect("six-hole mixed run panicked")?,
                holes6_disp: hd.join().expect("six-hole displacement run panicked")?,
            })
        })
    }
}

fn final_j(run: &BvaRun) -> f64 {
    run.final_values.map_or(f64::NAN, |v| v.j)
}

fn patch_tests() -> Result<Verdict> {
    let mesh = build_holed_cantilever(&GeometryConfig::six_holes(COARSE_H))?;
    let material = MaterialParams::default();
    let disp = displacement_patch_error(&mesh, &material)?;
    let (stress, symmetry) = mixed_patch_errors(&mesh, &material)?;
    verdict(
        disp <= 1e-10 && stress <= 1e-9 && symmetry <= 1e-9,
        format!("displacement {disp:.2e} (1e-10), mixed stress {stress:.2e} (1e-9), symmetry {symmetry:.2e} (1e-9)"),
    )
}

fn fd_oracle() -> Result<Verdict> {
    let geometry = GeometryConfig::six_holes(COARSE_H);
    let mesh = build_holed_cantilever(&geometry)?;
    let material = MaterialParams::default();
    let loads = LoadSpec::traction(Vec2::new(0.0, -1.0));
    let fields = fd_probe_fields(&mesh, geometry.width, geometry.height, 5);
    let mut passed = true;
    let mut parts = Vec::new();
    for which in [
        ComplianceGradient::VolumetricDisplacement,
        ComplianceGradient::VolumetricMixed,
    ] {
        let rows = fd_consistency(&mesh, &material, &loads, which, &fields, 1e-3, 4)?;
        let rel = rows.iter().map(FdRow::relative_error).fold(0.0, f64::max);
        let ratios: Vec<f64> = rows.iter().map(FdRow::defect_ratio).collect();
        let ok = rel <= 1e-2 && ratios.iter().all(|r| (3.5..=4.5).contains(r));
        passed &= ok;
        parts.push(format!(
            "{}: rel {rel:.2e}, defect ratios [{}] {}",
            which.label(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" "),
            if ok { "ok" } else { "fails" }
        ));
    }
    verdict(passed, parts.join("; "))
}

fn strong_weak() -> Result<Verdict> {
    let mesh = build_holed_cantilever(&GeometryConfig::six_holes(COARSE_H))?;
    let gap = strong_weak_gap(&mesh, &MaterialParams::default(), 100, 42)?;
    verdict(
        gap <= 1e-12,
        format!("100 symmetric fields x 10 velocities: max gap relative to term size {gap:.2e} (1e-12)"),
    )
}

fn volume_identities() -> Result<Verdict> {
    let mesh = build_holed_cantilever(&GeometryConfig::six_holes(COARSE_H))?;
    let (identity, surface) = volume_identity_gaps(&mesh)?;
    verdict(
        identity <= 1e-12 && surface <= 1e-10,
        format!("<dV, x> vs 2|Omega| {identity:.2e} (1e-12), volumetric vs surface {surface:.2e} (1e-10)"),
    )
}

fn piola_lemmas() -> Result<Verdict> {
    let strain = transported_strain_gap()?;
    let divergence = piola_divergence_gap(0.1, 1e-5)?;
    verdict(
        strain <= 1e-12 && divergence <= 1e-8,
        format!("transported strain {strain:.2e} (1e-12), divergence identity {divergence:.2e} (1e-8)"),
    )
}

fn study_ordering() -> Result<Verdict> {
    let cfg = load("study.cfg")?;
    let study = cfg.study();
    assert!(study.levels >= 3 && study.reference_level > study.levels);
    let rows = gradient_error_study(&cfg.geometry.build()?, &cfg.material, &cfg.loads(), &study)?;
    let surface_worse = rows.iter().all(|r| r.err_surface > r.err_vol_disp);
    let finest = rows.last().expect("at least one level");
    let mixed_better = finest.err_vol_mixed <= finest.err_vol_disp;
    let table = rows
        .iter()
        .map(|r| format!("{:.2e}/{:.2e}/{:.2e}", r.err_surface, r.err_vol_disp, r.err_vol_mixed))
        .collect::<Vec<_>>()
        .join(" ");
    verdict(
        surface_worse && mixed_better,
        format!(
            "surface/vol disp/vol mixed per level {table}; surface > disp everywhere: {surface_worse}, mixed <= disp at finest: {mixed_better}"
        ),
    )
}

fn bva_headline(b: &Benchmarks) -> Result<Verdict> {
    let initial = b.bulky_mixed.history.first().map_or(f64::NAN, |r| r.l);
    let last = b.bulky_mixed.final_values.map_or(f64::NAN, |v| v.l);
    let ratio = last / initial;
    let bulky = final_j(&b.bulky_mixed) <= final_j(&b.bulky_disp);
    let holes = final_j(&b.holes6_mixed) <= final_j(&b.holes6_disp);
    verdict(
        ratio <= 0.7 && bulky && holes,
        format!(
            "bulky mixed L {initial:.4} -> {last:.4} (ratio {ratio:.3}, bar 0.7); final J mixed/disp: bulky {:.4}/{:.4}, six holes {:.4}/{:.4}",
            final_j(&b.bulky_mixed),
            final_j(&b.bulky_disp),
            final_j(&b.holes6_mixed),
            final_j(&b.holes6_disp)
        ),
    )
}

fn descent_failure(b: &Benchmarks) -> Result<Verdict> {
    let mut count = 0;
    for run in [&b.bulky_disp, &b.holes6_disp] {
        let next_l: Vec<f64> = run
            .history
            .iter()
            .skip(1)
            .map(|r| r.l)
            .chain(run.final_values.map(|v| v.l))
            .collect();
        count += run
            .history
            .iter()
            .zip(&next_l)
            .filter(|(r, &next)| r.pairing < 0.0 && next > r.l && r.descent_failed)
            .count();
    }
    verdict(
        count >= 1,
        format!("{count} flagged iterations with pairing < 0 and L increasing"),
    )
}

fn determinism() -> Result<Verdict> {
    let dirs = [
        tempfile::tempdir().expect("tempdir"),
        tempfile::tempdir().expect("tempdir"),
    ];
    let config = configs().join("bulky_mixed.cfg");
    let mut histories = Vec::new();
    for dir in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_elastiform"))
            .arg("run")
            .arg(&config)
            .env("ELASTIFORM_OUT", dir.path())
            .output()
            .expect("spawn elastiform")
            .status;
        let bytes = std::fs::read(dir.path().join("history_bulky_mixed.csv")).unwrap_or_default();
        histories.push((status.success(), bytes));
    }
    let same = histories[0] == histories[1] && !histories[0].1.is_empty();
    verdict(
        same && histories[0].0,
        format!(
            "two runs of bulky_mixed.cfg: {} bytes, identical: {same}",
            histories[0].1.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let benchmarks = Benchmarks::run().map_err(|e| e.to_string());
    let with_runs = |f: fn(&Benchmarks) -> Result<Verdict>| match &benchmarks {
        Ok(b) => f(b),
        Err(e) => verdict(false, format!("benchmark runs failed: {e}")),
    };
    let criteria: Vec<Criterion> = vec![
        ("1 patch tests", Box::new(patch_tests)),
        ("2 fd oracle", Box::new(fd_oracle)),
        ("3 strong/weak equivalence", Box::new(strong_weak)),
        ("4 volume identities", Box::new(volume_identities)),
        ("5 piola lemmas", Box::new(piola_lemmas)),
        ("6 study ordering", Box::new(study_ordering)),
        ("7 bva headline", Box::new(|| with_runs(bva_headline))),
        ("8 descent failure", Box::new(|| with_runs(descent_failure))),
        ("9 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, criterion) in &criteria {
        let (passed, detail) = match criterion() {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!("criterion {name:<26} {} {detail}", if passed { "PASS" } else { "FAIL" });
    }
    println!(
        "{} of {} criteria passed ({:.1} s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
