use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elastiform::bva;
use elastiform::check::run_checks;
use elastiform::config::RunConfig;
use elastiform::gradient::{fitted_slopes, gradient_error_study, StudyRow};
use elastiform::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Compliance shape optimization with displacement and mixed elasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the boundary variation algorithm.
    Run { config: PathBuf },
    /// Measure gradient errors under uniform refinement.
    Study { config: PathBuf },
    /// Run the consistency checks and print a pass/fail table.
    Check { config: PathBuf },
}

enum Failure {
    Error(Error),
    ChecksFailed(usize),
    Aborted(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. }
        | Error::Material(_)
        | Error::Geometry(_)
        | Error::StudyReference(_)
        | Error::QuadratureOrder(_) => 1,
        Error::Io { .. } | Error::MeshFormat { .. } | Error::Mesh(_) => 2,
        _ => 3,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let cfg = RunConfig::from_file(path)?;
    Ok(match std::env::var_os("ELASTIFORM_OUT") {
        Some(dir) => cfg.with_output_dir(dir),
        None => cfg,
    })
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn cmd_run(path: &Path) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let mesh = cfg.geometry.build()?;
    let out = bva::run(&cfg.bva, &mesh)?;
    let csv = out.history_csv(&cfg.bva);
    let file = write_output(&cfg.output_dir, &format!("history_{}.csv", cfg.tag), &csv)?;
    println!("history: {}", file.display());
    if let (Some(first), Some(last)) = (out.history.first(), out.final_values) {
        println!("initial: J = {:.6}  V = {:.6}  L = {:.6}", first.j, first.v, first.l);
        println!(
            "final:   J = {:.6}  V = {:.6}  L = {:.6}  gamma = {:.6}",
            last.j, last.v, last.l, last.gamma
        );
    }
    if let Some(reason) = out.aborted {
        return Err(Failure::Aborted(reason));
    }
    Ok(())
}

fn cmd_study(path: &Path) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let mesh = cfg.geometry.build()?;
    let rows = gradient_error_study(&mesh, &cfg.material, &cfg.loads(), &cfg.study())?;
    let mut csv = format!("{}\n", StudyRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    let file = write_output(&cfg.output_dir, &format!("study_{}.csv", cfg.tag), &csv)?;
    println!(
        "{:>5} {:>8} {:>12} {:>12} {:>12}",
        "level", "ndof", "surface", "vol disp", "vol mixed"
    );
    for r in &rows {
        println!(
            "{:>5} {:>8} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.level, r.ndof, r.err_surface, r.err_vol_disp, r.err_vol_mixed
        );
    }
    let [s, d, m] = fitted_slopes(&rows);
    println!("slopes vs ndof: surface {s:.3}, vol disp {d:.3}, vol mixed {m:.3}");
    println!("study: {}", file.display());
    Ok(())
}

fn cmd_check(path: &Path) -> Result<(), Failure> {
    let cfg = load_config(path)?;
    let outcomes = run_checks(&cfg.material, cfg.fd_step, cfg.quad_order, cfg.seed)?;
    for o in &outcomes {
        println!(
            "{:<4} {:<28} {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    match outcomes.iter().filter(|o| !o.passed).count() {
        0 => Ok(()),
        n => Err(Failure::ChecksFailed(n)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // sequential kernels keep floating-point reductions in a fixed order
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Study { config } => cmd_study(config),
        Command::Check { config } => cmd_check(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::ChecksFailed(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(4)
        }
        Err(Failure::Aborted(reason)) => {
            eprintln!("run stopped early: {reason}");
            ExitCode::from(3)
        }
    }
}
