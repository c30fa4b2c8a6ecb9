//! Boundary variation algorithm for volume-penalized compliance minimization.
//!
//! Each iteration solves the state, assembles `dL = dJ + γ dV`, computes the
//! H¹ descent direction, picks a step by halving, moves the mesh and adapts
//! the multiplier `γ` to the current volume.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use crate::displacement::{compliance_displacement, solve_displacement};
use crate::error::{Error, Result};
use crate::gradient::{
    assemble_dj_surface, assemble_dj_vol_disp, assemble_dj_vol_mixed_transport, assemble_dj_vol_mixed_weak,
    assemble_dv_surface, assemble_dv_volumetric, combine_penalized, riesz_descent, GradientFunctional,
    GRADIENT_QUADRATURE_ORDER,
};
use crate::loads::LoadSpec;
use crate::material::MaterialParams;
use crate::mesh::{write_vtk_file, Mesh, VtkField, VtkFieldData};
use crate::mixed::{compliance_mixed, solve_mixed};
use crate::Vec2;

/// Elements may not shrink below this fraction of their original area.
pub const MIN_AREA_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Displacement,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradientChoice {
    /// Boundary expression (displacement formulation only).
    Surface,
    /// Volumetric expression of the chosen formulation.
    Volumetric,
    /// Row-transport volumetric expression (mixed formulation only).
    Transport,
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "displacement" => Ok(Formulation::Displacement),
            "mixed" => Ok(Formulation::Mixed),
            _ => Err(format!("unknown formulation '{s}' (expected displacement or mixed)")),
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Displacement => "displacement",
            Formulation::Mixed => "mixed",
        })
    }
}

impl FromStr for GradientChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "surface" => Ok(GradientChoice::Surface),
            "volumetric" => Ok(GradientChoice::Volumetric),
            "transport" => Ok(GradientChoice::Transport),
            _ => Err(format!(
                "unknown gradient '{s}' (expected surface, volumetric or transport)"
            )),
        }
    }
}

impl fmt::Display for GradientChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientChoice::Surface => "surface",
            GradientChoice::Volumetric => "volumetric",
            GradientChoice::Transport => "transport",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BvaConfig {
    pub formulation: Formulation,
    pub gradient: GradientChoice,
    pub iterations: usize,
    pub gamma0: f64,
    pub rho: f64,
    pub step0: f64,
    pub max_halvings: usize,
    pub target_volume: f64,
    /// Reject steps that do not decrease `L` instead of taking them.
    pub strict: bool,
    pub material: MaterialParams,
    pub loads: LoadSpec,
    /// Iterations after which a VTK snapshot is written.
    pub snapshots: Vec<usize>,
    pub output_dir: Option<PathBuf>,
    pub tag: String,
    /// Recorded in the history header.
    pub seed: u64,
}

impl BvaConfig {
    pub fn new(formulation: Formulation, gradient: GradientChoice, target_volume: f64) -> Self {
        BvaConfig {
            formulation,
            gradient,
            iterations: 30,
            gamma0: 0.1,
            rho: 1.1,
            step0: 1.0,
            max_halvings: 12,
            target_volume,
            strict: false,
            material: MaterialParams::default(),
            loads: LoadSpec::traction(Vec2::new(0.0, -1.0)),
            snapshots: Vec::new(),
            output_dir: None,
            tag: "run".to_string(),
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Config { line: 0, reason });
        if self.iterations == 0 {
            return bad("bva.iterations must be at least 1".into());
        }
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return bad(format!("bva.rho must be greater than 1, got {}", self.rho));
        }
        if !(self.step0 > 0.0) || !self.step0.is_finite() {
            return bad(format!("bva.step0 must be positive, got {}", self.step0));
        }
        if !(self.gamma0 > 0.0) || !self.gamma0.is_finite() {
            return bad(format!("bva.gamma0 must be positive, got {}", self.gamma0));
        }
        if !(self.target_volume > 0.0) || !self.target_volume.is_finite() {
            return bad(format!(
                "bva.target_volume must be positive, got {}",
                self.target_volume
            ));
        }
        match (self.formulation, self.gradient) {
            (Formulation::Mixed, GradientChoice::Surface) => {
                bad("the surface gradient needs the displacement formulation".into())
            }
            (Formulation::Displacement, GradientChoice::Transport) => {
                bad("the transport gradient needs the mixed formulation".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub v: f64,
    pub gamma: f64,
    pub l: f64,
    pub pairing: f64,
    pub step: f64,
    pub accepted: bool,
    /// Smallest element area ratio against the initial mesh after the step.
    pub min_jac: f64,
    /// The pairing was negative but `L` did not decrease.
    pub descent_failed: bool,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iter,J,V,gamma,L,pairing,step,accepted,min_jac,descent_failed";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{}",
            self.iter,
            self.j,
            self.v,
            self.gamma,
            self.l,
            self.pairing,
            self.step,
            self.accepted,
            self.min_jac,
            self.descent_failed
        )
    }
}

/// Objective values of one shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeValues {
    pub j: f64,
    pub v: f64,
    pub gamma: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct BvaRun {
    pub history: Vec<IterationRecord>,
    /// Values on the final shape with the final multiplier.
    pub final_values: Option<ShapeValues>,
    pub mesh: Mesh,
    /// Reason the run stopped early, if it did.
    pub aborted: Option<String>,
}

impl BvaRun {
    pub fn history_csv(&self, cfg: &BvaConfig) -> String {
        let mut out = format!(
            "# seed={} formulation={} gradient={} iterations={} gamma0={} rho={} step0={} target_volume={}\n",
            cfg.seed, cfg.formulation, cfg.gradient, cfg.iterations, cfg.gamma0, cfg.rho, cfg.step0, cfg.target_volume
        );
        out.push_str(IterationRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.history {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        if let Some(reason) = &self.aborted {
            out.push_str(&format!("# aborted: {reason}\n"));
        }
        out
    }
}

/// `γρ` above the target volume, `γ/ρ` below, unchanged on it.
pub fn update_multiplier(gamma: f64, volume: f64, target: f64, rho: f64) -> f64 {
    if volume > target {
        gamma * rho
    } else if volume < target {
        gamma / rho
    } else {
        gamma
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub step: f64,
    pub accepted: bool,
    pub mesh: Mesh,
    pub l: f64,
    pub min_ratio: f64,
}

/// Tries `μ₀, μ₀/2, …` and returns the first step giving a valid mesh with a
/// lower `L`. When no candidate decreases `L`, the smallest valid candidate is
/// returned with `accepted = false`.
///
/// A candidate is valid when every element keeps at least [`MIN_AREA_RATIO`]
/// of its area in `original`, the mesh the run started from.
pub fn line_search(
    original: &Mesh,
    mesh: &Mesh,
    theta: &[Vec2],
    l_current: f64,
    evaluate_l: impl Fn(&Mesh) -> Result<f64>,
    step0: f64,
    max_halvings: usize,
) -> Result<StepResult> {
    let mut last_valid: Option<StepResult> = None;
    let mut worst_ratio = f64::INFINITY;
    for k in 0..=max_halvings {
        let step = step0 / 2f64.powi(k as i32);
        let candidate = mesh.deform(theta, step);
        let ratio = original.min_area_ratio(&candidate);
        worst_ratio = worst_ratio.min(ratio);
        if !(ratio >= MIN_AREA_RATIO) {
            continue;
        }
        let l = match evaluate_l(&candidate) {
            Ok(l) => l,
            Err(Error::Solver(msg)) => {
                log::warn!("step {step:e}: state solve failed ({msg}); halving");
                continue;
            }
            Err(e) => return Err(e),
        };
        let result = StepResult {
            step,
            accepted: l < l_current,
            mesh: candidate,
            l,
            min_ratio: ratio,
        };
        if result.accepted {
            return Ok(result);
        }
        last_valid = Some(result);
    }
    last_valid.ok_or(Error::NoAdmissibleStep {
        min_jacobian: worst_ratio,
    })
}

/// Compliance of `mesh` in the chosen formulation.
pub fn compliance(mesh: &Mesh, formulation: Formulation, material: &MaterialParams, loads: &LoadSpec) -> Result<f64> {
    match formulation {
        Formulation::Displacement => Ok(compliance_displacement(&solve_displacement(mesh, material, loads)?)?.energy),
        Formulation::Mixed => Ok(compliance_mixed(&solve_mixed(mesh, material, loads)?)),
    }
}

struct State {
    j: f64,
    dj: GradientFunctional,
    energy: Vec<f64>,
}

fn solve_state(mesh: &Mesh, cfg: &BvaConfig) -> Result<State> {
    let order = GRADIENT_QUADRATURE_ORDER;
    match cfg.formulation {
        Formulation::Displacement => {
            let sol = solve_displacement(mesh, &cfg.material, &cfg.loads)?;
            let j = compliance_displacement(&sol)?.energy;
            let dj = match cfg.gradient {
                GradientChoice::Surface => assemble_dj_surface(&sol)?,
                _ => assemble_dj_vol_disp(&sol, order)?,
            };
            Ok(State {
                j,
                dj,
                energy: sol.energy_density(),
            })
        }
        Formulation::Mixed => {
            let sol = solve_mixed(mesh, &cfg.material, &cfg.loads)?;
            let j = compliance_mixed(&sol);
            let dj = match cfg.gradient {
                GradientChoice::Transport => assemble_dj_vol_mixed_transport(&sol, order)?,
                _ => assemble_dj_vol_mixed_weak(&sol, order)?,
            };
            Ok(State {
                j,
                dj,
                energy: sol.energy_density(),
            })
        }
    }
}

fn snapshot(cfg: &BvaConfig, iter: usize, mesh: &Mesh, energy: &[f64], theta: &[Vec2]) -> Result<()> {
    let Some(dir) = &cfg.output_dir else {
        return Ok(());
    };
    let path = dir.join(format!("run_{}_iter{}.vtk", cfg.tag, iter));
    let fields = [
        VtkField::new("energy_density", VtkFieldData::CellScalars(energy)),
        VtkField::new("theta", VtkFieldData::PointVectors(theta)),
    ];
    write_vtk_file(mesh, &format!("{} iteration {iter}", cfg.tag), &fields, &path)
}

/// Runs exactly `cfg.iterations` iterations from `initial`, unless a solve or
/// mesh failure stops the run early; the history is kept in either case.
pub fn run(cfg: &BvaConfig, initial: &Mesh) -> Result<BvaRun> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut mesh = initial.clone();
    let mut gamma = cfg.gamma0;
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut aborted = None;
    for iter in 0..cfg.iterations {
        let state = match solve_state(&mesh, cfg) {
            Ok(s) => s,
            Err(e @ (Error::Solver(_) | Error::DegenerateElement { .. })) => {
                aborted = Some(format!("iteration {iter}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let v = mesh.volume();
        let l = state.j + gamma * v;
        flag_descent_failure(&mut history, l);
        let dv = match cfg.gradient {
            GradientChoice::Surface => assemble_dv_surface(&mesh)?,
            _ => assemble_dv_volumetric(&mesh)?,
        };
        let dl = combine_penalized(&state.dj, &dv, gamma)?;
        let descent = riesz_descent(&mesh, &dl)?;
        if cfg.snapshots.contains(&iter) {
            snapshot(cfg, iter, &mesh, &state.energy, &descent.theta)?;
        }
        // the candidate is scored with the multiplier its own record will carry
        let evaluate = |m: &Mesh| -> Result<f64> {
            let v = m.volume();
            let next_gamma = update_multiplier(gamma, v, cfg.target_volume, cfg.rho);
            Ok(compliance(m, cfg.formulation, &cfg.material, &cfg.loads)? + next_gamma * v)
        };
        let step = match line_search(initial, &mesh, &descent.theta, l, evaluate, cfg.step0, cfg.max_halvings) {
            Ok(s) => s,
            Err(e @ Error::NoAdmissibleStep { .. }) => {
                aborted = Some(format!("iteration {iter}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let take = step.accepted || !cfg.strict;
        history.push(IterationRecord {
            iter,
            j: state.j,
            v,
            gamma,
            l,
            pairing: descent.pairing,
            step: if take { step.step } else { 0.0 },
            accepted: step.accepted,
            min_jac: if take {
                step.min_ratio
            } else {
                initial.min_area_ratio(&mesh)
            },
            descent_failed: false,
        });
        log::info!(
            "iter {iter}: J={:.6} V={v:.4} gamma={gamma:.5} L={l:.6} pairing={:.3e} step={:.3e} accepted={}",
            state.j,
            descent.pairing,
            step.step,
            step.accepted
        );
        if take {
            mesh = step.mesh;
        }
        gamma = update_multiplier(gamma, mesh.volume(), cfg.target_volume, cfg.rho);
    }
    let final_values = if aborted.is_none() {
        let j = compliance(&mesh, cfg.formulation, &cfg.material, &cfg.loads)?;
        let v = mesh.volume();
        if cfg.snapshots.contains(&cfg.iterations) {
            let energy = match cfg.formulation {
                Formulation::Displacement => solve_displacement(&mesh, &cfg.material, &cfg.loads)?.energy_density(),
                Formulation::Mixed => solve_mixed(&mesh, &cfg.material, &cfg.loads)?.energy_density(),
            };
            snapshot(
                cfg,
                cfg.iterations,
                &mesh,
                &energy,
                &vec![Vec2::zeros(); mesh.num_vertices()],
            )?;
        }
        let l = j + gamma * v;
        flag_descent_failure(&mut history, l);
        Some(ShapeValues { j, v, gamma, l })
    } else {
        None
    };
    Ok(BvaRun {
        history,
        final_values,
        mesh,
        aborted,
    })
}

/// Flags the last record when its pairing promised descent but the next
/// recorded `L` is larger.
fn flag_descent_failure(history: &mut [IterationRecord], next_l: f64) {
    if let Some(last) = history.last_mut() {
        last.descent_failed = last.pairing < 0.0 && next_l > last.l;
    }
}

/// Side-by-side trajectories of two runs on the same problem.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub displacement: BvaRun,
    pub mixed: BvaRun,
}

impl Comparison {
    pub const CSV_HEADER: &'static str = "iter,J_disp,V_disp,L_disp,J_mixed,V_mixed,L_mixed";

    pub fn csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        let n = self.displacement.history.len().max(self.mixed.history.len());
        let cell = |r: Option<&IterationRecord>| match r {
            Some(r) => format!("{:.12e},{:.12e},{:.12e}", r.j, r.v, r.l),
            None => ",,".to_string(),
        };
        for i in 0..n {
            out.push_str(&format!(
                "{i},{},{}\n",
                cell(self.displacement.history.get(i)),
                cell(self.mixed.history.get(i))
            ));
        }
        out
    }

    /// Whether the mixed run ends with a compliance no larger than the displacement run.
    pub fn mixed_is_stiffer(&self) -> Option<bool> {
        match (self.displacement.final_values, self.mixed.final_values) {
            (Some(d), Some(m)) => Some(m.j <= d.j),
            _ => None,
        }
    }
}

/// Runs both configurations from the same initial mesh, concurrently.
pub fn compare_formulations(disp: &BvaConfig, mixed: &BvaConfig, initial: &Mesh) -> Result<Comparison> {
    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(|| run(disp, initial));
        let b = s.spawn(|| run(mixed, initial));
        (
            a.join().expect("displacement run panicked"),
            b.join().expect("mixed run panicked"),
        )
    });
    Ok(Comparison {
        displacement: a?,
        mixed: b?,
    })
}
