//! Plain `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment. Unknown keys, duplicate keys
//! and out-of-range values are rejected with the offending line number.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bva::{BvaConfig, Formulation, GradientChoice};
use crate::error::{Error, Result};
use crate::gradient::StudyConfig;
use crate::loads::LoadSpec;
use crate::material::MaterialParams;
use crate::mesh::{build_bulky_cantilever, build_holed_cantilever, read_mesh_file, GeometryConfig, Mesh};
use crate::Vec2;

const KEYS: &[&str] = &[
    "geometry",
    "geometry.width",
    "geometry.height",
    "geometry.h",
    "geometry.strip",
    "geometry.hole_radius",
    "geometry.mesh",
    "material.E",
    "material.nu",
    "material.lambda",
    "material.mu",
    "load.fx",
    "load.fy",
    "load.gx",
    "load.gy",
    "bva.formulation",
    "bva.gradient",
    "bva.iterations",
    "bva.gamma0",
    "bva.rho",
    "bva.step0",
    "bva.max_halvings",
    "bva.target_volume",
    "bva.strict",
    "bva.snapshots",
    "study.levels",
    "study.ref_extra",
    "check.quad_order",
    "check.fd_step",
    "output.dir",
    "output.tag",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Bulky(GeometryConfig),
    SixHoles(GeometryConfig),
    File(PathBuf),
}

impl Geometry {
    pub fn build(&self) -> Result<Mesh> {
        match self {
            Geometry::Bulky(g) => build_bulky_cantilever(g),
            Geometry::SixHoles(g) => build_holed_cantilever(g),
            Geometry::File(path) => read_mesh_file(path),
        }
    }

    /// Volume of the domain before meshing, used as the default target.
    fn nominal_volume(&self) -> Option<f64> {
        match self {
            Geometry::Bulky(g) => Some(g.width * g.height),
            Geometry::SixHoles(g) => Some(g.polygon_area()),
            Geometry::File(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub material: MaterialParams,
    pub body_force: Vec2,
    pub traction: Vec2,
    pub bva: BvaConfig,
    pub study_levels: usize,
    /// Extra refinements of the study reference beyond the finest level.
    pub study_ref_extra: usize,
    pub quad_order: usize,
    pub fd_step: f64,
    pub output_dir: PathBuf,
    pub tag: String,
    pub seed: u64,
}

impl RunConfig {
    pub fn loads(&self) -> LoadSpec {
        LoadSpec::constant(self.body_force, self.traction)
    }

    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            levels: self.study_levels,
            reference_level: self.study_levels - 1 + self.study_ref_extra,
            quad_order: self.quad_order,
        }
    }

    /// Replaces the output directory, e.g. from the environment.
    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self.bva.output_dir = Some(self.output_dir.clone());
        self
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let entries = Entries::collect(text)?;
        entries.build(base)
    }
}

struct Entries {
    values: HashMap<&'static str, (usize, String)>,
}

fn config_error(line: usize, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        reason: reason.into(),
    }
}

impl Entries {
    fn collect(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| config_error(line, format!("unknown key `{key}`")))?;
            if value.is_empty() {
                return Err(config_error(line, format!("`{key}` has no value")));
            }
            if values.insert(*known, (line, value.to_string())).is_some() {
                return Err(config_error(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(Entries { values })
    }

    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| config_error(*line, format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn check(&self, key: &str, ok: bool, what: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            let v = self.values.get(key).map_or("", |(_, v)| v.as_str());
            Err(config_error(
                self.line(key),
                format!("`{key}` must be {what}, got `{v}`"),
            ))
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get_or(key, default)?;
        self.check(key, v > 0.0 && v.is_finite(), "positive and finite")?;
        Ok(v)
    }

    fn finite(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get_or(key, default)?;
        self.check(key, v.is_finite(), "finite")?;
        Ok(v)
    }

    fn geometry(&self, base: &Path) -> Result<Geometry> {
        let kind: String = self.get_or("geometry", "bulky".to_string())?;
        let defaults = GeometryConfig::default();
        let width = self.positive("geometry.width", defaults.width)?;
        let height = self.positive("geometry.height", defaults.height)?;
        let h = self.positive("geometry.h", defaults.h)?;
        let strip = self.get_or("geometry.strip", defaults.strip)?;
        self.check("geometry.strip", strip > 0.0 && strip < 1.0, "in (0, 1)")?;
        let plain = GeometryConfig {
            width,
            height,
            h,
            strip,
            holes: Vec::new(),
        };
        match kind.as_str() {
            "bulky" => Ok(Geometry::Bulky(plain)),
            "holes6" => {
                let radius = self.positive("geometry.hole_radius", crate::mesh::SIX_HOLE_RADIUS)?;
                let g = GeometryConfig {
                    holes: GeometryConfig::six_hole_layout(width, height, radius),
                    ..plain
                };
                g.validate()
                    .map_err(|e| config_error(self.line("geometry.hole_radius"), e.to_string()))?;
                Ok(Geometry::SixHoles(g))
            }
            "file" => {
                let path: String = self
                    .get("geometry.mesh")?
                    .ok_or_else(|| config_error(self.line("geometry"), "`geometry = file` needs `geometry.mesh`"))?;
                Ok(Geometry::File(base.join(path)))
            }
            other => Err(config_error(
                self.line("geometry"),
                format!("unknown geometry `{other}` (expected bulky, holes6 or file)"),
            )),
        }
    }

    fn material(&self) -> Result<MaterialParams> {
        let lambda: Option<f64> = self.get("material.lambda")?;
        let mu: Option<f64> = self.get("material.mu")?;
        let result = match (lambda, mu) {
            (Some(l), Some(m)) => MaterialParams::new(l, m).map_err(|e| (self.line("material.mu"), e)),
            (Some(_), None) | (None, Some(_)) => {
                let line = self.line("material.lambda").max(self.line("material.mu"));
                return Err(config_error(
                    line,
                    "`material.lambda` and `material.mu` must be given together",
                ));
            }
            (None, None) => {
                let e = self.get_or("material.E", 1.0)?;
                let nu = self.get_or("material.nu", 0.3)?;
                MaterialParams::from_young_poisson(e, nu)
                    .map_err(|err| (self.line("material.nu").max(self.line("material.E")), err))
            }
        };
        result.map_err(|(line, e)| config_error(line, e.to_string()))
    }

    fn build(&self, base: &Path) -> Result<RunConfig> {
        let geometry = self.geometry(base)?;
        let material = self.material()?;
        let body_force = Vec2::new(self.finite("load.fx", 0.0)?, self.finite("load.fy", 0.0)?);
        let traction = Vec2::new(self.finite("load.gx", 0.0)?, self.finite("load.gy", -1.0)?);

        let formulation: Formulation = self.get_or("bva.formulation", Formulation::Mixed)?;
        let default_gradient = match formulation {
            Formulation::Displacement => GradientChoice::Volumetric,
            Formulation::Mixed => GradientChoice::Transport,
        };
        let gradient: GradientChoice = self.get_or("bva.gradient", default_gradient)?;
        let target_volume = match self.get::<f64>("bva.target_volume")? {
            Some(v) => v,
            None => geometry
                .nominal_volume()
                .ok_or_else(|| config_error(0, "`bva.target_volume` is required when the mesh comes from a file"))?,
        };
        self.check(
            "bva.target_volume",
            target_volume > 0.0 && target_volume.is_finite(),
            "positive",
        )?;

        let mut bva = BvaConfig::new(formulation, gradient, target_volume);
        bva.iterations = self.get_or("bva.iterations", bva.iterations)?;
        self.check("bva.iterations", bva.iterations >= 1, "at least 1")?;
        bva.gamma0 = self.positive("bva.gamma0", bva.gamma0)?;
        bva.rho = self.get_or("bva.rho", bva.rho)?;
        self.check("bva.rho", bva.rho > 1.0 && bva.rho.is_finite(), "greater than 1")?;
        bva.step0 = self.positive("bva.step0", bva.step0)?;
        bva.max_halvings = self.get_or("bva.max_halvings", bva.max_halvings)?;
        self.check("bva.max_halvings", bva.max_halvings <= 60, "at most 60")?;
        bva.strict = self.get_or("bva.strict", false)?;
        if let Some(list) = self.values.get("bva.snapshots") {
            bva.snapshots = list
                .1
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| config_error(list.0, format!("bad iteration list `{}`: {e}", list.1)))?;
        }
        bva.validate().map_err(|e| {
            config_error(
                self.line("bva.gradient").max(self.line("bva.formulation")),
                e.to_string(),
            )
        })?;

        let study_levels = self.get_or("study.levels", 3usize)?;
        self.check("study.levels", (1..=6).contains(&study_levels), "between 1 and 6")?;
        let study_ref_extra = self.get_or("study.ref_extra", 2usize)?;
        self.check("study.ref_extra", study_ref_extra <= 4, "at most 4")?;
        let quad_order = self.get_or("check.quad_order", crate::gradient::GRADIENT_QUADRATURE_ORDER)?;
        self.check("check.quad_order", (1..=4).contains(&quad_order), "between 1 and 4")?;
        let fd_step = self.positive("check.fd_step", 1e-3)?;

        let output_dir: PathBuf = base.join(self.get_or("output.dir", "out".to_string())?);
        let tag: String = self.get_or("output.tag", "run".to_string())?;
        self.check(
            "output.tag",
            tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
            "letters, digits, `_` or `-`",
        )?;
        let seed = self.get_or("seed", 42u64)?;

        bva.material = material;
        bva.loads = LoadSpec::constant(body_force, traction);
        bva.output_dir = Some(output_dir.clone());
        bva.tag = tag.clone();
        bva.seed = seed;
        Ok(RunConfig {
            geometry,
            material,
            body_force,
            traction,
            bva,
            study_levels,
            study_ref_extra,
            quad_order,
            fd_step,
            output_dir,
            tag,
            seed,
        })
    }
}
