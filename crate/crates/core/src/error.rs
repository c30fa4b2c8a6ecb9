use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("malformed mesh file near `{token}`: {reason}")]
    MeshFormat { token: String, reason: String },

    #[error("invalid material: {0}")]
    Material(String),

    #[error("degenerate element {element} (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },

    #[error("unsupported quadrature order {0} (expected 1..=4)")]
    QuadratureOrder(usize),

    #[error("field length mismatch for `{name}`: expected {expected}, got {got}")]
    FieldLength { name: String, expected: usize, got: usize },

    #[error("the Dirichlet boundary is empty; the displacement operator is singular")]
    EmptyDirichlet,

    #[error("the constrained velocity space is empty")]
    EmptyVelocitySpace,

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("functionals live on different meshes ({0} vs {1} velocity dofs)")]
    MeshMismatch(usize, usize),

    #[error("no admissible step: every candidate produced an invalid mesh (min jacobian {min_jacobian:e})")]
    NoAdmissibleStep { min_jacobian: f64 },

    #[error("study reference must not be coarser than the finest level: {0}")]
    StudyReference(String),

    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
