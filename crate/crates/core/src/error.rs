use thiserror::Error;

use crate::approx::ApproxError;
use crate::constraints::ConstraintError;
use crate::dimension::DimensionError;
use crate::energy::EnergyError;
use crate::expr::{EvalError, ParseError};
use crate::fractal::FractalError;
use crate::geometry::{GeometryError, SampleError};

/// Union of the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Geometry(GeometryError::LevelTooLarge { .. }) => "level_exceeds_max",
            Error::Geometry(GeometryError::PointOutsideCell { .. }) => "point_outside_cell",
            Error::Geometry(_) => "geometry",
            Error::Sample(_) | Error::Eval(_) => "evaluation",
            Error::Parse(_) => "parse",
            Error::Energy(EnergyError::SolverDidNotConverge { .. }) => "solver_nonconvergence",
            Error::Energy(EnergyError::RankDeficient { .. }) => "rank_deficient",
            Error::Energy(_) => "energy",
            Error::Fractal(FractalError::JunctionInconsistency { .. }) => "junction_inconsistency",
            Error::Fractal(FractalError::ScalingBound { .. }) => "scaling_bound",
            Error::Fractal(FractalError::BoundaryMismatch { .. }) => "boundary_mismatch",
            Error::Fractal(_) => "fractal",
            Error::Constraint(ConstraintError::Infeasible { .. }) => "infeasible_interval",
            Error::Constraint(_) => "constraint",
            Error::Approx(ApproxError::RankDeficient { .. }) => "rank_deficient",
            Error::Approx(_) => "approximation",
            Error::Dimension(_) => "dimension",
            Error::Io(_) => "io",
            Error::Csv(_) => "io",
            Error::Json(_) => "io",
        }
    }
}
