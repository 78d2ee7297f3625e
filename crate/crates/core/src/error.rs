// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a valid positive non-square discriminant")]
    InvalidDiscriminant(i128),
    #[error("discriminant {0} exceeds the supported range (d <= 1e15)")]
    DiscriminantTooLarge(i128),
    #[error("form ({0}, {1}, {2}) is not reduced")]
    NotReduced(i128, i128, i128),
    #[error("forms have different discriminants ({0} vs {1})")]
    MixedDiscriminants(i128, i128),
    #[error("automorph entries are not integral (t - b*u is odd)")]
    ParityViolation,
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("quadrature step {step} is coarser than period/10 = {limit}")]
    StepTooCoarse { step: f64, limit: f64 },
    #[error("tube radius {radius} exceeds the trust radius {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("subcollection is empty")]
    EmptySubcollection,
    #[error("fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
