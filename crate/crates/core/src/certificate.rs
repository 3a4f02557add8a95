//! Baseline fits, the flip test, and the certificate types shared by every
//! auditing method.
//!
//! An upper bound can only be obtained through [`verify_rows`] or
//! [`verify_individuals`], which refit the model without the removed samples,
//! so holding an [`UpperBound`] means the removal set has been checked.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::data::{snap_zero, Dataset, DidPanel, Orientation, SubsetMask};
use crate::linalg;

/// Relative slack in the refit flip test: a refit coefficient counts as
/// flipped when `oriented <= FLIP_RTOL * full + ZERO_RTOL * scale`, where
/// `full` is the oriented full-data coefficient and `scale` is `|y| / |x_target|`.
/// Exact ties (e.g. equal group means) otherwise land on either side of zero
/// by a few ulps.
pub const FLIP_RTOL: f64 = 1e-9;
pub const ZERO_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("the audited coefficient is not identified on the full data")]
    TargetNotIdentified,
    #[error("removal set is invalid: {0}")]
    InvalidRemoval(String),
    #[error("removal set does not flip the coefficient (oriented refit {0:e})")]
    NotAFlip(f64),
    #[error("removal leaves the audited coefficient unidentified")]
    Degenerate,
}

/// Full-data fit and the orientation it induces.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub beta: Vec<f64>,
    pub orientation: Orientation,
    /// Audited coefficient after orientation (always `>= 0`).
    pub oriented_coef: f64,
    /// `|y| / |x_target|`, the natural size of the audited coefficient.
    pub scale: f64,
}

impl Baseline {
    pub fn of(ds: &Dataset) -> Result<Self, AuditError> {
        let fit = linalg::ols_fit(ds.x(), ds.y());
        if !fit.identifies(ds.target()) {
            return Err(AuditError::TargetNotIdentified);
        }
        let col = linalg::norm2(&ds.x().column(ds.target()));
        let scale = linalg::norm2(ds.y()) / col;
        let coef = snap_zero(fit.beta[ds.target()], scale);
        let orientation = Orientation::of(coef);
        Ok(Self { oriented_coef: orientation.apply(coef), beta: fit.beta, orientation, scale })
    }

    /// The flip threshold applied to refit coefficients.
    pub fn threshold(&self) -> f64 {
        FLIP_RTOL * self.oriented_coef + ZERO_RTOL * self.scale
    }

    pub fn already_flipped(&self) -> bool {
        self.oriented_coef <= 0.0
    }

    /// Oriented target coefficient refit on `keep`, `None` when not identified.
    pub fn refit(&self, ds: &Dataset, keep: &[usize]) -> Option<f64> {
        let fit = linalg::subset_ols_fit(ds.x(), ds.y(), keep);
        fit.identifies(ds.target()).then(|| self.orientation.apply(fit.beta[ds.target()]))
    }

    pub fn flips(&self, ds: &Dataset, keep: &[usize]) -> bool {
        self.refit(ds, keep).is_some_and(|c| c <= self.threshold())
    }
}

/// Whether removals count rows of the design or DiD individuals (row pairs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Rows,
    Individuals,
}

/// A removal set whose refit has been checked to flip the audited coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    removed: SubsetMask,
    refit_coef: f64,
    unit: Unit,
}

impl UpperBound {
    pub fn size(&self) -> usize {
        self.removed.len()
    }

    pub fn removed(&self) -> &SubsetMask {
        &self.removed
    }

    /// Oriented audited coefficient after removal.
    pub fn refit_coef(&self) -> f64 {
        self.refit_coef
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }
}

/// Refits `ds` without `removed` and returns a certificate if the oriented
/// target coefficient is flipped.
pub fn verify_rows(ds: &Dataset, removed: &[usize]) -> Result<UpperBound, AuditError> {
    let base = Baseline::of(ds)?;
    verify_rows_with(ds, &base, removed)
}

pub fn verify_rows_with(ds: &Dataset, base: &Baseline, removed: &[usize]) -> Result<UpperBound, AuditError> {
    let mask = SubsetMask::new(removed.to_vec(), ds.n()).map_err(|e| AuditError::InvalidRemoval(e.to_string()))?;
    let keep = mask.kept(ds.n());
    let coef = base.refit(ds, &keep).ok_or(AuditError::Degenerate)?;
    if coef > base.threshold() {
        return Err(AuditError::NotAFlip(coef));
    }
    Ok(UpperBound { removed: mask, refit_coef: coef, unit: Unit::Rows })
}

/// DiD analogue of [`verify_rows`]: removes whole individuals and refits the
/// interaction coefficient through the 4-column encoding.
pub fn verify_individuals(panel: &DidPanel, removed: &[usize]) -> Result<UpperBound, AuditError> {
    let all: Vec<usize> = (0..panel.len()).collect();
    let scale = panel.scale();
    let beta3 = snap_zero(panel.beta3(&all).ok_or(AuditError::TargetNotIdentified)?, scale);
    let orientation = Orientation::of(beta3);
    let threshold = FLIP_RTOL * orientation.apply(beta3) + ZERO_RTOL * scale;
    let mask = SubsetMask::new(removed.to_vec(), panel.len()).map_err(|e| AuditError::InvalidRemoval(e.to_string()))?;
    let keep = mask.kept(panel.len());
    let coef = orientation.apply(panel.beta3(&keep).ok_or(AuditError::Degenerate)?);
    if coef > threshold {
        return Err(AuditError::NotAFlip(coef));
    }
    Ok(UpperBound { removed: mask, refit_coef: coef, unit: Unit::Individuals })
}

/// Auditing methods, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "amip")]
    Amip,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "exact-binary")]
    ExactBinary,
    #[serde(rename = "exact-did")]
    ExactDid,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "miqcp-frac")]
    MiqcpFrac,
    #[serde(rename = "miqcp-int")]
    MiqcpInt,
    #[serde(rename = "oracle")]
    Oracle,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Amip,
        Method::Greedy,
        Method::ExactBinary,
        Method::ExactDid,
        Method::Spectral,
        Method::MiqcpFrac,
        Method::MiqcpInt,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Amip => "amip",
            Method::Greedy => "greedy",
            Method::ExactBinary => "exact-binary",
            Method::ExactDid => "exact-did",
            Method::Spectral => "spectral",
            Method::MiqcpFrac => "miqcp-frac",
            Method::MiqcpInt => "miqcp-int",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a single method established about the stability of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilityCertificate {
    /// Stability is at most the size of the verified removal set.
    Upper { method: Method, bound: UpperBound },
    /// Stability is at least `value`; `qualifier` states any scope restriction.
    Lower { method: Method, value: usize, qualifier: Option<String> },
    /// Stability equals the size of the verified removal set.
    Exact { method: Method, bound: UpperBound },
    /// No removal set of any size flips the coefficient (groups must stay nonempty).
    NoFlipPossible { method: Method },
    /// The heuristic did not find a flip; no bound.
    NoFlipFound { method: Method },
}

impl StabilityCertificate {
    pub fn method(&self) -> Method {
        match self {
            StabilityCertificate::Upper { method, .. }
            | StabilityCertificate::Lower { method, .. }
            | StabilityCertificate::Exact { method, .. }
            | StabilityCertificate::NoFlipPossible { method }
            | StabilityCertificate::NoFlipFound { method } => *method,
        }
    }

    pub fn upper(&self) -> Option<&UpperBound> {
        match self {
            StabilityCertificate::Upper { bound, .. } | StabilityCertificate::Exact { bound, .. } => Some(bound),
            _ => None,
        }
    }

    pub fn lower_value(&self) -> Option<usize> {
        match self {
            StabilityCertificate::Lower { value, .. } => Some(*value),
            StabilityCertificate::Exact { bound, .. } => Some(bound.size()),
            _ => None,
        }
    }
}
