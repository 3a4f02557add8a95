//! Bounds from the bilinear weighted-least-squares program, solved by
//! branch-and-bound over McCormick relaxations.
//!
//! Integral mode searches 0/1 weights with the audited coefficient capped at
//! zero; its optimum `n - k*` gives stability exactly when the search completes.
//! Fractional mode relaxes the weights to `[0, 1]` and pins the audited
//! coefficient at zero, giving a weaker but cheaper lower bound. Both bounds
//! only hold for coefficient vectors inside the box `|β|∞ <= B`.

pub mod bnb;
pub mod lp;
pub mod model;
pub mod mps;
pub mod relax;
pub mod round;

use std::time::Duration;

pub use bnb::{branch_and_bound, BnbConfig, BnbOutcome, BnbStatus, Incumbent};
pub use model::{build_model, default_beta_box, BilinearModel, Mode};

use crate::certificate::{verify_rows, AuditError, Baseline, Method, StabilityCertificate, UpperBound};
use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct MiqcpConfig {
    pub time_limit: Duration,
    pub node_limit: usize,
    /// `None`: `1e3 * max(1, |β_full|∞)`.
    pub beta_box: Option<f64>,
    /// `None`: off, switched on (with a warning) when the fractional optimum
    /// collapses to the all-zero weights.
    pub safeguard: Option<bool>,
}

impl Default for MiqcpConfig {
    fn default() -> Self {
        Self { time_limit: Duration::from_secs(10), node_limit: usize::MAX, beta_box: None, safeguard: None }
    }
}

impl MiqcpConfig {
    fn bnb(&self) -> BnbConfig {
        BnbConfig { time_limit: self.time_limit, node_limit: self.node_limit, ..BnbConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MiqcpRun {
    pub mode: Mode,
    pub outcome: BnbOutcome,
    pub beta_box: f64,
    pub safeguard: bool,
    /// Stability lower bound implied by the dual bound (within the box).
    pub lower_bound: usize,
    /// Verified removal set from the best incumbent, in dataset row indices.
    pub upper: Option<UpperBound>,
}

impl MiqcpRun {
    pub fn complete(&self) -> bool {
        self.outcome.status == BnbStatus::Optimal
    }

    pub fn qualifier(&self) -> String {
        format!("valid within |β|∞ ≤ {}", self.beta_box)
    }

    pub fn method(&self) -> Method {
        match self.mode {
            Mode::Fractional => Method::MiqcpFrac,
            Mode::Integral => Method::MiqcpInt,
        }
    }

    pub fn certificates(&self) -> Vec<StabilityCertificate> {
        let method = self.method();
        let mut out = vec![StabilityCertificate::Lower { method, value: self.lower_bound, qualifier: Some(self.qualifier()) }];
        if let Some(bound) = &self.upper {
            out.push(StabilityCertificate::Upper { method, bound: bound.clone() });
        }
        out
    }
}

fn lower_bound(mode: Mode, n: usize, dual: f64) -> usize {
    let gap = match mode {
        Mode::Integral => n as f64 - (dual + 1e-6).floor(),
        Mode::Fractional => (n as f64 - dual - 1e-6).ceil(),
    };
    gap.clamp(0.0, n as f64) as usize
}

fn run(ds: &Dataset, mode: Mode, cfg: &MiqcpConfig, safeguard: bool, warm: Option<&[usize]>) -> Result<MiqcpRun, AuditError> {
    let beta_box = match cfg.beta_box {
        Some(b) => b,
        None => default_beta_box(ds)?,
    };
    let model = build_model(ds, mode, beta_box, safeguard)?;
    let outcome = branch_and_bound(&model, &cfg.bnb(), warm);
    let upper = outcome
        .incumbent
        .as_ref()
        .and_then(|inc| inc.certificate.as_ref())
        .and_then(|c| verify_rows(ds, c.removed().indices()).ok());
    let lower_bound = lower_bound(mode, ds.n(), outcome.dual_bound);
    Ok(MiqcpRun { mode, outcome, beta_box, safeguard, lower_bound, upper })
}

/// Integral-mode search; `warm` is an optional removal set tried first.
pub fn solve_integral(ds: &Dataset, cfg: &MiqcpConfig, warm: Option<&[usize]>) -> Result<MiqcpRun, AuditError> {
    run(ds, Mode::Integral, cfg, cfg.safeguard.unwrap_or(false), warm)
}

/// Fractional-mode search; `warm` is an optional removal set whose kept
/// indicator seeds the line-search heuristic.
pub fn solve_fractional(ds: &Dataset, cfg: &MiqcpConfig, warm: Option<&[usize]>) -> Result<MiqcpRun, AuditError> {
    let first = run(ds, Mode::Fractional, cfg, cfg.safeguard.unwrap_or(false), warm)?;
    if cfg.safeguard.is_none() && first.outcome.dual_bound <= 1e-6 && !Baseline::of(ds)?.already_flipped() {
        log::warn!("fractional optimum is the all-zero weighting; rerunning with Σw ≥ 1");
        return run(ds, Mode::Fractional, cfg, true, warm);
    }
    Ok(first)
}
