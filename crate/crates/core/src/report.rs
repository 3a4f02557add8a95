//! Running several auditing methods on one dataset and collecting their
//! bounds into a single report.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::certificate::{verify_individuals, verify_rows, Method, StabilityCertificate};
use crate::data::{panel_view, Dataset, DidPanel};
use crate::miqcp::{self, MiqcpConfig};
use crate::oracle::{brute_force_did, brute_force_stability, OracleError, OracleOutcome};
use crate::{exact_binary, exact_did, influence, linalg, spectral};

pub const SCHEMA_VERSION: u32 = 1;

/// The data being audited: rows of a regression, or a DiD panel whose
/// removals act on individuals.
#[derive(Debug, Clone)]
pub enum AuditInput {
    Rows(Dataset),
    Panel(DidPanel),
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub methods: Vec<Method>,
    pub time_limit: Duration,
    pub beta_box: Option<f64>,
    /// Largest removal size enumerated by the oracle.
    pub max_k: usize,
    pub greedy_max_iters: Option<usize>,
    pub parallel: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            time_limit: Duration::from_secs(10),
            beta_box: None,
            max_k: 3,
            greedy_max_iters: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundType {
    Lower,
    Upper,
    Exact,
    NoFlipPossible,
    NoFlipFound,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEntry {
    pub method: Method,
    pub bound_type: BoundType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub removal_set: Option<Vec<usize>>,
    pub runtime_ms: u64,
    pub verified: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub qualifiers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MethodEntry {
    fn note(method: Method, bound_type: BoundType, note: String) -> Self {
        Self { method, bound_type, value: None, removal_set: None, runtime_ms: 0, verified: false, qualifiers: Vec::new(), note: Some(note) }
    }

    fn from_certificate(cert: &StabilityCertificate) -> Self {
        let method = cert.method();
        let base = Self {
            method,
            bound_type: BoundType::Skipped,
            value: None,
            removal_set: None,
            runtime_ms: 0,
            verified: false,
            qualifiers: Vec::new(),
            note: None,
        };
        match cert {
            StabilityCertificate::Upper { bound, .. } | StabilityCertificate::Exact { bound, .. } => Self {
                bound_type: if matches!(cert, StabilityCertificate::Exact { .. }) { BoundType::Exact } else { BoundType::Upper },
                value: Some(bound.size()),
                removal_set: Some(bound.removed().indices().to_vec()),
                verified: true,
                ..base
            },
            StabilityCertificate::Lower { value, qualifier, .. } => Self {
                bound_type: BoundType::Lower,
                value: Some(*value),
                qualifiers: qualifier.iter().cloned().collect(),
                ..base
            },
            StabilityCertificate::NoFlipPossible { .. } => Self { bound_type: BoundType::NoFlipPossible, ..base },
            StabilityCertificate::NoFlipFound { .. } => Self { bound_type: BoundType::NoFlipFound, ..base },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub content_hash: String,
    pub n: usize,
    pub d: usize,
    pub target: String,
    /// `rows` or `individuals`.
    pub unit: &'static str,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_lb: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability_ub: Option<usize>,
    /// Some method proved that no removal set flips the coefficient.
    pub no_flip_possible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub dataset: DatasetInfo,
    pub methods: Vec<MethodEntry>,
    pub summary: Summary,
}

impl AuditReport {
    /// `max(lower) <= min(verified upper)`, when both exist.
    pub fn is_consistent(&self) -> bool {
        match (self.summary.stability_lb, self.summary.stability_ub) {
            (Some(lb), Some(ub)) => lb <= ub,
            _ => true,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report contains only finite numbers")
    }

    /// Fixed-width table, one line per method entry.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let ds = &self.dataset;
        writeln!(out, "dataset n={} d={} target={} unit={}", ds.n, ds.d, ds.target, ds.unit).unwrap();
        writeln!(out, "{:<13} {:<17} {:>7} {:>9} {:>10}  notes", "method", "bound", "value", "verified", "ms").unwrap();
        for e in &self.methods {
            let bound = serde_json::to_value(e.bound_type).unwrap();
            let value = e.value.map_or("-".to_string(), |v| v.to_string());
            let mut notes: Vec<&str> = e.qualifiers.iter().map(String::as_str).collect();
            notes.extend(e.note.as_deref());
            writeln!(
                out,
                "{:<13} {:<17} {:>7} {:>9} {:>10}  {}",
                e.method.name(),
                bound.as_str().unwrap_or(""),
                value,
                if e.verified { "yes" } else { "-" },
                e.runtime_ms,
                notes.join("; ")
            )
            .unwrap();
        }
        let show = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
        write!(out, "stability: lower {} upper {}", show(self.summary.stability_lb), show(self.summary.stability_ub)).unwrap();
        if self.summary.no_flip_possible {
            out.push_str(" (no removal set flips the coefficient)");
        }
        out.push('\n');
        out
    }
}

fn summarize(entries: &[MethodEntry]) -> Summary {
    let lb = entries
        .iter()
        .filter(|e| matches!(e.bound_type, BoundType::Lower | BoundType::Exact))
        .filter_map(|e| e.value)
        .max();
    let ub = entries
        .iter()
        .filter(|e| e.verified && matches!(e.bound_type, BoundType::Upper | BoundType::Exact))
        .filter_map(|e| e.value)
        .min();
    Summary { stability_lb: lb, stability_ub: ub, no_flip_possible: entries.iter().any(|e| e.bound_type == BoundType::NoFlipPossible) }
}

fn timed(f: impl FnOnce() -> Vec<MethodEntry>) -> Vec<MethodEntry> {
    let start = Instant::now();
    let mut entries = f();
    let ms = start.elapsed().as_millis() as u64;
    for e in &mut entries {
        e.runtime_ms = ms;
    }
    entries
}

fn oracle_entries(method: Method, n: usize, max_k: usize, result: Result<(OracleOutcome, Option<crate::certificate::UpperBound>), OracleError>) -> Vec<MethodEntry> {
    match result {
        Ok((OracleOutcome::Flip { .. }, Some(bound))) => {
            vec![MethodEntry::from_certificate(&StabilityCertificate::Exact { method, bound })]
        }
        Ok((OracleOutcome::Flip { k, .. }, None)) => {
            vec![MethodEntry::note(method, BoundType::Failed, format!("size-{k} witness failed verification"))]
        }
        Ok((OracleOutcome::NoFlipWithin(_), _)) if max_k >= n => {
            vec![MethodEntry::from_certificate(&StabilityCertificate::NoFlipPossible { method })]
        }
        Ok((OracleOutcome::NoFlipWithin(k), _)) => {
            let mut e = MethodEntry::from_certificate(&StabilityCertificate::Lower { method, value: k + 1, qualifier: None });
            e.note = Some(format!("no flip with at most {k} removals"));
            vec![e]
        }
        Err(e @ OracleError::TooLarge { .. }) => vec![MethodEntry::note(method, BoundType::Skipped, e.to_string())],
        Err(e) => vec![MethodEntry::note(method, BoundType::Failed, e.to_string())],
    }
}

fn run_rows_method(ds: &Dataset, method: Method, opts: &AuditOptions) -> Vec<MethodEntry> {
    let cert_entries = |r: Result<StabilityCertificate, String>| match r {
        Ok(c) => vec![MethodEntry::from_certificate(&c)],
        Err(e) => vec![MethodEntry::note(method, BoundType::Failed, e)],
    };
    let miqcp_cfg = MiqcpConfig { time_limit: opts.time_limit, beta_box: opts.beta_box, ..MiqcpConfig::default() };
    let greedy_iters = opts.greedy_max_iters.unwrap_or(ds.n());
    let miqcp_entries = |r: Result<miqcp::MiqcpRun, crate::certificate::AuditError>| match r {
        Ok(run) => {
            let mut entries: Vec<MethodEntry> = run.certificates().iter().map(MethodEntry::from_certificate).collect();
            let status = serde_json::to_value(run.outcome.status).unwrap();
            entries[0].note = Some(format!(
                "{} after {} nodes{}",
                status.as_str().unwrap_or(""),
                run.outcome.nodes,
                if run.safeguard { "; Σw ≥ 1 enforced" } else { "" }
            ));
            entries
        }
        Err(e) => vec![MethodEntry::note(method, BoundType::Failed, e.to_string())],
    };
    match method {
        Method::Amip => cert_entries(influence::amip_upper_bound(ds).map_err(|e| e.to_string())),
        Method::Greedy => cert_entries(influence::greedy_resolve_upper_bound(ds, greedy_iters).map_err(|e| e.to_string())),
        Method::ExactBinary => match exact_binary::certify(ds) {
            Ok(c) => vec![MethodEntry::from_certificate(&c)],
            Err(exact_binary::ExactBinaryError::Shape(e)) => {
                vec![MethodEntry::note(method, BoundType::Skipped, format!("not a binary-treatment design ({e})"))]
            }
            Err(e) => vec![MethodEntry::note(method, BoundType::Failed, e.to_string())],
        },
        Method::ExactDid => vec![MethodEntry::note(method, BoundType::Skipped, "requires a before/after panel".into())],
        Method::Spectral => cert_entries(spectral::spectral_lower_bound(ds).map(|c| c.to_certificate()).map_err(|e| e.to_string())),
        Method::MiqcpFrac => {
            let warm = influence::greedy_removal(ds, greedy_iters).ok().flatten();
            miqcp_entries(miqcp::solve_fractional(ds, &miqcp_cfg, warm.as_ref().map(|b| b.removed().indices())))
        }
        Method::MiqcpInt => {
            let warm = influence::greedy_removal(ds, greedy_iters).ok().flatten();
            miqcp_entries(miqcp::solve_integral(ds, &miqcp_cfg, warm.as_ref().map(|b| b.removed().indices())))
        }
        Method::Oracle => {
            let r = brute_force_stability(ds, opts.max_k).map(|o| {
                let bound = match &o {
                    OracleOutcome::Flip { removed, .. } => verify_rows(ds, removed).ok(),
                    OracleOutcome::NoFlipWithin(_) => None,
                };
                (o, bound)
            });
            oracle_entries(method, ds.n(), opts.max_k, r)
        }
    }
}

fn run_panel_method(panel: &DidPanel, method: Method, opts: &AuditOptions) -> Vec<MethodEntry> {
    match method {
        Method::ExactDid => match exact_did::certify(panel) {
            Ok(c) => vec![MethodEntry::from_certificate(&c)],
            Err(e) => vec![MethodEntry::note(method, BoundType::Failed, e.to_string())],
        },
        Method::Oracle => {
            let r = panel_view(panel).map_err(|e| OracleError::Audit(crate::certificate::AuditError::InvalidRemoval(e.to_string()))).and_then(|view| {
                brute_force_did(&view, opts.max_k).map(|o| {
                    let bound = match &o {
                        OracleOutcome::Flip { removed, .. } => verify_individuals(panel, removed).ok(),
                        OracleOutcome::NoFlipWithin(_) => None,
                    };
                    (o, bound)
                })
            });
            oracle_entries(method, panel.len(), opts.max_k, r)
        }
        _ => vec![MethodEntry::note(method, BoundType::Skipped, "removals act on individuals; only exact-did and oracle apply".into())],
    }
}

fn describe_rows(ds: &Dataset, path: Option<&str>) -> DatasetInfo {
    DatasetInfo {
        path: path.map(str::to_string),
        content_hash: ds.content_hash(),
        n: ds.n(),
        d: ds.d(),
        target: ds.target_name().to_string(),
        unit: "rows",
        beta: linalg::ols_fit(ds.x(), ds.y()).beta,
    }
}

fn describe_panel(panel: &DidPanel, path: Option<&str>) -> DatasetInfo {
    let ds = panel.as_dataset();
    DatasetInfo { unit: "individuals", n: panel.len(), ..describe_rows(&ds, path) }
}

/// Runs the requested methods (in the order given) and aggregates their bounds.
pub fn run_audit(input: &AuditInput, path: Option<&str>, opts: &AuditOptions) -> AuditReport {
    let run_one = |m: Method| {
        timed(|| match input {
            AuditInput::Rows(ds) => run_rows_method(ds, m, opts),
            AuditInput::Panel(p) => run_panel_method(p, m, opts),
        })
    };
    let methods: Vec<MethodEntry> = if opts.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = opts.methods.iter().map(|&m| scope.spawn(move || run_one(m))).collect();
            handles.into_iter().flat_map(|h| h.join().expect("method panicked")).collect()
        })
    } else {
        opts.methods.iter().flat_map(|&m| run_one(m)).collect()
    };
    let dataset = match input {
        AuditInput::Rows(ds) => describe_rows(ds, path),
        AuditInput::Panel(p) => describe_panel(p, path),
    };
    let summary = summarize(&methods);
    AuditReport { schema_version: SCHEMA_VERSION, dataset, methods, summary }
}
