//! Exact stability for a regression on a single binary treatment plus
//! intercept, in `O(n log n)`.
//!
//! After orientation the slope is `mean(Y¹) - mean(Y⁰) >= 0`. Removing `k`
//! samples can flip it iff for some `l` the `l` largest controls and the
//! `n - k - l` smallest treated responses have treated mean `<=` control mean.
//! Feasibility is monotone in `k` as long as both kept groups can shrink, so
//! the minimum `k` is found by binary search.

use crate::certificate::{verify_rows, AuditError, Method, StabilityCertificate};
use crate::data::{binary_view, BinaryTreatmentView, DataError, Dataset};

/// Prefix sums of the controls sorted decreasing and the treated sorted
/// increasing; `s0[0] = s1[0] = 0`.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
    order0: Vec<usize>,
    order1: Vec<usize>,
}

impl PrefixSums {
    pub fn new(view: &BinaryTreatmentView) -> Self {
        let order0 = sorted_order(&view.y0, true);
        let order1 = sorted_order(&view.y1, false);
        Self { s0: prefix(&view.y0, &order0), s1: prefix(&view.y1, &order1), order0, order1 }
    }

    pub fn n(&self) -> usize {
        self.order0.len() + self.order1.len()
    }
}

/// Indices sorted by value (ties by index).
fn sorted_order(v: &[f64], descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = v[a].total_cmp(&v[b]);
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    idx
}

fn prefix(v: &[f64], order: &[usize]) -> Vec<f64> {
    let mut s = Vec::with_capacity(order.len() + 1);
    let mut acc = 0.0;
    s.push(acc);
    for &i in order {
        acc += v[i];
        s.push(acc);
    }
    s
}

/// Number of kept controls `l` witnessing a flip after `k` removals, if any.
/// Both kept groups must be nonempty.
pub fn witness_at_k(ps: &PrefixSums, n: usize, k: usize) -> Option<usize> {
    let n0 = ps.s0.len() - 1;
    let n1 = ps.s1.len() - 1;
    if k + 2 > n {
        return None;
    }
    let kept = n - k;
    let lo = 1.max(kept.saturating_sub(n1));
    let hi = n0.min(kept - 1);
    (lo..=hi).find(|&l| {
        let m = kept - l;
        -(m as f64) * ps.s0[l] + (l as f64) * ps.s1[m] <= 0.0
    })
}

pub fn feasible_at_k(ps: &PrefixSums, n: usize, k: usize) -> bool {
    witness_at_k(ps, n, k).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BinaryOutcome {
    /// Exact stability with a minimum removal set (rows of the source).
    Stability { k: usize, removed: Vec<usize> },
    /// Every removal that keeps both groups nonempty leaves the slope positive.
    NoFlipPossible,
}

impl BinaryOutcome {
    pub fn value(&self) -> Option<usize> {
        match self {
            BinaryOutcome::Stability { k, .. } => Some(*k),
            BinaryOutcome::NoFlipPossible => None,
        }
    }
}

pub fn audit_binary(view: &BinaryTreatmentView) -> BinaryOutcome {
    let ps = PrefixSums::new(view);
    let n = ps.n();
    let found = |k: usize| witness_at_k(&ps, n, k).map(|l| (k, l));
    let (k, l) = match found(0) {
        Some(hit) => hit,
        None => {
            let k_max = n - 2;
            let Some(mut best) = found(k_max) else {
                return BinaryOutcome::NoFlipPossible;
            };
            // Invariant: infeasible at `lo`, feasible at `best.0`.
            let mut lo = 0;
            while best.0 - lo > 1 {
                let mid = lo + (best.0 - lo) / 2;
                match found(mid) {
                    Some(hit) => best = hit,
                    None => lo = mid,
                }
            }
            best
        }
    };
    let m = n - k - l;
    let mut removed: Vec<usize> = ps.order0[l..]
        .iter()
        .map(|&i| view.rows0[i])
        .chain(ps.order1[m..].iter().map(|&i| view.rows1[i]))
        .collect();
    removed.sort_unstable();
    BinaryOutcome::Stability { k, removed }
}

/// Runs the exact audit on a binary-treatment dataset and verifies the
/// witnessing removal set by refitting.
pub fn certify(ds: &Dataset) -> Result<StabilityCertificate, ExactBinaryError> {
    let view = binary_view(ds)?;
    match audit_binary(&view) {
        BinaryOutcome::Stability { removed, .. } => {
            let bound = verify_rows(ds, &removed)?;
            Ok(StabilityCertificate::Exact { method: Method::ExactBinary, bound })
        }
        BinaryOutcome::NoFlipPossible => Ok(StabilityCertificate::NoFlipPossible { method: Method::ExactBinary }),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExactBinaryError {
    #[error(transparent)]
    Shape(#[from] DataError),
    #[error("witness failed verification: {0}")]
    Verify(#[from] AuditError),
}
