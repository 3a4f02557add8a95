//! Exact stability of the difference-in-differences interaction coefficient,
//! removing whole individuals, in `O(N log N)`.
//!
//! The interaction coefficient has the sign of `mean_T(δ) - mean_all(δ)` over
//! the kept individuals, where `δ = after - before`. For a fixed number `l` of
//! dropped treated individuals the best choice drops the `l` largest treated
//! changes and the `k - l` smallest control changes.

use crate::certificate::{verify_individuals, AuditError, Method, StabilityCertificate};
use crate::data::{panel_view, DataError, DiDView, DidPanel};

/// `st`: prefix sums of treated changes sorted increasing; `sc`: prefix sums
/// of control changes sorted decreasing. Both start at 0.
#[derive(Debug, Clone)]
pub struct DiDPrefixSums {
    pub st: Vec<f64>,
    pub sc: Vec<f64>,
    order_t: Vec<usize>,
    order_c: Vec<usize>,
}

impl DiDPrefixSums {
    pub fn new(view: &DiDView) -> Self {
        let order_t = sorted_order(&view.deltas_treated, false);
        let order_c = sorted_order(&view.deltas_control, true);
        Self {
            st: prefix(&view.deltas_treated, &order_t),
            sc: prefix(&view.deltas_control, &order_c),
            order_t,
            order_c,
        }
    }

    pub fn n_treated(&self) -> usize {
        self.order_t.len()
    }

    pub fn n_control(&self) -> usize {
        self.order_c.len()
    }
}

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

/// Number of treated individuals `l` to drop so that `k` removals flip the
/// coefficient, keeping at least one treated and one control individual.
pub fn did_witness_at_k(ps: &DiDPrefixSums, k: usize) -> Option<usize> {
    let t = ps.n_treated();
    let c = ps.n_control();
    if k + 2 > t + c {
        return None;
    }
    let lo = (k + 1).saturating_sub(c);
    let hi = (t - 1).min(k);
    (lo..=hi).find(|&l| {
        let mt = t - l;
        let mc = c - (k - l);
        // mean_T <= mean_all  <=>  mc * S_T <= mt * S_C
        (mc as f64) * ps.st[mt] - (mt as f64) * ps.sc[mc] <= 0.0
    })
}

pub fn did_feasible_at_k(ps: &DiDPrefixSums, k: usize) -> bool {
    did_witness_at_k(ps, k).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DidOutcome {
    /// Exact stability with a minimum set of individuals to remove.
    Stability { k: usize, removed: Vec<usize> },
    NoFlipPossible,
}

impl DidOutcome {
    pub fn value(&self) -> Option<usize> {
        match self {
            DidOutcome::Stability { k, .. } => Some(*k),
            DidOutcome::NoFlipPossible => None,
        }
    }
}

pub fn audit_did(view: &DiDView) -> DidOutcome {
    let ps = DiDPrefixSums::new(view);
    let n = view.n_individuals;
    let found = |k: usize| did_witness_at_k(&ps, k).map(|l| (k, l));
    let (k, l) = match found(0) {
        Some(hit) => hit,
        None => {
            let Some(mut best) = found(n - 2) else {
                return DidOutcome::NoFlipPossible;
            };
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
    let mt = ps.n_treated() - l;
    let mc = ps.n_control() - (k - l);
    let mut removed: Vec<usize> = ps.order_t[mt..]
        .iter()
        .map(|&i| view.treated_ids[i])
        .chain(ps.order_c[mc..].iter().map(|&i| view.control_ids[i]))
        .collect();
    removed.sort_unstable();
    DidOutcome::Stability { k, removed }
}

#[derive(Debug, thiserror::Error)]
pub enum ExactDidError {
    #[error(transparent)]
    Shape(#[from] DataError),
    #[error("witness failed verification: {0}")]
    Verify(#[from] AuditError),
}

/// Exact audit of a panel, with the removal set verified by refitting the
/// 4-column regression.
pub fn certify(panel: &DidPanel) -> Result<StabilityCertificate, ExactDidError> {
    let view = panel_view(panel)?;
    match audit_did(&view) {
        DidOutcome::Stability { removed, .. } => {
            let bound = verify_individuals(panel, &removed)?;
            Ok(StabilityCertificate::Exact { method: Method::ExactDid, bound })
        }
        DidOutcome::NoFlipPossible => Ok(StabilityCertificate::NoFlipPossible { method: Method::ExactDid }),
    }
}
