//! Exhaustive stability computation for small instances.
//!
//! Subsets are enumerated by increasing size and lexicographically within a
//! size; the first flipping subset is returned. Subsets that leave the audited
//! coefficient unidentified never count as flips.

use thiserror::Error;

use crate::certificate::{AuditError, Baseline};
use crate::data::DiDView;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("enumeration too large (n = {n}, max_k = {max_k}); need n <= 20 or max_k <= 3")]
    TooLarge { n: usize, max_k: usize },
    #[error(transparent)]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    /// Smallest flipping subset (first in enumeration order).
    Flip { k: usize, removed: Vec<usize> },
    NoFlipWithin(usize),
}

impl OracleOutcome {
    pub fn value(&self) -> Option<usize> {
        match self {
            OracleOutcome::Flip { k, .. } => Some(*k),
            OracleOutcome::NoFlipWithin(_) => None,
        }
    }
}

pub fn check_guard(n: usize, max_k: usize) -> Result<(), OracleError> {
    if n <= 20 || max_k <= 3 {
        Ok(())
    } else {
        Err(OracleError::TooLarge { n, max_k })
    }
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn complement(removed: &[usize], n: usize, out: &mut Vec<usize>) {
    out.clear();
    let mut r = removed.iter().peekable();
    for i in 0..n {
        if r.peek() == Some(&&i) {
            r.next();
        } else {
            out.push(i);
        }
    }
}

fn search(n: usize, max_k: usize, mut flips: impl FnMut(&[usize], &[usize]) -> bool) -> OracleOutcome {
    let mut keep = Vec::with_capacity(n);
    for k in 0..=max_k.min(n) {
        let mut c: Vec<usize> = (0..k).collect();
        loop {
            complement(&c, n, &mut keep);
            if flips(&c, &keep) {
                return OracleOutcome::Flip { k, removed: c };
            }
            if !next_combination(&mut c, n) {
                break;
            }
        }
    }
    OracleOutcome::NoFlipWithin(max_k)
}

/// Smallest number of rows whose removal drives the oriented audited
/// coefficient to `<= 0` (with the refit tolerance of [`Baseline::flips`]).
pub fn brute_force_stability(ds: &crate::data::Dataset, max_k: usize) -> Result<OracleOutcome, OracleError> {
    check_guard(ds.n(), max_k)?;
    let base = Baseline::of(ds)?;
    if base.already_flipped() {
        return Ok(OracleOutcome::Flip { k: 0, removed: Vec::new() });
    }
    Ok(search(ds.n(), max_k, |_, keep| base.flips(ds, keep)))
}

/// Smallest number of individuals whose removal makes the kept treated mean
/// change no larger than the kept overall mean change, with both groups kept
/// nonempty. Removed indices refer to individuals of the source panel.
pub fn brute_force_did(view: &DiDView, max_k: usize) -> Result<OracleOutcome, OracleError> {
    let n = view.n_individuals;
    check_guard(n, max_k)?;
    let mut delta = vec![0.0; n];
    let mut treated = vec![false; n];
    for (k, &i) in view.treated_ids.iter().enumerate() {
        delta[i] = view.deltas_treated[k];
        treated[i] = true;
    }
    for (k, &i) in view.control_ids.iter().enumerate() {
        delta[i] = view.deltas_control[k];
    }
    Ok(search(n, max_k, |_, keep| {
        let (mut st, mut mt, mut sa) = (0.0, 0usize, 0.0);
        for &i in keep {
            sa += delta[i];
            if treated[i] {
                st += delta[i];
                mt += 1;
            }
        }
        if mt == 0 || mt == keep.len() {
            return false;
        }
        st / mt as f64 - sa / keep.len() as f64 <= 0.0
    }))
}
