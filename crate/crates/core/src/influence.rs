//! Influence-based upper bounds: one-shot ranking by first-order removal
//! effects, and greedy removal with a full refit after every step.

use crate::certificate::{verify_rows_with, AuditError, Baseline, Method, StabilityCertificate};
use crate::data::{Dataset, Orientation};
use crate::linalg::{self, Matrix};

/// First-order effect of removing each sample on the oriented audited
/// coefficient; a positive score means removal decreases it.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceScores {
    pub scores: Vec<f64>,
    pub orientation: Orientation,
}

impl InfluenceScores {
    /// Sample indices by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }
}

/// Scores for the rows in `rows`, fitted on those rows only.
fn scores_on(ds: &Dataset, rows: &[usize], orientation: Orientation) -> Vec<f64> {
    let x = ds.x().select_rows(rows);
    let y: Vec<f64> = rows.iter().map(|&i| ds.y()[i]).collect();
    let fit = linalg::ols_fit(&x, &y);
    let g = linalg::sym_pinv(&x.gram()).expect("Gram matrix is symmetric");
    let gt = g.row(ds.target()).to_vec();
    (0..rows.len())
        .map(|k| {
            let xi = x.row(k);
            let r = y[k] - linalg::dot(xi, &fit.beta);
            orientation.apply(linalg::dot(&gt, xi) * r)
        })
        .collect()
}

pub fn influence_scores(ds: &Dataset) -> Result<InfluenceScores, AuditError> {
    let base = Baseline::of(ds)?;
    let rows: Vec<usize> = (0..ds.n()).collect();
    Ok(InfluenceScores { scores: scores_on(ds, &rows, base.orientation), orientation: base.orientation })
}

/// Exact leave-one-out change of the (unoriented) audited coefficient,
/// `β₋ᵢ - β = -(XᵀX)⁻¹ Xᵢ rᵢ / (1 - hᵢ)`; `None` where `hᵢ` is 1 to within
/// `1e-10` (removal leaves the fit undetermined in that direction).
pub fn leave_one_out_deltas(ds: &Dataset) -> Vec<Option<f64>> {
    let x = ds.x();
    let fit = linalg::ols_fit(x, ds.y());
    let g: Matrix = linalg::sym_pinv(&x.gram()).expect("Gram matrix is symmetric");
    (0..ds.n())
        .map(|i| {
            let xi = x.row(i);
            let gx = g.matvec(xi);
            let h = linalg::dot(xi, &gx);
            let r = ds.y()[i] - linalg::dot(xi, &fit.beta);
            (1.0 - h > 1e-10).then(|| -gx[ds.target()] * r / (1.0 - h))
        })
        .collect()
}

fn already_flipped(ds: &Dataset, base: &Baseline, method: Method) -> Option<Result<StabilityCertificate, AuditError>> {
    base.already_flipped()
        .then(|| verify_rows_with(ds, base, &[]).map(|bound| StabilityCertificate::Upper { method, bound }))
}

/// Removes the top-scoring prefix of the influence ranking, trying prefix
/// lengths in increasing order and returning the first whose refit flips.
pub fn amip_upper_bound(ds: &Dataset) -> Result<StabilityCertificate, AuditError> {
    let base = Baseline::of(ds)?;
    if let Some(done) = already_flipped(ds, &base, Method::Amip) {
        return done;
    }
    let scores = InfluenceScores { scores: scores_on(ds, &(0..ds.n()).collect::<Vec<_>>(), base.orientation), orientation: base.orientation };
    let ranking = scores.ranking();
    let mut kept = vec![true; ds.n()];
    let mut keep = Vec::with_capacity(ds.n());
    for k in 1..ds.n() {
        kept[ranking[k - 1]] = false;
        keep.clear();
        keep.extend((0..ds.n()).filter(|&i| kept[i]));
        if base.flips(ds, &keep) {
            let mut removed = ranking[..k].to_vec();
            removed.sort_unstable();
            let bound = verify_rows_with(ds, &base, &removed)?;
            return Ok(StabilityCertificate::Upper { method: Method::Amip, bound });
        }
    }
    Ok(StabilityCertificate::NoFlipFound { method: Method::Amip })
}

/// Repeatedly removes the highest-scoring sample (skipping removals that
/// would leave the audited coefficient unidentified), refits and rescores,
/// until the coefficient flips or `max_iters` samples are gone.
pub fn greedy_resolve_upper_bound(ds: &Dataset, max_iters: usize) -> Result<StabilityCertificate, AuditError> {
    Ok(match greedy_removal(ds, max_iters)? {
        Some(bound) => StabilityCertificate::Upper { method: Method::Greedy, bound },
        None => StabilityCertificate::NoFlipFound { method: Method::Greedy },
    })
}

/// The greedy removal set, verified; `None` when no flip was reached.
pub fn greedy_removal(ds: &Dataset, max_iters: usize) -> Result<Option<crate::certificate::UpperBound>, AuditError> {
    let base = Baseline::of(ds)?;
    if base.already_flipped() {
        return verify_rows_with(ds, &base, &[]).map(Some);
    }
    let mut keep: Vec<usize> = (0..ds.n()).collect();
    let mut removed = Vec::new();
    let mut trial = Vec::with_capacity(ds.n());
    for _ in 0..max_iters {
        let scores = scores_on(ds, &keep, base.orientation);
        let mut order: Vec<usize> = (0..keep.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(keep[a].cmp(&keep[b])));
        let mut step = None;
        for &pos in &order {
            trial.clear();
            trial.extend(keep.iter().enumerate().filter(|&(p, _)| p != pos).map(|(_, &i)| i));
            if let Some(c) = base.refit(ds, &trial) {
                step = Some((pos, c));
                break;
            }
        }
        let Some((pos, coef)) = step else {
            return Ok(None);
        };
        removed.push(keep.remove(pos));
        if coef <= base.threshold() {
            removed.sort_unstable();
            return verify_rows_with(ds, &base, &removed).map(Some);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[[f64; 1]], y: &[f64]) -> Dataset {
        let cov = Matrix::from_rows(rows).unwrap();
        Dataset::from_covariates(cov, y.to_vec(), vec!["x".into()], 0, true).unwrap()
    }

    #[test]
    fn zero_residual_sample_has_zero_score() {
        // y = x exactly at every point except the last pair, which balance.
        let d = ds(&[[0.0], [1.0], [2.0], [3.0], [3.0]], &[0.0, 1.0, 2.0, 3.5, 2.5]);
        let s = influence_scores(&d).unwrap();
        assert!(s.scores[0].abs() < 1e-12 && s.scores[1].abs() < 1e-12 && s.scores[2].abs() < 1e-12);
    }

    #[test]
    fn duplicated_samples_score_equally() {
        let d = ds(&[[0.0], [1.0], [1.0], [2.0]], &[0.3, 1.4, 1.4, 1.9]);
        let s = influence_scores(&d).unwrap();
        assert_eq!(s.scores[1], s.scores[2]);
    }

    #[test]
    fn sherman_morrison_matches_refit() {
        let d = ds(&[[0.0], [1.0], [2.5], [-1.0], [0.7]], &[0.1, 0.9, 3.2, -1.5, 0.2]);
        let full = linalg::ols_fit(d.x(), d.y()).beta[0];
        for (i, delta) in leave_one_out_deltas(&d).into_iter().enumerate() {
            let keep: Vec<usize> = (0..5).filter(|&j| j != i).collect();
            let refit = linalg::subset_ols_fit(d.x(), d.y(), &keep).beta[0];
            assert!((full + delta.unwrap() - refit).abs() < 1e-10);
        }
    }

    #[test]
    fn gross_outlier_gives_size_one_certificate() {
        // Flat data plus one point dragging the slope upward.
        let d = ds(&[[0.0], [1.0], [2.0], [3.0], [4.0], [10.0]], &[1.0, 0.0, 1.0, 0.0, 0.5, 20.0]);
        let cert = amip_upper_bound(&d).unwrap();
        assert_eq!(cert.upper().unwrap().removed().indices(), &[5]);
        let cert = greedy_resolve_upper_bound(&d, 5).unwrap();
        assert_eq!(cert.upper().unwrap().removed().indices(), &[5]);
    }

    #[test]
    fn already_flipped_gives_empty_certificate() {
        let d = ds(&[[0.0], [1.0], [2.0]], &[1.0, 1.0, 1.0]);
        assert_eq!(amip_upper_bound(&d).unwrap().upper().unwrap().size(), 0);
        assert_eq!(greedy_resolve_upper_bound(&d, 3).unwrap().upper().unwrap().size(), 0);
    }
}
