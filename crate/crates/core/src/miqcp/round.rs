//! Turning relaxed weights into certificates and feasible fractional points.

use super::model::BilinearModel;
use crate::certificate::{verify_rows, UpperBound};
use crate::data::Dataset;
use crate::linalg;

/// Weights below `1 - ROUND_TOL` are rounded to 0.
pub const ROUND_TOL: f64 = 1e-6;

/// Drops every sample whose weight is below `1 - 1e-6` and keeps the rest;
/// returns a certificate only if the refit flips the audited coefficient.
pub fn round_and_verify(ds: &Dataset, w: &[f64]) -> Option<UpperBound> {
    assert_eq!(w.len(), ds.n(), "one weight per sample");
    let removed: Vec<usize> = (0..ds.n()).filter(|&i| w[i] < 1.0 - ROUND_TOL).collect();
    verify_rows(ds, &removed).ok()
}

/// Oriented audited coefficient of the weighted fit, `None` if unidentified.
pub fn weighted_target(model: &BilinearModel, w: &[f64]) -> Option<(f64, Vec<f64>)> {
    let fit = linalg::weighted_ols_fit(&model.x, &model.y, w);
    let t = model.d() - 1;
    fit.identifies(t).then(|| (fit.beta[t], fit.beta))
}

/// A feasible point of the fractional program.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalPoint {
    pub objective: f64,
    pub w: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Searches the segment `w(t) = (1 - t) 1 + t w_end` for the point where the
/// weighted fit's audited coefficient crosses zero. Requires the coefficient
/// to be `<= 0` at `w_end`. The returned point is on the nonpositive side of
/// the crossing (within 1e-12 in `t`), with the audited coefficient dropped.
pub fn fractional_line_search(model: &BilinearModel, w_end: &[f64]) -> Option<FractionalPoint> {
    let n = model.n();
    let at = |t: f64| -> Vec<f64> { w_end.iter().map(|&we| (1.0 - t) + t * we).collect() };
    let (c1, beta1) = weighted_target(model, w_end)?;
    if c1 > 0.0 {
        return None;
    }
    let (c0, beta0) = weighted_target(model, &vec![1.0; n])?;
    let (t, beta) = if c0 <= 0.0 {
        (0.0, beta0)
    } else {
        let (mut lo, mut hi, mut beta_hi) = (0.0f64, 1.0f64, beta1);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            match weighted_target(model, &at(mid)) {
                Some((c, b)) if c <= 0.0 => {
                    hi = mid;
                    beta_hi = b;
                }
                Some(_) => lo = mid,
                None => return None,
            }
        }
        (hi, beta_hi)
    };
    let w = at(t);
    let beta: Vec<f64> = beta[..model.d() - 1].to_vec();
    if beta.iter().any(|b| b.abs() > model.beta_box) {
        return None;
    }
    Some(FractionalPoint { objective: w.iter().sum(), w, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::miqcp::model::{build_model, Mode};

    fn binary(y0: &[f64], y1: &[f64]) -> Dataset {
        let t: Vec<f64> = y0.iter().map(|_| 0.0).chain(y1.iter().map(|_| 1.0)).collect();
        let y: Vec<f64> = y0.iter().chain(y1).copied().collect();
        let cov = Matrix::new(t.len(), 1, t).unwrap();
        Dataset::from_covariates(cov, y, vec!["t".into()], 0, true).unwrap()
    }

    #[test]
    fn all_ones_does_not_flip() {
        let ds = binary(&[1.0, 2.0, 3.0], &[0.0, 4.0, 5.0]);
        assert!(round_and_verify(&ds, &[1.0; 6]).is_none());
    }

    #[test]
    fn optimal_kept_indicator_gives_certificate() {
        let ds = binary(&[1.0, 2.0, 3.0], &[0.0, 4.0, 5.0]);
        let cert = round_and_verify(&ds, &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(cert.size(), 1);
    }

    #[test]
    fn near_one_counts_as_kept() {
        let ds = binary(&[1.0, 2.0, 3.0], &[0.0, 4.0, 5.0]);
        let cert = round_and_verify(&ds, &[1.0 - 1e-9, 1.0, 1.0, 1.0, 1.0, 0.3]).unwrap();
        assert_eq!(cert.removed().indices(), &[5]);
    }

    #[test]
    fn line_search_lands_on_zero_coefficient() {
        let ds = binary(&[1.0, 2.0, 3.0], &[0.0, 4.0, 6.0]);
        let m = build_model(&ds, Mode::Fractional, 1e3, false).unwrap();
        let p = fractional_line_search(&m, &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        // Treated weight on the 6 solves (4 + 6 s) / (2 + s) = 2, i.e. s = 0.
        assert!(p.objective > 5.0 - 1e-9 && p.objective <= 5.0 + 1e-9);
        let r = m.stationarity(&p.w, &[p.beta[0], 0.0]);
        assert!(r.iter().all(|v| v.abs() < 1e-8), "{r:?}");
    }
}
