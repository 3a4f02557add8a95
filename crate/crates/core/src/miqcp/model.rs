//! The bilinear program over sample weights `w` and coefficients `β`:
//!
//! ```text
//! maximize   Σᵢ wᵢ
//! subject to Σᵢ wᵢ X_{i,j'} (Σⱼ X_{i,j} βⱼ - yᵢ) = 0   for every column j'
//!            0 <= wᵢ <= 1,  -B <= βⱼ <= B
//! ```
//!
//! The audited column is moved last and `y` is oriented so that the full-data
//! coefficient is nonnegative. In fractional mode the audited coefficient is
//! pinned to zero (it is absent from the residual); in integral mode it is a
//! variable with `β_last <= 0` and the weights are meant to be 0/1.

use serde::Serialize;

use crate::certificate::{AuditError, Baseline};
use crate::data::{Dataset, Orientation};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fractional,
    Integral,
}

#[derive(Debug, Clone)]
pub struct BilinearModel {
    pub mode: Mode,
    /// Design with the audited column last.
    pub x: Matrix,
    /// Oriented responses.
    pub y: Vec<f64>,
    /// `perm[j]` is the dataset column placed at model column `j`.
    pub perm: Vec<usize>,
    pub beta_box: f64,
    pub safeguard: bool,
    pub orientation: Orientation,
}

/// Default coefficient box: `1e3 * max(1, |β_full|∞)`.
pub fn default_beta_box(ds: &Dataset) -> Result<f64, AuditError> {
    let base = Baseline::of(ds)?;
    Ok(1e3 * base.beta.iter().fold(1.0f64, |m, b| m.max(b.abs())))
}

pub fn build_model(ds: &Dataset, mode: Mode, beta_box: f64, safeguard: bool) -> Result<BilinearModel, AuditError> {
    assert!(beta_box > 0.0 && beta_box.is_finite(), "coefficient box must be positive and finite");
    let base = Baseline::of(ds)?;
    let d = ds.d();
    let t = ds.target();
    let perm: Vec<usize> = (0..d).filter(|&j| j != t).chain(std::iter::once(t)).collect();
    let x = Matrix::from_fn(ds.n(), d, |i, j| ds.x().get(i, perm[j]));
    let y = ds.y().iter().map(|&v| base.orientation.apply(v)).collect();
    Ok(BilinearModel { mode, x, y, perm, beta_box, safeguard, orientation: base.orientation })
}

impl BilinearModel {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    /// Number of coefficient variables: `d - 1` in fractional mode, `d` in integral mode.
    pub fn n_beta(&self) -> usize {
        match self.mode {
            Mode::Fractional => self.d() - 1,
            Mode::Integral => self.d(),
        }
    }

    /// Box of coefficient `j`; the audited coefficient is capped at 0 in integral mode.
    pub fn beta_bounds(&self, j: usize) -> (f64, f64) {
        if self.mode == Mode::Integral && j == self.d() - 1 {
            (-self.beta_box, 0.0)
        } else {
            (-self.beta_box, self.beta_box)
        }
    }

    /// Coefficient of `wᵢ βⱼ` in stationarity row `row`.
    pub fn bilinear_coef(&self, row: usize, i: usize, j: usize) -> f64 {
        if j >= self.n_beta() {
            return 0.0;
        }
        self.x.get(i, row) * self.x.get(i, j)
    }

    /// Coefficient of `wᵢ` in stationarity row `row`.
    pub fn linear_coef(&self, row: usize, i: usize) -> f64 {
        -self.x.get(i, row) * self.y[i]
    }

    /// Stationarity residuals at `(w, β)`.
    pub fn stationarity(&self, w: &[f64], beta: &[f64]) -> Vec<f64> {
        (0..self.d())
            .map(|row| {
                (0..self.n())
                    .map(|i| {
                        let fit: f64 = (0..self.n_beta()).map(|j| self.x.get(i, j) * beta[j]).sum();
                        w[i] * self.x.get(i, row) * (fit - self.y[i])
                    })
                    .sum()
            })
            .collect()
    }

    /// Maps model coefficients back to dataset column order (audited
    /// coefficient 0 in fractional mode), undoing the orientation.
    pub fn beta_in_dataset_order(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        for (j, &c) in self.perm.iter().enumerate() {
            out[c] = self.orientation.apply(beta.get(j).copied().unwrap_or(0.0));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let cov = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        Dataset::from_covariates(cov, vec![0.0, 1.0], vec!["t".into()], 0, true).unwrap()
    }

    #[test]
    fn structure_counts() {
        let m = build_model(&toy(), Mode::Integral, 10.0, false).unwrap();
        assert_eq!((m.n(), m.n_beta(), m.d()), (2, 2, 2));
        assert_eq!(m.beta_bounds(1), (-10.0, 0.0));
        let f = build_model(&toy(), Mode::Fractional, 10.0, false).unwrap();
        assert_eq!(f.n_beta(), 1);
        for row in 0..2 {
            for i in 0..2 {
                assert_eq!(f.bilinear_coef(row, i, 1), 0.0);
            }
        }
    }

    #[test]
    fn audited_column_moves_last() {
        let m = build_model(&toy(), Mode::Integral, 10.0, false).unwrap();
        assert_eq!(m.perm, vec![1, 0]);
        assert_eq!(m.x.column(0), vec![1.0, 1.0]);
        assert_eq!(m.x.column(1), vec![0.0, 1.0]);
    }

    #[test]
    fn ols_solution_is_stationary() {
        let m = build_model(&toy(), Mode::Integral, 10.0, false).unwrap();
        let r = m.stationarity(&[1.0, 1.0], &[0.0, 1.0]);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }
}
