//! Spectral lower bound on stability.
//!
//! With `Σ = XᵀX / n` and OLS residuals `rᵢ`, any constants satisfying for all `v`
//!
//! ```text
//! (1/n) Σᵢ <Xᵢ,v>² rᵢ² <= C1² <v,Σv>
//! (1/n) Σᵢ <Xᵢ,v>⁴     <= C2² <v,Σv>²
//! ```
//!
//! imply that removing a fraction `ε'` of the samples moves coordinate `t` of
//! the fit by `Δ` only if `ε' >= Δ² / (C1 sqrt((Σ⁻¹)ₜₜ) + C2 |Δ|)²`. Flipping the
//! sign needs `|Δ| >= |βₜ|`, which gives the bound. `C1` and `C2` are spectral
//! norms of `d x n` and `d² x n` matrices built from the whitened samples.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::certificate::{Method, StabilityCertificate};
use crate::data::{snap_zero, Dataset};
use crate::linalg::{self, LinalgError, Matrix};

/// Covariances with condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("sample covariance is singular or ill-conditioned (condition number {0:e})")]
    SingularCovariance(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCertificate {
    pub c1: f64,
    pub c2: f64,
    /// Certified removed fraction (squared denominator).
    pub epsilon: f64,
    /// `βₜ² / (C1 sqrt((Σ⁻¹)ₜₜ) + C2 |βₜ|)` without the square, reported for
    /// comparison only; it is not a certified bound.
    pub epsilon_unsquared: f64,
    pub lower_bound: usize,
    pub beta_target: f64,
    pub n: usize,
}

impl SpectralCertificate {
    pub fn to_certificate(&self) -> StabilityCertificate {
        StabilityCertificate::Lower { method: Method::Spectral, value: self.lower_bound, qualifier: None }
    }
}

/// `W = (3/(2+d))^{1/2} ΦΦᵀ/d + (3/2)^{1/2} (I - ΦΦᵀ/d)` where `Φ` is the
/// vectorised `d x d` identity.
pub fn w_matrix(d: usize) -> Matrix {
    let (a, b) = w_coefficients(d);
    let dd = d * d;
    let phi = |k: usize| if k / d == k % d { 1.0 } else { 0.0 };
    Matrix::from_fn(dd, dd, |i, j| {
        let p = phi(i) * phi(j) / d as f64;
        a * p + b * ((if i == j { 1.0 } else { 0.0 }) - p)
    })
}

fn w_coefficients(d: usize) -> (f64, f64) {
    ((3.0 / (2.0 + d as f64)).sqrt(), 1.5f64.sqrt())
}

/// Whitened samples `Σ^{-1/2} Xᵢ` (as rows), residuals, β and `(Σ⁻¹)ₜₜ`.
struct Whitened {
    z: Matrix,
    resid: Vec<f64>,
    beta: Vec<f64>,
    sigma_inv_tt: f64,
    sigma: Matrix,
}

fn whiten(ds: &Dataset) -> Result<Whitened, SpectralError> {
    let n = ds.n();
    let x = ds.x();
    let sigma = x.gram().scale(1.0 / n as f64);
    let cond = linalg::sym_condition(&sigma)?;
    if !(cond <= MAX_CONDITION) {
        return Err(SpectralError::SingularCovariance(cond));
    }
    let s = linalg::sym_inv_sqrt(&sigma)?;
    let sigma_inv = linalg::sym_pinv(&sigma)?;
    let fit = linalg::ols_fit(x, ds.y());
    let resid = (0..n).map(|i| linalg::dot(x.row(i), &fit.beta) - ds.y()[i]).collect();
    // Rows of X Σ^{-1/2} are the whitened samples (Σ^{-1/2} is symmetric).
    let z = x.matmul(&s);
    Ok(Whitened { z, resid, beta: fit.beta, sigma_inv_tt: sigma_inv.get(ds.target(), ds.target()), sigma })
}

pub fn spectral_lower_bound(ds: &Dataset) -> Result<SpectralCertificate, SpectralError> {
    let n = ds.n();
    let d = ds.d();
    let wh = whiten(ds)?;

    // Σ^{-1/2} M1 has columns zᵢ rᵢ.
    let m1 = Matrix::from_fn(d, n, |a, i| wh.z.get(i, a) * wh.resid[i]);
    let c1 = linalg::spectral_norm(&m1) / (n as f64).sqrt();

    // W (zᵢ ⊗ zᵢ) = b (zᵢ ⊗ zᵢ) + (a - b) |zᵢ|² Φ / d.
    let (wa, wb) = w_coefficients(d);
    let mut wm2 = Matrix::zeros(d * d, n);
    for i in 0..n {
        let zi = wh.z.row(i);
        let nz = linalg::dot(zi, zi);
        for p in 0..d {
            for q in 0..d {
                let mut v = wb * zi[p] * zi[q];
                if p == q {
                    v += (wa - wb) * nz / d as f64;
                }
                wm2.set(p * d + q, i, v);
            }
        }
    }
    let c2 = linalg::spectral_norm(&wm2) / (n as f64).sqrt();

    let scale = linalg::norm2(ds.y()) / linalg::norm2(&ds.x().column(ds.target()));
    let bt = snap_zero(wh.beta[ds.target()], scale);
    let (epsilon, epsilon_unsquared) = if bt == 0.0 {
        (0.0, 0.0)
    } else {
        let denom = c1 * wh.sigma_inv_tt.sqrt() + c2 * bt.abs();
        ((bt * bt / (denom * denom)).min(1.0), bt * bt / denom)
    };
    let lower_bound = ((epsilon * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    Ok(SpectralCertificate { c1, c2, epsilon, epsilon_unsquared, lower_bound, beta_target: wh.beta[ds.target()], n })
}

/// Fixed seed for the random directions in [`verify_envelope_constants`].
pub const ENVELOPE_SEED: u64 = 0x5eed;

/// Checks both envelope inequalities with constants `C1²` and `C2²` along
/// `trials` random unit directions, the eigenvectors of `Σ`, and the top
/// direction of the first inequality. Returns `false` on any violation beyond
/// a `1e-9` relative slack.
pub fn verify_envelope_constants(ds: &Dataset, c1: f64, c2: f64, trials: usize) -> bool {
    let Ok(wh) = whiten(ds) else {
        return false;
    };
    let n = ds.n() as f64;
    let d = ds.d();
    let x = ds.x();
    let check = |v: &[f64]| -> bool {
        let quad = linalg::dot(v, &wh.sigma.matvec(v));
        let (mut lhs1, mut lhs2) = (0.0, 0.0);
        for i in 0..ds.n() {
            let p = linalg::dot(x.row(i), v);
            let p2 = p * p;
            lhs1 += p2 * wh.resid[i] * wh.resid[i];
            lhs2 += p2 * p2;
        }
        lhs1 /= n;
        lhs2 /= n;
        let rhs1 = c1 * c1 * quad;
        let rhs2 = c2 * c2 * quad * quad;
        lhs1 <= rhs1 * (1.0 + 1e-9) + 1e-300 && lhs2 <= rhs2 * (1.0 + 1e-9) + 1e-300
    };

    let mut directions: Vec<Vec<f64>> = Vec::new();
    if let Ok((_, vecs)) = linalg::sym_eigen(&wh.sigma) {
        directions.extend((0..d).map(|j| vecs.column(j)));
    }
    // Top direction of the first inequality: v = Σ^{-1/2} u with u the top left
    // singular vector of Σ^{-1/2} M1.
    let m1 = Matrix::from_fn(d, ds.n(), |a, i| wh.z.get(i, a) * wh.resid[i]);
    let (_, u) = linalg::power_iteration(&m1.outer_gram());
    if let Ok(s) = linalg::sym_inv_sqrt(&wh.sigma) {
        directions.push(s.matvec(&u));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ENVELOPE_SEED);
    for _ in 0..trials {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nv = linalg::norm2(&v);
        v.iter_mut().for_each(|a| *a /= nv);
        directions.push(v);
    }
    directions.iter().all(|v| check(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_4d;

    #[test]
    fn w_inverts_the_fourth_moment_form() {
        for d in 1..=6 {
            let dd = d * d;
            let w = w_matrix(d);
            let phi: Vec<f64> = (0..dd).map(|k| if k / d == k % d { 1.0 } else { 0.0 }).collect();
            let form = Matrix::from_fn(dd, dd, |i, j| (if i == j { 2.0 / 3.0 } else { 0.0 }) + phi[i] * phi[j] / 3.0);
            let prod = w.matmul(&w).matmul(&form);
            assert!(prod.sub(&Matrix::identity(dd)).max_abs() <= 1e-10, "d = {d}");
        }
        assert_eq!(w_matrix(1).as_slice(), &[1.0]);
    }

    #[test]
    fn zero_coefficient_gives_zero_bound() {
        let x = Matrix::from_rows(&[[1.0, -1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        let ds = Dataset::new(x, vec![1.0, 1.0, 1.0], vec!["c".into(), "x".into()], 1, Some(0)).unwrap();
        let cert = spectral_lower_bound(&ds).unwrap();
        assert_eq!((cert.epsilon, cert.lower_bound), (0.0, 0));
    }

    #[test]
    fn singular_covariance_is_rejected() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let ds = Dataset::new(x, vec![1.0, 2.0, 3.0], vec!["a".into(), "b".into()], 0, None).unwrap();
        assert!(matches!(spectral_lower_bound(&ds), Err(SpectralError::SingularCovariance(_))));
    }

    #[test]
    fn constants_pass_and_halved_c1_fails() {
        let ds = synth_4d(200, 5);
        let cert = spectral_lower_bound(&ds).unwrap();
        assert!(verify_envelope_constants(&ds, cert.c1, cert.c2, 2000));
        assert!(!verify_envelope_constants(&ds, cert.c1 / 2.0, cert.c2, 0));
        assert!(!verify_envelope_constants(&ds, cert.c1, cert.c2 / 2.0, 2000));
    }

    #[test]
    fn zero_residuals_give_zero_c1() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let ds = Dataset::new(x, vec![2.0, 3.0, 5.0], vec!["a".into(), "b".into()], 0, None).unwrap();
        let cert = spectral_lower_bound(&ds).unwrap();
        assert!(cert.c1 < 1e-12);
        assert!(verify_envelope_constants(&ds, cert.c1, cert.c2, 100));
    }

    #[test]
    fn epsilon_is_scale_invariant() {
        let ds = synth_4d(60, 2);
        let c = 7.5;
        let scaled = Dataset::new(ds.x().scale(c), ds.y().iter().map(|v| v * c).collect(), ds.column_names().to_vec(), 0, None).unwrap();
        let a = spectral_lower_bound(&ds).unwrap().epsilon;
        let b = spectral_lower_bound(&scaled).unwrap().epsilon;
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn sigma_inverse_diagonal_routes_agree() {
        let ds = synth_4d(50, 4);
        let sigma = ds.x().gram().scale(1.0 / 50.0);
        let s = linalg::sym_inv_sqrt(&sigma).unwrap();
        let e0 = s.column(0);
        let via_sqrt = linalg::norm2(&e0);
        let via_inv = linalg::sym_pinv(&sigma).unwrap().get(0, 0).sqrt();
        assert!((via_sqrt - via_inv).abs() <= 1e-10 * via_inv);
    }
}
