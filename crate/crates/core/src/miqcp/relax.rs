//! McCormick relaxation of the bilinear program over a box of weights and
//! coefficients.

use super::lp::{LpProblem, RowOp};
use super::model::BilinearModel;

/// The four McCormick planes for `z = x y` over `[xl, xu] x [yl, yu]`, each as
/// `(coef_x, coef_y, constant)` meaning `z >= ...` (first two) or `z <= ...`
/// (last two) of `coef_x x + coef_y y + constant`.
pub fn mccormick_planes(xl: f64, xu: f64, yl: f64, yu: f64) -> [(f64, f64, f64); 4] {
    [(yl, xl, -xl * yl), (yu, xu, -xu * yu), (yl, xu, -xu * yl), (yu, xl, -xl * yu)]
}

/// Range of `z` allowed by the planes at the point `(x, y)`.
pub fn envelope_at(xl: f64, xu: f64, yl: f64, yu: f64, x: f64, y: f64) -> (f64, f64) {
    let p = mccormick_planes(xl, xu, yl, yu);
    let eval = |(a, b, c): (f64, f64, f64)| a * x + b * y + c;
    (eval(p[0]).max(eval(p[1])), eval(p[2]).min(eval(p[3])))
}

/// A branch-and-bound node: interval bounds on every weight and coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BnBNode {
    pub w_lo: Vec<f64>,
    pub w_hi: Vec<f64>,
    pub b_lo: Vec<f64>,
    pub b_hi: Vec<f64>,
    /// Upper bound on the objective inside this box (inherited from the parent LP).
    pub bound: f64,
    pub depth: usize,
    pub id: u64,
}

impl BnBNode {
    pub fn root(model: &BilinearModel) -> Self {
        let p = model.n_beta();
        let (b_lo, b_hi) = (0..p).map(|j| model.beta_bounds(j)).unzip();
        Self { w_lo: vec![0.0; model.n()], w_hi: vec![1.0; model.n()], b_lo, b_hi, bound: model.n() as f64, depth: 0, id: 0 }
    }
}

/// How the product `wᵢ βⱼ` appears in the LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Product {
    /// Auxiliary variable bounded by the McCormick planes.
    Aux(usize),
    /// `wᵢ` is fixed: the product is `c βⱼ`.
    WFixed(f64),
    /// `βⱼ` is fixed: the product is `c wᵢ`.
    BetaFixed(f64),
}

/// LP relaxation of a node with the variable layout needed to read it back.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub lp: LpProblem,
    pub w_vars: Vec<usize>,
    pub beta_vars: Vec<usize>,
    /// `products[i * p + j]` for `wᵢ βⱼ`.
    pub products: Vec<Product>,
}

impl Relaxation {
    pub fn product_value(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let p = self.beta_vars.len();
        match self.products[i * p + j] {
            Product::Aux(v) => x[v],
            Product::WFixed(c) => c * x[self.beta_vars[j]],
            Product::BetaFixed(c) => c * x[self.w_vars[i]],
        }
    }
}

pub fn mccormick_relax(node: &BnBNode, model: &BilinearModel) -> Relaxation {
    let n = model.n();
    let d = model.d();
    let p = model.n_beta();
    let mut lp = LpProblem::default();
    let w_vars: Vec<usize> = (0..n).map(|i| lp.add_var(1.0, node.w_lo[i], node.w_hi[i])).collect();
    let beta_vars: Vec<usize> = (0..p).map(|j| lp.add_var(0.0, node.b_lo[j], node.b_hi[j])).collect();

    // Stationarity rows accumulate coefficients per variable.
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut products = Vec::with_capacity(n * p);
    let mut envelopes = Vec::new();
    for i in 0..n {
        let (wl, wu) = (node.w_lo[i], node.w_hi[i]);
        for j in 0..p {
            let (bl, bu) = (node.b_lo[j], node.b_hi[j]);
            let prod = if wl == wu {
                Product::WFixed(wl)
            } else if bl == bu {
                Product::BetaFixed(bl)
            } else {
                let corners = [wl * bl, wl * bu, wu * bl, wu * bu];
                let zlo = corners.iter().copied().fold(f64::INFINITY, f64::min);
                let zhi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z = lp.add_var(0.0, zlo, zhi);
                envelopes.push((z, w_vars[i], beta_vars[j], wl, wu, bl, bu));
                Product::Aux(z)
            };
            products.push(prod);
        }
    }
    let nv = lp.n_vars();
    for row in rows.iter_mut() {
        row.resize(nv, 0.0);
    }
    for i in 0..n {
        for (r, row) in rows.iter_mut().enumerate() {
            row[w_vars[i]] += model.linear_coef(r, i);
            for j in 0..p {
                let c = model.bilinear_coef(r, i, j);
                if c == 0.0 {
                    continue;
                }
                match products[i * p + j] {
                    Product::Aux(z) => row[z] += c,
                    Product::WFixed(v) => row[beta_vars[j]] += c * v,
                    Product::BetaFixed(v) => row[w_vars[i]] += c * v,
                }
            }
        }
    }
    for row in rows {
        let coefs: Vec<(usize, f64)> = row.into_iter().enumerate().filter(|(_, c)| *c != 0.0).collect();
        lp.add_row(coefs, RowOp::Eq, 0.0);
    }
    for (z, w, b, wl, wu, bl, bu) in envelopes {
        let planes = mccormick_planes(wl, wu, bl, bu);
        for (k, (cw, cb, c0)) in planes.into_iter().enumerate() {
            // z - cw w - cb b (>= or <=) c0
            let op = if k < 2 { RowOp::Ge } else { RowOp::Le };
            lp.add_row(vec![(z, 1.0), (w, -cw), (b, -cb)], op, c0);
        }
    }
    if model.safeguard {
        lp.add_row(w_vars.iter().map(|&v| (v, 1.0)).collect(), RowOp::Ge, 1.0);
    }
    Relaxation { lp, w_vars, beta_vars, products }
}
