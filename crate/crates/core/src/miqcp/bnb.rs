//! Spatial branch-and-bound over McCormick relaxations.
//!
//! Nodes are processed best bound first (ties: deeper first, then creation
//! order). The dual bound is the larger of the best feasible objective and the
//! best open-node bound, so it never increases during a run.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::lp::{solve_lp, LpOutcome};
use super::model::{BilinearModel, Mode};
use super::relax::{mccormick_relax, BnBNode, Product, Relaxation};
use super::round::{fractional_line_search, round_and_verify, weighted_target, FractionalPoint, ROUND_TOL};
use crate::certificate::UpperBound;
use crate::data::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct BnbConfig {
    pub time_limit: Duration,
    pub node_limit: usize,
    /// Fractional mode: nodes whose bound is within this of the incumbent are pruned.
    pub gap_tol: f64,
    /// Integral mode: coefficient intervals wider than this fraction of the
    /// root interval are split before weights are branched to {0, 1}.
    pub beta_split_width: f64,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self { time_limit: Duration::from_secs(10), node_limit: usize::MAX, gap_tol: 1e-3, beta_split_width: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbStatus {
    /// The open-node set emptied: the dual bound is the model optimum.
    Optimal,
    TimeLimit,
    NodeLimit,
}

/// Best point found. In integral mode `certificate` is the verified removal
/// set; in fractional mode the point carries fractional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub objective: f64,
    pub w: Vec<f64>,
    pub beta: Vec<f64>,
    pub certificate: Option<UpperBound>,
}

#[derive(Debug, Clone)]
pub struct BnbOutcome {
    pub status: BnbStatus,
    /// Upper bound on the model optimum (within the coefficient box).
    pub dual_bound: f64,
    /// Best objective of any model-feasible point seen, including points whose
    /// kept set leaves the audited coefficient unidentified.
    pub best_objective: f64,
    pub incumbent: Option<Incumbent>,
    pub nodes: usize,
    /// Dual bound after every processed node.
    pub dual_trace: Vec<f64>,
}

struct Queued(BnBNode);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .bound
            .total_cmp(&other.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

/// Dataset view of the model (audited column last, oriented response), used
/// to verify rounded weights.
pub fn model_dataset(model: &BilinearModel) -> Dataset {
    let names = (0..model.d()).map(|j| format!("c{j}")).collect();
    Dataset::new(model.x.clone(), model.y.clone(), names, model.d() - 1, None).expect("model data is valid")
}

struct Search<'a> {
    model: &'a BilinearModel,
    ds: Dataset,
    cfg: &'a BnbConfig,
    best: f64,
    /// Largest bound among nodes discarded within the fractional gap tolerance.
    pruned: f64,
    incumbent: Option<Incumbent>,
}

impl Search<'_> {
    fn integral(&self) -> bool {
        self.model.mode == Mode::Integral
    }

    /// Whether a node with this bound can be discarded; records the bound
    /// when the discard relies on the gap tolerance.
    fn prune(&mut self, bound: f64) -> bool {
        if self.integral() {
            (bound + 1e-6).floor() <= self.best
        } else if bound <= self.best + self.cfg.gap_tol {
            self.pruned = self.pruned.max(bound);
            true
        } else {
            false
        }
    }

    fn offer_integral(&mut self, w: &[f64]) {
        if let Some(cert) = round_and_verify(&self.ds, w) {
            let obj = (self.model.n() - cert.size()) as f64;
            if obj > self.best || self.incumbent.is_none() {
                let keep: Vec<f64> = cert.removed().keep_weights(self.model.n());
                let beta = weighted_target(self.model, &keep).map(|(_, b)| b).unwrap_or_default();
                self.best = self.best.max(obj);
                if self.incumbent.as_ref().is_none_or(|inc| obj > inc.objective) {
                    self.incumbent = Some(Incumbent { objective: obj, w: keep, beta, certificate: Some(cert) });
                }
            }
        }
    }

    fn offer_fractional(&mut self, p: FractionalPoint) {
        if self.incumbent.as_ref().is_none_or(|inc| p.objective > inc.objective) {
            self.best = self.best.max(p.objective);
            let certificate = round_and_verify(&self.ds, &p.w);
            self.incumbent = Some(Incumbent { objective: p.objective, w: p.w, beta: p.beta, certificate });
        }
    }
}

/// Runs the search. `warm_start` is an optional removal set (row indices)
/// used as the first incumbent when it verifies.
pub fn branch_and_bound(model: &BilinearModel, cfg: &BnbConfig, warm_start: Option<&[usize]>) -> BnbOutcome {
    let start = Instant::now();
    let n = model.n();
    let mut s = Search { model, ds: model_dataset(model), cfg, best: f64::NEG_INFINITY, pruned: f64::NEG_INFINITY, incumbent: None };

    if let Some(removed) = warm_start {
        let mut w = vec![1.0; n];
        for &i in removed {
            w[i] = 0.0;
        }
        if s.integral() {
            s.offer_integral(&w);
        } else if let Some(p) = fractional_line_search(model, &w) {
            s.offer_fractional(p);
        }
    }
    if !s.integral() {
        // The all-zero weights are always feasible for the fractional program
        // unless the safeguard excludes them.
        if !model.safeguard {
            s.best = s.best.max(0.0);
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Queued(BnBNode::root(model)));
    let mut next_id = 1u64;
    let mut nodes = 0usize;
    let mut trace = Vec::new();
    let mut status = BnbStatus::Optimal;

    while let Some(Queued(node)) = heap.peek().map(|q| Queued(q.0.clone())) {
        if s.prune(node.bound) {
            heap.pop();
            continue;
        }
        if nodes >= cfg.node_limit {
            status = BnbStatus::NodeLimit;
            break;
        }
        if start.elapsed() >= cfg.time_limit {
            status = BnbStatus::TimeLimit;
            break;
        }
        heap.pop();
        nodes += 1;
        let children = process(&mut s, &node);
        for (mut child, bound) in children {
            child.bound = bound;
            child.depth = node.depth + 1;
            child.id = next_id;
            next_id += 1;
            heap.push(Queued(child));
        }
        let open = heap.peek().map_or(f64::NEG_INFINITY, |q| q.0.bound);
        trace.push(dual_of(&s, open));
    }
    let open = heap.iter().map(|q| q.0.bound).fold(f64::NEG_INFINITY, f64::max);
    let dual_bound = dual_of(&s, open);
    if heap.is_empty() {
        status = BnbStatus::Optimal;
    }
    BnbOutcome { status, dual_bound, best_objective: s.best, incumbent: s.incumbent, nodes, dual_trace: trace }
}

fn dual_of(s: &Search<'_>, open: f64) -> f64 {
    let raw = s.best.max(open).max(s.pruned);
    if s.integral() {
        (raw + 1e-6).floor()
    } else {
        raw
    }
}

/// Solves one node; returns children with their inherited bounds.
fn process(s: &mut Search<'_>, node: &BnBNode) -> Vec<(BnBNode, f64)> {
    let model = s.model;
    let relax = mccormick_relax(node, model);
    let (value, x) = match solve_lp(&relax.lp) {
        LpOutcome::Infeasible => return Vec::new(),
        LpOutcome::Optimal { value, x } => (value.min(node.bound), x),
        LpOutcome::Unbounded | LpOutcome::Failed(_) => {
            log::warn!("node {} LP failed; splitting the widest interval", node.id);
            return split_widest(node, model).into_iter().map(|c| (c, node.bound)).collect();
        }
    };
    if s.prune(value) {
        return Vec::new();
    }
    let w: Vec<f64> = relax.w_vars.iter().map(|&v| x[v].clamp(0.0, 1.0)).collect();
    let beta: Vec<f64> = relax.beta_vars.iter().map(|&v| x[v]).collect();

    if s.integral() {
        s.offer_integral(&w);
    } else if weighted_target(model, &w).is_some_and(|(c, _)| c <= 0.0) {
        if let Some(p) = fractional_line_search(model, &w) {
            s.offer_fractional(p);
        }
    }

    let (pair, viol) = max_violation(&relax, &x, &w, &beta);
    let fractional_w = most_fractional(&w, node);

    if s.integral() {
        if fractional_w.is_none() {
            // Pin the weights to their rounded values; the LP is then exact in β.
            let mut pinned = node.clone();
            for (i, v) in w.iter().enumerate() {
                pinned.w_lo[i] = v.round();
                pinned.w_hi[i] = v.round();
            }
            if matches!(solve_lp(&mccormick_relax(&pinned, model).lp), LpOutcome::Optimal { .. }) {
                s.best = s.best.max(w.iter().map(|v| v.round()).sum());
                return Vec::new();
            }
            return match (0..w.len()).filter(|&i| node.w_lo[i] < node.w_hi[i]).max_by(|&a, &b| {
                let fa = w[a].min(1.0 - w[a]);
                let fb = w[b].min(1.0 - w[b]);
                fa.total_cmp(&fb).then(b.cmp(&a))
            }) {
                Some(i) => branch_w(node, i).into_iter().map(|c| (c, value)).collect(),
                None => Vec::new(),
            };
        }
        let viol_tol = 1e-9 * model.beta_box;
        if let Some((i, j)) = pair.filter(|_| viol > viol_tol) {
            let rel = (node.b_hi[j] - node.b_lo[j]) / (2.0 * model.beta_box);
            let w_free = node.w_lo[i] < node.w_hi[i] && w[i] > ROUND_TOL && w[i] < 1.0 - ROUND_TOL;
            if rel > s.cfg.beta_split_width || !w_free {
                return split_beta(node, j, beta[j]).into_iter().map(|c| (c, value)).collect();
            }
            return branch_w(node, i).into_iter().map(|c| (c, value)).collect();
        }
        let i = fractional_w.expect("checked above");
        branch_w(node, i).into_iter().map(|c| (c, value)).collect()
    } else {
        // For fixed β the program is an LP in w, so splitting coefficient
        // intervals alone closes the gap.
        if let Some(p) = fixed_beta_point(model, node, &beta) {
            if p.objective > s.best {
                s.offer_fractional(p);
            }
        }
        if s.prune(value) {
            return Vec::new();
        }
        let widest = (0..beta.len()).max_by(|&a, &b| {
            (node.b_hi[a] - node.b_lo[a]).total_cmp(&(node.b_hi[b] - node.b_lo[b])).then(b.cmp(&a))
        });
        let j = match (pair, widest) {
            (Some((_, j)), _) if viol > 1e-9 * model.beta_box => j,
            (_, Some(j)) => j,
            (_, None) => {
                // No coefficients: the relaxation is the program itself.
                s.best = s.best.max(value);
                return Vec::new();
            }
        };
        if node.b_hi[j] - node.b_lo[j] <= 1e-12 * model.beta_box {
            // Nothing left to split: keep the node's bound in the dual.
            s.pruned = s.pruned.max(value);
            return Vec::new();
        }
        split_beta(node, j, beta[j]).into_iter().map(|c| (c, value)).collect()
    }
}

/// Exact optimum over w with the coefficients pinned at `beta`.
fn fixed_beta_point(model: &BilinearModel, node: &BnBNode, beta: &[f64]) -> Option<FractionalPoint> {
    let mut pinned = node.clone();
    pinned.b_lo = beta.to_vec();
    pinned.b_hi = beta.to_vec();
    let relax = mccormick_relax(&pinned, model);
    match solve_lp(&relax.lp) {
        LpOutcome::Optimal { x, .. } => {
            let w: Vec<f64> = relax.w_vars.iter().map(|&v| x[v].clamp(0.0, 1.0)).collect();
            let scale = 1.0 + model.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if model.stationarity(&w, beta).iter().any(|r| r.abs() > 1e-7 * scale * model.n() as f64) {
                return None;
            }
            Some(FractionalPoint { objective: w.iter().sum(), w, beta: beta.to_vec() })
        }
        _ => None,
    }
}

/// Pair `(i, j)` with the largest `|z - wᵢ βⱼ|`, ties by index.
fn max_violation(relax: &Relaxation, x: &[f64], w: &[f64], beta: &[f64]) -> (Option<(usize, usize)>, f64) {
    let p = beta.len();
    let mut best = (None, 0.0);
    for i in 0..w.len() {
        for j in 0..p {
            if !matches!(relax.products[i * p + j], Product::Aux(_)) {
                continue;
            }
            let v = (relax.product_value(x, i, j) - w[i] * beta[j]).abs();
            if v > best.1 {
                best = (Some((i, j)), v);
            }
        }
    }
    best
}

/// Unfixed weight furthest from {0, 1}, ties by index.
fn most_fractional(w: &[f64], node: &BnBNode) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in w.iter().enumerate() {
        if node.w_lo[i] == node.w_hi[i] {
            continue;
        }
        let f = v.min(1.0 - v);
        if f > ROUND_TOL && best.is_none_or(|(_, b)| f > b) {
            best = Some((i, f));
        }
    }
    best.map(|(i, _)| i)
}

fn clamp_split(lo: f64, hi: f64, v: f64) -> f64 {
    let width = hi - lo;
    v.clamp(lo + 0.1 * width, hi - 0.1 * width)
}

fn split_beta(node: &BnBNode, j: usize, at: f64) -> [BnBNode; 2] {
    let cut = clamp_split(node.b_lo[j], node.b_hi[j], at);
    let mut left = node.clone();
    let mut right = node.clone();
    left.b_hi[j] = cut;
    right.b_lo[j] = cut;
    [left, right]
}

fn split_w(node: &BnBNode, i: usize, at: f64) -> [BnBNode; 2] {
    let cut = clamp_split(node.w_lo[i], node.w_hi[i], at);
    let mut left = node.clone();
    let mut right = node.clone();
    left.w_hi[i] = cut;
    right.w_lo[i] = cut;
    [left, right]
}

fn branch_w(node: &BnBNode, i: usize) -> [BnBNode; 2] {
    let mut zero = node.clone();
    let mut one = node.clone();
    zero.w_lo[i] = 0.0;
    zero.w_hi[i] = 0.0;
    one.w_lo[i] = 1.0;
    one.w_hi[i] = 1.0;
    [zero, one]
}

fn split_widest(node: &BnBNode, model: &BilinearModel) -> Vec<BnBNode> {
    let mut best: Option<(bool, usize, f64)> = None;
    for i in 0..node.w_lo.len() {
        let r = node.w_hi[i] - node.w_lo[i];
        if best.is_none_or(|(_, _, b)| r > b) {
            best = Some((true, i, r));
        }
    }
    for j in 0..node.b_lo.len() {
        let r = (node.b_hi[j] - node.b_lo[j]) / (2.0 * model.beta_box);
        if best.is_none_or(|(_, _, b)| r > b) {
            best = Some((false, j, r));
        }
    }
    match best {
        Some((_, _, r)) if r <= 1e-12 => Vec::new(),
        Some((true, i, _)) => {
            let mid = 0.5 * (node.w_lo[i] + node.w_hi[i]);
            split_w(node, i, mid).to_vec()
        }
        Some((false, j, _)) => {
            let mid = 0.5 * (node.b_lo[j] + node.b_hi[j]);
            split_beta(node, j, mid).to_vec()
        }
        None => Vec::new(),
    }
}
