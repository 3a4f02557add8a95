//! Small LP representation solved with the `microlp` simplex.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub rhs: f64,
}

/// `maximize objᵀx` subject to rows and `lo <= x <= hi`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub obj: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
    /// The solver gave up; no bound can be drawn from this LP.
    Failed(String),
}

impl LpProblem {
    pub fn add_var(&mut self, obj: f64, lo: f64, hi: f64) -> usize {
        self.obj.push(obj);
        self.lo.push(lo);
        self.hi.push(hi);
        self.obj.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, op: RowOp, rhs: f64) {
        self.rows.push(LpRow { coefs, op, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.obj.len()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lo[j] - v).max(v - self.hi[j]);
        }
        for r in &self.rows {
            let lhs: f64 = r.coefs.iter().map(|&(j, c)| c * x[j]).sum();
            let viol = match r.op {
                RowOp::Le => lhs - r.rhs,
                RowOp::Ge => r.rhs - lhs,
                RowOp::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Maximises the LP. Variable bounds must be finite.
pub fn solve_lp(lp: &LpProblem) -> LpOutcome {
    if lp.lo.iter().zip(&lp.hi).any(|(l, h)| l > h) {
        return LpOutcome::Infeasible;
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..lp.n_vars()).map(|j| p.add_var(lp.obj[j], (lp.lo[j], lp.hi[j]))).collect();
    for r in &lp.rows {
        let op = match r.op {
            RowOp::Le => ComparisonOp::Le,
            RowOp::Ge => ComparisonOp::Ge,
            RowOp::Eq => ComparisonOp::Eq,
        };
        let expr: Vec<_> = r.coefs.iter().filter(|(_, c)| *c != 0.0).map(|&(j, c)| (vars[j], c)).collect();
        if expr.is_empty() {
            let ok = match r.op {
                RowOp::Le => 0.0 <= r.rhs + 1e-9,
                RowOp::Ge => 0.0 >= r.rhs - 1e-9,
                RowOp::Eq => r.rhs.abs() <= 1e-9,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        p.add_constraint(expr.as_slice(), op, r.rhs);
    }
    match p.solve() {
        Ok(outcome) => match outcome.into_solution() {
            Ok(sol) => {
                let x = vars.iter().map(|&v| sol.var_value(v)).collect();
                LpOutcome::Optimal { value: sol.objective(), x }
            }
            Err(_) => LpOutcome::Failed("interrupted".into()),
        },
        Err(microlp::Error::Infeasible) => LpOutcome::Infeasible,
        Err(microlp::Error::Unbounded) => LpOutcome::Unbounded,
        Err(e) => LpOutcome::Failed(e.to_string()),
    }
}
