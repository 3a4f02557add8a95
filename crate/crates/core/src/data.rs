//! Datasets, CSV ingestion, synthetic generators and the specialised views used
//! by the exact auditors.

use std::fmt;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix};

pub const INTERCEPT_NAME: &str = "intercept";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot parse {text:?} as a finite number (row {row}, column {column:?})")]
    Parse { row: usize, column: String, text: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("not a binary treatment design: {0}")]
    NotBinaryTreatment(String),
    #[error("{0} group is empty")]
    EmptyGroup(&'static str),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Sign normalisation of the audited coefficient. After orientation the
/// full-data coefficient is nonnegative and a "flip" means driving it to `<= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    /// Zero counts as positive: the coefficient is then already flipped.
    pub fn of(coef: f64) -> Self {
        if coef < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        v * self.sign()
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Positive => "+",
            Orientation::Negative => "-",
        })
    }
}

/// Coefficients below `1e-12` of their natural scale (`|y| / |x_target|`) are
/// treated as exactly zero, so round-off cannot decide the orientation.
pub fn snap_zero(coef: f64, scale: f64) -> f64 {
    if coef.abs() <= 1e-12 * scale {
        0.0
    } else {
        coef
    }
}

/// A set of removed row (or individual) indices, sorted and unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, serde::Serialize)]
#[serde(transparent)]
pub struct SubsetMask {
    removed: Vec<usize>,
}

impl SubsetMask {
    pub fn new(mut removed: Vec<usize>, n: usize) -> Result<Self, DataError> {
        removed.sort_unstable();
        if removed.windows(2).any(|w| w[0] == w[1]) {
            return Err(DataError::Invalid("duplicate index in removal set".into()));
        }
        if let Some(&last) = removed.last() {
            if last >= n {
                return Err(DataError::Invalid(format!("removal index {last} out of range for n = {n}")));
            }
        }
        Ok(Self { removed })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn indices(&self) -> &[usize] {
        &self.removed
    }

    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.removed.binary_search(&i).is_ok()
    }

    /// Kept indices in increasing order.
    pub fn kept(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n.saturating_sub(self.removed.len()));
        let mut r = self.removed.iter().peekable();
        for i in 0..n {
            if r.peek() == Some(&&i) {
                r.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    /// 0/1 weights with zeros at removed positions.
    pub fn keep_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![1.0; n];
        for &i in &self.removed {
            w[i] = 0.0;
        }
        w
    }
}

/// Design matrix, response and the audited coefficient.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    column_names: Vec<String>,
    response_name: String,
    target: usize,
    intercept: Option<usize>,
}

impl Dataset {
    /// `intercept` flags an existing all-ones column.
    pub fn new(
        x: Matrix,
        y: Vec<f64>,
        column_names: Vec<String>,
        target: usize,
        intercept: Option<usize>,
    ) -> Result<Self, DataError> {
        if x.rows() != y.len() {
            return Err(DataError::Invalid(format!("{} design rows but {} responses", x.rows(), y.len())));
        }
        if x.cols() == 0 {
            return Err(DataError::Invalid("design has no columns".into()));
        }
        if column_names.len() != x.cols() {
            return Err(DataError::Invalid(format!("{} column names for {} columns", column_names.len(), x.cols())));
        }
        if target >= x.cols() {
            return Err(DataError::Invalid(format!("target index {target} out of range for d = {}", x.cols())));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!("non-finite response at row {pos}")));
        }
        if let Some(c) = intercept {
            if c >= x.cols() || (0..x.rows()).any(|i| x.get(i, c) != 1.0) {
                return Err(DataError::Invalid(format!("column {c} flagged as intercept is not all ones")));
            }
        }
        Ok(Self { x, y, column_names, response_name: "y".into(), target, intercept })
    }

    /// Builds a dataset from covariate columns, appending an intercept column last
    /// when requested. `target` indexes the covariates.
    pub fn from_covariates(
        covariates: Matrix,
        y: Vec<f64>,
        mut names: Vec<String>,
        target: usize,
        intercept: bool,
    ) -> Result<Self, DataError> {
        if !intercept {
            return Self::new(covariates, y, names, target, None);
        }
        let n = covariates.rows();
        let c = covariates.cols();
        let x = Matrix::from_fn(n, c + 1, |i, j| if j < c { covariates.get(i, j) } else { 1.0 });
        names.push(INTERCEPT_NAME.to_string());
        Self::new(x, y, names, target, Some(c))
    }

    pub fn with_response_name(mut self, name: impl Into<String>) -> Self {
        self.response_name = name.into();
        self
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn target_name(&self) -> &str {
        &self.column_names[self.target]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept.is_some()
    }

    pub fn intercept_column(&self) -> Option<usize> {
        self.intercept
    }

    /// Same data with every response multiplied by `c`.
    pub fn scaled_response(&self, c: f64) -> Dataset {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Same data with rows reordered: row `i` of the result is row `perm[i]`.
    pub fn permuted_rows(&self, perm: &[usize]) -> Dataset {
        let mut out = self.clone();
        out.x = self.x.select_rows(perm);
        out.y = perm.iter().map(|&i| self.y[i]).collect();
        out
    }

    /// Rows not in `removed`.
    pub fn without(&self, removed: &SubsetMask) -> Dataset {
        let keep = removed.kept(self.n());
        self.permuted_rows(&keep)
    }

    /// Stable content hash (SHA-256 over names and IEEE bits).
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for name in &self.column_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        h.update(self.target.to_le_bytes());
        for v in self.x.as_slice().iter().chain(&self.y) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_cell(text: &str, row: usize, column: &str) -> Result<f64, DataError> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::Parse { row, column: column.to_string(), text: text.to_string() })
}

/// Reads named numeric columns from a CSV file with a header row.
/// Rows are numbered from 1 (the first data row) in parse errors.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).ok_or_else(|| DataError::MissingColumn(c.to_string())))
        .collect::<Result<_, _>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (k, &j) in idx.iter().enumerate() {
            let cell = rec.get(j).unwrap_or("");
            out[k].push(parse_cell(cell, r + 1, columns[k])?);
        }
    }
    Ok(out)
}

fn header_names(path: &Path) -> Result<Vec<String>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

/// Loads a regression dataset. Every column other than the response becomes a
/// covariate (in file order); an intercept column is appended last on request.
pub fn load_csv(path: &Path, target_column: &str, response_column: &str, intercept: bool) -> Result<Dataset, DataError> {
    let names = header_names(path)?;
    if !names.iter().any(|n| n == response_column) {
        return Err(DataError::MissingColumn(response_column.to_string()));
    }
    let covariates: Vec<String> = names.into_iter().filter(|n| n != response_column).collect();
    load_csv_columns(path, target_column, response_column, &covariates, intercept)
}

/// Like [`load_csv`] but with an explicit covariate list.
pub fn load_csv_columns(
    path: &Path,
    target_column: &str,
    response_column: &str,
    covariates: &[String],
    intercept: bool,
) -> Result<Dataset, DataError> {
    let target = covariates
        .iter()
        .position(|c| c == target_column)
        .ok_or_else(|| DataError::MissingColumn(target_column.to_string()))?;
    let mut wanted: Vec<&str> = covariates.iter().map(String::as_str).collect();
    wanted.push(response_column);
    let mut cols = read_columns(path, &wanted)?;
    let y = cols.pop().expect("response column");
    let n = y.len();
    let c = cols.len();
    let x = Matrix::from_fn(n, c, |i, j| cols[j][i]);
    Ok(Dataset::from_covariates(x, y, covariates.to_vec(), target, intercept)?.with_response_name(response_column))
}

/// Writes the non-intercept columns and the response. Values use Rust's
/// shortest round-trip formatting, so [`load_csv`] reproduces them bit for bit.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    let cols: Vec<usize> = (0..ds.d()).filter(|&j| Some(j) != ds.intercept).collect();
    let mut header: Vec<&str> = cols.iter().map(|&j| ds.column_names[j].as_str()).collect();
    header.push(&ds.response_name);
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = cols.iter().map(|&j| format!("{:?}", ds.x.get(i, j))).collect();
        rec.push(format!("{:?}", ds.y[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `n` samples with `x ~ N(0,1)` and `y = -2x + e`, `e ~ N(0,1)`, fitted with an
/// intercept; the audited coefficient is the slope. Variates come from ChaCha8
/// seeded with `seed`, ziggurat normals, drawn as `x_i` then `e_i` per sample.
pub fn synth_2d(n: usize, seed: u64) -> Dataset {
    assert!(n >= 2, "synth_2d needs n >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(-2.0 * xi + e);
    }
    let cov = Matrix::new(n, 1, x).expect("finite normals");
    Dataset::from_covariates(cov, y, vec!["x".into()], 0, true).expect("valid synthetic dataset")
}

/// `n` samples with `X ~ N(0, I_4)` and `y = <(1,1,1,1), X> + e`, no intercept;
/// the audited coefficient is the first. Per sample: four covariates, then `e`.
pub fn synth_4d(n: usize, seed: u64) -> Dataset {
    assert!(n >= 4, "synth_4d needs n >= 4");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(4 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = 0.0;
        for _ in 0..4 {
            let v: f64 = rng.sample(StandardNormal);
            s += v;
            x.push(v);
        }
        let e: f64 = rng.sample(StandardNormal);
        y.push(s + e);
    }
    let cov = Matrix::new(n, 4, x).expect("finite normals");
    let names = (1..=4).map(|j| format!("x{j}")).collect();
    Dataset::from_covariates(cov, y, names, 0, false).expect("valid synthetic dataset")
}

/// Responses split by a single {0,1} treatment, oriented so that the treated
/// mean is at least the control mean.
#[derive(Debug, Clone)]
pub struct BinaryTreatmentView {
    /// Oriented responses of the control group (treatment = 0).
    pub y0: Vec<f64>,
    /// Oriented responses of the treated group (treatment = 1).
    pub y1: Vec<f64>,
    /// Source row of each entry of `y0`.
    pub rows0: Vec<usize>,
    /// Source row of each entry of `y1`.
    pub rows1: Vec<usize>,
    pub orientation: Orientation,
    /// Full-data slope before orientation.
    pub slope: f64,
}

impl BinaryTreatmentView {
    /// View over two response groups; rows are numbered controls first.
    pub fn from_groups(y0: Vec<f64>, y1: Vec<f64>) -> Result<Self, DataError> {
        if y0.is_empty() {
            return Err(DataError::EmptyGroup("control"));
        }
        if y1.is_empty() {
            return Err(DataError::EmptyGroup("treated"));
        }
        let rows0 = (0..y0.len()).collect();
        let rows1 = (y0.len()..y0.len() + y1.len()).collect();
        Ok(Self::oriented(y0, y1, rows0, rows1))
    }

    fn oriented(mut y0: Vec<f64>, mut y1: Vec<f64>, rows0: Vec<usize>, rows1: Vec<usize>) -> Self {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let slope = mean(&y1) - mean(&y0);
        let orientation = Orientation::of(slope);
        if orientation == Orientation::Negative {
            y0.iter_mut().for_each(|v| *v = -*v);
            y1.iter_mut().for_each(|v| *v = -*v);
        }
        Self { y0, y1, rows0, rows1, orientation, slope }
    }

    pub fn n(&self) -> usize {
        self.y0.len() + self.y1.len()
    }

    /// The design as a dataset: treatment column (target) then intercept.
    pub fn to_dataset(&self) -> Dataset {
        let n = self.n();
        let mut t = vec![0.0; n];
        let mut y = vec![0.0; n];
        let s = self.orientation.sign();
        for (k, &r) in self.rows0.iter().enumerate() {
            y[r] = self.y0[k] * s;
        }
        for (k, &r) in self.rows1.iter().enumerate() {
            t[r] = 1.0;
            y[r] = self.y1[k] * s;
        }
        let cov = Matrix::new(n, 1, t).expect("finite");
        Dataset::from_covariates(cov, y, vec!["treatment".into()], 0, true).expect("valid binary dataset")
    }
}

/// Splits a two-column (treatment + intercept) dataset into treatment groups.
pub fn binary_view(ds: &Dataset) -> Result<BinaryTreatmentView, DataError> {
    if ds.d() != 2 {
        return Err(DataError::NotBinaryTreatment(format!("expected 2 columns (treatment + intercept), found {}", ds.d())));
    }
    let x = ds.x();
    let is_ones = |j: usize| (0..ds.n()).all(|i| x.get(i, j) == 1.0);
    let intercept = match ds.intercept_column() {
        Some(c) => c,
        None if is_ones(0) => 0,
        None if is_ones(1) => 1,
        None => return Err(DataError::NotBinaryTreatment("no intercept column".into())),
    };
    let treat = 1 - intercept;
    if ds.target() != treat {
        return Err(DataError::NotBinaryTreatment("the audited coefficient must be the treatment".into()));
    }
    let (mut y0, mut y1, mut rows0, mut rows1) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..ds.n() {
        match x.get(i, treat) {
            v if v == 0.0 => {
                y0.push(ds.y()[i]);
                rows0.push(i);
            }
            v if v == 1.0 => {
                y1.push(ds.y()[i]);
                rows1.push(i);
            }
            v => return Err(DataError::NotBinaryTreatment(format!("treatment value {v} at row {i}"))),
        }
    }
    if y0.is_empty() {
        return Err(DataError::EmptyGroup("control"));
    }
    if y1.is_empty() {
        return Err(DataError::EmptyGroup("treated"));
    }
    Ok(BinaryTreatmentView::oriented(y0, y1, rows0, rows1))
}

/// Two-period panel: one before/after response pair per individual.
#[derive(Debug, Clone)]
pub struct DidPanel {
    pub ids: Vec<String>,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub treated: Vec<bool>,
}

impl DidPanel {
    pub fn new(before: Vec<f64>, after: Vec<f64>, treated: Vec<bool>) -> Result<Self, DataError> {
        let n = before.len();
        if after.len() != n || treated.len() != n {
            return Err(DataError::Invalid("before/after/treated lengths differ".into()));
        }
        if before.iter().chain(&after).any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite response".into()));
        }
        let ids = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { ids, before, after, treated })
    }

    pub fn len(&self) -> usize {
        self.before.len()
    }

    pub fn is_empty(&self) -> bool {
        self.before.is_empty()
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.treated[i]).collect()
    }

    /// The 2N x 4 OLS encoding (intercept, time, treatment, time x treatment);
    /// individual `i` contributes rows `2i` (before) and `2i + 1` (after).
    pub fn design(&self) -> (Matrix, Vec<f64>) {
        self.design_for(&(0..self.len()).collect::<Vec<_>>())
    }

    pub fn design_for(&self, individuals: &[usize]) -> (Matrix, Vec<f64>) {
        let mut data = Vec::with_capacity(individuals.len() * 8);
        let mut y = Vec::with_capacity(individuals.len() * 2);
        for &i in individuals {
            let t = if self.treated[i] { 1.0 } else { 0.0 };
            data.extend_from_slice(&[1.0, 0.0, t, 0.0]);
            data.extend_from_slice(&[1.0, 1.0, t, t]);
            y.push(self.before[i]);
            y.push(self.after[i]);
        }
        (Matrix::new(individuals.len() * 2, 4, data).expect("finite"), y)
    }

    /// Interaction coefficient fitted on the listed individuals, `None` when it
    /// is not identified (a group or period is missing).
    pub fn beta3(&self, individuals: &[usize]) -> Option<f64> {
        let (x, y) = self.design_for(individuals);
        let fit = linalg::ols_fit(&x, &y);
        fit.identifies(3).then(|| fit.beta[3])
    }

    /// `|y| / |x_interaction|` over the stacked encoding.
    pub fn scale(&self) -> f64 {
        let y_norm = self.before.iter().chain(&self.after).map(|v| v * v).sum::<f64>().sqrt();
        y_norm / (self.treated.iter().filter(|&&t| t).count() as f64).sqrt()
    }

    pub fn as_dataset(&self) -> Dataset {
        let (x, y) = self.design();
        let names = vec![INTERCEPT_NAME.into(), "time".into(), "treatment".into(), "time_x_treatment".into()];
        Dataset::new(x, y, names, 3, Some(0)).expect("valid DiD encoding")
    }
}

/// Loads a DiD panel with columns `id, before, after, treated`.
pub fn load_did_csv(path: &Path) -> Result<DidPanel, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.to_string()));
    let (ci, cb, ca, ct) = (col("id")?, col("before")?, col("after")?, col("treated")?);
    let (mut ids, mut before, mut after, mut treated) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        ids.push(rec.get(ci).unwrap_or("").to_string());
        before.push(parse_cell(rec.get(cb).unwrap_or(""), r + 1, "before")?);
        after.push(parse_cell(rec.get(ca).unwrap_or(""), r + 1, "after")?);
        let t = parse_cell(rec.get(ct).unwrap_or(""), r + 1, "treated")?;
        if t != 0.0 && t != 1.0 {
            return Err(DataError::Parse { row: r + 1, column: "treated".into(), text: rec.get(ct).unwrap_or("").into() });
        }
        treated.push(t == 1.0);
    }
    let mut panel = DidPanel::new(before, after, treated)?;
    panel.ids = ids;
    Ok(panel)
}

pub fn write_did_csv(panel: &DidPanel, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "before", "after", "treated"])?;
    for i in 0..panel.len() {
        w.write_record([
            panel.ids[i].clone(),
            format!("{:?}", panel.before[i]),
            format!("{:?}", panel.after[i]),
            if panel.treated[i] { "1".into() } else { "0".into() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-individual response changes split by group, oriented so the full-data
/// interaction coefficient is nonnegative.
#[derive(Debug, Clone)]
pub struct DiDView {
    pub deltas_treated: Vec<f64>,
    pub deltas_control: Vec<f64>,
    /// Individual index of each treated delta.
    pub treated_ids: Vec<usize>,
    /// Individual index of each control delta.
    pub control_ids: Vec<usize>,
    pub n_individuals: usize,
    pub orientation: Orientation,
    /// Full-data interaction coefficient before orientation.
    pub beta3: f64,
}

impl DiDView {
    pub fn n_treated(&self) -> usize {
        self.deltas_treated.len()
    }

    pub fn n_control(&self) -> usize {
        self.deltas_control.len()
    }

    /// A panel reproducing these (oriented) deltas with zero "before" responses.
    pub fn to_panel(&self) -> DidPanel {
        let n = self.n_individuals;
        let mut after = vec![0.0; n];
        let mut treated = vec![false; n];
        for (k, &i) in self.treated_ids.iter().enumerate() {
            after[i] = self.deltas_treated[k];
            treated[i] = true;
        }
        for (k, &i) in self.control_ids.iter().enumerate() {
            after[i] = self.deltas_control[k];
        }
        DidPanel::new(vec![0.0; n], after, treated).expect("finite deltas")
    }
}

/// Builds the DiD view; orientation follows the sign of the interaction
/// coefficient from the 4-column OLS encoding.
pub fn did_view(before: &[f64], after: &[f64], treated: &[usize]) -> Result<DiDView, DataError> {
    let n = before.len();
    let mut flags = vec![false; n];
    for &i in treated {
        if i >= n {
            return Err(DataError::Invalid(format!("treated index {i} out of range")));
        }
        flags[i] = true;
    }
    let panel = DidPanel::new(before.to_vec(), after.to_vec(), flags)?;
    panel_view(&panel)
}

pub fn panel_view(panel: &DidPanel) -> Result<DiDView, DataError> {
    let n = panel.len();
    let treated_ids: Vec<usize> = (0..n).filter(|&i| panel.treated[i]).collect();
    let control_ids: Vec<usize> = (0..n).filter(|&i| !panel.treated[i]).collect();
    if treated_ids.is_empty() {
        return Err(DataError::EmptyGroup("treated"));
    }
    if control_ids.is_empty() {
        return Err(DataError::EmptyGroup("control"));
    }
    let all: Vec<usize> = (0..n).collect();
    let beta3 = panel.beta3(&all).ok_or_else(|| DataError::Invalid("interaction coefficient not identified".into()))?;
    let beta3 = snap_zero(beta3, panel.scale());
    let orientation = Orientation::of(beta3);
    let s = orientation.sign();
    let delta = |i: usize| (panel.after[i] - panel.before[i]) * s;
    Ok(DiDView {
        deltas_treated: treated_ids.iter().map(|&i| delta(i)).collect(),
        deltas_control: control_ids.iter().map(|&i| delta(i)).collect(),
        treated_ids,
        control_ids,
        n_individuals: n,
        orientation,
        beta3,
    })
}
