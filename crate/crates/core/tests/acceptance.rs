//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits nonzero if
//! any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use olsaudit_core::certificate::{Method, StabilityCertificate, FLIP_RTOL, ZERO_RTOL};
use olsaudit_core::data::{self, binary_view, panel_view, synth_2d, synth_4d, BinaryTreatmentView, Dataset, DidPanel};
use olsaudit_core::exact_binary::{self, audit_binary};
use olsaudit_core::exact_did::{self, audit_did};
use olsaudit_core::influence::{self, greedy_removal, influence_scores, leave_one_out_deltas};
use olsaudit_core::linalg::Matrix;
use olsaudit_core::miqcp::{solve_fractional, solve_integral, BnbStatus, MiqcpConfig};
use olsaudit_core::oracle::{brute_force_did, brute_force_stability, OracleOutcome};
use olsaudit_core::report::{run_audit, AuditInput, AuditOptions};
use olsaudit_core::spectral::{spectral_lower_bound, verify_envelope_constants};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, StandardNormal, StudentT};

/// Seed shared by the golden values below.
const COMMITTED_SEED: u64 = 0;
const SPECTRAL_GOLDEN: usize = 116;
const SYNTH2D_GOLDEN: usize = 66;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

/// Row-based removal set to be re-verified independently.
struct RowCert {
    ds: Dataset,
    removed: Vec<usize>,
    source: String,
}

struct PanelCert {
    panel: DidPanel,
    removed: Vec<usize>,
}

/// Bounds reported for one dataset by every run in the suite.
struct Sandwich {
    label: String,
    lower: Vec<usize>,
    upper: Vec<usize>,
}

#[derive(Default)]
struct Ledger {
    rows: Vec<RowCert>,
    panels: Vec<PanelCert>,
    sandwiches: Vec<Sandwich>,
}

impl Ledger {
    fn record(&mut self, ds: &Dataset, cert: &StabilityCertificate, source: &str) {
        if let Some(b) = cert.upper() {
            self.rows.push(RowCert { ds: ds.clone(), removed: b.removed().indices().to_vec(), source: source.into() });
        }
    }

    fn sandwich(&mut self, label: String, lower: Vec<usize>, upper: Vec<usize>) {
        self.sandwiches.push(Sandwich { label, lower, upper });
    }
}

// Independent least squares: SVD of the full design.
fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, target: usize) -> Option<f64> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return None;
    }
    let tol = 1e-10 * smax;
    let vt = svd.v_t.as_ref().unwrap();
    let u = svd.u.as_ref().unwrap();
    let mut coef = 0.0;
    let mut in_row_space = 0.0;
    for r in 0..svd.singular_values.len() {
        let s = svd.singular_values[r];
        if s <= tol {
            continue;
        }
        let v_t = vt[(r, target)];
        in_row_space += v_t * v_t;
        coef += v_t * u.column(r).dot(y) / s;
    }
    (in_row_space >= 1.0 - 1e-8).then_some(coef)
}

fn to_na(ds: &Dataset, rows: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(rows.len(), ds.d(), |i, j| ds.x().get(rows[i], j));
    let y = DVector::from_fn(rows.len(), |i, _| ds.y()[rows[i]]);
    (x, y)
}

/// Independent flip check for a removal set.
fn independently_flips(ds: &Dataset, removed: &[usize]) -> bool {
    let all: Vec<usize> = (0..ds.n()).collect();
    let (x, y) = to_na(ds, &all);
    let Some(full) = lstsq(&x, &y, ds.target()) else { return false };
    let scale = y.norm() / x.column(ds.target()).norm();
    let full = if full.abs() <= 1e-12 * scale { 0.0 } else { full };
    let sign = if full < 0.0 { -1.0 } else { 1.0 };
    let keep: Vec<usize> = all.into_iter().filter(|i| !removed.contains(i)).collect();
    let (xk, yk) = to_na(ds, &keep);
    match lstsq(&xk, &yk, ds.target()) {
        Some(c) => sign * c <= FLIP_RTOL * sign * full + ZERO_RTOL * scale,
        None => false,
    }
}

fn independently_flips_panel(panel: &DidPanel, removed: &[usize]) -> bool {
    let ds = panel.as_dataset();
    // Each individual owns two consecutive rows of the stacked design.
    let rows: Vec<usize> = removed.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    let stacked_ok = (0..panel.len()).all(|i| ds.y()[2 * i] == panel.before[i] && ds.y()[2 * i + 1] == panel.after[i]);
    stacked_ok && independently_flips(&ds, &rows)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn response(rng: &mut ChaCha8Rng, kind: usize, shift: f64) -> f64 {
    let e: f64 = match kind {
        0 => rng.sample(StandardNormal),
        1 => rng.sample(Cauchy::new(0.0, 1.0).unwrap()),
        _ => rng.sample(StudentT::new(2.0).unwrap()),
    };
    shift + e
}

fn binary_dataset(y0: &[f64], y1: &[f64]) -> Dataset {
    BinaryTreatmentView::from_groups(y0.to_vec(), y1.to_vec()).unwrap().to_dataset()
}

fn criterion_1(ledger: &mut Ledger) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = Vec::new();
    for inst in 0..500 {
        let n = rng.random_range(4..=14usize);
        let n0 = rng.random_range(1..n);
        let kind = inst % 3;
        let shift = uniform(&mut rng, 0.0, 2.0);
        let y0: Vec<f64> = (0..n0).map(|_| response(&mut rng, kind, 0.0)).collect();
        let y1: Vec<f64> = (n0..n).map(|_| response(&mut rng, kind, shift)).collect();
        let ds = binary_dataset(&y0, &y1);
        let exact = audit_binary(&binary_view(&ds).unwrap()).value();
        let oracle = brute_force_stability(&ds, n).unwrap().value();
        if exact != oracle {
            mismatches.push(inst);
        }
        let cert = exact_binary::certify(&ds).unwrap();
        ledger.record(&ds, &cert, "exact-binary");
        let amip = influence::amip_upper_bound(&ds).unwrap();
        ledger.record(&ds, &amip, "amip");
        let lower: Vec<usize> = cert.lower_value().into_iter().collect();
        let upper: Vec<usize> = [cert.upper(), amip.upper()].into_iter().flatten().map(|b| b.size()).chain(oracle).collect();
        ledger.sandwich(format!("binary #{inst}"), lower, upper);
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{}/500 equal to the oracle, {secs:.1} s (limit 60 s)", 500 - mismatches.len());
    if mismatches.is_empty() && secs < 60.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; mismatched instances {mismatches:?}"))
    }
}

fn random_panel(rng: &mut ChaCha8Rng, n: usize) -> DidPanel {
    let n_treated = rng.random_range(1..n);
    let effect = uniform(rng, 0.0, 2.0);
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut treated = Vec::new();
    for i in 0..n {
        let t = i < n_treated;
        let b: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        before.push(b);
        after.push(b + 0.5 + if t { effect } else { 0.0 } + e);
        treated.push(t);
    }
    DidPanel::new(before, after, treated).unwrap()
}

fn criterion_2(ledger: &mut Ledger) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = Vec::new();
    for inst in 0..300 {
        let n = rng.random_range(3..=10usize);
        let panel = random_panel(&mut rng, n);
        let view = panel_view(&panel).unwrap();
        let exact = audit_did(&view).value();
        let oracle = brute_force_did(&view, n).unwrap().value();
        if exact != oracle {
            mismatches.push(inst);
        }
        let cert = exact_did::certify(&panel).unwrap();
        if let Some(b) = cert.upper() {
            ledger.panels.push(PanelCert { panel: panel.clone(), removed: b.removed().indices().to_vec() });
        }
        ledger.sandwich(format!("did #{inst}"), cert.lower_value().into_iter().collect(), cert.upper().map(|b| b.size()).into_iter().chain(oracle).collect());
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{}/300 equal to the oracle, {secs:.1} s (limit 60 s)", 300 - mismatches.len());
    if mismatches.is_empty() && secs < 60.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; mismatched instances {mismatches:?}"))
    }
}

fn criterion_3() -> Verdict {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let y0: Vec<f64> = (0..n / 2).map(|_| rng.sample(StandardNormal)).collect();
    let y1: Vec<f64> = (0..n / 2).map(|_| 0.01 + rng.sample::<f64, _>(StandardNormal)).collect();
    let ds = binary_dataset(&y0, &y1);
    let start = Instant::now();
    let bin = exact_binary::certify(&ds);
    let t_bin = start.elapsed().as_secs_f64();

    let before: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let treated: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let after: Vec<f64> =
        (0..n).map(|i| before[i] + if treated[i] { 0.01 } else { 0.0 } + rng.sample::<f64, _>(StandardNormal)).collect();
    let panel = DidPanel::new(before, after, treated).unwrap();
    let start = Instant::now();
    let did = exact_did::certify(&panel);
    let t_did = start.elapsed().as_secs_f64();

    let value = |c: &StabilityCertificate| c.lower_value().map_or("none".to_string(), |v| v.to_string());
    match (bin, did) {
        (Ok(b), Ok(d)) => {
            let detail = format!(
                "binary n=1e6 stability {} in {t_bin:.2} s; DiD N=1e6 stability {} in {t_did:.2} s (limit 10 s each)",
                value(&b),
                value(&d)
            );
            if t_bin < 10.0 && t_did < 10.0 {
                Verdict::Pass(detail)
            } else {
                Verdict::Fail(detail)
            }
        }
        (b, d) => Verdict::Fail(format!("errors: {:?} / {:?}", b.err(), d.err())),
    }
}

fn random_regression(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let cols = (d - 1).max(1);
    let cov = Matrix::from_fn(n, cols, |_, _| rng.sample(StandardNormal));
    let slope = uniform(rng, 0.2, 1.5);
    let y: Vec<f64> = (0..n).map(|i| slope * cov.get(i, 0) + rng.sample::<f64, _>(StandardNormal)).collect();
    let names = (0..cols).map(|j| format!("x{j}")).collect();
    Dataset::from_covariates(cov, y, names, 0, d > 1).unwrap()
}

fn criterion_4(ledger: &mut Ledger) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = Vec::new();
    let mut bounded = 0;
    for inst in 0..200 {
        let n = rng.random_range(6..=12usize);
        let d = rng.random_range(1..=3usize);
        let ds = random_regression(&mut rng, n, d);
        let oracle = brute_force_stability(&ds, n).unwrap().value();
        if let Ok(c) = spectral_lower_bound(&ds) {
            bounded += 1;
            if oracle.is_some_and(|o| c.lower_bound > o) {
                violations.push(inst);
            }
            ledger.sandwich(format!("spectral #{inst}"), vec![c.lower_bound], oracle.into_iter().collect());
        }
    }
    let mut envelope_failures = 0;
    for _ in 0..20 {
        let n = rng.random_range(8..=12usize);
        let d = rng.random_range(2..=3usize);
        let ds = random_regression(&mut rng, n, d);
        match spectral_lower_bound(&ds) {
            Ok(c) if verify_envelope_constants(&ds, c.c1, c.c2, 10_000) => {}
            _ => envelope_failures += 1,
        }
    }
    let detail = format!(
        "{} violations of lower <= oracle over {bounded} bounded instances; envelope checks failed on {envelope_failures}/20 (1e4 directions each)",
        violations.len()
    );
    if violations.is_empty() && envelope_failures == 0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; instances {violations:?}"))
    }
}

fn criterion_5() -> Verdict {
    let mut values = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 1..=10u64 {
        let ds = synth_4d(1000, seed);
        let start = Instant::now();
        let lb = spectral_lower_bound(&ds).map(|c| c.lower_bound).unwrap_or(0);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        values.push(lb);
    }
    let golden = spectral_lower_bound(&synth_4d(1000, COMMITTED_SEED)).map(|c| c.lower_bound).unwrap_or(0);
    let hits = values.iter().filter(|&&v| v >= 80).count();
    let detail = format!(
        "lower bounds {values:?} on seeds 1..=10, {hits}/10 >= 80 (need 9); seed {COMMITTED_SEED} gives {golden} (golden {SPECTRAL_GOLDEN}); slowest {slowest:.3} s (limit 5 s)"
    );
    if hits >= 9 && golden == SPECTRAL_GOLDEN && slowest < 5.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// Greedy upper bound and the best lower bound from completed searches.
fn synth2d_bounds(seed: u64, ledger: &mut Ledger) -> (Option<usize>, Option<usize>, Option<usize>) {
    let ds = synth_2d(100, seed);
    let greedy = greedy_removal(&ds, ds.n()).unwrap();
    let warm = greedy.as_ref().map(|b| b.removed().indices().to_vec());
    let cfg = MiqcpConfig { time_limit: Duration::from_secs(10), ..MiqcpConfig::default() };
    let frac = solve_fractional(&ds, &cfg, warm.as_deref()).unwrap();
    let int = solve_integral(&ds, &cfg, warm.as_deref()).unwrap();
    let complete_lb = [&frac, &int].iter().filter(|r| r.complete()).map(|r| r.lower_bound).max();
    let mut uppers = Vec::new();
    for c in frac.certificates().iter().chain(int.certificates().iter()) {
        ledger.record(&ds, c, "miqcp");
        uppers.extend(c.upper().map(|b| b.size()));
    }
    if let Some(g) = &greedy {
        ledger.rows.push(RowCert { ds: ds.clone(), removed: g.removed().indices().to_vec(), source: "greedy".into() });
        uppers.push(g.size());
    }
    let mip_ub = uppers.iter().copied().min();
    ledger.sandwich(format!("synth2d seed {seed}"), vec![frac.lower_bound, int.lower_bound], uppers);
    (greedy.map(|g| g.size()), complete_lb, mip_ub)
}

fn criterion_6(ledger: &mut Ledger) -> Verdict {
    let start = Instant::now();
    let mut hits = 0;
    let mut rows = Vec::new();
    for seed in 1..=10u64 {
        let (g, lb, _) = synth2d_bounds(seed, ledger);
        let ok = matches!((g, lb), (Some(g), Some(lb)) if g == lb && (48..=78).contains(&lb));
        hits += ok as usize;
        rows.push(format!("{seed}:{}/{}", g.map_or("-".into(), |v| v.to_string()), lb.map_or("-".into(), |v| v.to_string())));
    }
    let (_, golden_lb, golden_ub) = synth2d_bounds(COMMITTED_SEED, ledger);
    let golden_ok = golden_lb == Some(SYNTH2D_GOLDEN) && golden_ub == Some(SYNTH2D_GOLDEN);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "greedy/lower per seed [{}]; {hits}/10 coincide in [48, 78] (need 9); seed {COMMITTED_SEED} lower {:?} upper {:?} (golden {SYNTH2D_GOLDEN}); {secs:.0} s (limit 300 s)",
        rows.join(" "),
        golden_lb,
        golden_ub
    );
    if hits >= 9 && golden_ok && secs < 300.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_7(ledger: &mut Ledger) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let cfg = MiqcpConfig { time_limit: Duration::from_secs(120), beta_box: Some(1e3), ..MiqcpConfig::default() };
    let (mut used, mut discarded) = (0, 0);
    let mut failures = Vec::new();
    while used < 50 {
        let n = rng.random_range(5..=10usize);
        let d = rng.random_range(1..=3usize);
        let ds = random_regression(&mut rng, n, d);
        // Kept sets smaller than d satisfy the model without flipping; such
        // optima are outside what the search can certify.
        let k = match brute_force_stability(&ds, n).unwrap() {
            OracleOutcome::Flip { k, .. } if k <= n - d => k,
            _ => {
                discarded += 1;
                continue;
            }
        };
        used += 1;
        let int = solve_integral(&ds, &cfg, None).unwrap();
        let frac = solve_fractional(&ds, &cfg, None).unwrap();
        let inc = int.upper.as_ref().map(|b| b.size());
        let complete = int.outcome.status == BnbStatus::Optimal && frac.outcome.status == BnbStatus::Optimal;
        let int_opt = (n - k) as f64;
        if !complete || int.lower_bound != k || inc != Some(k) || frac.outcome.dual_bound < int_opt - 1e-6 {
            failures.push(format!("#{used} (n={n} d={d} oracle {k} lower {} incumbent {inc:?} frac {:.3})", int.lower_bound, frac.outcome.dual_bound));
        }
        for c in int.certificates() {
            ledger.record(&ds, &c, "miqcp-int");
        }
        for c in frac.certificates() {
            ledger.record(&ds, &c, "miqcp-frac");
        }
        ledger.sandwich(
            format!("miqcp #{used}"),
            vec![int.lower_bound, frac.lower_bound],
            inc.into_iter().chain([k]).collect(),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{}/50 with n - dual = incumbent = oracle and fractional >= integral ({discarded} draws skipped: optimum keeps fewer than d samples); {secs:.0} s (limit 600 s)",
        50 - failures.len()
    );
    if failures.is_empty() && secs < 600.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", failures.join(", ")))
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

fn criterion_8(ledger: &mut Ledger) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let (mut sm_bad, mut refit_bad, mut compared) = (0, 0, 0);
    for _ in 0..100 {
        let n = rng.random_range(8..=30usize);
        let d = rng.random_range(1..=4usize);
        let ds = random_regression(&mut rng, n, d);
        let scores = influence_scores(&ds).unwrap();
        let deltas = leave_one_out_deltas(&ds);
        let all: Vec<usize> = (0..n).collect();
        let (x, y) = to_na(&ds, &all);
        let full = lstsq(&x, &y, ds.target()).unwrap();
        let xtx_inv = (x.transpose() * &x).pseudo_inverse(1e-12).unwrap();
        for i in 0..n {
            let Some(delta) = deltas[i] else { continue };
            compared += 1;
            let xi = x.row(i).transpose();
            let h = (xi.transpose() * &xtx_inv * &xi)[(0, 0)];
            // First-order score rescaled by the leverage gives the exact removal effect.
            let from_score = -scores.orientation.apply(scores.scores[i]) / (1.0 - h);
            if !rel_close(from_score, delta, 1e-8) {
                sm_bad += 1;
            }
            let keep: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
            let (xk, yk) = to_na(&ds, &keep);
            match lstsq(&xk, &yk, ds.target()) {
                Some(c) if rel_close(c - full, delta, 1e-8) => {}
                _ => refit_bad += 1,
            }
        }
        let amip = influence::amip_upper_bound(&ds).unwrap();
        ledger.record(&ds, &amip, "amip");
        let greedy = influence::greedy_resolve_upper_bound(&ds, n).unwrap();
        ledger.record(&ds, &greedy, "greedy");
        let ub: Vec<usize> = [amip.upper(), greedy.upper()].into_iter().flatten().map(|b| b.size()).collect();
        ledger.sandwich("influence".into(), Vec::new(), ub);
    }
    let row_failures: Vec<&str> =
        ledger.rows.iter().filter(|c| !independently_flips(&c.ds, &c.removed)).map(|c| c.source.as_str()).collect();
    let panel_failures = ledger.panels.iter().filter(|c| !independently_flips_panel(&c.panel, &c.removed)).count();
    let detail = format!(
        "{compared} leave-one-out effects: {sm_bad} score/leverage mismatches, {refit_bad} refit mismatches (1e-8 relative); {} row certificates and {} panel certificates re-verified, {} + {panel_failures} failures",
        ledger.rows.len(),
        ledger.panels.len(),
        row_failures.len()
    );
    if sm_bad == 0 && refit_bad == 0 && row_failures.is_empty() && panel_failures == 0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; failing sources {row_failures:?}"))
    }
}

fn criterion_9(ledger: &mut Ledger) -> Verdict {
    // Full audits through the report path as well.
    let opts = AuditOptions { methods: Method::ALL.to_vec(), time_limit: Duration::from_secs(5), max_k: 12, ..AuditOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for inst in 0..10 {
        let ds = if inst % 2 == 0 {
            random_regression(&mut rng, 12, 2)
        } else {
            let y0: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
            let y1: Vec<f64> = (0..6).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
            binary_dataset(&y0, &y1)
        };
        let report = run_audit(&AuditInput::Rows(ds), None, &opts);
        let lower = report.methods.iter().filter(|e| e.bound_type == olsaudit_core::report::BoundType::Lower || e.bound_type == olsaudit_core::report::BoundType::Exact).filter_map(|e| e.value).collect();
        let upper = report.methods.iter().filter(|e| e.verified).filter_map(|e| e.value).collect();
        ledger.sandwich(format!("audit #{inst}"), lower, upper);
    }
    let panel = random_panel(&mut rng, 8);
    let report = run_audit(&AuditInput::Panel(panel), None, &AuditOptions { max_k: 8, ..opts });
    ledger.sandwich("audit panel".into(), report.summary.stability_lb.into_iter().collect(), report.summary.stability_ub.into_iter().collect());

    let violations: Vec<String> = ledger
        .sandwiches
        .iter()
        .filter_map(|s| match (s.lower.iter().max(), s.upper.iter().min()) {
            (Some(l), Some(u)) if l > u => Some(format!("{} ({l} > {u})", s.label)),
            _ => None,
        })
        .collect();
    let detail = format!("{} audited datasets, {} with max(lower) > min(upper)", ledger.sandwiches.len(), violations.len());
    if violations.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}: {}", violations.join(", ")))
    }
}

fn criterion_10() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/microcredit");
    let studies = [
        ("bosnia", 13),
        ("ethiopia", 1),
        ("india", 6),
        ("mexico", 1),
        ("mongolia", 15),
        ("morocco", 11),
        ("philippines", 9),
    ];
    let present: Vec<_> = studies.iter().filter(|(s, _)| dir.join(format!("{s}.csv")).exists()).collect();
    if present.is_empty() {
        return Verdict::Skip(format!("no study CSVs under {} (columns treatment,y)", dir.display()));
    }
    let mut got = Vec::new();
    let mut ok = present.len() == studies.len();
    for (study, expected) in &present {
        let value = data::load_csv(&dir.join(format!("{study}.csv")), "treatment", "y", true)
            .ok()
            .and_then(|ds| exact_binary::certify(&ds).ok())
            .and_then(|c| c.lower_value());
        ok &= value == Some(*expected);
        got.push(format!("{study} {value:?} (expected {expected})"));
    }
    let detail = format!("{}/{} studies present: {}", present.len(), studies.len(), got.join(", "));
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() {
    let mut ledger = Ledger::default();
    let names = [
        "exact-binary oracle equivalence",
        "exact-DiD oracle equivalence",
        "exact algorithms at n = 1e6",
        "spectral soundness",
        "spectral Synthetic-4D",
        "Synthetic-2D greedy vs complete lower bound",
        "MIQCP exactness at desk scale",
        "influence correctness and certificate re-verification",
        "lower <= upper across all runs",
        "microcredit exact values",
    ];
    let mut verdicts: Vec<(usize, Verdict)> = vec![
        (1, criterion_1(&mut ledger)),
        (2, criterion_2(&mut ledger)),
        (3, criterion_3()),
        (4, criterion_4(&mut ledger)),
        (5, criterion_5()),
        (6, criterion_6(&mut ledger)),
        (7, criterion_7(&mut ledger)),
        (10, criterion_10()),
    ];
    verdicts.push((8, criterion_8(&mut ledger)));
    verdicts.push((9, criterion_9(&mut ledger)));
    verdicts.sort_by_key(|(k, _)| *k);
    let mut failed = 0;
    for (k, v) in &verdicts {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] criterion {k:>2}: {} | {detail}", names[k - 1]);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
