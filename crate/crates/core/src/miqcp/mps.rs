//! Fixed-format MPS export with quadratic constraints (QCMATRIX sections), for
//! handing the bilinear program to an external solver.
//!
//! Names: `w1..wn` weights, `b1..bp` coefficients, `r1..rd` stationarity rows,
//! `sign` for `b_d <= 0` in integral mode and `guard` for `Σw >= 1`. Each
//! product `c wᵢ βⱼ` is written as the symmetric pair `c/2` in the row's
//! QCMATRIX.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::model::{BilinearModel, Mode};

/// Shortest representation that fits the 12-character numeric field.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 12 {
        return s;
    }
    for digits in (0..=8).rev() {
        let s = format!("{v:.digits$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    unreachable!("finite numbers fit in 12 characters")
}

fn entry(out: &mut String, col: &str, row: &str, v: f64) {
    writeln!(out, "    {col:<8}  {row:<8}  {:>12}", fmt_num(v)).unwrap();
}

/// The model as MPS text. Identical models give identical text.
pub fn to_mps(model: &BilinearModel) -> String {
    let n = model.n();
    let d = model.d();
    let p = model.n_beta();
    let integral = model.mode == Mode::Integral;
    let mut out = String::new();
    let name = match model.mode {
        Mode::Fractional => "OLSFRAC",
        Mode::Integral => "OLSINT",
    };
    writeln!(out, "NAME          {name}").unwrap();
    out.push_str("OBJSENSE\n    MAX\n");
    out.push_str("ROWS\n N  obj\n");
    for r in 0..d {
        writeln!(out, " E  r{}", r + 1).unwrap();
    }
    if integral {
        out.push_str(" L  sign\n");
    }
    if model.safeguard {
        out.push_str(" G  guard\n");
    }
    out.push_str("COLUMNS\n");
    if integral {
        out.push_str("    MARKER                 'MARKER'                 'INTORG'\n");
    }
    for i in 0..n {
        let col = format!("w{}", i + 1);
        entry(&mut out, &col, "obj", 1.0);
        for r in 0..d {
            let c = model.linear_coef(r, i);
            if c != 0.0 {
                entry(&mut out, &col, &format!("r{}", r + 1), c);
            }
        }
        if model.safeguard {
            entry(&mut out, &col, "guard", 1.0);
        }
    }
    if integral {
        out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");
    }
    for j in 0..p {
        let col = format!("b{}", j + 1);
        if integral && j == d - 1 {
            entry(&mut out, &col, "sign", 1.0);
        } else {
            entry(&mut out, &col, "obj", 0.0);
        }
    }
    out.push_str("RHS\n");
    if model.safeguard {
        entry(&mut out, "rhs", "guard", 1.0);
    }
    out.push_str("BOUNDS\n");
    for i in 0..n {
        if integral {
            writeln!(out, " BV bnd       w{}", i + 1).unwrap();
        } else {
            writeln!(out, " UP bnd       {:<8}  {:>12}", format!("w{}", i + 1), fmt_num(1.0)).unwrap();
        }
    }
    for j in 0..p {
        let col = format!("b{}", j + 1);
        writeln!(out, " LO bnd       {col:<8}  {:>12}", fmt_num(-model.beta_box)).unwrap();
        writeln!(out, " UP bnd       {col:<8}  {:>12}", fmt_num(model.beta_box)).unwrap();
    }
    for r in 0..d {
        writeln!(out, "QCMATRIX   r{}", r + 1).unwrap();
        for i in 0..n {
            for j in 0..p {
                let c = model.bilinear_coef(r, i, j);
                if c == 0.0 {
                    continue;
                }
                let (w, b) = (format!("w{}", i + 1), format!("b{}", j + 1));
                entry(&mut out, &w, &b, c / 2.0);
                entry(&mut out, &b, &w, c / 2.0);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_mps(model: &BilinearModel, path: &Path) -> io::Result<()> {
    std::fs::write(path, to_mps(model))
}
