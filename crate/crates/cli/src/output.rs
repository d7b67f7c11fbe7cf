use std::fmt::Write as _;

use ifegr_core::benchmark::{ConvergenceTable, Metric};
use ifegr_core::discretization::Discretization;
use ifegr_core::geometry::Side;
use ifegr_core::recovery::{enrich, RecoveredGradient};
use ifegr_core::sparse::CsrMatrix;

pub const CSV_HEADER: &str = "n,De,De_order,Die,Die_order,Dre,Dre_order";

/// C-style `%.5e`: six significant digits and a signed two-digit exponent.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn order(table: &ConvergenceTable, k: usize, m: Metric) -> String {
    table.order(k, m).map(|o| format!("{o:.2}")).unwrap_or_default()
}

pub fn csv(table: &ConvergenceTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (k, r) in table.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            sci(r.de),
            order(table, k, Metric::De),
            sci(r.die),
            order(table, k, Metric::Die),
            sci(r.dre),
            order(table, k, Metric::Dre)
        );
    }
    out
}

pub fn markdown(table: &ConvergenceTable, title: &str) -> String {
    let mut out = format!("### {title}\n\n| n | De | order | Die | order | Dre | order |\n|---:|---:|---:|---:|---:|---:|---:|\n");
    for (k, r) in table.rows.iter().enumerate() {
        let ord = |m| table.order(k, m).map(|o| format!("{o:.2}")).unwrap_or_else(|| "--".into());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.n,
            sci(r.de),
            ord(Metric::De),
            sci(r.die),
            ord(Metric::Die),
            sci(r.dre),
            ord(Metric::Dre)
        );
    }
    out
}

/// One `x y side value gx gy` record per fitted node and side it belongs to:
/// the enriched solution and the recovered gradient of that side.
pub fn fields(disc: &Discretization, u: &[f64], rec: &RecoveredGradient) -> String {
    let values = enrich(disc, u);
    let mut out = String::from("# x y side value gx gy\n");
    for (v, p) in disc.fitted.vertices.iter().enumerate() {
        for side in Side::BOTH {
            if let Some(g) = rec.get(v, side) {
                let _ = writeln!(out, "{:.12e} {:.12e} {} {:.12e} {:.12e} {:.12e}", p.x, p.y, side.sign(), values.0[v], g.x, g.y);
            }
        }
    }
    out
}

/// MatrixMarket coordinate format with 1-based indices.
pub fn matrix_market(a: &CsrMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.iter() {
        let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    out
}
