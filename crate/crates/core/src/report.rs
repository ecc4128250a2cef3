//! Plain-text renderings of experiment results.
//!
//! Numbers are printed with six significant digits so that golden-file
//! comparisons stay stable across platforms. Every CSV starts with a
//! `#` comment line carrying the configuration digest and the seed.

use crate::experiments::{BoundSweep, WelfareReport};
use crate::incentives::Theorem1Report;
use crate::model::Role;

/// Header of welfare tables.
pub const WELFARE_COLUMNS: &str = "variant,pairing,side,mean,ci95,success,reject,notmatched,forced,msgs";

/// Formats `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn provenance_header(digest: &str, seed: u64) -> String {
    format!("# config-sha256={digest} seed={seed}\n")
}

fn side_row(r: &WelfareReport, side: Role) -> Vec<String> {
    let est = match side {
        Role::Purchaser => r.mean_purchaser_utility,
        Role::Seller => r.mean_seller_utility,
    };
    vec![
        r.variant.to_string(),
        r.pairing.label(),
        side.to_string(),
        sig6(est.mean),
        sig6(est.ci95),
        sig6(r.success_rate),
        sig6(r.reject_rate),
        sig6(r.not_matched_rate),
        sig6(r.forced_rate),
        sig6(r.mean_messages_per_run),
    ]
}

/// Writes the provenance line, then `columns` and `rows` as CSV records.
fn table(digest: &str, seed: u64, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut buf = provenance_header(digest, seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns).expect("writing to memory");
        for row in rows {
            w.write_record(&row).expect("writing to memory");
        }
        w.flush().expect("writing to memory");
    }
    String::from_utf8(buf).expect("fields are UTF-8")
}

fn welfare_columns() -> Vec<&'static str> {
    WELFARE_COLUMNS.split(',').collect()
}

/// Purchaser and seller rows for each report, in order.
pub fn welfare_csv(reports: &[WelfareReport], digest: &str, seed: u64) -> String {
    let rows = reports.iter().flat_map(|r| [Role::Purchaser, Role::Seller].map(|side| side_row(r, side)));
    table(digest, seed, &welfare_columns(), rows)
}

pub fn sweep_csv(sweep: &BoundSweep, bounds: &[u32], digest: &str, seed: u64) -> String {
    let columns: Vec<&str> = std::iter::once("bound").chain(welfare_columns()).collect();
    let rows = bounds.iter().zip(&sweep.points).flat_map(|(bound, r)| {
        [Role::Purchaser, Role::Seller].map(|side| {
            let mut row = vec![bound.to_string()];
            row.extend(side_row(r, side));
            row
        })
    });
    table(digest, seed, &columns, rows)
}

pub fn theorem1_csv(report: &Theorem1Report, multipliers: &[f64], digest: &str, seed: u64) -> String {
    let rows = multipliers.iter().enumerate().map(|(i, m)| {
        let (u, g) = (report.expected_utility[i], report.paired_gain[i]);
        vec![
            sig6(*m),
            sig6(report.declaration_grid[i]),
            sig6(u.mean),
            sig6(u.ci95),
            sig6(g.mean),
            sig6(g.ci95),
            (i == report.truthful_index).to_string(),
        ]
    });
    let columns = ["multiplier", "declared", "mean", "ci95", "gain", "gain_ci95", "truthful"];
    table(digest, seed, &columns, rows)
}
