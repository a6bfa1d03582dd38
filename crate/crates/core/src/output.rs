//! CSV rendering. Numbers use 6 significant digits in `%g` style, integers
//! are printed as is, and lines end in `\n`.

use std::fmt::Write as _;

use crate::experiment::{ComparisonReport, ExperimentReport, OccupancyReport};
use crate::metrics::{Comparison, PairProbs, RunEnsemble};
use crate::pairwise::{PairState, TransitionMatrix};

pub const DISSEMINATION_HEADER: &str =
    "round,mean_replication,std_replication,mean_coverage,std_coverage,successful_runs";
pub const OCCUPANCY_HEADER: &str = "round,p11,p10,p01";
pub const DIFF_HEADER: &str =
    "round,abs_diff_replication,protocol_std_replication,abs_diff_coverage,protocol_std_coverage";
pub const SIDE_BY_SIDE_HEADER: &str = "round,protocol_mean,protocol_std,model_mean,model_std";

/// `printf("%g")` with 6 significant digits.
///
/// ```
/// use gossiplab::output::fmt_g;
/// assert_eq!(fmt_g(0.0), "0");
/// assert_eq!(fmt_g(500.0), "500");
/// assert_eq!(fmt_g(0.888888888), "0.888889");
/// assert_eq!(fmt_g(1234567.0), "1.23457e+06");
/// assert_eq!(fmt_g(0.00001234), "1.234e-05");
/// ```
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 6;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(out: &mut String, round: usize, values: &[f64]) {
    let _ = write!(out, "{round}");
    for &v in values {
        out.push(',');
        out.push_str(&fmt_g(v));
    }
}

pub fn dissemination_csv(ensemble: &RunEnsemble) -> String {
    let mut out = String::from(DISSEMINATION_HEADER);
    out.push('\n');
    for r in 0..ensemble.rounds() {
        row(
            &mut out,
            r,
            &[
                ensemble.mean_replication[r],
                ensemble.std_replication[r],
                ensemble.mean_coverage[r],
                ensemble.std_coverage[r],
            ],
        );
        let _ = writeln!(out, ",{}", ensemble.successful_runs);
    }
    out
}

pub fn occupancy_csv(series: &[PairProbs]) -> String {
    let mut out = String::from(OCCUPANCY_HEADER);
    out.push('\n');
    for (r, p) in series.iter().enumerate() {
        row(&mut out, r, &[p.p11, p.p10, p.p01]);
        out.push('\n');
    }
    out
}

pub fn diff_csv(comparison: &Comparison) -> String {
    let mut out = String::from(DIFF_HEADER);
    out.push('\n');
    for r in 0..comparison.rounds() {
        row(
            &mut out,
            r,
            &[
                comparison.abs_diff_replication[r],
                comparison.protocol_std_replication[r],
                comparison.abs_diff_coverage[r],
                comparison.protocol_std_coverage[r],
            ],
        );
        out.push('\n');
    }
    out
}

fn side_by_side(p_mean: &[f64], p_std: &[f64], m_mean: &[f64], m_std: &[f64]) -> String {
    let mut out = String::from(SIDE_BY_SIDE_HEADER);
    out.push('\n');
    for r in 0..p_mean.len() {
        row(&mut out, r, &[p_mean[r], p_std[r], m_mean[r], m_std[r]]);
        out.push('\n');
    }
    out
}

/// `replication.csv` of a comparison.
pub fn comparison_replication_csv(report: &ComparisonReport) -> String {
    let (p, m) = (&report.protocol.ensemble, &report.model.ensemble);
    side_by_side(
        &p.mean_replication,
        &p.std_replication,
        &m.mean_replication,
        &m.std_replication,
    )
}

/// `coverage.csv` of a comparison.
pub fn comparison_coverage_csv(report: &ComparisonReport) -> String {
    let (p, m) = (&report.protocol.ensemble, &report.model.ensemble);
    side_by_side(&p.mean_coverage, &p.std_coverage, &m.mean_coverage, &m.std_coverage)
}

/// Config echo plus the headline numbers of a report, as `key = value` lines.
pub fn experiment_summary(report: &ExperimentReport) -> String {
    let mut out = report.config.to_kv_text();
    let e = &report.ensemble;
    let _ = writeln!(out, "# engine = {}", report.engine.name());
    let _ = writeln!(out, "# successful_runs = {} / {}", e.successful_runs, e.total_runs);
    let _ = writeln!(out, "# extinction_fraction = {}", fmt_g(e.extinction_fraction()));
    if let Some(m) = &report.model {
        let _ = writeln!(out, "# variant = {}", m.variant);
        let _ = writeln!(out, "# p_select = {}", fmt_g(m.p_select));
        let _ = writeln!(out, "# p_drop = {}", fmt_g(m.p_drop));
        if let Some(p) = m.p_inx {
            let _ = writeln!(out, "# p_inx = {}", fmt_g(p));
        }
    }
    let seeds: Vec<String> = report.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "# seeds = {}", seeds.join(" "));
    out
}

pub fn occupancy_summary(report: &OccupancyReport) -> String {
    let mut out = report.config.to_kv_text();
    let p = &report.pooled;
    let _ = writeln!(out, "# p11 = {}", fmt_g(p.p11));
    let _ = writeln!(out, "# p10 = {}", fmt_g(p.p10));
    let _ = writeln!(out, "# p01 = {}", fmt_g(p.p01));
    let _ = writeln!(out, "# observations = {}", p.observations);
    if p.low_confidence() {
        let _ = writeln!(out, "# low_confidence = true");
    }
    let _ = writeln!(out, "# p_inx = {}", fmt_g(report.p_inx));
    let _ = writeln!(out, "# p_drop = {}", fmt_g(report.p_drop));
    let seeds: Vec<String> = report.runs.iter().map(|r| r.seed.to_string()).collect();
    let _ = writeln!(out, "# seeds = {}", seeds.join(" "));
    out
}

/// The matrix as an aligned table with a row-sum column.
pub fn matrix_table(matrix: &TransitionMatrix) -> String {
    let mut out = String::from("pre\\post");
    for post in PairState::ALL {
        let _ = write!(out, " {:>10}", post.to_string());
    }
    let _ = writeln!(out, " {:>10}", "sum");
    for pre in PairState::ALL {
        let _ = write!(out, "{:<8}", pre.to_string());
        for &p in matrix.row(pre) {
            let _ = write!(out, " {:>10}", fmt_g(p));
        }
        let _ = writeln!(out, " {:>10}", fmt_g(matrix.row_sum(pre)));
    }
    out
}
