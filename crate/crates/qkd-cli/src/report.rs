//! CSV emitters. Floats are written with 17 significant digits in
//! scientific notation so every value round-trips exactly.

use csv::Writer;
use qkd_core::bounds::{ProtocolParams, SecurityBound, Variant};
use qkd_core::coding::CodeMcReport;
use qkd_core::protocol::ExperimentSummary;
use qkd_core::quantum::{CaseRow, SymmetryCheck};

use crate::CliError;

/// 17 significant digits, `'.'` decimal point.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Builds a CSV document from a header and string rows.
pub fn csv(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub const MC_HEADER: [&str; 9] = [
    "n", "k", "t", "trials", "failures", "estimate", "ci_low", "ci_high", "bound",
];

pub fn mc_code(report: &CodeMcReport) -> Result<String, CliError> {
    let e = &report.estimate;
    let row = vec![
        report.n.to_string(),
        report.k.to_string(),
        report.t.to_string(),
        e.trials.to_string(),
        e.hits.to_string(),
        float(e.estimate),
        float(e.ci_low),
        float(e.ci_high),
        float(report.bound),
    ];
    csv(&strings(&MC_HEADER), &[row])
}

pub const VERIFY_HEADER: [&str; 10] = [
    "case_id", "N", "n", "r", "m", "t", "lhs", "rhs", "margin", "holds",
];

pub fn verify(rows: &[CaseRow]) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|c| {
            vec![
                c.case_id.to_string(),
                c.big_n.to_string(),
                c.n.to_string(),
                c.r.to_string(),
                c.m.to_string(),
                c.t.to_string(),
                float(c.lhs),
                float(c.rhs),
                float(c.margin()),
                c.holds.to_string(),
            ]
        })
        .collect();
    csv(&strings(&VERIFY_HEADER), &rows)
}

pub const SYMMETRY_HEADER: [&str; 16] = [
    "case_id",
    "unitarity",
    "completeness",
    "basic_lemma",
    "error_probs",
    "test_errors",
    "info_uniform",
    "syndrome_uniform",
    "info_given_syndrome",
    "eta_orthogonality",
    "parseval",
    "reconstruction",
    "lemma_d_inverted",
    "skipped_branches",
    "max_deviation",
    "holds",
];

pub fn symmetry(checks: &[SymmetryCheck], tol: f64) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = vec![i.to_string()];
            row.extend(
                [
                    c.unitarity,
                    c.completeness,
                    c.basic_lemma,
                    c.error_probs,
                    c.test_errors,
                    c.info_uniform,
                    c.syndrome_uniform,
                    c.info_given_syndrome,
                    c.eta_orthogonality,
                    c.parseval,
                    c.reconstruction,
                    c.lemma_d_inverted,
                ]
                .map(float),
            );
            row.push(c.skipped_branches.to_string());
            row.push(float(c.max_deviation()));
            row.push((c.max_deviation() <= tol).to_string());
            row
        })
        .collect();
    csv(&strings(&SYMMETRY_HEADER), &rows)
}

pub const CURVE_HEADER: [&str; 2] = ["p_az", "p_ax"];

pub fn curve(points: &[(f64, f64)]) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|&(a, b)| vec![float(a), float(b)])
        .collect();
    csv(&strings(&CURVE_HEADER), &rows)
}

/// Rate-table columns. BB84-INFO-Z replaces `p_a` by `p_az,p_ax`. Each row
/// continues with `radical_factor,proven_bound,ln_total` and one column per
/// itemized term.
pub const RATE_HEADER: [&str; 8] = [
    "n",
    "p_a",
    "eps_sec",
    "eps_rel",
    "r_over_n",
    "m_over_n",
    "total_bound",
    "key_rate",
];

pub fn bound_table(rows: &[(ProtocolParams, SecurityBound, bool)]) -> Result<String, CliError> {
    let Some((first, first_bound, _)) = rows.first() else {
        return Err(CliError::Validation("no bound rows".into()));
    };
    let split = first.variant == Variant::Bb84InfoZ;
    let mut header: Vec<String> = Vec::new();
    for h in RATE_HEADER {
        if h == "p_a" && split {
            header.extend(strings(&["p_az", "p_ax"]));
        } else {
            header.push(h.into());
        }
    }
    header.extend(strings(&["radical_factor", "proven_bound", "ln_total"]));
    header.extend(
        first_bound
            .reliability_terms
            .iter()
            .chain(&first_bound.secrecy_terms_under_radical)
            .map(|t| t.label.to_string()),
    );
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|(p, b, proven)| {
            let mut row = vec![p.n.to_string()];
            if split {
                row.push(float(p.p_az));
                row.push(float(p.p_ax));
            } else {
                row.push(float(p.p_a()));
            }
            row.extend(
                [
                    p.eps_sec,
                    p.eps_rel,
                    p.r as f64 / p.n as f64,
                    p.m as f64 / p.n as f64,
                    b.total,
                    b.key_rate,
                ]
                .map(float),
            );
            row.push(float(b.radical_factor));
            row.push(proven.to_string());
            row.push(float(b.ln_total));
            row.extend(
                b.reliability_terms
                    .iter()
                    .chain(&b.secrecy_terms_under_radical)
                    .map(|t| float(t.value())),
            );
            row
        })
        .collect();
    csv(&header, &out)
}

pub const SIMULATE_HEADER: [&str; 18] = [
    "variant",
    "mode",
    "runs",
    "aborts",
    "abort_rate",
    "failures",
    "failure_rate",
    "failure_ci_low",
    "failure_ci_high",
    "failure_rate_given_pass",
    "tie_fails",
    "budget_exceeded",
    "best_found",
    "error_rate_info",
    "error_rate_test_z",
    "error_rate_test_x",
    "reliability_bound",
    "within_bound",
];

pub fn simulate(
    variant: Variant,
    mode: &str,
    s: &ExperimentSummary,
    bound: Option<f64>,
) -> Result<String, CliError> {
    let f = &s.reliability_failures;
    let row = vec![
        variant.to_string(),
        mode.to_string(),
        s.runs.to_string(),
        s.aborts.hits.to_string(),
        float(s.aborts.estimate),
        f.hits.to_string(),
        float(f.estimate),
        float(f.ci_low),
        float(f.ci_high),
        float(s.failures_given_pass.estimate),
        s.tie_fails.to_string(),
        s.budget_exceeded.to_string(),
        s.best_found.to_string(),
        float(s.error_rate_info),
        float(s.error_rate_test_z),
        float(s.error_rate_test_x),
        bound.map_or_else(String::new, float),
        bound.map_or_else(String::new, |b| {
            f.consistent_with_upper_bound(b).to_string()
        }),
    ];
    csv(&strings(&SIMULATE_HEADER), &[row])
}
