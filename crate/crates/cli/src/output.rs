//! Record types and writers shared by every subcommand.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use prefattach_core::{ExactRational, LogFloat};
use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";
pub const CSV_HEADER: [&str; 5] = ["m", "n", "k", "exact", "approx"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputRecord {
    ProbRow {
        m: usize,
        n: usize,
        k: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        exact: Option<String>,
        approx: String,
    },
    ScaledRow {
        m: usize,
        n: usize,
        k: usize,
        exact: String,
        approx: String,
    },
    Empirical {
        mode: String,
        m: usize,
        n: usize,
        master_seed: u64,
        trials: u64,
        counts: BTreeMap<usize, u64>,
    },
    Equivalence {
        name: String,
        n_max: usize,
        cells_compared: usize,
        mismatches: usize,
        passed: bool,
        gated: bool,
    },
    Stat {
        name: String,
        mode: String,
        m: usize,
        n: usize,
        trials: u64,
        master_seed: u64,
        tv_distance: f64,
        chi_square_statistic: f64,
        degrees_of_freedom: usize,
        critical_value: Option<f64>,
        verdict: String,
        passed: bool,
        gated: bool,
    },
    Identity {
        name: String,
        cases: usize,
        failures: usize,
        passed: bool,
        gated: bool,
    },
}

impl OutputRecord {
    /// CSV row for the kinds that fit the `m,n,k,exact,approx` schema.
    fn csv_row(&self) -> Option<[String; 5]> {
        match self {
            OutputRecord::ProbRow { m, n, k, exact, approx } => Some([
                m.to_string(),
                n.to_string(),
                k.to_string(),
                exact.clone().unwrap_or_default(),
                approx.clone(),
            ]),
            OutputRecord::ScaledRow { m, n, k, exact, approx } => Some([
                m.to_string(),
                n.to_string(),
                k.to_string(),
                exact.clone(),
                approx.clone(),
            ]),
            _ => None,
        }
    }

    pub fn gate(&self) -> Option<bool> {
        match self {
            OutputRecord::Equivalence {
                passed, gated: true, ..
            }
            | OutputRecord::Stat {
                passed, gated: true, ..
            }
            | OutputRecord::Identity {
                passed, gated: true, ..
            } => Some(*passed),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Document<'a, P: Serialize> {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub params: &'a P,
    pub results: &'a [OutputRecord],
}

/// `%.12g`-style rendering.
pub fn format_approx(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exponent.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Decimal rendering of a positive quantity given its natural log, used when
/// the value lies outside the f64 range.
fn format_from_ln(ln: f64) -> String {
    let log10 = ln / std::f64::consts::LN_10;
    let mut exponent = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exponent);
    let rounded: f64 = format!("{:.11}", mantissa).parse().expect("finite mantissa");
    if rounded >= 10.0 {
        mantissa /= 10.0;
        exponent += 1.0;
    }
    let sign = if exponent < 0.0 { '-' } else { '+' };
    format!(
        "{}e{}{:02}",
        trim_zeros(&format!("{:.11}", mantissa)),
        sign,
        exponent.abs() as i64
    )
}

pub fn approx_rational(value: &ExactRational) -> String {
    let x = value.to_f64();
    if value.is_zero() || x.is_normal() {
        return format_approx(x);
    }
    match value.ln() {
        Some(ln) => format_from_ln(ln),
        None => format_approx(x),
    }
}

pub fn approx_log(value: &LogFloat) -> String {
    let x = value.to_f64();
    if value.is_zero() || x.is_normal() {
        return format_approx(x);
    }
    match value.ln() {
        Some(ln) => format_from_ln(ln),
        None => format_approx(x),
    }
}

pub fn render_csv(records: &[OutputRecord]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for record in records {
        let row = record
            .csv_row()
            .ok_or_else(|| CliError::Usage("this output has no CSV form; use --format json".into()))?;
        writer.write_record(&row)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn render_json<P: Serialize>(
    command: &'static str,
    params: &P,
    records: &[OutputRecord],
) -> Result<Vec<u8>, CliError> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        command,
        params,
        results: records,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` to `path` all-or-nothing, or to `stdout` when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        None => {
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_approx(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_approx(2.0 / 15.0), "0.133333333333");
        assert_eq!(format_approx(1.0), "1");
        assert_eq!(format_approx(16.0), "16");
        assert_eq!(format_approx(0.5), "0.5");
        assert_eq!(format_approx(1.5e-7), "1.5e-07");
        assert_eq!(format_approx(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_approx(0.0001), "0.0001");
        assert_eq!(format_approx(-0.25), "-0.25");
    }

    #[test]
    fn tiny_rationals_render_through_logs() {
        let tiny = ExactRational::new(
            prefattach_core::ExactInteger::one(),
            prefattach_core::ExactInteger::pow2(2000),
        )
        .unwrap();
        let s = approx_rational(&tiny);
        assert!(s.starts_with("8.70980981"), "{s}");
        assert!(s.ends_with("e-603"), "{s}");
    }

    #[test]
    fn csv_has_stable_header_and_lf() {
        let rows = vec![OutputRecord::ProbRow {
            m: 1,
            n: 3,
            k: 2,
            exact: Some("1/3".into()),
            approx: "0.333333333333".into(),
        }];
        let text = String::from_utf8(render_csv(&rows).unwrap()).unwrap();
        assert_eq!(text, "m,n,k,exact,approx\n1,3,2,1/3,0.333333333333\n");
    }

    #[test]
    fn json_tags_kind() {
        let rows = vec![OutputRecord::Identity {
            name: "x".into(),
            cases: 1,
            failures: 0,
            passed: true,
            gated: true,
        }];
        let text = String::from_utf8(render_json("validate", &(), &rows).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], "1");
        assert_eq!(v["results"][0]["kind"], "identity");
    }
}
