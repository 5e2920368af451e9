//! CSV and JSON-lines output.
//!
//! Files written under the output directory:
//! `summary.csv` (one row per metric, one column per mode), `benefits.csv`,
//! `schedules.csv` (long format) and `trace.jsonl`. Numbers carry 9 significant
//! digits, so identical inputs give byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billing::{Benefit, ModeResult, ModeSummary, Report};
use crate::decentral::IterationTrace;
use crate::planner::MemberDay;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub benefits: PathBuf,
    pub schedules: PathBuf,
    pub trace: PathBuf,
}

impl ReportFiles {
    pub fn in_dir(dir: &Path) -> Self {
        ReportFiles {
            summary: dir.join("summary.csv"),
            benefits: dir.join("benefits.csv"),
            schedules: dir.join("schedules.csv"),
            trace: dir.join("trace.jsonl"),
        }
    }
}

/// An iteration trace tagged with the mode that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub mode: String,
    #[serde(flatten)]
    pub trace: IterationTrace,
}

/// One line of `schedules.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub mode: String,
    pub day: usize,
    pub t: usize,
    pub member: String,
    pub variable: String,
    pub value: f64,
}

/// `x` rounded to 9 significant digits, printed without exponent.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("valid float literal");
    if rounded == 0.0 {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

fn opt_number(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

type Metric = (&'static str, fn(&ModeSummary) -> String);

const METRICS: [Metric; 13] = [
    ("bill_eur", |m| format_number(m.bill)),
    ("discomfort_eur", |m| format_number(m.discomfort)),
    ("j_ev_eur", |m| format_number(m.j_ev)),
    ("j_wb_eur", |m| format_number(m.j_wb)),
    ("j_hp_eur", |m| format_number(m.j_hp)),
    ("e_act_kwh", |m| format_number(m.e_act)),
    ("e_act_ev_kwh", |m| format_number(m.e_act_ev)),
    ("e_act_wb_kwh", |m| format_number(m.e_act_wb)),
    ("e_act_hp_kwh", |m| format_number(m.e_act_hp)),
    ("e_dis_bss_kwh", |m| format_number(m.e_dis_bss)),
    ("objective_eur", |m| format_number(m.objective)),
    ("gap", |m| opt_number(m.gap)),
    ("deviation", |m| opt_number(m.deviation)),
];

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, ReportError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })
}

fn write_summary(path: &Path, report: &Report) -> Result<(), ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    let mut header = vec!["metric".to_string()];
    header.extend(report.modes.iter().map(|m| m.mode.clone()));
    w.write_record(&header).map_err(err)?;
    if !report.modes.is_empty() {
        for (name, get) in METRICS {
            let mut row = vec![name.to_string()];
            row.extend(report.modes.iter().map(get));
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn write_benefits(path: &Path, benefits: &[Benefit]) -> Result<(), ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record([
        "mode",
        "member",
        "baseline_bill_eur",
        "bill_eur",
        "delta_eur",
        "discomfort_eur",
        "flex_revenue_eur",
    ])
    .map_err(err)?;
    for b in benefits {
        w.write_record([
            b.mode.clone(),
            b.member.clone(),
            format_number(b.baseline_bill),
            format_number(b.bill),
            format_number(b.delta),
            format_number(b.discomfort),
            format_number(b.flex_revenue),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

/// The series of a member day as (variable name, values), sorted by name.
///
/// Device power series are included only for owned devices.
fn member_series(m: &MemberDay) -> Vec<(&'static str, &[f64])> {
    let mut v: Vec<(&'static str, &[f64])> = vec![
        ("e_com", &m.e_com),
        ("e_ret", &m.e_ret),
        ("i_com", &m.i_com),
        ("i_ret", &m.i_ret),
        ("inj", &m.inj),
        ("pv", &m.pv),
    ];
    if let Some(s) = &m.soc_bss {
        v.extend([("charge", &m.charge[..]), ("discharge", &m.discharge[..]), ("soc_bss", &s[..])]);
    }
    if let Some(s) = &m.soc_ev {
        v.extend([("ev", &m.ev[..]), ("soc_ev", &s[..])]);
    }
    if let Some(s) = &m.temp_wb {
        v.extend([("wb", &m.wb[..]), ("temp_wb", &s[..])]);
    }
    if let Some(s) = &m.temp_hp {
        v.extend([("hp", &m.hp[..]), ("temp_hp", &s[..])]);
    }
    for (name, s) in [("j_ev", &m.j_ev), ("j_wb", &m.j_wb), ("j_hp", &m.j_hp)] {
        if let Some(s) = s {
            v.push((name, &s[..]));
        }
    }
    v.sort_by_key(|(name, _)| *name);
    v
}

fn write_schedules(path: &Path, results: &[ModeResult]) -> Result<(), ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv_writer(path)?;
    w.write_record(["mode", "day", "t", "member", "variable", "value"]).map_err(err)?;
    for r in results {
        for d in &r.days {
            let mut members: Vec<&MemberDay> = d.members.iter().collect();
            members.sort_by(|a, b| a.id.cmp(&b.id));
            let series: Vec<(&str, Vec<(&'static str, &[f64])>)> =
                members.iter().map(|m| (m.id.as_str(), member_series(m))).collect();
            let day = d.day.to_string();
            for t in 0..d.steps() {
                let ts = t.to_string();
                for (id, vars) in &series {
                    for (name, values) in vars {
                        w.write_record([&r.mode, &day, &ts, *id, *name, &format_number(values[t])])
                            .map_err(err)?;
                    }
                }
            }
        }
    }
    w.flush().map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

fn write_traces(path: &Path, traces: &[TraceRecord]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for t in traces {
        serde_json::to_writer(&mut w, t).map_err(|source| ReportError::Json { path: path.to_path_buf(), source })?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes all four files into `out_dir`, creating it if needed.
pub fn write_report(
    report: &Report,
    benefits: &[Benefit],
    results: &[ModeResult],
    traces: &[TraceRecord],
    out_dir: &Path,
) -> Result<ReportFiles, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.to_path_buf(), source })?;
    let files = ReportFiles::in_dir(out_dir);
    write_summary(&files.summary, report)?;
    write_benefits(&files.benefits, benefits)?;
    write_schedules(&files.schedules, results)?;
    write_traces(&files.trace, traces)?;
    Ok(files)
}

/// Parses a `schedules.csv` file back into rows.
pub fn read_schedules(path: &Path) -> Result<Vec<ScheduleRow>, ReportError> {
    let err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<Result<Vec<ScheduleRow>, _>>().map_err(err)
}
