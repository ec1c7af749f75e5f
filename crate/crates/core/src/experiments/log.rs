//! Trajectory logs and their CSV / JSON-lines renderings.
//!
//! CSV columns: `t,action,observation,reward,death,w_<member>...,ratio,
//! Lxi_chosen,Lxi_<action>...,V_<action>...`. Numbers carry 12 significant
//! digits, lines end in LF, and cells without a value are empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::LogFormat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: usize,
    pub action: usize,
    /// `None` on the death row.
    pub observation: Option<usize>,
    pub reward: Option<f64>,
    pub death: bool,
    /// Posterior after this cycle, one per mixture member.
    pub weights: Vec<f64>,
    pub ratio: Option<f64>,
    /// Agent-model measure loss of the chosen action, before the percept.
    pub loss_chosen: f64,
    pub losses: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub members: Vec<String>,
    pub action_count: usize,
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn new(members: Vec<String>, action_count: usize) -> Self {
        Self {
            members,
            action_count,
            rows: Vec::new(),
        }
    }

    pub fn died(&self) -> bool {
        self.rows.last().is_some_and(|r| r.death)
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["t", "action", "observation", "reward", "death"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.members.iter().map(|m| format!("w_{m}")));
        cols.push("ratio".into());
        cols.push("Lxi_chosen".into());
        cols.extend((0..self.action_count).map(|a| format!("Lxi_{a}")));
        cols.extend((0..self.action_count).map(|a| format!("V_{a}")));
        cols
    }

    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header().join(","))?;
        for row in &self.rows {
            let mut cells = vec![
                row.t.to_string(),
                row.action.to_string(),
                row.observation.map(|o| o.to_string()).unwrap_or_default(),
                row.reward.map(format_g12).unwrap_or_default(),
                u8::from(row.death).to_string(),
            ];
            cells.extend(row.weights.iter().copied().map(format_g12));
            cells.push(row.ratio.map(format_g12).unwrap_or_default());
            cells.push(format_g12(row.loss_chosen));
            cells.extend(row.losses.iter().copied().map(format_g12));
            cells.extend(row.values.iter().copied().map(format_g12));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct JsonRow<'a> {
            t: usize,
            action: usize,
            observation: Option<usize>,
            reward: Option<f64>,
            death: bool,
            weights: Vec<(&'a str, f64)>,
            ratio: Option<f64>,
            #[serde(rename = "Lxi_chosen")]
            loss_chosen: f64,
            #[serde(rename = "Lxi")]
            losses: Vec<f64>,
            #[serde(rename = "V")]
            values: Vec<f64>,
        }
        let round = |xs: &[f64]| xs.iter().map(|&x| round_g12(x)).collect::<Vec<_>>();
        for row in &self.rows {
            let json = JsonRow {
                t: row.t,
                action: row.action,
                observation: row.observation,
                reward: row.reward.map(round_g12),
                death: row.death,
                weights: self
                    .members
                    .iter()
                    .map(String::as_str)
                    .zip(round(&row.weights))
                    .collect(),
                ratio: row.ratio.map(round_g12),
                loss_chosen: round_g12(row.loss_chosen),
                losses: round(&row.losses),
                values: round(&row.values),
            };
            serde_json::to_writer(&mut *out, &json)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_to<W: Write + ?Sized>(
        &self,
        out: &mut W,
        format: LogFormat,
    ) -> std::io::Result<()> {
        match format {
            LogFormat::Csv => self.write_csv(out),
            LogFormat::Jsonl => self.write_jsonl(out),
        }
    }
}

pub fn write_log(log: &TrajectoryLog, path: &Path, format: LogFormat) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    log.write_to(&mut out, format).map_err(io)?;
    out.flush().map_err(io)
}

/// Parses a CSV log written by [`write_log`].
pub fn read_csv(path: &Path) -> Result<TrajectoryLog> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv_from(file).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn read_csv_from<R: std::io::Read>(input: R) -> Result<TrajectoryLog, String> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let members: Vec<String> = header
        .iter()
        .filter_map(|c| c.strip_prefix("w_").map(str::to_string))
        .collect();
    let action_count = header.iter().filter(|c| c.starts_with("V_")).count();
    let log = TrajectoryLog::new(members, action_count);
    if header != log.header() {
        return Err(format!("unexpected header {header:?}"));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let cells: Vec<&str> = record.iter().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        let opt = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let int = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
        let nums = |r: std::ops::Range<usize>| {
            cells[r]
                .iter()
                .map(|s| num(s))
                .collect::<Result<Vec<_>, _>>()
        };
        let m = log.members.len();
        let a = action_count;
        let w0 = 5;
        let ratio_at = w0 + m;
        rows.push(LogRow {
            t: int(cells[0])?,
            action: int(cells[1])?,
            observation: if cells[2].is_empty() {
                None
            } else {
                Some(int(cells[2])?)
            },
            reward: opt(cells[3])?,
            death: cells[4] == "1",
            weights: nums(w0..ratio_at)?,
            ratio: opt(cells[ratio_at])?,
            loss_chosen: num(cells[ratio_at + 1])?,
            losses: nums(ratio_at + 2..ratio_at + 2 + a)?,
            values: nums(ratio_at + 2 + a..ratio_at + 2 + 2 * a)?,
        });
    }
    Ok(TrajectoryLog { rows, ..log })
}

/// Renders like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific rendering");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..PRECISION).contains(&exp) {
        let fixed = format!("{:.*}", (PRECISION - 1 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn round_g12(x: f64) -> f64 {
    format_g12(x).parse().unwrap_or(x)
}
