//! CSV layout of experiment results.
//!
//! Column order is fixed by [`HEADER`]. Trial rows have `kind = trial`;
//! each node count is followed by its aggregate rows (`kind = mean` and
//! `kind = p10`), whose `trial` column holds the number of trials that
//! entered the statistic. Floating-point fields use scientific notation with
//! nine significant digits; missing values are empty.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::{AggregateRow, Combo, PointResult, ResultRow, RowStatus};
use crate::error::{Error, Result};

pub const HEADER: [&str; 14] = [
    "kind",
    "nodes",
    "trial",
    "seed",
    "channel_strategy",
    "time_strategy",
    "power_strategy",
    "model",
    "status",
    "min_rate",
    "mean_rate",
    "channel_min_rates",
    "flags",
    "note",
];

pub fn sci(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.8e}")
    }
}

fn parse_sci(field: &str) -> std::result::Result<f64, String> {
    match field {
        "" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field.parse().map_err(|_| format!("bad number {field:?}")),
    }
}

fn combo_fields(c: &Combo) -> [String; 4] {
    [
        c.channel.to_string(),
        c.time.to_string(),
        c.power.to_string(),
        c.model.to_string(),
    ]
}

fn trial_record(row: &ResultRow) -> Vec<String> {
    let [ch, t, p, m] = combo_fields(&row.combo);
    vec![
        "trial".into(),
        row.nodes.to_string(),
        row.trial.to_string(),
        row.seed.to_string(),
        ch,
        t,
        p,
        m,
        row.status.name().into(),
        sci(row.min_rate),
        sci(row.mean_rate),
        row.channel_min.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(";"),
        if row.fair_fallback { "fair_fallback".into() } else { String::new() },
        row.note.clone(),
    ]
}

fn aggregate_record(agg: &AggregateRow, seed: u64) -> Vec<String> {
    let [ch, t, p, m] = combo_fields(&agg.combo);
    vec![
        agg.statistic.name().into(),
        agg.nodes.to_string(),
        agg.trials.to_string(),
        seed.to_string(),
        ch,
        t,
        p,
        m,
        if agg.trials > 0 { "ok" } else { "empty" }.into(),
        sci(agg.min_rate),
        sci(agg.mean_rate),
        String::new(),
        String::new(),
        String::new(),
    ]
}

/// Streams result points to a CSV sink, flushing after each point so the
/// file is valid CSV whenever it is observed between points.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
    path: PathBuf,
    seed: u64,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W, path: impl Into<PathBuf>, seed: u64) -> Result<Self> {
        let path = path.into();
        let mut writer = csv::WriterBuilder::new().from_writer(inner);
        writer.write_record(HEADER).map_err(|e| Error::csv(&path, e))?;
        writer.flush().map_err(|e| Error::io(&path, e))?;
        Ok(CsvSink { writer, path, seed })
    }

    pub fn write_point(&mut self, point: &PointResult) -> Result<()> {
        for row in &point.rows {
            self.writer
                .write_record(trial_record(row))
                .map_err(|e| Error::csv(&self.path, e))?;
        }
        for agg in &point.aggregates {
            self.writer
                .write_record(aggregate_record(agg, self.seed))
                .map_err(|e| Error::csv(&self.path, e))?;
        }
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path;
        self.writer
            .into_inner()
            .map_err(|e| Error::io(&path, std::io::Error::other(e.to_string())))
    }
}

/// Reads the trial rows of a results CSV. Aggregate rows are skipped.
pub fn read_trial_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected header; not a noma-lpwa results file".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        if &rec[0] != "trial" {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let num = |j: usize| parse_sci(&rec[j]).map_err(&bad);
        let int = |j: usize| rec[j].parse::<u64>().map_err(|_| bad(format!("bad integer {:?}", &rec[j])));
        let combo = Combo {
            channel: rec[4].parse().map_err(|e: Error| bad(e.to_string()))?,
            time: rec[5].parse().map_err(|e: Error| bad(e.to_string()))?,
            power: rec[6].parse().map_err(|e: Error| bad(e.to_string()))?,
            model: rec[7].parse().map_err(|e: Error| bad(e.to_string()))?,
        };
        let status = match &rec[8] {
            "ok" => RowStatus::Ok,
            "infeasible" => RowStatus::Infeasible,
            other => return Err(bad(format!("unknown status {other:?}"))),
        };
        let channel_min = if rec[11].is_empty() {
            Vec::new()
        } else {
            rec[11]
                .split(';')
                .map(|s| parse_sci(s).map_err(&bad))
                .collect::<Result<_>>()?
        };
        rows.push(ResultRow {
            nodes: int(1)? as usize,
            trial: int(2)? as usize,
            seed: int(3)?,
            combo,
            status,
            min_rate: num(9)?,
            mean_rate: num(10)?,
            channel_min,
            fair_fallback: rec[12].split(';').any(|f| f == "fair_fallback"),
            note: rec[13].to_string(),
            wall_time: Duration::ZERO,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    config_text: String,
    warnings: Vec<String>,
    rows: usize,
    infeasible_rows: usize,
    wall_time_s: f64,
    point_wall_time_s: Vec<(usize, f64)>,
}

/// Path of the JSON sidecar written next to `csv_path`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_metadata(
    csv_path: &Path,
    config: &ExperimentConfig,
    points: &[PointResult],
    wall_time: Duration,
) -> Result<PathBuf> {
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        config_text: config.to_text(),
        warnings: config.network(config.node_counts[0], 0).warnings(),
        rows: points.iter().map(|p| p.rows.len()).sum(),
        infeasible_rows: points
            .iter()
            .flat_map(|p| &p.rows)
            .filter(|r| r.status == RowStatus::Infeasible)
            .count(),
        wall_time_s: wall_time.as_secs_f64(),
        point_wall_time_s: points
            .iter()
            .map(|p| (p.nodes, p.rows.iter().map(|r| r.wall_time.as_secs_f64()).sum()))
            .collect(),
    };
    let path = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sci(125000.0), "1.25000000e5");
        assert_eq!(sci(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(sci(f64::NAN), "");
        assert_eq!(sci(f64::INFINITY), "inf");
        assert_eq!(parse_sci("1.25000000e5").unwrap(), 125000.0);
        assert!(parse_sci("").unwrap().is_nan());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/r.csv")), PathBuf::from("out/r.csv.meta.json"));
    }
}
