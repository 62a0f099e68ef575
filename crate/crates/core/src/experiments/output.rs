use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TrialRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER_PREFIX: &str = "n,trial,seed,total_error,recovered,iterations,wall_ms";
const FIXED_COLUMNS: usize = 7;

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: fixed columns then `err_1..err_k`, `k` taken from the first
/// record.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let k = records.first().map_or(0, |r| r.componentwise_error.len());
    let mut out = String::from(CSV_HEADER_PREFIX);
    for i in 1..=k {
        let _ = write!(out, ",err_{i}");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.trial,
            r.seed,
            float(r.total_error),
            u8::from(r.recovered),
            r.iterations,
            float(r.wall_ms)
        );
        for e in &r.componentwise_error {
            let _ = write!(out, ",{}", float(*e));
        }
        out.push('\n');
    }
    out
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    fs::write(path, records_to_csv(records)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv_text(&text, path)
}

fn parse_csv_text(text: &str, path: &Path) -> Result<Vec<TrialRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    if !header.starts_with(CSV_HEADER_PREFIX) {
        return Err(err(1, format!("unexpected header {header:?}")));
    }
    let columns = header.split(',').count();
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(err(line_no, format!("expected {columns} fields, found {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} value {s:?}"))
        }
        let parsed = (|| -> std::result::Result<TrialRecord, String> {
            let recovered = match fields[4] {
                "1" => true,
                "0" => false,
                other => return Err(format!("bad recovered value {other:?}")),
            };
            Ok(TrialRecord {
                n: num(fields[0], "n")?,
                trial: num(fields[1], "trial")?,
                seed: num(fields[2], "seed")?,
                total_error: num(fields[3], "total_error")?,
                recovered,
                iterations: num(fields[5], "iterations")?,
                wall_ms: num(fields[6], "wall_ms")?,
                componentwise_error: fields[FIXED_COLUMNS..]
                    .iter()
                    .map(|f| num(f, "err"))
                    .collect::<std::result::Result<_, _>>()?,
            })
        })();
        records.push(parsed.map_err(|m| err(line_no, m))?);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Mean total error against n, log-log.
    MeanError,
    /// Fraction of recovered trials against n.
    RecoveryFraction,
}

/// Writes a gnuplot 5 script plotting one line per `(label, csv file)`; the
/// CSV paths are written as given, so pass paths relative to the script.
pub fn emit_gnuplot(curves: &[(String, String)], kind: PlotKind, path: &Path) -> Result<()> {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal svg size 800,600\n");
    s.push_str("set output 'plot.svg'\n");
    s.push_str("set xlabel 'n'\n");
    let column = match kind {
        PlotKind::MeanError => {
            s.push_str("set logscale xy\n");
            s.push_str("set ylabel 'mean total error'\n");
            4
        }
        PlotKind::RecoveryFraction => {
            s.push_str("set yrange [0:1.05]\n");
            s.push_str("set ylabel 'fraction recovered'\n");
            5
        }
    };
    s.push_str("set key top right\n");
    let parts: Vec<String> = curves
        .iter()
        .map(|(label, file)| {
            format!(
                "'{}' skip 1 using 1:{column} smooth unique with linespoints title '{}'",
                file.replace('\'', "''"),
                label.replace('\'', "''")
            )
        })
        .collect();
    if parts.is_empty() {
        s.push_str("# no curves\n");
    } else {
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    fs::write(path, s).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, trial: usize, e: f64) -> TrialRecord {
        TrialRecord {
            n,
            trial,
            seed: u64::MAX - trial as u64,
            total_error: e,
            componentwise_error: vec![e / 3.0, 2.0 * e / 3.0],
            recovered: e <= 1e-4,
            iterations: 17,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn empty_records_give_header_only() {
        assert_eq!(records_to_csv(&[]), format!("{CSV_HEADER_PREFIX}\n"));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records = vec![
            record(10, 0, 0.1 + 0.2),
            record(10, 1, 1e-7),
            record(20, 0, std::f64::consts::PI),
        ];
        emit_csv(&records, &path).unwrap();
        assert_eq!(parse_csv(&path).unwrap(), records);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,trial,seed,total_error,recovered,iterations,wall_ms,err_1,err_2\n"));
    }

    #[test]
    fn nan_survives_and_bad_rows_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rec = record(5, 0, f64::NAN);
        emit_csv(&[rec], &path).unwrap();
        let back = parse_csv(&path).unwrap();
        assert!(back[0].total_error.is_nan());

        fs::write(&path, format!("{CSV_HEADER_PREFIX}\n1,0,3,x,0,1,0\n")).unwrap();
        match parse_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let missing = dir.path().join("nope").join("r.csv");
        assert!(matches!(emit_csv(&[], &missing), Err(Error::Io { .. })));
    }

    #[test]
    fn gnuplot_script_references_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.gp");
        emit_gnuplot(&[("I".into(), "records_identity.csv".into())], PlotKind::MeanError, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("'records_identity.csv' skip 1 using 1:4 smooth unique"));
        assert!(text.contains("set logscale xy"));
        if std::process::Command::new("gnuplot").arg("--version").output().is_ok() {
            fs::write(dir.path().join("records_identity.csv"), records_to_csv(&[record(1, 0, 0.5), record(2, 0, 0.25)])).unwrap();
            let status = std::process::Command::new("gnuplot")
                .arg("plot.gp")
                .current_dir(dir.path())
                .status()
                .unwrap();
            assert!(status.success());
        }
    }
}
