//! Reading time series and histograms from disk.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use opstat_core::{PatternHistogram, TimeSeries};

use crate::error::{CliError, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum InputFormat {
    /// Any CSV with a header row.
    #[default]
    Plain,
    /// GHCN-daily CSV extract (`DATE`, `TMAX`, ... columns).
    Ghcn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum MissingPolicy {
    /// Skip rows with an empty value and count them.
    #[default]
    Drop,
    /// Stop at the first row with an empty value.
    Fail,
}

/// Where and how to read one series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesFile {
    pub path: PathBuf,
    pub format: InputFormat,
    /// Defaults to `TMAX` for GHCN files; for plain files to a column named
    /// `value`, else `TMAX`, else the first column that is not the date.
    pub value_column: Option<String>,
    /// Defaults to `DATE` (required for GHCN, used when present otherwise).
    pub date_column: Option<String>,
    pub missing: MissingPolicy,
}

impl SeriesFile {
    pub fn new(path: impl Into<PathBuf>, format: InputFormat) -> Self {
        Self {
            path: path.into(),
            format,
            value_column: None,
            date_column: None,
            missing: MissingPolicy::Drop,
        }
    }
}

/// A loaded series plus what was skipped on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub series: TimeSeries,
    pub rows: u64,
    pub dropped: u64,
    /// Sample positions `i` such that samples `i-1` and `i` are not adjacent
    /// in time (dropped rows or skipped dates in between). Patterns are still
    /// formed across gaps.
    pub gaps: Vec<usize>,
}

const GHCN_MISSING: &str = "-9999";

fn input_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn find_column(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| input_err(path, format!("no column named {name:?}")))
}

pub fn load_series(spec: &SeriesFile) -> Result<LoadedSeries, CliError> {
    let path = spec.path.as_path();
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    // csv's own line counter is off by one on CRLF input, where a record
    // position can point at the previous line's '\n'
    let line_at = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut end = (p.byte() as usize).min(bytes.len());
            while end < bytes.len() && matches!(bytes[end], b'\r' | b'\n') {
                end += 1;
            }
            1 + bytes[..end].iter().filter(|&&b| b == b'\n').count() as u64
        })
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| input_err(path, format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(input_err(path, "missing header row"));
    }

    let ghcn = spec.format == InputFormat::Ghcn;
    let date_col = match (&spec.date_column, ghcn) {
        (Some(name), _) => Some(find_column(path, &headers, name)?),
        (None, true) => Some(find_column(path, &headers, "DATE")?),
        (None, false) => headers.iter().position(|h| h == "DATE"),
    };
    let value_col = match (&spec.value_column, ghcn) {
        (Some(name), _) => find_column(path, &headers, name)?,
        (None, true) => find_column(path, &headers, "TMAX")?,
        (None, false) => headers
            .iter()
            .position(|h| h == "value")
            .or_else(|| headers.iter().position(|h| h == "TMAX"))
            .or_else(|| (0..headers.len()).find(|&i| Some(i) != date_col))
            .ok_or_else(|| input_err(path, "no value column"))?,
    };

    let mut samples = Vec::new();
    let mut gaps = Vec::new();
    let (mut rows, mut dropped) = (0u64, 0u64);
    let mut pending_gap = false;
    let mut last_date: Option<NaiveDate> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = line_at(e.position());
            CliError::Row {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            }
        })?;
        rows += 1;
        let line = line_at(record.position());
        let row_err = |message: String| CliError::Row {
            path: path.to_path_buf(),
            line,
            message,
        };
        let raw = record.get(value_col).unwrap_or("");
        if raw.is_empty() || (ghcn && raw == GHCN_MISSING) {
            match spec.missing {
                MissingPolicy::Drop => {
                    dropped += 1;
                    pending_gap = true;
                    continue;
                }
                MissingPolicy::Fail => {
                    return Err(row_err(format!("missing value in column {:?}", &headers[value_col])));
                }
            }
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| row_err(format!("cannot parse {raw:?} as a number")))?;
        if !value.is_finite() {
            return Err(row_err(format!("value {raw:?} is not finite")));
        }
        if let Some(c) = date_col {
            let text = record.get(c).unwrap_or("");
            let date = NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .or_else(|_| NaiveDate::parse_from_str(text, "%Y%m%d"))
                .map_err(|_| row_err(format!("cannot parse date {text:?}")))?;
            if let Some(prev) = last_date {
                if (date - prev).num_days() != 1 {
                    pending_gap = true;
                }
            }
            last_date = Some(date);
        }
        if pending_gap && !samples.is_empty() {
            gaps.push(samples.len());
        }
        pending_gap = false;
        samples.push(value);
    }

    if samples.is_empty() {
        return Err(input_err(path, "no usable rows"));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let series = TimeSeries::new(samples, label)
        .stage("load")?
        .with_source(path.display().to_string());
    Ok(LoadedSeries {
        series,
        rows,
        dropped,
        gaps,
    })
}

/// Reads pattern counts, one bin per line.
///
/// Lines starting with `#` and a non-numeric header line are skipped; on
/// each remaining line the last tab-, comma- or space-separated field is the
/// count. This accepts both bare count lists and the histogram tables this
/// tool writes.
pub fn read_histogram(path: &Path, dimension: Option<usize>) -> Result<PatternHistogram, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut counts = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let field = trimmed
            .split(|c: char| c == '\t' || c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .next_back()
            .unwrap_or("");
        match field.parse::<u64>() {
            Ok(c) => counts.push(c),
            Err(_) if counts.is_empty() && !header_seen => header_seen = true,
            Err(_) => {
                return Err(CliError::Row {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    message: format!("cannot parse {field:?} as a count"),
                })
            }
        }
    }
    PatternHistogram::from_counts(counts, dimension).stage("histogram")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows() {
        let f = write("DATE,TMAX\n2000-01-01,61\n2000-01-02,63\n2000-01-03,59\n");
        let r = load_series(&SeriesFile::new(f.path(), InputFormat::Ghcn)).unwrap();
        assert_eq!(r.series.samples(), &[61.0, 63.0, 59.0]);
        assert_eq!((r.rows, r.dropped), (3, 0));
        assert!(r.gaps.is_empty());
    }

    #[test]
    fn missing_values() {
        let f = write("DATE,TMAX\r\n2000-01-01,61\r\n2000-01-02,\r\n2000-01-03,59\r\n2000-01-04,60\r\n");
        let r = load_series(&SeriesFile::new(f.path(), InputFormat::Ghcn)).unwrap();
        assert_eq!(r.series.len(), 3);
        assert_eq!(r.dropped, 1);
        assert_eq!(r.gaps, vec![1]);

        let mut spec = SeriesFile::new(f.path(), InputFormat::Ghcn);
        spec.missing = MissingPolicy::Fail;
        match load_series(&spec) {
            Err(CliError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_names_line() {
        let f = write("value\n1.5\n2.5\nabc\n");
        match load_series(&SeriesFile::new(f.path(), InputFormat::Plain)) {
            Err(e @ CliError::Row { line: 4, .. }) => assert_eq!(e.exit_code(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn date_gaps_and_columns() {
        let f = write("\"STATION\",\"DATE\",\"TMAX\"\n\"X\",\"2000-01-01\",\"5\"\n\"X\",\"2000-01-05\",\"6\"\n\"X\",\"2000-01-06\",\"7\"\n");
        let r = load_series(&SeriesFile::new(f.path(), InputFormat::Ghcn)).unwrap();
        assert_eq!(r.gaps, vec![1]);
        let mut spec = SeriesFile::new(f.path(), InputFormat::Ghcn);
        spec.value_column = Some("TMIN".into());
        assert!(matches!(load_series(&spec), Err(CliError::Input { .. })));
    }

    #[test]
    fn plain_defaults() {
        let f = write("a,b\n1,10\n2,20\n");
        let r = load_series(&SeriesFile::new(f.path(), InputFormat::Plain)).unwrap();
        assert_eq!(r.series.samples(), &[1.0, 2.0]);
        let d = write("DATE,x\n2000-01-01,4\n2000-01-02,5\n");
        let r = load_series(&SeriesFile::new(d.path(), InputFormat::Plain)).unwrap();
        assert_eq!(r.series.samples(), &[4.0, 5.0]);
        let e = write("a\n\n");
        assert!(load_series(&SeriesFile::new(e.path(), InputFormat::Plain)).is_err());
    }

    #[test]
    fn histogram_files() {
        let f = write("# comment\npattern\tcount\n0\t5\n1\t7\n2\t0\n3\t1\n4\t2\n5\t9\n");
        let h = read_histogram(f.path(), Some(3)).unwrap();
        assert_eq!(h.counts(), &[5, 7, 0, 1, 2, 9]);
        let g = write("3\n4\n");
        assert_eq!(read_histogram(g.path(), None).unwrap().n(), 7);
        assert!(read_histogram(g.path(), Some(3)).is_err());
    }
}
