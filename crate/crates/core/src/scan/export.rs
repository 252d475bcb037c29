use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{Format, ScanRecord, COLUMNS};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Path {
        path: String,
        #[source]
        source: Box<ExportError>,
    },
}

fn with_path(path: &Path) -> impl Fn(ExportError) -> ExportError + '_ {
    move |e| ExportError::Path {
        path: path.display().to_string(),
        source: Box::new(e),
    }
}

/// Writes records to a file.
pub fn export(records: &[ScanRecord], path: &Path, format: Format) -> Result<(), ExportError> {
    let file = std::fs::File::create(path).map_err(|e| with_path(path)(e.into()))?;
    write_records(std::io::BufWriter::new(file), records, format).map_err(with_path(path))
}

/// Reads records from a file, format chosen by extension.
pub fn import(path: &Path) -> Result<Vec<ScanRecord>, ExportError> {
    let file = std::fs::File::open(path).map_err(|e| with_path(path)(e.into()))?;
    read_records(std::io::BufReader::new(file), Format::from_path(path)).map_err(with_path(path))
}

/// Writes records with shortest round-trip float formatting, so output is
/// byte-identical for identical records and re-reads exactly.
pub fn write_records<W: Write>(out: W, records: &[ScanRecord], format: Format) -> Result<(), ExportError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(COLUMNS)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_records<R: Read>(input: R, format: Format) -> Result<Vec<ScanRecord>, ExportError> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(input);
            Ok(r.deserialize().collect::<Result<Vec<ScanRecord>, _>>()?)
        }
        Format::Json => Ok(serde_json::from_reader(input)?),
    }
}

impl Format {
    /// Guess from a file extension; CSV otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_scan, ScanConfig};
    use super::*;

    #[test]
    fn round_trip_both_formats() {
        let mut cfg = ScanConfig::parse("delta_range_mhz = -3, 3, 7\nanalysis_mhz = 2, 4").unwrap();
        cfg.base.gamma_bar = 0.0;
        let mut recs = run_scan(&cfg);
        cfg.base = crate::bloch::SystemParams::reference();
        recs.extend(run_scan(&cfg));
        assert!(recs.iter().any(|r| r.c_full.is_none()));
        for fmt in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            write_records(&mut buf, &recs, fmt).unwrap();
            let back = read_records(buf.as_slice(), fmt).unwrap();
            for (a, b) in back.iter().zip(&recs) {
                assert_eq!(a, b, "{fmt:?}");
            }
            assert_eq!(back.len(), recs.len());
            let mut again = Vec::new();
            write_records(&mut again, &back, fmt).unwrap();
            assert_eq!(buf, again);
        }
    }

    #[test]
    fn empty_tables() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[], Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), COLUMNS.join(",") + "\n");
        assert!(read_records(buf.as_slice(), Format::Csv).unwrap().is_empty());
        let mut buf = Vec::new();
        write_records(&mut buf, &[], Format::Json).unwrap();
        assert!(read_records(buf.as_slice(), Format::Json).unwrap().is_empty());
    }

    #[test]
    fn header_matches_fields() {
        let cfg = ScanConfig::parse("delta_range_mhz = -1, 1, 2").unwrap();
        let rec = run_scan(&cfg).remove(0);
        let value = serde_json::to_value(&rec).unwrap();
        let keys: Vec<&str> = value.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        let mut sorted = COLUMNS.to_vec();
        sorted.sort();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort();
        assert_eq!(keys_sorted, sorted);
        for c in COLUMNS.iter().filter(|c| **c != "status") {
            assert!(rec.column(c).is_some(), "{c}");
        }
    }

    #[test]
    fn path_errors_name_the_file() {
        let err = export(&[], Path::new("/nonexistent/dir/x.csv"), Format::Csv).unwrap_err();
        assert!(err.to_string().starts_with("/nonexistent/dir/x.csv: "), "{err}");
        let err = import(Path::new("/nonexistent/y.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/y.json"));
    }

    #[test]
    fn csv_marks_undefined_as_empty() {
        let mut cfg = ScanConfig::parse("delta_range_mhz = -1, 1, 2").unwrap();
        cfg.base.gamma_bar = 0.0;
        let mut buf = Vec::new();
        write_records(&mut buf, &run_scan(&cfg), Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("delta_mhz,delta1_mhz,analysis_mhz,power_scale,t1,t2,g2,c_analytic,c_full,"));
        assert!(text.lines().nth(1).unwrap().contains(",,"));
    }
}
