//! CSV persistence of estimator reports and of transport problems.

use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use crate::error::{invalid, Error, Result};
use crate::estimator::EstimatorReport;
use crate::transport::{CostMatrix, TransportPlan};

pub const HEADER: [&str; 13] = [
    "h",
    "error",
    "residual",
    "errorsample",
    "errorreconst",
    "A",
    "B",
    "L",
    "total_bound",
    "seed",
    "samples",
    "error_full",
    "log10_total_bound",
];

/// One CSV row as parsed back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub h: f64,
    pub error: f64,
    pub residual: f64,
    pub errorsample: f64,
    pub errorreconst: f64,
    pub a: f64,
    pub b: f64,
    pub l: f64,
    pub total_bound: f64,
    pub seed: u64,
    pub samples: usize,
    pub error_full: f64,
    pub log10_total_bound: f64,
}

impl From<&EstimatorReport> for Row {
    fn from(r: &EstimatorReport) -> Self {
        Self {
            h: r.h,
            error: r.error,
            residual: r.e_det,
            errorsample: r.e0_stoch,
            errorreconst: r.e0_det,
            a: r.a,
            b: r.b,
            l: r.l,
            total_bound: r.total_bound,
            seed: r.seed,
            samples: r.samples,
            error_full: r.error_full,
            log10_total_bound: r.log10_total_bound,
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

fn io_err(path: &Path, e: impl Into<std::io::Error>) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::Other, e)
}

/// Writes the header and one line per row, LF-terminated.
pub fn write_rows<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            sci(r.h),
            sci(r.error),
            sci(r.residual),
            sci(r.errorsample),
            sci(r.errorreconst),
            sci(r.a),
            sci(r.b),
            sci(r.l),
            sci(r.total_bound),
            r.seed.to_string(),
            r.samples.to_string(),
            sci(r.error_full),
            sci(r.log10_total_bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

pub fn emit_csv(rows: &[Row], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_rows(rows, std::io::BufWriter::new(file)).map_err(|e| io_err(path, csv_to_io(e)))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| invalid(format!("missing column {}", HEADER[i])))?;
    raw.trim()
        .parse()
        .map_err(|_| invalid(format!("column {}: cannot parse {raw:?}", HEADER[i])))
}

pub fn parse_rows<R: Read>(input: R) -> Result<Vec<Row>> {
    let mut reader = ReaderBuilder::new().from_reader(input);
    let header = reader.headers().map_err(|e| invalid(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(invalid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| invalid(e.to_string()))?;
        rows.push(Row {
            h: field(&rec, 0)?,
            error: field(&rec, 1)?,
            residual: field(&rec, 2)?,
            errorsample: field(&rec, 3)?,
            errorreconst: field(&rec, 4)?,
            a: field(&rec, 5)?,
            b: field(&rec, 6)?,
            l: field(&rec, 7)?,
            total_bound: field(&rec, 8)?,
            seed: field(&rec, 9)?,
            samples: field(&rec, 10)?,
            error_full: field(&rec, 11)?,
            log10_total_bound: field(&rec, 12)?,
        });
    }
    Ok(rows)
}

fn read_numbers(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| io_err(path, csv_to_io(e)))?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("{}: not a number: {s:?}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        if !row.is_empty() {
            out.push(row);
        }
    }
    Ok(out)
}

/// Reads a headerless numeric matrix, one row per line.
pub fn read_cost_matrix(path: &Path) -> Result<CostMatrix> {
    CostMatrix::from_rows(&read_numbers(path)?)
}

/// Reads a weight vector written either on one line or one entry per line.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let rows = read_numbers(path)?;
    if rows.len() == 1 || rows.iter().all(|r| r.len() == 1) {
        Ok(rows.concat())
    } else {
        Err(invalid(format!("{}: expected a single row or a single column", path.display())))
    }
}

/// `cost,<value>` followed by the plan, one matrix row per line.
pub fn write_plan<W: Write>(plan: &TransportPlan, out: W) -> csv::Result<()> {
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .flexible(true)
        .from_writer(out);
    w.write_record(["cost".to_string(), sci(plan.cost)])?;
    for k in 0..plan.rows() {
        w.write_record((0..plan.cols()).map(|m| sci(plan.get(k, m))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plan(plan: &TransportPlan, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_plan(plan, std::io::BufWriter::new(file)).map_err(|e| io_err(path, csv_to_io(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::solve_emd;

    fn sample_row() -> Row {
        Row {
            h: 0.0625,
            error: 1.2345678901234567e-3,
            residual: 1.21783719199383e-3,
            errorsample: 3.0e-4,
            errorreconst: 9.87654321e-9,
            a: 12.5,
            b: 3.25,
            l: 7.0,
            total_bound: f64::INFINITY,
            seed: 42,
            samples: 100,
            error_full: 2.0 / 3.0,
            log10_total_bound: 1234.5678,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        assert_eq!(to_csv_string(&[]), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn row_round_trips() {
        let row = sample_row();
        let text = to_csv_string(&[row.clone()]);
        assert!(!text.contains('\r'));
        let back = parse_rows(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        let close = |x: f64, y: f64| x == y || ((x - y) / y).abs() <= 5e-15;
        for (x, y) in [
            (b.h, row.h),
            (b.error, row.error),
            (b.residual, row.residual),
            (b.errorsample, row.errorsample),
            (b.errorreconst, row.errorreconst),
            (b.a, row.a),
            (b.b, row.b),
            (b.l, row.l),
            (b.total_bound, row.total_bound),
            (b.error_full, row.error_full),
            (b.log10_total_bound, row.log10_total_bound),
        ] {
            assert!(close(x, y), "{x} vs {y}");
        }
        assert_eq!((b.seed, b.samples), (42, 100));
    }

    #[test]
    fn fifteen_significant_digits() {
        let text = to_csv_string(&[sample_row()]);
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("6.25000000000000e-2,1.23456789012346e-3,"));
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_rows("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn transport_files() {
        let dir = tempfile::tempdir().unwrap();
        let cost = dir.path().join("cost.csv");
        let wa = dir.path().join("a.csv");
        let wb = dir.path().join("b.csv");
        std::fs::write(&cost, "# two by two\n1,3\n4,1\n").unwrap();
        std::fs::write(&wa, "0.5,0.5\n").unwrap();
        std::fs::write(&wb, "0.5\n0.5\n").unwrap();
        let c = read_cost_matrix(&cost).unwrap();
        let plan = solve_emd(&read_weights(&wa).unwrap(), &read_weights(&wb).unwrap(), &c).unwrap();
        let mut buf = Vec::new();
        write_plan(&plan, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "cost,1.00000000000000e0\n5.00000000000000e-1,0.00000000000000e0\n0.00000000000000e0,5.00000000000000e-1\n"
        );
        std::fs::write(&wa, "0.5,0.5\n0.5,0.5\n").unwrap();
        assert!(read_weights(&wa).is_err());
    }
}
