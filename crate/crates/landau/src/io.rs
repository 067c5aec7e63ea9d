//! Diagnostics CSV output and binary field dumps.
//!
//! A dump is the 8-byte magic `LANDAUF1`, then n as u64, V, t, and the n³
//! values as little-endian f64 in grid order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{LandauError, Result};
use crate::grid::{DistributionField, VelocityGrid};

const MAGIC: &[u8; 8] = b"LANDAUF1";

pub fn write_dump(mut w: impl Write, t: f64, f: &DistributionField) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(f.grid.n() as u64).to_le_bytes())?;
    w.write_all(&f.grid.half_width().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for x in &f.values {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_word(r: &mut impl Read) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| LandauError::BadDump(format!("truncated header or body: {e}")))?;
    Ok(b)
}

pub fn read_dump(mut r: impl Read) -> Result<(f64, DistributionField)> {
    if &read_word(&mut r)? != MAGIC {
        return Err(LandauError::BadDump("missing LANDAUF1 magic".into()));
    }
    let n = u64::from_le_bytes(read_word(&mut r)?) as usize;
    let v = f64::from_le_bytes(read_word(&mut r)?);
    let t = f64::from_le_bytes(read_word(&mut r)?);
    let grid = VelocityGrid::new(n, v).map_err(|e| LandauError::BadDump(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(f64::from_le_bytes(read_word(&mut r)?));
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(LandauError::BadDump("trailing bytes after the field".into()));
    }
    Ok((t, DistributionField::new(grid, values)?))
}

pub fn write_dump_file(path: &Path, t: f64, f: &DistributionField) -> Result<()> {
    write_dump(BufWriter::new(File::create(path)?), t, f)
}

pub fn read_dump_file(path: &Path) -> Result<(f64, DistributionField)> {
    read_dump(BufReader::new(File::open(path)?))
}

/// Streams diagnostics records as CSV, writing the header with the first row.
pub struct DiagnosticsCsv<W: Write> {
    writer: csv::Writer<W>,
    header: Option<Vec<String>>,
}

impl<W: Write> DiagnosticsCsv<W> {
    pub fn new(w: W) -> Self {
        DiagnosticsCsv {
            writer: csv::Writer::from_writer(w),
            header: None,
        }
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let header = rec.csv_header();
        match &self.header {
            None => {
                self.writer.write_record(&header)?;
                self.header = Some(header);
            }
            Some(h) if *h != header => {
                return Err(LandauError::InvalidParameter("diagnostics columns changed mid-run".into()));
            }
            Some(_) => {}
        }
        self.writer.write_record(rec.csv_row())?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| LandauError::Io(std::io::Error::other(e.to_string())))
    }
}

impl DiagnosticsCsv<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::GevreyFit;
    use proptest::prelude::*;

    fn record(t: f64, gevrey: bool) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mass: 1.0,
            energy: 1.5,
            entropy: -4.2,
            k_hat: 2.0,
            undershoot: 0.0,
            s: 0.0,
            sobolev: vec![0.1, 0.2],
            c0_list: vec![0.5],
            analytic: vec![f64::INFINITY],
            gevrey: gevrey.then_some(GevreyFit {
                c: 1.0,
                p: 0.0,
                b: 0.0,
                r2: 0.99,
                r_min: 0.4,
                r_max: 5.0,
                shells: 12,
            }),
        }
    }

    #[test]
    fn csv_schema() {
        let mut out = DiagnosticsCsv::new(Vec::new());
        out.write(&record(0.0, true)).unwrap();
        out.write(&record(0.5, false)).unwrap();
        let text = String::from_utf8(out.into_inner().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,M,E,H,K_hat,undershoot,H0_s0,H1_s0,analytic_c0_0.5,gevrey_c,gevrey_r2"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("inf"));
        assert!(lines[2].ends_with(",,"));
        let mut bad = record(1.0, true);
        bad.c0_list.push(1.0);
        bad.analytic.push(1.0);
        assert!(out_with(&[record(0.0, true), bad]).is_err());
    }

    fn out_with(recs: &[DiagnosticsRecord]) -> Result<()> {
        let mut out = DiagnosticsCsv::new(Vec::new());
        for r in recs {
            out.write(r)?;
        }
        Ok(())
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(matches!(read_dump(&b"NOTADUMP"[..]), Err(LandauError::BadDump(_))));
        let g = VelocityGrid::new(4, 1.0).unwrap();
        let mut buf = Vec::new();
        write_dump(&mut buf, 0.0, &DistributionField::zeros(g)).unwrap();
        assert!(read_dump(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_dump(&long[..]).is_err());
        buf[8] = 5;
        assert!(read_dump(&buf[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn dump_round_trips(t in 0.0..10.0f64, v in 0.5..20.0f64, seed in prop::collection::vec(-1e3..1e3f64, 64)) {
            let g = VelocityGrid::new(4, v).unwrap();
            let f = DistributionField::new(g, seed).unwrap();
            let mut buf = Vec::new();
            write_dump(&mut buf, t, &f).unwrap();
            let (t2, f2) = read_dump(&buf[..]).unwrap();
            prop_assert_eq!(t2, t);
            prop_assert_eq!(f2, f);
        }
    }
}
