use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::FerResult;

pub const FER_CSV_HEADER: &str = "ebn0_db,frames,frame_errors,fer,bit_errors,ber";

/// One row of a FER curve file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FerRow {
    pub ebn0_db: f32,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub bit_errors: u64,
    pub ber: f64,
}

pub fn write_fer_csv<W: Write>(mut out: W, results: &[FerResult]) -> Result<()> {
    writeln!(out, "{FER_CSV_HEADER}")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.ebn0_db, r.frames, r.frame_errors, r.fer, r.bit_errors, r.ber
        )?;
    }
    Ok(())
}

pub fn parse_fer_csv(text: &str) -> Result<Vec<FerRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FER_CSV_HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                msg: format!("expected header '{FER_CSV_HEADER}'"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Csv { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("'{s}': {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
        rows.push(FerRow {
            ebn0_db: f[0].parse::<f32>().map_err(|e| bad(format!("'{}': {e}", f[0])))?,
            frames: int(f[1])?,
            frame_errors: int(f[2])?,
            fer: float(f[3])?,
            bit_errors: int(f[4])?,
            ber: float(f[5])?,
        });
    }
    Ok(rows)
}

pub fn read_fer_csv<P: AsRef<Path>>(path: P) -> Result<Vec<FerRow>> {
    parse_fer_csv(&fs::read_to_string(path)?)
}
