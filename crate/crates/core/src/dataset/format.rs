//! On-disk dataset layout.
//!
//! A file is a 69-byte little-endian header followed by `record_count`
//! fixed-size records:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4  | magic `SBND` |
//! | 4  | 2  | version (1) |
//! | 6  | 2  | flags (bit 0: records carry `e_chan`) |
//! | 8  | 2  | n |
//! | 10 | 2  | k |
//! | 12 | 2  | d_min |
//! | 14 | 4  | training Eb/N0 in dB (f32) |
//! | 18 | 1  | target kind (0 = channel, 1 = ML) |
//! | 19 | 1  | construction method (1..=4) |
//! | 20 | 1  | w_max (0 if unused) |
//! | 21 | 8  | record count |
//! | 29 | 32 | code name, ASCII, zero padded |
//! | 61 | 8  | master seed |
//!
//! Each record holds `n` f32 normalized reliabilities, then the bit-packed
//! (LSB-first) hard decision `z`, syndrome `s`, target error pattern and,
//! when flagged, the channel error pattern.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::BitVec;
use crate::code::LinearCode;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SBND";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 69;
pub const CODE_NAME_LEN: usize = 32;
pub const FLAG_CHANNEL_PATTERN: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetKind {
    /// The true channel error pattern `z ⊕ c`.
    Channel = 0,
    /// The maximum-likelihood error pattern found by OSD.
    MaximumLikelihood = 1,
}

impl TargetKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Channel),
            1 => Some(Self::MaximumLikelihood),
            _ => None,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "chan" => Ok(Self::Channel),
            "ml" => Ok(Self::MaximumLikelihood),
            other => Err(Error::UnknownName {
                kind: "target",
                name: other.to_string(),
                available: "chan, ml".into(),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Channel => "chan",
            Self::MaximumLikelihood => "ml",
        }
    }
}

/// Dataset construction method, as recorded in the header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Channel = 1,
    UniformWeight = 2,
    Importance = 3,
    UniformSyndrome = 4,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Channel,
        Method::UniformWeight,
        Method::Importance,
        Method::UniformSyndrome,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| *m as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Channel => "chan",
            Self::UniformWeight => "uniw",
            Self::Importance => "is",
            Self::UniformSyndrome => "unis",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetHeader {
    pub flags: u16,
    pub n: u16,
    pub k: u16,
    pub d_min: u16,
    pub snr_db: f32,
    pub target_kind: TargetKind,
    pub method: Method,
    pub w_max: u8,
    pub record_count: u64,
    pub code_name: String,
    pub master_seed: u64,
}

impl DatasetHeader {
    pub fn stores_channel_pattern(&self) -> bool {
        self.flags & FLAG_CHANNEL_PATTERN != 0
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn redundancy(&self) -> usize {
        (self.n - self.k) as usize
    }

    pub fn record_len(&self) -> usize {
        let n = self.n();
        let word = n.div_ceil(8);
        let patterns = if self.stores_channel_pattern() { 3 } else { 2 };
        4 * n + patterns * word + self.redundancy().div_ceil(8)
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + self.record_count * self.record_len() as u64
    }

    pub fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let name = self.code_name.as_bytes();
        if name.len() > CODE_NAME_LEN || !self.code_name.is_ascii() {
            return Err(Error::InvalidParameter(format!(
                "code name '{}' must be ASCII and at most {CODE_NAME_LEN} bytes",
                self.code_name
            )));
        }
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6..8].copy_from_slice(&self.flags.to_le_bytes());
        b[8..10].copy_from_slice(&self.n.to_le_bytes());
        b[10..12].copy_from_slice(&self.k.to_le_bytes());
        b[12..14].copy_from_slice(&self.d_min.to_le_bytes());
        b[14..18].copy_from_slice(&self.snr_db.to_le_bytes());
        b[18] = self.target_kind as u8;
        b[19] = self.method as u8;
        b[20] = self.w_max;
        b[21..29].copy_from_slice(&self.record_count.to_le_bytes());
        b[29..29 + name.len()].copy_from_slice(name);
        b[61..69].copy_from_slice(&self.master_seed.to_le_bytes());
        Ok(b)
    }

    pub fn decode(b: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::CorruptHeader(m);
        if b.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                actual: b.len() as u64,
            });
        }
        if b[0..4] != MAGIC {
            return Err(bad(format!("bad magic {:?}", &b[0..4])));
        }
        let u16_at = |o: usize| u16::from_le_bytes([b[o], b[o + 1]]);
        let version = u16_at(4);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let flags = u16_at(6);
        if flags & !FLAG_CHANNEL_PATTERN != 0 {
            return Err(bad(format!("unknown flag bits {flags:#06x}")));
        }
        let (n, k) = (u16_at(8), u16_at(10));
        if k == 0 || k >= n {
            return Err(bad(format!("invalid dimensions n={n}, k={k}")));
        }
        let target_kind =
            TargetKind::from_byte(b[18]).ok_or_else(|| bad(format!("target kind {}", b[18])))?;
        let method = Method::from_byte(b[19]).ok_or_else(|| bad(format!("method {}", b[19])))?;
        let name_bytes = &b[29..61];
        let end = name_bytes.iter().position(|&c| c == 0).unwrap_or(CODE_NAME_LEN);
        if name_bytes[end..].iter().any(|&c| c != 0) || !name_bytes[..end].is_ascii() {
            return Err(bad("code name is not zero-padded ASCII".into()));
        }
        Ok(Self {
            flags,
            n,
            k,
            d_min: u16_at(12),
            snr_db: f32::from_le_bytes(b[14..18].try_into().unwrap()),
            target_kind,
            method,
            w_max: b[20],
            record_count: u64::from_le_bytes(b[21..29].try_into().unwrap()),
            code_name: String::from_utf8(name_bytes[..end].to_vec()).unwrap(),
            master_seed: u64::from_le_bytes(b[61..69].try_into().unwrap()),
        })
    }

    /// Checks that the header describes `code`.
    pub fn check_code(&self, code: &LinearCode) -> Result<()> {
        if (self.n(), self.k as usize) != (code.n(), code.k()) {
            return Err(Error::InvalidParameter(format!(
                "dataset is for ({}, {}) but code is ({}, {})",
                self.n,
                self.k,
                code.n(),
                code.k()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub reliab_norm: Vec<f32>,
    pub z: BitVec,
    pub s: BitVec,
    pub e_target: BitVec,
    pub e_chan: Option<BitVec>,
}

impl DatasetRecord {
    pub fn encode_into(&self, header: &DatasetHeader, out: &mut Vec<u8>) {
        debug_assert_eq!(self.reliab_norm.len(), header.n());
        debug_assert_eq!(self.e_chan.is_some(), header.stores_channel_pattern());
        for r in &self.reliab_norm {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out.extend_from_slice(&self.z.to_bytes());
        out.extend_from_slice(&self.s.to_bytes());
        out.extend_from_slice(&self.e_target.to_bytes());
        if let Some(e) = &self.e_chan {
            out.extend_from_slice(&e.to_bytes());
        }
    }

    pub fn decode(header: &DatasetHeader, bytes: &[u8], index: u64) -> Result<Self> {
        let n = header.n();
        let word = n.div_ceil(8);
        let sword = header.redundancy().div_ceil(8);
        debug_assert_eq!(bytes.len(), header.record_len());
        let reliab_norm = bytes[..4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut off = 4 * n;
        let mut take = |bits: usize, len: usize, what: &str| {
            let v = BitVec::from_bytes(bits, &bytes[off..off + len]).ok_or_else(|| {
                Error::InvariantViolation {
                    record: index,
                    msg: format!("{what} has padding bits set"),
                }
            });
            off += len;
            v
        };
        let z = take(n, word, "z")?;
        let s = take(header.redundancy(), sword, "s")?;
        let e_target = take(n, word, "e_target")?;
        let e_chan = if header.stores_channel_pattern() {
            Some(take(n, word, "e_chan")?)
        } else {
            None
        };
        Ok(Self {
            reliab_norm,
            z,
            s,
            e_target,
            e_chan,
        })
    }

    fn reliab_f64(&self) -> Vec<f64> {
        self.reliab_norm.iter().map(|&r| f64::from(r)).collect()
    }

    /// w_L of the target on the normalized reliability scale.
    pub fn target_reliability_weight(&self) -> f64 {
        self.e_target.weighted_sum(&self.reliab_f64())
    }

    pub fn channel_reliability_weight(&self) -> Option<f64> {
        self.e_chan.as_ref().map(|e| e.weighted_sum(&self.reliab_f64()))
    }
}

/// Streams records after writing the header. `finish` fails unless exactly
/// `header.record_count` records were written.
pub struct DatasetWriter<W: Write> {
    header: DatasetHeader,
    inner: W,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(header: DatasetHeader, mut inner: W) -> Result<Self> {
        inner.write_all(&header.encode()?)?;
        Ok(Self {
            buf: Vec::with_capacity(header.record_len()),
            header,
            inner,
            written: 0,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn write_record(&mut self, record: &DatasetRecord) -> Result<()> {
        if self.written == self.header.record_count {
            return Err(Error::InvalidParameter(format!(
                "header declares {} records",
                self.header.record_count
            )));
        }
        if record.e_chan.is_some() != self.header.stores_channel_pattern() {
            return Err(Error::InvalidParameter(
                "record e_chan presence disagrees with header flags".into(),
            ));
        }
        self.buf.clear();
        record.encode_into(&self.header, &mut self.buf);
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.record_count {
            return Err(Error::InvalidParameter(format!(
                "wrote {} records, header declares {}",
                self.written, self.header.record_count
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Re-checks record invariants against the code the dataset was built for.
pub struct RecordValidator<'a> {
    code: &'a LinearCode,
    target_kind: TargetKind,
}

impl<'a> RecordValidator<'a> {
    pub fn new(code: &'a LinearCode, header: &DatasetHeader) -> Result<Self> {
        header.check_code(code)?;
        Ok(Self {
            code,
            target_kind: header.target_kind,
        })
    }

    pub fn check(&self, record: &DatasetRecord, index: u64) -> Result<()> {
        let fail = |msg: String| Err(Error::InvariantViolation { record: index, msg });
        if record.s.is_zero() {
            return fail("zero syndrome".into());
        }
        if self.code.syndrome(&record.z)? != record.s {
            return fail("stored syndrome differs from syndrome(z)".into());
        }
        if record.reliab_norm.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return fail("normalized reliability outside [0, 1]".into());
        }
        if !record.reliab_norm.contains(&1.0) {
            return fail("no normalized reliability equals 1".into());
        }
        if self.target_kind == TargetKind::MaximumLikelihood
            && !self.code.is_codeword(&record.z.xor(&record.e_target))
        {
            return fail("z ⊕ e_target is not a codeword".into());
        }
        if let Some(e_chan) = &record.e_chan {
            if !self.code.is_codeword(&record.z.xor(e_chan)) {
                return fail("z ⊕ e_chan is not a codeword".into());
            }
            if self.target_kind == TargetKind::Channel && e_chan != &record.e_target {
                return fail("channel target differs from stored e_chan".into());
            }
            if self.target_kind == TargetKind::MaximumLikelihood && e_chan != &record.e_target {
                let target = record.target_reliability_weight();
                let chan = record.channel_reliability_weight().unwrap();
                // reliabilities are stored as f32; allow for that quantization
                let slack = f64::from(f32::EPSILON) * record.reliab_norm.len() as f64;
                if target > chan + slack {
                    return fail(format!("w_L(e_target) = {target} exceeds w_L(e_chan) = {chan}"));
                }
            }
        }
        Ok(())
    }
}

/// Streaming reader. Yields records in file order.
pub struct DatasetReader<R> {
    header: DatasetHeader,
    inner: R,
    next_index: u64,
    buf: Vec<u8>,
}

impl<R: Read> DatasetReader<R> {
    /// Reads and validates the header. `total_len`, when known, must match
    /// the length implied by the header.
    pub fn new(mut inner: R, total_len: Option<u64>) -> Result<Self> {
        let mut hb = [0u8; HEADER_LEN];
        let got = read_fully(&mut inner, &mut hb)?;
        if got < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN as u64,
                actual: got as u64,
            });
        }
        let header = DatasetHeader::decode(&hb)?;
        if let Some(actual) = total_len {
            let expected = header.file_len();
            if actual < expected {
                return Err(Error::Truncated { expected, actual });
            }
            if actual > expected {
                return Err(Error::CorruptHeader(format!(
                    "file has {actual} bytes, header implies {expected}"
                )));
            }
        }
        Ok(Self {
            buf: vec![0; header.record_len()],
            header,
            inner,
            next_index: 0,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn read_record(&mut self) -> Result<Option<DatasetRecord>> {
        if self.next_index == self.header.record_count {
            return Ok(None);
        }
        let got = read_fully(&mut self.inner, &mut self.buf)?;
        if got < self.buf.len() {
            return Err(Error::Truncated {
                expected: self.header.file_len(),
                actual: HEADER_LEN as u64
                    + self.next_index * self.header.record_len() as u64
                    + got as u64,
            });
        }
        let record = DatasetRecord::decode(&self.header, &self.buf, self.next_index)?;
        self.next_index += 1;
        Ok(Some(record))
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_record().transpose()
    }
}

fn read_fully<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

/// Opens a dataset file, checking magic, version and length.
pub fn read_dataset<P: AsRef<Path>>(path: P) -> Result<DatasetReader<BufReader<File>>> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    DatasetReader::new(BufReader::new(file), Some(len))
}

/// Reads every record and re-checks its invariants against `code`.
pub fn read_dataset_checked<P: AsRef<Path>>(
    path: P,
    code: &LinearCode,
) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let reader = read_dataset(path)?;
    let header = reader.header().clone();
    let validator = RecordValidator::new(code, &header)?;
    let mut records = Vec::with_capacity(header.record_count.min(1 << 24) as usize);
    for (i, rec) in reader.enumerate() {
        let rec = rec?;
        validator.check(&rec, i as u64)?;
        records.push(rec);
    }
    Ok((header, records))
}

pub fn create_writer<P: AsRef<Path>>(
    path: P,
    header: DatasetHeader,
) -> Result<DatasetWriter<BufWriter<File>>> {
    DatasetWriter::new(header, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(count: u64, flags: u16) -> DatasetHeader {
        DatasetHeader {
            flags,
            n: 31,
            k: 21,
            d_min: 5,
            snr_db: 3.0,
            target_kind: TargetKind::MaximumLikelihood,
            method: Method::UniformWeight,
            w_max: 4,
            record_count: count,
            code_name: "BCH_31_21_5".into(),
            master_seed: 0xDEAD_BEEF,
        }
    }

    #[test]
    fn header_layout_is_fixed() {
        let h = header(7, 1);
        let b = h.encode().unwrap();
        assert_eq!(&b[0..4], b"SBND");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..8], &[1, 0]);
        assert_eq!(&b[8..10], &[31, 0]);
        assert_eq!(&b[14..18], &3.0f32.to_le_bytes());
        assert_eq!(b[18], 1);
        assert_eq!(b[19], 2);
        assert_eq!(b[20], 4);
        assert_eq!(&b[21..29], &7u64.to_le_bytes());
        assert_eq!(&b[29..40], b"BCH_31_21_5");
        assert!(b[40..61].iter().all(|&c| c == 0));
        assert_eq!(&b[61..69], &0xDEAD_BEEFu64.to_le_bytes());
        assert_eq!(DatasetHeader::decode(&b).unwrap(), h);
        // 31 f32 + z + s + e_target + e_chan
        assert_eq!(h.record_len(), 124 + 4 + 2 + 4 + 4);
    }

    #[test]
    fn header_rejects_corruption() {
        let mut b = header(1, 0).encode().unwrap();
        b[0] = b'X';
        assert!(matches!(DatasetHeader::decode(&b), Err(Error::CorruptHeader(_))));
        let mut b = header(1, 0).encode().unwrap();
        b[4] = 2;
        assert!(matches!(DatasetHeader::decode(&b), Err(Error::CorruptHeader(_))));
        let mut b = header(1, 0).encode().unwrap();
        b[19] = 9;
        assert!(DatasetHeader::decode(&b).is_err());
        let mut long = header(1, 0);
        long.code_name = "X".repeat(33);
        assert!(long.encode().is_err());
    }

    #[test]
    fn truncated_stream_reports_byte_counts() {
        let h = header(2, 0);
        let mut bytes = h.encode().unwrap().to_vec();
        bytes.extend(std::iter::repeat_n(0u8, h.record_len() + 3));
        let total = bytes.len() as u64;
        match DatasetReader::new(&bytes[..], Some(total)) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, h.file_len());
                assert_eq!(actual, total);
            }
            other => panic!("expected truncation error, got {:?}", other.err()),
        }
        // without a known length the error surfaces when the record is read
        let mut r = DatasetReader::new(&bytes[..], None).unwrap();
        assert!(r.read_record().unwrap().is_some());
        let err = r.read_record().unwrap_err().to_string();
        assert!(err.contains(&format!("expected {} bytes", h.file_len())), "{err}");
    }
}
