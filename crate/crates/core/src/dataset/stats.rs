//! Weight and syndrome histograms of dataset files.

use std::io::{Read, Write};
use std::path::Path;

use crate::code::LinearCode;
use crate::dataset::format::{read_dataset, DatasetHeader, DatasetReader, RecordValidator};
use crate::dataset::methods::{syndrome_index, MAX_SYNDROME_BITS};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub header: DatasetHeader,
    pub records: u64,
    /// Target Hamming-weight counts, indices 0..=n.
    pub weight_histogram: Vec<u64>,
    /// Counts per syndrome value (index = syndrome as integer, bit i of the
    /// syndrome is bit i of the index). `None` when n−k is too large.
    pub syndrome_histogram: Option<Vec<u64>>,
    /// Reliability weight of the targets on the normalized |y| scale.
    pub reliability_weight: Summary,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Summary {
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl DatasetStats {
    pub fn from_reader<R: Read>(reader: DatasetReader<R>) -> Result<Self> {
        Self::collect(reader, None)
    }

    /// As [`DatasetStats::from_reader`], checking every record against `code`.
    pub fn from_reader_checked<R: Read>(reader: DatasetReader<R>, code: &LinearCode) -> Result<Self> {
        let validator = RecordValidator::new(code, reader.header())?;
        Self::collect(reader, Some(&validator))
    }

    fn collect<R: Read>(reader: DatasetReader<R>, validator: Option<&RecordValidator<'_>>) -> Result<Self> {
        let header = reader.header().clone();
        let r = header.redundancy();
        let mut syndrome_histogram = (r <= MAX_SYNDROME_BITS).then(|| vec![0u64; 1 << r]);
        let mut weight_histogram = vec![0u64; header.n() + 1];
        let mut wl = Summary {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            ..Summary::default()
        };
        let mut wl_total = 0.0;
        let mut records = 0;
        for rec in reader {
            let rec = rec?;
            if let Some(v) = validator {
                v.check(&rec, records)?;
            }
            records += 1;
            weight_histogram[rec.e_target.count_ones()] += 1;
            if let Some(h) = syndrome_histogram.as_mut() {
                h[syndrome_index(&rec.s)] += 1;
            }
            let w = rec.target_reliability_weight();
            wl_total += w;
            wl.min = wl.min.min(w);
            wl.max = wl.max.max(w);
        }
        wl.count = records;
        if records > 0 {
            wl.mean = wl_total / records as f64;
        } else {
            wl.min = 0.0;
            wl.max = 0.0;
        }
        Ok(Self {
            header,
            records,
            weight_histogram,
            syndrome_histogram,
            reliability_weight: wl,
        })
    }

    pub fn weight_fractions(&self) -> Vec<f64> {
        fractions(&self.weight_histogram)
    }

    pub fn mean_weight(&self) -> f64 {
        let total: u64 = self.weight_histogram.iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.weight_histogram
            .iter()
            .enumerate()
            .map(|(w, &c)| w as f64 * c as f64)
            .sum::<f64>()
            / total as f64
    }

    /// Weight with the largest count (lowest such weight on ties).
    pub fn modal_weight(&self) -> usize {
        let mut best = 0;
        for (w, &c) in self.weight_histogram.iter().enumerate() {
            if c > self.weight_histogram[best] {
                best = w;
            }
        }
        best
    }

    pub fn write_weight_csv<W: Write>(&self, out: W) -> Result<()> {
        write_weight_csv(out, &self.weight_histogram)
    }

    /// `syndrome,count` for every nonzero syndrome; syndrome in hex.
    pub fn write_syndrome_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "syndrome,count")?;
        if let Some(h) = &self.syndrome_histogram {
            for (s, c) in h.iter().enumerate().skip(1) {
                writeln!(out, "{s:x},{c}")?;
            }
        }
        Ok(())
    }
}

fn fractions(hist: &[u64]) -> Vec<f64> {
    let total: u64 = hist.iter().sum();
    hist.iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

/// `weight,count,fraction`, one row per weight 0..=n.
pub fn write_weight_csv<W: Write>(mut out: W, hist: &[u64]) -> Result<()> {
    writeln!(out, "weight,count,fraction")?;
    for (w, (c, f)) in hist.iter().zip(fractions(hist)).enumerate() {
        writeln!(out, "{w},{c},{f}")?;
    }
    Ok(())
}

pub fn dataset_stats<P: AsRef<Path>>(path: P) -> Result<DatasetStats> {
    DatasetStats::from_reader(read_dataset(path)?)
}
