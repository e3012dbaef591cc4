//! Fixed training datasets: construction, file format and statistics.

pub mod format;
pub mod methods;
pub mod stats;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bits::BitVec;
use crate::channel::{NoiseWeightDistribution, ReceivedWord};
use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::mld::{default_order, osd_decode_with_hint_flag};
use crate::rng::stream_rng;

pub use format::{
    read_dataset, read_dataset_checked, DatasetHeader, DatasetReader, DatasetRecord, DatasetWriter,
    Method, RecordValidator, TargetKind, FLAG_CHANNEL_PATTERN,
};
pub use methods::{default_methods, ConstructionMethod, MethodRegistry, Selector};
pub use stats::{dataset_stats, DatasetStats};

/// Channel draws per RNG stream.
pub const DRAWS_PER_CHUNK: u64 = 2048;
/// Streams generated in parallel per round.
pub const CHUNKS_PER_ROUND: u64 = 32;

/// Everything that determines a dataset file byte for byte.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildSpec {
    pub method: Method,
    pub target: TargetKind,
    /// Training Eb/N0 in dB.
    pub snr_db: f64,
    pub record_count: u64,
    /// Largest admitted target weight (`uniw`) or upper end of the default
    /// uniform input law (`is`).
    pub w_max: Option<usize>,
    /// Input error-weight law for `is`.
    pub input_pmf: Option<NoiseWeightDistribution>,
    /// Also store the channel error pattern in every record.
    pub store_channel: bool,
    /// OSD order; defaults to ⌊d_min/4⌋.
    pub osd_order: Option<usize>,
    /// Channel-use budget before a build is declared starved.
    pub max_draws: Option<u64>,
    pub master_seed: u64,
}

impl BuildSpec {
    pub fn new(method: Method, target: TargetKind, snr_db: f64, record_count: u64, master_seed: u64) -> Self {
        Self {
            method,
            target,
            snr_db,
            record_count,
            w_max: None,
            input_pmf: None,
            store_channel: false,
            osd_order: None,
            max_draws: None,
            master_seed,
        }
    }

    fn draw_budget(&self, planned: u64) -> u64 {
        self.max_draws
            .unwrap_or_else(|| planned.saturating_mul(1000).max(100_000_000))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildReport {
    pub header: DatasetHeader,
    /// Channel uses, including discarded ones.
    pub draws: u64,
    pub nonzero_syndrome: u64,
    /// Draws passed to the labeller.
    pub labelled: u64,
    pub records: u64,
    /// Records whose label came from the channel pattern because it beat
    /// every OSD candidate.
    pub channel_label_wins: u64,
    /// Hamming-weight histogram of the stored targets, indices 0..=n.
    pub weight_histogram: Vec<u64>,
    pub method_summary: String,
}

struct Labelled {
    rx: ReceivedWord,
    e_target: BitVec,
    channel_won: bool,
}

fn label(code: &LinearCode, spec: &BuildSpec, order: usize, zero: &BitVec, rx: ReceivedWord) -> Result<Labelled> {
    // The all-zero codeword is sent, so e_chan = z.
    let (e_target, channel_won) = match spec.target {
        TargetKind::Channel => (rx.z.clone(), false),
        TargetKind::MaximumLikelihood => {
            let (d, won) = osd_decode_with_hint_flag(code, &rx, order, zero)?;
            (d.error_pattern.into_bits(), won)
        }
    };
    Ok(Labelled {
        rx,
        e_target,
        channel_won,
    })
}

/// Builds a dataset and streams it to `out`. Work is split into RNG streams
/// of [`DRAWS_PER_CHUNK`] draws generated in parallel on the current rayon
/// pool; admission runs sequentially in stream order, so the output depends
/// only on `spec` and the code.
pub fn build_dataset<W: Write>(
    code: &LinearCode,
    spec: &BuildSpec,
    methods: &MethodRegistry,
    out: W,
) -> Result<BuildReport> {
    let method = methods.get(spec.method.name())?(code, spec)?;
    let order = spec.osd_order.unwrap_or_else(|| default_order(code));
    if order > code.k() {
        return Err(Error::InvalidParameter(format!("OSD order {order} exceeds k")));
    }
    let planned = method.planned_records();
    let header = DatasetHeader {
        flags: if spec.store_channel { FLAG_CHANNEL_PATTERN } else { 0 },
        n: code.n() as u16,
        k: code.k() as u16,
        d_min: code.d_min() as u16,
        snr_db: spec.snr_db as f32,
        target_kind: spec.target,
        method: spec.method,
        w_max: method.header_w_max(),
        record_count: planned,
        code_name: code.name().to_string(),
        master_seed: spec.master_seed,
    };
    let mut writer = DatasetWriter::new(header.clone(), out)?;
    let mut selector = method.selector();
    let budget = spec.draw_budget(planned);
    let zero = BitVec::zeros(code.n());
    let mut report = BuildReport {
        header,
        draws: 0,
        nonzero_syndrome: 0,
        labelled: 0,
        records: 0,
        channel_label_wins: 0,
        weight_histogram: vec![0; code.n() + 1],
        method_summary: method.describe(),
    };
    let mut next_chunk = 0u64;
    while !selector.is_full() {
        if report.draws >= budget {
            return Err(Error::Starvation {
                draws: report.draws,
                progress: selector.progress(),
            });
        }
        let chunks = next_chunk..next_chunk + CHUNKS_PER_ROUND;
        next_chunk += CHUNKS_PER_ROUND;
        let drawn: Vec<Vec<ReceivedWord>> = chunks
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream_rng(spec.master_seed, chunk);
                (0..DRAWS_PER_CHUNK)
                    .map(|_| method.draw(&mut rng))
                    .filter(|rx| !rx.s.is_zero())
                    .collect()
            })
            .collect();
        report.draws += CHUNKS_PER_ROUND * DRAWS_PER_CHUNK;
        let mut screened = Vec::new();
        for rx in drawn.into_iter().flatten() {
            report.nonzero_syndrome += 1;
            if selector.screen(&rx) {
                screened.push(rx);
            }
        }
        report.labelled += screened.len() as u64;
        let labelled: Vec<Labelled> = screened
            .into_par_iter()
            .map(|rx| label(code, spec, order, &zero, rx))
            .collect::<Result<_>>()?;
        for item in labelled {
            if !selector.admit(&item.e_target) {
                continue;
            }
            let record = DatasetRecord {
                reliab_norm: item.rx.reliab_norm.iter().map(|&r| r as f32).collect(),
                e_chan: spec.store_channel.then(|| item.rx.z.clone()),
                z: item.rx.z,
                s: item.rx.s,
                e_target: item.e_target,
            };
            writer.write_record(&record)?;
            report.records += 1;
            report.channel_label_wins += u64::from(item.channel_won);
            report.weight_histogram[record.e_target.count_ones()] += 1;
        }
    }
    writer.finish()?;
    Ok(report)
}

/// Path of the `weight,count,fraction` sidecar for a dataset file.
pub fn stats_sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".stats.csv");
    PathBuf::from(p)
}

/// Path of the key=value build metadata sidecar.
pub fn meta_sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Builds a dataset file at `path` together with its two sidecars. A partial
/// file is removed if the build fails.
pub fn build_dataset_file(
    code: &LinearCode,
    spec: &BuildSpec,
    methods: &MethodRegistry,
    path: &Path,
) -> Result<BuildReport> {
    let file = BufWriter::new(File::create(path)?);
    let report = match build_dataset(code, spec, methods, file) {
        Ok(r) => r,
        Err(e) => {
            let _ = fs::remove_file(path);
            return Err(e);
        }
    };
    let mut csv = BufWriter::new(File::create(stats_sidecar_path(path))?);
    stats::write_weight_csv(&mut csv, &report.weight_histogram)?;
    csv.flush()?;
    let mut meta = BufWriter::new(File::create(meta_sidecar_path(path))?);
    writeln!(meta, "code={}", code.name())?;
    writeln!(meta, "method={}", spec.method.name())?;
    writeln!(meta, "target={}", spec.target.name())?;
    writeln!(meta, "snr_db={}", spec.snr_db)?;
    writeln!(meta, "seed={}", spec.master_seed)?;
    writeln!(meta, "osd_order={}", spec.osd_order.unwrap_or_else(|| default_order(code)))?;
    writeln!(meta, "{}", report.method_summary.replace(' ', "\n"))?;
    writeln!(meta, "records={}", report.records)?;
    writeln!(meta, "draws={}", report.draws)?;
    writeln!(meta, "nonzero_syndrome={}", report.nonzero_syndrome)?;
    writeln!(meta, "labelled={}", report.labelled)?;
    writeln!(meta, "channel_label_wins={}", report.channel_label_wins)?;
    meta.flush()?;
    Ok(report)
}
