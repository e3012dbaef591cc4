mod config;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use sbnd_core::code::hamming_7_4;
use sbnd_core::dataset::{
    build_dataset_file, dataset_stats, default_methods, read_dataset, BuildSpec, DatasetStats, Method,
    TargetKind,
};
use sbnd_core::eval::{default_decoders, run_fer, serve_bridge, write_fer_csv, BridgeEndpoint, DecoderOptions, StopRule};
use sbnd_core::mld::osd_error_from_syndrome;
use sbnd_core::{bch_code, default_order, with_threads, Error, LinearCode, NoiseWeightDistribution, Result};

const SUBCOMMANDS: &[&str] = &["code", "build", "eval", "stats", "serve"];

#[derive(Parser, Debug)]
#[command(name = "sbnd", version, about = "Curated training sets and FER evaluation for syndrome-based decoders")]
struct Cli {
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, env = "SBND_THREADS", default_value_t = 0)]
    threads: usize,
    /// key=value file applied before the command-line flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Construct a code and write its definition file
    #[command(args_override_self = true)]
    Code(CodeArgs),
    /// Build a training dataset
    #[command(args_override_self = true)]
    Build(BuildArgs),
    /// Monte Carlo FER/BER of a decoder over an SNR list
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Weight and syndrome histograms of a dataset
    #[command(args_override_self = true)]
    Stats(StatsArgs),
    /// Answer bridge requests with syndrome-domain OSD
    #[command(args_override_self = true)]
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct CodeArgs {
    #[arg(long, default_value = "bch", value_parser = ["bch", "hamming"])]
    family: String,
    /// Field degree, GF(2^m)
    #[arg(long, default_value_t = 5)]
    m: u32,
    /// Designed error-correcting capability
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Confirm d_min by enumerating all codewords
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: f64,
    /// chan | uniw | is | unis
    #[arg(long)]
    method: String,
    /// chan | ml
    #[arg(long, default_value = "ml")]
    target: String,
    #[arg(long)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    wmax: Option<usize>,
    /// Input error-weight pmf for `is`, comma separated from weight 0
    #[arg(long)]
    pmf: Option<String>,
    /// Also store the channel error pattern
    #[arg(long)]
    store_chan: bool,
    /// OSD order for ml targets (default floor(d_min/4))
    #[arg(long)]
    order: Option<usize>,
    /// Channel-use budget before giving up
    #[arg(long)]
    max_draws: Option<u64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    code: PathBuf,
    /// osd | mld | bridge | hard
    #[arg(long, default_value = "osd")]
    decoder: String,
    #[arg(long)]
    order: Option<usize>,
    /// Eb/N0 points in dB, comma separated
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    snr_list: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bridge peer: a command line, or tcp:HOST:PORT
    #[arg(long)]
    bridge: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// weight,count,fraction CSV (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// syndrome,count CSV
    #[arg(long)]
    syndrome_out: Option<PathBuf>,
    /// Validate every record against this code
    #[arg(long)]
    code: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    order: Option<usize>,
    /// Listen on HOST:PORT instead of stdin/stdout
    #[arg(long)]
    listen: Option<String>,
}

fn load_code(path: &Path) -> Result<LinearCode> {
    LinearCode::read_text(BufReader::new(File::open(path)?))
}

fn opt<T: std::fmt::Display>(flag: &str, v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |v| format!(" --{flag} {v}"))
}

fn log_config(threads: usize, line: String) {
    eprintln!("config: sbnd --threads {threads} {line}");
}

fn cmd_code(a: &CodeArgs) -> Result<()> {
    let code = match a.family.as_str() {
        "hamming" => hamming_7_4(),
        _ => bch_code(a.m, a.t)?,
    };
    if a.verify {
        let d = code.min_distance_exhaustive()?;
        if d != code.d_min() {
            return Err(Error::InvariantViolation {
                record: 0,
                msg: format!("designed d_min {} but enumeration found {d}", code.d_min()),
            });
        }
    }
    println!("{} ({},{},{})", code.name(), code.n(), code.k(), code.d_min());
    if let Some(out) = &a.out {
        let mut w = BufWriter::new(File::create(out)?);
        code.write_text(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_build(a: &BuildArgs) -> Result<()> {
    let code = load_code(&a.code)?;
    let methods = default_methods();
    methods.get(&a.method)?;
    let method = Method::from_name(&a.method).ok_or_else(|| Error::UnknownName {
        kind: "method",
        name: a.method.clone(),
        available: methods.names().join(", "),
    })?;
    let mut spec = BuildSpec::new(method, TargetKind::parse(&a.target)?, a.snr_db, a.count, a.seed);
    spec.w_max = a.wmax;
    spec.input_pmf = a
        .pmf
        .as_deref()
        .map(|p| NoiseWeightDistribution::parse(code.n(), p))
        .transpose()?;
    spec.store_channel = a.store_chan;
    spec.osd_order = Some(a.order.unwrap_or_else(|| default_order(&code)));
    spec.max_draws = a.max_draws;
    let start = Instant::now();
    let r = build_dataset_file(&code, &spec, &methods, &a.out)?;
    println!(
        "{}: {} records from {} draws ({} nonzero syndrome, {} labelled, {} channel-label wins) in {:.1}s",
        a.out.display(),
        r.records,
        r.draws,
        r.nonzero_syndrome,
        r.labelled,
        r.channel_label_wins,
        start.elapsed().as_secs_f64()
    );
    let total = r.records.max(1) as f64;
    for (w, c) in r.weight_histogram.iter().enumerate().filter(|(_, &c)| c > 0) {
        println!("  weight {w:2}: {c} ({:.4})", *c as f64 / total);
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let code = load_code(&a.code)?;
    let opts = DecoderOptions {
        order: a.order,
        bridge: a.bridge.as_deref().map(BridgeEndpoint::parse).transpose()?,
        timeout: Some(Duration::from_millis(a.timeout_ms)),
    };
    let decoder = default_decoders().get(&a.decoder)?(&code, &opts)?;
    let stop = StopRule {
        min_frame_errors: a.min_errors,
        max_frames: a.max_frames,
    };
    let results = run_fer(decoder.as_ref(), &code, &a.snr_list, stop, a.seed)?;
    for r in &results {
        let (lo, hi) = r.fer_interval();
        println!(
            "{} dB  {}: frames {} errors {} FER {:.4e} [{:.3e}, {:.3e}] BER {:.4e}",
            r.ebn0_db,
            decoder.name(),
            r.frames,
            r.frame_errors,
            r.fer,
            lo,
            hi,
            r.ber
        );
    }
    match &a.out {
        Some(out) => {
            let mut w = BufWriter::new(File::create(out)?);
            write_fer_csv(&mut w, &results)?;
            w.flush()?;
        }
        None => write_fer_csv(io::stdout().lock(), &results)?,
    }
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let stats = match &a.code {
        Some(c) => DatasetStats::from_reader_checked(read_dataset(&a.dataset)?, &load_code(c)?)?,
        None => dataset_stats(&a.dataset)?,
    };
    let h = &stats.header;
    eprintln!(
        "{}: {} records, code {} ({},{},{}), method {}, target {}, {} dB, mean weight {:.3}, modal weight {}, mean w_L {:.4}",
        a.dataset.display(),
        stats.records,
        h.code_name,
        h.n,
        h.k,
        h.d_min,
        h.method.name(),
        h.target_kind.name(),
        h.snr_db,
        stats.mean_weight(),
        stats.modal_weight(),
        stats.reliability_weight.mean
    );
    match &a.out {
        Some(out) => {
            let mut w = BufWriter::new(File::create(out)?);
            stats.write_weight_csv(&mut w)?;
            w.flush()?;
        }
        None => stats.write_weight_csv(io::stdout().lock())?,
    }
    if let Some(out) = &a.syndrome_out {
        let mut w = BufWriter::new(File::create(out)?);
        stats.write_syndrome_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<()> {
    let code = load_code(&a.code)?;
    let order = a.order.unwrap_or_else(|| default_order(&code));
    let respond = |rel: &[f64], s: &sbnd_core::BitVec| osd_error_from_syndrome(&code, s, rel, order);
    match &a.listen {
        None => {
            let served = serve_bridge(&code, io::stdin().lock(), io::stdout().lock(), respond)?;
            eprintln!("served {served} frames");
        }
        Some(addr) => {
            let listener = TcpListener::bind(addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let reader = BufReader::new(stream.try_clone()?);
                match serve_bridge(&code, reader, BufWriter::new(stream), respond) {
                    Ok(n) => eprintln!("served {n} frames"),
                    Err(e) => eprintln!("connection closed: {e}"),
                }
            }
        }
    }
    Ok(())
}

fn replay_line(cmd: &Cmd) -> String {
    match cmd {
        Cmd::Code(a) => format!(
            "code --family {} --m {} --t {}{}{}",
            a.family,
            a.m,
            a.t,
            opt("out", &a.out.as_ref().map(|p| p.display())),
            if a.verify { " --verify" } else { "" }
        ),
        Cmd::Build(a) => format!(
            "build --code {} --snr-db {} --method {} --target {} --count {} --seed {} --out {}{}{}{}{}{}",
            a.code.display(),
            a.snr_db,
            a.method,
            a.target,
            a.count,
            a.seed,
            a.out.display(),
            opt("wmax", &a.wmax),
            opt("pmf", &a.pmf),
            if a.store_chan { " --store-chan" } else { "" },
            opt("order", &a.order),
            opt("max-draws", &a.max_draws)
        ),
        Cmd::Eval(a) => format!(
            "eval --code {} --decoder {}{} --snr-list {} --min-errors {} --max-frames {} --seed {}{}{} --timeout-ms {}",
            a.code.display(),
            a.decoder,
            opt("order", &a.order),
            a.snr_list.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
            a.min_errors,
            a.max_frames,
            a.seed,
            opt("out", &a.out.as_ref().map(|p| p.display())),
            opt("bridge", &a.bridge.as_ref().map(|b| format!("'{b}'"))),
            a.timeout_ms
        ),
        Cmd::Stats(a) => format!(
            "stats --dataset {}{}{}{}",
            a.dataset.display(),
            opt("out", &a.out.as_ref().map(|p| p.display())),
            opt("syndrome-out", &a.syndrome_out.as_ref().map(|p| p.display())),
            opt("code", &a.code.as_ref().map(|p| p.display()))
        ),
        Cmd::Serve(a) => format!(
            "serve --code {}{}{}",
            a.code.display(),
            opt("order", &a.order),
            opt("listen", &a.listen)
        ),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else if e.is_io() {
        4
    } else {
        3
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = match std::env::args_os().map(|a| a.into_string()).collect() {
        Ok(v) => v,
        Err(bad) => {
            eprintln!("error: argument is not valid UTF-8: {bad:?}");
            return ExitCode::from(2);
        }
    };
    let args = match config::expand(raw, SUBCOMMANDS) {
        Ok(a) => a,
        Err(config::ConfigError::Io(path, e)) => {
            eprintln!("error: cannot read config {path}: {e}");
            return ExitCode::from(4);
        }
        Err(config::ConfigError::Syntax(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    log_config(cli.threads, replay_line(&cli.command));
    let threads = cli.threads;
    let result = with_threads(threads, || match &cli.command {
        Cmd::Code(a) => cmd_code(a),
        Cmd::Build(a) => cmd_build(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Serve(a) => cmd_serve(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Cmd::Build(a) = &cli.command {
                let _ = fs::remove_file(&a.out);
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
