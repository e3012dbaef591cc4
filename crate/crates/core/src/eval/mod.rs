//! Monte Carlo frame and bit error rate estimation.

pub mod bridge;
mod csv;
mod decoders;

use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitVec;
use crate::channel::{transmit, ChannelParams, ReceivedWord};
use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::rng::stream_rng;

pub use bridge::{serve_bridge, BridgeDecoder, BridgeEndpoint};
pub use csv::{parse_fer_csv, read_fer_csv, write_fer_csv, FerRow};
pub use decoders::{HardDecisionDecoder, MldDecoder, OsdDecoder};

/// Frames drawn from one RNG stream.
pub const FRAMES_PER_CHUNK: u64 = 256;
/// Streams simulated in parallel before the stopping rule is checked.
pub const CHUNKS_PER_ROUND: u64 = 32;

/// One received frame handed to a decoder.
pub struct Frame<'a> {
    /// Index of the frame within its SNR point.
    pub id: u64,
    pub rx: &'a ReceivedWord,
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) transmitted: &'a BitVec,
}

/// A decoder under test: maps a received frame to an estimated error
/// pattern of length n relative to the hard decision.
pub trait Decoder: Send + Sync {
    fn name(&self) -> &str;
    fn decode(&self, frame: &Frame<'_>) -> Result<BitVec>;
}

#[derive(Clone, Debug, Default)]
pub struct DecoderOptions {
    /// OSD reprocessing order; defaults to ⌊d_min/4⌋.
    pub order: Option<usize>,
    pub bridge: Option<BridgeEndpoint>,
    /// Bridge response timeout; defaults to [`bridge::DEFAULT_TIMEOUT`].
    pub timeout: Option<std::time::Duration>,
}

pub type DecoderFactory = dyn Fn(&LinearCode, &DecoderOptions) -> Result<Box<dyn Decoder>> + Send + Sync;
pub type DecoderRegistry = Registry<DecoderFactory>;

/// `osd`, `mld`, `bridge` and `hard`.
pub fn default_decoders() -> DecoderRegistry {
    let mut r: DecoderRegistry = Registry::new("decoder");
    r.register(
        "osd",
        "ordered-statistics decoding (--order, default floor(d_min/4))",
        Box::new(|code, opts| Ok(Box::new(OsdDecoder::new(code, opts.order)?))),
    );
    r.register(
        "mld",
        "exhaustive maximum-likelihood decoding (k <= 24)",
        Box::new(|code, _| Ok(Box::new(MldDecoder::new(code)?))),
    );
    r.register(
        "bridge",
        "external decoder over the line protocol",
        Box::new(|code, opts| {
            let endpoint = opts
                .bridge
                .clone()
                .ok_or_else(|| Error::InvalidParameter("bridge decoder needs an endpoint".into()))?;
            let timeout = opts.timeout.unwrap_or(bridge::DEFAULT_TIMEOUT);
            Ok(Box::new(BridgeDecoder::connect(code, &endpoint, timeout)?))
        }),
    );
    r.register(
        "hard",
        "hard decision only (estimates the all-zero pattern)",
        Box::new(|code, _| Ok(Box::new(HardDecisionDecoder::new(code)))),
    );
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FerResult {
    pub ebn0_db: f32,
    pub n: usize,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub seed: u64,
    /// Frames with a nonzero syndrome, the only ones the decoder saw.
    pub decoder_frames: u64,
    /// Frames whose hard decision was a wrong codeword.
    pub undetected: u64,
}

impl FerResult {
    fn from_counts(ebn0_db: f64, n: usize, seed: u64, c: Counters) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self {
            ebn0_db: ebn0_db as f32,
            n,
            frames: c.frames,
            frame_errors: c.frame_errors,
            bit_errors: c.bit_errors,
            fer: ratio(c.frame_errors, c.frames),
            ber: ratio(c.bit_errors, c.frames * n as u64),
            seed,
            decoder_frames: c.decoder_frames,
            undetected: c.undetected,
        }
    }

    /// Binomial standard error of the FER estimate.
    pub fn fer_std_error(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        (self.fer * (1.0 - self.fer) / self.frames as f64).sqrt()
    }

    /// Normal-approximation 95% interval for the FER, clamped to [0, 1].
    pub fn fer_interval(&self) -> (f64, f64) {
        let h = 1.96 * self.fer_std_error();
        ((self.fer - h).max(0.0), (self.fer + h).min(1.0))
    }

    pub fn row(&self) -> FerRow {
        FerRow {
            ebn0_db: self.ebn0_db,
            frames: self.frames,
            frame_errors: self.frame_errors,
            fer: self.fer,
            bit_errors: self.bit_errors,
            ber: self.ber,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counters {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    decoder_frames: u64,
    undetected: u64,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.bit_errors += o.bit_errors;
        self.decoder_frames += o.decoder_frames;
        self.undetected += o.undetected;
    }
}

/// RNG stream of chunk `chunk` at SNR index `snr_index`.
pub fn frame_stream(snr_index: usize, chunk: u64) -> u64 {
    ((snr_index as u64) << 40) | chunk
}

fn run_chunk(
    decoder: &dyn Decoder,
    code: &LinearCode,
    params: &ChannelParams,
    seed: u64,
    stream: u64,
    first_id: u64,
    frames: u64,
) -> Result<Counters> {
    let mut rng = stream_rng(seed, stream);
    let mut c = Counters::default();
    for i in 0..frames {
        let info = BitVec::from_bits((0..code.k()).map(|_| rng.random::<bool>()));
        let codeword = code.encode(&info)?;
        let rx = transmit(code, &codeword, params, &mut rng);
        let e_chan = rx.z.xor(&codeword);
        c.frames += 1;
        let e_hat = if rx.s.is_zero() {
            if !e_chan.is_zero() {
                c.undetected += 1;
            }
            BitVec::zeros(code.n())
        } else {
            c.decoder_frames += 1;
            let frame = Frame {
                id: first_id + i,
                rx: &rx,
                transmitted: &codeword,
            };
            let e_hat = decoder.decode(&frame).map_err(|source| Error::Frame {
                ebn0_db: params.ebn0_db(),
                seed,
                stream,
                frame: i,
                source: Box::new(source),
            })?;
            if e_hat.len() != code.n() {
                return Err(Error::Frame {
                    ebn0_db: params.ebn0_db(),
                    seed,
                    stream,
                    frame: i,
                    source: Box::new(Error::LengthMismatch {
                        what: "decoded error pattern",
                        expected: code.n(),
                        actual: e_hat.len(),
                    }),
                });
            }
            e_hat
        };
        let diff = e_hat.xor(&e_chan).count_ones();
        let pattern_wrong = diff > 0;
        let codeword_wrong = rx.z.xor(&e_hat) != codeword;
        debug_assert_eq!(pattern_wrong, codeword_wrong);
        c.frame_errors += u64::from(pattern_wrong);
        c.bit_errors += diff as u64;
    }
    Ok(c)
}

/// Estimates FER and BER of `decoder` at every Eb/N0 in `snr_list`.
///
/// Each point draws random information words, encodes and transmits them,
/// and decodes the frames with a nonzero syndrome; zero-syndrome frames are
/// decoded as the hard decision. Frames come in chunks of
/// [`FRAMES_PER_CHUNK`] from RNG stream [`frame_stream`], and a point stops
/// after the first chunk (in stream order) at which `min_frame_errors` is
/// reached, or at `max_frames`. The counts depend only on `seed`.
pub fn run_fer(
    decoder: &dyn Decoder,
    code: &LinearCode,
    snr_list: &[f64],
    stop: StopRule,
    seed: u64,
) -> Result<Vec<FerResult>> {
    if stop.min_frame_errors == 0 {
        return Err(Error::InvalidParameter("min_frame_errors must be at least 1".into()));
    }
    snr_list
        .iter()
        .enumerate()
        .map(|(idx, &snr)| {
            let params = ChannelParams::for_code(code, snr)?;
            let total_chunks = stop.max_frames.div_ceil(FRAMES_PER_CHUNK);
            let mut total = Counters::default();
            let mut next = 0u64;
            'rounds: while next < total_chunks {
                let end = (next + CHUNKS_PER_ROUND).min(total_chunks);
                let counts: Vec<Counters> = (next..end)
                    .into_par_iter()
                    .map(|chunk| {
                        let first = chunk * FRAMES_PER_CHUNK;
                        let len = FRAMES_PER_CHUNK.min(stop.max_frames - first);
                        run_chunk(decoder, code, &params, seed, frame_stream(idx, chunk), first, len)
                    })
                    .collect::<Result<_>>()?;
                next = end;
                for c in &counts {
                    total.add(c);
                    if total.frame_errors >= stop.min_frame_errors {
                        break 'rounds;
                    }
                }
            }
            Ok(FerResult::from_counts(snr, code.n(), seed, total))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::bch_code;
    use crate::with_threads;

    struct Genie;

    impl Decoder for Genie {
        fn name(&self) -> &str {
            "genie"
        }
        fn decode(&self, f: &Frame<'_>) -> Result<BitVec> {
            Ok(f.rx.z.xor(f.transmitted))
        }
    }

    /// Wrong with probability `p`, decided by a hash of the frame id.
    struct Bernoulli(f64);

    impl Decoder for Bernoulli {
        fn name(&self) -> &str {
            "bernoulli"
        }
        fn decode(&self, f: &Frame<'_>) -> Result<BitVec> {
            let mut rng = stream_rng(0xB0B, f.id ^ (f.rx.z.words()[0] << 20));
            let mut e = f.rx.z.xor(f.transmitted);
            if rng.random::<f64>() < self.0 {
                e.flip(0);
            }
            Ok(e)
        }
    }

    struct Failing;

    impl Decoder for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn decode(&self, f: &Frame<'_>) -> Result<BitVec> {
            if f.id >= 300 {
                Err(Error::InvalidParameter("boom".into()))
            } else {
                Ok(BitVec::zeros(f.rx.n()))
            }
        }
    }

    #[test]
    fn genie_never_errs() {
        let code = bch_code(4, 2).unwrap();
        let stop = StopRule {
            min_frame_errors: u64::MAX,
            max_frames: 20_000,
        };
        let r = run_fer(&Genie, &code, &[0.0, 3.0], stop, 5).unwrap();
        // Only hard decisions that land on a wrong codeword bypass the
        // decoder and count as errors.
        for p in &r {
            assert_eq!(p.frames, 20_000);
            assert_eq!(p.frame_errors, p.undetected);
        }
        assert_eq!(r[1].frame_errors, 0);
    }

    #[test]
    fn bernoulli_stub_fer_is_within_three_sigma() {
        // At high SNR nearly every frame is s = 0 and therefore correct, so
        // use a low SNR where the decoder sees most frames and count only
        // those.
        let code = bch_code(5, 2).unwrap();
        let p = 0.2;
        let stop = StopRule {
            min_frame_errors: u64::MAX,
            max_frames: 50_000,
        };
        let r = &run_fer(&Bernoulli(p), &code, &[-2.0], stop, 11).unwrap()[0];
        let m = r.decoder_frames as f64;
        let est = (r.frame_errors - r.undetected) as f64 / m;
        let se = (p * (1.0 - p) / m).sqrt();
        assert!((est - p).abs() < 3.0 * se, "est {est} vs {p} (se {se})");
    }

    #[test]
    fn counters_do_not_depend_on_threads() {
        let code = bch_code(5, 2).unwrap();
        let dec = OsdDecoder::new(&code, None).unwrap();
        let stop = StopRule {
            min_frame_errors: 40,
            max_frames: 200_000,
        };
        let a = with_threads(1, || run_fer(&dec, &code, &[2.0, 3.0], stop, 3).unwrap());
        let b = with_threads(6, || run_fer(&dec, &code, &[2.0, 3.0], stop, 3).unwrap());
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.frame_errors >= 40));
    }

    #[test]
    fn max_frames_truncates_last_chunk() {
        let code = bch_code(4, 1).unwrap();
        let stop = StopRule {
            min_frame_errors: u64::MAX,
            max_frames: 1000,
        };
        let hard = HardDecisionDecoder::new(&code);
        let r = &run_fer(&hard, &code, &[1.0], stop, 1).unwrap()[0];
        assert_eq!(r.frames, 1000);
        let longer = StopRule {
            max_frames: 1024,
            ..stop
        };
        let r2 = &run_fer(&hard, &code, &[1.0], longer, 1).unwrap()[0];
        assert!(r2.frame_errors >= r.frame_errors);
    }

    #[test]
    fn decoder_failure_carries_replay_seed() {
        let code = bch_code(4, 1).unwrap();
        let err = run_fer(&Failing, &code, &[0.0], StopRule::default(), 77).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seed 77"), "{msg}");
        assert!(msg.contains("stream 1"), "{msg}");
        assert!(matches!(err.root(), Error::InvalidParameter(_)));
    }

    #[test]
    fn zero_min_errors_is_rejected() {
        let code = bch_code(4, 1).unwrap();
        let stop = StopRule {
            min_frame_errors: 0,
            max_frames: 10,
        };
        assert!(run_fer(&Genie, &code, &[0.0], stop, 0).is_err());
    }
}
