//! BPSK over the binary-input AWGN channel.
//!
//! A code bit `c` is sent as `x = (−1)^c` and received as `y = x + n` with
//! `n ~ N(0, σ²)`, `σ² = 1 / (2·R·Eb/N0)`. The hard decision is `z = 0` iff
//! `y ≥ 0`, and the channel LLR is `L = (2/σ²)·y`.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::bits::BitVec;
use crate::code::LinearCode;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    ebn0_db: f64,
    rate: f64,
    sigma2: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidParameter(format!("code rate {rate} not in (0, 1]")));
        }
        if !ebn0_db.is_finite() {
            return Err(Error::InvalidParameter(format!("Eb/N0 {ebn0_db} dB is not finite")));
        }
        let sigma2 = 1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0));
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise variance {sigma2} out of range")));
        }
        Ok(Self {
            ebn0_db,
            rate,
            sigma2,
        })
    }

    pub fn for_code(code: &LinearCode, ebn0_db: f64) -> Result<Self> {
        Self::new(ebn0_db, code.rate())
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Raw bit error probability of the hard decision, ½·erfc(√(R·Eb/N0)).
    pub fn hard_error_probability(&self) -> f64 {
        0.5 * erfc((self.rate * 10f64.powf(self.ebn0_db / 10.0)).sqrt())
    }
}

/// Channel output together with everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedWord {
    pub y: Vec<f64>,
    pub llr: Vec<f64>,
    pub z: BitVec,
    pub s: BitVec,
    /// |y_i| / max_j |y_j|
    pub reliab_norm: Vec<f64>,
}

impl ReceivedWord {
    /// Derives LLRs, hard decisions, syndrome and normalized reliabilities
    /// from a raw channel output. Fails if `y` is identically zero.
    pub fn from_channel_output(code: &LinearCode, y: Vec<f64>, sigma2: f64) -> Result<Self> {
        if y.len() != code.n() {
            return Err(Error::LengthMismatch {
                what: "channel output",
                expected: code.n(),
                actual: y.len(),
            });
        }
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if max <= 0.0 || !max.is_finite() {
            return Err(Error::InvalidParameter(
                "channel output is all-zero or not finite".into(),
            ));
        }
        let scale = 2.0 / sigma2;
        let llr = y.iter().map(|v| scale * v).collect();
        let z = BitVec::from_bits(y.iter().map(|&v| v < 0.0));
        let s = code.syndrome(&z)?;
        let reliab_norm = y.iter().map(|v| v.abs() / max).collect();
        Ok(Self {
            y,
            llr,
            z,
            s,
            reliab_norm,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// |L_i|
    pub fn reliabilities(&self) -> Vec<f64> {
        self.llr.iter().map(|l| l.abs()).collect()
    }
}

/// Probability mass over error-pattern Hamming weights 0..=n.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseWeightDistribution {
    pmf: Vec<f64>,
}

impl NoiseWeightDistribution {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidPmf("empty".into()));
        }
        if let Some((w, p)) = pmf.iter().enumerate().find(|(_, p)| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidPmf(format!("entry {w} = {p}")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPmf(format!("sums to {total}, not 1")));
        }
        Ok(Self { pmf })
    }

    pub fn point_mass(n: usize, w: usize) -> Result<Self> {
        if w > n {
            return Err(Error::InvalidPmf(format!("weight {w} exceeds length {n}")));
        }
        let mut pmf = vec![0.0; n + 1];
        pmf[w] = 1.0;
        Self::new(pmf)
    }

    /// Uniform over `lo..=hi`.
    pub fn uniform(n: usize, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi > n {
            return Err(Error::InvalidPmf(format!("bad uniform range {lo}..={hi} for n={n}")));
        }
        let mut pmf = vec![0.0; n + 1];
        let p = 1.0 / (hi - lo + 1) as f64;
        for v in &mut pmf[lo..=hi] {
            *v = p;
        }
        let total: f64 = pmf.iter().sum();
        for v in &mut pmf[lo..=hi] {
            *v /= total;
        }
        Self::new(pmf)
    }

    /// Binomial(n, p).
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidPmf(format!("probability {p} outside [0,1]")));
        }
        let mut pmf = Vec::with_capacity(n + 1);
        let mut binom = 1.0f64;
        for w in 0..=n {
            if w > 0 {
                binom = binom * (n - w + 1) as f64 / w as f64;
            }
            pmf.push(binom * p.powi(w as i32) * (1.0 - p).powi((n - w) as i32));
        }
        Self::new(pmf)
    }

    /// Parses comma-separated masses for weights 0, 1, 2, … (missing tail = 0).
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut pmf = vec![0.0; n + 1];
        for (w, field) in text.split(',').enumerate() {
            if w > n {
                return Err(Error::InvalidPmf(format!("more than n+1={} entries", n + 1)));
            }
            pmf[w] = field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidPmf(format!("entry {w}: {e}")))?;
        }
        Self::new(pmf)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Largest representable weight (n).
    pub fn max_weight(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (w, &p) in self.pmf.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_nonzero = w;
                if u < acc {
                    return w;
                }
            }
        }
        last_nonzero
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(w, p)| w as f64 * p).sum()
    }
}

/// Binomial weight distribution of the channel error pattern.
pub fn channel_weight_pmf(params: &ChannelParams, n: usize) -> NoiseWeightDistribution {
    NoiseWeightDistribution::binomial(n, params.hard_error_probability())
        .expect("p_b is a probability")
}

fn bpsk(bit: bool) -> f64 {
    if bit {
        -1.0
    } else {
        1.0
    }
}

/// Sends `codeword` through the channel.
pub fn transmit<R: Rng + ?Sized>(
    code: &LinearCode,
    codeword: &BitVec,
    params: &ChannelParams,
    rng: &mut R,
) -> ReceivedWord {
    assert_eq!(codeword.len(), code.n(), "codeword length");
    let sigma = params.sigma();
    loop {
        let y: Vec<f64> = codeword
            .iter()
            .map(|c| bpsk(c) + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        if let Ok(rx) = ReceivedWord::from_channel_output(code, y, params.sigma2()) {
            return rx;
        }
    }
}

/// Inverse-CDF sampler for the channel sample conditioned on whether its hard
/// decision is flipped.
#[derive(Clone, Debug)]
pub struct TruncatedNoise {
    sigma: f64,
    std_normal: Normal,
    /// Φ(−1/σ): probability mass of a flip.
    p_flip: f64,
    /// Φ(1/σ): probability mass of no flip.
    p_keep: f64,
}

impl TruncatedNoise {
    pub fn new(params: &ChannelParams) -> Self {
        let sigma = params.sigma();
        let std_normal = Normal::standard();
        Self {
            sigma,
            p_flip: std_normal.cdf(-1.0 / sigma),
            p_keep: std_normal.cdf(1.0 / sigma),
            std_normal,
        }
    }

    /// Draws `t = x·y`, the sample measured in the direction of the sent
    /// symbol: `t < 0` when `flip`, `t > 0` otherwise.
    pub fn sample_aligned<R: Rng + ?Sized>(&self, flip: bool, rng: &mut R) -> f64 {
        loop {
            // u in (0, p]
            let r: f64 = rng.random();
            let t = if flip {
                let u = self.p_flip * (1.0 - r);
                1.0 + self.sigma * self.std_normal.inverse_cdf(u)
            } else {
                let u = self.p_keep * (1.0 - r);
                1.0 - self.sigma * self.std_normal.inverse_cdf(u)
            };
            if t.is_finite() && ((flip && t < 0.0) || (!flip && t > 0.0)) {
                return t;
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Sends `codeword` with the number of hard-decision errors drawn from
/// `input_pmf` instead of the channel's binomial law. Given the weight `w`,
/// a uniformly random set of `w` positions is flipped and every sample is
/// drawn from the Gaussian truncated to the matching half-line.
pub fn transmit_biased<R: Rng + ?Sized>(
    code: &LinearCode,
    codeword: &BitVec,
    params: &ChannelParams,
    noise: &TruncatedNoise,
    input_pmf: &NoiseWeightDistribution,
    rng: &mut R,
) -> ReceivedWord {
    let n = code.n();
    assert_eq!(codeword.len(), n, "codeword length");
    assert_eq!(input_pmf.max_weight(), n, "input pmf must cover weights 0..=n");
    let w = input_pmf.sample(rng);
    let mut flips = BitVec::zeros(n);
    for i in sample_indices(rng, n, w) {
        flips.set(i, true);
    }
    let y: Vec<f64> = (0..n)
        .map(|i| bpsk(codeword.get(i)) * noise.sample_aligned(flips.get(i), rng))
        .collect();
    ReceivedWord::from_channel_output(code, y, params.sigma2())
        .expect("truncated samples are nonzero")
}

/// On-demand generator of training examples: the all-zero codeword is sent
/// repeatedly and only words with a nonzero syndrome are kept.
pub struct OnDemandStream<'a, R> {
    code: &'a LinearCode,
    params: ChannelParams,
    batch: usize,
    rng: R,
    zero: BitVec,
    draws: u64,
    kept: u64,
}

impl<'a, R: Rng> OnDemandStream<'a, R> {
    pub fn new(code: &'a LinearCode, params: ChannelParams, batch: usize, rng: R) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        Ok(Self {
            code,
            params,
            batch,
            rng,
            zero: BitVec::zeros(code.n()),
            draws: 0,
            kept: 0,
        })
    }

    /// Channel uses so far, including discarded zero-syndrome words.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn kept(&self) -> u64 {
        self.kept
    }

    /// Next example with nonzero syndrome and its channel error pattern.
    pub fn next_example(&mut self) -> (ReceivedWord, BitVec) {
        loop {
            self.draws += 1;
            let rx = transmit(self.code, &self.zero, &self.params, &mut self.rng);
            if !rx.s.is_zero() {
                self.kept += 1;
                let e_chan = rx.z.clone();
                return (rx, e_chan);
            }
        }
    }
}

impl<R: Rng> Iterator for OnDemandStream<'_, R> {
    type Item = Vec<(ReceivedWord, BitVec)>;

    fn next(&mut self) -> Option<Self::Item> {
        Some((0..self.batch).map(|_| self.next_example()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::bch_code;
    use crate::rng::stream_rng;

    #[test]
    fn sigma2_matches_definition() {
        let p = ChannelParams::new(3.0, 21.0 / 31.0).unwrap();
        let expected = 1.0 / (2.0 * (21.0 / 31.0) * 10f64.powf(0.3));
        assert!((p.sigma2() - expected).abs() < 1e-15);
        assert!(ChannelParams::new(3.0, 0.0).is_err());
        assert!(ChannelParams::new(3.0, 1.5).is_err());
    }

    #[test]
    fn hard_error_probability_31_21_at_3db() {
        let p = ChannelParams::new(3.0, 21.0 / 31.0).unwrap();
        // ½·erfc(√(21/31 · 10^0.3)) evaluated independently
        assert!((p.hard_error_probability() - 0.050_071_687_918).abs() < 1e-9);
    }

    #[test]
    fn llr_and_hard_decisions_follow_y() {
        let code = bch_code(5, 2).unwrap();
        let params = ChannelParams::for_code(&code, 1.0).unwrap();
        let mut rng = stream_rng(1, 0);
        let zero = BitVec::zeros(31);
        for _ in 0..200 {
            let rx = transmit(&code, &zero, &params, &mut rng);
            for i in 0..31 {
                assert_eq!(rx.llr[i], 2.0 / params.sigma2() * rx.y[i]);
                assert_eq!(rx.z.get(i), rx.y[i] < 0.0);
                assert_eq!(rx.llr[i] < 0.0, rx.y[i] < 0.0);
                assert!((0.0..=1.0).contains(&rx.reliab_norm[i]));
            }
            assert_eq!(rx.reliab_norm.iter().cloned().fold(0.0, f64::max), 1.0);
            assert_eq!(rx.s, code.syndrome(&rx.z).unwrap());
        }
    }

    #[test]
    fn zero_sample_decides_zero_and_all_zero_is_rejected() {
        let code = bch_code(3, 1).unwrap();
        let rx = ReceivedWord::from_channel_output(&code, vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0, -2.0], 1.0).unwrap();
        assert!(!rx.z.get(0));
        assert!(rx.z.get(6));
        assert!(ReceivedWord::from_channel_output(&code, vec![0.0; 7], 1.0).is_err());
    }

    #[test]
    fn noiseless_limit_recovers_codeword() {
        let code = bch_code(5, 2).unwrap();
        let params = ChannelParams::for_code(&code, 60.0).unwrap();
        let mut rng = stream_rng(2, 0);
        let info = BitVec::from_u8s(&[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 0]);
        let c = code.encode(&info).unwrap();
        for _ in 0..20 {
            let rx = transmit(&code, &c, &params, &mut rng);
            assert_eq!(rx.z, c);
            assert!(rx.s.is_zero());
        }
    }

    #[test]
    fn scaling_preserves_hard_decisions_and_syndrome() {
        let code = bch_code(5, 2).unwrap();
        let params = ChannelParams::for_code(&code, 2.0).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let rx = transmit(&code, &BitVec::zeros(31), &params, &mut rng);
            for alpha in [0.01, 0.5, 3.0, 1e4] {
                let y: Vec<f64> = rx.y.iter().map(|v| alpha * v).collect();
                let scaled = ReceivedWord::from_channel_output(&code, y, params.sigma2()).unwrap();
                assert_eq!(scaled.z, rx.z);
                assert_eq!(scaled.s, rx.s);
            }
        }
    }

    #[test]
    fn pmf_constructors_validate() {
        let b = NoiseWeightDistribution::binomial(31, 0.05).unwrap();
        assert!((b.pmf()[0] - 0.95f64.powi(31)).abs() < 1e-15);
        assert!((b.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(NoiseWeightDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(NoiseWeightDistribution::new(vec![-0.5, 1.5]).is_err());
        assert!(NoiseWeightDistribution::point_mass(5, 6).is_err());
        let u = NoiseWeightDistribution::uniform(31, 1, 5).unwrap();
        assert_eq!(u.pmf()[0], 0.0);
        assert!((u.mean() - 3.0).abs() < 1e-12);
        let parsed = NoiseWeightDistribution::parse(4, "0, 0.5, 0.5").unwrap();
        assert_eq!(parsed.pmf(), &[0.0, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn biased_point_mass_gives_exact_weight() {
        let code = bch_code(5, 2).unwrap();
        let params = ChannelParams::for_code(&code, 3.0).unwrap();
        let noise = TruncatedNoise::new(&params);
        let mut rng = stream_rng(4, 0);
        let info = BitVec::from_u8s(&[0, 1, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 1, 1, 1]);
        let c = code.encode(&info).unwrap();
        for w in [0usize, 1, 3, 7, 31] {
            let pmf = NoiseWeightDistribution::point_mass(31, w).unwrap();
            for _ in 0..50 {
                let rx = transmit_biased(&code, &c, &params, &noise, &pmf, &mut rng);
                assert_eq!(rx.z.xor(&c).count_ones(), w);
            }
        }
    }

    #[test]
    fn on_demand_stream_only_yields_nonzero_syndromes() {
        let code = bch_code(5, 2).unwrap();
        let params = ChannelParams::for_code(&code, 3.0).unwrap();
        let mut stream = OnDemandStream::new(&code, params, 64, stream_rng(5, 0)).unwrap();
        for batch in stream.by_ref().take(20) {
            assert_eq!(batch.len(), 64);
            for (rx, e) in batch {
                assert!(!rx.s.is_zero());
                assert_eq!(e, rx.z);
            }
        }
        let kept_fraction = stream.kept() as f64 / stream.draws() as f64;
        let pmf0 = channel_weight_pmf(&params, 31).pmf()[0];
        assert!(kept_fraction <= 1.0);
        // words of weight 0 are always discarded
        assert!(kept_fraction < 1.0 - pmf0 + 0.05);
        assert!(OnDemandStream::new(&code, params, 0, stream_rng(5, 0)).is_err());
    }
}
