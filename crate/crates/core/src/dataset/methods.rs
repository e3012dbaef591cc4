//! The four dataset construction methods.
//!
//! Every method sends the all-zero codeword and keeps only words with a
//! nonzero syndrome. They differ in how the channel draws are made and in
//! which labelled samples are admitted:
//!
//! * `chan`: plain channel draws, admitted as they come.
//! * `uniw`: plain channel draws; admitted by target weight so that each
//!   weight 1..=w_max receives an equal share.
//! * `is`:   draws whose hard-error count follows a chosen input
//!   distribution (uniform over 1..=d_min by default), admitted as they come.
//! * `unis`: plain channel draws; admitted by syndrome so that every nonzero
//!   syndrome receives the same quota.

use std::fmt::Write as _;

use crate::bits::BitVec;
use crate::channel::{transmit, transmit_biased, ChannelParams, NoiseWeightDistribution, ReceivedWord, TruncatedNoise};
use crate::code::LinearCode;
use crate::dataset::format::Method;
use crate::dataset::BuildSpec;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::rng::StreamRng;

/// Largest n−k for which uniform-syndrome buckets are materialized.
pub const MAX_SYNDROME_BITS: usize = 24;

/// A dataset construction strategy.
pub trait ConstructionMethod: Send + Sync {
    fn method(&self) -> Method;

    /// Value stored in the header's `w_max` byte.
    fn header_w_max(&self) -> u8 {
        0
    }

    /// Exact number of records the build will produce.
    fn planned_records(&self) -> u64;

    /// One channel use with the all-zero codeword.
    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord;

    /// Fresh admission state for one build.
    fn selector(&self) -> Box<dyn Selector>;

    /// Key=value lines describing resolved parameters, for the build log.
    fn describe(&self) -> String;
}

/// Sequential admission state. `screen` sees every nonzero-syndrome draw
/// before labelling; `admit` sees the labelled target of every screened draw.
/// Both are called in a fixed order, so the selected records do not depend on
/// the number of worker threads.
pub trait Selector: Send {
    fn screen(&mut self, rx: &ReceivedWord) -> bool;
    fn admit(&mut self, e_target: &BitVec) -> bool;
    fn is_full(&self) -> bool;
    /// Per-bucket fill report for starvation errors.
    fn progress(&self) -> String;
}

pub type MethodFactory =
    dyn Fn(&LinearCode, &BuildSpec) -> Result<Box<dyn ConstructionMethod>> + Send + Sync;

pub type MethodRegistry = Registry<MethodFactory>;

/// Registry holding the four built-in methods under `chan`, `uniw`, `is`, `unis`.
pub fn default_methods() -> MethodRegistry {
    let mut r = MethodRegistry::new("method");
    r.register(
        Method::Channel.name(),
        "channel noise distribution",
        Box::new(|code, spec| Ok(Box::new(ChannelMethod::new(code, spec)?))),
    );
    r.register(
        Method::UniformWeight.name(),
        "uniform target weight over 1..=w_max",
        Box::new(|code, spec| Ok(Box::new(UniformWeightMethod::new(code, spec)?))),
    );
    r.register(
        Method::Importance.name(),
        "biased input noise weight distribution",
        Box::new(|code, spec| Ok(Box::new(ImportanceMethod::new(code, spec)?))),
    );
    r.register(
        Method::UniformSyndrome.name(),
        "equal count per nonzero syndrome",
        Box::new(|code, spec| Ok(Box::new(UniformSyndromeMethod::new(code, spec)?))),
    );
    r
}

fn reject_field(spec: &BuildSpec, method: Method, w_max: bool, pmf: bool) -> Result<()> {
    if !w_max && spec.w_max.is_some() {
        return Err(Error::InvalidParameter(format!(
            "w_max is not used by method '{}'",
            method.name()
        )));
    }
    if !pmf && spec.input_pmf.is_some() {
        return Err(Error::InvalidParameter(format!(
            "input pmf is only used by method 'is', not '{}'",
            method.name()
        )));
    }
    Ok(())
}

struct ChannelDraw {
    code: LinearCode,
    params: ChannelParams,
    zero: BitVec,
}

impl ChannelDraw {
    fn new(code: &LinearCode, spec: &BuildSpec) -> Result<Self> {
        Ok(Self {
            code: code.clone(),
            params: ChannelParams::for_code(code, spec.snr_db)?,
            zero: BitVec::zeros(code.n()),
        })
    }

    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord {
        transmit(&self.code, &self.zero, &self.params, rng)
    }
}

/// Admits everything until `total` is reached.
struct CountSelector {
    total: u64,
    taken: u64,
}

impl Selector for CountSelector {
    fn screen(&mut self, _rx: &ReceivedWord) -> bool {
        if self.taken < self.total {
            self.taken += 1;
            true
        } else {
            false
        }
    }

    fn admit(&mut self, _e_target: &BitVec) -> bool {
        true
    }

    fn is_full(&self) -> bool {
        self.taken >= self.total
    }

    fn progress(&self) -> String {
        format!("{}/{} records", self.taken, self.total)
    }
}

pub struct ChannelMethod {
    draw: ChannelDraw,
    count: u64,
}

impl ChannelMethod {
    pub fn new(code: &LinearCode, spec: &BuildSpec) -> Result<Self> {
        reject_field(spec, Method::Channel, false, false)?;
        Ok(Self {
            draw: ChannelDraw::new(code, spec)?,
            count: spec.record_count,
        })
    }
}

impl ConstructionMethod for ChannelMethod {
    fn method(&self) -> Method {
        Method::Channel
    }

    fn planned_records(&self) -> u64 {
        self.count
    }

    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord {
        self.draw.draw(rng)
    }

    fn selector(&self) -> Box<dyn Selector> {
        Box::new(CountSelector {
            total: self.count,
            taken: 0,
        })
    }

    fn describe(&self) -> String {
        format!("records={}", self.count)
    }
}

pub struct UniformWeightMethod {
    draw: ChannelDraw,
    w_max: usize,
    quotas: Vec<u64>,
}

impl UniformWeightMethod {
    pub fn new(code: &LinearCode, spec: &BuildSpec) -> Result<Self> {
        reject_field(spec, Method::UniformWeight, true, false)?;
        let w_max = spec.w_max.unwrap_or(code.d_min().saturating_sub(1));
        if w_max == 0 || w_max > code.n() || w_max > u8::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "w_max must be in 1..={}, got {w_max}",
                code.n().min(255)
            )));
        }
        Ok(Self {
            draw: ChannelDraw::new(code, spec)?,
            w_max,
            quotas: weight_quotas(spec.record_count, w_max),
        })
    }

    pub fn quotas(&self) -> &[u64] {
        &self.quotas
    }
}

/// ⌊count/w_max⌋ per weight 1..=w_max, remainder one each to the lowest
/// weights. Index 0 is unused.
pub fn weight_quotas(count: u64, w_max: usize) -> Vec<u64> {
    let base = count / w_max as u64;
    let rem = (count % w_max as u64) as usize;
    let mut q = vec![0u64; w_max + 1];
    for (w, slot) in q.iter_mut().enumerate().skip(1) {
        *slot = base + u64::from(w <= rem);
    }
    q
}

struct WeightSelector {
    quotas: Vec<u64>,
    filled: Vec<u64>,
}

impl Selector for WeightSelector {
    fn screen(&mut self, _rx: &ReceivedWord) -> bool {
        !self.is_full()
    }

    fn admit(&mut self, e_target: &BitVec) -> bool {
        let w = e_target.count_ones();
        if w == 0 || w >= self.quotas.len() || self.filled[w] >= self.quotas[w] {
            return false;
        }
        self.filled[w] += 1;
        true
    }

    fn is_full(&self) -> bool {
        self.filled.iter().zip(&self.quotas).all(|(f, q)| f >= q)
    }

    fn progress(&self) -> String {
        let mut s = String::new();
        for w in 1..self.quotas.len() {
            let _ = write!(s, "w{w}={}/{} ", self.filled[w], self.quotas[w]);
        }
        s.trim_end().to_string()
    }
}

impl ConstructionMethod for UniformWeightMethod {
    fn method(&self) -> Method {
        Method::UniformWeight
    }

    fn header_w_max(&self) -> u8 {
        self.w_max as u8
    }

    fn planned_records(&self) -> u64 {
        self.quotas.iter().sum()
    }

    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord {
        self.draw.draw(rng)
    }

    fn selector(&self) -> Box<dyn Selector> {
        Box::new(WeightSelector {
            filled: vec![0; self.quotas.len()],
            quotas: self.quotas.clone(),
        })
    }

    fn describe(&self) -> String {
        format!("w_max={} quotas={:?}", self.w_max, &self.quotas[1..])
    }
}

pub struct ImportanceMethod {
    code: LinearCode,
    params: ChannelParams,
    noise: TruncatedNoise,
    input_pmf: NoiseWeightDistribution,
    /// Upper end of the default uniform input law, 0 for a custom law.
    w_max: usize,
    count: u64,
    zero: BitVec,
}

impl ImportanceMethod {
    pub fn new(code: &LinearCode, spec: &BuildSpec) -> Result<Self> {
        reject_field(spec, Method::Importance, true, true)?;
        let (input_pmf, w_max) = match (&spec.input_pmf, spec.w_max) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "give either an input pmf or w_max for method 'is', not both".into(),
                ))
            }
            (Some(p), None) => (p.clone(), 0),
            (None, w) => {
                let hi = w.unwrap_or(code.d_min());
                if hi == 0 || hi > code.n() || hi > u8::MAX as usize {
                    return Err(Error::InvalidParameter(format!("w_max {hi} out of range")));
                }
                (NoiseWeightDistribution::uniform(code.n(), 1, hi)?, hi)
            }
        };
        if input_pmf.max_weight() != code.n() {
            return Err(Error::InvalidPmf(format!(
                "input pmf covers weights 0..={}, code length is {}",
                input_pmf.max_weight(),
                code.n()
            )));
        }
        let params = ChannelParams::for_code(code, spec.snr_db)?;
        Ok(Self {
            code: code.clone(),
            noise: TruncatedNoise::new(&params),
            params,
            input_pmf,
            w_max,
            count: spec.record_count,
            zero: BitVec::zeros(code.n()),
        })
    }

    pub fn input_pmf(&self) -> &NoiseWeightDistribution {
        &self.input_pmf
    }
}

impl ConstructionMethod for ImportanceMethod {
    fn method(&self) -> Method {
        Method::Importance
    }

    fn header_w_max(&self) -> u8 {
        self.w_max as u8
    }

    fn planned_records(&self) -> u64 {
        self.count
    }

    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord {
        transmit_biased(
            &self.code,
            &self.zero,
            &self.params,
            &self.noise,
            &self.input_pmf,
            rng,
        )
    }

    fn selector(&self) -> Box<dyn Selector> {
        Box::new(CountSelector {
            total: self.count,
            taken: 0,
        })
    }

    fn describe(&self) -> String {
        let pmf: Vec<String> = self.input_pmf.pmf().iter().map(|p| format!("{p}")).collect();
        format!("records={} input_pmf={}", self.count, pmf.join(","))
    }
}

pub struct UniformSyndromeMethod {
    draw: ChannelDraw,
    buckets: usize,
    quota: u64,
}

impl UniformSyndromeMethod {
    pub fn new(code: &LinearCode, spec: &BuildSpec) -> Result<Self> {
        reject_field(spec, Method::UniformSyndrome, false, false)?;
        let r = code.redundancy();
        if r > MAX_SYNDROME_BITS {
            return Err(Error::InvalidParameter(format!(
                "uniform-syndrome construction supports n-k <= {MAX_SYNDROME_BITS}, got {r}"
            )));
        }
        let buckets = (1usize << r) - 1;
        if spec.record_count < buckets as u64 {
            return Err(Error::InvalidParameter(format!(
                "uniform-syndrome construction needs at least {buckets} records"
            )));
        }
        Ok(Self {
            draw: ChannelDraw::new(code, spec)?,
            buckets,
            quota: spec.record_count / buckets as u64,
        })
    }

    pub fn quota(&self) -> u64 {
        self.quota
    }
}

pub(crate) fn syndrome_index(s: &BitVec) -> usize {
    s.words().first().copied().unwrap_or(0) as usize
}

struct SyndromeSelector {
    quota: u64,
    filled: Vec<u64>,
    full_buckets: usize,
}

impl Selector for SyndromeSelector {
    fn screen(&mut self, rx: &ReceivedWord) -> bool {
        let idx = syndrome_index(&rx.s);
        if idx == 0 || self.filled[idx] >= self.quota {
            return false;
        }
        self.filled[idx] += 1;
        if self.filled[idx] == self.quota {
            self.full_buckets += 1;
        }
        true
    }

    fn admit(&mut self, _e_target: &BitVec) -> bool {
        true
    }

    fn is_full(&self) -> bool {
        self.full_buckets == self.filled.len() - 1
    }

    fn progress(&self) -> String {
        let starving: Vec<(usize, u64)> = self
            .filled
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &f)| f < self.quota)
            .map(|(i, &f)| (i, f))
            .collect();
        let mut s = format!(
            "{}/{} syndrome buckets full (quota {})",
            self.full_buckets,
            self.filled.len() - 1,
            self.quota
        );
        for (i, f) in starving.iter().take(8) {
            let _ = write!(s, "; s={i:#x}: {f}");
        }
        if starving.len() > 8 {
            let _ = write!(s, "; … {} more", starving.len() - 8);
        }
        s
    }
}

impl ConstructionMethod for UniformSyndromeMethod {
    fn method(&self) -> Method {
        Method::UniformSyndrome
    }

    fn planned_records(&self) -> u64 {
        self.quota * self.buckets as u64
    }

    fn draw(&self, rng: &mut StreamRng) -> ReceivedWord {
        self.draw.draw(rng)
    }

    fn selector(&self) -> Box<dyn Selector> {
        Box::new(SyndromeSelector {
            quota: self.quota,
            filled: vec![0; self.buckets + 1],
            full_buckets: 0,
        })
    }

    fn describe(&self) -> String {
        format!("syndromes={} quota={}", self.buckets, self.quota)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::bch_code;
    use crate::dataset::format::TargetKind;

    fn spec(method: Method, count: u64) -> BuildSpec {
        BuildSpec::new(method, TargetKind::MaximumLikelihood, 3.0, count, 1)
    }

    #[test]
    fn weight_quota_allocation() {
        assert_eq!(weight_quotas(4_000_000, 4), vec![0, 1_000_000, 1_000_000, 1_000_000, 1_000_000]);
        assert_eq!(weight_quotas(10, 4), vec![0, 3, 3, 2, 2]);
        assert_eq!(weight_quotas(3, 4), vec![0, 1, 1, 1, 0]);
    }

    #[test]
    fn syndrome_quota_for_31_21() {
        let code = bch_code(5, 2).unwrap();
        let m = UniformSyndromeMethod::new(&code, &spec(Method::UniformSyndrome, 4_092_000)).unwrap();
        assert_eq!(m.buckets, 1023);
        assert_eq!(m.quota(), 4000);
        assert_eq!(m.planned_records(), 4_092_000);
        assert!(UniformSyndromeMethod::new(&code, &spec(Method::UniformSyndrome, 1000)).is_err());
    }

    #[test]
    fn method_fields_are_checked() {
        let code = bch_code(5, 2).unwrap();
        let mut s = spec(Method::Channel, 10);
        s.w_max = Some(3);
        assert!(ChannelMethod::new(&code, &s).is_err());
        let mut s = spec(Method::UniformWeight, 10);
        s.input_pmf = Some(NoiseWeightDistribution::point_mass(31, 1).unwrap());
        assert!(UniformWeightMethod::new(&code, &s).is_err());
        let mut s = spec(Method::Importance, 10);
        s.w_max = Some(3);
        s.input_pmf = Some(NoiseWeightDistribution::point_mass(31, 1).unwrap());
        assert!(ImportanceMethod::new(&code, &s).is_err());
        let mut s = spec(Method::Importance, 10);
        s.input_pmf = Some(NoiseWeightDistribution::point_mass(15, 1).unwrap());
        assert!(ImportanceMethod::new(&code, &s).is_err());
    }

    #[test]
    fn defaults_follow_minimum_distance() {
        let code = bch_code(5, 2).unwrap();
        let uw = UniformWeightMethod::new(&code, &spec(Method::UniformWeight, 8)).unwrap();
        assert_eq!(uw.header_w_max(), 4);
        let is = ImportanceMethod::new(&code, &spec(Method::Importance, 8)).unwrap();
        assert_eq!(is.header_w_max(), 5);
        let pmf = is.input_pmf().pmf();
        assert_eq!(pmf[0], 0.0);
        assert!((1..=5).all(|w| (pmf[w] - 0.2).abs() < 1e-15));
        assert!(pmf[6..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn registry_knows_all_methods() {
        let r = default_methods();
        assert_eq!(r.names(), vec!["chan", "uniw", "is", "unis"]);
        let code = bch_code(5, 2).unwrap();
        for m in Method::ALL {
            let built = r.get(m.name()).unwrap()(&code, &spec(m, 2046)).unwrap();
            assert_eq!(built.method(), m);
        }
        assert!(r.get("nope").is_err());
    }
}
