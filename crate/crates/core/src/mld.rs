//! Maximum-likelihood decoding: an exhaustive correlation decoder for small
//! codes and ordered-statistics decoding (OSD) as the scalable reference.
//!
//! Both decoders rank a candidate codeword `c` by the reliability weight of
//! the error pattern it implies, `w_L(z ⊕ c) = Σ_{i: z_i ≠ c_i} |L_i|`.
//! Maximizing the correlation `⟨c, L⟩ = Σ_i (−1)^{c_i} L_i` is the same as
//! minimizing this weight because `⟨c, L⟩ = Σ_i |L_i| − 2·w_L(z ⊕ c)`.
//! Ties go to the lexicographically smallest codeword.

use std::cmp::Ordering;

use crate::bits::BitVec;
use crate::channel::ReceivedWord;
use crate::code::{LinearCode, MAX_ENUMERATION_K};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorPattern {
    bits: BitVec,
    hamming_weight: usize,
    reliability_weight: f64,
}

impl ErrorPattern {
    /// `reliabilities` are the |L_i| (or any positive multiple of them).
    pub fn new(bits: BitVec, reliabilities: &[f64]) -> Self {
        let hamming_weight = bits.count_ones();
        let reliability_weight = bits.weighted_sum(reliabilities);
        Self {
            bits,
            hamming_weight,
            reliability_weight,
        }
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn into_bits(self) -> BitVec {
        self.bits
    }

    pub fn hamming_weight(&self) -> usize {
        self.hamming_weight
    }

    /// w_L(e)
    pub fn reliability_weight(&self) -> f64 {
        self.reliability_weight
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MldDecision {
    pub codeword: BitVec,
    pub error_pattern: ErrorPattern,
    /// ⟨ĉ, L⟩
    pub correlation: f64,
}

impl MldDecision {
    fn new(rx: &ReceivedWord, codeword: BitVec) -> Self {
        let correlation = correlation(&codeword, &rx.llr);
        let error_pattern = ErrorPattern::new(rx.z.xor(&codeword), &rx.reliabilities());
        Self {
            codeword,
            error_pattern,
            correlation,
        }
    }
}

/// ⟨c, L⟩ = Σ_i (−1)^{c_i} L_i
pub fn correlation(codeword: &BitVec, llr: &[f64]) -> f64 {
    llr.iter()
        .enumerate()
        .map(|(i, &l)| if codeword.get(i) { -l } else { l })
        .sum()
}

/// w_L(z ⊕ c), accumulated in ascending index order.
#[inline]
fn discrepancy(z: &BitVec, c: &BitVec, reliabilities: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (wi, (a, b)) in z.words().iter().zip(c.words()).enumerate() {
        let mut d = a ^ b;
        while d != 0 {
            let bit = d.trailing_zeros() as usize;
            d &= d - 1;
            acc += reliabilities[wi * 64 + bit];
        }
    }
    acc
}

/// Tracks the best candidate under (metric, lexicographic codeword) order.
struct Best {
    codeword: BitVec,
    metric: f64,
}

impl Best {
    fn offer(&mut self, candidate: &BitVec, metric: f64) -> bool {
        let better = match metric.partial_cmp(&self.metric) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => candidate.lex_cmp(&self.codeword) == Ordering::Less,
            _ => false,
        };
        if better {
            self.codeword.clone_from(candidate);
            self.metric = metric;
        }
        better
    }
}

/// Brute-force MLD over all 2^k codewords.
pub fn mld_exhaustive(code: &LinearCode, rx: &ReceivedWord) -> Result<MldDecision> {
    check_length(code, rx)?;
    if code.k() > MAX_ENUMERATION_K {
        return Err(Error::EnumerationBound {
            k: code.k(),
            max: MAX_ENUMERATION_K,
        });
    }
    let rel = rx.reliabilities();
    let zero = BitVec::zeros(code.n());
    let mut best = Best {
        metric: discrepancy(&rx.z, &zero, &rel),
        codeword: zero,
    };
    code.for_each_codeword(|c| {
        best.offer(c, discrepancy(&rx.z, c, &rel));
    })?;
    Ok(MldDecision::new(rx, best.codeword))
}

/// Reprocessing order ⌊d_min/4⌋ used to label datasets.
pub fn default_order(code: &LinearCode) -> usize {
    code.d_min() / 4
}

fn check_length(code: &LinearCode, rx: &ReceivedWord) -> Result<()> {
    if rx.n() != code.n() {
        return Err(Error::LengthMismatch {
            what: "received word",
            expected: code.n(),
            actual: rx.n(),
        });
    }
    Ok(())
}

/// The most reliable basis of one received word: for every MRB position the
/// codeword obtained by setting that information bit alone.
struct MostReliableBasis {
    /// Codewords generated by each MRB position, most reliable first.
    flips: Vec<BitVec>,
    /// MRB positions in the same order as `flips`.
    positions: Vec<usize>,
}

impl MostReliableBasis {
    fn new(code: &LinearCode, reliabilities: &[f64]) -> Self {
        let n = code.n();
        // Decreasing reliability, ties to the lower index.
        let mut by_reliability: Vec<usize> = (0..n).collect();
        by_reliability.sort_by(|&a, &b| {
            reliabilities[b]
                .partial_cmp(&reliabilities[a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        // Pivoting H from the least reliable column picks the n−k least
        // reliable independent parity positions; the complement is the
        // greedy most-reliable information set.
        let least_first: Vec<usize> = by_reliability.iter().rev().copied().collect();
        let red = code.parity_check().reduce_in_order(&least_first);
        assert_eq!(red.rank(), code.redundancy(), "parity-check matrix lost rank");
        let mut is_pivot = vec![false; n];
        for &p in &red.pivots {
            is_pivot[p] = true;
        }
        let positions: Vec<usize> = by_reliability.into_iter().filter(|&j| !is_pivot[j]).collect();
        let flips = positions
            .iter()
            .map(|&j| {
                let mut c = BitVec::unit(n, j);
                for (r, &p) in red.pivots.iter().enumerate() {
                    if red.matrix.get(r, j) {
                        c.set(p, true);
                    }
                }
                c
            })
            .collect();
        Self { flips, positions }
    }

    /// The codeword agreeing with `z` on the MRB.
    fn reencode(&self, z: &BitVec) -> BitVec {
        let mut c = BitVec::zeros(z.len());
        for (f, &j) in self.flips.iter().zip(&self.positions) {
            if z.get(j) {
                c.xor_assign(f);
            }
        }
        c
    }
}

fn reprocess(
    basis: &MostReliableBasis,
    z: &BitVec,
    rel: &[f64],
    order: usize,
    start: usize,
    current: &mut BitVec,
    best: &mut Best,
) {
    if order == 0 {
        return;
    }
    for i in start..basis.flips.len() {
        current.xor_assign(&basis.flips[i]);
        best.offer(current, discrepancy(z, current, rel));
        reprocess(basis, z, rel, order - 1, i + 1, current, best);
        current.xor_assign(&basis.flips[i]);
    }
}

fn osd_search(
    code: &LinearCode,
    z: &BitVec,
    rel: &[f64],
    order: usize,
    hint: Option<&BitVec>,
) -> Result<(BitVec, bool)> {
    if order > code.k() {
        return Err(Error::InvalidParameter(format!(
            "OSD order {order} exceeds k = {}",
            code.k()
        )));
    }
    let basis = MostReliableBasis::new(code, rel);
    let mut current = basis.reencode(z);
    let mut best = Best {
        metric: discrepancy(z, &current, rel),
        codeword: current.clone(),
    };
    reprocess(&basis, z, rel, order, 0, &mut current, &mut best);
    let mut hint_won = false;
    if let Some(h) = hint {
        debug_assert!(code.is_codeword(h));
        hint_won = best.offer(h, discrepancy(z, h, rel));
    }
    Ok((best.codeword, hint_won))
}

/// Ordered-statistics decoding with reprocessing order `order`: every
/// codeword whose MRB part differs from the hard decision in at most `order`
/// positions is tested and the best one is returned.
pub fn osd_decode(code: &LinearCode, rx: &ReceivedWord, order: usize) -> Result<MldDecision> {
    check_length(code, rx)?;
    let (codeword, _) = osd_search(code, &rx.z, &rx.reliabilities(), order, None)?;
    Ok(MldDecision::new(rx, codeword))
}

/// OSD with one extra candidate codeword tested alongside the reprocessing
/// list. Dataset labelling passes the transmitted codeword so that the label
/// is never worse than the channel error pattern.
pub fn osd_decode_with_hint(
    code: &LinearCode,
    rx: &ReceivedWord,
    order: usize,
    hint: &BitVec,
) -> Result<MldDecision> {
    Ok(osd_decode_with_hint_flag(code, rx, order, hint)?.0)
}

/// As [`osd_decode_with_hint`], also reporting whether the hint beat every
/// reprocessing candidate.
pub fn osd_decode_with_hint_flag(
    code: &LinearCode,
    rx: &ReceivedWord,
    order: usize,
    hint: &BitVec,
) -> Result<(MldDecision, bool)> {
    check_length(code, rx)?;
    if !code.is_codeword(hint) {
        return Err(Error::InvalidParameter("OSD hint is not a codeword".into()));
    }
    let (codeword, won) = osd_search(code, &rx.z, &rx.reliabilities(), order, Some(hint))?;
    Ok((MldDecision::new(rx, codeword), won))
}

/// Syndrome-domain OSD: the most likely error pattern in the coset of `s`
/// given only the bit reliabilities (any positive scaling of |L|).
pub fn osd_error_from_syndrome(
    code: &LinearCode,
    syndrome: &BitVec,
    reliabilities: &[f64],
    order: usize,
) -> Result<BitVec> {
    if reliabilities.len() != code.n() {
        return Err(Error::LengthMismatch {
            what: "reliabilities",
            expected: code.n(),
            actual: reliabilities.len(),
        });
    }
    let z = code.coset_representative(syndrome)?;
    let (c, _) = osd_search(code, &z, reliabilities, order, None)?;
    Ok(z.xor(&c))
}
