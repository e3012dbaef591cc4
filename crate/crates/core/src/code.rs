//! Binary linear block codes in systematic form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::gf2::Gf2Matrix;
use crate::gf2m::{bch_generator_polynomial, Gf2m};

/// Largest dimension for which exhaustive codeword enumeration is allowed.
pub const MAX_ENUMERATION_K: usize = 24;

/// An (n, k, d_min) binary linear code with systematic generator
/// `G = [I_k | P]` and parity-check matrix `H = [Pᵀ | I_{n−k}]`.
#[derive(Clone, Debug)]
pub struct LinearCode {
    n: usize,
    k: usize,
    d_min: usize,
    name: String,
    g: Gf2Matrix,
    h: Gf2Matrix,
    /// Column `j` of this code is column `perm[j]` of the matrix it was built from.
    permutation: Option<Vec<usize>>,
}

impl LinearCode {
    /// Builds a code from any full-rank generator matrix, reducing it to
    /// systematic form. If the leading k columns are not an information set
    /// the columns are reordered and the permutation is recorded.
    pub fn from_generator(name: &str, d_min: usize, generator: &Gf2Matrix) -> Result<Self> {
        let n = generator.cols();
        let k = generator.rows();
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!(
                "generator must have 0 < k < n, got k={k}, n={n}"
            )));
        }
        let order: Vec<usize> = (0..n).collect();
        let red = generator.reduce_in_order(&order);
        if red.rank() != k {
            return Err(Error::InvalidParameter(format!(
                "generator matrix has rank {} < k = {k}",
                red.rank()
            )));
        }
        let (g, permutation) = if red.pivots.iter().copied().eq(0..k) {
            (red.matrix, None)
        } else {
            let mut perm = red.pivots.clone();
            perm.extend((0..n).filter(|c| !red.pivots.contains(c)));
            let g = red.matrix.permute_columns(&perm);
            let g = g.reduce_in_order(&order).matrix;
            (g, Some(perm))
        };
        let mut h = Gf2Matrix::zeros(n - k, n);
        for r in 0..k {
            for c in k..n {
                if g.get(r, c) {
                    h.set(c - k, r, true);
                }
            }
        }
        for i in 0..n - k {
            h.set(i, k + i, true);
        }
        let name = if permutation.is_some() {
            format!("{name}_perm")
        } else {
            name.to_string()
        };
        let code = Self {
            n,
            k,
            d_min,
            name,
            g,
            h,
            permutation,
        };
        code.check_construction();
        Ok(code)
    }

    /// Builds a code from a full-rank (n−k)×n parity-check matrix.
    pub fn from_parity_check(name: &str, d_min: usize, parity_check: &Gf2Matrix) -> Result<Self> {
        let n = parity_check.cols();
        let r = parity_check.rows();
        if r == 0 || r >= n {
            return Err(Error::InvalidParameter(format!(
                "parity-check matrix must have 0 < n-k < n, got {r} rows, {n} columns"
            )));
        }
        let k = n - r;
        let order: Vec<usize> = (k..n).chain(0..k).collect();
        let red = parity_check.reduce_in_order(&order);
        if red.rank() != r {
            return Err(Error::InvalidParameter(format!(
                "parity-check matrix has rank {} < n-k = {r}",
                red.rank()
            )));
        }
        let (h_red, permutation) = if red.pivots.iter().copied().eq(k..n) {
            (red.matrix, None)
        } else {
            let mut perm: Vec<usize> = (0..n).filter(|c| !red.pivots.contains(c)).collect();
            perm.extend(red.pivots.iter().copied());
            let h = red.matrix.permute_columns(&perm);
            let order: Vec<usize> = (k..n).collect();
            (h.reduce_in_order(&order).matrix, Some(perm))
        };
        // H = [A | I]  ⇒  G = [I | Aᵀ]
        let mut g = Gf2Matrix::zeros(k, n);
        for i in 0..k {
            g.set(i, i, true);
            for j in 0..r {
                if h_red.get(j, i) {
                    g.set(i, k + j, true);
                }
            }
        }
        let mut code = Self::from_generator(name, d_min, &g)?;
        debug_assert!(code.permutation.is_none());
        if permutation.is_some() {
            code.name = format!("{name}_perm");
            code.permutation = permutation;
        }
        Ok(code)
    }

    fn check_construction(&self) {
        assert!(
            self.g.mul(&self.h.transpose()).is_zero(),
            "{}: G·Hᵀ != 0",
            self.name
        );
        assert_eq!(self.g.rank(), self.k, "{}: rank(G) != k", self.name);
        assert_eq!(self.h.rank(), self.n - self.k, "{}: rank(H) != n-k", self.name);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// n − k
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.g
    }

    pub fn parity_check(&self) -> &Gf2Matrix {
        &self.h
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    pub fn encode(&self, info: &BitVec) -> Result<BitVec> {
        if info.len() != self.k {
            return Err(Error::LengthMismatch {
                what: "information word",
                expected: self.k,
                actual: info.len(),
            });
        }
        Ok(self.g.vec_mul(info))
    }

    /// `z · Hᵀ`
    pub fn syndrome(&self, z: &BitVec) -> Result<BitVec> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "hard-decision word",
                expected: self.n,
                actual: z.len(),
            });
        }
        Ok(self.h.mul_vec(z))
    }

    pub fn is_codeword(&self, word: &BitVec) -> bool {
        self.syndrome(word).map(|s| s.is_zero()).unwrap_or(false)
    }

    /// A word with syndrome `s`: zeros on the information positions, `s` on
    /// the parity positions.
    pub fn coset_representative(&self, s: &BitVec) -> Result<BitVec> {
        if s.len() != self.redundancy() {
            return Err(Error::LengthMismatch {
                what: "syndrome",
                expected: self.redundancy(),
                actual: s.len(),
            });
        }
        let mut z = BitVec::zeros(self.n);
        for i in s.ones() {
            z.set(self.k + i, true);
        }
        Ok(z)
    }

    /// Visits every codeword in Gray-code order of the information word.
    pub fn for_each_codeword<F: FnMut(&BitVec)>(&self, mut f: F) -> Result<()> {
        if self.k > MAX_ENUMERATION_K {
            return Err(Error::EnumerationBound {
                k: self.k,
                max: MAX_ENUMERATION_K,
            });
        }
        let rows: Vec<BitVec> = (0..self.k).map(|r| self.g.row(r)).collect();
        let mut c = BitVec::zeros(self.n);
        f(&c);
        for i in 1u64..(1u64 << self.k) {
            c.xor_assign(&rows[i.trailing_zeros() as usize]);
            f(&c);
        }
        Ok(())
    }

    /// Minimum Hamming weight over all nonzero codewords.
    pub fn min_distance_exhaustive(&self) -> Result<usize> {
        let mut best = usize::MAX;
        self.for_each_codeword(|c| {
            let w = c.count_ones();
            if w != 0 && w < best {
                best = w;
            }
        })?;
        Ok(best)
    }

    /// Writes `n=`, `k=`, `dmin=`, `name=` lines followed by one hex line per
    /// row of H. Row hex is the integer Σ_j h_j·2^j, most significant digit first.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n={}", self.n)?;
        writeln!(out, "k={}", self.k)?;
        writeln!(out, "dmin={}", self.d_min)?;
        writeln!(out, "name={}", self.name)?;
        for r in 0..self.h.rows() {
            writeln!(out, "{}", row_to_hex(&self.h.row(r)))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut n = None;
        let mut k = None;
        let mut d_min = None;
        let mut name = None;
        let mut rows = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::CodeFormat { line: lineno, msg };
            if let Some((key, value)) = line.split_once('=') {
                let parse = |v: &str| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|e| bad(format!("{key}: {e}")))
                };
                match key.trim() {
                    "n" => n = Some(parse(value)?),
                    "k" => k = Some(parse(value)?),
                    "dmin" => d_min = Some(parse(value)?),
                    "name" => name = Some(value.trim().to_string()),
                    other => return Err(bad(format!("unknown key '{other}'"))),
                }
                continue;
            }
            let n = n.ok_or_else(|| bad("H row before n=".into()))?;
            rows.push(hex_to_row(line, n).map_err(bad)?);
        }
        let n = n.ok_or(Error::CodeFormat { line: 0, msg: "missing n=".into() })?;
        let k = k.ok_or(Error::CodeFormat { line: 0, msg: "missing k=".into() })?;
        let d_min = d_min.ok_or(Error::CodeFormat {
            line: 0,
            msg: "missing dmin=".into(),
        })?;
        if rows.len() + k != n {
            return Err(Error::CodeFormat {
                line: 0,
                msg: format!("expected {} H rows, found {}", n - k.min(n), rows.len()),
            });
        }
        let name = name.unwrap_or_else(|| format!("CODE_{n}_{k}_{d_min}"));
        let h = Gf2Matrix::from_rows(n, &rows);
        let code = Self::from_parity_check(&name, d_min, &h)?;
        Ok(code)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }
}

fn row_to_hex(row: &BitVec) -> String {
    let digits = row.len().div_ceil(4);
    let mut s = String::with_capacity(digits);
    for d in (0..digits).rev() {
        let mut nibble = 0u8;
        for b in 0..4 {
            let i = 4 * d + b;
            if i < row.len() && row.get(i) {
                nibble |= 1 << b;
            }
        }
        write!(s, "{nibble:x}").unwrap();
    }
    s
}

fn hex_to_row(hex: &str, n: usize) -> std::result::Result<BitVec, String> {
    let mut row = BitVec::zeros(n);
    for (pos, ch) in hex.chars().rev().enumerate() {
        let nibble = ch
            .to_digit(16)
            .ok_or_else(|| format!("invalid hex digit '{ch}'"))?;
        for b in 0..4 {
            if nibble & (1 << b) != 0 {
                let i = 4 * pos + b;
                if i >= n {
                    return Err(format!("row has bit {i} set beyond n={n}"));
                }
                row.set(i, true);
            }
        }
    }
    Ok(row)
}

/// Narrow-sense primitive BCH code of length 2^m − 1 and designed
/// error-correcting capability `t`. `d_min` is the designed distance 2t+1.
pub fn bch_code(m: u32, t: usize) -> Result<LinearCode> {
    let field = Gf2m::new(m)?;
    let n = field.order();
    if t == 0 {
        return Err(Error::DegenerateCode { m, t });
    }
    let gpoly = bch_generator_polynomial(&field, t);
    let deg = gpoly.len() - 1;
    if deg >= n {
        return Err(Error::DegenerateCode { m, t });
    }
    let k = n - deg;
    // Rows x^i·g(x); bit j of a codeword is the coefficient of x^j.
    let mut g = Gf2Matrix::zeros(k, n);
    for i in 0..k {
        for (j, &c) in gpoly.iter().enumerate() {
            if c != 0 {
                g.set(i, i + j, true);
            }
        }
    }
    let d = 2 * t + 1;
    LinearCode::from_generator(&format!("BCH_{n}_{k}_{d}"), d, &g)
}

/// The (7,4,3) Hamming code with `G = [I | P]`.
pub fn hamming_7_4() -> LinearCode {
    bch_code(3, 1).expect("BCH(7,4) is well-defined")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut impl Rng, len: usize) -> BitVec {
        BitVec::from_bits((0..len).map(|_| rng.random::<bool>()))
    }

    #[test]
    fn bch_codes_have_expected_dimensions() {
        for &(m, t, n, k) in &[(5, 2, 31, 21), (6, 1, 63, 57), (6, 2, 63, 51), (6, 3, 63, 45), (4, 2, 15, 7)] {
            let c = bch_code(m, t).unwrap();
            assert_eq!((c.n(), c.k(), c.d_min()), (n, k, 2 * t + 1), "m={m}, t={t}");
            assert!(c.permutation().is_none());
            assert!(c.generator().mul(&c.parity_check().transpose()).is_zero());
        }
    }

    #[test]
    fn bch_rejects_bad_parameters() {
        assert!(matches!(bch_code(9, 1), Err(Error::UnsupportedFieldDegree(9))));
        assert!(matches!(bch_code(5, 0), Err(Error::DegenerateCode { .. })));
        // t=16 on n=31 swallows every cyclotomic coset
        assert!(matches!(bch_code(5, 16), Err(Error::DegenerateCode { .. })));
    }

    #[test]
    fn encode_is_systematic_and_linear() {
        let code = hamming_7_4();
        assert!(code.encode(&BitVec::zeros(4)).unwrap().is_zero());
        for i in 0..4 {
            let c = code.encode(&BitVec::unit(4, i)).unwrap();
            assert_eq!(c, code.generator().row(i));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let code = bch_code(5, 2).unwrap();
        for _ in 0..100 {
            let u = random_bits(&mut rng, 21);
            let c = code.encode(&u).unwrap();
            assert!((0..21).all(|i| c.get(i) == u.get(i)));
            assert!(code.is_codeword(&c));
        }
        assert!(matches!(
            code.encode(&BitVec::zeros(20)),
            Err(Error::LengthMismatch { expected: 21, actual: 20, .. })
        ));
    }

    #[test]
    fn bch_15_7_nonzero_codewords_meet_distance() {
        let code = bch_code(4, 2).unwrap();
        for i in 1u32..128 {
            let u = BitVec::from_bits((0..7).map(|b| (i >> b) & 1 == 1));
            assert!(code.encode(&u).unwrap().count_ones() >= 5);
        }
    }

    #[test]
    fn syndrome_of_unit_error_is_h_column() {
        let code = bch_code(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = code.encode(&random_bits(&mut rng, 21)).unwrap();
        assert!(code.syndrome(&c).unwrap().is_zero());
        for i in 0..31 {
            let mut z = c.clone();
            z.flip(i);
            let s = code.syndrome(&z).unwrap();
            for r in 0..10 {
                assert_eq!(s.get(r), code.parity_check().get(r, i));
            }
        }
        assert!(code.syndrome(&BitVec::zeros(30)).is_err());
    }

    #[test]
    fn hamming_min_distance_is_three() {
        assert_eq!(hamming_7_4().min_distance_exhaustive().unwrap(), 3);
    }

    #[test]
    fn coset_representative_has_requested_syndrome() {
        let code = bch_code(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = random_bits(&mut rng, 10);
            let z = code.coset_representative(&s).unwrap();
            assert_eq!(code.syndrome(&z).unwrap(), s);
        }
    }

    #[test]
    fn text_round_trip_preserves_h() {
        let code = bch_code(6, 2).unwrap();
        let text = code.to_text();
        assert!(text.starts_with("n=63\nk=51\ndmin=5\n"));
        let back = LinearCode::from_text(&text).unwrap();
        assert_eq!(back.parity_check(), code.parity_check());
        assert_eq!(back.generator(), code.generator());
        assert_eq!(back.name(), code.name());
    }

    #[test]
    fn text_import_rejects_garbage() {
        assert!(LinearCode::from_text("n=7\nk=4\ndmin=3\nzz\n").is_err());
        assert!(LinearCode::from_text("n=7\nk=4\ndmin=3\n0b\n").is_err());
        // bit 7 is beyond n
        assert!(LinearCode::from_text("n=7\nk=5\ndmin=3\n80\n41\n").is_err());
    }

    #[test]
    fn non_systematic_parity_check_is_permuted() {
        // H whose last n-k columns are singular
        let h = Gf2Matrix::from_rows(
            7,
            &[
                BitVec::from_u8s(&[1, 0, 0, 1, 0, 1, 1]),
                BitVec::from_u8s(&[0, 1, 0, 1, 1, 0, 1]),
                BitVec::from_u8s(&[0, 0, 1, 0, 1, 1, 1]),
            ],
        );
        // columns 4..7 = [0 1 1 / 1 0 1 / 1 1 1], rank 3, so no permutation
        let c = LinearCode::from_parity_check("t", 3, &h).unwrap();
        assert!(c.permutation().is_none());
        let h2 = Gf2Matrix::from_rows(
            7,
            &[
                BitVec::from_u8s(&[1, 0, 1, 1, 1, 0, 0]),
                BitVec::from_u8s(&[0, 1, 1, 1, 0, 1, 0]),
                BitVec::from_u8s(&[1, 1, 0, 0, 0, 1, 0]),
            ],
        );
        // last column all zero ⇒ columns must be swapped
        let c2 = LinearCode::from_parity_check("t", 1, &h2).unwrap();
        assert!(c2.permutation().is_some());
        assert!(c2.name().ends_with("_perm"));
    }
}
