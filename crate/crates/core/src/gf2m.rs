//! Arithmetic in GF(2^m) and binary minimal polynomials, enough to build
//! narrow-sense primitive BCH generator polynomials.

use crate::error::{Error, Result};

/// Primitive polynomials by field degree, as bit masks including the x^m term.
/// m=3: x³+x+1, m=4: x⁴+x+1, m=5: x⁵+x²+1, m=6: x⁶+x+1, m=7: x⁷+x³+1,
/// m=8: x⁸+x⁴+x³+x²+1.
pub const PRIMITIVE_POLYNOMIALS: [(u32, u32); 6] = [
    (3, 0b1011),
    (4, 0b1_0011),
    (5, 0b10_0101),
    (6, 0b100_0011),
    (7, 0b1000_1001),
    (8, 0b1_0001_1101),
];

pub fn primitive_polynomial(m: u32) -> Option<u32> {
    PRIMITIVE_POLYNOMIALS
        .iter()
        .find(|(deg, _)| *deg == m)
        .map(|&(_, p)| p)
}

/// GF(2^m) with elements stored as bit masks in the polynomial basis.
#[derive(Clone, Debug)]
pub struct Gf2m {
    m: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Gf2m {
    pub fn new(m: u32) -> Result<Self> {
        let poly = primitive_polynomial(m).ok_or(Error::UnsupportedFieldDegree(m))?;
        let order = (1usize << m) - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u32 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Self { m, order, exp, log })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Multiplicative order 2^m − 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// α^i
    pub fn alpha_pow(&self, i: usize) -> u16 {
        self.exp[i % self.order]
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Cyclotomic coset of `i` modulo 2^m − 1: {i, 2i, 4i, …}.
    pub fn cyclotomic_coset(&self, i: usize) -> Vec<usize> {
        let mut coset = vec![i % self.order];
        let mut j = (2 * i) % self.order;
        while j != coset[0] {
            coset.push(j);
            j = (2 * j) % self.order;
        }
        coset
    }

    /// Minimal polynomial of α^i over GF(2), coefficients low to high.
    pub fn minimal_polynomial(&self, i: usize) -> Vec<u8> {
        // ∏ (x + α^j) over the coset; coefficients land in GF(2).
        let mut poly: Vec<u16> = vec![1];
        for j in self.cyclotomic_coset(i) {
            let root = self.alpha_pow(j);
            let mut next = vec![0u16; poly.len() + 1];
            for (d, &c) in poly.iter().enumerate() {
                next[d + 1] ^= c;
                next[d] ^= self.mul(c, root);
            }
            poly = next;
        }
        poly.into_iter()
            .map(|c| {
                debug_assert!(c <= 1, "minimal polynomial coefficient outside GF(2)");
                c as u8
            })
            .collect()
    }
}

/// Product of two binary polynomials (coefficients low to high).
pub fn poly_mul_gf2(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] ^= y;
        }
    }
    out
}

/// Generator polynomial of the narrow-sense primitive BCH code of length
/// 2^m − 1 with designed distance 2t + 1: the product of the distinct
/// minimal polynomials of α, α³, …, α^(2t−1).
pub fn bch_generator_polynomial(field: &Gf2m, t: usize) -> Vec<u8> {
    let mut seen = vec![false; field.order()];
    let mut g = vec![1u8];
    for i in (1..2 * t).step_by(2) {
        let rep = i % field.order();
        if seen[rep] {
            continue;
        }
        for j in field.cyclotomic_coset(rep) {
            seen[j] = true;
        }
        g = poly_mul_gf2(&g, &field.minimal_polynomial(rep));
    }
    g
}
