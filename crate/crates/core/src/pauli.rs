//! Symbolic N-qubit Pauli strings and Pauli sums.
//!
//! A string is stored in symplectic form: bit `i` of `x_mask` is set when
//! qubit `i` carries X or Y, bit `i` of `z_mask` when it carries Z or Y.
//! The phase convention is `Y = iXZ`, so a string with masks `(x, z)` is the
//! operator `i^{|x ∧ z|} X^x Z^z` and every string is Hermitian.
//!
//! Text form reads left to right as qubit `0..N-1`; in dense form qubit 0 is
//! the leftmost (most significant) tensor factor.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, DenseOperator, C64, ZERO};

/// Largest register that may be converted to a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 6;

/// Coefficients below this magnitude are dropped by canonicalization.
pub const DROP_TOL: f64 = 1e-14;

/// A power of `i`: `{+1, +i, -1, -i}` stored as the exponent mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn inverse(self) -> Self {
        Phase::from_exponent(-(self.0 as i64))
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 64 {
            return Err(Error::SizeCap {
                what: "n_qubits",
                value: n_qubits,
                limit: 64,
            });
        }
        let full = mask_of(n_qubits);
        if x_mask & !full != 0 || z_mask & !full != 0 {
            return Err(Error::Dimension {
                expected: n_qubits,
                found: 64 - (x_mask | z_mask).leading_zeros() as usize,
            });
        }
        Ok(PauliString {
            n_qubits,
            x_mask,
            z_mask,
        })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, 0, 0)
    }

    /// Single-site operator `P_site` with `P ∈ {'I','X','Y','Z'}`.
    pub fn single(n_qubits: usize, site: usize, pauli: char) -> Result<Self> {
        if site >= n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                found: site + 1,
            });
        }
        let (x, z) = letter_bits(pauli)?;
        Self::new(n_qubits, (x as u64) << site, (z as u64) << site)
    }

    /// Product of Z on every listed site.
    pub fn z_string(n_qubits: usize, sites: &[usize]) -> Result<Self> {
        let mut z = 0u64;
        for &s in sites {
            if s >= n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    found: s + 1,
                });
            }
            z |= 1 << s;
        }
        Self::new(n_qubits, 0, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn is_z_string(&self) -> bool {
        self.x_mask == 0
    }

    /// Number of sites carrying X or Y.
    pub fn x_weight(&self) -> u32 {
        self.x_mask.count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    pub fn letter(&self, site: usize) -> char {
        match ((self.x_mask >> site) & 1, (self.z_mask >> site) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let sym = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        sym.is_multiple_of(2)
    }

    fn check_same_size(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Dense `2^N x 2^N` matrix of the string.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_dense_cap(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut out = DenseOperator::zeros(dim, dim);
        self.add_dense_into(&mut out, c(1.0));
        Ok(out)
    }

    fn add_dense_into(&self, out: &mut DenseOperator, coeff: C64) {
        let n = self.n_qubits;
        // basis index bit (n-1-i) belongs to qubit i
        let x = reverse_bits(self.x_mask, n) as usize;
        let z = reverse_bits(self.z_mask, n) as usize;
        let y_phase = Phase::from_exponent((self.x_mask & self.z_mask).count_ones() as i64).to_complex();
        for col in 0..(1usize << n) {
            let sign = if (z & col).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            out[(col ^ x, col)] += coeff * y_phase * sign;
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_qubits {
            write!(f, "{}", self.letter(i))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        if n == 0 {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (i, ch) in s.chars().enumerate() {
            let (xb, zb) = letter_bits(ch)?;
            x |= (xb as u64) << i;
            z |= (zb as u64) << i;
        }
        PauliString::new(n, x, z)
    }
}

fn letter_bits(ch: char) -> Result<(bool, bool)> {
    match ch.to_ascii_uppercase() {
        'I' => Ok((false, false)),
        'X' => Ok((true, false)),
        'Y' => Ok((true, true)),
        'Z' => Ok((false, true)),
        other => Err(Error::Parse(format!("unknown Pauli letter '{other}'"))),
    }
}

fn mask_of(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn reverse_bits(mask: u64, n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    mask.reverse_bits() >> (64 - n)
}

fn check_dense_cap(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::SizeCap {
            what: "n_qubits",
            value: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Product of two strings: returns `(phase, r)` with `p·q = phase·r`.
pub fn multiply(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    p.check_same_size(q)?;
    let x = p.x_mask ^ q.x_mask;
    let z = p.z_mask ^ q.z_mask;
    // i^{x1z1} X^{x1}Z^{z1} · i^{x2z2} X^{x2}Z^{z2}
    //   = i^{x1z1 + x2z2 - x3z3} (-1)^{z1·x2} · i^{x3z3} X^{x3}Z^{z3}
    let e = (p.x_mask & p.z_mask).count_ones() as i64 + (q.x_mask & q.z_mask).count_ones() as i64
        - (x & z).count_ones() as i64
        + 2 * (p.z_mask & q.x_mask).count_ones() as i64;
    Ok((
        Phase::from_exponent(e),
        PauliString {
            n_qubits: p.n_qubits,
            x_mask: x,
            z_mask: z,
        },
    ))
}

/// `[p, q] = pq − qp`: empty when the strings commute, `2·phase·(pq)` otherwise.
pub fn commutator(p: &PauliString, q: &PauliString) -> Result<PauliSum> {
    let (phase, r) = multiply(p, q)?;
    let mut out = PauliSum::zero(p.n_qubits)?;
    if !p.commutes_with(q) {
        out.add_term(phase.to_complex() * 2.0, r)?;
    }
    Ok(out)
}

/// Eigenvalue of the dephasing dissipator `A ↦ γ Σ_i (Z_i A Z_i − A)` on the
/// string `p`: each site carrying X or Y anticommutes with `Z_i` and
/// contributes `−2γ`.
pub fn dephasing_eigenvalue(p: &PauliString, gamma: f64) -> f64 {
    -2.0 * gamma * p.x_weight() as f64
}

/// Linear combination of Pauli strings on a fixed register.
///
/// Terms are kept canonical: one entry per string, ordered by masks, with
/// coefficients below [`DROP_TOL`] removed.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<(u64, u64), C64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        PauliString::identity(n_qubits)?;
        Ok(PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C64, PauliString)>,
    {
        let mut sum = Self::zero(n_qubits)?;
        for (coeff, s) in terms {
            sum.add_term(coeff, s)?;
        }
        Ok(sum)
    }

    pub fn single(coeff: C64, s: PauliString) -> Self {
        let mut terms = BTreeMap::new();
        if coeff.norm() >= DROP_TOL {
            terms.insert((s.x_mask, s.z_mask), coeff);
        }
        PauliSum {
            n_qubits: s.n_qubits,
            terms,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (C64, PauliString)> + '_ {
        self.terms.iter().map(move |(&(x, z), &coeff)| {
            (
                coeff,
                PauliString {
                    n_qubits: self.n_qubits,
                    x_mask: x,
                    z_mask: z,
                },
            )
        })
    }

    pub fn coefficient(&self, s: &PauliString) -> C64 {
        self.terms.get(&(s.x_mask, s.z_mask)).copied().unwrap_or(ZERO)
    }

    pub fn add_term(&mut self, coeff: C64, s: PauliString) -> Result<()> {
        if s.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: s.n_qubits,
            });
        }
        let key = (s.x_mask, s.z_mask);
        let merged = self.terms.get(&key).copied().unwrap_or(ZERO) + coeff;
        if merged.norm() < DROP_TOL {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, merged);
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = self.clone();
        for (coeff, s) in other.terms() {
            out.add_term(coeff, s)?;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C64) -> PauliSum {
        let mut out = PauliSum {
            n_qubits: self.n_qubits,
            terms: BTreeMap::new(),
        };
        for (coeff, s) in self.terms() {
            out.add_term(coeff * factor, s).expect("same register");
        }
        out
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = PauliSum::zero(self.n_qubits)?;
        for (a, p) in self.terms() {
            for (b, q) in other.terms() {
                let (phase, r) = multiply(&p, &q)?;
                out.add_term(a * b * phase.to_complex(), r)?;
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        let mut out = PauliSum::zero(self.n_qubits)?;
        for (a, p) in self.terms() {
            for (b, q) in other.terms() {
                for (k, r) in commutator(&p, &q)?.terms() {
                    out.add_term(a * b * k, r)?;
                }
            }
        }
        Ok(out)
    }

    /// All strings are Hermitian under `Y = iXZ`, so the sum is Hermitian iff
    /// every coefficient is real.
    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|z| z.im.abs() <= DROP_TOL * z.norm().max(1.0))
    }

    /// Sum of absolute coefficients; bounds the operator norm.
    pub fn coefficient_one_norm(&self) -> f64 {
        self.terms.values().map(|z| z.norm()).sum()
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        check_dense_cap(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut out = DenseOperator::zeros(dim, dim);
        for (coeff, s) in self.terms() {
            s.add_dense_into(&mut out, coeff);
        }
        Ok(out)
    }

    /// Build from JSON terms; `n_qubits` is required only for an empty list.
    pub fn from_json_terms(terms: &[PauliTermJson], n_qubits: Option<usize>) -> Result<Self> {
        let n = match (terms.first(), n_qubits) {
            (Some(t), _) => t.string.chars().count(),
            (None, Some(n)) => n,
            (None, None) => {
                return Err(Error::Parse(
                    "empty Pauli sum needs an explicit n_qubits".into(),
                ))
            }
        };
        if let Some(expected) = n_qubits {
            if expected != n {
                return Err(Error::Dimension { expected, found: n });
            }
        }
        let mut sum = PauliSum::zero(n)?;
        for t in terms {
            let s: PauliString = t.string.parse()?;
            sum.add_term(C64::new(t.coeff[0], t.coeff[1]), s)?;
        }
        Ok(sum)
    }

    pub fn to_json_terms(&self) -> Vec<PauliTermJson> {
        self.terms()
            .map(|(coeff, s)| PauliTermJson {
                coeff: [coeff.re, coeff.im],
                string: s.to_string(),
            })
            .collect()
    }
}

/// One serialized term: `{"coeff": [re, im], "string": "XZIY"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTermJson {
    pub coeff: [f64; 2],
    pub string: String,
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_terms().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<PauliTermJson>::deserialize(deserializer)?;
        PauliSum::from_json_terms(&terms, None).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (k, (coeff, s)) in self.terms().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)·{}", coeff.re, coeff.im, s)?;
        }
        Ok(())
    }
}
