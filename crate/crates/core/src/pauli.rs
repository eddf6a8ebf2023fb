//! Pauli strings and real- or complex-weighted sums of them.
//!
//! A [`PauliString`] is stored as an X mask and a Z mask (`Y` sets both). Qubit
//! `q` (1-based, qubit 1 leftmost) lives at bit `n - q`, which is the same bit
//! that qubit occupies in a basis-state index, so `X_q` flips exactly that bit.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::BinaryPolynomial;

/// Coefficients with modulus below this are dropped on simplification.
pub const COEFF_EPS: f64 = 1e-12;

/// Largest register a [`PauliString`] can address.
pub const MAX_PAULI_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Power of `i`: 0 -> 1, 1 -> i, 2 -> -1, 3 -> -i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(pub u8);

impl Phase {
    pub const ONE: Phase = Phase(0);

    pub fn to_complex(self) -> Complex64 {
        match self.0 & 3 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "Pauli strings support at most {MAX_PAULI_QUBITS} qubits");
        Self { n, x: 0, z: 0 }
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        for (k, &p) in letters.iter().enumerate() {
            s.set(k + 1, p);
        }
        s
    }

    /// Single-qubit operator `p` on `qubit` (1-based).
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        let mut s = Self::identity(n);
        s.check_qubit(qubit)?;
        s.set(qubit, p);
        Ok(s)
    }

    /// Product of `Z` on every listed qubit (1-based).
    pub fn z_on(n: usize, qubits: &[usize]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &q in qubits {
            s.check_qubit(q)?;
            s.set(q, Pauli::Z);
        }
        Ok(s)
    }

    #[cfg(test)]
    pub(crate) fn from_masks(n: usize, x: u64, z: u64) -> Self {
        Self { n, x, z }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit == 0 || qubit > self.n {
            return Err(Error::QubitOutOfRange { qubit, n: self.n });
        }
        Ok(())
    }

    fn bit(&self, qubit: usize) -> u64 {
        1u64 << (self.n - qubit)
    }

    fn set(&mut self, qubit: usize, p: Pauli) {
        let b = self.bit(qubit);
        let (x, z) = p.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bits flipped in a basis index when this string acts on it.
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    /// Bits whose value contributes a sign when this string acts on a basis state.
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        let b = self.bit(qubit);
        Pauli::from_bits(self.x & b != 0, self.z & b != 0)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (1..=self.n).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Only `I` and `Z` letters.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Operator product `self * other = phase * r`.
    pub fn multiply(&self, other: &Self) -> Result<(Phase, Self)> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, actual: other.n });
        }
        let mut power = 0u8;
        let mut both = (self.x | self.z) & (other.x | other.z);
        while both != 0 {
            let b = both & both.wrapping_neg();
            both &= both - 1;
            let p = Pauli::from_bits(self.x & b != 0, self.z & b != 0);
            let q = Pauli::from_bits(other.x & b != 0, other.z & b != 0);
            power += match (p, q) {
                (Pauli::X, Pauli::Y) | (Pauli::Y, Pauli::Z) | (Pauli::Z, Pauli::X) => 1,
                (Pauli::Y, Pauli::X) | (Pauli::Z, Pauli::Y) | (Pauli::X, Pauli::Z) => 3,
                _ => 0,
            };
        }
        Ok((
            Phase(power % 4),
            Self {
                n: self.n,
                x: self.x ^ other.x,
                z: self.z ^ other.z,
            },
        ))
    }

    /// `<index|P|index>` for a diagonal string: `(-1)^{popcount(index & z)}`.
    pub fn diagonal_sign(&self, index: usize) -> f64 {
        if (index as u64 & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Sort key used for rendering: weight first, then qubit positions, identity last.
    fn render_key(&self) -> (bool, usize, Vec<(usize, Pauli)>) {
        let support = (1..=self.n)
            .filter_map(|q| match self.letter(q) {
                Pauli::I => None,
                p => Some((q, p)),
            })
            .collect();
        (self.is_identity(), self.weight(), support)
    }

    /// Parses `"Z1Z2"`, `"X3"`, `"I"`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let text = text.trim();
        let mut s = Self::identity(n);
        if text == "I" {
            return Ok(s);
        }
        let bytes = text.as_bytes();
        let mut pos = 0;
        if bytes.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        while pos < bytes.len() {
            let p = match bytes[pos] {
                b'X' => Pauli::X,
                b'Y' => Pauli::Y,
                b'Z' => Pauli::Z,
                b'I' => Pauli::I,
                c => return Err(Error::Parse(format!("unexpected '{}' in {text:?}", c as char))),
            };
            pos += 1;
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let qubit: usize = text[start..pos]
                .parse()
                .map_err(|_| Error::Parse(format!("missing qubit index in {text:?}")))?;
            s.check_qubit(qubit)?;
            if s.letter(qubit) != Pauli::I {
                return Err(Error::Parse(format!("qubit {qubit} repeated in {text:?}")));
            }
            s.set(qubit, p);
        }
        Ok(s)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        for q in 1..=self.n {
            let p = self.letter(q);
            if p != Pauli::I {
                write!(f, "{}{}", p.as_char(), q)?;
            }
        }
        Ok(())
    }
}

/// Weighted sum of Pauli strings on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize, coeff: f64) -> Self {
        let mut s = Self::zero(n);
        s.add_term(PauliString::identity(n), Complex64::new(coeff, 0.0));
        s
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut s = Self::zero(n);
        for (p, c) in terms {
            if p.n() != n {
                return Err(Error::Dimension { expected: n, actual: p.n() });
            }
            s.add_term(p, Complex64::new(c, 0.0));
        }
        s.simplify();
        Ok(s)
    }

    /// `sum_q X_q` style single-letter sum with unit weights.
    pub fn single_qubit_sum(n: usize, p: Pauli) -> Self {
        let terms = (1..=n).map(|q| (PauliString::single(n, q, p).expect("in range"), 1.0));
        Self::from_terms(n, terms).expect("matching n")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn identity_coeff(&self) -> f64 {
        self.coeff(&PauliString::identity(self.n)).re
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        *self.terms.entry(p).or_default() += c;
    }

    /// Drops coefficients below [`COEFF_EPS`].
    pub fn simplify(&mut self) {
        self.terms.retain(|_, c| c.norm() >= COEFF_EPS);
    }

    fn check_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, actual: other.n });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*p, *c);
        }
        out.simplify();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self {
            n: self.n,
            terms: self.terms.iter().map(|(p, c)| (*p, c * factor)).collect(),
        };
        out.simplify();
        out
    }

    /// Operator product `self * other`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = Self::zero(self.n);
        for (p, cp) in &self.terms {
            for (q, cq) in &other.terms {
                let (phase, r) = p.multiply(q)?;
                out.add_term(r, phase.to_complex() * cp * cq);
            }
        }
        out.simplify();
        Ok(out)
    }

    /// `i (self * other - other * self)`. Only anticommuting term pairs survive,
    /// each contributing `2 i phase c_p c_q R` where `P Q = phase R`.
    pub fn commutator_i(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = Self::zero(self.n);
        for (p, cp) in &self.terms {
            for (q, cq) in &other.terms {
                if p.commutes_with(q) {
                    continue;
                }
                let (phase, r) = p.multiply(q)?;
                out.add_term(r, Complex64::new(0.0, 2.0) * phase.to_complex() * cp * cq);
            }
        }
        out.simplify();
        Ok(out)
    }

    /// Every coefficient real within [`COEFF_EPS`].
    pub fn check_hermitian(&self) -> Result<()> {
        match self.terms.iter().find(|(_, c)| c.im.abs() > COEFF_EPS) {
            Some((p, c)) => Err(Error::NotHermitian {
                term: p.to_string(),
                re: c.re,
                im: c.im,
            }),
            None => Ok(()),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(PauliString::is_diagonal)
    }

    fn check_diagonal(&self) -> Result<()> {
        match self.terms.keys().find(|p| !p.is_diagonal()) {
            Some(p) => Err(Error::NotDiagonal { term: p.to_string() }),
            None => Ok(()),
        }
    }

    /// Sum of `|c_r|` over non-identity strings.
    pub fn coeff_l1_norm(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(p, _)| !p.is_identity())
            .map(|(_, c)| c.norm())
            .sum()
    }

    /// Sum of `|c_r|` over every string, an upper bound on the spectral norm.
    pub fn coeff_l1_norm_with_identity(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Diagonal entries `<x|S|x>` indexed by basis index (qubit 1 most significant).
    pub fn to_diagonal_vector(&self) -> Result<Vec<f64>> {
        self.check_diagonal()?;
        let dim = 1usize << self.n;
        let mut out = vec![0.0; dim];
        for (p, c) in &self.terms {
            for (idx, v) in out.iter_mut().enumerate() {
                *v += c.re * p.diagonal_sign(idx);
            }
        }
        Ok(out)
    }

    /// Ising form of a binary polynomial under `x_j -> (I - Z_j) / 2`.
    pub fn from_binary_polynomial(p: &BinaryPolynomial) -> Self {
        let n = p.n();
        let mut out = Self::zero(n);
        let id = PauliString::identity(n);
        let z = |qs: &[usize]| PauliString::z_on(n, qs).expect("in range");
        let (a, linear, pairs) = p.monomials();
        out.add_term(id, a.into());
        for (i, &w) in linear.iter().enumerate() {
            if w != 0.0 {
                out.add_term(id, (w / 2.0).into());
                out.add_term(z(&[i + 1]), (-w / 2.0).into());
            }
        }
        for (i, j, w) in pairs {
            let h = w / 4.0;
            out.add_term(id, h.into());
            out.add_term(z(&[i + 1]), (-h).into());
            out.add_term(z(&[j + 1]), (-h).into());
            out.add_term(z(&[i + 1, j + 1]), h.into());
        }
        out.simplify();
        out
    }

    /// Parses the rendering produced by `Display`, e.g. `"1.5*Z1 + 3*Z2 - 5.5*I"`.
    /// Complex coefficients are written `(re,im)`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut out = Self::zero(n);
        let text = text.trim();
        if text.is_empty() || text == "0" {
            return Ok(out);
        }
        for (sign, body) in split_terms(text)? {
            let body = body.trim();
            let (coeff, string) = match body.rsplit_once('*') {
                Some((c, s)) => (parse_coeff(c.trim())?, PauliString::parse(s, n)?),
                None if body.starts_with(['X', 'Y', 'Z', 'I']) => {
                    (Complex64::new(1.0, 0.0), PauliString::parse(body, n)?)
                }
                None => (parse_coeff(body)?, PauliString::identity(n)),
            };
            out.add_term(string, coeff * sign);
        }
        Ok(out)
    }
}

fn split_terms(text: &str) -> Result<Vec<(f64, String)>> {
    let mut terms = Vec::new();
    let mut current = String::new();
    let mut sign = 1.0;
    let mut depth = 0i32;
    let mut prev: Option<char> = None;
    for ch in text.chars() {
        let exponent = matches!(prev, Some('e') | Some('E'));
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if (ch == '+' || ch == '-') && depth == 0 && !exponent {
            if !current.is_empty() {
                terms.push((sign, std::mem::take(&mut current)));
                sign = 1.0;
            }
            if ch == '-' {
                sign = -sign;
            }
        } else if !ch.is_whitespace() {
            current.push(ch);
        }
        if !ch.is_whitespace() {
            prev = Some(ch);
        }
    }
    if current.is_empty() {
        return Err(Error::Parse(format!("dangling operator in {text:?}")));
    }
    terms.push((sign, current));
    Ok(terms)
}

fn parse_coeff(text: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("bad coefficient {text:?}"));
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        let (re, im) = inner.split_once(',').ok_or_else(bad)?;
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        return Ok(Complex64::new(re, im));
    }
    text.parse::<f64>().map(Complex64::from).map_err(|_| bad())
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by_key(|(p, _)| p.render_key());
        for (k, (p, c)) in ordered.into_iter().enumerate() {
            if c.im.abs() > COEFF_EPS {
                let lead = if k == 0 { "" } else { " + " };
                write!(f, "{lead}({},{})*{p}", c.re, c.im)?;
                continue;
            }
            let v = c.re;
            match (k, v < 0.0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}*{p}", v.abs())?;
        }
        Ok(())
    }
}
