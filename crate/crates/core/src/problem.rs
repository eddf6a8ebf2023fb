//! Quadratic binary polynomials and constrained problems built from them.
//!
//! A [`BinaryPolynomial`] stores `x^T Q x + c^T x + a` with `Q` symmetric, so an
//! off-diagonal monomial `w x_i x_j` is held as `Q[i][j] = Q[j][i] = w / 2`, and
//! because `x_i^2 = x_i` on binary inputs the diagonal `Q[i][i]` acts as extra
//! linear weight. [`QcboProblem::canonicalize`] rewrites a problem so that every
//! constraint is an integer-coefficient equality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator accepted when recovering rationals from doubles.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// Enumeration limit for brute-force minimization of non-affine polynomials.
pub const MAX_ENUMERATION_VARS: usize = 24;

const SYMMETRY_TOL: f64 = 1e-12;
const INTEGRALITY_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPolynomial {
    n: usize,
    /// Row-major, n * n.
    q: Vec<f64>,
    c: Vec<f64>,
    a: f64,
}

impl BinaryPolynomial {
    /// Builds a polynomial from a dense `Q`, rejecting non-square or asymmetric input.
    pub fn new(q: Vec<Vec<f64>>, c: Vec<f64>, a: f64) -> Result<Self> {
        let n = c.len();
        if q.len() != n {
            return Err(Error::Dimension { expected: n, actual: q.len() });
        }
        for row in &q {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, actual: row.len() });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (q[i][j], q[j][i]);
                let scale = 1f64.max(x.abs()).max(y.abs());
                if (x - y).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Asymmetric { i, j, a: x, b: y });
                }
            }
        }
        Ok(Self {
            n,
            q: q.into_iter().flatten().collect(),
            c,
            a,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * n],
            c: vec![0.0; n],
            a: 0.0,
        }
    }

    pub fn constant(n: usize, a: f64) -> Self {
        Self { a, ..Self::zero(n) }
    }

    /// `a + sum_i c_i x_i`.
    pub fn affine(c: Vec<f64>, a: f64) -> Self {
        let n = c.len();
        Self {
            n,
            q: vec![0.0; n * n],
            c,
            a,
        }
    }

    /// Builds from monomial coefficients: constant, per-variable linear weights
    /// and `(i, j, w)` triples meaning `w x_i x_j` with `i != j`.
    pub fn from_monomials(n: usize, constant: f64, linear: &[f64], pairs: &[(usize, usize, f64)]) -> Result<Self> {
        if linear.len() != n {
            return Err(Error::Dimension { expected: n, actual: linear.len() });
        }
        let mut p = Self::affine(linear.to_vec(), constant);
        for &(i, j, w) in pairs {
            if i >= n || j >= n {
                return Err(Error::Dimension { expected: n, actual: i.max(j) + 1 });
            }
            if i == j {
                p.c[i] += w;
            } else {
                p.q[i * n + j] += w / 2.0;
                p.q[j * n + i] += w / 2.0;
            }
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn q_rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    /// Effective coefficient of `x_i` on binary inputs, `Q[i][i] + c[i]`.
    pub fn linear_coeff(&self, i: usize) -> f64 {
        self.q(i, i) + self.c[i]
    }

    /// Coefficient of the monomial `x_i x_j` for `i != j`, i.e. `2 Q[i][j]`.
    pub fn pair_coeff(&self, i: usize, j: usize) -> f64 {
        2.0 * self.q(i, j)
    }

    /// Monomial coefficients: `(constant, linear, [(i, j, w)] for i < j, w != 0)`.
    pub fn monomials(&self) -> (f64, Vec<f64>, Vec<(usize, usize, f64)>) {
        let linear = (0..self.n).map(|i| self.linear_coeff(i)).collect();
        let mut pairs = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.pair_coeff(i, j);
                if w != 0.0 {
                    pairs.push((i, j, w));
                }
            }
        }
        (self.a, linear, pairs)
    }

    /// True when no off-diagonal quadratic weight is present.
    pub fn is_affine(&self) -> bool {
        (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.q(i, j) == 0.0))
    }

    /// True when every monomial coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        let (a, linear, pairs) = self.monomials();
        std::iter::once(a)
            .chain(linear)
            .chain(pairs.into_iter().map(|(_, _, w)| w))
            .all(|v| v.fract() == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.c.iter().all(|&v| v == 0.0) && self.q.iter().all(|&v| v == 0.0)
    }

    pub fn evaluate(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, actual: x.len() });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Error::NotBinary { index, value });
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[u8]) -> f64 {
        let mut total = self.a;
        for i in 0..self.n {
            if x[i] == 0 {
                continue;
            }
            total += self.c[i];
            let row = &self.q[i * self.n..(i + 1) * self.n];
            for j in 0..self.n {
                if x[j] != 0 {
                    total += row[j];
                }
            }
        }
        total
    }

    /// Evaluates at the bit pattern of a basis index (qubit 1 most significant).
    pub fn evaluate_index(&self, index: usize) -> f64 {
        self.evaluate_unchecked(&crate::index_bits(index, self.n))
    }

    /// Minimum over `{0,1}^n`. Exact for affine polynomials, brute force otherwise.
    pub fn minimum(&self) -> Result<f64> {
        if self.is_affine() {
            return Ok(self.a + (0..self.n).map(|i| self.linear_coeff(i).min(0.0)).sum::<f64>());
        }
        if self.n > MAX_ENUMERATION_VARS {
            return Err(Error::TooManyQubits { n: self.n, cap: MAX_ENUMERATION_VARS });
        }
        Ok((0..1usize << self.n)
            .map(|idx| self.evaluate_index(idx))
            .fold(f64::INFINITY, f64::min))
    }

    /// Same polynomial over `new_n >= n` variables; the extra variables carry zero weight.
    pub fn extend(&self, new_n: usize) -> Self {
        assert!(new_n >= self.n, "cannot shrink a polynomial");
        let mut out = Self::zero(new_n);
        out.a = self.a;
        out.c[..self.n].copy_from_slice(&self.c);
        for i in 0..self.n {
            for j in 0..self.n {
                out.q[i * new_n + j] = self.q(i, j);
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            q: self.q.iter().map(|v| v * factor).collect(),
            c: self.c.iter().map(|v| v * factor).collect(),
            a: self.a * factor,
        }
    }

    /// Termwise sum; both operands must share `n`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.n != self.n {
            return Err(Error::Dimension { expected: self.n, actual: other.n });
        }
        Ok(Self {
            n: self.n,
            q: self.q.iter().zip(&other.q).map(|(x, y)| x + y).collect(),
            c: self.c.iter().zip(&other.c).map(|(x, y)| x + y).collect(),
            a: self.a + other.a,
        })
    }

    /// Smallest positive integer that makes every monomial coefficient integral.
    pub fn normalization_multiplier(&self) -> Result<u64> {
        let (a, linear, pairs) = self.monomials();
        let mut lcm = 1u64;
        for v in std::iter::once(a).chain(linear).chain(pairs.into_iter().map(|(_, _, w)| w)) {
            let den = denominator_of(v)?;
            lcm = lcm_checked(lcm, den).ok_or(Error::NotRational {
                value: v,
                max_denominator: MAX_DENOMINATOR,
            })?;
        }
        Ok(lcm)
    }

    /// Scales by the least common multiple of the coefficient denominators so the
    /// result has integer coefficients and the same zero set.
    pub fn normalize_constraint(&self) -> Result<Self> {
        if self.is_integral() {
            return Ok(self.clone());
        }
        let m = self.normalization_multiplier()? as f64;
        let (a, linear, pairs) = self.scale(m).monomials();
        let linear: Vec<f64> = linear.into_iter().map(f64::round).collect();
        let pairs: Vec<_> = pairs.into_iter().map(|(i, j, w)| (i, j, w.round())).collect();
        Self::from_monomials(self.n, a.round(), &linear, &pairs)
    }

    /// Rewrites `g(y) <= 0` as `h(y, s) = g(y) + sum_b 2^b s_b = 0` with binary
    /// slack bits appended after the original variables.
    pub fn inequality_to_equality(&self) -> Result<(Self, usize)> {
        if !self.is_integral() {
            return Err(Error::NormalizationRequired);
        }
        let g_min = self.minimum()?;
        if g_min > 0.0 {
            return Err(Error::InfeasibleConstraint { min: g_min });
        }
        let range = (-g_min).round() as u64;
        let slack_bits = (u64::BITS - range.leading_zeros()) as usize;
        let mut h = self.extend(self.n + slack_bits);
        for b in 0..slack_bits {
            h.c[self.n + b] = (1u64 << b) as f64;
        }
        Ok((h, slack_bits))
    }

    /// `p(x)^2` reduced with `x_i^2 = x_i`; only defined for affine `p`.
    pub fn square(&self) -> Result<Self> {
        if !self.is_affine() {
            return Err(Error::DegreeOverflow);
        }
        let n = self.n;
        let l: Vec<f64> = (0..n).map(|i| self.linear_coeff(i)).collect();
        let mut out = Self::zero(n);
        out.a = self.a * self.a;
        for i in 0..n {
            out.c[i] = 2.0 * self.a * l[i] + l[i] * l[i];
            for j in 0..n {
                if i != j {
                    out.q[i * n + j] = l[i] * l[j];
                }
            }
        }
        Ok(out)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm_checked(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// Smallest denominator `q <= MAX_DENOMINATOR` with `v * q` integral, found from
/// the continued-fraction convergents of `v`.
fn denominator_of(v: f64) -> Result<u64> {
    if !v.is_finite() {
        return Err(Error::NotRational { value: v, max_denominator: MAX_DENOMINATOR });
    }
    let tol = INTEGRALITY_TOL * v.abs().max(1.0);
    if (v - v.round()).abs() <= tol {
        return Ok(1);
    }
    // Denominators of the continued-fraction convergents of v.
    let (mut k_prev, mut k) = (0f64, 1f64);
    let mut frac = v - v.floor();
    while frac.abs() > 0.0 {
        let inv = 1.0 / frac;
        let term = inv.floor();
        frac = inv - term;
        (k_prev, k) = (k, term * k + k_prev);
        if k > MAX_DENOMINATOR as f64 {
            break;
        }
        if (v * k - (v * k).round()).abs() <= tol {
            return Ok(k as u64);
        }
    }
    Err(Error::NotRational { value: v, max_denominator: MAX_DENOMINATOR })
}

/// Minimize `objective` subject to `equalities[q](y) == 0` and `inequalities[j](y) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcboProblem {
    pub n: usize,
    pub objective: BinaryPolynomial,
    pub equalities: Vec<BinaryPolynomial>,
    pub inequalities: Vec<BinaryPolynomial>,
}

impl QcboProblem {
    pub fn new(
        objective: BinaryPolynomial,
        equalities: Vec<BinaryPolynomial>,
        inequalities: Vec<BinaryPolynomial>,
    ) -> Result<Self> {
        let n = objective.n();
        for p in equalities.iter().chain(&inequalities) {
            if p.n() != n {
                return Err(Error::Dimension { expected: n, actual: p.n() });
            }
        }
        Ok(Self { n, objective, equalities, inequalities })
    }

    pub fn unconstrained(objective: BinaryPolynomial) -> Self {
        Self {
            n: objective.n(),
            objective,
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    /// Parses the JSON problem format (see the repository README for the schema).
    pub fn from_json(text: &str) -> std::result::Result<Self, ProblemFileError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(ProblemFileError::Syntax)?;
        file.into_problem().map_err(ProblemFileError::Invalid)
    }

    /// Total constraint count `k3 = k1 + k2`.
    pub fn constraint_count(&self) -> usize {
        self.equalities.len() + self.inequalities.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.inequalities.is_empty() && self.equalities.iter().all(BinaryPolynomial::is_integral)
    }

    /// Feasibility of a bit vector: equalities evaluate to zero, inequalities to at most zero.
    pub fn is_feasible(&self, x: &[u8]) -> bool {
        self.equalities.iter().all(|v| v.evaluate_unchecked(x).abs() <= FEASIBILITY_TOL)
            && self.inequalities.iter().all(|g| g.evaluate_unchecked(x) <= FEASIBILITY_TOL)
    }

    /// Normalizes every constraint and turns inequalities into equalities over
    /// appended slack variables.
    pub fn canonicalize(&self) -> Result<Self> {
        let mut equalities: Vec<BinaryPolynomial> = self
            .equalities
            .iter()
            .map(BinaryPolynomial::normalize_constraint)
            .collect::<Result<_>>()?;
        let mut converted = Vec::with_capacity(self.inequalities.len());
        let mut n = self.n;
        for g in &self.inequalities {
            let g = g.normalize_constraint()?;
            let (_, bits) = g.inequality_to_equality()?;
            // Slack for this constraint goes after all previously added slack.
            let mut h = g.extend(n + bits);
            for b in 0..bits {
                h.c[n + b] = (1u64 << b) as f64;
            }
            n += bits;
            converted.push(h);
        }
        equalities = equalities.into_iter().map(|v| v.extend(n)).collect();
        equalities.extend(converted.into_iter().map(|v| v.extend(n)));
        Ok(Self {
            n,
            objective: self.objective.extend(n),
            equalities,
            inequalities: Vec::new(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemFileError {
    #[error("malformed problem file: {0}")]
    Syntax(serde_json::Error),
    #[error("invalid problem: {0}")]
    Invalid(Error),
}

/// On-disk polynomial: `{"Q": [[...]], "c": [...], "a": 0.0}`; any field may be
/// omitted and defaults to zero.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialFile {
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default)]
    pub a: f64,
}

impl PolynomialFile {
    pub fn into_polynomial(self, n: usize) -> Result<BinaryPolynomial> {
        let q = self.q.unwrap_or_else(|| vec![vec![0.0; n]; n]);
        let c = self.c.unwrap_or_else(|| vec![0.0; n]);
        if c.len() != n {
            return Err(Error::Dimension { expected: n, actual: c.len() });
        }
        BinaryPolynomial::new(q, c, self.a)
    }
}

impl From<&BinaryPolynomial> for PolynomialFile {
    fn from(p: &BinaryPolynomial) -> Self {
        Self {
            q: Some(p.q_rows()),
            c: Some(p.c.clone()),
            a: p.a,
        }
    }
}

/// On-disk problem document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub objective: PolynomialFile,
    #[serde(default)]
    pub equalities: Vec<PolynomialFile>,
    #[serde(default)]
    pub inequalities: Vec<PolynomialFile>,
    /// Suggested penalty shift, used when the caller does not supply one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<QcboProblem> {
        let n = self.n;
        QcboProblem::new(
            self.objective.into_polynomial(n)?,
            self.equalities.into_iter().map(|p| p.into_polynomial(n)).collect::<Result<_>>()?,
            self.inequalities.into_iter().map(|p| p.into_polynomial(n)).collect::<Result<_>>()?,
        )
    }
}

impl From<&QcboProblem> for ProblemFile {
    fn from(p: &QcboProblem) -> Self {
        Self {
            n: p.n,
            objective: (&p.objective).into(),
            equalities: p.equalities.iter().map(Into::into).collect(),
            inequalities: p.inequalities.iter().map(Into::into).collect(),
            gamma: None,
        }
    }
}

/// The three-variable example: minimize `-2x1 - 5x2 - 3x3 - 2x1x2` subject to
/// `1 - x1 - 3x2 - x3 = 0`.
pub fn example_problem() -> QcboProblem {
    let objective = BinaryPolynomial::from_monomials(3, 0.0, &[-2.0, -5.0, -3.0], &[(0, 1, -2.0)])
        .expect("static example");
    let constraint = BinaryPolynomial::affine(vec![-1.0, -3.0, -1.0], 1.0);
    QcboProblem::new(objective, vec![constraint], Vec::new()).expect("static example")
}
