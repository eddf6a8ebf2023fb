//! Brute-force references and the two performance metrics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::problem::QcboProblem;
use crate::statevector::StateVector;

pub const MAX_BRUTE_FORCE_VARS: usize = 20;
pub const MAX_DENSE_QUBITS: usize = 10;

/// Slack allowed when a Lyapunov value sits just outside the spectrum of `L`.
pub const RATIO_SLACK: f64 = 1e-6;

const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// `None` when no bit string is feasible.
    pub optimum_value: Option<f64>,
    #[serde(serialize_with = "serialize_opt_bits")]
    pub optimum_bits: Option<Vec<u8>>,
    /// Basis indices of every feasible minimizer, ascending.
    pub optimal_indices: Vec<usize>,
    pub feasible_count: usize,
    pub infeasible_count: usize,
    pub unique: bool,
}

fn serialize_opt_bits<S: serde::Serializer>(bits: &Option<Vec<u8>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match bits {
        Some(b) => s.serialize_some(&crate::bit_string(b)),
        None => s.serialize_none(),
    }
}

/// Enumerates `{0,1}^n`; feasibility uses every equality and inequality of `p`.
pub fn brute_force_optimum(p: &QcboProblem) -> Result<BruteForceResult> {
    if p.n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::TooManyQubits { n: p.n, cap: MAX_BRUTE_FORCE_VARS });
    }
    let mut best: Option<f64> = None;
    let mut optimal_indices = Vec::new();
    let mut feasible_count = 0;
    for idx in 0..1usize << p.n {
        let x = crate::index_bits(idx, p.n);
        if !p.is_feasible(&x) {
            continue;
        }
        feasible_count += 1;
        let v = p.objective.evaluate_unchecked(&x);
        match best {
            Some(b) if v > b + TIE_TOL => {}
            Some(b) if v >= b - TIE_TOL => optimal_indices.push(idx),
            _ => {
                best = Some(v);
                optimal_indices.clear();
                optimal_indices.push(idx);
            }
        }
    }
    Ok(BruteForceResult {
        optimum_value: best,
        optimum_bits: optimal_indices.first().map(|&i| crate::index_bits(i, p.n)),
        unique: optimal_indices.len() == 1,
        optimal_indices,
        feasible_count,
        infeasible_count: (1usize << p.n) - feasible_count,
    })
}

/// Kronecker-built matrix of `s` in the computational basis.
pub fn dense_matrix(s: &PauliSum) -> Result<DMatrix<Complex64>> {
    let n = s.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits { n, cap: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (p, c) in s.terms() {
        let y_phase = crate::pauli::Phase((p.y_count() % 4) as u8).to_complex();
        for col in 0..dim {
            let row = col ^ p.x_mask() as usize;
            let sign = if (col as u64 & p.z_mask()).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(row, col)] += c * y_phase * sign;
        }
    }
    Ok(m)
}

/// `(V - omega_max) / (omega_min - omega_max)`.
pub fn approximation_ratio(v: f64, omega_min: f64, omega_max: f64) -> Result<f64> {
    if omega_min == omega_max {
        return Err(Error::DegenerateSpectrum { value: omega_min });
    }
    if omega_min > omega_max || v < omega_min - RATIO_SLACK || v > omega_max + RATIO_SLACK {
        return Err(Error::OutOfRange { value: v, min: omega_min, max: omega_max });
    }
    Ok(((v - omega_max) / (omega_min - omega_max)).clamp(0.0, 1.0))
}

/// `|<y*|psi>|^2`.
pub fn success_probability(s: &StateVector, y_star: &[u8]) -> Result<f64> {
    if y_star.len() != s.n() {
        return Err(Error::Dimension { expected: s.n(), actual: y_star.len() });
    }
    Ok(s.probability(crate::basis_index(y_star)))
}

/// Summed probability over a set of optimal basis indices.
pub fn success_probability_of(s: &StateVector, optimal_indices: &[usize]) -> f64 {
    optimal_indices.iter().map(|&i| s.probability(i)).sum()
}

/// Smallest and largest diagonal entry.
pub fn spectrum_extremes(diag: &[f64]) -> (f64, f64) {
    diag.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumExtremes {
    pub min: f64,
    pub max: f64,
}

/// Ground truth for a problem and a chosen penalty shift.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub optimum: BruteForceResult,
    pub cost_spectrum: SpectrumExtremes,
    pub constraint_operator_spectrum: SpectrumExtremes,
    pub gammas: Vec<f64>,
}

impl OracleReport {
    pub fn new(p: &QcboProblem, op: &crate::operators::ConstraintOperator) -> Result<Self> {
        let (cmin, cmax) = spectrum_extremes(&op.h_c.to_diagonal_vector()?);
        let (lmin, lmax) = spectrum_extremes(&op.l.to_diagonal_vector()?);
        Ok(Self {
            n: p.n,
            optimum: brute_force_optimum(p)?,
            cost_spectrum: SpectrumExtremes { min: cmin, max: cmax },
            constraint_operator_spectrum: SpectrumExtremes { min: lmin, max: lmax },
            gammas: op.gammas.clone(),
        })
    }
}
