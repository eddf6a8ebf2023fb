//! Cost, penalty and constraint operators.
//!
//! `L = H_c + sum_j gamma_j H_p^(j)` where `H_p^(j)` is the Ising form of the
//! squared equality constraint `V_j(y)^2`. Every operator here is diagonal, so
//! `[L, H_c] = 0` holds by construction and the spectrum of `L` is read off
//! its diagonal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{brute_force_optimum, BruteForceResult};
use crate::pauli::PauliSum;
use crate::problem::{BinaryPolynomial, QcboProblem};

/// Energies closer than this are treated as equal when checking degeneracy.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Brute-force diagnostics enumerate at most this many variables.
pub const MAX_VERIFY_QUBITS: usize = 20;

pub fn build_cost_hamiltonian(p: &QcboProblem) -> PauliSum {
    PauliSum::from_binary_polynomial(&p.objective)
}

/// Ising form of `v(y)^2`; `v` must be affine.
pub fn build_penalty_hamiltonian(v: &BinaryPolynomial) -> Result<PauliSum> {
    Ok(PauliSum::from_binary_polynomial(&v.square()?))
}

/// `2 * sum_r |c_r|` over the non-identity terms of `h_c`, an upper bound on the
/// spread between the largest and smallest cost eigenvalue.
pub fn gamma_upper_bound_choice(h_c: &PauliSum) -> f64 {
    2.0 * h_c.coeff_l1_norm()
}

#[derive(Debug, Clone)]
pub struct ConstraintOperator {
    pub l: PauliSum,
    pub h_c: PauliSum,
    pub penalties: Vec<PauliSum>,
    pub gammas: Vec<f64>,
    /// Ground-state check run at construction time.
    pub encoding: EncodingCheck,
}

impl ConstraintOperator {
    /// Assembles `L` for a canonical problem. Requires one strictly positive
    /// shift per equality constraint.
    pub fn build(p: &QcboProblem, gammas: &[f64]) -> Result<Self> {
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0)) {
            return Err(Error::InvalidParameter(format!("penalty shift must be positive, got {g}")));
        }
        Self::assemble(p, gammas)
    }

    /// Like [`ConstraintOperator::build`] but accepts zero shifts, for diagnosing
    /// what happens when a penalty is switched off.
    pub fn assemble(p: &QcboProblem, gammas: &[f64]) -> Result<Self> {
        if !p.is_canonical() {
            return Err(Error::InvalidParameter(
                "problem must be canonicalized (integer equality constraints only)".into(),
            ));
        }
        if gammas.len() != p.equalities.len() {
            return Err(Error::Dimension {
                expected: p.equalities.len(),
                actual: gammas.len(),
            });
        }
        if let Some(g) = gammas.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::InvalidParameter(format!("penalty shift must be non-negative, got {g}")));
        }
        let h_c = build_cost_hamiltonian(p);
        let penalties = p
            .equalities
            .iter()
            .map(build_penalty_hamiltonian)
            .collect::<Result<Vec<_>>>()?;
        let mut l = h_c.clone();
        for (h_p, &g) in penalties.iter().zip(gammas) {
            l = l.add(&h_p.scaled(g))?;
        }
        let mut op = Self {
            l,
            h_c,
            penalties,
            gammas: gammas.to_vec(),
            encoding: EncodingCheck::default(),
        };
        if p.n <= MAX_VERIFY_QUBITS {
            op.encoding = verify_ground_state_encoding(&op, p)?;
        }
        Ok(op)
    }

    /// The same shift for every constraint.
    pub fn with_shared_gamma(p: &QcboProblem, gamma: f64) -> Result<Self> {
        Self::assemble(p, &vec![gamma; p.equalities.len()])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EncodingCheck {
    /// Minimizer of `diag(L)` is unique, feasible, and the constrained optimum.
    pub ok: bool,
    #[serde(serialize_with = "serialize_bits")]
    pub argmin: Vec<u8>,
    pub min_value: f64,
    /// Second-smallest minus smallest diagonal entry of `L`.
    pub gap: f64,
    pub degenerate_minimum: bool,
    pub argmin_feasible: bool,
    /// Non-minimal energy levels of `L` shared by more than one basis state.
    pub excited_degeneracies: Vec<DegenerateLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateLevel {
    pub value: f64,
    pub states: Vec<String>,
}

fn serialize_bits<S: serde::Serializer>(bits: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::bit_string(bits))
}

/// Checks, by enumeration, that the ground state of `L` encodes the optimal
/// feasible bit string of `p`.
pub fn verify_ground_state_encoding(op: &ConstraintOperator, p: &QcboProblem) -> Result<EncodingCheck> {
    if p.n > MAX_VERIFY_QUBITS {
        return Err(Error::TooManyQubits { n: p.n, cap: MAX_VERIFY_QUBITS });
    }
    let diag = op.l.to_diagonal_vector()?;
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));

    let best = order[0];
    let min_value = diag[best];
    let degenerate_minimum = order.len() > 1 && (diag[order[1]] - min_value).abs() <= DEGENERACY_TOL;
    let gap = order
        .get(1)
        .map(|&i| diag[i] - min_value)
        .unwrap_or(0.0);
    let argmin = crate::index_bits(best, p.n);
    let argmin_feasible = p.is_feasible(&argmin);

    let oracle: BruteForceResult = brute_force_optimum(p)?;
    let matches_oracle = match (&oracle.optimum_bits, oracle.optimum_value) {
        (Some(bits), Some(value)) => *bits == argmin && (value - min_value).abs() <= DEGENERACY_TOL,
        _ => false,
    };

    let mut excited_degeneracies = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && (diag[order[end]] - diag[order[k]]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        if end - k > 1 && (diag[order[k]] - min_value).abs() > DEGENERACY_TOL {
            let mut states: Vec<usize> = order[k..end].to_vec();
            states.sort_unstable();
            excited_degeneracies.push(DegenerateLevel {
                value: diag[order[k]],
                states: states
                    .into_iter()
                    .map(|i| crate::bit_string(&crate::index_bits(i, p.n)))
                    .collect(),
            });
        }
        k = end;
    }

    Ok(EncodingCheck {
        ok: !degenerate_minimum && argmin_feasible && matches_oracle,
        argmin,
        min_value,
        gap,
        degenerate_minimum,
        argmin_feasible,
        excited_degeneracies,
    })
}

/// Human- and machine-readable summary of an operator build.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorReport {
    pub gammas: Vec<f64>,
    /// `2 * sum |c_r|` bound on the cost spread.
    pub energy_gap_bound: f64,
    /// `max diag(H_c) - min diag(H_c)`, when enumeration was possible.
    pub energy_gap_exact: Option<f64>,
    pub h_c: String,
    pub l: String,
    pub encoding: EncodingCheck,
    pub warnings: Vec<String>,
}

impl OperatorReport {
    pub fn new(op: &ConstraintOperator) -> Self {
        let energy_gap_exact = (op.h_c.n() <= MAX_VERIFY_QUBITS)
            .then(|| op.h_c.to_diagonal_vector().ok())
            .flatten()
            .map(|d| {
                let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                hi - lo
            });
        let mut warnings = Vec::new();
        let enc = &op.encoding;
        if enc.degenerate_minimum {
            warnings.push(format!("minimum {} of L is degenerate", enc.min_value));
        }
        if !enc.argmin_feasible {
            warnings.push(format!("ground state {} of L is infeasible", crate::bit_string(&enc.argmin)));
        }
        for level in &enc.excited_degeneracies {
            warnings.push(format!("eigenvalue {} of L is shared by {}", level.value, level.states.join(", ")));
        }
        Self {
            gammas: op.gammas.clone(),
            energy_gap_bound: gamma_upper_bound_choice(&op.h_c),
            energy_gap_exact,
            h_c: op.h_c.to_string(),
            l: op.l.to_string(),
            encoding: op.encoding.clone(),
            warnings,
        }
    }
}
