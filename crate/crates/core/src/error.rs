use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix Q is not symmetric: Q[{i}][{j}] = {a} but Q[{j}][{i}] = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("bit vector entry {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },

    #[error("constraint has non-integer coefficients; normalize it first")]
    NormalizationRequired,

    #[error("coefficient {value} is not a rational with denominator <= {max_denominator}")]
    NotRational { value: f64, max_denominator: u64 },

    #[error("inequality constraint can never be satisfied (minimum over all inputs is {min})")]
    InfeasibleConstraint { min: f64 },

    #[error("squaring a polynomial with quadratic terms would exceed degree 2")]
    DegreeOverflow,

    #[error("operator is not diagonal (term {term})")]
    NotDiagonal { term: String },

    #[error("operator is not Hermitian (term {term} has coefficient {re}{im:+}i)")]
    NotHermitian { term: String, re: f64, im: f64 },

    #[error("expectation has imaginary residue {residue}")]
    ImaginaryResidue { residue: f64 },

    #[error("identity Pauli string cannot be exponentiated as a rotation")]
    IdentityRotation,

    #[error("qubit {qubit} out of range 1..={n}")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("{n} qubits exceeds the cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum is degenerate (omega_min == omega_max == {value})")]
    DegenerateSpectrum { value: f64 },

    #[error("value {value} lies outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("non-finite value at layer {layer}: {what}")]
    NonFinite { layer: usize, what: String },

    #[error("state norm drifted to {norm} at layer {layer}")]
    NormDrift { layer: usize, norm: f64 },

    #[error("cannot parse Pauli sum: {0}")]
    Parse(String),

    #[error("state dump: {0}")]
    Dump(String),
}
