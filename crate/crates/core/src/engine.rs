//! The layer-by-layer feedback loop.
//!
//! Starting from `|+>^n`, each layer applies the cost unitary `C = exp(-i G dt)`
//! (with `G = H_c` for FALQON-C and `G = H_c + sum_j gamma_j H_p^(j)` for the
//! FALQON baseline), then the mixer `M(zeta) = prod_p exp(-i zeta_p H_m^(p) dt)`,
//! measures `<i[H_m^(p), L]>` on the new state and feeds it to the controller to
//! obtain the next layer's parameters.

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerSpec;
use crate::error::{Error, Result};
use crate::operators::ConstraintOperator;
use crate::oracle::{approximation_ratio, brute_force_optimum, spectrum_extremes, success_probability_of, MAX_BRUTE_FORCE_VARS};
use crate::pauli::{Pauli, PauliSum};
use crate::problem::QcboProblem;
use crate::statevector::{StateVector, DEFAULT_QUBIT_CAP, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Penalized Hamiltonian in the circuit and in the control law.
    #[serde(rename = "falqon")]
    Falqon,
    /// Cost Hamiltonian in the circuit, constraint operator in the control law.
    #[serde(rename = "falqon-c")]
    FalqonC,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "falqon" => Ok(Mode::Falqon),
            "falqon-c" | "falqon_c" => Ok(Mode::FalqonC),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Falqon => "falqon",
            Mode::FalqonC => "falqon-c",
        })
    }
}

/// What the controller receives as its input `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ControlArgument {
    /// `w = <i[H_m, L]>`.
    #[default]
    #[serde(rename = "raw")]
    Raw,
    /// `w = dt * <i[H_m, L]>`.
    #[serde(rename = "dt-scaled")]
    TimeScaled,
}

impl std::str::FromStr for ControlArgument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ControlArgument::Raw),
            "dt-scaled" => Ok(ControlArgument::TimeScaled),
            other => Err(Error::InvalidParameter(format!("unknown control argument {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub depth: usize,
    pub dt: f64,
    /// One value per controller, or a single value broadcast to all.
    pub zeta_init: Vec<f64>,
    pub controller: ControllerSpec,
    /// Per-controller gains `K_p`; defaults to the controller's `K` for every mixer.
    pub gains: Option<Vec<f64>>,
    /// One penalty shift per equality constraint.
    pub gammas: Vec<f64>,
    pub monitor_dt_bound: bool,
    pub control_argument: ControlArgument,
    pub qubit_cap: usize,
    /// Mixer Hamiltonians `H_m^(p)`; `None` means `X_p` on every qubit.
    #[serde(serialize_with = "serialize_mixers")]
    pub mixers: Option<Vec<PauliSum>>,
}

fn serialize_mixers<S: serde::Serializer>(m: &Option<Vec<PauliSum>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        None => s.serialize_str("x-per-qubit"),
        Some(list) => s.collect_seq(list.iter().map(|p| p.to_string())),
    }
}

impl RunConfig {
    pub fn new(mode: Mode, controller: ControllerSpec, gammas: Vec<f64>) -> Self {
        Self {
            mode,
            depth: 200,
            dt: 0.02,
            zeta_init: vec![0.0],
            controller,
            gains: None,
            gammas,
            monitor_dt_bound: false,
            control_argument: ControlArgument::Raw,
            qubit_cap: DEFAULT_QUBIT_CAP,
            mixers: None,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.zeta_init.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter("zeta_init must be finite".into()));
        }
        self.controller.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRecord {
    pub k: usize,
    /// Controls applied in layer `k` (record 0 carries the initial guess).
    pub zetas: Vec<f64>,
    pub lyapunov: f64,
    pub approx_ratio: f64,
    /// `NaN` when the problem was too large to enumerate its optimum.
    pub success_prob: f64,
    /// Largest time step admitted by the Lyapunov decrease condition for the
    /// transition out of this state, when monitoring is on.
    pub dt_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CircuitCost {
    pub single_z_terms: usize,
    pub zz_terms: usize,
    pub higher_weight_terms: usize,
}

/// Counts weight-1, weight-2 and heavier `Z` strings of a diagonal generator.
pub fn circuit_cost_report(generator: &PauliSum) -> Result<CircuitCost> {
    let mut cost = CircuitCost {
        single_z_terms: 0,
        zz_terms: 0,
        higher_weight_terms: 0,
    };
    for (p, _) in generator.terms() {
        if !p.is_diagonal() {
            return Err(Error::NotDiagonal { term: p.to_string() });
        }
        match p.weight() {
            0 => {}
            1 => cost.single_z_terms += 1,
            2 => cost.zz_terms += 1,
            _ => cost.higher_weight_terms += 1,
        }
    }
    Ok(cost)
}

/// Penalized cost Hamiltonian used by the FALQON baseline as both circuit
/// generator and control operator; termwise equal to the constraint operator.
pub fn build_falqon_baseline(problem: &QcboProblem, gammas: &[f64]) -> Result<PauliSum> {
    Ok(ConstraintOperator::assemble(problem, gammas)?.l)
}

/// Spectral norm: exact for diagonal operators, coefficient l1 norm otherwise.
pub fn operator_norm(op: &PauliSum) -> f64 {
    match op.to_diagonal_vector() {
        Ok(d) => d.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Err(_) => op.coeff_l1_norm_with_identity(),
    }
}

/// Right-hand side of the time-step condition
/// `|dt| < |<[H_m,L]>| / (2 (2 |H_m| |H_c| + |<[H_m,L]>|) (|H_c| + |H_m| |zeta|))`.
pub fn dt_bound(s: &StateVector, h_m: &PauliSum, h_c: &PauliSum, l: &PauliSum, zeta: f64) -> Result<f64> {
    let comm = s.commutator_expectation(h_m, l)?.abs();
    Ok(dt_bound_formula(comm, operator_norm(h_m), operator_norm(h_c), zeta))
}

fn dt_bound_formula(comm: f64, norm_m: f64, norm_c: f64, zeta: f64) -> f64 {
    if comm == 0.0 {
        return 0.0;
    }
    let denom = 2.0 * (2.0 * norm_m * norm_c + comm) * (norm_c + norm_m * zeta.abs());
    if denom == 0.0 {
        f64::INFINITY
    } else {
        comm / denom
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub config: RunConfig,
    pub n: usize,
    pub records: Vec<LayerRecord>,
    pub final_probabilities: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Bit strings of the optimal feasible solutions used for `success_prob`.
    pub optimal_states: Vec<String>,
    pub cost_terms: CircuitCost,
    pub generator_terms: CircuitCost,
    pub dt_bound_violations: usize,
    #[serde(skip)]
    pub final_state: Option<StateVector>,
}

impl RunTrace {
    pub fn last(&self) -> &LayerRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn controller_count(&self) -> usize {
        self.records[0].zetas.len()
    }
}

struct Prepared {
    generator: Vec<f64>,
    generator_op: PauliSum,
    control_diag: Vec<f64>,
    mixers: Vec<PauliSum>,
    mixer_total: PauliSum,
    gains: Vec<f64>,
    omega: (f64, f64),
    optimal: Vec<usize>,
    op: ConstraintOperator,
}

fn prepare(problem: &QcboProblem, config: &RunConfig) -> Result<Prepared> {
    config.validate()?;
    if problem.n > config.qubit_cap {
        return Err(Error::TooManyQubits { n: problem.n, cap: config.qubit_cap });
    }
    let op = if problem.equalities.is_empty() {
        ConstraintOperator::assemble(problem, &[])?
    } else {
        ConstraintOperator::build(problem, &config.gammas)?
    };
    let control_diag = op.l.to_diagonal_vector()?;
    let (generator_op, generator) = match config.mode {
        Mode::FalqonC => (op.h_c.clone(), op.h_c.to_diagonal_vector()?),
        Mode::Falqon => (op.l.clone(), control_diag.clone()),
    };
    let mixers = match &config.mixers {
        Some(m) => {
            if let Some(bad) = m.iter().find(|p| p.n() != problem.n) {
                return Err(Error::Dimension { expected: problem.n, actual: bad.n() });
            }
            m.clone()
        }
        None => (1..=problem.n)
            .map(|q| PauliSum::from_terms(problem.n, [(crate::pauli::PauliString::single(problem.n, q, Pauli::X)?, 1.0)]))
            .collect::<Result<_>>()?,
    };
    let mut mixer_total = PauliSum::zero(problem.n);
    for m in &mixers {
        m.check_hermitian()?;
        mixer_total = mixer_total.add(m)?;
    }
    let gains = match &config.gains {
        Some(g) if g.len() != mixers.len() => {
            return Err(Error::Dimension { expected: mixers.len(), actual: g.len() });
        }
        Some(g) => g.clone(),
        None => vec![config.controller.k; mixers.len()],
    };
    let optimal = if problem.n <= MAX_BRUTE_FORCE_VARS {
        brute_force_optimum(problem)?.optimal_indices
    } else {
        Vec::new()
    };
    Ok(Prepared {
        generator,
        generator_op,
        omega: spectrum_extremes(&control_diag),
        control_diag,
        mixers,
        mixer_total,
        gains,
        optimal,
        op,
    })
}

fn initial_controls(config: &RunConfig, count: usize) -> Result<Vec<f64>> {
    match config.zeta_init.len() {
        1 => Ok(vec![config.zeta_init[0]; count]),
        len if len == count => Ok(config.zeta_init.clone()),
        len => Err(Error::Dimension { expected: count, actual: len }),
    }
}

fn apply_mixers(state: &mut StateVector, mixers: &[PauliSum], zetas: &[f64], dt: f64) -> Result<()> {
    for (mixer, &zeta) in mixers.iter().zip(zetas) {
        for (p, c) in mixer.terms() {
            if p.is_identity() {
                continue;
            }
            if p.weight() == 1 && p.y_count() == 0 && p.z_mask() == 0 {
                let qubit = state.n() - p.x_mask().trailing_zeros() as usize;
                state.apply_x_rotation(qubit, zeta * c.re, dt)?;
            } else {
                state.apply_pauli_exponential(p, zeta * c.re * dt)?;
            }
        }
    }
    Ok(())
}

/// Commutator expectations `<i[H_m^(p), L]>` for every mixer on `state`.
pub fn measure_commutators(state: &StateVector, mixers: &[PauliSum], l_diag: &[f64]) -> Result<Vec<f64>> {
    mixers
        .iter()
        .map(|m| state.commutator_expectation_diagonal(m, l_diag))
        .collect()
}

/// Runs the feedback loop on a canonical problem.
pub fn run(problem: &QcboProblem, config: &RunConfig) -> Result<RunTrace> {
    if !problem.is_canonical() {
        return Err(Error::InvalidParameter("problem must be canonicalized before running".into()));
    }
    let prep = prepare(problem, config)?;
    let dt = config.dt;
    let (omega_min, omega_max) = prep.omega;
    let norm_m = operator_norm(&prep.mixer_total);
    let norm_c = operator_norm(&prep.generator_op);

    let mut state = StateVector::plus_with_cap(problem.n, config.qubit_cap)?;
    let mut zetas = initial_controls(config, prep.mixers.len())?;
    let mut records = Vec::with_capacity(config.depth + 1);
    let mut violations = 0usize;

    let metrics = |state: &StateVector, layer: usize| -> Result<(f64, f64, f64)> {
        let v = state.expectation_diagonal(&prep.control_diag)?;
        if !v.is_finite() {
            return Err(Error::NonFinite { layer, what: "Lyapunov value".into() });
        }
        let ra = if omega_min == omega_max { 1.0 } else { approximation_ratio(v, omega_min, omega_max)? };
        let ps = if prep.optimal.is_empty() {
            f64::NAN
        } else {
            success_probability_of(state, &prep.optimal)
        };
        Ok((v, ra, ps))
    };

    let mut bound = |w: &[f64], next: &[f64], layer: usize| -> Option<f64> {
        if !config.monitor_dt_bound {
            return None;
        }
        let zeta = next.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        let b = dt_bound_formula(w.iter().sum::<f64>().abs(), norm_m, norm_c, zeta);
        if dt >= b {
            if violations == 0 {
                log::warn!("dt = {dt} exceeds the Lyapunov decrease bound {b} at layer {layer}");
            }
            violations += 1;
        }
        Some(b)
    };

    let (v, ra, ps) = metrics(&state, 0)?;
    let dt_b = if config.monitor_dt_bound {
        let w = measure_commutators(&state, &prep.mixers, &prep.control_diag)?;
        bound(&w, &zetas, 0)
    } else {
        None
    };
    records.push(LayerRecord {
        k: 0,
        zetas: zetas.clone(),
        lyapunov: v,
        approx_ratio: ra,
        success_prob: ps,
        dt_bound: dt_b,
    });

    for layer in 1..=config.depth {
        state.apply_diagonal_exponential(&prep.generator, dt)?;
        apply_mixers(&mut state, &prep.mixers, &zetas, dt)?;
        let norm = state.norm_sqr();
        if !norm.is_finite() {
            return Err(Error::NonFinite { layer, what: "amplitude".into() });
        }
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NormDrift { layer, norm });
        }
        let (v, ra, ps) = metrics(&state, layer)?;
        let w = measure_commutators(&state, &prep.mixers, &prep.control_diag)?;
        if let Some(bad) = w.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite { layer, what: format!("commutator expectation {bad}") });
        }
        let arg: Vec<f64> = match config.control_argument {
            ControlArgument::Raw => w.clone(),
            ControlArgument::TimeScaled => w.iter().map(|x| dt * x).collect(),
        };
        let next = config.controller.next_controls(&arg, &prep.gains)?;
        let dt_b = bound(&w, &next, layer);
        records.push(LayerRecord {
            k: layer,
            zetas: std::mem::replace(&mut zetas, next),
            lyapunov: v,
            approx_ratio: ra,
            success_prob: ps,
            dt_bound: dt_b,
        });
    }

    Ok(RunTrace {
        config: config.clone(),
        n: problem.n,
        records,
        final_probabilities: state.probabilities(),
        omega_min,
        omega_max,
        optimal_states: prep
            .optimal
            .iter()
            .map(|&i| crate::bit_string(&crate::index_bits(i, problem.n)))
            .collect(),
        cost_terms: circuit_cost_report(&prep.op.h_c)?,
        generator_terms: circuit_cost_report(&prep.generator_op)?,
        dt_bound_violations: violations,
        final_state: Some(state),
    })
}
