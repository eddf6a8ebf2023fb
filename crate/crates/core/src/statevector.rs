//! Dense statevector simulation.
//!
//! Amplitudes are indexed by basis index with qubit 1 as the most significant
//! bit, matching [`crate::pauli`]. Gates mutate the state in place.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, Phase};

/// Default cap on the register size of a dense state.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Tolerance on the imaginary part of an expectation of a Hermitian operator.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

/// Tolerance on `|1 - <psi|psi>|`.
pub const NORM_TOL: f64 = 1e-9;

pub const DUMP_MAGIC: &[u8; 8] = b"FQCOSTAT";

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|+>^n` under the default qubit cap.
    pub fn plus(n: usize) -> Result<Self> {
        Self::plus_with_cap(n, DEFAULT_QUBIT_CAP)
    }

    pub fn plus_with_cap(n: usize, cap: usize) -> Result<Self> {
        check_size(n, cap)?;
        let dim = 1usize << n;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Self { n, amps: vec![a; dim] })
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_size(n, DEFAULT_QUBIT_CAP)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Dimension { expected: dim, actual: index });
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; they must have length `2^n` and unit norm.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::Dimension { expected: 1 << n, actual: amps.len() });
        }
        let s = Self { n, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("state norm is {norm}, expected 1")));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.amps.len() {
            return Err(Error::Dimension { expected: self.amps.len(), actual: len });
        }
        Ok(())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::Dimension { expected: self.n, actual: n });
        }
        Ok(())
    }

    /// `amps[i] <- exp(-i d[i] dt) amps[i]`.
    pub fn apply_diagonal_exponential(&mut self, d: &[f64], dt: f64) -> Result<()> {
        self.check_len(d.len())?;
        for (a, &e) in self.amps.iter_mut().zip(d) {
            let (s, c) = (e * dt).sin_cos();
            *a *= Complex64::new(c, -s);
        }
        Ok(())
    }

    /// `exp(-i zeta dt X_qubit)` with `qubit` 1-based.
    pub fn apply_x_rotation(&mut self, qubit: usize, zeta: f64, dt: f64) -> Result<()> {
        if qubit == 0 || qubit > self.n {
            return Err(Error::QubitOutOfRange { qubit, n: self.n });
        }
        let (s, c) = (zeta * dt).sin_cos();
        let mis = Complex64::new(0.0, -s);
        let bit = 1usize << (self.n - qubit);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = a0 * c + a1 * mis;
                self.amps[j] = a0 * mis + a1 * c;
            }
        }
        Ok(())
    }

    /// `exp(-i angle P) = cos(angle) I - i sin(angle) P` for a non-identity string.
    pub fn apply_pauli_exponential(&mut self, p: &PauliString, angle: f64) -> Result<()> {
        self.check_n(p.n())?;
        if p.is_identity() {
            return Err(Error::IdentityRotation);
        }
        let mut moved = vec![Complex64::default(); self.amps.len()];
        apply_string_into(p, Complex64::new(1.0, 0.0), &self.amps, &mut moved);
        let (s, c) = angle.sin_cos();
        let mis = Complex64::new(0.0, -s);
        for (a, m) in self.amps.iter_mut().zip(moved) {
            *a = *a * c + m * mis;
        }
        Ok(())
    }

    /// `A |psi>` without building a matrix.
    pub fn apply_sum(&self, a: &PauliSum) -> Result<Vec<Complex64>> {
        self.check_n(a.n())?;
        let mut out = vec![Complex64::default(); self.amps.len()];
        for (p, c) in a.terms() {
            apply_string_into(p, *c, &self.amps, &mut out);
        }
        Ok(out)
    }

    fn inner(&self, other: &[Complex64]) -> Complex64 {
        self.amps.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }

    /// `<psi|A|psi>` for Hermitian `A`.
    pub fn expectation(&self, a: &PauliSum) -> Result<f64> {
        a.check_hermitian()?;
        let v = self.inner(&self.apply_sum(a)?);
        if v.im.abs() > IMAGINARY_RESIDUE_TOL {
            return Err(Error::ImaginaryResidue { residue: v.im });
        }
        Ok(v.re)
    }

    /// `<psi|D|psi>` for a diagonal operator given by its diagonal.
    pub fn expectation_diagonal(&self, d: &[f64]) -> Result<f64> {
        self.check_len(d.len())?;
        Ok(self.amps.iter().zip(d).map(|(a, e)| a.norm_sqr() * e).sum())
    }

    /// `<psi| i[H, L] |psi> = -2 Im <psi| H (L psi)>` for Hermitian `H`, `L`.
    pub fn commutator_expectation(&self, h: &PauliSum, l: &PauliSum) -> Result<f64> {
        h.check_hermitian()?;
        l.check_hermitian()?;
        self.check_n(l.n())?;
        let l_psi = self.apply_sum(l)?;
        Ok(-2.0 * self.inner(&apply_sum_to(h, &l_psi)?).im)
    }

    /// [`StateVector::commutator_expectation`] with `L` given by its diagonal.
    pub fn commutator_expectation_diagonal(&self, h: &PauliSum, l_diag: &[f64]) -> Result<f64> {
        h.check_hermitian()?;
        self.check_n(h.n())?;
        self.check_len(l_diag.len())?;
        let l_psi: Vec<Complex64> = self.amps.iter().zip(l_diag).map(|(a, e)| a * e).collect();
        Ok(-2.0 * self.inner(&apply_sum_to(h, &l_psi)?).im)
    }

    /// Binary dump: `"FQCOSTAT"`, `u32` n, `u32` reserved, then `2^n` pairs of
    /// little-endian `f64` (re, im).
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Dump(e.to_string());
        let mut header = [0u8; 16];
        r.read_exact(&mut header).map_err(io)?;
        if &header[..8] != DUMP_MAGIC {
            return Err(Error::Dump("bad magic".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        check_size(n, DEFAULT_QUBIT_CAP)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..1usize << n {
            r.read_exact(&mut buf).map_err(io)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amps.push(Complex64::new(re, im));
        }
        Ok(Self { n, amps })
    }
}

fn check_size(n: usize, cap: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("register needs at least one qubit".into()));
    }
    if n > cap {
        return Err(Error::TooManyQubits { n, cap });
    }
    Ok(())
}

/// `out += c P input`, using `P|b> = i^{#Y} (-1)^{|b & z|} |b ^ x>`.
fn apply_string_into(p: &PauliString, c: Complex64, input: &[Complex64], out: &mut [Complex64]) {
    let x = p.x_mask() as usize;
    let z = p.z_mask() as usize;
    let scaled = c * Phase((p.y_count() % 4) as u8).to_complex();
    for (b, a) in input.iter().enumerate() {
        let v = if (b & z).count_ones().is_multiple_of(2) { scaled } else { -scaled };
        out[b ^ x] += v * a;
    }
}

fn apply_sum_to(a: &PauliSum, psi: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::default(); psi.len()];
    if psi.len() != 1usize << a.n() {
        return Err(Error::Dimension { expected: 1 << a.n(), actual: psi.len() });
    }
    for (p, c) in a.terms() {
        apply_string_into(p, *c, psi, &mut out);
    }
    Ok(out)
}
