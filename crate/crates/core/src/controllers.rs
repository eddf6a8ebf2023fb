//! Lyapunov feedback laws for the next layer's circuit parameters.
//!
//! Each law maps a measured value `w` (a commutator expectation, optionally
//! scaled by the time step) to `zeta = -K f(w)` with `w f(w) > 0` for `w != 0`
//! and `f(0) = 0`, so that `zeta * w <= 0` and the Lyapunov value does not rise
//! to first order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Standard,
    BangBang,
    FiniteTime1,
    FiniteTime2,
    FixedTime,
    LegacyFalqon,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 6] = [
        ControllerKind::Standard,
        ControllerKind::BangBang,
        ControllerKind::FiniteTime1,
        ControllerKind::FiniteTime2,
        ControllerKind::FixedTime,
        ControllerKind::LegacyFalqon,
    ];

    /// Name used on the command line and in file names.
    pub fn cli_name(self) -> &'static str {
        match self {
            ControllerKind::Standard => "standard",
            ControllerKind::BangBang => "bang-bang",
            ControllerKind::FiniteTime1 => "finite1",
            ControllerKind::FiniteTime2 => "finite2",
            ControllerKind::FixedTime => "fixed",
            ControllerKind::LegacyFalqon => "legacy",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => ControllerKind::Standard,
            "bang-bang" | "bang_bang" => ControllerKind::BangBang,
            "finite1" | "finite_time_1" => ControllerKind::FiniteTime1,
            "finite2" | "finite_time_2" => ControllerKind::FiniteTime2,
            "fixed" | "fixed_time" => ControllerKind::FixedTime,
            "legacy" | "legacy_falqon" => ControllerKind::LegacyFalqon,
            other => return Err(Error::InvalidParameter(format!("unknown controller {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    #[serde(rename = "K", default = "one")]
    pub k: f64,
    #[serde(rename = "K1", default = "one")]
    pub k1: f64,
    #[serde(rename = "K2", default = "one")]
    pub k2: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

fn one() -> f64 {
    1.0
}

fn default_c1() -> f64 {
    0.9
}

impl ControllerSpec {
    /// Unit gains and `c1 = 0.9`.
    pub fn new(kind: ControllerKind) -> Self {
        Self {
            kind,
            k: 1.0,
            k1: 1.0,
            k2: 1.0,
            c1: 0.9,
        }
    }

    pub fn with_gain(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    /// Second exponent of the fixed-time law, `1 / c1`.
    pub fn c2(&self) -> f64 {
        1.0 / self.c1
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("K", self.k)?;
        positive("K1", self.k1)?;
        positive("K2", self.k2)?;
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::InvalidParameter(format!("c1 must lie in (0, 1), got {}", self.c1)));
        }
        Ok(())
    }

    /// Next control value from the measured quantity `w`.
    pub fn next_control(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(Error::InvalidParameter(format!("controller input is not finite: {w}")));
        }
        Ok(self.law(w, self.k))
    }

    fn law(&self, w: f64, k: f64) -> f64 {
        let s = sign(w);
        let a = w.abs();
        match self.kind {
            ControllerKind::Standard => -k * w,
            ControllerKind::BangBang => -k * s,
            ControllerKind::FiniteTime1 => -k * w * a.powf(self.c1),
            ControllerKind::FiniteTime2 => -k * s * a.powf(self.c1),
            ControllerKind::FixedTime => -self.k1 * s * a.powf(self.c1) - self.k2 * s * a.powf(self.c2()),
            ControllerKind::LegacyFalqon => -w,
        }
    }

    /// One control per mixer term, each with its own gain `K_p` in place of `K`.
    pub fn next_controls(&self, w: &[f64], gains: &[f64]) -> Result<Vec<f64>> {
        if w.len() != gains.len() {
            return Err(Error::Dimension { expected: w.len(), actual: gains.len() });
        }
        if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {g}")));
        }
        w.iter()
            .zip(gains)
            .map(|(&w, &k)| {
                if !w.is_finite() {
                    return Err(Error::InvalidParameter(format!("controller input is not finite: {w}")));
                }
                Ok(self.law(w, k))
            })
            .collect()
    }
}

/// `sign(0) = 0`.
fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}
