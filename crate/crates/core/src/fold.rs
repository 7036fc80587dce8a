//! m-fold symmetry and the kernel constants attached to it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fold count m ≥ 3 together with the derived kernel constants.
///
/// `C_m = 3π / (2(m²−4))` is the amplitude of the symmetrized kernel
/// `C_m |sin(mθ/2)| + C̃_m` and `C̃_m = 1/4 − 2C_m/π = (m²−16)/(4(m²−4))`
/// is its offset. The offset is negative for m=3, exactly zero for m=4 and
/// positive from m=5 on; features relying on a nonnegative kernel are gated
/// on `kernel_nonnegative`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SymmetryFold {
    m: u32,
    c_m: f64,
    c_tilde: f64,
}

impl SymmetryFold {
    pub fn new(m: u32) -> Result<Self> {
        if m < 3 {
            return Err(Error::FoldTooSmall { m });
        }
        let msq = (m as f64) * (m as f64);
        let c_m = 3.0 * PI / (2.0 * (msq - 4.0));
        // Rational form keeps C̃_4 exactly zero in f64.
        let c_tilde = (msq - 16.0) / (4.0 * (msq - 4.0));
        Ok(Self { m, c_m, c_tilde })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn m_f64(&self) -> f64 {
        self.m as f64
    }

    /// Kernel amplitude C_m.
    pub fn c_m(&self) -> f64 {
        self.c_m
    }

    /// Kernel offset C̃_m.
    pub fn c_tilde(&self) -> f64 {
        self.c_tilde
    }

    /// Length of the fundamental domain, 2π/m.
    pub fn domain_len(&self) -> f64 {
        2.0 * PI / self.m_f64()
    }

    /// Left end of the fundamental domain, −π/m.
    pub fn domain_start(&self) -> f64 {
        -PI / self.m_f64()
    }

    /// True for m ≥ 4, where the symmetrized kernel is nonnegative and the
    /// forcing c inherits a sign.
    pub fn kernel_nonnegative(&self) -> bool {
        self.m >= 4
    }
}

impl TryFrom<u32> for SymmetryFold {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        SymmetryFold::new(m)
    }
}

impl From<SymmetryFold> for u32 {
    fn from(f: SymmetryFold) -> u32 {
        f.m
    }
}
