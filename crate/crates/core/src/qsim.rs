//! Exact simulation of a single EPR pair.
//!
//! A pair is a pure two-qubit state stored as four complex amplitudes over
//! `|00>, |01>, |10>, |11>`, the C photon being the high (first) qubit and the
//! M photon the low (second) one.

use std::fmt;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum QsimError {
    #[error("state is not normalized (squared norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("bell index {0} out of range 0..4")]
    BellIndex(u8),
    #[error("pauli code {0} out of range 0..4")]
    PauliCode(u8),
}

/// Which photon of a pair an operation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitSlot {
    C,
    M,
}

impl QubitSlot {
    pub const ALL: [QubitSlot; 2] = [QubitSlot::C, QubitSlot::M];

    pub fn other(self) -> Self {
        match self {
            QubitSlot::C => QubitSlot::M,
            QubitSlot::M => QubitSlot::C,
        }
    }
}

/// Single-qubit measurement basis: eigenbasis of sigma_z or sigma_x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];

    /// Eigenvector for outcome `bit`. Outcome 0 is the +1 eigenvalue.
    pub fn eigenvector<T: Scalar>(self, bit: u8) -> [Complex<T>; 2] {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        match (self, bit) {
            (Basis::Z, 0) => [one, zero],
            (Basis::Z, _) => [zero, one],
            (Basis::X, b) => {
                let s = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
                if b == 0 {
                    [s, s]
                } else {
                    [s, -s]
                }
            }
        }
    }
}

/// The four local encoding operations U0..U3 = I, sigma_z, sigma_x, i*sigma_y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliOp {
    U0,
    U1,
    U2,
    U3,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::U0, PauliOp::U1, PauliOp::U2, PauliOp::U3];

    /// 2-bit message code: U0=00, U1=01, U2=10, U3=11.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, QsimError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(QsimError::PauliCode(code))
    }

    /// Row-major 2x2 matrix.
    pub fn matrix<T: Scalar>(self) -> [[Complex<T>; 2]; 2] {
        let z = Complex::new(T::zero(), T::zero());
        let o = Complex::new(T::one(), T::zero());
        match self {
            PauliOp::U0 => [[o, z], [z, o]],
            PauliOp::U1 => [[o, z], [z, -o]],
            PauliOp::U2 => [[z, o], [o, z]],
            // |0><1| - |1><0|
            PauliOp::U3 => [[z, o], [-o, z]],
        }
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.code())
    }
}

/// Bell basis states with their canonical 2-bit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellState {
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PsiMinus,
        BellState::PsiPlus,
        BellState::PhiMinus,
        BellState::PhiPlus,
    ];

    /// Canonical index: Psi- = 00, Psi+ = 01, Phi- = 10, Phi+ = 11.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Result<Self, QsimError> {
        Self::ALL
            .get(index as usize)
            .copied()
            .ok_or(QsimError::BellIndex(index))
    }

    pub fn state<T: Scalar>(self) -> TwoQubitState<T> {
        let s = T::FRAC_1_SQRT_2();
        let z = T::zero();
        let re = match self {
            BellState::PsiMinus => [z, s, -s, z],
            BellState::PsiPlus => [z, s, s, z],
            BellState::PhiMinus => [s, z, z, -s],
            BellState::PhiPlus => [s, z, z, s],
        };
        TwoQubitState {
            amplitudes: re.map(|r| Complex::new(r, T::zero())),
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BellState::PsiMinus => "Psi-",
            BellState::PsiPlus => "Psi+",
            BellState::PhiMinus => "Phi-",
            BellState::PhiPlus => "Phi+",
        };
        f.write_str(name)
    }
}

#[inline]
fn amp_index(slot: QubitSlot, slot_bit: usize, other_bit: usize) -> usize {
    match slot {
        QubitSlot::C => 2 * slot_bit + other_bit,
        QubitSlot::M => 2 * other_bit + slot_bit,
    }
}

/// Pure state of one EPR pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState<T> {
    amplitudes: [Complex<T>; 4],
}

impl<T: Scalar> TwoQubitState<T> {
    pub fn from_amplitudes(amplitudes: [Complex<T>; 4]) -> Result<Self, QsimError> {
        let state = Self { amplitudes };
        let norm = state.norm_sqr();
        if (norm - T::one()).abs() > T::tolerance() {
            return Err(QsimError::NotNormalized {
                norm: norm.to_f64_lossy(),
            });
        }
        Ok(state)
    }

    /// `|c>_C |m>_M` for computational basis bits.
    pub fn basis_state(c: u8, m: u8) -> Self {
        let mut amplitudes = [Complex::new(T::zero(), T::zero()); 4];
        amplitudes[2 * (c & 1) as usize + (m & 1) as usize] = Complex::new(T::one(), T::zero());
        Self { amplitudes }
    }

    /// Tensor product of two normalized single-qubit states.
    pub fn product(c: [Complex<T>; 2], m: [Complex<T>; 2]) -> Result<Self, QsimError> {
        Self::from_amplitudes([c[0] * m[0], c[0] * m[1], c[1] * m[0], c[1] * m[1]])
    }

    pub fn amplitudes(&self) -> &[Complex<T>; 4] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::tolerance()
    }

    /// Multiplies every amplitude by `e^{i theta}`.
    pub fn with_global_phase(&self, theta: T) -> Self {
        let phase = Complex::from_polar(T::one(), theta);
        Self {
            amplitudes: self.amplitudes.map(|a| a * phase),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            })
    }

    /// True when the two states differ at most by a global phase.
    pub fn equals_up_to_phase(&self, other: &Self) -> bool {
        (self.inner(other).norm_sqr() - T::one()).abs() <= T::tolerance()
    }

    /// Applies `op` to the photon in `slot` (op x I or I x op).
    pub fn apply_pauli(&self, op: PauliOp, slot: QubitSlot) -> Self {
        let u = op.matrix::<T>();
        let mut out = [Complex::new(T::zero(), T::zero()); 4];
        for other in 0..2 {
            for row in 0..2 {
                out[amp_index(slot, row, other)] = (0..2)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, col| {
                        acc + u[row][col] * self.amplitudes[amp_index(slot, col, other)]
                    });
            }
        }
        Self { amplitudes: out }
    }

    /// Unnormalized state of the partner qubit after projecting `slot` onto
    /// outcome `bit` of `basis`.
    fn project(&self, slot: QubitSlot, basis: Basis, bit: u8) -> [Complex<T>; 2] {
        let e = basis.eigenvector::<T>(bit);
        let mut partner = [Complex::new(T::zero(), T::zero()); 2];
        for (other, amp) in partner.iter_mut().enumerate() {
            *amp = (0..2).fold(Complex::new(T::zero(), T::zero()), |acc, s| {
                acc + e[s].conj() * self.amplitudes[amp_index(slot, s, other)]
            });
        }
        partner
    }

    /// Born-rule probabilities of outcomes 0 and 1 for measuring `slot` in `basis`.
    pub fn outcome_probabilities(&self, slot: QubitSlot, basis: Basis) -> [T; 2] {
        [0u8, 1].map(|bit| {
            let p = self.project(slot, basis, bit);
            p[0].norm_sqr() + p[1].norm_sqr()
        })
    }

    /// State after measuring `slot` in `basis` with result `bit`, or `None` if
    /// that outcome has (numerically) zero probability.
    pub fn collapse(&self, slot: QubitSlot, basis: Basis, bit: u8) -> Option<Self> {
        let partner = self.project(slot, basis, bit);
        let p = partner[0].norm_sqr() + partner[1].norm_sqr();
        if p <= T::tolerance() {
            return None;
        }
        let scale = T::one() / p.sqrt();
        let e = basis.eigenvector::<T>(bit);
        let mut out = [Complex::new(T::zero(), T::zero()); 4];
        for s in 0..2 {
            for other in 0..2 {
                out[amp_index(slot, s, other)] = e[s] * partner[other] * scale;
            }
        }
        Some(Self { amplitudes: out })
    }

    /// Measures one photon, returning the outcome bit and the collapsed pair.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &self,
        slot: QubitSlot,
        basis: Basis,
        rng: &mut R,
    ) -> (u8, Self) {
        let [p0, p1] = self.outcome_probabilities(slot, basis);
        let bit = if p0 <= T::tolerance() {
            1
        } else if p1 <= T::tolerance() {
            0
        } else {
            let u: f64 = rng.random();
            u8::from(u >= (p0 / (p0 + p1)).to_f64_lossy())
        };
        let collapsed = self
            .collapse(slot, basis, bit)
            .expect("internal fault: sampled a zero-probability measurement branch");
        (bit, collapsed)
    }

    /// Measures `slot` in Z and replaces it with a fresh `|0>`. The returned
    /// bit is the outcome on the removed original.
    pub fn substitute_fresh<R: Rng + ?Sized>(&self, slot: QubitSlot, rng: &mut R) -> (u8, Self) {
        let (bit, collapsed) = self.measure_qubit(slot, Basis::Z, rng);
        let mut out = [Complex::new(T::zero(), T::zero()); 4];
        for other in 0..2 {
            out[amp_index(slot, 0, other)] =
                collapsed.amplitudes[amp_index(slot, bit as usize, other)];
        }
        (bit, Self { amplitudes: out })
    }

    /// `|<bell|self>|^2` for each Bell state, in canonical index order.
    pub fn bell_probabilities(&self) -> [T; 4] {
        BellState::ALL.map(|b| b.state::<T>().inner(self).norm_sqr())
    }

    /// Bell-basis measurement. Consumes the pair.
    pub fn bell_measure<R: Rng + ?Sized>(self, rng: &mut R) -> BellState {
        let probs = self.bell_probabilities().map(|p| {
            if p <= T::tolerance() {
                0.0
            } else {
                p.to_f64_lossy()
            }
        });
        let total: f64 = probs.iter().sum();
        let support = probs.iter().filter(|p| **p > 0.0).count();
        if support == 1 {
            let i = probs.iter().position(|p| *p > 0.0).unwrap_or(0);
            return BellState::ALL[i];
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = BellState::PsiMinus;
        for (bell, p) in BellState::ALL.iter().zip(probs) {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = *bell;
            if u < acc {
                return *bell;
            }
        }
        last
    }
}

/// The singlet `(|0>_C|1>_M - |1>_C|0>_M)/sqrt(2)`.
pub fn make_singlet<T: Scalar>() -> TwoQubitState<T> {
    BellState::PsiMinus.state()
}
