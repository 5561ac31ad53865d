//! Simulator for bidirectional secure direct communication over a block of
//! EPR pairs.
//!
//! Alice prepares singlets, sends the C halves to Bob and checks them for
//! eavesdropping, encodes two bits per pair with a Pauli op on the M halves
//! and sends those too. Bob adds his own Pauli op to either photon, makes a
//! Bell measurement and announces the result; each side recovers the other's
//! bits from its own op and the announcement.
//!
//! The quantum layer is generic over the real scalar type; [`State`] and
//! [`StateF32`] are the concrete instantiations.

pub mod adversary;
pub mod codec;
pub mod qsim;
pub mod rng;
pub mod scalar;
pub mod session;
pub mod stats;

pub use adversary::{Attack, EveRecord, EveStrategy, Leg, LegSelection};
pub use codec::{BitPair, MessageBits};
pub use qsim::{make_singlet, Basis, BellState, PauliOp, QubitSlot, TwoQubitState};
pub use rng::RandomStream;
pub use scalar::Scalar;
pub use session::{run_protocol, ProtocolConfig, ProtocolError, Transcript, Verdict};

/// Double-precision pair state.
pub type State = TwoQubitState<f64>;
/// Single-precision pair state.
pub type StateF32 = TwoQubitState<f32>;
/// Double-precision protocol session.
pub type Session = session::Session<f64>;
