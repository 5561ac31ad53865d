//! Classical side of the dense-coding table: bit pairs to Pauli operations,
//! the composed Bell outcome, and decoding in both directions.
//!
//! The canonical Bell index makes the whole table a XOR law:
//! `index(expected_bell(a, b)) == code(a) ^ code(b)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::qsim::{BellState, PauliOp};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("bit pair value {0} out of range 0..4")]
    BitPairRange(u8),
    #[error("invalid bit character {0:?}")]
    BadBit(char),
    #[error("pad must be 0 or 1 and fit the bit string, got {0}")]
    BadPad(usize),
}

/// Two message bits, high bit first ("10" == 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BitPair(u8);

impl BitPair {
    pub const ALL: [BitPair; 4] = [BitPair(0), BitPair(1), BitPair(2), BitPair(3)];

    pub fn new(value: u8) -> Result<Self, CodecError> {
        if value < 4 {
            Ok(Self(value))
        } else {
            Err(CodecError::BitPairRange(value))
        }
    }

    pub fn from_bits(high: bool, low: bool) -> Self {
        Self(u8::from(high) << 1 | u8::from(low))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn high(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn low(self) -> bool {
        self.0 & 1 != 0
    }
}

impl TryFrom<u8> for BitPair {
    type Error = CodecError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<BitPair> for u8 {
    fn from(b: BitPair) -> u8 {
        b.0
    }
}

impl fmt::Display for BitPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

pub fn op_for_bits(bits: BitPair) -> PauliOp {
    PauliOp::ALL[bits.0 as usize]
}

pub fn bits_for_op(op: PauliOp) -> BitPair {
    BitPair(op.code())
}

/// Bell outcome when Alice applies `alice_op` to the M photon of a singlet and
/// Bob then applies `bob_op` to either photon.
pub fn expected_bell(alice_op: PauliOp, bob_op: PauliOp) -> BellState {
    BellState::ALL[(alice_op.code() ^ bob_op.code()) as usize]
}

/// Alice's bits, as recovered by Bob from his own op and the Bell result.
pub fn decode_alice(bob_op: PauliOp, result: BellState) -> BitPair {
    BitPair(result.index() ^ bob_op.code())
}

/// Bob's bits, as recovered by Alice from her own op and Bob's announcement.
pub fn decode_bob(alice_op: PauliOp, result: BellState) -> BitPair {
    BitPair(result.index() ^ alice_op.code())
}

/// An even-length bit string plus the number of zero bits appended to make it
/// even, so the original length is recoverable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MessageBits {
    bits: Vec<bool>,
    pad: usize,
}

impl MessageBits {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Zero-pads odd-length input to a whole number of pairs.
    pub fn from_bits(mut bits: Vec<bool>) -> Self {
        let pad = bits.len() % 2;
        if pad == 1 {
            bits.push(false);
        }
        Self { bits, pad }
    }

    /// Rebuilds a message from decoded pairs; `pad` trailing bits are padding.
    pub fn from_pairs(pairs: &[BitPair], pad: usize) -> Result<Self, CodecError> {
        if pad > 1 || (pad == 1 && pairs.is_empty()) {
            return Err(CodecError::BadPad(pad));
        }
        let bits = pairs.iter().flat_map(|p| [p.high(), p.low()]).collect();
        Ok(Self { bits, pad })
    }

    /// Padded bit string (always even length).
    pub fn padded_bits(&self) -> &[bool] {
        &self.bits
    }

    /// The bits without padding.
    pub fn bits(&self) -> &[bool] {
        &self.bits[..self.bits.len() - self.pad]
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    pub fn bit_len(&self) -> usize {
        self.bits.len() - self.pad
    }

    pub fn pair_count(&self) -> usize {
        self.bits.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = BitPair> + '_ {
        self.bits
            .chunks_exact(2)
            .map(|c| BitPair::from_bits(c[0], c[1]))
    }

    /// Keeps only the first `bit_len` unpadded bits.
    pub fn truncated(&self, bit_len: usize) -> Self {
        Self::from_bits(self.bits().iter().copied().take(bit_len).collect())
    }
}

impl fmt::Display for MessageBits {
    /// Unpadded bits as a '0'/'1' string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for MessageBits {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodecError::BadBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bits(bits))
    }
}

impl Serialize for MessageBits {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MessageBits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Expands bytes most-significant bit first.
pub fn pack_bits(raw: &[u8]) -> MessageBits {
    let bits = raw
        .iter()
        .flat_map(|byte| (0..8).rev().map(move |i| byte >> i & 1 == 1))
        .collect();
    MessageBits::from_bits(bits)
}

/// Inverse of [`pack_bits`]. A trailing partial byte is zero-filled on the right.
pub fn unpack_bits(message: &MessageBits) -> Vec<u8> {
    message
        .bits()
        .chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, b)| acc | (u8::from(*b) << (7 - i)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TABLE_1: [[BellState; 4]; 4] = {
        use BellState::*;
        [
            [PsiMinus, PsiPlus, PhiMinus, PhiPlus],
            [PsiPlus, PsiMinus, PhiPlus, PhiMinus],
            [PhiMinus, PhiPlus, PsiMinus, PsiPlus],
            [PhiPlus, PhiMinus, PsiPlus, PsiMinus],
        ]
    };

    #[test]
    fn correspondence_list() {
        assert_eq!(op_for_bits(BitPair::new(0).unwrap()), PauliOp::U0);
        assert_eq!(op_for_bits(BitPair::new(0b01).unwrap()), PauliOp::U1);
        assert_eq!(op_for_bits(BitPair::new(0b10).unwrap()), PauliOp::U2);
        assert_eq!(op_for_bits(BitPair::new(0b11).unwrap()), PauliOp::U3);
        for b in BitPair::ALL {
            assert_eq!(bits_for_op(op_for_bits(b)), b);
        }
        assert_eq!(BitPair::new(4), Err(CodecError::BitPairRange(4)));
    }

    #[test]
    fn expected_bell_is_table_1() {
        assert_eq!(expected_bell(PauliOp::U2, PauliOp::U1), BellState::PhiPlus);
        assert_eq!(expected_bell(PauliOp::U0, PauliOp::U0), BellState::PsiMinus);
        for a in PauliOp::ALL {
            for b in PauliOp::ALL {
                assert_eq!(
                    expected_bell(a, b),
                    TABLE_1[a.code() as usize][b.code() as usize]
                );
            }
        }
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_alice(PauliOp::U1, BellState::PhiPlus).value(), 0b10);
        assert_eq!(decode_alice(PauliOp::U0, BellState::PsiMinus).value(), 0);
        assert_eq!(decode_bob(PauliOp::U2, BellState::PhiPlus).value(), 0b01);
        assert_eq!(decode_bob(PauliOp::U0, BellState::PsiMinus).value(), 0);
    }

    #[test]
    fn decode_inverts_exhaustively() {
        for a in BitPair::ALL {
            for b in BitPair::ALL {
                let r = expected_bell(op_for_bits(a), op_for_bits(b));
                assert_eq!(decode_alice(op_for_bits(b), r), a);
                assert_eq!(decode_bob(op_for_bits(a), r), b);
            }
        }
    }

    #[test]
    fn pack_examples() {
        assert!(pack_bits(&[]).is_empty());
        let m = pack_bits(&[0xA5]);
        assert_eq!(m.to_string(), "10100101");
        assert_eq!(m.pair_count(), 4);
        assert_eq!(m.pad(), 0);
    }

    #[test]
    fn odd_length_is_padded() {
        let m: MessageBits = "101".parse().unwrap();
        assert_eq!(m.padded_bits(), &[true, false, true, false]);
        assert_eq!(m.bit_len(), 3);
        assert_eq!(m.to_string(), "101");
        let pairs: Vec<_> = m.pairs().collect();
        assert_eq!(MessageBits::from_pairs(&pairs, m.pad()).unwrap(), m);
        assert!("10x".parse::<MessageBits>().is_err());
        assert!(MessageBits::from_pairs(&[], 1).is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trip(raw in proptest::collection::vec(any::<u8>(), 0..64)) {
            prop_assert_eq!(unpack_bits(&pack_bits(&raw)), raw);
        }

        #[test]
        fn bit_string_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..65)) {
            let m = MessageBits::from_bits(bits.clone());
            prop_assert_eq!(m.bits(), &bits[..]);
            prop_assert_eq!(m.padded_bits().len() % 2, 0);
            let parsed: MessageBits = m.to_string().parse().unwrap();
            prop_assert_eq!(parsed, m);
        }
    }
}
