use serde::{Deserialize, Serialize};

use super::ControlParams;
use crate::exact::Rational;
use crate::scale::Scale;

pub const CERTIFICATE_FORMAT: &str = "flipflop-certificate/1";

/// Exact sums of `φ` over the non-exempt `T_level`-windows that lie inside
/// the prefix, in window order. Window averages are `sum / (r · T_level)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelWindows {
    pub level: usize,
    pub period: u64,
    pub alpha: Rational,
    pub sums: Vec<i64>,
}

/// Achieved density orders of the complete tail components of one size, in
/// order of position. The order of a component is the largest `ℓ` such that
/// every word of length `ℓ` occurs inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentLevel {
    pub level: usize,
    pub size: u64,
    pub required_order: u32,
    pub orders: Vec<u32>,
}

/// Class and driving bit at every `j ∈ J` inside the prefix, in increasing
/// `j`, packed least significant bit first and hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItineraryRecord {
    pub count: u64,
    pub classes: String,
    pub driving: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub scale: Scale,
    pub params: ControlParams,
    /// `r`: symbols per step.
    pub step: usize,
    pub alphabet: u8,
    /// In steps.
    pub prefix_length: u64,
    pub seed: Option<u64>,
    pub windows: Vec<LevelWindows>,
    pub components: Vec<ComponentLevel>,
    pub itinerary: ItineraryRecord,
}

pub(crate) fn pack_bits(bits: &[bool]) -> String {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    hex::encode(bytes)
}

/// Inverse of the packing used in [`ItineraryRecord`].
pub fn unpack_bits(hex_bits: &str, count: usize) -> Result<Vec<bool>, String> {
    let bytes = hex::decode(hex_bits).map_err(|e| e.to_string())?;
    if bytes.len() != count.div_ceil(8) {
        return Err(format!("{} bytes cannot hold exactly {count} bits", bytes.len()));
    }
    Ok((0..count).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect())
}
