//! Bit-exact parameter serialization: f64 slices encode as base64 over
//! little-endian bytes. Used by checkpoint files.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use super::NnError;

pub fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f64s(encoded: &str, expected_len: usize) -> Result<Vec<f64>, NnError> {
    let bytes = STANDARD
        .decode(encoded)
        .map_err(|e| NnError::Codec(format!("invalid base64: {e}")))?;
    if bytes.len() != expected_len * 8 {
        return Err(NnError::Codec(format!(
            "expected {} bytes for {} f64 values, got {}",
            expected_len * 8,
            expected_len,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let values = vec![
            0.0,
            -0.0,
            1.5,
            f64::MIN_POSITIVE,
            f64::MAX,
            std::f64::consts::PI,
            -1e-300,
        ];
        let encoded = encode_f64s(&values);
        let decoded = decode_f64s(&encoded, values.len()).unwrap();
        for (a, b) in values.iter().zip(&decoded) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let encoded = encode_f64s(&[1.0, 2.0]);
        assert!(decode_f64s(&encoded, 3).is_err());
    }
}
