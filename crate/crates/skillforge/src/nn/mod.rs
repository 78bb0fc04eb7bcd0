//! Minimal dense numerical core: MLP forward/backward, Adam, gradient
//! verification and bit-exact parameter serialization. No external math
//! dependencies; everything is 64-bit floating point.

mod adam;
mod codec;
mod gradcheck;
mod mlp;

pub use adam::AdamState;
pub use codec::{decode_f64s, encode_f64s};
pub use gradcheck::gradient_check;
pub use mlp::{mlp_backward, mlp_forward, ForwardCache, Mat, MlpSpec, ParamStore};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch for {what}: want {want}, got {got}")]
    Shape {
        what: String,
        want: usize,
        got: usize,
    },
    #[error("non-finite gradient at flat index {index}; update not applied")]
    NonFiniteGradient { index: usize },
    #[error("parameter codec error: {0}")]
    Codec(String),
}
