use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("register position {pos} out of range 1..={width}")]
    Index { pos: usize, width: usize },

    #[error("{levels}^{width} basis states do not fit a 128-bit index")]
    WindowTooLarge { levels: u32, width: usize },

    #[error("mixing matrix is singular over Z_{modulus}: determinant {det} is not a unit")]
    SingularMixing { det: i64, modulus: u32 },

    #[error("unknown code `{0}`")]
    UnknownCode(String),

    #[error("alphabet mismatch: first code has {first} levels, second has {second}")]
    AlphabetMismatch { first: u32, second: u32 },

    #[error("code `{0}` is not classical (an encoded ket is not a single basis state)")]
    NotClassical(String),

    #[error("code `{0}` cannot be re-instantiated at another logical length")]
    FixedLength(String),

    #[error("Knill-Laflamme condition fails (max deviation {max_deviation:e})")]
    KlFailed { max_deviation: f64 },

    #[error("no candidate correction projects onto the code space")]
    Uncorrectable,

    #[error("invalid configuration: {0}")]
    Config(String),
}
