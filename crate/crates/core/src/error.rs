use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown config key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate config key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("config key `{key}`: cannot parse `{value}` as a number")]
    InvalidNumber { key: String, value: String },

    #[error("`{key}` = {value} violates {bound}")]
    OutOfRange {
        key: String,
        value: f64,
        bound: &'static str,
    },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("need at least {required} samples, got {got}")]
    SampleSize { required: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
