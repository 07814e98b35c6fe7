use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("degenerate box: width and height must be positive")]
    DegenerateBox,
    #[error("{what} = {value} is out of range")]
    Range { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
}

impl Error {
    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        Error::Shape {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }
}
