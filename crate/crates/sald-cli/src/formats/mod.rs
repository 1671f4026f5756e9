//! File formats: geometry input, binary samples and checkpoints, and
//! SVG/CSV output.

pub mod checkpoint;
pub mod geom;
pub mod samples;
pub mod svg;

use std::fmt;
use std::io;

#[derive(Debug)]
pub enum FormatError {
    Io(io::Error),
    Parse {
        path: String,
        line: usize,
        what: String,
    },
    BadMagic {
        path: String,
        expected: &'static str,
    },
    BadHeader {
        path: String,
        what: String,
    },
    UnsupportedExtension {
        path: String,
    },
    Geometry(sald::geometry::GeometryError),
    Net(sald::net::NetError),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "io error: {e}"),
            Self::Parse { path, line, what } => {
                write!(f, "{path}:{line}: {what}")
            }
            Self::BadMagic { path, expected } => {
                write!(f, "{path}: not a {expected} file")
            }
            Self::BadHeader { path, what } => write!(f, "{path}: {what}"),
            Self::UnsupportedExtension { path } => {
                write!(f, "{path}: unsupported file extension")
            }
            Self::Geometry(e) => write!(f, "{e}"),
            Self::Net(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<sald::geometry::GeometryError> for FormatError {
    fn from(e: sald::geometry::GeometryError) -> Self {
        Self::Geometry(e)
    }
}

impl From<sald::net::NetError> for FormatError {
    fn from(e: sald::net::NetError) -> Self {
        Self::Net(e)
    }
}
