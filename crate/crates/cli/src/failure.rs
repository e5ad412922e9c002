use std::fmt;

use qcat::diagram::Defect;
use qcat::Error;

pub const OTHER: u8 = 1;
pub const PARSE: u8 = 2;
pub const INVALID: u8 = 3;
pub const SOUNDNESS: u8 = 4;
pub const UNKNOWN_RULE: u8 = 5;

#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Invalid(Vec<Defect>),
    Soundness(String),
    UnknownRule(String),
    Other(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Self::Parse(_) => PARSE,
            Self::Invalid(_) => INVALID,
            Self::Soundness(_) => SOUNDNESS,
            Self::UnknownRule(_) => UNKNOWN_RULE,
            Self::Other(_) => OTHER,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse(m) => write!(f, "parse error: {m}"),
            Self::Invalid(defects) => {
                let noun = if defects.len() == 1 { "defect" } else { "defects" };
                write!(f, "invalid diagram ({} {noun})", defects.len())?;
                for d in defects {
                    write!(f, "\n  {d}")?;
                }
                Ok(())
            }
            Self::Soundness(m) => write!(f, "{m}"),
            Self::UnknownRule(r) => write!(f, "unknown rule {r:?}"),
            Self::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Document(m) => Self::Parse(m),
            Error::InvalidDiagram(d) => Self::Invalid(d),
            Error::UnknownRule(r) => Self::UnknownRule(r),
            Error::Certification(m) => Self::Soundness(m),
            other => Self::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Other(e.to_string())
    }
}
