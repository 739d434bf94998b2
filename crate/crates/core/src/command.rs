use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One of the four swarm commands. The discriminant is the event code
/// written into recordings (1..=4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Hovering = 1,
    Splitting = 2,
    Dispersing = 3,
    Aggregating = 4,
}

impl Command {
    pub const ALL: [Command; 4] = [
        Command::Hovering,
        Command::Splitting,
        Command::Dispersing,
        Command::Aggregating,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            1 => Ok(Command::Hovering),
            2 => Ok(Command::Splitting),
            3 => Ok(Command::Dispersing),
            4 => Ok(Command::Aggregating),
            other => Err(Error::InvalidEventCode(other)),
        }
    }

    /// Zero-based position, handy for indexing 4-element tables.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Hovering => "hovering",
            Command::Splitting => "splitting",
            Command::Dispersing => "dispersing",
            Command::Aggregating => "aggregating",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name(), self.code())
    }
}

impl Serialize for Command {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Command {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = i64::deserialize(d)?;
        Command::from_code(code).map_err(serde::de::Error::custom)
    }
}
