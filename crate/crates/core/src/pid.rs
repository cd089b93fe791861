use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Party identifier of the form `id:d`, where `d` is the coin balance the
/// ledger credits on first registration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pid(String);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed party id {0:?}: expected `id:coins`")]
pub struct PidParseError(pub String);

impl Pid {
    pub fn parse(s: &str) -> Result<Self, PidParseError> {
        let (id, coins) = s.rsplit_once(':').ok_or_else(|| PidParseError(s.to_owned()))?;
        if id.is_empty() || id.contains(char::is_whitespace) || coins.parse::<u64>().is_err() {
            return Err(PidParseError(s.to_owned()));
        }
        Ok(Pid(s.to_owned()))
    }

    /// Convenience constructor; panics on malformed input.
    pub fn new(id: &str, coins: u64) -> Self {
        Pid::parse(&format!("{id}:{coins}")).expect("well-formed pid")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn id(&self) -> &str {
        self.0.rsplit_once(':').map(|(id, _)| id).unwrap_or(&self.0)
    }

    pub fn initial_coins(&self) -> u64 {
        self.0.rsplit_once(':').and_then(|(_, d)| d.parse().ok()).unwrap_or(0)
    }
}

impl FromStr for Pid {
    type Err = PidParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pid::parse(s)
    }
}

impl fmt::Display for Pid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
