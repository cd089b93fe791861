//! Scenario scripts: ledger message lines plus harness directives, one per line.
//!
//! ```text
//! # comment
//! AddParty        alice:100
//! AddTransaction  alice  bob  20
//! Trigger         mallory  1  0  RecoverCoins  <hex>
//! CORRUPT mallory
//! MINT    alice 40
//! PAY     alice bob 1
//! TICK    100
//! ```

use std::fmt;

use thiserror::Error;

use crate::banknote::Witness;
use crate::ledger::{Ssid, TrId};
use crate::pid::Pid;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

impl ScenarioError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ScenarioError {
            line,
            message: message.into(),
        }
    }
}

/// Raw ledger messages. Parties are referenced by id; the runner resolves them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawMessage {
    AddParty(Pid),
    RetrieveParty {
        sender: String,
        pid: String,
    },
    AddTransaction {
        payer: String,
        payee: String,
        amount: u64,
    },
    RetrieveTransaction {
        sender: String,
        tr_id: TrId,
    },
    /// A single-member banknote-contract with the network circuit.
    AddSmartContract {
        creator: String,
        deposit: u64,
        serial: Vec<u8>,
    },
    InitializeWithCoins {
        pid: String,
        ssid: Ssid,
    },
    Trigger {
        pid: String,
        ssid: Ssid,
        deposit: u64,
        witness: Witness,
    },
    RetrieveContract {
        sender: String,
        ssid: Ssid,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Ledger(RawMessage),
    Tick(u64),
    Corrupt(String),
    Uncorrupt(String),
    Mint { party: String, value: u64 },
    Pay { payer: String, payee: String, ssid: Ssid },
    Redeem { party: String, ssid: Ssid },
    Lose { party: String, ssid: Ssid },
    Claim { party: String, ssid: Ssid },
    Settle { party: String, ssid: Ssid },
    Scan { party: String },
    Clone { party: String, ssid: Ssid },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub line: usize,
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub steps: Vec<Step>,
}

/// Party references accept either `id` or a full `id:coins` pid.
fn party_id(s: &str) -> String {
    match s.rsplit_once(':') {
        Some((id, _)) => id.to_owned(),
        None => s.to_owned(),
    }
}

fn num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T, ScenarioError> {
    s.parse()
        .map_err(|_| ScenarioError::new(line, format!("bad {what} `{s}`")))
}

impl Scenario {
    pub fn parse(name: &str, text: &str) -> Result<Self, ScenarioError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let f: Vec<&str> = content.split_whitespace().collect();
            let arity = |n: usize| {
                if f.len() == n + 1 {
                    Ok(())
                } else {
                    Err(ScenarioError::new(
                        line,
                        format!("{} takes {n} argument(s), got {}", f[0], f.len() - 1),
                    ))
                }
            };
            let command = match f[0] {
                "AddParty" => {
                    arity(1)?;
                    let pid = Pid::parse(f[1]).map_err(|e| ScenarioError::new(line, e.to_string()))?;
                    Command::Ledger(RawMessage::AddParty(pid))
                }
                "RetrieveParty" => {
                    arity(2)?;
                    Command::Ledger(RawMessage::RetrieveParty {
                        sender: party_id(f[1]),
                        pid: party_id(f[2]),
                    })
                }
                "AddTransaction" => {
                    arity(3)?;
                    Command::Ledger(RawMessage::AddTransaction {
                        payer: party_id(f[1]),
                        payee: party_id(f[2]),
                        amount: num(line, "amount", f[3])?,
                    })
                }
                "RetrieveTransaction" => {
                    arity(2)?;
                    Command::Ledger(RawMessage::RetrieveTransaction {
                        sender: party_id(f[1]),
                        tr_id: num(line, "trId", f[2])?,
                    })
                }
                "AddSmartContract" => {
                    arity(3)?;
                    Command::Ledger(RawMessage::AddSmartContract {
                        creator: party_id(f[1]),
                        deposit: num(line, "deposit", f[2])?,
                        serial: hex::decode(f[3]).map_err(|e| ScenarioError::new(line, format!("bad hex: {e}")))?,
                    })
                }
                "InitializeWithCoins" => {
                    arity(2)?;
                    Command::Ledger(RawMessage::InitializeWithCoins {
                        pid: party_id(f[1]),
                        ssid: num(line, "ssid", f[2])?,
                    })
                }
                "Trigger" => {
                    if f.len() < 5 {
                        return Err(ScenarioError::new(line, "Trigger needs <pid> <ssid> <d> <witness...>"));
                    }
                    Command::Ledger(RawMessage::Trigger {
                        pid: party_id(f[1]),
                        ssid: num(line, "ssid", f[2])?,
                        deposit: num(line, "deposit", f[3])?,
                        witness: Witness::parse(&f[4..]).map_err(|e| ScenarioError::new(line, e.to_string()))?,
                    })
                }
                "RetrieveContract" => {
                    arity(2)?;
                    Command::Ledger(RawMessage::RetrieveContract {
                        sender: party_id(f[1]),
                        ssid: num(line, "ssid", f[2])?,
                    })
                }
                "Tick" => {
                    arity(0)?;
                    Command::Tick(1)
                }
                "TICK" => match f.len() {
                    1 => Command::Tick(1),
                    2 => Command::Tick(num(line, "tick count", f[1])?),
                    _ => return Err(ScenarioError::new(line, "TICK takes at most 1 argument")),
                },
                "CORRUPT" => {
                    arity(1)?;
                    Command::Corrupt(party_id(f[1]))
                }
                "UNCORRUPT" => {
                    arity(1)?;
                    Command::Uncorrupt(party_id(f[1]))
                }
                "MINT" => {
                    arity(2)?;
                    Command::Mint {
                        party: party_id(f[1]),
                        value: num(line, "value", f[2])?,
                    }
                }
                "PAY" => {
                    arity(3)?;
                    Command::Pay {
                        payer: party_id(f[1]),
                        payee: party_id(f[2]),
                        ssid: num(line, "ssid", f[3])?,
                    }
                }
                "SCAN" => {
                    arity(1)?;
                    Command::Scan { party: party_id(f[1]) }
                }
                op @ ("REDEEM" | "LOSE" | "CLAIM" | "SETTLE" | "CLONE") => {
                    arity(2)?;
                    let party = party_id(f[1]);
                    let ssid = num(line, "ssid", f[2])?;
                    match op {
                        "REDEEM" => Command::Redeem { party, ssid },
                        "LOSE" => Command::Lose { party, ssid },
                        "CLAIM" => Command::Claim { party, ssid },
                        "SETTLE" => Command::Settle { party, ssid },
                        _ => Command::Clone { party, ssid },
                    }
                }
                other => return Err(ScenarioError::new(line, format!("unknown command `{other}`"))),
            };
            steps.push(Step { line, command });
        }
        Ok(Scenario {
            name: name.to_owned(),
            steps,
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Ledger(m) => write!(f, "{m:?}"),
            Command::Tick(k) => write!(f, "TICK {k}"),
            Command::Corrupt(p) => write!(f, "CORRUPT {p}"),
            Command::Uncorrupt(p) => write!(f, "UNCORRUPT {p}"),
            Command::Mint { party, value } => write!(f, "MINT {party} {value}"),
            Command::Pay { payer, payee, ssid } => write!(f, "PAY {payer} {payee} {ssid}"),
            Command::Redeem { party, ssid } => write!(f, "REDEEM {party} {ssid}"),
            Command::Lose { party, ssid } => write!(f, "LOSE {party} {ssid}"),
            Command::Claim { party, ssid } => write!(f, "CLAIM {party} {ssid}"),
            Command::Settle { party, ssid } => write!(f, "SETTLE {party} {ssid}"),
            Command::Scan { party } => write!(f, "SCAN {party}"),
            Command::Clone { party, ssid } => write!(f, "CLONE {party} {ssid}"),
        }
    }
}
