use std::fmt::Debug;
use std::hash::Hash;

use crate::pid::Pid;

/// Session identifier of a contract (1-based insertion position).
pub type Ssid = u64;

/// Coins a contract releases to the triggering party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Payout {
    Coins(u64),
    AllCoins,
}

impl Payout {
    pub const NONE: Payout = Payout::Coins(0);
}

/// Inputs to a circuit evaluation besides the witness and state.
#[derive(Clone, Copy, Debug)]
pub struct TriggerContext<'a> {
    pub pid: &'a Pid,
    pub ssid: Ssid,
    pub time: u64,
    pub deposit: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition<S> {
    pub state: S,
    pub payout: Payout,
}

/// A stateful contract circuit `φ(pid, w, t, st, d) → (st', e) | ⊥`.
pub trait Circuit: Clone + PartialEq + Eq + Hash + Debug {
    type State: Clone + PartialEq + Eq + Hash + Debug;
    type Witness: Clone + Debug;

    /// `None` is ⊥.
    fn evaluate(
        &self,
        ctx: &TriggerContext<'_>,
        witness: &Self::Witness,
        state: &Self::State,
    ) -> Option<Transition<Self::State>>;
}
