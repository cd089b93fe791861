use super::{AddPartyOutcome, Circuit, ContractParams, ContractView, InitOutcome, Ssid, TrId, TransactionRecord};
use crate::pid::Pid;

/// Messages accepted by the ledger. The sender is supplied separately by the router.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LedgerMessage<C: Circuit> {
    AddParty,
    RetrieveParty {
        pid: Pid,
    },
    AddTransaction {
        payee: Pid,
        amount: u64,
    },
    RetrieveTransaction {
        tr_id: TrId,
    },
    AddSmartContract {
        params: ContractParams<C>,
    },
    InitializeWithCoins {
        ssid: Ssid,
        params: ContractParams<C>,
    },
    Trigger {
        ssid: Ssid,
        witness: C::Witness,
        deposit: u64,
    },
    RetrieveContract {
        ssid: Ssid,
    },
    Tick,
}

impl<C: Circuit> LedgerMessage<C> {
    pub fn name(&self) -> &'static str {
        match self {
            LedgerMessage::AddParty => "AddParty",
            LedgerMessage::RetrieveParty { .. } => "RetrieveParty",
            LedgerMessage::AddTransaction { .. } => "AddTransaction",
            LedgerMessage::RetrieveTransaction { .. } => "RetrieveTransaction",
            LedgerMessage::AddSmartContract { .. } => "AddSmartContract",
            LedgerMessage::InitializeWithCoins { .. } => "InitializeWithCoins",
            LedgerMessage::Trigger { .. } => "Trigger",
            LedgerMessage::RetrieveContract { .. } => "RetrieveContract",
            LedgerMessage::Tick => "Tick",
        }
    }

    /// Retrieve messages never alter ledger state.
    pub fn is_read(&self) -> bool {
        matches!(
            self,
            LedgerMessage::RetrieveParty { .. }
                | LedgerMessage::RetrieveTransaction { .. }
                | LedgerMessage::RetrieveContract { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LedgerResponse<C: Circuit> {
    AddParty(AddPartyOutcome),
    RetrieveParty(Pid, Option<u64>),
    AddTransaction(Option<TrId>),
    RetrieveTransaction(Option<TransactionRecord>),
    AddSmartContract(Option<Ssid>),
    InitializeWithCoins(Option<InitOutcome>),
    Trigger(Option<u64>),
    RetrieveContract(Option<ContractView<C>>),
    Tick(u64),
}

impl<C: Circuit> LedgerResponse<C> {
    /// Whether the message took effect (a write that was not ⊥ or ignored).
    pub fn accepted(&self) -> bool {
        match self {
            LedgerResponse::AddParty(o) => *o == AddPartyOutcome::Added,
            LedgerResponse::AddTransaction(r) => r.is_some(),
            LedgerResponse::AddSmartContract(r) => r.is_some(),
            LedgerResponse::InitializeWithCoins(r) => r.is_some(),
            LedgerResponse::Trigger(r) => r.is_some(),
            LedgerResponse::Tick(_) => true,
            LedgerResponse::RetrieveParty(..)
            | LedgerResponse::RetrieveTransaction(_)
            | LedgerResponse::RetrieveContract(_) => true,
        }
    }

    pub fn reward(&self) -> Option<u64> {
        match self {
            LedgerResponse::Trigger(r) => *r,
            _ => None,
        }
    }
}
