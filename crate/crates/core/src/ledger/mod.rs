//! Ideal ledger: registered parties with coin balances, an append-only
//! transaction list, stateful contracts driven by a [`Circuit`], and a
//! logical clock. All mutation happens through one ordered message stream.

mod circuit;
mod message;

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hash;

pub use circuit::{Circuit, Payout, Ssid, Transition, TriggerContext};
pub use message::{LedgerMessage, LedgerResponse};

use crate::hashing::{Digest32, DigestHasher};
use crate::pid::Pid;

pub type TrId = u64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartyRecord {
    pub pid: Pid,
    pub id: String,
    pub coins: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransactionRecord {
    pub tr_id: TrId,
    pub payer: Pid,
    pub payee: Pid,
    pub amount: u64,
    pub time: u64,
}

/// `(I, D, φ, st_0)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractParams<C: Circuit> {
    pub members: BTreeSet<Pid>,
    pub deposits: BTreeMap<Pid, u64>,
    pub circuit: C,
    pub initial_state: C::State,
}

impl<C: Circuit> ContractParams<C> {
    /// Single-member contract funded by `pid` with `deposit` coins.
    pub fn single(pid: &Pid, deposit: u64, circuit: C, initial_state: C::State) -> Self {
        ContractParams {
            members: BTreeSet::from([pid.clone()]),
            deposits: BTreeMap::from([(pid.clone(), deposit)]),
            circuit,
            initial_state,
        }
    }

    fn well_formed(&self) -> bool {
        self.deposits.keys().eq(self.members.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContractRecord<C: Circuit> {
    pub ssid: Ssid,
    pub params: ContractParams<C>,
    /// `None` until initialized.
    pub state: Option<C::State>,
    pub coins: u64,
    pub initialized: bool,
    pub terminated: bool,
    init_received: BTreeSet<Pid>,
}

/// Read-only snapshot returned by `RetrieveContract`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractView<C: Circuit> {
    pub params: ContractParams<C>,
    pub state: Option<C::State>,
    pub coins: u64,
    pub terminated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddPartyOutcome {
    Added,
    Ignored,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitOutcome {
    Initialized,
    Pending,
}

/// Ledger-side notifications, mirroring the functionality's outgoing messages
/// plus explicit coin movements for replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LedgerEvent {
    AddedParty {
        pid: Pid,
        coins: u64,
    },
    Executed {
        tr_id: TrId,
        payer: Pid,
        payee: Pid,
        amount: u64,
    },
    RecordedContract {
        ssid: Ssid,
        creator: Pid,
    },
    Deposit {
        ssid: Ssid,
        pid: Pid,
        amount: u64,
    },
    Initialized {
        ssid: Ssid,
    },
    Triggered {
        ssid: Ssid,
        pid: Pid,
    },
    Reward {
        ssid: Ssid,
        pid: Pid,
        amount: u64,
    },
    Terminated {
        ssid: Ssid,
    },
}

#[derive(Clone, Debug)]
pub struct Ledger<C: Circuit> {
    parties: BTreeMap<Pid, PartyRecord>,
    contracts: Vec<ContractRecord<C>>,
    transactions: Vec<TransactionRecord>,
    time: u64,
    events: Vec<LedgerEvent>,
}

impl<C: Circuit> Default for Ledger<C> {
    fn default() -> Self {
        Ledger {
            parties: BTreeMap::new(),
            contracts: Vec::new(),
            transactions: Vec::new(),
            time: 0,
            events: Vec::new(),
        }
    }
}

impl<C: Circuit> Ledger<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn parties(&self) -> impl Iterator<Item = &PartyRecord> {
        self.parties.values()
    }

    pub fn contract_count(&self) -> usize {
        self.contracts.len()
    }

    pub fn transaction_count(&self) -> usize {
        self.transactions.len()
    }

    /// Σ party coins + Σ contract coins.
    pub fn total_coins(&self) -> u64 {
        self.parties.values().map(|p| p.coins).sum::<u64>() + self.contracts.iter().map(|c| c.coins).sum::<u64>()
    }

    pub fn drain_events(&mut self) -> Vec<LedgerEvent> {
        std::mem::take(&mut self.events)
    }

    /// Fingerprint of parties, contracts, transactions and time. Pending events are excluded.
    pub fn digest(&self) -> Digest32 {
        let mut h = DigestHasher::new();
        self.parties.hash(&mut h);
        self.contracts.hash(&mut h);
        self.transactions.hash(&mut h);
        self.time.hash(&mut h);
        h.digest()
    }

    pub fn add_party(&mut self, pid: &Pid) -> AddPartyOutcome {
        if self.parties.contains_key(pid) {
            return AddPartyOutcome::Ignored;
        }
        let coins = pid.initial_coins();
        self.parties.insert(
            pid.clone(),
            PartyRecord {
                pid: pid.clone(),
                id: pid.id().to_owned(),
                coins,
            },
        );
        self.events.push(LedgerEvent::AddedParty {
            pid: pid.clone(),
            coins,
        });
        AddPartyOutcome::Added
    }

    pub fn retrieve_party(&self, pid: &Pid) -> Option<u64> {
        self.parties.get(pid).map(|p| p.coins)
    }

    /// Moves `amount` from `payer` to `payee`; requires `payer.coins > amount`.
    pub fn add_transaction(&mut self, payer: &Pid, payee: &Pid, amount: u64) -> Option<TrId> {
        if !self.parties.contains_key(payee) {
            return None;
        }
        let from = self.parties.get_mut(payer)?;
        if from.coins <= amount {
            return None;
        }
        from.coins -= amount;
        self.parties.get_mut(payee).expect("checked").coins += amount;
        let tr_id = self.transactions.len() as TrId + 1;
        self.transactions.push(TransactionRecord {
            tr_id,
            payer: payer.clone(),
            payee: payee.clone(),
            amount,
            time: self.time,
        });
        self.events.push(LedgerEvent::Executed {
            tr_id,
            payer: payer.clone(),
            payee: payee.clone(),
            amount,
        });
        Some(tr_id)
    }

    pub fn retrieve_transaction(&self, tr_id: TrId) -> Option<&TransactionRecord> {
        tr_id.checked_sub(1).and_then(|i| self.transactions.get(i as usize))
    }

    /// Records a contract if every member is a registered party; `None` means ignored.
    pub fn add_smart_contract(&mut self, creator: &Pid, params: ContractParams<C>) -> Option<Ssid> {
        if !params.well_formed() || !params.members.iter().all(|p| self.parties.contains_key(p)) {
            return None;
        }
        let ssid = self.contracts.len() as Ssid + 1;
        self.contracts.push(ContractRecord {
            ssid,
            params,
            state: None,
            coins: 0,
            initialized: false,
            terminated: false,
            init_received: BTreeSet::new(),
        });
        self.events.push(LedgerEvent::RecordedContract {
            ssid,
            creator: creator.clone(),
        });
        Some(ssid)
    }

    fn contract_mut(&mut self, ssid: Ssid) -> Option<&mut ContractRecord<C>> {
        ssid.checked_sub(1).and_then(|i| self.contracts.get_mut(i as usize))
    }

    fn contract(&self, ssid: Ssid) -> Option<&ContractRecord<C>> {
        ssid.checked_sub(1).and_then(|i| self.contracts.get(i as usize))
    }

    /// Collects initialization messages from every member; deposits move only
    /// once all have arrived and every member can cover its deposit.
    pub fn initialize_with_coins(&mut self, pid: &Pid, ssid: Ssid, params: &ContractParams<C>) -> Option<InitOutcome> {
        let contract = self.contract(ssid)?;
        if contract.initialized || contract.terminated || contract.params != *params || !params.members.contains(pid) {
            return None;
        }
        let contract = self.contract_mut(ssid).expect("exists");
        contract.init_received.insert(pid.clone());
        if contract.init_received.len() < contract.params.members.len() {
            return Some(InitOutcome::Pending);
        }
        let deposits = contract.params.deposits.clone();
        let funded = deposits
            .iter()
            .all(|(p, d)| self.parties.get(p).is_some_and(|r| r.coins >= *d));
        if !funded {
            self.contract_mut(ssid).expect("exists").init_received.clear();
            return None;
        }
        let mut total = 0;
        for (p, d) in &deposits {
            self.parties.get_mut(p).expect("funded").coins -= d;
            total += d;
            self.events.push(LedgerEvent::Deposit {
                ssid,
                pid: p.clone(),
                amount: *d,
            });
        }
        let contract = self.contract_mut(ssid).expect("exists");
        contract.coins += total;
        contract.state = Some(contract.params.initial_state.clone());
        contract.initialized = true;
        self.events.push(LedgerEvent::Initialized { ssid });
        Some(InitOutcome::Initialized)
    }

    /// Execution phase. Returns the reward paid to `pid`, or `None` (⊥) when the
    /// contract is not live, the deposit cannot be covered, or the circuit rejects.
    pub fn trigger(&mut self, pid: &Pid, ssid: Ssid, witness: &C::Witness, deposit: u64) -> Option<u64> {
        let balance = self.parties.get(pid)?.coins;
        if deposit > 0 && balance <= deposit {
            return None;
        }
        let time = self.time;
        let contract = self.contract(ssid)?;
        if !contract.initialized || contract.terminated {
            return None;
        }
        let state = contract.state.as_ref()?;
        let ctx = TriggerContext {
            pid,
            ssid,
            time,
            deposit,
        };
        let transition = contract.params.circuit.evaluate(&ctx, witness, state)?;

        if deposit > 0 {
            self.parties.get_mut(pid).expect("registered").coins -= deposit;
            self.events.push(LedgerEvent::Deposit {
                ssid,
                pid: pid.clone(),
                amount: deposit,
            });
        }
        let contract = self.contract_mut(ssid).expect("exists");
        contract.coins += deposit;
        contract.state = Some(transition.state);
        let (reward, terminate) = match transition.payout {
            Payout::AllCoins => (contract.coins, true),
            Payout::Coins(0) => (0, false),
            Payout::Coins(e) if contract.coins > e => (e, false),
            Payout::Coins(_) => (contract.coins, true),
        };
        contract.coins -= reward;
        contract.terminated = terminate;
        self.parties.get_mut(pid).expect("registered").coins += reward;
        self.events.push(LedgerEvent::Triggered { ssid, pid: pid.clone() });
        if reward > 0 {
            self.events.push(LedgerEvent::Reward {
                ssid,
                pid: pid.clone(),
                amount: reward,
            });
        }
        if terminate {
            self.events.push(LedgerEvent::Terminated { ssid });
        }
        Some(reward)
    }

    pub fn retrieve_contract(&self, ssid: Ssid) -> Option<ContractView<C>> {
        self.contract(ssid).map(|c| ContractView {
            params: c.params.clone(),
            state: c.state.clone(),
            coins: c.coins,
            terminated: c.terminated,
        })
    }

    pub fn tick(&mut self) -> u64 {
        self.time += 1;
        self.time
    }

    /// Dispatches one message from `sender`. The router is trusted to stamp the true sender.
    pub fn handle(&mut self, sender: &Pid, msg: LedgerMessage<C>) -> LedgerResponse<C> {
        match msg {
            LedgerMessage::AddParty => LedgerResponse::AddParty(self.add_party(sender)),
            LedgerMessage::RetrieveParty { pid } => {
                LedgerResponse::RetrieveParty(pid.clone(), self.retrieve_party(&pid))
            }
            LedgerMessage::AddTransaction { payee, amount } => {
                LedgerResponse::AddTransaction(self.add_transaction(sender, &payee, amount))
            }
            LedgerMessage::RetrieveTransaction { tr_id } => {
                LedgerResponse::RetrieveTransaction(self.retrieve_transaction(tr_id).cloned())
            }
            LedgerMessage::AddSmartContract { params } => {
                LedgerResponse::AddSmartContract(self.add_smart_contract(sender, params))
            }
            LedgerMessage::InitializeWithCoins { ssid, params } => {
                LedgerResponse::InitializeWithCoins(self.initialize_with_coins(sender, ssid, &params))
            }
            LedgerMessage::Trigger { ssid, witness, deposit } => {
                LedgerResponse::Trigger(self.trigger(sender, ssid, &witness, deposit))
            }
            LedgerMessage::RetrieveContract { ssid } => LedgerResponse::RetrieveContract(self.retrieve_contract(ssid)),
            LedgerMessage::Tick => LedgerResponse::Tick(self.tick()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Test circuit: state is a counter, witness `Some(e)` pays `e` coins, `None` is
    /// rejected, `u64::MAX` pays all coins.
    #[derive(Clone, Debug, PartialEq, Eq, Hash)]
    struct PayCircuit;

    impl Circuit for PayCircuit {
        type State = u64;
        type Witness = Option<u64>;

        fn evaluate(&self, _ctx: &TriggerContext<'_>, witness: &Option<u64>, state: &u64) -> Option<Transition<u64>> {
            let e = (*witness)?;
            Some(Transition {
                state: state + 1,
                payout: if e == u64::MAX {
                    Payout::AllCoins
                } else {
                    Payout::Coins(e)
                },
            })
        }
    }

    fn pid(s: &str) -> Pid {
        Pid::parse(s).unwrap()
    }

    fn funded_contract(ledger: &mut Ledger<PayCircuit>, owner: &Pid, d: u64) -> Ssid {
        let params = ContractParams::single(owner, d, PayCircuit, 0);
        let ssid = ledger.add_smart_contract(owner, params.clone()).unwrap();
        assert_eq!(
            ledger.initialize_with_coins(owner, ssid, &params),
            Some(InitOutcome::Initialized)
        );
        ssid
    }

    #[test]
    fn add_party_credits_coins_once() {
        let mut l = Ledger::<PayCircuit>::new();
        let a = pid("alice:50");
        assert_eq!(l.add_party(&a), AddPartyOutcome::Added);
        assert_eq!(l.add_party(&a), AddPartyOutcome::Ignored);
        assert_eq!(l.retrieve_party(&a), Some(50));
        assert_eq!(l.retrieve_party(&pid("carol:1")), None);
    }

    #[test]
    fn transactions_use_strict_inequality() {
        let mut l = Ledger::<PayCircuit>::new();
        let (a, b) = (pid("alice:50"), pid("bob:0"));
        l.add_party(&a);
        assert_eq!(l.add_transaction(&a, &b, 20), None, "unregistered payee");
        l.add_party(&b);
        assert_eq!(l.add_transaction(&a, &b, 20), Some(1));
        assert_eq!(l.retrieve_party(&a), Some(30));
        assert_eq!(l.retrieve_party(&b), Some(20));
        assert_eq!(l.add_transaction(&a, &b, 30), None);
        assert_eq!(l.add_transaction(&a, &b, 29), Some(2));
        let rec = l.retrieve_transaction(1).unwrap();
        assert_eq!((rec.amount, rec.payer.clone()), (20, a.clone()));
        assert!(l.retrieve_transaction(0).is_none());
        assert!(l.retrieve_transaction(3).is_none());
    }

    #[test]
    fn contract_lifecycle_and_payout_branches() {
        let mut l = Ledger::<PayCircuit>::new();
        let a = pid("alice:100");
        l.add_party(&a);
        let ssid = funded_contract(&mut l, &a, 50);
        assert_eq!(l.retrieve_party(&a), Some(50));
        // rejected witness leaves everything unchanged
        let before = l.digest();
        assert_eq!(l.trigger(&a, ssid, &None, 0), None);
        assert_eq!(l.digest(), before);
        // e = 10 from 50: pay 10, continue with 40
        assert_eq!(l.trigger(&a, ssid, &Some(10), 0), Some(10));
        let view = l.retrieve_contract(ssid).unwrap();
        assert_eq!((view.coins, view.terminated, view.state), (40, false, Some(1)));
        // e ≥ coins: pay what is left and terminate
        assert_eq!(l.trigger(&a, ssid, &Some(40), 0), Some(40));
        let view = l.retrieve_contract(ssid).unwrap();
        assert_eq!((view.coins, view.terminated), (0, true));
        assert_eq!(l.trigger(&a, ssid, &Some(0), 0), None);
        assert!(l.retrieve_contract(99).is_none());
    }

    #[test]
    fn all_coins_terminates() {
        let mut l = Ledger::<PayCircuit>::new();
        let a = pid("alice:100");
        l.add_party(&a);
        let ssid = funded_contract(&mut l, &a, 40);
        assert_eq!(l.trigger(&a, ssid, &Some(u64::MAX), 0), Some(40));
        assert!(l.retrieve_contract(ssid).unwrap().terminated);
        assert_eq!(l.total_coins(), 100);
    }

    #[test]
    fn trigger_deposit_charged_only_on_acceptance() {
        let mut l = Ledger::<PayCircuit>::new();
        let a = pid("alice:100");
        l.add_party(&a);
        let ssid = funded_contract(&mut l, &a, 40);
        assert_eq!(l.trigger(&a, ssid, &None, 10), None);
        assert_eq!(l.retrieve_party(&a), Some(60));
        assert_eq!(l.trigger(&a, ssid, &Some(0), 10), Some(0));
        assert_eq!(l.retrieve_party(&a), Some(50));
        assert_eq!(l.retrieve_contract(ssid).unwrap().coins, 50);
        // strict: cannot deposit the whole balance
        assert_eq!(l.trigger(&a, ssid, &Some(0), 50), None);
    }

    #[test]
    fn initialization_rules() {
        let mut l = Ledger::<PayCircuit>::new();
        let (a, poor) = (pid("alice:100"), pid("poor:5"));
        l.add_party(&a);
        l.add_party(&poor);
        assert_eq!(
            l.add_smart_contract(&a, ContractParams::single(&pid("ghost:1"), 1, PayCircuit, 0)),
            None
        );
        let params = ContractParams::single(&poor, 10, PayCircuit, 0);
        let ssid = l.add_smart_contract(&poor, params.clone()).unwrap();
        assert_eq!(ssid, 1);
        assert_eq!(l.initialize_with_coins(&poor, ssid, &params), None);
        assert_eq!(l.retrieve_party(&poor), Some(5));
        // exact balance suffices for deposits (≥)
        let params = ContractParams::single(&a, 100, PayCircuit, 0);
        let ssid2 = l.add_smart_contract(&a, params.clone()).unwrap();
        assert_eq!(ssid2, 2);
        let wrong = ContractParams::single(&a, 99, PayCircuit, 0);
        assert_eq!(l.initialize_with_coins(&a, ssid2, &wrong), None);
        assert_eq!(
            l.initialize_with_coins(&a, ssid2, &params),
            Some(InitOutcome::Initialized)
        );
        assert_eq!(l.retrieve_party(&a), Some(0));
        assert_eq!(l.initialize_with_coins(&a, ssid2, &params), None);
    }

    #[test]
    fn multi_member_initialization_waits_for_all() {
        let mut l = Ledger::<PayCircuit>::new();
        let (a, b) = (pid("a:10"), pid("b:10"));
        l.add_party(&a);
        l.add_party(&b);
        let params = ContractParams {
            members: BTreeSet::from([a.clone(), b.clone()]),
            deposits: BTreeMap::from([(a.clone(), 3), (b.clone(), 4)]),
            circuit: PayCircuit,
            initial_state: 0,
        };
        let ssid = l.add_smart_contract(&a, params.clone()).unwrap();
        assert_eq!(l.initialize_with_coins(&a, ssid, &params), Some(InitOutcome::Pending));
        assert_eq!(l.retrieve_party(&a), Some(10));
        assert_eq!(
            l.initialize_with_coins(&b, ssid, &params),
            Some(InitOutcome::Initialized)
        );
        assert_eq!(l.retrieve_contract(ssid).unwrap().coins, 7);
    }

    #[test]
    fn ticks_advance_time_seen_by_transactions() {
        let mut l = Ledger::<PayCircuit>::new();
        let (a, b) = (pid("a:10"), pid("b:0"));
        l.add_party(&a);
        l.add_party(&b);
        for _ in 0..100 {
            l.tick();
        }
        assert_eq!(l.time(), 100);
        let id = l.add_transaction(&a, &b, 1).unwrap();
        assert_eq!(l.retrieve_transaction(id).unwrap().time, 100);
    }

    #[test]
    fn handle_routes_sender() {
        let mut l = Ledger::<PayCircuit>::new();
        let a = pid("a:10");
        assert_eq!(
            l.handle(&a, LedgerMessage::AddParty),
            LedgerResponse::AddParty(AddPartyOutcome::Added)
        );
        assert_eq!(l.handle(&a, LedgerMessage::Tick), LedgerResponse::Tick(1));
        let ev = l.drain_events();
        assert_eq!(ev.len(), 1);
    }
}
