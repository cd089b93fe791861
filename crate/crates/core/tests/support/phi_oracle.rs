//! Table-driven reference evaluator for the base banknote circuit, and a
//! cross-product driver comparing it against the implementation.

use qlpay_core::banknote::{phi_money, BanknoteState, ClaimState, PhiParams, Witness};
use qlpay_core::ledger::{Payout, Transition, TriggerContext};
use qlpay_core::lightning::{ql_setup, Certificate, QuantumEnv};
use qlpay_core::Pid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessClass {
    Lost,
    ChallengeValid,
    ChallengeInvalid,
    Unchallenged,
    RecoverValid,
    RecoverInvalid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateClass {
    NoClaim,
    ClaimBySelf,
    ClaimByOther,
    Void,
}

pub const WITNESSES: [WitnessClass; 6] = [
    WitnessClass::Lost,
    WitnessClass::ChallengeValid,
    WitnessClass::ChallengeInvalid,
    WitnessClass::Unchallenged,
    WitnessClass::RecoverValid,
    WitnessClass::RecoverInvalid,
];

pub const STATES: [StateClass; 4] = [
    StateClass::NoClaim,
    StateClass::ClaimBySelf,
    StateClass::ClaimByOther,
    StateClass::Void,
];

/// One row per accepting case of the transition table; anything else is ⊥.
#[allow(clippy::too_many_arguments)]
pub fn reference(
    p: &PhiParams,
    caller: &Pid,
    now: u64,
    claim_t: u64,
    d: u64,
    state: StateClass,
    w: WitnessClass,
    serial: &[u8],
    new_serial: &[u8],
) -> Option<Transition<BanknoteState>> {
    use StateClass::*;
    use WitnessClass::*;
    let to = |serial: Option<&[u8]>, claim: ClaimState, payout: Payout| {
        Some(Transition {
            state: BanknoteState {
                serial: serial.map(<[u8]>::to_vec),
                claim,
            },
            payout,
        })
    };
    match (state, w) {
        (NoClaim, Lost) if d == p.d0 => to(
            Some(serial),
            ClaimState::ClaimBy {
                pid: caller.clone(),
                t: now,
            },
            Payout::Coins(0),
        ),
        (NoClaim, RecoverValid) => to(None, ClaimState::Void, Payout::AllCoins),
        (ClaimBySelf | ClaimByOther, ChallengeValid) => {
            to(Some(new_serial), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        (ClaimBySelf, Unchallenged) if now - claim_t > p.t_tr => {
            to(Some(new_serial), ClaimState::NoActiveClaim, Payout::Coins(p.d0))
        }
        _ => None,
    }
}

pub struct OracleReport {
    pub total: usize,
    pub agree: usize,
    pub accepted: usize,
    pub mismatches: Vec<String>,
}

fn certificate_for(env: &mut QuantumEnv, owner: &Pid) -> (Vec<u8>, Certificate) {
    let (h, s) = env.gen_bolt(owner);
    let c = env.gen_certificate(&h, &s).expect("live bolt");
    (s.as_bytes().to_vec(), c)
}

/// Witness classes × claim states × times around maturity × deposits around d0.
pub fn cross_product(p: &PhiParams) -> OracleReport {
    let mut env = ql_setup(128, [42; 32]).expect("setup");
    let caller = Pid::new("caller", 100);
    let other = Pid::new("other", 100);
    let claim_t = 1_000;
    let mut report = OracleReport {
        total: 0,
        agree: 0,
        accepted: 0,
        mismatches: Vec::new(),
    };
    for state in STATES {
        for w in WITNESSES {
            for dt in [p.t_tr - 1, p.t_tr, p.t_tr + 1] {
                for d in [0, p.d0 - 1, p.d0, p.d0 + 1] {
                    let (serial, good) = certificate_for(&mut env, &caller);
                    let (_, foreign) = certificate_for(&mut env, &caller);
                    let new_serial = vec![0xab; 32];
                    let st = match state {
                        StateClass::NoClaim => BanknoteState::fresh(serial.clone()),
                        StateClass::ClaimBySelf => BanknoteState {
                            serial: Some(serial.clone()),
                            claim: ClaimState::ClaimBy {
                                pid: caller.clone(),
                                t: claim_t,
                            },
                        },
                        StateClass::ClaimByOther => BanknoteState {
                            serial: Some(serial.clone()),
                            claim: ClaimState::ClaimBy {
                                pid: other.clone(),
                                t: claim_t,
                            },
                        },
                        StateClass::Void => BanknoteState {
                            serial: None,
                            claim: ClaimState::Void,
                        },
                    };
                    let witness = match w {
                        WitnessClass::Lost => Witness::BanknoteLost,
                        WitnessClass::ChallengeValid => Witness::ChallengeClaim {
                            cert: good.clone(),
                            new_serial: new_serial.clone(),
                        },
                        WitnessClass::ChallengeInvalid => Witness::ChallengeClaim {
                            cert: foreign.clone(),
                            new_serial: new_serial.clone(),
                        },
                        WitnessClass::Unchallenged => Witness::ClaimUnchallenged {
                            new_serial: new_serial.clone(),
                        },
                        WitnessClass::RecoverValid => Witness::RecoverCoins { cert: good.clone() },
                        WitnessClass::RecoverInvalid => Witness::RecoverCoins { cert: foreign.clone() },
                    };
                    let now = claim_t + dt;
                    let ctx = TriggerContext {
                        pid: &caller,
                        ssid: 1,
                        time: now,
                        deposit: d,
                    };
                    let got = phi_money(p, &ctx, &witness, &st);
                    let want = reference(p, &caller, now, claim_t, d, state, w, &serial, &new_serial);
                    report.total += 1;
                    if got.is_some() {
                        report.accepted += 1;
                    }
                    if got == want {
                        report.agree += 1;
                    } else {
                        report
                            .mismatches
                            .push(format!("{state:?} {w:?} dt={dt} d={d}: got {got:?}, want {want:?}"));
                    }
                }
            }
        }
    }
    report
}
