//! Front-running attacks under a reordering scheduler.
//!
//! Each attack is a seeded script. The adversary controls one corrupted party,
//! watches the mempool and submits its own messages ahead of delayed honest ones.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::banknote::Variant;
use crate::system::{seed_bytes, NetworkConfig, Scheduler};

use super::runner::{run, RunConfig, RunReport};
use super::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attack {
    /// Copy an honest challenge certificate and rebind the banknote to the adversary.
    ChallengeCopy,
    /// Copy an honest redemption certificate and collect the coins.
    RedeemCopy,
    /// Race an honest lost-banknote claim with the adversary's own claim.
    ClaimRace,
}

impl Attack {
    pub const ALL: [Attack; 3] = [Attack::ChallengeCopy, Attack::RedeemCopy, Attack::ClaimRace];

    pub fn name(self) -> &'static str {
        match self {
            Attack::ChallengeCopy => "challenge-copy",
            Attack::RedeemCopy => "redeem-copy",
            Attack::ClaimRace => "claim-race",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Attack::ChallengeCopy => "i",
            Attack::RedeemCopy => "ii",
            Attack::ClaimRace => "iii",
        }
    }

    pub fn from_name(s: &str) -> Option<Attack> {
        Attack::ALL.into_iter().find(|a| a.name() == s || a.label() == s)
    }

    /// Whether `variant` is expected to stop the attack.
    pub fn mitigated_by(self, variant: Variant) -> bool {
        match self {
            Attack::ChallengeCopy | Attack::RedeemCopy => variant.uses_signatures(),
            Attack::ClaimRace => false,
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.label(), self.name())
    }
}

pub const ATTACK_DELTA: u64 = 5;

/// Network settings for attack runs: honest parties scan early enough that a
/// delayed challenge still lands before the claim matures.
pub fn attack_config(variant: Variant, delta: u64, seed: u64) -> RunConfig {
    let mut network = NetworkConfig::with_variant(variant);
    network.scan_interval = network.t_tr.saturating_sub(1 + delta).max(1);
    if variant == Variant::CommitReveal {
        network.scan_interval = network.scan_interval.min(network.t1.saturating_sub(delta).max(1));
    }
    RunConfig {
        network,
        scheduler: Scheduler::Reorder { delta },
        seed,
    }
}

pub fn attack_script(attack: Attack, seed: u64) -> Scenario {
    let mut rng = ChaCha20Rng::from_seed(seed_bytes(seed, attack.name().as_bytes()));
    let value: u64 = rng.gen_range(20..=60);
    let wait: u64 = rng.gen_range(1..=40);
    let mut text =
        format!("AddParty alice:100\nAddParty mallory:100\nCORRUPT mallory\nMINT alice {value}\nTICK {wait}\n");
    text.push_str(match attack {
        Attack::ChallengeCopy => "CLAIM mallory 1\nTICK 130\nREDEEM mallory 1\nTICK 2\n",
        Attack::RedeemCopy => "REDEEM alice 1\nTICK 10\n",
        Attack::ClaimRace => "LOSE alice 1\nCLAIM alice 1\nTICK 130\nREDEEM mallory 1\nTICK 2\n",
    });
    Scenario::parse(&format!("attack-{}-{seed}", attack.name()), &text).expect("generated script parses")
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub attack: Attack,
    pub variant: Variant,
    pub seed: u64,
    /// The adversary ended up with more value than it was given.
    pub succeeded: bool,
    pub gain: i64,
    pub report: RunReport,
}

pub fn run_attack(attack: Attack, variant: Variant, delta: u64, seed: u64) -> AttackOutcome {
    let report =
        run(&attack_script(attack, seed), &attack_config(variant, delta, seed)).expect("attack scripts are valid");
    AttackOutcome {
        attack,
        variant,
        seed,
        succeeded: report.value.max_net > 0,
        gain: report.value.max_net,
        report,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackSummary {
    pub attack: Attack,
    pub variant: Variant,
    pub runs: u64,
    pub successes: u64,
}

impl fmt::Display for AttackSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.attack.mitigated_by(self.variant) {
            "mitigated"
        } else {
            "unmitigated"
        };
        write!(
            f,
            "{}\t{}\t{}/{} succeeded\t{status}",
            self.attack, self.variant, self.successes, self.runs
        )
    }
}

pub fn sweep(attack: Attack, variant: Variant, delta: u64, seeds: std::ops::Range<u64>) -> AttackSummary {
    let mut runs = 0;
    let mut successes = 0;
    for seed in seeds {
        runs += 1;
        if run_attack(attack, variant, delta, seed).succeeded {
            successes += 1;
        }
    }
    AttackSummary {
        attack,
        variant,
        runs,
        successes,
    }
}
