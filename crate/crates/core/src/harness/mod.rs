//! Adversarial execution: scripted scenarios, security games and attack replays.

pub mod attacks;
pub mod games;
mod runner;
mod scenario;
mod value;
mod watchdog;

pub use runner::{run, RunConfig, RunError, RunReport, STASH_ID};
pub use scenario::{Command, RawMessage, Scenario, ScenarioError, Step};
pub use value::ValueLedger;
pub use watchdog::watchdog_scenario;

/// Bundled scenarios, by name.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("honest", include_str!("../../scenarios/honest.qls")),
    ("double-spend", include_str!("../../scenarios/double-spend.qls")),
    (
        "spend-then-redeem",
        include_str!("../../scenarios/spend-then-redeem.qls"),
    ),
    ("malicious-claim", include_str!("../../scenarios/malicious-claim.qls")),
    ("claim-then-spend", include_str!("../../scenarios/claim-then-spend.qls")),
    ("challenge-theft", include_str!("../../scenarios/challenge-theft.qls")),
    ("churn", include_str!("../../scenarios/churn.qls")),
    ("unsound-clone", include_str!("../../scenarios/unsound-clone.qls")),
];

pub fn builtin(name: &str) -> Option<Scenario> {
    BUILTIN_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Scenario::parse(n, text).expect("bundled scenarios parse"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banknote::Variant;
    use crate::system::NetworkConfig;

    #[test]
    fn bundled_scenarios_hold_value_when_sound() {
        for (name, _) in BUILTIN_SCENARIOS {
            let r = run(&builtin(name).unwrap(), &RunConfig::default()).unwrap();
            assert!(r.passed(), "{name}: max_net={} {:?}", r.value.max_net, r.violations);
        }
    }

    #[test]
    fn watchdog_catches_random_claims() {
        for variant in [Variant::Base, Variant::SigGated, Variant::CommitReveal] {
            for seed in 0..10 {
                let cfg = RunConfig {
                    network: NetworkConfig::with_variant(variant),
                    seed,
                    ..RunConfig::default()
                };
                let r = run(&watchdog_scenario(seed), &cfg).unwrap();
                assert_eq!(r.malicious_settles, 0, "{variant} seed {seed}\n{}", r.trace.render());
                assert!(r.passed());
            }
        }
    }
}
