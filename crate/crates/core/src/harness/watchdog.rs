//! Randomized scenarios in which a corrupted party files false lost-banknote claims
//! against banknotes held by honest parties.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::system::seed_bytes;

use super::scenario::Scenario;

const HONEST: [&str; 3] = ["alice", "bob", "carol"];

pub fn watchdog_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha20Rng::from_seed(seed_bytes(seed, b"watchdog"));
    let mut text = String::new();
    for p in HONEST {
        writeln!(text, "AddParty {p}:200").unwrap();
    }
    text.push_str("AddParty mallory:300\nCORRUPT mallory\n");
    let notes = rng.gen_range(2..=4);
    let mut holders = Vec::new();
    for _ in 0..notes {
        let p = *HONEST.choose(&mut rng).unwrap();
        writeln!(text, "MINT {p} {}", rng.gen_range(10..=50)).unwrap();
        holders.push(p);
    }
    let mut elapsed = 0;
    while elapsed < 600 {
        let k = rng.gen_range(1..=60);
        writeln!(text, "TICK {k}").unwrap();
        elapsed += k;
        let ssid = rng.gen_range(1..=notes);
        match rng.gen_range(0..10) {
            0..=4 => writeln!(text, "CLAIM mallory {ssid}").unwrap(),
            5..=7 => {
                let from = holders[ssid - 1];
                let to = *HONEST
                    .iter()
                    .filter(|p| **p != from)
                    .collect::<Vec<_>>()
                    .choose(&mut rng)
                    .unwrap();
                writeln!(text, "PAY {from} {to} {ssid}").unwrap();
                holders[ssid - 1] = to;
            }
            _ => writeln!(text, "SETTLE mallory {ssid}").unwrap(),
        }
    }
    text.push_str("TICK 150\n");
    Scenario::parse(&format!("watchdog-{seed}"), &text).expect("generated script parses")
}
