//! Security games against the simulated lightning scheme and the signature bundle.
//!
//! Every trial runs in a fresh environment. Adversary strategies rotate across trials.

use std::fmt;

use crate::hashing::{sha256, Digest32};
use crate::lightning::{verify_certificate, Certificate, LightningParams, QuantumEnv, SerialNumber};
use crate::pid::Pid;
use crate::qlds::{gen_sig, message_bits, qlds_gen, qlds_ver, verify_sig, QldsKey, QldsParams, QldsSignature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Game {
    Counterfeit,
    ForgeCertificate,
    ForgeSig,
    SabotageMoney,
    SabotageCertificate,
    SabotageSignature,
}

impl Game {
    pub const ALL: [Game; 6] = [
        Game::Counterfeit,
        Game::ForgeCertificate,
        Game::ForgeSig,
        Game::SabotageMoney,
        Game::SabotageCertificate,
        Game::SabotageSignature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Game::Counterfeit => "counterfeit",
            Game::ForgeCertificate => "forge-certificate",
            Game::ForgeSig => "forge-sig",
            Game::SabotageMoney => "sabotage-money",
            Game::SabotageCertificate => "sabotage-certificate",
            Game::SabotageSignature => "sabotage-signature",
        }
    }

    pub fn from_name(s: &str) -> Option<Game> {
        Game::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn strategies(self) -> &'static [&'static str] {
        match self {
            Game::Counterfeit => &["clone", "fresh-pair", "foreign-env"],
            Game::ForgeCertificate => &["random-cert", "certify-then-submit", "clone-then-certify", "other-bolt"],
            Game::ForgeSig => &["replay", "random", "splice", "clone-key"],
            Game::SabotageMoney => &["honest", "dead-bolt", "wrong-serial", "foreign"],
            Game::SabotageCertificate => &["honest", "dead-bolt", "wrong-serial", "foreign", "clone-and-burn"],
            Game::SabotageSignature => &["honest", "pre-signed", "swapped-components", "foreign-serial"],
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameConfig {
    pub trials: u32,
    pub n: usize,
    pub lambda: u32,
    pub sound: bool,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            trials: 1000,
            n: 8,
            lambda: 128,
            sound: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyTally {
    pub strategy: &'static str,
    pub trials: u32,
    pub wins: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameResult {
    pub game: Game,
    pub trials: u32,
    pub wins: u32,
    pub by_strategy: Vec<StrategyTally>,
    pub digest: Digest32,
}

impl fmt::Display for GameResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}/{}", self.game, self.wins, self.trials)
    }
}

fn adversary() -> Pid {
    Pid::new("adversary", 0)
}

fn challenger() -> Pid {
    Pid::new("challenger", 0)
}

fn trial_env(cfg: &GameConfig, game: Game, trial: u32) -> QuantumEnv {
    let mut params = LightningParams::new(cfg.lambda);
    params.sound_mode = cfg.sound;
    let seed = sha256(&[
        b"game",
        game.name().as_bytes(),
        &cfg.seed.to_be_bytes(),
        &trial.to_be_bytes(),
    ]);
    QuantumEnv::with_params(params, seed).expect("lambda validated by caller")
}

pub fn play(game: Game, cfg: &GameConfig) -> GameResult {
    let strategies = game.strategies();
    let mut by_strategy: Vec<StrategyTally> = strategies
        .iter()
        .map(|s| StrategyTally {
            strategy: s,
            trials: 0,
            wins: 0,
        })
        .collect();
    let mut digest = sha256(&[game.name().as_bytes()]);
    let mut wins = 0;
    for t in 0..cfg.trials {
        let k = t as usize % strategies.len();
        let mut env = trial_env(cfg, game, t);
        let won = match game {
            Game::Counterfeit => counterfeit(&mut env, cfg, game, t, strategies[k]),
            Game::ForgeCertificate => forge_certificate(&mut env, strategies[k]),
            Game::ForgeSig => forge_sig(&mut env, cfg.n, strategies[k]),
            Game::SabotageMoney => sabotage_money(&mut env, cfg, game, t, strategies[k]),
            Game::SabotageCertificate => sabotage_certificate(&mut env, cfg, game, t, strategies[k]),
            Game::SabotageSignature => sabotage_signature(&mut env, cfg.n, strategies[k]),
        };
        by_strategy[k].trials += 1;
        if won {
            by_strategy[k].wins += 1;
            wins += 1;
        }
        digest = sha256(&[&digest, &[k as u8, u8::from(won)], &env.registry_digest()]);
    }
    GameResult {
        game,
        trials: cfg.trials,
        wins,
        by_strategy,
        digest,
    }
}

pub fn play_all(cfg: &GameConfig) -> Vec<GameResult> {
    Game::ALL.iter().map(|g| play(*g, cfg)).collect()
}

fn verifies(env: &QuantumEnv, h: &crate::lightning::BoltHandle, s: &SerialNumber) -> bool {
    env.verify_bolt(h, s).unwrap_or(false)
}

/// A second environment built from the same seed, standing in for a replayed setup.
fn twin_env(cfg: &GameConfig, game: Game, trial: u32) -> QuantumEnv {
    trial_env(cfg, game, trial)
}

fn counterfeit(env: &mut QuantumEnv, cfg: &GameConfig, game: Game, t: u32, strategy: &str) -> bool {
    let adv = adversary();
    let (h1, s) = env.gen_bolt(&adv);
    match strategy {
        "clone" => match env.clone_attempt(&h1) {
            Some(h2) => verifies(env, &h1, &s) && verifies(env, &h2, &s),
            None => {
                let (h2, _) = env.gen_bolt(&adv);
                verifies(env, &h1, &s) && verifies(env, &h2, &s)
            }
        },
        "fresh-pair" => {
            let (h2, _) = env.gen_bolt(&adv);
            verifies(env, &h1, &s) && verifies(env, &h2, &s)
        }
        _ => {
            let mut twin = twin_env(cfg, game, t);
            let (h2, s2) = twin.gen_bolt(&adv);
            debug_assert_eq!(s, s2);
            verifies(env, &h1, &s) && verifies(env, &h2, &s)
        }
    }
}

fn forge_certificate(env: &mut QuantumEnv, strategy: &str) -> bool {
    let adv = adversary();
    let (h, s) = env.gen_bolt(&adv);
    let c = match strategy {
        "random-cert" => Certificate::from_bytes(env.random_bytes(env.params().preimage_len)),
        "certify-then-submit" => env.gen_certificate(&h, &s).expect("live bolt"),
        "clone-then-certify" => match env.clone_attempt(&h) {
            Some(h2) => env.gen_certificate(&h2, &s).expect("live clone"),
            None => Certificate::from_bytes(env.random_bytes(env.params().preimage_len)),
        },
        _ => {
            let (h2, s2) = env.gen_bolt(&adv);
            env.gen_certificate(&h2, &s2).expect("live bolt")
        }
    };
    verify_certificate(&s, &c) && verifies(env, &h, &s)
}

fn random_signature(env: &mut QuantumEnv, n: usize) -> QldsSignature {
    let len = env.params().preimage_len;
    QldsSignature::from_certificates((0..n).map(|_| Certificate::from_bytes(env.random_bytes(len))).collect())
}

/// Smallest suffix counter that changes the signed bit string.
fn distinct_message(n: usize, alpha: &[u8]) -> Vec<u8> {
    let bits = message_bits(n, alpha);
    (0u32..)
        .map(|i| [alpha, &i.to_be_bytes()].concat())
        .find(|m| message_bits(n, m) != bits)
        .expect("some suffix changes the digest")
}

fn clone_key(env: &mut QuantumEnv, key: &QldsKey) -> Option<QldsKey> {
    let bolts = key
        .bolts()
        .iter()
        .map(|b| env.clone_attempt(b))
        .collect::<Option<Vec<_>>>()?;
    Some(QldsKey::from_parts(bolts, key.serial().to_vec()))
}

fn forge_sig(env: &mut QuantumEnv, n: usize, strategy: &str) -> bool {
    let params = QldsParams::new(n).expect("validated n");
    let adv = adversary();
    let key = qlds_gen(env, params, &adv);
    let serial = key.serial().to_vec();
    let alpha = env.random_bytes(32);
    let kept = if strategy == "clone-key" {
        clone_key(env, &key)
    } else {
        None
    };
    let key = match key.transfer(env, &adv, &challenger()) {
        Ok(k) => k,
        Err(_) => return false,
    };
    if !qlds_ver(env, &key, &serial).unwrap_or(false) {
        return false;
    }
    let Ok(sigma) = gen_sig(env, &key, &serial, &alpha) else {
        return false;
    };
    let alpha2 = distinct_message(n, &alpha);
    let sigma2 = match strategy {
        "random" => random_signature(env, n),
        "splice" => {
            let other = qlds_gen(env, params, &adv);
            match gen_sig(env, &other, other.serial(), &alpha2) {
                Ok(s) => s,
                Err(_) => return false,
            }
        }
        "clone-key" => match kept {
            Some(k) => match gen_sig(env, &k, &serial, &alpha2) {
                Ok(s) => s,
                Err(_) => return false,
            },
            None => sigma.clone(),
        },
        _ => sigma.clone(),
    };
    alpha2 != alpha && verify_sig(params, &serial, &alpha2, &sigma2).unwrap_or(false)
}

/// The bolt and serial handed to the challenger by a sabotage adversary.
fn sabotage_input(
    env: &mut QuantumEnv,
    cfg: &GameConfig,
    game: Game,
    t: u32,
    strategy: &str,
) -> (crate::lightning::BoltHandle, SerialNumber) {
    let adv = adversary();
    match strategy {
        "dead-bolt" => {
            let (h, s) = env.gen_bolt(&adv);
            env.gen_certificate(&h, &s).expect("live bolt");
            (h, s)
        }
        "wrong-serial" => {
            let (h, _) = env.gen_bolt(&adv);
            let (_, s2) = env.gen_bolt(&adv);
            (h, s2)
        }
        "foreign" => {
            let mut twin = twin_env(cfg, game, t);
            twin.gen_bolt(&adv)
        }
        "clone-and-burn" => {
            let (h, s) = env.gen_bolt(&adv);
            if let Some(h2) = env.clone_attempt(&h) {
                env.gen_certificate(&h2, &s).expect("live clone");
            }
            (h, s)
        }
        _ => env.gen_bolt(&adv),
    }
}

fn sabotage_money(env: &mut QuantumEnv, cfg: &GameConfig, game: Game, t: u32, strategy: &str) -> bool {
    let (h, s) = sabotage_input(env, cfg, game, t, strategy);
    let first = verifies(env, &h, &s);
    let second = verifies(env, &h, &s);
    first && !second
}

fn sabotage_certificate(env: &mut QuantumEnv, cfg: &GameConfig, game: Game, t: u32, strategy: &str) -> bool {
    let (h, s) = sabotage_input(env, cfg, game, t, strategy);
    let r = if !verifies(env, &h, &s) {
        true
    } else {
        match env.gen_certificate(&h, &s) {
            Ok(c) => verify_certificate(&s, &c),
            Err(_) => false,
        }
    };
    !r
}

fn sabotage_signature(env: &mut QuantumEnv, n: usize, strategy: &str) -> bool {
    let params = QldsParams::new(n).expect("validated n");
    let adv = adversary();
    let key = qlds_gen(env, params, &adv);
    let mut serial = key.serial().to_vec();
    let alpha = env.random_bytes(32);
    let key = match strategy {
        "pre-signed" => {
            let other = distinct_message(n, &alpha);
            let s = serial.clone();
            let _ = gen_sig(env, &key, &s, &other);
            key
        }
        "swapped-components" => {
            let (mut bolts, serial) = key.into_parts();
            bolts.swap(0, 1);
            QldsKey::from_parts(bolts, serial)
        }
        "foreign-serial" => {
            let other = qlds_gen(env, params, &adv);
            serial = other.serial().to_vec();
            key
        }
        _ => key,
    };
    let r = if !qlds_ver(env, &key, &serial).unwrap_or(false) {
        true
    } else {
        match gen_sig(env, &key, &serial, &alpha) {
            Ok(sig) => verify_sig(params, &serial, &alpha, &sig).unwrap_or(false),
            Err(_) => false,
        }
    };
    !r
}

/// Outcome of replaying a signature on a second message whose truncated digest collides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionReplay {
    pub n: usize,
    pub attempts: u64,
    pub message: Option<Vec<u8>>,
    pub forged: bool,
}

/// Searches up to `budget` messages for one whose first `n` digest bits match the signed message.
pub fn collision_replay(n: usize, seed: u64, budget: u64) -> CollisionReplay {
    let params = QldsParams::new(n).expect("validated n");
    let mut env = QuantumEnv::with_params(LightningParams::new(128), sha256(&[b"collision", &seed.to_be_bytes()]))
        .expect("valid params");
    let key = qlds_gen(&mut env, params, &challenger());
    let serial = key.serial().to_vec();
    let alpha = env.random_bytes(32);
    let sigma = gen_sig(&mut env, &key, &serial, &alpha).expect("fresh key");
    let target = message_bits(n, &alpha);
    for i in 0..budget {
        let candidate = [b"forged:".as_slice(), &i.to_be_bytes()].concat();
        if candidate != alpha && message_bits(n, &candidate) == target {
            let forged = verify_sig(params, &serial, &candidate, &sigma).unwrap_or(false);
            return CollisionReplay {
                n,
                attempts: i + 1,
                message: Some(candidate),
                forged,
            };
        }
    }
    CollisionReplay {
        n,
        attempts: budget,
        message: None,
        forged: false,
    }
}
