//! Simulated quantum-lightning payments over a smart-contract ledger.

pub mod banknote;
pub mod bridge;
pub mod harness;
pub mod hashing;
pub mod ledger;
pub mod lightning;
pub mod pid;
pub mod qlds;
pub mod system;
pub mod wallet;

pub use banknote::{PhiParams, Variant, Witness};
pub use ledger::{Ledger, LedgerMessage, LedgerResponse, Ssid};
pub use lightning::{ql_setup, BoltHandle, Certificate, QuantumEnv, SerialNumber};
pub use pid::Pid;
pub use system::{NetworkConfig, Scheduler, System};
pub use wallet::{pay, Banknote, PayOutcome, PayeePolicy, Wallet};
