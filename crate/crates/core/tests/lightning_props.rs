use proptest::prelude::*;

use qlpay_core::lightning::{verify_certificate, LightningParams, QuantumEnv};
use qlpay_core::{BoltHandle, Pid, SerialNumber};

#[derive(Clone, Debug)]
enum Op {
    Gen,
    Verify(usize),
    Certify(usize),
    Transfer(usize),
    Clone(usize),
    Decohere(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Gen),
        (0..16usize).prop_map(Op::Verify),
        (0..16usize).prop_map(Op::Certify),
        (0..16usize).prop_map(Op::Transfer),
        (0..16usize).prop_map(Op::Clone),
        (0..16usize).prop_map(Op::Decohere),
    ]
}

fn owners() -> [Pid; 2] {
    [Pid::new("a", 0), Pid::new("b", 0)]
}

proptest! {
    #[test]
    fn sound_mode_never_duplicates(seed in any::<[u8; 32]>(), ops in prop::collection::vec(op(), 1..60)) {
        let mut env = QuantumEnv::with_params(LightningParams::new(128), seed).unwrap();
        let owners = owners();
        let mut held: Vec<(BoltHandle, SerialNumber, usize)> = Vec::new();
        for op in ops {
            match op {
                Op::Gen => {
                    let (h, s) = env.gen_bolt(&owners[0]);
                    held.push((h, s, 0));
                }
                Op::Verify(i) if !held.is_empty() => {
                    let (h, s, _) = &held[i % held.len()];
                    let a = env.verify_bolt(h, s).unwrap();
                    let b = env.verify_bolt(h, s).unwrap();
                    prop_assert_eq!(a, b);
                }
                Op::Certify(i) if !held.is_empty() => {
                    let (h, s, _) = &held[i % held.len()];
                    if let Ok(c) = env.gen_certificate(h, s) {
                        prop_assert!(verify_certificate(s, &c));
                        prop_assert!(!env.verify_bolt(h, s).unwrap());
                    }
                }
                Op::Transfer(i) if !held.is_empty() => {
                    let k = i % held.len();
                    let (h, s, o) = held.remove(k);
                    let to = 1 - o;
                    match env.transfer_bolt(h, &owners[o], &owners[to]) {
                        Ok(h) => held.push((h, s, to)),
                        Err(e) => held.push((e.handle, s, o)),
                    }
                }
                Op::Clone(i) if !held.is_empty() => {
                    let (h, _, _) = &held[i % held.len()];
                    prop_assert!(env.clone_attempt(h).is_none());
                }
                Op::Decohere(i) if !held.is_empty() => {
                    let (h, s, _) = held.remove(i % held.len());
                    env.decohere(h).unwrap();
                    let _ = s;
                }
                _ => {}
            }
            prop_assert!(env.violations().is_empty());
        }
    }

    #[test]
    fn certificates_do_not_transfer_between_bolts(seed in any::<[u8; 32]>()) {
        let mut env = QuantumEnv::with_params(LightningParams::new(128), seed).unwrap();
        let [a, _] = owners();
        let (h1, s1) = env.gen_bolt(&a);
        let (h2, s2) = env.gen_bolt(&a);
        let c1 = env.gen_certificate(&h1, &s1).unwrap();
        prop_assert!(!verify_certificate(&s2, &c1));
        prop_assert!(env.verify_bolt(&h2, &s2).unwrap());
    }
}
