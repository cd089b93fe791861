use std::process::{Command, Output};

fn qlpay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlpay"))
        .args(args)
        .output()
        .expect("qlpay runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn honest_scenario_exits_zero() {
    let o = qlpay(&["run", "builtin:honest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = String::from_utf8(o.stdout).unwrap();
    assert!(trace.starts_with("# scenario=honest\n# seed=0\n# scheduler=fifo\n# variant=base d0=10 ttr=100"));
}

#[test]
fn cloning_without_soundness_exits_one() {
    assert_eq!(qlpay(&["run", "builtin:unsound-clone"]).status.code(), Some(0));
    let o = qlpay(&["run", "builtin:unsound-clone", "--unsound"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("max_net=60"), "{}", stderr(&o));
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.qls");
    let o = qlpay(&["run", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.qls");
    std::fs::write(&bad, "AddParty alice:10\n\nPAY alice\n").unwrap();
    let o = qlpay(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    assert_eq!(qlpay(&["demo", "nonsense"]).status.code(), Some(2));
    assert_eq!(qlpay(&["run", "builtin:honest", "--ttr", "1"]).status.code(), Some(2));
}

#[test]
fn trace_goes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.tsv");
    let o = qlpay(&[
        "run",
        "builtin:double-spend",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("# seed=3"));
}

#[test]
fn games_report_and_exit_status() {
    let o = qlpay(&["games", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for g in [
        "counterfeit",
        "forge-certificate",
        "forge-sig",
        "sabotage-money",
        "sabotage-certificate",
        "sabotage-signature",
    ] {
        assert!(text.contains(&format!("{g}\t0/50")), "{text}");
    }
    let o = qlpay(&["games", "--trials", "50", "--unsound", "--game", "counterfeit"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(!text.contains("counterfeit\t0/50"), "{text}");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(qlpay(&["games", "--game", "chess"]).status.code(), Some(2));
}

#[test]
fn demos_narrate() {
    for name in [
        "mint-pay-redeem",
        "lost-claim",
        "challenge",
        "attack-i",
        "attack-ii",
        "attack-iii",
        "merkle-split",
    ] {
        let o = qlpay(&["demo", name, "--n", "8"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.contains("\n-- ") || text.starts_with("-- "), "{name}");
    }
    let o = qlpay(&["demo", "attack-ii", "--n", "8"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("against base (unmitigated)") && text.contains("against sig-gated (mitigated)"));
}

#[test]
fn help_lists_every_flag() {
    let o = qlpay(&["run", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--seed",
        "--variant",
        "--d0",
        "--ttr",
        "--t0",
        "--t1",
        "--n",
        "--scheduler",
        "--scan",
        "--keys",
        "--unsound",
        "--out",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
}
