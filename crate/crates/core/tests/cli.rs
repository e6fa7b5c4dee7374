use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn poabe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poabe"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = poabe(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Keys, package, task data and transform result for policy "A AND B".
fn prepare(dir: &Path) -> String {
    fs::write(dir.join("msg.txt"), b"quarterly numbers, do not forward").unwrap();
    ok(dir, &["setup", "--seed", "1"]);
    ok(dir, &["keygen", "--pk", "pk.bin", "--msk", "msk.bin", "--attrs", "A,B,C", "--seed", "2"]);
    ok(dir, &["encrypt", "--pk", "pk.bin", "--policy", "A AND B", "--input", "msg.txt", "--seed", "3"]);
    ok(dir, &["tkgen", "--sk", "sk.bin", "--seed", "4"]);
    let hash = ok(dir, &["task-data", "--package", "package.bin", "--tk", "tk.bin"]);
    ok(dir, &["transform", "--task", "task.bin"]);
    hash.lines().last().unwrap().trim().to_string()
}

#[test]
fn file_pipeline_recovers_plaintext() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    ok(d, &["retrieve", "--package", "package.bin", "--transformed", "transformed.bin", "--rk", "rk.bin", "--output", "out.txt"]);
    assert_eq!(fs::read(d.join("out.txt")).unwrap(), fs::read(d.join("msg.txt")).unwrap());

    // the key-and-package form of transform gives the same result
    let first = fs::read(d.join("transformed.bin")).unwrap();
    ok(d, &["transform", "--tk", "tk.bin", "--package", "package.bin", "--out", "alt"]);
    assert_eq!(fs::read(d.join("alt/transformed.bin")).unwrap(), first);
}

#[test]
fn unsatisfied_key_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    ok(d, &["keygen", "--pk", "pk.bin", "--msk", "msk.bin", "--attrs", "A", "--out", "weak"]);
    ok(d, &["tkgen", "--sk", "weak/sk.bin", "--out", "weak"]);
    let out = poabe(d, &["transform", "--tk", "weak/tk.bin", "--package", "package.bin", "--out", "weak"]);
    assert_eq!(code(&out), 3);
    assert!(!d.join("weak/transformed.bin").exists());
    assert_eq!(code(&poabe(d, &["task-data", "--package", "package.bin", "--tk", "weak/tk.bin"])), 3);
}

#[test]
fn wrong_retrieve_key_fails_authentication() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    ok(d, &["tkgen", "--sk", "sk.bin", "--seed", "99", "--out", "other"]);
    let out = poabe(d, &["retrieve", "--package", "package.bin", "--transformed", "transformed.bin", "--rk", "other/rk.bin", "--output", "x"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn corrupt_input_file_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    prepare(d);
    let mut bytes = fs::read(d.join("tk.bin")).unwrap();
    bytes.truncate(bytes.len() - 1);
    fs::write(d.join("tk.bin"), bytes).unwrap();
    assert_eq!(code(&poabe(d, &["transform", "--tk", "tk.bin", "--package", "package.bin"])), 5);
    assert_eq!(code(&poabe(d, &["transform"])), 2);
}

#[test]
fn store_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("blob"), b"some bytes").unwrap();
    let h = ok(d, &["store-put", "--store", "s", "blob"]).trim().to_string();
    assert_eq!(h.len(), 64);
    assert!(d.join("s").join(&h[..2]).join(&h).is_file());
    ok(d, &["store-get", "--store", "s", &h, "--output", "back"]);
    assert_eq!(fs::read(d.join("back")).unwrap(), b"some bytes");
    assert_eq!(code(&poabe(d, &["store-get", "--store", "s", &"0".repeat(64), "--output", "x"])), 5);
}

#[test]
fn ledger_dispute_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let hash = prepare(d);
    fs::write(d.join("params.conf"), "t_cw = 10\nt_rw = 5\n").unwrap();
    ok(d, &["ledger-init", "--params", "params.conf", "--account", "du=100", "--account", "s=20", "--account", "w=3"]);
    ok(d, &["ledger-register-dcs", "--caller", "s", "--deposit", "5"]);
    assert!(ok(d, &["ledger-create-task", "--caller", "du", "--data-hash", &hash, "--reward", "10"]).contains("task 0"));
    ok(d, &["ledger-submit-result", "--caller", "s", "--task", "0", "--transformed", "transformed.bin"]);
    ok(d, &["ledger-challenge", "--caller", "w", "--task", "0", "--stake", "1"]);

    // a proof for a different result is refused
    ok(d, &["keygen", "--pk", "pk.bin", "--msk", "msk.bin", "--attrs", "A,B", "--out", "o", "--seed", "8"]);
    ok(d, &["tkgen", "--sk", "o/sk.bin", "--out", "o"]);
    ok(d, &["task-data", "--package", "package.bin", "--tk", "o/tk.bin", "--out", "o"]);
    ok(d, &["transform", "--task", "o/task.bin", "--out", "o"]);
    ok(d, &["prove", "--task", "o/task.bin", "--transformed", "o/transformed.bin", "--out", "o"]);
    assert_eq!(code(&poabe(d, &["ledger-respond", "--caller", "s", "--task", "0", "--proof", "o/proof.bin"])), 7);

    ok(d, &["prove", "--task", "task.bin", "--transformed", "transformed.bin"]);
    assert_eq!(code(&poabe(d, &["ledger-respond", "--caller", "w", "--task", "0", "--proof", "proof.bin"])), 6);
    ok(d, &["ledger-respond", "--caller", "s", "--task", "0", "--proof", "proof.bin"]);
    ok(d, &["ledger-claim-task-reward", "--caller", "s", "--task", "0"]);
    ok(d, &["ledger-unregister-dcs", "--caller", "s"]);
    let show = ok(d, &["ledger-show"]);
    assert!(show.contains("account s 31"), "{show}");
    assert!(show.contains("account w 2"), "{show}");
    assert!(show.contains("task 0 Finalized"), "{show}");
    let log = ok(d, &["ledger-show", "--log"]);
    assert!(log.contains("rejected:StatementMismatch"), "{log}");
    assert!(log.contains("err:wrong-caller"), "{log}");
}

#[test]
fn ledger_slash_path_and_clock() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["ledger-init", "--account", "du=50", "--account", "s=5"]);
    ok(d, &["ledger-register-dcs", "--caller", "s", "--deposit", "5"]);
    ok(d, &["ledger-create-task", "--caller", "du", "--data-hash", &"ab".repeat(32), "--reward", "2.5"]);
    assert_eq!(code(&poabe(d, &["ledger-unregister-dcs", "--caller", "du"])), 6);
    // an arbitrary result file for the opaque task
    let tmp = tempfile::tempdir().unwrap();
    prepare(tmp.path());
    fs::copy(tmp.path().join("transformed.bin"), d.join("t.bin")).unwrap();
    ok(d, &["ledger-submit-result", "--caller", "s", "--task", "0", "--transformed", "t.bin"]);
    ok(d, &["ledger-challenge", "--caller", "du", "--task", "0", "--stake", "1"]);
    assert_eq!(code(&poabe(d, &["ledger-claim-challenge-reward", "--caller", "du", "--task", "0"])), 6);
    ok(d, &["ledger-advance-time", "--ticks", "51"]);
    ok(d, &["ledger-claim-challenge-reward", "--caller", "du", "--task", "0"]);
    let show = ok(d, &["ledger-show"]);
    assert!(show.contains("now 51  supply 55"), "{show}");
    assert!(show.contains("account du 55"), "{show}");
    assert!(show.contains("task 0 Slashed"), "{show}");
}

#[test]
fn scenario_logs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = ok(d, &["scenario", "happy", "--seed", "7"]);
    let b = ok(d, &["scenario", "happy", "--seed", "7"]);
    assert_eq!(a, b);
    assert!(a.contains("claim_task_reward"));
    ok(d, &["scenario", "challenge-corrupt", "--seed", "7", "--save", "--out", "logs"]);
    let saved = fs::read_to_string(d.join("logs/challenge-corrupt.log")).unwrap();
    assert!(saved.contains("claim_challenge_reward"), "{saved}");
    assert_eq!(code(&poabe(d, &["scenario", "no-such"])), 2);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["bench", "--reps", "2", "--min", "1", "--max", "3", "--step", "2", "--algorithms", "retrieve,transform"]);
    assert!(out.contains("transform"));
    let csv = fs::read_to_string(d.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(code(&poabe(d, &["bench", "--algorithms", "nope"])), 2);
}
