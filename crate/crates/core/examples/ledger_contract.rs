//! The stake/challenge/response/claim contract driven by hand, followed by a
//! randomized run that checks supply conservation.

use poabe::group::gt;
use poabe::harness::fuzz_ledger;
use poabe::ledger::{Amount, Ledger, LedgerParams};
use poabe::proof::{preprocess, statement_for, TRANSFORM_RELATION};
use poabe::store::ContentHash;

fn main() {
    let params = LedgerParams::from_config_str(
        "# short windows for the demo\nt_cw = 10\nt_rw = 5\nslash_split_challenger = 1/2\n",
    )
    .expect("valid params");
    let (_, vk) = preprocess(TRANSFORM_RELATION).expect("known relation");
    let genesis = [("alice", 100), ("server", 20), ("watcher", 10)]
        .map(|(who, n)| (who.to_string(), Amount::tokens(n)));
    let mut chain = Ledger::new(params, &vk, genesis).expect("valid");

    chain.register_dcs("server", Amount::tokens(5)).unwrap();
    let data = ContentHash([7; 32]);
    let task = chain.create_task("alice", data, Amount::tokens(10)).unwrap();

    // the server posts a result it will not be able to prove
    let t = gt();
    chain.submit_result("server", task, statement_for(&data.0, &t), t).unwrap();
    chain.challenge("watcher", task, Amount::tokens(1)).unwrap();
    chain.advance_time(5);
    println!("early claim: {:?}", chain.claim_challenge_reward("watcher", task));
    chain.advance_time(1);
    chain.claim_challenge_reward("watcher", task).unwrap();

    print!("{}", chain.export_log());
    for who in ["alice", "server", "watcher"] {
        println!("{who:>8} balance {} stake {}", chain.balance(who), chain.stake(who));
    }
    println!("supply {}", chain.total_supply());

    let report = fuzz_ledger(1, 2_000);
    println!(
        "fuzz: {} steps, {} ok, {} rejected by rules, conservation held: {}",
        report.steps,
        report.succeeded,
        report.failed,
        report.passed()
    );
}
