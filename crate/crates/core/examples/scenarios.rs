//! Runs every protocol scenario and prints payoffs; pass a scenario name to
//! print its full transcript instead.
//!
//! ```text
//! cargo run --example scenarios
//! cargo run --example scenarios -- challenge-corrupt 7
//! ```

use poabe::harness::{run_named, run_self_challenge_case, ScenarioConfig, SCENARIOS};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next();
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = ScenarioConfig::with_seed(seed);

    if let Some(name) = name {
        for run in run_named(&name, &cfg).expect("known scenario") {
            print!("{}", run.transcript());
        }
        return;
    }

    for name in SCENARIOS {
        for run in run_named(name, &cfg).expect("scenario runs") {
            let payoffs: Vec<String> = run.payoffs.iter().map(|(who, p)| format!("{who} {p}")).collect();
            println!(
                "{:<26} {} states {:?} | {}",
                run.name,
                if run.passed() { "ok  " } else { "FAIL" },
                run.task_states,
                payoffs.join(", ")
            );
        }
    }
    print!("{}", run_self_challenge_case(&cfg).expect("runs").summary());
}
