//! Command-line front end. Keys, ciphertexts and proofs are canonical-encoding
//! files; ledger commands read and rewrite a JSON state file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use poabe::abe::{
    hybrid_decrypt, hybrid_encrypt, keygen, retrieve, setup, tkgen, transform, AbeError, HybridPackage,
    MasterKey, PublicKey, RetrieveKey, SecretKey, TransformKey, TransformedCiphertext,
};
use poabe::encoding::{Canonical, DecodeError};
use poabe::group::{Gt, RandomTape};
use poabe::harness::{self, Algorithm, BenchConfig, ScenarioConfig};
use poabe::ledger::{Amount, Ledger, LedgerError, LedgerParams, ParamsError, RespondOutcome, TaskId};
use poabe::policy::{find_coefficients, parse_policy, PolicyParseError};
use poabe::proof::{preprocess, prove, statement_for, ProofBundle, ProofError, Statement, Witness, TRANSFORM_RELATION};
use poabe::store::{BlobStore, ContentHash, DirStore, StoreError, TaskData};

const EXIT_UNSATISFIED: u8 = 3;
const EXIT_AUTH: u8 = 4;
const EXIT_DATA: u8 = 5;
const EXIT_LEDGER: u8 = 6;
const EXIT_REJECTED: u8 = 7;
const EXIT_SCENARIO: u8 = 8;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
enum CliError {
    #[error("attribute set does not satisfy the policy")]
    Unsatisfied,
    #[error("payload failed authentication")]
    Authentication,
    #[error("{0}")]
    Data(String),
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
    #[error("proof rejected by the contract")]
    Rejected,
    #[error("scenario failed")]
    ScenarioFailed,
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Unsatisfied => EXIT_UNSATISFIED,
            CliError::Authentication => EXIT_AUTH,
            CliError::Data(_) => EXIT_DATA,
            CliError::Ledger(_) => EXIT_LEDGER,
            CliError::Rejected => EXIT_REJECTED,
            CliError::ScenarioFailed => EXIT_SCENARIO,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

impl From<AbeError> for CliError {
    fn from(e: AbeError) -> Self {
        match e {
            AbeError::Unsatisfied | AbeError::AttributeMismatch { .. } | AbeError::RowOutOfRange(_) => {
                CliError::Unsatisfied
            }
            AbeError::AuthenticationFailure => CliError::Authentication,
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(DecodeError, StoreError, std::io::Error, serde_json::Error, ProofError);

impl From<PolicyParseError> for CliError {
    fn from(e: PolicyParseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "poabe", version, about = "CP-ABE with payable outsourced decryption")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Ledger parameter file (key = value lines).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct LedgerArgs {
    /// Ledger state file.
    #[arg(long, default_value = "ledger.json")]
    state: PathBuf,
    /// Account issuing the transaction.
    #[arg(long)]
    caller: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Writes pk.bin and msk.bin.
    Setup,
    /// Issues sk.bin for a comma-separated attribute list.
    Keygen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        msk: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        attrs: Vec<String>,
    },
    /// Hybrid-encrypts a file under a policy into package.bin.
    Encrypt {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long)]
        input: PathBuf,
    },
    /// Writes tk.bin and rk.bin.
    Tkgen {
        #[arg(long)]
        sk: PathBuf,
    },
    /// Builds task.bin (ciphertext, transform key, coefficients) and prints its hash.
    TaskData {
        #[arg(long)]
        package: PathBuf,
        #[arg(long)]
        tk: PathBuf,
    },
    /// Server-side partial decryption into transformed.bin.
    Transform {
        /// Task data file; alternatively pass --tk and --package.
        #[arg(long, conflicts_with_all = ["tk", "package"])]
        task: Option<PathBuf>,
        #[arg(long, requires = "package")]
        tk: Option<PathBuf>,
        #[arg(long, requires = "tk")]
        package: Option<PathBuf>,
    },
    /// Finishes decryption and writes the plaintext.
    Retrieve {
        #[arg(long)]
        package: PathBuf,
        #[arg(long)]
        transformed: PathBuf,
        #[arg(long)]
        rk: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Writes proof.bin for a task and its transform result, printing the statement.
    Prove {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        transformed: PathBuf,
    },
    /// Stores a file and prints its content hash.
    StorePut {
        #[arg(long)]
        store: PathBuf,
        file: PathBuf,
    },
    /// Fetches a blob by hash.
    StoreGet {
        #[arg(long)]
        store: PathBuf,
        hash: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Creates a ledger state file with genesis balances (name=amount).
    LedgerInit {
        #[arg(long, default_value = "ledger.json")]
        state: PathBuf,
        #[arg(long = "account", value_name = "NAME=AMOUNT")]
        accounts: Vec<String>,
    },
    LedgerRegisterDcs {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        deposit: Amount,
    },
    LedgerUnregisterDcs {
        #[command(flatten)]
        l: LedgerArgs,
    },
    LedgerCreateTask {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        data_hash: String,
        #[arg(long)]
        reward: Amount,
    },
    /// Submits `T` from a transformed-ciphertext file. The statement is
    /// recomputed from the on-chain data hash unless given.
    LedgerSubmitResult {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        task: TaskId,
        #[arg(long)]
        transformed: PathBuf,
        #[arg(long)]
        statement: Option<String>,
    },
    LedgerChallenge {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        task: TaskId,
        #[arg(long)]
        stake: Amount,
    },
    LedgerRespond {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        task: TaskId,
        #[arg(long)]
        proof: PathBuf,
    },
    LedgerClaimTaskReward {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        task: TaskId,
    },
    LedgerClaimChallengeReward {
        #[command(flatten)]
        l: LedgerArgs,
        #[arg(long)]
        task: TaskId,
    },
    LedgerAdvanceTime {
        #[arg(long, default_value = "ledger.json")]
        state: PathBuf,
        #[arg(long)]
        ticks: u64,
    },
    /// Prints balances, stakes and tasks; with --log, the transaction log.
    LedgerShow {
        #[arg(long, default_value = "ledger.json")]
        state: PathBuf,
        #[arg(long)]
        log: bool,
    },
    /// Runs a named protocol scenario and prints its transcript.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(harness::SCENARIOS))]
        name: String,
        #[arg(long, default_value_t = 5)]
        n_attrs: usize,
        /// Write the transcript to <out>/<name>.log instead of stdout.
        #[arg(long)]
        save: bool,
    },
    /// Timing sweep; writes bench.csv and prints a table of means.
    Bench {
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 5)]
        min: usize,
        #[arg(long, default_value_t = 60)]
        max: usize,
        #[arg(long, default_value_t = 5)]
        step: usize,
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
    },
}

fn read<T: Canonical>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    T::from_canonical_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write<T: Canonical>(dir: &Path, name: &str, v: &T) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, v.to_canonical_bytes())?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn load_params(path: &Option<PathBuf>) -> Result<LedgerParams, CliError> {
    match path {
        Some(p) => Ok(LedgerParams::from_config_str(&fs::read_to_string(p)?)?),
        None => Ok(LedgerParams::default()),
    }
}

fn load_ledger(path: &Path) -> Result<Ledger, CliError> {
    Ok(Ledger::from_json(&fs::read_to_string(path)?)?)
}

fn save_ledger(path: &Path, ledger: &Ledger) -> CliResult {
    fs::write(path, ledger.to_json())?;
    if let Some(rec) = ledger.log().last() {
        println!("{rec}");
    }
    Ok(())
}

/// Applies one ledger operation; the state file is rewritten even when the
/// transaction fails so the failure stays in the log.
fn with_ledger<T>(path: &Path, f: impl FnOnce(&mut Ledger) -> Result<T, LedgerError>) -> Result<T, CliError> {
    let mut ledger = load_ledger(path)?;
    let out = f(&mut ledger);
    save_ledger(path, &ledger)?;
    Ok(out?)
}

fn hash_arg(s: &str) -> Result<ContentHash, CliError> {
    ContentHash::from_hex(s).ok_or_else(|| CliError::Usage(format!("invalid hash {s:?}")))
}

fn run(cli: Cli) -> CliResult {
    let mut tape = RandomTape::from_u64(cli.seed);
    let out = cli.out.as_path();
    match cli.cmd {
        Cmd::Setup => {
            let (pk, msk) = setup(&mut tape);
            write(out, "pk.bin", &pk)?;
            write(out, "msk.bin", &msk)?;
        }
        Cmd::Keygen { pk, msk, attrs } => {
            let pk: PublicKey = read(&pk)?;
            let msk: MasterKey = read(&msk)?;
            let sk = keygen(&pk, &msk, &attrs.into_iter().collect(), &mut tape)?;
            write(out, "sk.bin", &sk)?;
        }
        Cmd::Encrypt { pk, policy, input } => {
            let pk: PublicKey = read(&pk)?;
            let policy = parse_policy(&policy)?;
            let pkg = hybrid_encrypt(&pk, &policy, &fs::read(input)?, &mut tape);
            write(out, "package.bin", &pkg)?;
        }
        Cmd::Tkgen { sk } => {
            let sk: SecretKey = read(&sk)?;
            let (tk, rk) = tkgen(&sk, &mut tape);
            write(out, "tk.bin", &tk)?;
            write(out, "rk.bin", &rk)?;
        }
        Cmd::TaskData { package, tk } => {
            let pkg: HybridPackage = read(&package)?;
            let tk: TransformKey = read(&tk)?;
            let w = find_coefficients(&pkg.ct.policy, &tk.attrs()).ok_or(CliError::Unsatisfied)?;
            let data = TaskData { ct: pkg.ct, tk, w };
            write(out, "task.bin", &data)?;
            println!("{}", data.content_hash());
        }
        Cmd::Transform { task, tk, package } => {
            let (ct, tk, w) = match (task, tk, package) {
                (Some(task), _, _) => {
                    let d: TaskData = read(&task)?;
                    (d.ct, d.tk, Some(d.w))
                }
                (None, Some(tk), Some(pkg)) => (read::<HybridPackage>(&pkg)?.ct, read(&tk)?, None),
                _ => return Err(CliError::Usage("pass --task or both --tk and --package".into())),
            };
            let w = match w {
                Some(w) => w,
                None => find_coefficients(&ct.policy, &tk.attrs()).ok_or(CliError::Unsatisfied)?,
            };
            let ct_t = transform(&tk, &ct, &w)?;
            write(out, "transformed.bin", &ct_t)?;
        }
        Cmd::Retrieve { package, transformed, rk, output } => {
            let pkg: HybridPackage = read(&package)?;
            let ct_t: TransformedCiphertext = read(&transformed)?;
            let rk: RetrieveKey = read(&rk)?;
            let plaintext = hybrid_decrypt(&pkg, &retrieve(&ct_t, &rk))?;
            fs::write(&output, plaintext)?;
            println!("wrote {}", output.display());
        }
        Cmd::Prove { task, transformed } => {
            let d: TaskData = read(&task)?;
            let ct_t: TransformedCiphertext = read(&transformed)?;
            let witness = Witness {
                ct: d.ct,
                tk: d.tk,
                w: d.w,
                t: ct_t.t,
            };
            let x = witness.statement();
            let (pk, _) = preprocess(TRANSFORM_RELATION)?;
            write(out, "proof.bin", &prove(&pk, &x, &witness)?)?;
            println!("{x}");
        }
        Cmd::StorePut { store, file } => {
            let h = DirStore::open(store)?.put(&fs::read(file)?)?;
            println!("{h}");
        }
        Cmd::StoreGet { store, hash, output } => {
            let bytes = DirStore::open(store)?.get(&hash_arg(&hash)?)?;
            fs::write(&output, bytes)?;
            println!("wrote {}", output.display());
        }
        Cmd::LedgerInit { state, accounts } => {
            let params = load_params(&cli.params)?;
            let mut genesis = Vec::new();
            for a in accounts {
                let (name, amount) = a
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("expected NAME=AMOUNT, got {a:?}")))?;
                let amount: Amount = amount.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
                genesis.push((name.to_string(), amount));
            }
            let (_, vk) = preprocess(TRANSFORM_RELATION)?;
            let ledger = Ledger::new(params, &vk, genesis)?;
            fs::write(&state, ledger.to_json())?;
            println!("wrote {}", state.display());
        }
        Cmd::LedgerRegisterDcs { l, deposit } => {
            with_ledger(&l.state, |g| g.register_dcs(&l.caller, deposit))?;
        }
        Cmd::LedgerUnregisterDcs { l } => {
            with_ledger(&l.state, |g| g.unregister_dcs(&l.caller))?;
        }
        Cmd::LedgerCreateTask { l, data_hash, reward } => {
            let h = hash_arg(&data_hash)?;
            let id = with_ledger(&l.state, |g| g.create_task(&l.caller, h, reward))?;
            println!("task {id}");
        }
        Cmd::LedgerSubmitResult { l, task, transformed, statement } => {
            let t: Gt = read::<TransformedCiphertext>(&transformed)?.t;
            let x = match statement {
                Some(s) => Statement::from_hex(&s).ok_or_else(|| CliError::Usage("invalid statement".into()))?,
                None => {
                    let g = load_ledger(&l.state)?;
                    let h = g.task(task).ok_or(LedgerError::UnknownTask(task))?.data_hash;
                    statement_for(&h, &t)
                }
            };
            with_ledger(&l.state, |g| g.submit_result(&l.caller, task, x, t))?;
        }
        Cmd::LedgerChallenge { l, task, stake } => {
            with_ledger(&l.state, |g| g.challenge(&l.caller, task, stake))?;
        }
        Cmd::LedgerRespond { l, task, proof } => {
            let proof: ProofBundle = read(&proof)?;
            if with_ledger(&l.state, |g| g.respond(&l.caller, task, proof))? == RespondOutcome::Rejected {
                return Err(CliError::Rejected);
            }
        }
        Cmd::LedgerClaimTaskReward { l, task } => {
            with_ledger(&l.state, |g| g.claim_task_reward(&l.caller, task))?;
        }
        Cmd::LedgerClaimChallengeReward { l, task } => {
            with_ledger(&l.state, |g| g.claim_challenge_reward(&l.caller, task))?;
        }
        Cmd::LedgerAdvanceTime { state, ticks } => {
            with_ledger(&state, |g| {
                g.advance_time(ticks);
                Ok(())
            })?;
        }
        Cmd::LedgerShow { state, log } => {
            let g = load_ledger(&state)?;
            if log {
                print!("{}", g.export_log());
                return Ok(());
            }
            println!("now {}  supply {}", g.now(), g.total_supply());
            for (id, bal) in &g.state().accounts {
                println!("account {id} {bal}");
            }
            for (id, rec) in &g.state().dcs {
                println!(
                    "dcs {id} staked {} active {} pending {:?}",
                    rec.staked, rec.active, rec.pending_tasks
                );
            }
            for t in g.tasks() {
                println!(
                    "task {} {} reward {} creator {} solver {} data {}",
                    t.id,
                    t.state,
                    t.reward,
                    t.creator,
                    t.solver.as_deref().unwrap_or("-"),
                    t.content_hash()
                );
            }
        }
        Cmd::Scenario { name, n_attrs, save } => {
            let cfg = ScenarioConfig {
                seed: cli.seed,
                params: load_params(&cli.params)?,
                n_attrs,
                ..ScenarioConfig::default()
            };
            let runs = harness::run_named(&name, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
            let text: String = runs.iter().map(|r| r.transcript()).collect();
            if save {
                fs::create_dir_all(out)?;
                let path = out.join(format!("{name}.log"));
                fs::write(&path, &text)?;
                println!("wrote {}", path.display());
            } else {
                print!("{text}");
            }
            if !runs.iter().all(|r| r.passed()) {
                for r in &runs {
                    for c in r.failures() {
                        eprintln!("{}: check failed: {} {}", r.name, c.name, c.detail);
                    }
                }
                return Err(CliError::ScenarioFailed);
            }
        }
        Cmd::Bench { reps, min, max, step, algorithms } => {
            if step == 0 || min > max {
                return Err(CliError::Usage("empty attribute grid".into()));
            }
            let algorithms = if algorithms.is_empty() {
                Algorithm::ALL.to_vec()
            } else {
                algorithms
                    .iter()
                    .map(|a| a.parse::<Algorithm>().map_err(CliError::Usage))
                    .collect::<Result<_, _>>()?
            };
            let report = harness::bench(&BenchConfig {
                grid: (min..=max).step_by(step).collect(),
                reps,
                algorithms,
                seed: cli.seed,
            });
            fs::create_dir_all(out)?;
            let path = out.join("bench.csv");
            fs::write(&path, report.to_csv())?;
            print!("{}", report.to_table());
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
