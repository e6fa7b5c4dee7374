//! Actors, end-to-end protocol scenarios, a randomized ledger fuzzer and the
//! timing sweep.
//!
//! Every scenario runs a fresh [`World`] seeded from a single `u64`: one
//! random tape forked per actor, one blob store, one ledger. The ledger log
//! and the event transcript are pure functions of the seed and parameters.
//!
//! Actors:
//! - data owner: encrypts a payload under a policy and publishes the package;
//! - data user: holds the attribute key, outsources a task, finishes
//!   decryption and challenges when the payload fails to authenticate;
//! - decryption server: stakes, fetches task data by hash, submits a result
//!   according to its [`SolverStrategy`], answers challenges with a proof;
//! - public challenger: recomputes `T` from public task data and disputes
//!   mismatches.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::abe::{
    check_coefficients, encapsulate, hybrid_decrypt, hybrid_encrypt, keygen, retrieve, setup, tkgen,
    transform, AbeError, Ciphertext, HybridPackage, MasterKey, PublicKey, RetrieveKey, SecretKey,
    TransformKey, TransformedCiphertext,
};
use crate::encoding::{Canonical, DecodeError};
use crate::group::{sha256, Gt, RandomTape};
use crate::ledger::{
    Amount, Ledger, LedgerError, LedgerParams, Payoff, RespondOutcome, TaskId, TaskState, Transaction,
};
use crate::policy::{attribute_set, find_coefficients, PolicyFormula, ReconstructionCoefficients};
use crate::proof::{
    preprocess, prove, statement_for, ProofBundle, ProofError, ProvingKey, Statement, Witness,
    TRANSFORM_RELATION,
};
use crate::store::{BlobStore, ContentHash, DirStore, MemoryStore, StoreError, TaskData};

pub const DATA_OWNER: &str = "data-owner";
pub const DATA_USER: &str = "data-user";
pub const SERVER: &str = "dcs-1";
pub const CHALLENGER: &str = "public-challenger";

/// How a decryption server produces `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStrategy {
    Honest,
    /// Computes the product, then multiplies it by a random target-group element.
    CorruptT,
    /// Skips the work and submits a random target-group element.
    RandomT,
}

impl fmt::Display for SolverStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverStrategy::Honest => "honest",
            SolverStrategy::CorruptT => "corrupt_T",
            SolverStrategy::RandomT => "random_T",
        })
    }
}

impl FromStr for SolverStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "honest" => Ok(SolverStrategy::Honest),
            "corrupt_t" | "corrupt" => Ok(SolverStrategy::CorruptT),
            "random_t" | "random" | "lazy" => Ok(SolverStrategy::RandomT),
            _ => Err(format!("unknown solver strategy {s:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
    #[error("abe: {0}")]
    Abe(#[from] AbeError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("proof: {0}")]
    Proof(#[from] ProofError),
    #[error("{0}")]
    Unexpected(String),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub params: LedgerParams,
    /// Attribute count of the AND policy used by the owner.
    pub n_attrs: usize,
    /// Blob store directory; in-memory when absent.
    pub store_dir: Option<PathBuf>,
    pub reward: Amount,
    pub payload_len: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 7,
            params: LedgerParams::default(),
            n_attrs: 5,
            store_dir: None,
            reward: Amount::tokens(10),
            payload_len: 1024,
        }
    }
}

impl ScenarioConfig {
    pub fn with_seed(seed: u64) -> Self {
        ScenarioConfig {
            seed,
            ..Self::default()
        }
    }

    fn genesis(&self) -> Vec<(String, Amount)> {
        let p = &self.params;
        vec![
            (DATA_OWNER.to_string(), Amount::ZERO),
            (DATA_USER.to_string(), self.reward + self.reward + p.min_deposit_challenger * 4),
            (SERVER.to_string(), p.min_deposit_dcs * 4),
            (CHALLENGER.to_string(), p.min_deposit_challenger * 4),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Narrative of actor actions, one per line.
    pub events: Vec<String>,
    /// Tab-separated ledger transaction log.
    pub ledger_log: String,
    pub log_hash: [u8; 32],
    /// Net worth change per account (balance plus stake) against genesis.
    pub payoffs: BTreeMap<String, Payoff>,
    pub task_states: Vec<TaskState>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn payoff(&self, account: &str) -> Payoff {
        self.payoffs.get(account).copied().unwrap_or_default()
    }

    /// Events, checks and ledger log as one line-delimited document.
    pub fn transcript(&self) -> String {
        let mut out = format!("# scenario {} seed {}\n", self.name, self.seed);
        for e in &self.events {
            out.push_str(&format!("event\t{e}\n"));
        }
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("check\t{status}\t{}\t{}\n", c.name, c.detail));
        }
        for (who, p) in &self.payoffs {
            out.push_str(&format!("payoff\t{who}\t{p}\n"));
        }
        out.push_str(&self.ledger_log);
        out.push_str(&format!("# log_hash {}\n", hex::encode(self.log_hash)));
        out
    }
}

/// Everything a scenario touches.
pub struct World {
    name: String,
    seed: u64,
    pub tape: RandomTape,
    pub pk: PublicKey,
    msk: MasterKey,
    pub proving_key: ProvingKey,
    pub store: Box<dyn BlobStore>,
    pub ledger: Ledger,
    genesis: BTreeMap<String, Amount>,
    events: Vec<String>,
    checks: Vec<Check>,
}

/// What the data user keeps after outsourcing a task.
#[derive(Debug, Clone)]
pub struct OutsourcedJob {
    pub package: ContentHash,
    pub data_hash: ContentHash,
    pub task: TaskId,
    pub rk: RetrieveKey,
    pub plaintext: Vec<u8>,
}

impl World {
    pub fn new(name: &str, cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let root = RandomTape::from_u64(cfg.seed);
        let mut tape = root.fork(name);
        let (pk, msk) = setup(&mut tape.fork("authority"));
        let (proving_key, vk) = preprocess(TRANSFORM_RELATION)?;
        let store: Box<dyn BlobStore> = match &cfg.store_dir {
            Some(dir) => Box::new(DirStore::open(dir)?),
            None => Box::new(MemoryStore::new()),
        };
        let genesis: BTreeMap<String, Amount> = cfg.genesis().into_iter().collect();
        let ledger = Ledger::new(cfg.params.clone(), &vk, genesis.clone())?;
        tape = tape.fork("actors");
        Ok(World {
            name: name.to_string(),
            seed: cfg.seed,
            tape,
            pk,
            msk,
            proving_key,
            store,
            ledger,
            genesis,
            events: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn event(&mut self, actor: &str, what: impl AsRef<str>) {
        self.events
            .push(format!("t={}\t{actor}\t{}", self.ledger.now(), what.as_ref()));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn net_worth(&self, id: &str) -> Amount {
        self.ledger.balance(id) + self.ledger.stake(id)
    }

    pub fn payoff(&self, id: &str) -> Payoff {
        Payoff::between(self.genesis.get(id).copied().unwrap_or_default(), self.net_worth(id))
    }

    fn genesis_supply(&self) -> Amount {
        self.genesis.values().copied().sum()
    }

    /// Issues an attribute key; the authority is the only holder of the
    /// master key.
    pub fn issue_key(&mut self, attrs: &[String]) -> Result<SecretKey, ScenarioError> {
        let mut tape = self.tape.fork("authority/keygen");
        Ok(keygen(&self.pk, &self.msk, &attribute_set(attrs.to_vec()), &mut tape)?)
    }

    /// Data owner: hybrid-encrypts a random payload and publishes it.
    pub fn owner_publish(&mut self, policy: &PolicyFormula, len: usize) -> Result<(ContentHash, Vec<u8>), ScenarioError> {
        let mut plaintext = vec![0u8; len];
        self.tape.fill(&mut plaintext[..]);
        let pkg = hybrid_encrypt(&self.pk, policy, &plaintext, &mut self.tape);
        let h = self.store.put(&pkg.to_canonical_bytes())?;
        self.event(DATA_OWNER, format!("publish package {h} policy \"{policy}\""));
        Ok((h, plaintext))
    }

    /// Data user: blinds its key, stores the task data and posts the task.
    pub fn user_outsource(
        &mut self,
        sk: &SecretKey,
        package: ContentHash,
        plaintext: Vec<u8>,
        reward: Amount,
    ) -> Result<OutsourcedJob, ScenarioError> {
        let pkg = HybridPackage::from_canonical_bytes(&self.store.get(&package)?)?;
        let (tk, rk) = tkgen(sk, &mut self.tape);
        let w = find_coefficients(&pkg.ct.policy, &tk.attrs()).ok_or(AbeError::Unsatisfied)?;
        let data = TaskData { ct: pkg.ct, tk, w };
        let data_hash = self.store.put(&data.to_canonical_bytes())?;
        let task = self.ledger.create_task(DATA_USER, data_hash, reward)?;
        self.event(DATA_USER, format!("create task {task} data {data_hash} reward {reward}"));
        Ok(OutsourcedJob {
            package,
            data_hash,
            task,
            rk,
            plaintext,
        })
    }

    fn task_data(&self, task: TaskId) -> Result<TaskData, ScenarioError> {
        let h = self.task_record(task)?.content_hash();
        Ok(TaskData::from_canonical_bytes(&self.store.get(&h)?)?)
    }

    fn task_record(&self, task: TaskId) -> Result<&crate::ledger::Task, ScenarioError> {
        self.ledger
            .task(task)
            .ok_or_else(|| ScenarioError::Unexpected(format!("task {task} missing")))
    }

    fn submitted_t(&self, task: TaskId) -> Result<Gt, ScenarioError> {
        let result = self.task_record(task)?.result.as_ref().ok_or_else(|| {
            ScenarioError::Unexpected(format!("task {task} has no result"))
        })?;
        Ok(Gt::from_canonical_bytes(&result.t)?)
    }

    pub fn server_register(&mut self, id: &str) -> Result<(), ScenarioError> {
        let deposit = self.ledger.params().min_deposit_dcs;
        self.ledger.register_dcs(id, deposit)?;
        self.event(id, format!("register with stake {deposit}"));
        Ok(())
    }

    /// Decryption server: fetches task data, checks the coefficients, computes
    /// `T` per strategy and submits. Returns `None` for tasks whose
    /// coefficients cannot be proven.
    pub fn server_solve(
        &mut self,
        id: &str,
        task: TaskId,
        strategy: SolverStrategy,
    ) -> Result<Option<Gt>, ScenarioError> {
        let data = self.task_data(task)?;
        if check_coefficients(&data.tk, &data.ct, &data.w).is_err() {
            self.event(id, format!("skip task {task}: coefficients do not verify"));
            return Ok(None);
        }
        let t = match strategy {
            SolverStrategy::Honest => transform(&data.tk, &data.ct, &data.w)?.t,
            SolverStrategy::CorruptT => transform(&data.tk, &data.ct, &data.w)?.t + self.tape.gt_element(),
            SolverStrategy::RandomT => self.tape.gt_element(),
        };
        let x = statement_for(&data.content_hash().0, &t);
        self.ledger.submit_result(id, task, x, t)?;
        self.event(id, format!("submit task {task} ({strategy}) statement {x}"));
        Ok(Some(t))
    }

    /// Data user: finishes decryption with the on-chain `T`.
    pub fn user_decrypt(&mut self, job: &OutsourcedJob) -> Result<Result<Vec<u8>, AbeError>, ScenarioError> {
        let pkg = HybridPackage::from_canonical_bytes(&self.store.get(&job.package)?)?;
        let ct_t = TransformedCiphertext {
            c: pkg.ct.c,
            t: self.submitted_t(job.task)?,
        };
        let key = retrieve(&ct_t, &job.rk);
        let out = hybrid_decrypt(&pkg, &key);
        match &out {
            Ok(p) => self.event(DATA_USER, format!("decrypt task {}: {} bytes recovered", job.task, p.len())),
            Err(e) => self.event(DATA_USER, format!("decrypt task {}: {e}", job.task)),
        }
        Ok(out)
    }

    /// Public challenger: recomputes `T` from the stored task data and reports
    /// whether the submitted value differs.
    pub fn public_audit(&mut self, task: TaskId) -> Result<bool, ScenarioError> {
        let data = self.task_data(task)?;
        let expected = transform(&data.tk, &data.ct, &data.w)?.t;
        let wrong = expected != self.submitted_t(task)?;
        self.event(
            CHALLENGER,
            format!("audit task {task}: {}", if wrong { "mismatch" } else { "consistent" }),
        );
        Ok(wrong)
    }

    pub fn challenge(&mut self, who: &str, task: TaskId) -> Result<(), ScenarioError> {
        let stake = self.ledger.params().min_deposit_challenger;
        self.ledger.challenge(who, task, stake)?;
        self.event(who, format!("challenge task {task} with stake {stake}"));
        Ok(())
    }

    /// Decryption server: reveals the witness for its own submitted `T`.
    pub fn server_respond(&mut self, id: &str, task: TaskId) -> Result<RespondOutcome, ScenarioError> {
        let data = self.task_data(task)?;
        let t = self.submitted_t(task)?;
        let x = self.task_record(task)?.result.as_ref().expect("submitted").statement();
        let witness = Witness {
            ct: data.ct,
            tk: data.tk,
            w: data.w,
            t,
        };
        let proof = prove(&self.proving_key, &x, &witness)?;
        let outcome = self.ledger.respond(id, task, proof)?;
        self.event(id, format!("respond task {task}: {outcome:?}"));
        Ok(outcome)
    }

    pub fn wait(&mut self, ticks: u64) {
        self.ledger.advance_time(ticks);
        self.event("clock", format!("advance {ticks}"));
    }

    /// Common opening: publish, outsource and register one server.
    fn open_task(&mut self, cfg: &ScenarioConfig) -> Result<OutsourcedJob, ScenarioError> {
        let attrs: Vec<String> = (0..cfg.n_attrs.max(1)).map(|i| format!("attr{i}")).collect();
        let policy = PolicyFormula::all_of(&attrs);
        let (package, plaintext) = self.owner_publish(&policy, cfg.payload_len)?;
        let sk = self.issue_key(&attrs)?;
        let job = self.user_outsource(&sk, package, plaintext, cfg.reward)?;
        self.server_register(SERVER)?;
        Ok(job)
    }

    fn leave(&mut self, id: &str) -> Result<(), ScenarioError> {
        if self.ledger.dcs(id).is_some() {
            self.ledger.unregister_dcs(id)?;
            self.event(id, "unregister");
        }
        Ok(())
    }

    pub fn finish(mut self) -> ScenarioReport {
        let supply = self.ledger.total_supply();
        let expected = self.genesis_supply();
        self.check(
            "token conservation",
            supply == expected,
            format!("supply {supply} genesis {expected}"),
        );
        let states: Vec<TaskState> = self.ledger.tasks().iter().map(|t| t.state).collect();
        self.check(
            "tasks terminal",
            states.iter().all(|s| s.is_terminal()),
            format!("{states:?}"),
        );
        let payoffs = self.genesis.keys().map(|id| (id.clone(), self.payoff(id))).collect();
        ScenarioReport {
            name: self.name,
            seed: self.seed,
            checks: self.checks,
            events: self.events,
            ledger_log: self.ledger.export_log(),
            log_hash: self.ledger.log_hash(),
            payoffs,
            task_states: states,
        }
    }
}

/// Happy path: result submitted, challenge window elapses, server claims,
/// data user decrypts.
pub fn run_happy_case(cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let mut w = World::new("happy", cfg)?;
    let job = w.open_task(cfg)?;
    w.server_solve(SERVER, job.task, SolverStrategy::Honest)?;
    let recovered = w.user_decrypt(&job)?;
    w.check(
        "plaintext recovered",
        recovered.as_ref().ok() == Some(&job.plaintext),
        format!("{} bytes", job.plaintext.len()),
    );
    let before = w.ledger.balance(SERVER);
    let t_cw = w.ledger.params().t_cw;
    w.wait(t_cw + 1);
    w.ledger.claim_task_reward(SERVER, job.task)?;
    w.event(SERVER, format!("claim reward for task {}", job.task));
    let gained = Payoff::between(before, w.ledger.balance(SERVER));
    w.check(
        "solver paid reward",
        gained == Payoff(cfg.reward.micro() as i128),
        format!("balance change {gained}"),
    );
    w.leave(SERVER)?;
    let solver = w.payoff(SERVER);
    w.check(
        "solver net equals reward",
        solver == Payoff(cfg.reward.micro() as i128),
        format!("net {solver}"),
    );
    Ok(w.finish())
}

/// Challenge path. Dishonest strategies are caught (by the data user through
/// authentication failure for `CorruptT`, by the public challenger through
/// recomputation for `RandomT`), cannot prove and are slashed. The honest
/// strategy faces a spurious public challenge and exonerates itself.
pub fn run_challenge_case(strategy: SolverStrategy, cfg: &ScenarioConfig) -> Result<ScenarioReport, ScenarioError> {
    let name = format!("challenge-{strategy}");
    let mut w = World::new(&name, cfg)?;
    let job = w.open_task(cfg)?;
    let p = w.ledger.params().clone();
    w.server_solve(SERVER, job.task, strategy)?;
    let decrypted = w.user_decrypt(&job)?;
    let audit_mismatch = w.public_audit(job.task)?;

    match strategy {
        SolverStrategy::Honest => {
            w.check("data user decrypts", decrypted.as_ref().ok() == Some(&job.plaintext), "");
            w.check("audit consistent", !audit_mismatch, "");
            w.wait(p.t_cw / 2);
            w.challenge(CHALLENGER, job.task)?;
            w.wait(p.t_rw / 2);
            let outcome = w.server_respond(SERVER, job.task)?;
            w.check("valid proof accepted", outcome == RespondOutcome::Accepted, format!("{outcome:?}"));
            w.check(
                "task responded",
                w.ledger.task(job.task).map(|t| t.state) == Some(TaskState::Responded),
                "",
            );
            w.ledger.claim_task_reward(SERVER, job.task)?;
            w.event(SERVER, format!("claim reward for task {}", job.task));
            w.leave(SERVER)?;
            let stake = Payoff(p.min_deposit_challenger.micro() as i128);
            let reward = Payoff(cfg.reward.micro() as i128);
            let (ch, sv) = (w.payoff(CHALLENGER), w.payoff(SERVER));
            w.check("failed challenger loses stake", ch == Payoff(-stake.0), format!("{ch}"));
            w.check("defender gains stake and reward", sv == Payoff(stake.0 + reward.0), format!("{sv}"));
        }
        SolverStrategy::CorruptT | SolverStrategy::RandomT => {
            let du_detects = matches!(decrypted, Err(AbeError::AuthenticationFailure));
            w.check("data user detects through authentication", du_detects, "");
            w.check("public challenger detects through recomputation", audit_mismatch, "");
            let challenger = if strategy == SolverStrategy::CorruptT { DATA_USER } else { CHALLENGER };
            w.challenge(challenger, job.task)?;
            let outcome = w.server_respond(SERVER, job.task)?;
            w.check("invalid proof rejected", outcome == RespondOutcome::Rejected, format!("{outcome:?}"));
            w.wait(p.t_rw + 1);
            let late = w.server_respond(SERVER, job.task);
            w.check(
                "late response refused",
                matches!(late, Err(ScenarioError::Ledger(LedgerError::WindowClosed))),
                "",
            );
            w.ledger.claim_challenge_reward(challenger, job.task)?;
            w.event(challenger, format!("claim challenge reward for task {}", job.task));
            w.check(
                "solver slashed",
                w.ledger.task(job.task).map(|t| t.state) == Some(TaskState::Slashed),
                "",
            );
            let fine = p.min_deposit_dcs;
            let share = fine.mul_ratio(p.slash_split_challenger);
            let (sv, du, ch) = (w.payoff(SERVER), w.payoff(DATA_USER), w.payoff(CHALLENGER));
            w.check("solver loses the fine", sv == Payoff(-(fine.micro() as i128)), format!("{sv}"));
            w.check("data user compensated", du.0 >= 0, format!("{du}"));
            w.check("successful challenger profits", w.payoff(challenger).0 > 0, format!("{}", w.payoff(challenger)));
            let expected_du = if challenger == DATA_USER { fine } else { fine - share };
            w.check(
                "data user settlement",
                du == Payoff(expected_du.micro() as i128),
                format!("{du}"),
            );
            if challenger == CHALLENGER {
                w.check("challenger share", ch == Payoff(share.micro() as i128), format!("{ch}"));
            }
            w.leave(SERVER)?;
        }
    }
    Ok(w.finish())
}

/// Payoffs of a server that disputes its own submissions.
#[derive(Debug, Clone)]
pub struct SelfChallengeReport {
    /// Honest result, nobody challenges.
    pub baseline: Payoff,
    /// Honest result, server challenges itself and responds.
    pub honest_self_challenge: Payoff,
    /// Corrupt result, server challenges itself and claims the challenge.
    pub corrupt_self_challenge: Payoff,
    /// Corrupt result, the data user challenges instead (reference point).
    pub corrupt_challenged_by_user: Payoff,
    pub runs: Vec<ScenarioReport>,
}

impl SelfChallengeReport {
    /// Gain from self-challenging an honest result versus not challenging.
    pub fn honest_delta(&self) -> Payoff {
        Payoff(self.honest_self_challenge.0 - self.baseline.0)
    }

    pub fn passed(&self) -> bool {
        self.runs.iter().all(ScenarioReport::passed)
            && self.honest_delta().0 <= 0
            && self.corrupt_self_challenge.0 < 0
    }

    pub fn summary(&self) -> String {
        format!(
            "baseline {}\nhonest self-challenge {} (delta {})\ncorrupt self-challenge {}\ncorrupt challenged by user {}\n",
            self.baseline,
            self.honest_self_challenge,
            self.honest_delta(),
            self.corrupt_self_challenge,
            self.corrupt_challenged_by_user
        )
    }
}

pub fn run_self_challenge_case(cfg: &ScenarioConfig) -> Result<SelfChallengeReport, ScenarioError> {
    let baseline = run_happy_case(cfg)?;

    let mut w = World::new("self-challenge-honest", cfg)?;
    let job = w.open_task(cfg)?;
    w.server_solve(SERVER, job.task, SolverStrategy::Honest)?;
    w.challenge(SERVER, job.task)?;
    let outcome = w.server_respond(SERVER, job.task)?;
    w.check("own honest result proves", outcome == RespondOutcome::Accepted, "");
    w.ledger.claim_task_reward(SERVER, job.task)?;
    w.leave(SERVER)?;
    let honest = w.finish();

    let mut w = World::new("self-challenge-corrupt", cfg)?;
    let job = w.open_task(cfg)?;
    w.server_solve(SERVER, job.task, SolverStrategy::CorruptT)?;
    w.challenge(SERVER, job.task)?;
    let decrypted = w.user_decrypt(&job)?;
    w.check("data user still detects", decrypted.is_err(), "");
    let second = w.challenge(DATA_USER, job.task);
    w.check(
        "one challenger per task",
        matches!(second, Err(ScenarioError::Ledger(LedgerError::WrongState { .. }))),
        "",
    );
    let p = w.ledger.params().clone();
    w.wait(p.t_rw + 1);
    w.ledger.claim_challenge_reward(SERVER, job.task)?;
    w.event(SERVER, "claim challenge reward against itself");
    w.leave(SERVER)?;
    let corrupt = w.finish();

    let by_user = run_challenge_case(SolverStrategy::CorruptT, cfg)?;

    Ok(SelfChallengeReport {
        baseline: baseline.payoff(SERVER),
        honest_self_challenge: honest.payoff(SERVER),
        corrupt_self_challenge: corrupt.payoff(SERVER),
        corrupt_challenged_by_user: by_user.payoff(SERVER),
        runs: vec![baseline, honest, corrupt, by_user],
    })
}

/// Named scenarios for the command line.
pub const SCENARIOS: &[&str] = &[
    "happy",
    "challenge-honest",
    "challenge-corrupt",
    "challenge-random",
    "self-challenge",
];

pub fn run_named(name: &str, cfg: &ScenarioConfig) -> Result<Vec<ScenarioReport>, ScenarioError> {
    Ok(match name {
        "happy" => vec![run_happy_case(cfg)?],
        "challenge-honest" => vec![run_challenge_case(SolverStrategy::Honest, cfg)?],
        "challenge-corrupt" => vec![run_challenge_case(SolverStrategy::CorruptT, cfg)?],
        "challenge-random" => vec![run_challenge_case(SolverStrategy::RandomT, cfg)?],
        "self-challenge" => run_self_challenge_case(cfg)?.runs,
        other => return Err(ScenarioError::Unexpected(format!("unknown scenario {other:?}"))),
    })
}

/// Honest task material used by the fuzzer to exercise accepting proofs.
struct FuzzTask {
    data_hash: ContentHash,
    t: Gt,
    proof: ProofBundle,
    /// A wrong result and a proof whose statement matches it but whose
    /// product check fails.
    bad_t: Gt,
    bad_proof: ProofBundle,
}

fn fuzz_pool(tape: &mut RandomTape, pk_proving: &ProvingKey) -> Vec<FuzzTask> {
    let (pk, msk) = setup(tape);
    (1..=3)
        .map(|n| {
            let attrs: Vec<String> = (0..n).map(|i| format!("f{i}")).collect();
            let sk = keygen(&pk, &msk, &attribute_set(attrs.clone()), tape).expect("non-empty");
            let (tk, _) = tkgen(&sk, tape);
            let (ct, _) = encapsulate(&pk, &PolicyFormula::all_of(&attrs), tape);
            let w = find_coefficients(&ct.policy, &tk.attrs()).expect("satisfied");
            let t = transform(&tk, &ct, &w).expect("valid").t;
            let mut witness = Witness { ct, tk, w, t };
            let x = witness.statement();
            let proof = prove(pk_proving, &x, &witness).expect("honest witness");
            let bad_t = t + tape.gt_element();
            witness.t = bad_t;
            let bad_proof = prove(pk_proving, &witness.statement(), &witness).expect("matching statement");
            FuzzTask {
                data_hash: ContentHash(crate::proof::task_data_hash(&witness.ct, &witness.tk, &witness.w)),
                t,
                proof,
                bad_t,
                bad_proof,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct FuzzReport {
    pub steps: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub accepted_proofs: usize,
    pub rejected_proofs: usize,
    /// Steps after which total supply differed from genesis.
    pub conservation_violations: Vec<usize>,
    /// Steps that moved a task along an edge outside the lifecycle.
    pub illegal_transitions: Vec<usize>,
    /// Steps after which some server record broke its invariants.
    pub record_violations: Vec<usize>,
    pub per_op: BTreeMap<&'static str, (usize, usize)>,
    /// Count per `op status` pair from the transaction log.
    pub statuses: BTreeMap<String, usize>,
    pub log_hash: [u8; 32],
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.conservation_violations.is_empty()
            && self.illegal_transitions.is_empty()
            && self.record_violations.is_empty()
    }
}

/// Drives the ledger with `steps` random transactions from five accounts and
/// checks supply conservation, lifecycle legality and server-record
/// invariants after every step.
pub fn fuzz_ledger(seed: u64, steps: usize) -> FuzzReport {
    let mut tape = RandomTape::from_u64(seed).fork("ledger-fuzz");
    let (proving_key, vk) = preprocess(TRANSFORM_RELATION).expect("known relation");
    let pool = fuzz_pool(&mut tape.fork("pool"), &proving_key);
    let junk_proof = ProofBundle {
        backend: 1,
        body: vec![0; 40],
    };
    let params = LedgerParams {
        t_cw: 40,
        t_rw: 20,
        ..LedgerParams::default()
    };
    let accounts: Vec<String> = (0..5).map(|i| format!("acct{i}")).collect();
    let genesis: Vec<(String, Amount)> = accounts.iter().map(|a| (a.clone(), Amount::tokens(2_000))).collect();
    let mut ledger = Ledger::new(params, &vk, genesis).expect("valid params");
    let supply = ledger.total_supply();
    let mut report = FuzzReport {
        steps,
        ..FuzzReport::default()
    };

    for step in 0..steps {
        let mut caller = accounts.choose(&mut tape).expect("non-empty").clone();
        let kind = tape.gen_range(0..100);
        let wanted: &[TaskState] = match kind {
            26..=45 => &[TaskState::Created],
            46..=57 => &[TaskState::Submitted],
            58..=69 | 80..=87 => &[TaskState::Challenged],
            70..=79 => &[TaskState::Submitted, TaskState::Responded],
            _ => &[],
        };
        let n_tasks = ledger.tasks().len() as u64;
        let candidates: Vec<TaskId> = ledger
            .tasks()
            .iter()
            .filter(|t| wanted.contains(&t.state))
            .map(|t| t.id)
            .collect();
        let task = if n_tasks == 0 || tape.gen_ratio(1, 20) {
            tape.gen_range(0..n_tasks + 2)
        } else if !candidates.is_empty() && tape.gen_ratio(3, 4) {
            *candidates.choose(&mut tape).expect("non-empty")
        } else {
            tape.gen_range(0..n_tasks)
        };
        let amount = |tape: &mut RandomTape| match tape.gen_range(0..4) {
            0 => Amount::from_micro(tape.gen_range(0..2_000_000)),
            1 => Amount::tokens(tape.gen_range(1..8)),
            2 => Amount::from_micro(tape.gen_range(0..12_000_000)),
            _ => Amount::tokens(5),
        };
        let tx = match kind {
            0..=7 => Transaction::RegisterDcs { deposit: amount(&mut tape) },
            8..=11 => Transaction::UnregisterDcs,
            12..=25 => {
                let data_hash = if tape.gen_bool(0.8) {
                    pool.choose(&mut tape).expect("pool").data_hash
                } else {
                    ContentHash(tape.bytes())
                };
                Transaction::CreateTask {
                    data_hash,
                    reward: amount(&mut tape),
                }
            }
            26..=45 => {
                let onchain = ledger.task(task).map(|t| t.content_hash());
                let honest = onchain.and_then(|h| pool.iter().find(|p| p.data_hash == h));
                let t = match (honest, tape.gen_range(0..4)) {
                    (Some(p), 0 | 1) => p.t,
                    (Some(p), 2) => p.bad_t,
                    _ => tape.gt_element(),
                };
                let statement = match onchain {
                    Some(h) if tape.gen_ratio(9, 10) => statement_for(&h.0, &t),
                    _ => Statement(tape.bytes()),
                };
                Transaction::SubmitResult { task, statement, t }
            }
            46..=57 => Transaction::Challenge {
                task,
                stake: amount(&mut tape),
            },
            58..=69 => {
                let record = ledger.task(task);
                let entry = record.and_then(|t| pool.iter().find(|p| p.data_hash == t.content_hash()));
                let submitted = record.and_then(|t| t.result.as_ref()).map(|r| r.t());
                let proof = match entry {
                    Some(p) if tape.gen_ratio(9, 10) => {
                        if submitted == Some(p.bad_t) {
                            p.bad_proof.clone()
                        } else {
                            p.proof.clone()
                        }
                    }
                    _ => junk_proof.clone(),
                };
                Transaction::Respond { task, proof }
            }
            70..=79 => Transaction::ClaimTaskReward { task },
            80..=87 => Transaction::ClaimChallengeReward { task },
            _ => Transaction::AdvanceTime {
                ticks: tape.gen_range(0..15),
            },
        };

        // mostly route the transaction from the party entitled to send it
        if tape.gen_ratio(7, 10) {
            let record = ledger.task(task);
            let entitled = match &tx {
                Transaction::SubmitResult { .. } => ledger
                    .state()
                    .dcs
                    .iter()
                    .filter(|(_, r)| r.active)
                    .map(|(id, _)| id.clone())
                    .collect::<Vec<_>>()
                    .choose(&mut tape)
                    .cloned(),
                Transaction::Respond { .. } | Transaction::ClaimTaskReward { .. } => {
                    record.and_then(|t| t.solver.clone())
                }
                Transaction::ClaimChallengeReward { .. } => record.and_then(|t| t.challenger.clone()),
                _ => None,
            };
            if let Some(id) = entitled {
                caller = id;
            }
        }
        let op = tx.name();
        let before: Vec<TaskState> = ledger.tasks().iter().map(|t| t.state).collect();
        let result = ledger.apply(&caller, tx);
        let entry = report.per_op.entry(op).or_default();
        match result {
            Ok(receipt) => {
                report.succeeded += 1;
                entry.0 += 1;
                match receipt {
                    crate::ledger::Receipt::ProofRejected(_) => report.rejected_proofs += 1,
                    _ if op == "respond" => report.accepted_proofs += 1,
                    _ => {}
                }
            }
            Err(_) => {
                report.failed += 1;
                entry.1 += 1;
            }
        }

        if ledger.total_supply() != supply {
            report.conservation_violations.push(step);
        }
        let after: Vec<TaskState> = ledger.tasks().iter().map(|t| t.state).collect();
        let illegal = after.iter().enumerate().any(|(i, s)| match before.get(i) {
            Some(prev) => prev != s && !prev.can_move_to(*s),
            None => *s != TaskState::Created,
        });
        if illegal {
            report.illegal_transitions.push(step);
        }
        let min = ledger.params().min_deposit_dcs;
        let records_ok = ledger.state().dcs.values().all(|r| {
            (!r.active || r.staked >= min)
                && r.pending_tasks.iter().all(|id| {
                    matches!(
                        ledger.task(*id).map(|t| t.state),
                        Some(TaskState::Submitted | TaskState::Challenged)
                    )
                })
        });
        if !records_ok {
            report.record_violations.push(step);
        }
    }
    for rec in ledger.log() {
        *report.statuses.entry(format!("{} {}", rec.op, rec.status)).or_default() += 1;
    }
    report.log_hash = ledger.log_hash();
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Keygen,
    Tkgen,
    Encapsulate,
    Transform,
    Retrieve,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Keygen,
        Algorithm::Tkgen,
        Algorithm::Encapsulate,
        Algorithm::Transform,
        Algorithm::Retrieve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Keygen => "keygen",
            Algorithm::Tkgen => "tkgen",
            Algorithm::Encapsulate => "encapsulate",
            Algorithm::Transform => "transform",
            Algorithm::Retrieve => "retrieve",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s || (s == "encrypt" && *a == Algorithm::Encapsulate) || (s == "decrypt" && *a == Algorithm::Retrieve))
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub grid: Vec<usize>,
    pub reps: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            grid: (5..=60).step_by(5).collect(),
            reps: 100,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 1,
        }
    }
}

/// Timing samples per algorithm, indexed `[grid point][rep]`.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub grid: Vec<usize>,
    pub reps: usize,
    pub samples: BTreeMap<Algorithm, Vec<Vec<Duration>>>,
}

/// Least-squares line `y = slope * x + intercept` with its coefficient of
/// determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    LinearFit { slope, intercept, r2 }
}

impl BenchReport {
    /// Mean time in milliseconds per grid point.
    pub fn means_ms(&self, alg: Algorithm) -> Vec<f64> {
        self.samples
            .get(&alg)
            .map(|cells| {
                cells
                    .iter()
                    .map(|c| c.iter().map(Duration::as_secs_f64).sum::<f64>() * 1e3 / c.len().max(1) as f64)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn fit(&self, alg: Algorithm) -> LinearFit {
        let xs: Vec<f64> = self.grid.iter().map(|n| *n as f64).collect();
        linear_fit(&xs, &self.means_ms(alg))
    }

    pub fn strictly_increasing(&self, alg: Algorithm) -> bool {
        self.means_ms(alg).windows(2).all(|w| w[1] > w[0])
    }

    /// Largest mean divided by the smallest.
    pub fn spread(&self, alg: Algorithm) -> f64 {
        let m = self.means_ms(alg);
        let max = m.iter().copied().fold(f64::MIN, f64::max);
        let min = m.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    /// One row per sample: `algorithm,attributes,rep,nanos`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,attributes,rep,nanos\n");
        for (alg, cells) in &self.samples {
            for (n, cell) in self.grid.iter().zip(cells) {
                for (rep, d) in cell.iter().enumerate() {
                    out.push_str(&format!("{},{n},{rep},{}\n", alg.name(), d.as_nanos()));
                }
            }
        }
        out
    }

    /// Mean milliseconds per algorithm and attribute count.
    pub fn to_table(&self) -> String {
        let algs: Vec<Algorithm> = self.samples.keys().copied().collect();
        let mut out = format!("{:>6}", "attrs");
        for a in &algs {
            out.push_str(&format!(" {:>12}", a.name()));
        }
        out.push('\n');
        let means: Vec<Vec<f64>> = algs.iter().map(|a| self.means_ms(*a)).collect();
        for (i, n) in self.grid.iter().enumerate() {
            out.push_str(&format!("{n:>6}"));
            for m in &means {
                out.push_str(&format!(" {:>12.3}", m[i]));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:>6}", "r2"));
        for a in &algs {
            out.push_str(&format!(" {:>12.4}", self.fit(*a).r2));
        }
        out.push('\n');
        out
    }
}

struct BenchInputs {
    attrs: Vec<String>,
    sk: SecretKey,
    tk: TransformKey,
    rk: RetrieveKey,
    ct: Ciphertext,
    w: ReconstructionCoefficients,
    ct_t: TransformedCiphertext,
    policy: PolicyFormula,
}

/// Runs the sweep with an AND policy over `n` attributes at each grid point.
/// Reps are interleaved: every round visits each grid point once in a
/// shuffled order, so slow drift in machine load spreads evenly.
pub fn bench(cfg: &BenchConfig) -> BenchReport {
    let mut tape = RandomTape::from_u64(cfg.seed).fork("bench");
    let (pk, msk) = setup(&mut tape);
    let inputs: Vec<BenchInputs> = cfg
        .grid
        .iter()
        .map(|&n| {
            let attrs: Vec<String> = (0..n).map(|i| format!("attr{i}")).collect();
            let policy = PolicyFormula::all_of(&attrs);
            let sk = keygen(&pk, &msk, &attribute_set(attrs.clone()), &mut tape).expect("non-empty");
            let (tk, rk) = tkgen(&sk, &mut tape);
            let (ct, _) = encapsulate(&pk, &policy, &mut tape);
            let w = find_coefficients(&ct.policy, &tk.attrs()).expect("satisfied");
            let ct_t = transform(&tk, &ct, &w).expect("valid");
            BenchInputs { attrs, sk, tk, rk, ct, w, ct_t, policy }
        })
        .collect();

    let mut samples: BTreeMap<Algorithm, Vec<Vec<Duration>>> = cfg
        .algorithms
        .iter()
        .map(|a| (*a, vec![Vec::with_capacity(cfg.reps); cfg.grid.len()]))
        .collect();
    let mut order: Vec<usize> = (0..cfg.grid.len()).collect();
    for _ in 0..cfg.reps {
        order.shuffle(&mut tape);
        for &i in &order {
            let inp = &inputs[i];
            for alg in &cfg.algorithms {
                let start = Instant::now();
                match alg {
                    Algorithm::Keygen => {
                        let _ = std::hint::black_box(keygen(&pk, &msk, &attribute_set(inp.attrs.clone()), &mut tape).ok());
                    }
                    Algorithm::Tkgen => {
                        let _ = std::hint::black_box(tkgen(&inp.sk, &mut tape));
                    }
                    Algorithm::Encapsulate => {
                        let _ = std::hint::black_box(encapsulate(&pk, &inp.policy, &mut tape));
                    }
                    Algorithm::Transform => {
                        let _ = std::hint::black_box(transform(&inp.tk, &inp.ct, &inp.w).ok());
                    }
                    Algorithm::Retrieve => {
                        let _ = std::hint::black_box(retrieve(&inp.ct_t, &inp.rk));
                    }
                }
                samples.get_mut(alg).expect("configured")[i].push(start.elapsed());
            }
        }
    }
    BenchReport {
        grid: cfg.grid.clone(),
        reps: cfg.reps,
        samples,
    }
}

/// Hash of a scenario transcript, for reproducibility checks.
pub fn transcript_hash(report: &ScenarioReport) -> [u8; 32] {
    sha256(&[report.transcript().as_bytes()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_attrs: 2,
            payload_len: 64,
            ..ScenarioConfig::with_seed(3)
        }
    }

    fn assert_passed(r: &ScenarioReport) {
        assert!(r.passed(), "{}", r.transcript());
    }

    #[test]
    fn happy_case_pays_solver() {
        let r = run_happy_case(&small()).unwrap();
        assert_passed(&r);
        assert_eq!(r.payoff(SERVER), Payoff(10_000_000));
        assert_eq!(r.payoff(DATA_USER), Payoff(-10_000_000));
        assert_eq!(r.task_states, vec![TaskState::Finalized]);
    }

    #[test]
    fn happy_case_single_attribute() {
        let cfg = ScenarioConfig { n_attrs: 1, ..small() };
        assert_passed(&run_happy_case(&cfg).unwrap());
    }

    #[test]
    fn transcripts_are_reproducible() {
        let a = run_happy_case(&small()).unwrap();
        let b = run_happy_case(&small()).unwrap();
        assert_eq!(a.transcript(), b.transcript());
        assert_eq!(a.log_hash, b.log_hash);
        let c = run_happy_case(&ScenarioConfig { seed: 4, ..small() }).unwrap();
        assert_ne!(a.log_hash, c.log_hash);
    }

    #[test]
    fn corrupt_solver_is_slashed() {
        let r = run_challenge_case(SolverStrategy::CorruptT, &small()).unwrap();
        assert_passed(&r);
        assert_eq!(r.task_states, vec![TaskState::Slashed]);
        assert_eq!(r.payoff(SERVER), Payoff(-5_000_000));
        // refund + compensation + own share of the fine, stake returned
        assert_eq!(r.payoff(DATA_USER), Payoff(5_000_000));
    }

    #[test]
    fn lazy_solver_is_caught_by_public_challenger() {
        let r = run_challenge_case(SolverStrategy::RandomT, &small()).unwrap();
        assert_passed(&r);
        assert_eq!(r.payoff(CHALLENGER), Payoff(2_500_000));
        assert_eq!(r.payoff(DATA_USER), Payoff(2_500_000));
    }

    #[test]
    fn spurious_challenge_pays_defender() {
        let r = run_challenge_case(SolverStrategy::Honest, &small()).unwrap();
        assert_passed(&r);
        assert_eq!(r.payoff(CHALLENGER), Payoff(-1_000_000));
        assert_eq!(r.payoff(SERVER), Payoff(11_000_000));
    }

    #[test]
    fn self_challenge_never_pays() {
        let r = run_self_challenge_case(&small()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.baseline, Payoff(10_000_000));
        assert_eq!(r.honest_delta(), Payoff(0));
        assert_eq!(r.corrupt_self_challenge, Payoff(-2_500_000));
        assert_eq!(r.corrupt_challenged_by_user, Payoff(-5_000_000));
    }

    #[test]
    fn named_scenarios_resolve() {
        for name in SCENARIOS {
            let runs = run_named(name, &small()).unwrap();
            assert!(runs.iter().all(ScenarioReport::passed), "{name}");
        }
        assert!(run_named("nope", &small()).is_err());
    }

    #[test]
    fn dir_store_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig {
            store_dir: Some(dir.path().to_path_buf()),
            ..small()
        };
        assert_passed(&run_happy_case(&cfg).unwrap());
        assert!(std::fs::read_dir(dir.path()).unwrap().count() >= 2);
    }

    #[test]
    fn short_fuzz_conserves_supply() {
        let r = fuzz_ledger(11, 600);
        assert!(r.passed(), "{r:?}");
        assert!(r.succeeded > 50, "{r:?}");
        assert_eq!(fuzz_ledger(11, 600).log_hash, r.log_hash);
    }

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        // r2 from the textbook formula on noisy data
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]);
        assert!((f.r2 - 0.64).abs() < 1e-12);
    }

    #[test]
    fn tiny_bench_shapes() {
        let cfg = BenchConfig {
            grid: vec![1, 2],
            reps: 2,
            algorithms: vec![Algorithm::Retrieve, Algorithm::Keygen],
            seed: 2,
        };
        let r = bench(&cfg);
        assert_eq!(r.samples.len(), 2);
        assert!(r.samples.values().all(|cells| cells.iter().all(|c| c.len() == 2)));
        assert_eq!(r.to_csv().lines().count(), 1 + 2 * 2 * 2);
        assert!(r.to_table().contains("retrieve"));
        assert_eq!("encrypt".parse::<Algorithm>().unwrap(), Algorithm::Encapsulate);
    }
}
