//! Simulated chain hosting the outsourced-decryption contract.
//!
//! Transactions are applied one at a time in a total order through
//! [`Ledger::apply`]; each one, successful or not, appends a record to the
//! transaction log together with the hash of the resulting state. Given the
//! same transaction sequence the log is bit-identical.
//!
//! Task lifecycle:
//!
//! ```text
//! Created -> Submitted -> Finalized                 (claim after challenge window)
//!                      -> Challenged -> Responded -> Finalized
//!                                    -> Slashed     (response window expired)
//! ```
//!
//! Window convention: a challenge or response is accepted up to and including
//! the deadline tick (`submitted_at + t_cw`, `challenged_at + t_rw`); a claim
//! that depends on a window closing is accepted strictly after it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::Canonical;
use crate::group::{sha256, Gt};
use crate::proof::{statement_for, verify, ProofBundle, Rejection, Statement, VerifyingKey};
use crate::store::ContentHash;

/// Token amount in micro-units (1 token = 1_000_000).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(u64);

impl Amount {
    pub const UNIT: u64 = 1_000_000;
    pub const ZERO: Amount = Amount(0);

    pub const fn tokens(n: u64) -> Self {
        Amount(n * Self::UNIT)
    }

    pub const fn from_micro(m: u64) -> Self {
        Amount(m)
    }

    pub const fn micro(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, o: Amount) -> Option<Amount> {
        self.0.checked_add(o.0).map(Amount)
    }

    pub fn checked_sub(self, o: Amount) -> Option<Amount> {
        self.0.checked_sub(o.0).map(Amount)
    }

    /// `floor(self * r)`.
    pub fn mul_ratio(self, r: Ratio) -> Amount {
        Amount((self.0 as u128 * r.num as u128 / r.den as u128) as u64)
    }
}

impl std::ops::Add for Amount {
    type Output = Amount;
    fn add(self, o: Amount) -> Amount {
        self.checked_add(o).expect("token amount overflow")
    }
}

impl std::ops::Sub for Amount {
    type Output = Amount;
    fn sub(self, o: Amount) -> Amount {
        self.checked_sub(o).expect("token amount underflow")
    }
}

impl std::ops::Mul<u64> for Amount {
    type Output = Amount;
    fn mul(self, k: u64) -> Amount {
        Amount::from_micro(self.micro().checked_mul(k).expect("token amount overflow"))
    }
}

impl std::ops::AddAssign for Amount {
    fn add_assign(&mut self, o: Amount) {
        *self = *self + o;
    }
}

impl std::ops::SubAssign for Amount {
    fn sub_assign(&mut self, o: Amount) {
        *self = *self - o;
    }
}

impl std::iter::Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_micro(f, self.0 as i128)
    }
}

fn fmt_micro(f: &mut fmt::Formatter<'_>, micro: i128) -> fmt::Result {
    let sign = if micro < 0 { "-" } else { "" };
    let abs = micro.unsigned_abs();
    let unit = Amount::UNIT as u128;
    let (whole, frac) = (abs / unit, abs % unit);
    if frac == 0 {
        write!(f, "{sign}{whole}")
    } else {
        let frac = format!("{frac:06}");
        write!(f, "{sign}{whole}.{}", frac.trim_end_matches('0'))
    }
}

/// Signed token difference, used for payoff reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Payoff(pub i128);

impl Payoff {
    pub fn between(before: Amount, after: Amount) -> Self {
        Payoff(after.micro() as i128 - before.micro() as i128)
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 0 {
            f.write_str("+")?;
        }
        fmt_micro(f, self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid amount {0:?}")]
pub struct ParseAmountError(String);

impl FromStr for Amount {
    type Err = ParseAmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAmountError(s.to_string());
        let (whole, frac) = s.trim().split_once('.').unwrap_or((s.trim(), ""));
        if whole.is_empty() || frac.len() > 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let whole: u64 = whole.parse().map_err(|_| err())?;
        let frac_micro: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<6}").parse().map_err(|_| err())?
        };
        whole
            .checked_mul(Amount::UNIT)
            .and_then(|w| w.checked_add(frac_micro))
            .map(Amount)
            .ok_or_else(err)
    }
}

/// Rational number `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = ParamsError;

    /// Accepts `n/d` or a decimal with up to six places.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParamsError::BadValue {
            key: "slash_split_challenger".into(),
            value: s.to_string(),
        };
        if let Some((n, d)) = s.split_once('/') {
            let num = n.trim().parse().map_err(|_| err())?;
            let den = d.trim().parse().map_err(|_| err())?;
            return Ok(Ratio { num, den });
        }
        let micro: Amount = s.parse().map_err(|_| err())?;
        Ok(Ratio {
            num: micro.micro(),
            den: Amount::UNIT,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown parameter {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("invalid parameters: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerParams {
    /// Challenge window in ticks.
    pub t_cw: u64,
    /// Response window in ticks.
    pub t_rw: u64,
    pub min_deposit_dcs: Amount,
    pub min_deposit_challenger: Amount,
    /// Share of a slashing fine paid to the challenger; the rest goes to the
    /// data user.
    pub slash_split_challenger: Ratio,
}

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams {
            t_cw: 100,
            t_rw: 50,
            min_deposit_dcs: Amount::tokens(5),
            min_deposit_challenger: Amount::tokens(1),
            slash_split_challenger: Ratio::new(1, 2),
        }
    }
}

impl LedgerParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.t_cw < 1 || self.t_rw < 1 {
            return Err(ParamsError::Invalid("windows must be at least one tick"));
        }
        if self.min_deposit_dcs == Amount::ZERO || self.min_deposit_challenger == Amount::ZERO {
            return Err(ParamsError::Invalid("minimum deposits must be positive"));
        }
        let r = self.slash_split_challenger;
        if r.den == 0 || r.num > r.den {
            return Err(ParamsError::Invalid("slash split must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Parses a `key = value` file; missing keys keep their defaults and `#`
    /// starts a comment.
    pub fn from_config_str(text: &str) -> Result<Self, ParamsError> {
        let mut p = LedgerParams::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ParamsError::Syntax { line: n + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ParamsError::BadValue {
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "t_cw" => p.t_cw = value.parse().map_err(|_| bad())?,
                "t_rw" => p.t_rw = value.parse().map_err(|_| bad())?,
                "min_deposit_dcs" => p.min_deposit_dcs = value.parse().map_err(|_| bad())?,
                "min_deposit_challenger" => {
                    p.min_deposit_challenger = value.parse().map_err(|_| bad())?
                }
                "slash_split_challenger" => p.slash_split_challenger = value.parse()?,
                _ => return Err(ParamsError::UnknownKey(key.to_string())),
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "t_cw = {}\nt_rw = {}\nmin_deposit_dcs = {}\nmin_deposit_challenger = {}\nslash_split_challenger = {}\n",
            self.t_cw, self.t_rw, self.min_deposit_dcs, self.min_deposit_challenger, self.slash_split_challenger
        )
    }
}

pub type TaskId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskState {
    Created,
    Submitted,
    Challenged,
    Responded,
    Finalized,
    Slashed,
}

impl TaskState {
    pub fn is_terminal(self) -> bool {
        matches!(self, TaskState::Finalized | TaskState::Slashed)
    }

    /// Edges of the task lifecycle.
    pub fn can_move_to(self, next: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, next),
            (Created, Submitted)
                | (Submitted, Finalized)
                | (Submitted, Challenged)
                | (Challenged, Responded)
                | (Challenged, Slashed)
                | (Responded, Finalized)
        )
    }
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let bytes = hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("expected 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskResult {
    #[serde(with = "hex32")]
    pub statement: [u8; 32],
    /// Canonical encoding of the partially decrypted component `T`.
    #[serde(with = "hex_bytes")]
    pub t: Vec<u8>,
}

impl TaskResult {
    pub fn statement(&self) -> Statement {
        Statement(self.statement)
    }

    pub fn t(&self) -> Gt {
        Gt::from_canonical_bytes(&self.t).expect("stored results are validated on submit")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub creator: String,
    #[serde(with = "hex32")]
    pub data_hash: [u8; 32],
    pub reward: Amount,
    /// Reward still held by the contract.
    pub escrow: Amount,
    pub state: TaskState,
    pub result: Option<TaskResult>,
    pub solver: Option<String>,
    pub challenger: Option<String>,
    /// Challenger deposit still held by the contract.
    pub challenger_stake: Amount,
    pub submitted_at: Option<u64>,
    pub challenged_at: Option<u64>,
}

impl Task {
    pub fn content_hash(&self) -> ContentHash {
        ContentHash(self.data_hash)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcsRecord {
    pub staked: Amount,
    pub pending_tasks: BTreeSet<TaskId>,
    /// False once slashing left the stake below the minimum; the record then
    /// only lingers until its pending tasks settle.
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("deposit below the required minimum")]
    InsufficientDeposit,
    #[error("account balance too low")]
    InsufficientBalance,
    #[error("server already registered")]
    AlreadyRegistered,
    #[error("server not registered")]
    NotRegistered,
    #[error("server still has pending tasks")]
    PendingTasksExist,
    #[error("task reward must be positive")]
    ZeroReward,
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("task is {found}, operation needs {expected}")]
    WrongState { expected: &'static str, found: TaskState },
    #[error("window has closed")]
    WindowClosed,
    #[error("window is still open")]
    WindowOpen,
    #[error("challenge stake below the required minimum")]
    InsufficientStake,
    #[error("caller is not entitled to this operation")]
    WrongCaller,
    #[error("statement does not match the task data hash and result")]
    StatementMismatch,
    #[error("result is not a valid target-group element")]
    MalformedResult,
    #[error(transparent)]
    Params(#[from] ParamsError),
}

impl LedgerError {
    /// Stable kebab-case code used in the transaction log.
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::InsufficientDeposit => "insufficient-deposit",
            LedgerError::InsufficientBalance => "insufficient-balance",
            LedgerError::AlreadyRegistered => "already-registered",
            LedgerError::NotRegistered => "not-registered",
            LedgerError::PendingTasksExist => "pending-tasks-exist",
            LedgerError::ZeroReward => "zero-reward",
            LedgerError::UnknownTask(_) => "unknown-task",
            LedgerError::WrongState { .. } => "wrong-state",
            LedgerError::WindowClosed => "window-closed",
            LedgerError::WindowOpen => "window-open",
            LedgerError::InsufficientStake => "insufficient-stake",
            LedgerError::WrongCaller => "wrong-caller",
            LedgerError::StatementMismatch => "statement-mismatch",
            LedgerError::MalformedResult => "malformed-result",
            LedgerError::Params(_) => "invalid-params",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transaction {
    RegisterDcs { deposit: Amount },
    UnregisterDcs,
    CreateTask { data_hash: ContentHash, reward: Amount },
    SubmitResult { task: TaskId, statement: Statement, t: Gt },
    Challenge { task: TaskId, stake: Amount },
    Respond { task: TaskId, proof: ProofBundle },
    ClaimTaskReward { task: TaskId },
    ClaimChallengeReward { task: TaskId },
    AdvanceTime { ticks: u64 },
}

impl Transaction {
    pub fn name(&self) -> &'static str {
        match self {
            Transaction::RegisterDcs { .. } => "register_dcs",
            Transaction::UnregisterDcs => "unregister_dcs",
            Transaction::CreateTask { .. } => "create_task",
            Transaction::SubmitResult { .. } => "submit_result",
            Transaction::Challenge { .. } => "challenge",
            Transaction::Respond { .. } => "respond",
            Transaction::ClaimTaskReward { .. } => "claim_task_reward",
            Transaction::ClaimChallengeReward { .. } => "claim_challenge_reward",
            Transaction::AdvanceTime { .. } => "advance_time",
        }
    }

    fn args(&self) -> String {
        match self {
            Transaction::RegisterDcs { deposit } => format!("deposit={deposit}"),
            Transaction::UnregisterDcs => String::new(),
            Transaction::CreateTask { data_hash, reward } => {
                format!("data_hash={data_hash} reward={reward}")
            }
            Transaction::SubmitResult { task, statement, t } => format!(
                "task={task} statement={statement} t_hash={}",
                hex::encode(sha256(&[&t.to_canonical_bytes()]))
            ),
            Transaction::Challenge { task, stake } => format!("task={task} stake={stake}"),
            Transaction::Respond { task, proof } => format!(
                "task={task} proof_hash={}",
                hex::encode(sha256(&[&proof.to_canonical_bytes()]))
            ),
            Transaction::ClaimTaskReward { task } | Transaction::ClaimChallengeReward { task } => {
                format!("task={task}")
            }
            Transaction::AdvanceTime { ticks } => format!("ticks={ticks}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Receipt {
    Ok,
    TaskCreated(TaskId),
    ProofRejected(Rejection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RespondOutcome {
    Accepted,
    Rejected,
}

/// One line of the transaction log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub tick: u64,
    pub op: String,
    pub caller: String,
    pub args: String,
    pub status: String,
    #[serde(with = "hex32")]
    pub state_hash: [u8; 32],
}

impl fmt::Display for LogRecord {
    /// Tab-separated: `seq tick op caller args status state_hash`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.tick,
            self.op,
            self.caller,
            self.args,
            self.status,
            hex::encode(self.state_hash)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerState {
    pub params: LedgerParams,
    pub now: u64,
    pub accounts: BTreeMap<String, Amount>,
    pub dcs: BTreeMap<String, DcsRecord>,
    pub tasks: Vec<Task>,
    pub verifier_relation: String,
    pub verifier_backend: u8,
    #[serde(with = "hex32")]
    pub verifier_key_id: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    state: LedgerState,
    log: Vec<LogRecord>,
}

pub const SYSTEM_CALLER: &str = "-";

impl Ledger {
    /// Creates a chain with the given genesis balances. The verifying key is
    /// the one the contract checks every response against.
    pub fn new(
        params: LedgerParams,
        vk: &VerifyingKey,
        genesis: impl IntoIterator<Item = (String, Amount)>,
    ) -> Result<Self, LedgerError> {
        params.validate()?;
        let mut accounts = BTreeMap::new();
        for (id, amount) in genesis {
            *accounts.entry(id).or_insert(Amount::ZERO) += amount;
        }
        Ok(Ledger {
            state: LedgerState {
                params,
                now: 0,
                accounts,
                dcs: BTreeMap::new(),
                tasks: Vec::new(),
                verifier_relation: vk.relation.clone(),
                verifier_backend: vk.backend,
                verifier_key_id: vk.key_id,
            },
            log: Vec::new(),
        })
    }

    pub fn params(&self) -> &LedgerParams {
        &self.state.params
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn now(&self) -> u64 {
        self.state.now
    }

    pub fn balance(&self, id: &str) -> Amount {
        self.state.accounts.get(id).copied().unwrap_or_default()
    }

    pub fn dcs(&self, id: &str) -> Option<&DcsRecord> {
        self.state.dcs.get(id)
    }

    pub fn stake(&self, id: &str) -> Amount {
        self.dcs(id).map_or(Amount::ZERO, |r| r.staked)
    }

    pub fn is_registered(&self, id: &str) -> bool {
        self.dcs(id).is_some_and(|r| r.active)
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.state.tasks.get(id as usize)
    }

    pub fn tasks(&self) -> &[Task] {
        &self.state.tasks
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        VerifyingKey {
            backend: self.state.verifier_backend,
            relation: self.state.verifier_relation.clone(),
            key_id: self.state.verifier_key_id,
        }
    }

    /// Balances + server stakes + escrowed rewards + held challenge stakes.
    pub fn total_supply(&self) -> Amount {
        let balances: Amount = self.state.accounts.values().copied().sum();
        let stakes: Amount = self.state.dcs.values().map(|r| r.staked).sum();
        let held: Amount = self
            .state
            .tasks
            .iter()
            .map(|t| t.escrow + t.challenger_stake)
            .sum();
        balances + stakes + held
    }

    pub fn state_hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(&self.state).expect("ledger state serializes");
        sha256(&[b"ledger-state:", &bytes])
    }

    /// The transaction log, one tab-separated record per line.
    pub fn export_log(&self) -> String {
        self.log.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn log_hash(&self) -> [u8; 32] {
        sha256(&[self.export_log().as_bytes()])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Applies one transaction and logs it. Failed transactions leave the
    /// state untouched.
    pub fn apply(&mut self, caller: &str, tx: Transaction) -> Result<Receipt, LedgerError> {
        let tick = self.state.now;
        let result = self.dispatch(caller, &tx);
        let status = match &result {
            Ok(Receipt::ProofRejected(r)) => format!("rejected:{r:?}"),
            Ok(_) => "ok".to_string(),
            Err(e) => format!("err:{}", e.code()),
        };
        self.log.push(LogRecord {
            seq: self.log.len() as u64,
            tick,
            op: tx.name().to_string(),
            caller: caller.to_string(),
            args: tx.args(),
            status,
            state_hash: self.state_hash(),
        });
        result
    }

    fn dispatch(&mut self, caller: &str, tx: &Transaction) -> Result<Receipt, LedgerError> {
        match tx {
            Transaction::RegisterDcs { deposit } => self.do_register(caller, *deposit),
            Transaction::UnregisterDcs => self.do_unregister(caller),
            Transaction::CreateTask { data_hash, reward } => self.do_create(caller, *data_hash, *reward),
            Transaction::SubmitResult { task, statement, t } => self.do_submit(caller, *task, *statement, t),
            Transaction::Challenge { task, stake } => self.do_challenge(caller, *task, *stake),
            Transaction::Respond { task, proof } => self.do_respond(caller, *task, proof),
            Transaction::ClaimTaskReward { task } => self.do_claim_task(caller, *task),
            Transaction::ClaimChallengeReward { task } => self.do_claim_challenge(caller, *task),
            Transaction::AdvanceTime { ticks } => {
                self.state.now = self.state.now.saturating_add(*ticks);
                Ok(Receipt::Ok)
            }
        }
    }

    pub fn register_dcs(&mut self, id: &str, deposit: Amount) -> Result<(), LedgerError> {
        self.apply(id, Transaction::RegisterDcs { deposit }).map(drop)
    }

    pub fn unregister_dcs(&mut self, id: &str) -> Result<(), LedgerError> {
        self.apply(id, Transaction::UnregisterDcs).map(drop)
    }

    pub fn create_task(&mut self, du: &str, data_hash: ContentHash, reward: Amount) -> Result<TaskId, LedgerError> {
        match self.apply(du, Transaction::CreateTask { data_hash, reward })? {
            Receipt::TaskCreated(id) => Ok(id),
            other => unreachable!("create_task produced {other:?}"),
        }
    }

    pub fn submit_result(&mut self, dcs: &str, task: TaskId, statement: Statement, t: Gt) -> Result<(), LedgerError> {
        self.apply(dcs, Transaction::SubmitResult { task, statement, t }).map(drop)
    }

    pub fn challenge(&mut self, challenger: &str, task: TaskId, stake: Amount) -> Result<(), LedgerError> {
        self.apply(challenger, Transaction::Challenge { task, stake }).map(drop)
    }

    pub fn respond(&mut self, dcs: &str, task: TaskId, proof: ProofBundle) -> Result<RespondOutcome, LedgerError> {
        match self.apply(dcs, Transaction::Respond { task, proof })? {
            Receipt::ProofRejected(_) => Ok(RespondOutcome::Rejected),
            _ => Ok(RespondOutcome::Accepted),
        }
    }

    pub fn claim_task_reward(&mut self, dcs: &str, task: TaskId) -> Result<(), LedgerError> {
        self.apply(dcs, Transaction::ClaimTaskReward { task }).map(drop)
    }

    pub fn claim_challenge_reward(&mut self, challenger: &str, task: TaskId) -> Result<(), LedgerError> {
        self.apply(challenger, Transaction::ClaimChallengeReward { task }).map(drop)
    }

    pub fn advance_time(&mut self, ticks: u64) {
        self.apply(SYSTEM_CALLER, Transaction::AdvanceTime { ticks })
            .expect("advancing the clock cannot fail");
    }

    fn debit(&mut self, id: &str, amount: Amount) -> Result<(), LedgerError> {
        let bal = self.state.accounts.get_mut(id).ok_or(LedgerError::InsufficientBalance)?;
        *bal = bal.checked_sub(amount).ok_or(LedgerError::InsufficientBalance)?;
        Ok(())
    }

    fn credit(&mut self, id: &str, amount: Amount) {
        *self.state.accounts.entry(id.to_string()).or_default() += amount;
    }

    fn task_mut(&mut self, id: TaskId) -> Result<&mut Task, LedgerError> {
        self.state
            .tasks
            .get_mut(id as usize)
            .ok_or(LedgerError::UnknownTask(id))
    }

    fn move_task(&mut self, id: TaskId, next: TaskState) {
        let task = &mut self.state.tasks[id as usize];
        assert!(
            task.state.can_move_to(next),
            "illegal task transition {} -> {next}",
            task.state
        );
        task.state = next;
    }

    fn do_register(&mut self, id: &str, deposit: Amount) -> Result<Receipt, LedgerError> {
        if deposit < self.state.params.min_deposit_dcs {
            return Err(LedgerError::InsufficientDeposit);
        }
        if self.state.dcs.contains_key(id) {
            return Err(LedgerError::AlreadyRegistered);
        }
        self.debit(id, deposit)?;
        self.state.dcs.insert(
            id.to_string(),
            DcsRecord {
                staked: deposit,
                pending_tasks: BTreeSet::new(),
                active: true,
            },
        );
        Ok(Receipt::Ok)
    }

    fn do_unregister(&mut self, id: &str) -> Result<Receipt, LedgerError> {
        let rec = self.state.dcs.get(id).ok_or(LedgerError::NotRegistered)?;
        if !rec.pending_tasks.is_empty() {
            return Err(LedgerError::PendingTasksExist);
        }
        let staked = rec.staked;
        self.state.dcs.remove(id);
        self.credit(id, staked);
        Ok(Receipt::Ok)
    }

    fn do_create(&mut self, du: &str, data_hash: ContentHash, reward: Amount) -> Result<Receipt, LedgerError> {
        if reward == Amount::ZERO {
            return Err(LedgerError::ZeroReward);
        }
        self.debit(du, reward)?;
        let id = self.state.tasks.len() as TaskId;
        self.state.tasks.push(Task {
            id,
            creator: du.to_string(),
            data_hash: data_hash.0,
            reward,
            escrow: reward,
            state: TaskState::Created,
            result: None,
            solver: None,
            challenger: None,
            challenger_stake: Amount::ZERO,
            submitted_at: None,
            challenged_at: None,
        });
        Ok(Receipt::TaskCreated(id))
    }

    fn do_submit(&mut self, dcs: &str, id: TaskId, statement: Statement, t: &Gt) -> Result<Receipt, LedgerError> {
        let task = self.task(id).ok_or(LedgerError::UnknownTask(id))?;
        if !self.is_registered(dcs) {
            return Err(LedgerError::NotRegistered);
        }
        if task.state != TaskState::Created {
            return Err(LedgerError::WrongState {
                expected: "Created",
                found: task.state,
            });
        }
        if statement_for(&task.data_hash, t) != statement {
            return Err(LedgerError::StatementMismatch);
        }
        let now = self.state.now;
        let task = self.task_mut(id)?;
        task.result = Some(TaskResult {
            statement: statement.0,
            t: t.to_canonical_bytes(),
        });
        task.solver = Some(dcs.to_string());
        task.submitted_at = Some(now);
        self.move_task(id, TaskState::Submitted);
        self.state
            .dcs
            .get_mut(dcs)
            .expect("registered")
            .pending_tasks
            .insert(id);
        Ok(Receipt::Ok)
    }

    fn do_challenge(&mut self, challenger: &str, id: TaskId, stake: Amount) -> Result<Receipt, LedgerError> {
        let task = self.task(id).ok_or(LedgerError::UnknownTask(id))?;
        if task.state != TaskState::Submitted {
            return Err(LedgerError::WrongState {
                expected: "Submitted",
                found: task.state,
            });
        }
        let deadline = task.submitted_at.expect("submitted") + self.state.params.t_cw;
        if self.state.now > deadline {
            return Err(LedgerError::WindowClosed);
        }
        if stake < self.state.params.min_deposit_challenger {
            return Err(LedgerError::InsufficientStake);
        }
        self.debit(challenger, stake)?;
        let now = self.state.now;
        let task = self.task_mut(id)?;
        task.challenger = Some(challenger.to_string());
        task.challenger_stake = stake;
        task.challenged_at = Some(now);
        self.move_task(id, TaskState::Challenged);
        Ok(Receipt::Ok)
    }

    fn do_respond(&mut self, dcs: &str, id: TaskId, proof: &ProofBundle) -> Result<Receipt, LedgerError> {
        let task = self.task(id).ok_or(LedgerError::UnknownTask(id))?;
        if task.state != TaskState::Challenged {
            return Err(LedgerError::WrongState {
                expected: "Challenged",
                found: task.state,
            });
        }
        if task.solver.as_deref() != Some(dcs) {
            return Err(LedgerError::WrongCaller);
        }
        let deadline = task.challenged_at.expect("challenged") + self.state.params.t_rw;
        if self.state.now > deadline {
            return Err(LedgerError::WindowClosed);
        }
        let statement = task.result.as_ref().expect("submitted").statement();
        if let crate::proof::Verdict::Reject(r) = verify(&self.verifying_key(), &statement, proof) {
            return Ok(Receipt::ProofRejected(r));
        }
        self.move_task(id, TaskState::Responded);
        self.challenge_fail(id);
        Ok(Receipt::Ok)
    }

    /// The defender proved its result: the challenger's stake pays for the
    /// proof and the task leaves the pending set.
    fn challenge_fail(&mut self, id: TaskId) {
        let task = &mut self.state.tasks[id as usize];
        let stake = std::mem::take(&mut task.challenger_stake);
        let solver = task.solver.clone().expect("submitted");
        self.credit(&solver, stake);
        self.clear_pending(&solver, id);
    }

    fn do_claim_task(&mut self, dcs: &str, id: TaskId) -> Result<Receipt, LedgerError> {
        let task = self.task(id).ok_or(LedgerError::UnknownTask(id))?;
        match task.state {
            TaskState::Submitted | TaskState::Responded => {}
            found => {
                return Err(LedgerError::WrongState {
                    expected: "Submitted or Responded",
                    found,
                })
            }
        }
        if task.solver.as_deref() != Some(dcs) {
            return Err(LedgerError::WrongCaller);
        }
        if task.state == TaskState::Submitted {
            let deadline = task.submitted_at.expect("submitted") + self.state.params.t_cw;
            if self.state.now <= deadline {
                return Err(LedgerError::WindowOpen);
            }
        }
        let task = self.task_mut(id)?;
        let reward = std::mem::take(&mut task.escrow);
        self.move_task(id, TaskState::Finalized);
        self.credit(dcs, reward);
        self.clear_pending(dcs, id);
        Ok(Receipt::Ok)
    }

    fn do_claim_challenge(&mut self, challenger: &str, id: TaskId) -> Result<Receipt, LedgerError> {
        let task = self.task(id).ok_or(LedgerError::UnknownTask(id))?;
        if task.state != TaskState::Challenged {
            return Err(LedgerError::WrongState {
                expected: "Challenged",
                found: task.state,
            });
        }
        if task.challenger.as_deref() != Some(challenger) {
            return Err(LedgerError::WrongCaller);
        }
        let deadline = task.challenged_at.expect("challenged") + self.state.params.t_rw;
        if self.state.now <= deadline {
            return Err(LedgerError::WindowOpen);
        }
        self.move_task(id, TaskState::Slashed);
        self.challenge_success(id);
        Ok(Receipt::Ok)
    }

    /// The defender failed to respond: its stake is fined `min_deposit_dcs`
    /// (capped at what is left), the challenger gets its stake back plus its
    /// share of the fine, and the data user gets the reward refund plus the
    /// remainder.
    fn challenge_success(&mut self, id: TaskId) {
        let params = self.state.params.clone();
        let task = &mut self.state.tasks[id as usize];
        let stake = std::mem::take(&mut task.challenger_stake);
        let refund = std::mem::take(&mut task.escrow);
        let solver = task.solver.clone().expect("submitted");
        let challenger = task.challenger.clone().expect("challenged");
        let du = task.creator.clone();

        let fine = match self.state.dcs.get_mut(&solver) {
            Some(rec) => {
                let fine = params.min_deposit_dcs.min(rec.staked);
                rec.staked -= fine;
                if rec.staked < params.min_deposit_dcs {
                    rec.active = false;
                }
                fine
            }
            None => Amount::ZERO,
        };
        let to_challenger = fine.mul_ratio(params.slash_split_challenger);
        self.credit(&challenger, stake + to_challenger);
        self.credit(&du, refund + (fine - to_challenger));
        self.clear_pending(&solver, id);
    }

    /// Drops a settled task from the solver's pending set and refunds the
    /// residue of a deactivated server once nothing is pending.
    fn clear_pending(&mut self, solver: &str, id: TaskId) {
        let Some(rec) = self.state.dcs.get_mut(solver) else {
            return;
        };
        rec.pending_tasks.remove(&id);
        if !rec.active && rec.pending_tasks.is_empty() {
            let residue = rec.staked;
            self.state.dcs.remove(solver);
            self.credit(solver, residue);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::gt;
    use crate::proof::{preprocess, TRANSFORM_RELATION};

    const DU: &str = "du";
    const DCS: &str = "dcs";
    const CH: &str = "challenger";

    fn ledger() -> Ledger {
        let (_, vk) = preprocess(TRANSFORM_RELATION).unwrap();
        Ledger::new(
            LedgerParams::default(),
            &vk,
            [
                (DU.to_string(), Amount::tokens(100)),
                (DCS.to_string(), Amount::tokens(20)),
                (CH.to_string(), Amount::tokens(10)),
            ],
        )
        .unwrap()
    }

    fn submitted(l: &mut Ledger) -> TaskId {
        l.register_dcs(DCS, Amount::tokens(5)).unwrap();
        let h = ContentHash([3; 32]);
        let id = l.create_task(DU, h, Amount::tokens(10)).unwrap();
        let t = gt();
        l.submit_result(DCS, id, statement_for(&h.0, &t), t).unwrap();
        id
    }

    #[test]
    fn amounts_parse_and_display() {
        assert_eq!("5".parse::<Amount>().unwrap(), Amount::tokens(5));
        assert_eq!("2.5".parse::<Amount>().unwrap(), Amount::from_micro(2_500_000));
        assert_eq!(Amount::from_micro(2_500_000).to_string(), "2.5");
        assert_eq!(Amount::tokens(7).to_string(), "7");
        assert!("1.0000001".parse::<Amount>().is_err());
        assert!("-1".parse::<Amount>().is_err());
        assert!(".5".parse::<Amount>().is_err());
        assert_eq!(Payoff(-2_500_000).to_string(), "-2.5");
        assert_eq!(Payoff(10_000_000).to_string(), "+10");
    }

    #[test]
    fn params_file() {
        let p = LedgerParams::from_config_str(
            "# sim\nt_cw = 10\nt_rw=5\nmin_deposit_dcs = 2.5\nslash_split_challenger = 3/4\n",
        )
        .unwrap();
        assert_eq!(p.t_cw, 10);
        assert_eq!(p.t_rw, 5);
        assert_eq!(p.min_deposit_dcs, "2.5".parse().unwrap());
        assert_eq!(p.min_deposit_challenger, Amount::tokens(1));
        assert_eq!(p.slash_split_challenger, Ratio::new(3, 4));
        assert_eq!(LedgerParams::from_config_str(&p.to_config_string()).unwrap(), p);
        assert_eq!(
            LedgerParams::from_config_str("bogus = 1"),
            Err(ParamsError::UnknownKey("bogus".into()))
        );
        assert!(LedgerParams::from_config_str("t_cw = 0").is_err());
        assert!(LedgerParams::from_config_str("slash_split_challenger = 3/2").is_err());
        assert_eq!(
            LedgerParams::from_config_str("t_cw 4"),
            Err(ParamsError::Syntax { line: 1 })
        );
        assert_eq!(
            LedgerParams::from_config_str("slash_split_challenger = 0.25").unwrap().slash_split_challenger,
            Ratio::new(250_000, 1_000_000)
        );
    }

    #[test]
    fn register_rules() {
        let mut l = ledger();
        assert_eq!(
            l.register_dcs(DCS, Amount::tokens(5) - Amount::from_micro(1)),
            Err(LedgerError::InsufficientDeposit)
        );
        l.register_dcs(DCS, Amount::tokens(5)).unwrap();
        assert_eq!(l.balance(DCS), Amount::tokens(15));
        assert_eq!(l.register_dcs(DCS, Amount::tokens(5)), Err(LedgerError::AlreadyRegistered));
        assert_eq!(l.register_dcs("nobody", Amount::tokens(5)), Err(LedgerError::InsufficientBalance));
    }

    #[test]
    fn unregister_rules() {
        let mut l = ledger();
        assert_eq!(l.unregister_dcs(DCS), Err(LedgerError::NotRegistered));
        l.register_dcs(DCS, Amount::tokens(5)).unwrap();
        l.unregister_dcs(DCS).unwrap();
        assert_eq!(l.balance(DCS), Amount::tokens(20));

        let id = submitted(&mut l);
        assert_eq!(l.unregister_dcs(DCS), Err(LedgerError::PendingTasksExist));
        l.advance_time(101);
        l.claim_task_reward(DCS, id).unwrap();
        l.unregister_dcs(DCS).unwrap();
        assert_eq!(l.balance(DCS), Amount::tokens(30));
        assert!(l.dcs(DCS).is_none());
    }

    #[test]
    fn create_task_bookkeeping() {
        let mut l = ledger();
        let h = ContentHash([1; 32]);
        let a = l.create_task(DU, h, Amount::tokens(10)).unwrap();
        assert_eq!(l.balance(DU), Amount::tokens(90));
        assert_eq!(l.task(a).unwrap().escrow, Amount::tokens(10));
        assert_eq!(l.task(a).unwrap().state, TaskState::Created);
        let b = l.create_task(DU, h, Amount::tokens(10)).unwrap();
        assert_ne!(a, b);
        assert_eq!(l.create_task(DU, h, Amount::tokens(1000)), Err(LedgerError::InsufficientBalance));
        assert_eq!(l.create_task(DU, h, Amount::ZERO), Err(LedgerError::ZeroReward));
    }

    #[test]
    fn submit_rules() {
        let mut l = ledger();
        let h = ContentHash([2; 32]);
        let id = l.create_task(DU, h, Amount::tokens(10)).unwrap();
        let t = gt();
        let x = statement_for(&h.0, &t);
        assert_eq!(l.submit_result(DCS, id, x, t), Err(LedgerError::NotRegistered));
        l.register_dcs(DCS, Amount::tokens(5)).unwrap();
        assert_eq!(
            l.submit_result(DCS, id, Statement([0; 32]), t),
            Err(LedgerError::StatementMismatch)
        );
        assert_eq!(l.submit_result(DCS, 9, x, t), Err(LedgerError::UnknownTask(9)));
        l.submit_result(DCS, id, x, t).unwrap();
        assert_eq!(l.task(id).unwrap().state, TaskState::Submitted);
        assert!(l.dcs(DCS).unwrap().pending_tasks.contains(&id));
        assert!(matches!(
            l.submit_result(DCS, id, x, t),
            Err(LedgerError::WrongState { .. })
        ));
    }

    #[test]
    fn challenge_window_is_inclusive() {
        let mut l = ledger();
        let id = submitted(&mut l);
        l.advance_time(100);
        l.challenge(CH, id, Amount::tokens(1)).unwrap();
        assert_eq!(l.task(id).unwrap().state, TaskState::Challenged);

        let mut l = ledger();
        let id = submitted(&mut l);
        l.advance_time(101);
        assert_eq!(l.challenge(CH, id, Amount::tokens(1)), Err(LedgerError::WindowClosed));

        let mut l = ledger();
        let id = submitted(&mut l);
        assert_eq!(
            l.challenge(CH, id, Amount::from_micro(999_999)),
            Err(LedgerError::InsufficientStake)
        );
        l.challenge(CH, id, Amount::tokens(1)).unwrap();
        assert!(matches!(
            l.challenge(DU, id, Amount::tokens(1)),
            Err(LedgerError::WrongState { .. })
        ));
    }

    #[test]
    fn claim_rules() {
        let mut l = ledger();
        let id = submitted(&mut l);
        l.advance_time(100);
        assert_eq!(l.claim_task_reward(DCS, id), Err(LedgerError::WindowOpen));
        l.advance_time(1);
        assert_eq!(l.claim_task_reward(CH, id), Err(LedgerError::WrongCaller));
        l.claim_task_reward(DCS, id).unwrap();
        assert_eq!(l.balance(DCS), Amount::tokens(25));
        assert!(matches!(l.claim_task_reward(DCS, id), Err(LedgerError::WrongState { .. })));
    }

    #[test]
    fn slash_settlement_half_split() {
        let mut l = ledger();
        let id = submitted(&mut l);
        l.challenge(CH, id, Amount::tokens(1)).unwrap();
        l.advance_time(50);
        assert_eq!(l.claim_challenge_reward(CH, id), Err(LedgerError::WindowOpen));
        l.advance_time(1);
        assert_eq!(l.claim_challenge_reward(DU, id), Err(LedgerError::WrongCaller));
        let supply = l.total_supply();
        l.claim_challenge_reward(CH, id).unwrap();
        assert_eq!(l.total_supply(), supply);
        assert_eq!(l.task(id).unwrap().state, TaskState::Slashed);
        // challenger: 10 - 1 + 1 + 2.5
        assert_eq!(l.balance(CH), "12.5".parse().unwrap());
        // du: 100 - 10 + 10 + 2.5
        assert_eq!(l.balance(DU), "102.5".parse().unwrap());
        // stake was exactly the minimum: deregistered with nothing left
        assert!(l.dcs(DCS).is_none());
        assert_eq!(l.balance(DCS), Amount::tokens(15));
        assert!(matches!(l.claim_challenge_reward(CH, id), Err(LedgerError::WrongState { .. })));
    }

    #[test]
    fn slashed_server_with_other_pending_task_lingers() {
        let mut l = ledger();
        l.register_dcs(DCS, Amount::tokens(7)).unwrap();
        let h = ContentHash([4; 32]);
        let t = gt();
        let a = l.create_task(DU, h, Amount::tokens(1)).unwrap();
        let b = l.create_task(DU, h, Amount::tokens(1)).unwrap();
        l.submit_result(DCS, a, statement_for(&h.0, &t), t).unwrap();
        l.submit_result(DCS, b, statement_for(&h.0, &t), t).unwrap();
        l.challenge(CH, a, Amount::tokens(1)).unwrap();
        l.advance_time(51);
        l.claim_challenge_reward(CH, a).unwrap();
        let rec = l.dcs(DCS).unwrap();
        assert_eq!(rec.staked, Amount::tokens(2));
        assert!(!rec.active);
        assert!(!l.is_registered(DCS));
        // second slash takes only what is left
        l.challenge(DU, b, Amount::tokens(1)).unwrap();
        l.advance_time(51);
        l.claim_challenge_reward(DU, b).unwrap();
        assert!(l.dcs(DCS).is_none());
        assert_eq!(l.balance(DCS), Amount::tokens(13));
    }

    #[test]
    fn log_records_failures_and_hashes() {
        let mut l = ledger();
        let before = l.state_hash();
        assert!(l.unregister_dcs(DCS).is_err());
        let rec = &l.log()[0];
        assert_eq!(rec.status, "err:not-registered");
        assert_eq!(rec.state_hash, before);
        l.advance_time(0);
        assert_eq!(l.now(), 0);
        l.advance_time(3);
        assert_eq!(l.now(), 3);
        let line = l.log()[2].to_string();
        assert!(line.starts_with("2\t0\tadvance_time\t-\tticks=3\tok\t"), "{line}");
        assert_eq!(l.export_log().lines().count(), 3);
    }

    #[test]
    fn json_roundtrip() {
        let mut l = ledger();
        submitted(&mut l);
        let back = Ledger::from_json(&l.to_json()).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.state_hash(), l.state_hash());
    }

    #[test]
    fn legal_transitions() {
        use TaskState::*;
        let all = [Created, Submitted, Challenged, Responded, Finalized, Slashed];
        let legal: Vec<_> = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_move_to(*b))
            .collect();
        assert_eq!(legal.len(), 6);
        assert!(all.iter().filter(|s| s.is_terminal()).all(|s| all.iter().all(|n| !s.can_move_to(*n))));
    }
}
