//! Dispute evidence for transform results.
//!
//! The public input binds a task to its claimed result:
//!
//! ```text
//! data_hash = H(enc(CT) || enc(TK) || enc(w))          (content-store key)
//! statement = H("stmt:" || data_hash || enc(T))
//! ```
//!
//! The inner hash is exactly the content hash recorded on the ledger, so the
//! contract can recompute the statement from on-chain data plus `T`.
//!
//! [`ProofBackend`] is the preprocess/prove/verify interface. The only backend
//! shipped is [`RevealBackend`]: the proof is the witness itself and the
//! verifier re-evaluates the relation. It is sound with no slack, but neither
//! succinct nor zero-knowledge; the witness is public task data anyway.

use std::fmt;

use thiserror::Error;

use crate::abe::{check_coefficients, transform_product, Ciphertext, TransformKey};
use crate::encoding::{put_len, Canonical, DecodeError, Reader};
use crate::group::{sha256, Gt, DOMAIN_STMT};
use crate::policy::ReconstructionCoefficients;

/// Identifier of the transform relation, the only one with a circuit.
pub const TRANSFORM_RELATION: &str = "cp-poabe/transform/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Statement(pub [u8; 32]);

impl Statement {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(Statement(bytes.try_into().ok()?))
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Hash of the encoded task triple; also its content-store key.
pub fn task_data_hash(ct: &Ciphertext, tk: &TransformKey, w: &ReconstructionCoefficients) -> [u8; 32] {
    let mut buf = ct.to_canonical_bytes();
    tk.encode_to(&mut buf);
    w.encode_to(&mut buf);
    sha256(&[&buf])
}

/// Outer hash over an already-known data hash and a result.
pub fn statement_for(data_hash: &[u8; 32], t: &Gt) -> Statement {
    Statement(sha256(&[DOMAIN_STMT, data_hash, &t.to_canonical_bytes()]))
}

pub fn statement_digest(
    ct: &Ciphertext,
    tk: &TransformKey,
    w: &ReconstructionCoefficients,
    t: &Gt,
) -> Statement {
    statement_for(&task_data_hash(ct, tk, w), t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub ct: Ciphertext,
    pub tk: TransformKey,
    pub w: ReconstructionCoefficients,
    pub t: Gt,
}

impl Witness {
    pub fn statement(&self) -> Statement {
        statement_digest(&self.ct, &self.tk, &self.w, &self.t)
    }
}

impl Canonical for Witness {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.ct.encode_to(out);
        self.tk.encode_to(out);
        self.w.encode_to(out);
        self.t.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Witness {
            ct: Ciphertext::decode_from(r)?,
            tk: TransformKey::decode_from(r)?,
            w: ReconstructionCoefficients::decode_from(r)?,
            t: Gt::decode_from(r)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvingKey {
    pub backend: u8,
    pub relation: String,
    pub key_id: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyingKey {
    pub backend: u8,
    pub relation: String,
    pub key_id: [u8; 32],
}

/// Container: `tag (1 byte) || u32 len || body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofBundle {
    pub backend: u8,
    pub body: Vec<u8>,
}

impl Canonical for ProofBundle {
    fn encode_to(&self, out: &mut Vec<u8>) {
        out.push(self.backend);
        put_len(out, self.body.len());
        out.extend_from_slice(&self.body);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let backend = r.u8()?;
        let n = r.len_prefix(1)?;
        Ok(ProofBundle {
            backend,
            body: r.take(n)?.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("proving key belongs to backend {found}, expected {expected}")]
    WrongBackend { expected: u8, found: u8 },
    #[error("witness does not hash to the statement")]
    StatementMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    WrongBackend,
    KeyMismatch,
    Malformed(DecodeError),
    StatementMismatch,
    InvalidCoefficients,
    ProductMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

pub trait ProofBackend {
    fn tag(&self) -> u8;

    fn preprocess(&self, relation: &str) -> Result<(ProvingKey, VerifyingKey), ProofError>;

    fn prove(&self, pk: &ProvingKey, x: &Statement, w: &Witness) -> Result<ProofBundle, ProofError>;

    fn verify(&self, vk: &VerifyingKey, x: &Statement, proof: &ProofBundle) -> Verdict;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RevealBackend;

impl RevealBackend {
    pub const TAG: u8 = 0x01;

    fn key_id(relation: &str) -> [u8; 32] {
        sha256(&[b"reveal-key:", relation.as_bytes()])
    }
}

impl ProofBackend for RevealBackend {
    fn tag(&self) -> u8 {
        Self::TAG
    }

    fn preprocess(&self, relation: &str) -> Result<(ProvingKey, VerifyingKey), ProofError> {
        if relation != TRANSFORM_RELATION {
            return Err(ProofError::UnknownRelation(relation.to_string()));
        }
        let key_id = Self::key_id(relation);
        Ok((
            ProvingKey {
                backend: Self::TAG,
                relation: relation.to_string(),
                key_id,
            },
            VerifyingKey {
                backend: Self::TAG,
                relation: relation.to_string(),
                key_id,
            },
        ))
    }

    fn prove(&self, pk: &ProvingKey, x: &Statement, w: &Witness) -> Result<ProofBundle, ProofError> {
        if pk.backend != Self::TAG {
            return Err(ProofError::WrongBackend {
                expected: Self::TAG,
                found: pk.backend,
            });
        }
        if w.statement() != *x {
            return Err(ProofError::StatementMismatch);
        }
        let mut body = pk.key_id.to_vec();
        w.encode_to(&mut body);
        Ok(ProofBundle {
            backend: Self::TAG,
            body,
        })
    }

    /// Accepts iff the revealed witness hashes to `x`, its coefficients are
    /// valid for the key's attributes, and the re-evaluated transform product
    /// equals the revealed `T`.
    fn verify(&self, vk: &VerifyingKey, x: &Statement, proof: &ProofBundle) -> Verdict {
        if proof.backend != Self::TAG || vk.backend != Self::TAG {
            return Verdict::Reject(Rejection::WrongBackend);
        }
        let mut r = Reader::new(&proof.body);
        let key_id: [u8; 32] = match r.array() {
            Ok(k) => k,
            Err(e) => return Verdict::Reject(Rejection::Malformed(e)),
        };
        if key_id != vk.key_id {
            return Verdict::Reject(Rejection::KeyMismatch);
        }
        let witness = match Witness::decode_from(&mut r).and_then(|w| r.finish().map(|_| w)) {
            Ok(w) => w,
            Err(e) => return Verdict::Reject(Rejection::Malformed(e)),
        };
        if witness.statement() != *x {
            return Verdict::Reject(Rejection::StatementMismatch);
        }
        if check_coefficients(&witness.tk, &witness.ct, &witness.w).is_err() {
            return Verdict::Reject(Rejection::InvalidCoefficients);
        }
        if transform_product(&witness.tk, &witness.ct, &witness.w) != witness.t {
            return Verdict::Reject(Rejection::ProductMismatch);
        }
        Verdict::Accept
    }
}

pub fn preprocess(relation: &str) -> Result<(ProvingKey, VerifyingKey), ProofError> {
    RevealBackend.preprocess(relation)
}

pub fn prove(pk: &ProvingKey, x: &Statement, w: &Witness) -> Result<ProofBundle, ProofError> {
    RevealBackend.prove(pk, x, w)
}

pub fn verify(vk: &VerifyingKey, x: &Statement, proof: &ProofBundle) -> Verdict {
    RevealBackend.verify(vk, x, proof)
}
