//! Content-addressed blob storage.
//!
//! Blobs are keyed by the SHA-256 of their bytes. Only the key goes on the
//! ledger; ciphertexts and outsourced task data live here.
//!
//! [`DirStore`] lays blobs out as `<root>/<first-2-hex>/<full-hex>` and
//! writes through a temp file plus rename.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use crate::abe::{Ciphertext, TransformKey};
use crate::encoding::{Canonical, DecodeError, Reader};
use crate::group::sha256;
use crate::policy::ReconstructionCoefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        ContentHash(sha256(&[bytes]))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(ContentHash(bytes.try_into().ok()?))
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("blob {0} not found")]
    NotFound(ContentHash),
    #[error("blob {0} does not hash to its key")]
    IntegrityMismatch(ContentHash),
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
}

pub trait BlobStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError>;
    fn get(&self, h: &ContentHash) -> Result<Vec<u8>, StoreError>;

    fn contains(&self, h: &ContentHash) -> bool {
        self.get(h).is_ok()
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    blobs: RwLock<HashMap<ContentHash, Vec<u8>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blobs.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl BlobStore for MemoryStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        let h = ContentHash::of(bytes);
        self.blobs
            .write()
            .unwrap()
            .entry(h)
            .or_insert_with(|| bytes.to_vec());
        Ok(h)
    }

    fn get(&self, h: &ContentHash) -> Result<Vec<u8>, StoreError> {
        let bytes = self
            .blobs
            .read()
            .unwrap()
            .get(h)
            .cloned()
            .ok_or(StoreError::NotFound(*h))?;
        if ContentHash::of(&bytes) != *h {
            return Err(StoreError::IntegrityMismatch(*h));
        }
        Ok(bytes)
    }
}

#[derive(Debug)]
pub struct DirStore {
    root: PathBuf,
    temp_seq: AtomicU64,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            temp_seq: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, h: &ContentHash) -> PathBuf {
        let hex = h.to_hex();
        self.root.join(&hex[..2]).join(hex)
    }
}

impl BlobStore for DirStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        let h = ContentHash::of(bytes);
        let path = self.path_for(&h);
        if path.exists() {
            return Ok(h);
        }
        let dir = path.parent().expect("blob path has a shard directory");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".tmp-{}-{}-{}",
            h.to_hex(),
            std::process::id(),
            self.temp_seq.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(h)
    }

    fn get(&self, h: &ContentHash) -> Result<Vec<u8>, StoreError> {
        let bytes = match fs::read(self.path_for(h)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(*h)),
            Err(e) => return Err(e.into()),
        };
        if ContentHash::of(&bytes) != *h {
            return Err(StoreError::IntegrityMismatch(*h));
        }
        Ok(bytes)
    }
}

/// Outsourced decryption task: ciphertext, transform key and the coefficients
/// chosen by the data user. Its encoding is the preimage of the statement's
/// inner hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskData {
    pub ct: Ciphertext,
    pub tk: TransformKey,
    pub w: ReconstructionCoefficients,
}

impl TaskData {
    pub fn content_hash(&self) -> ContentHash {
        ContentHash::of(&self.to_canonical_bytes())
    }
}

impl Canonical for TaskData {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.ct.encode_to(out);
        self.tk.encode_to(out);
        self.w.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(TaskData {
            ct: Ciphertext::decode_from(r)?,
            tk: TransformKey::decode_from(r)?,
            w: ReconstructionCoefficients::decode_from(r)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abe::{encapsulate, keygen, setup, tkgen};
    use crate::group::RandomTape;
    use crate::policy::{attribute_set, find_coefficients, parse_policy};
    use crate::proof::task_data_hash;

    #[test]
    fn memory_put_is_idempotent() {
        let store = MemoryStore::new();
        let a = store.put(b"blob").unwrap();
        let b = store.put(b"blob").unwrap();
        assert_eq!(a, b);
        assert_eq!(store.len(), 1);
        assert_eq!(a.0, sha256(&[b"blob"]));
        assert_eq!(store.get(&a).unwrap(), b"blob");
        assert!(matches!(store.get(&ContentHash([0; 32])), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn dir_layout_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let store = DirStore::open(dir.path()).unwrap();
        let h = store.put(b"hello").unwrap();
        let hex = h.to_hex();
        assert!(dir.path().join(&hex[..2]).join(&hex).is_file());
        assert_eq!(store.get(&h).unwrap(), b"hello");
        assert_eq!(store.put(b"hello").unwrap(), h);
        assert!(matches!(store.get(&ContentHash([1; 32])), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn large_blob_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let store = DirStore::open(dir.path()).unwrap();
        let blob: Vec<u8> = (0..10 * 1024 * 1024u32).map(|i| (i ^ (i >> 8)) as u8).collect();
        let h = store.put(&blob).unwrap();
        assert_eq!(store.get(&h).unwrap(), blob);
    }

    #[test]
    fn tampered_blob_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = DirStore::open(dir.path()).unwrap();
        let h = store.put(b"original bytes").unwrap();
        fs::write(store.path_for(&h), b"0riginal bytes").unwrap();
        assert!(matches!(store.get(&h), Err(StoreError::IntegrityMismatch(_))));
    }

    #[test]
    fn concurrent_puts() {
        let dir = tempfile::tempdir().unwrap();
        let store = DirStore::open(dir.path()).unwrap();
        std::thread::scope(|s| {
            for i in 0..8u8 {
                let store = &store;
                s.spawn(move || {
                    for j in 0..20u8 {
                        let blob = [i % 2, j];
                        let h = store.put(&blob).unwrap();
                        assert_eq!(store.get(&h).unwrap(), blob);
                    }
                });
            }
        });
    }

    #[test]
    fn task_data_hash_binds_statement_inner_hash() {
        let mut tape = RandomTape::from_u64(12);
        let (pk, msk) = setup(&mut tape);
        let sk = keygen(&pk, &msk, &attribute_set(["A", "B"]), &mut tape).unwrap();
        let (tk, _) = tkgen(&sk, &mut tape);
        let (ct, _) = encapsulate(&pk, &parse_policy("A AND B").unwrap(), &mut tape);
        let w = find_coefficients(&ct.policy, &tk.attrs()).unwrap();
        let data = TaskData { ct, tk, w };
        let store = MemoryStore::new();
        let h = store.put(&data.to_canonical_bytes()).unwrap();
        assert_eq!(h, data.content_hash());
        assert_eq!(h.0, task_data_hash(&data.ct, &data.tk, &data.w));
        let back = TaskData::from_canonical_bytes(&store.get(&h).unwrap()).unwrap();
        assert_eq!(back, data);
    }
}
