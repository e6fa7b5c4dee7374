//! Ciphertext-policy attribute-based encryption with payable outsourced
//! decryption.
//!
//! - [`group`]: BN254 pairing arithmetic, attribute hashing, KDF, [`group::RandomTape`].
//! - [`encoding`]: canonical binary encoding shared by every value.
//! - [`policy`]: AND/OR policies, LSSS compilation, reconstruction coefficients.
//! - [`abe`]: setup, keygen, encapsulate, tkgen, transform, retrieve, hybrid KEM.
//! - [`proof`]: statement digest and the preprocess/prove/verify interface.
//! - [`store`]: content-addressed blob store holding ciphertexts and task data.
//! - [`ledger`]: the stake/challenge/response/claim contract on a simulated chain.
//! - [`harness`]: actors, end-to-end scenarios and timing benchmarks.

pub mod abe;
pub mod encoding;
pub mod group;
pub mod policy;
pub mod ledger;
pub mod proof;
pub mod store;
pub mod harness;
