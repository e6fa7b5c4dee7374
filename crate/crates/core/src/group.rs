//! Bilinear-group arithmetic over BN254.
//!
//! Ciphertext-side values (`C'`, `C_i`, `D_i`) live in [`G1`]; key-side values
//! (`K`, `L`, `K_x` and their transform-key counterparts) live in [`G2`]. The
//! attribute map is a scalar hash `h(x)` lifted into both source groups, so
//! `e(F1(x), g2) == e(g1, F2(x))` and the cancellation inside the transform
//! product goes through under the asymmetric pairing.

use std::cell::Cell;
use std::sync::OnceLock;

use ark_bn254::Bn254;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{CurveGroup, Group};
use ark_ff::PrimeField;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::encoding::Canonical;

pub type Scalar = ark_bn254::Fr;
pub type G1 = ark_bn254::G1Projective;
pub type G2 = ark_bn254::G2Projective;
pub type Gt = PairingOutput<Bn254>;

/// Domain-separation prefixes for the module-wide hash.
pub const DOMAIN_ATTR: &[u8] = b"attr:";
pub const DOMAIN_KDF: &[u8] = b"kdf:";
pub const DOMAIN_STMT: &[u8] = b"stmt:";

pub fn g1() -> G1 {
    G1::generator()
}

pub fn g2() -> G2 {
    G2::generator()
}

/// `e(g1, g2)`, the generator of the target group.
pub fn gt() -> Gt {
    static GT: OnceLock<Gt> = OnceLock::new();
    *GT.get_or_init(Gt::generator)
}

thread_local! {
    static MILLER_LOOPS: Cell<u64> = const { Cell::new(0) };
}

fn record_pairings(n: usize) {
    MILLER_LOOPS.with(|c| c.set(c.get() + n as u64));
}

/// Number of Miller loops evaluated on this thread so far.
pub fn pairing_count() -> u64 {
    MILLER_LOOPS.with(Cell::get)
}

/// Runs `f` and reports how many pairings it evaluated on the current thread.
pub fn count_pairings<R>(f: impl FnOnce() -> R) -> (R, u64) {
    let before = pairing_count();
    let out = f();
    (out, pairing_count() - before)
}

pub fn pairing(a: G1, b: G2) -> Gt {
    record_pairings(1);
    Bn254::pairing(a, b)
}

/// Product of pairings `Π e(a_i, b_i)` with a single final exponentiation.
pub fn multi_pairing(a: &[G1], b: &[G2]) -> Gt {
    assert_eq!(a.len(), b.len(), "multi_pairing operands must have equal length");
    record_pairings(a.len());
    let a = G1::normalize_batch(a);
    let b = G2::normalize_batch(b);
    Bn254::multi_pairing(a, b)
}

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Deterministic map from a label to `Z_p`: SHA-256 with the `attr:` prefix,
/// reduced modulo the group order.
pub fn hash_to_scalar(label: &[u8]) -> Scalar {
    Scalar::from_be_bytes_mod_order(&sha256(&[DOMAIN_ATTR, label]))
}

pub fn attr_to_g1(attr: &[u8]) -> G1 {
    g1() * hash_to_scalar(attr)
}

pub fn attr_to_g2(attr: &[u8]) -> G2 {
    g2() * hash_to_scalar(attr)
}

/// Symmetric key derivation from an encapsulated target-group element.
pub fn kdf(k: &Gt) -> [u8; 32] {
    sha256(&[DOMAIN_KDF, &k.to_canonical_bytes()])
}

/// Replayable source of randomness for every "choose a random value" step.
///
/// The same seed and the same sequence of draws always yields the same
/// values, which is what makes scenarios and key material reproducible.
#[derive(Clone, Debug)]
pub struct RandomTape {
    seed: [u8; 32],
    counter: u64,
    rng: ChaCha20Rng,
}

impl RandomTape {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self {
            seed,
            counter: 0,
            rng: ChaCha20Rng::from_seed(seed),
        }
    }

    /// Expands a short numeric seed (CLI `--seed`) into a full tape seed.
    pub fn from_u64(seed: u64) -> Self {
        Self::from_seed(sha256(&[b"tape:", &seed.to_be_bytes()]))
    }

    /// Independent child tape, keyed by this tape's seed and a label.
    pub fn fork(&self, label: &str) -> Self {
        Self::from_seed(sha256(&[b"fork:", &self.seed, label.as_bytes()]))
    }

    pub fn seed(&self) -> [u8; 32] {
        self.seed
    }

    /// Number of draws taken from the tape so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn scalar(&mut self) -> Scalar {
        let mut wide = [0u8; 64];
        self.fill_bytes(&mut wide);
        Scalar::from_le_bytes_mod_order(&wide)
    }

    pub fn nonzero_scalar(&mut self) -> Scalar {
        loop {
            let s = self.scalar();
            if s != Scalar::from(0u64) {
                return s;
            }
        }
    }

    /// Uniform element of the target group.
    pub fn gt_element(&mut self) -> Gt {
        gt() * self.scalar()
    }

    pub fn bytes<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        self.fill_bytes(&mut out);
        out
    }
}

impl RngCore for RandomTape {
    fn next_u32(&mut self) -> u32 {
        self.counter += 1;
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.counter += 1;
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ark_ff::{BigInteger, Field, One, Zero};

    #[test]
    fn bilinearity_small_exponents() {
        let lhs = pairing(g1() * Scalar::from(2u64), g2() * Scalar::from(3u64));
        assert_eq!(lhs, pairing(g1(), g2()) * Scalar::from(6u64));
    }

    #[test]
    fn identity_pairs_to_identity() {
        assert!(pairing(G1::zero(), g2()).is_zero());
        assert!(pairing(g1(), G2::zero()).is_zero());
    }

    #[test]
    fn non_degenerate() {
        assert!(!pairing(g1(), g2()).is_zero());
        assert_ne!(pairing(g1(), g2()).0, <Bn254 as Pairing>::TargetField::one());
    }

    #[test]
    fn bilinearity_random() {
        let mut tape = RandomTape::from_u64(1);
        for _ in 0..100 {
            let (a, b) = (tape.scalar(), tape.scalar());
            // target-field exponentiation as the independent side
            let rhs = pairing(g1(), g2()).0.pow((a * b).into_bigint());
            assert_eq!(pairing(g1() * a, g2() * b).0, rhs);
        }
    }

    #[test]
    fn multi_pairing_matches_product() {
        let mut tape = RandomTape::from_u64(2);
        let a: Vec<G1> = (0..4).map(|_| g1() * tape.scalar()).collect();
        let b: Vec<G2> = (0..4).map(|_| g2() * tape.scalar()).collect();
        let product = a
            .iter()
            .zip(&b)
            .fold(Gt::zero(), |acc, (x, y)| acc + pairing(*x, *y));
        assert_eq!(multi_pairing(&a, &b), product);
    }

    #[test]
    fn pairing_meter_counts_miller_loops() {
        let (_, n) = count_pairings(|| {
            let _ = pairing(g1(), g2());
            multi_pairing(&[g1(); 3], &[g2(); 3])
        });
        assert_eq!(n, 4);
    }

    #[test]
    fn hash_to_scalar_is_deterministic_and_separating() {
        assert_eq!(hash_to_scalar(b"A"), hash_to_scalar(b"A"));
        assert_ne!(hash_to_scalar(b"A"), hash_to_scalar(b"B"));
        // output is a reduced field element, so its big-endian form is < p
        let v = hash_to_scalar(b"A").into_bigint();
        assert!(v < Scalar::MODULUS);
        assert_eq!(v.to_bytes_be().len(), 32);
    }

    #[test]
    fn attribute_maps_share_exponent() {
        assert_eq!(
            pairing(attr_to_g1(b"A"), g2()),
            pairing(g1(), attr_to_g2(b"A"))
        );
        assert_eq!(attr_to_g1(b""), g1() * hash_to_scalar(b""));
        assert!(!attr_to_g1(b"").is_zero());
        assert_ne!(attr_to_g2(b"A"), attr_to_g2(b"B"));

        let mut tape = RandomTape::from_u64(3);
        for attr in ["A", "doctor", "dept:cardiology"] {
            let r = tape.scalar();
            assert_eq!(
                pairing(attr_to_g1(attr.as_bytes()), g2() * r),
                pairing(g1() * r, attr_to_g2(attr.as_bytes()))
            );
        }
    }

    #[test]
    fn kdf_properties() {
        let x = gt() * Scalar::from(42u64);
        assert_eq!(kdf(&x), kdf(&x));
        assert_ne!(kdf(&x), kdf(&(x + gt())));
        assert_eq!(kdf(&x).len(), 32);
    }

    #[test]
    fn tape_replays() {
        let mut a = RandomTape::from_u64(9);
        let mut b = RandomTape::from_u64(9);
        let xs: Vec<Scalar> = (0..5).map(|_| a.scalar()).collect();
        let ys: Vec<Scalar> = (0..5).map(|_| b.scalar()).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.counter(), 5);
        assert_ne!(RandomTape::from_u64(9).scalar(), RandomTape::from_u64(10).scalar());
        assert_ne!(a.fork("x").scalar(), a.fork("y").scalar());
    }
}
