//! CP-ABE with outsourced decryption, in the KEM setting.
//!
//! ```text
//! setup      -> PK = (g1, g2, e(g1,g2)^alpha, g1^a, g2^a),  MSK = g2^alpha
//! keygen     -> K = g2^alpha * g2^(a r),  L = g2^r,  K_x = F2(x)^r
//! encapsulate-> C = M * e(g1,g2)^(alpha s),  C' = g1^s,
//!               C_i = g1^(a lambda_i) * F1(rho(i))^(-t_i),  D_i = g1^t_i
//! tkgen      -> K' = K^(-1/z),  L' = L^(1/z),  K'_x = K_x^(1/z),  RK = z
//! transform  -> T = e(C', K') * e(prod C_i^w_i, L') * prod e(D_i^w_i, K'_rho(i))
//! retrieve   -> M = C * T^z
//! ```
//!
//! For honest inputs `T = e(g1,g2)^(-alpha s / z)`, so `C * T^z` strips the
//! blinding factor. The transform uses only pairings, exponentiations and
//! products; the single inversion lives in `tkgen`.
//!
//! Randomness is drawn from a [`RandomTape`] in a fixed order so tests can
//! replay it: `setup` draws `a` then `alpha`; `keygen` draws `r`;
//! `encapsulate` draws the KEM exponent, then `s`, then `y_2..y_n`, then
//! `t_1..t_l`; `tkgen` draws `z`; `hybrid_encrypt` draws the encapsulation
//! followed by a 12-byte nonce.

use std::collections::BTreeMap;

use ark_ff::{Field, Zero};
use chacha20poly1305::aead::{AeadInPlace, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce, Tag};
use thiserror::Error;

use crate::encoding::{put_len, Canonical, DecodeError, Reader, G1_LEN, G2_LEN};
use crate::group::{
    attr_to_g1, attr_to_g2, g1, g2, gt, kdf, multi_pairing, pairing, Gt, RandomTape, Scalar, G1,
    G2,
};
use crate::policy::{
    find_coefficients, share_secret, to_lsss, AttributeSet, LsssMatrix, PolicyFormula,
    ReconstructionCoefficients,
};

pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbeError {
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("attribute set does not satisfy the access policy")]
    Unsatisfied,
    #[error("coefficient row {0} is outside the policy matrix")]
    RowOutOfRange(usize),
    #[error("transform key has no component for attribute {attr:?} (row {row})")]
    AttributeMismatch { row: usize, attr: String },
    #[error("payload authentication failed")]
    AuthenticationFailure,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub g1: G1,
    pub g2: G2,
    pub e_gg_alpha: Gt,
    /// `g^a` on the ciphertext side, used by `encapsulate`.
    pub g1_a: G1,
    /// `g^a` on the key side, used by `keygen`.
    pub g2_a: G2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterKey {
    pub g2_alpha: G2,
    /// Kept so tests can check `e_gg_alpha` against it.
    pub alpha: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub k: G2,
    pub l: G2,
    pub k_x: BTreeMap<String, G2>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformKey {
    pub k: G2,
    pub l: G2,
    pub k_x: BTreeMap<String, G2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrieveKey(Scalar);

impl RetrieveKey {
    /// `None` for `z = 0`.
    pub fn new(z: Scalar) -> Option<Self> {
        (!z.is_zero()).then_some(Self(z))
    }

    pub fn z(&self) -> Scalar {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub policy: LsssMatrix,
    pub c: Gt,
    pub c_prime: G1,
    /// `(C_i, D_i)` for each policy row.
    pub rows: Vec<(G1, G1)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformedCiphertext {
    pub c: Gt,
    pub t: Gt,
}

fn attrs_of(k_x: &BTreeMap<String, G2>) -> AttributeSet {
    k_x.keys().cloned().collect()
}

impl SecretKey {
    pub fn attrs(&self) -> AttributeSet {
        attrs_of(&self.k_x)
    }

    /// Pairing checks: `e(g1, K) = e(g,g)^alpha * e(g1^a, L)` and
    /// `e(F1(x), L) = e(g1, K_x)` for every attribute.
    pub fn is_well_formed(&self, pk: &PublicKey) -> bool {
        pairing(pk.g1, self.k) == pk.e_gg_alpha + pairing(pk.g1_a, self.l)
            && self
                .k_x
                .iter()
                .all(|(x, kx)| pairing(attr_to_g1(x.as_bytes()), self.l) == pairing(pk.g1, *kx))
    }
}

impl TransformKey {
    pub fn attrs(&self) -> AttributeSet {
        attrs_of(&self.k_x)
    }

    /// The checks that hold without knowing `z`: `e(F1(x), L') = e(g1, K'_x)`.
    pub fn attributes_consistent(&self) -> bool {
        self.k_x
            .iter()
            .all(|(x, kx)| pairing(attr_to_g1(x.as_bytes()), self.l) == pairing(g1(), *kx))
    }
}

pub fn setup(tape: &mut RandomTape) -> (PublicKey, MasterKey) {
    let a = tape.scalar();
    let alpha = tape.scalar();
    let pk = PublicKey {
        g1: g1(),
        g2: g2(),
        e_gg_alpha: gt() * alpha,
        g1_a: g1() * a,
        g2_a: g2() * a,
    };
    let msk = MasterKey {
        g2_alpha: g2() * alpha,
        alpha,
    };
    (pk, msk)
}

pub fn keygen(
    pk: &PublicKey,
    msk: &MasterKey,
    attrs: &AttributeSet,
    tape: &mut RandomTape,
) -> Result<SecretKey, AbeError> {
    if attrs.is_empty() {
        return Err(AbeError::EmptyAttributeSet);
    }
    let r = tape.nonzero_scalar();
    Ok(SecretKey {
        k: msk.g2_alpha + pk.g2_a * r,
        l: pk.g2 * r,
        k_x: attrs
            .iter()
            .map(|x| (x.clone(), attr_to_g2(x.as_bytes()) * r))
            .collect(),
    })
}

/// Encrypts a fresh uniform target-group element under `policy` and returns it
/// alongside the ciphertext.
pub fn encapsulate(
    pk: &PublicKey,
    policy: &PolicyFormula,
    tape: &mut RandomTape,
) -> (Ciphertext, Gt) {
    encapsulate_lsss(pk, to_lsss(policy), tape)
}

pub fn encapsulate_lsss(pk: &PublicKey, policy: LsssMatrix, tape: &mut RandomTape) -> (Ciphertext, Gt) {
    let key = tape.gt_element();
    let s = tape.scalar();
    let shares = share_secret(&policy, s, tape).shares;
    let rows = shares
        .iter()
        .enumerate()
        .map(|(i, lambda)| {
            let t = tape.scalar();
            let c_i = pk.g1_a * lambda - attr_to_g1(policy.rho(i).as_bytes()) * t;
            (c_i, pk.g1 * t)
        })
        .collect();
    let ct = Ciphertext {
        c: key + pk.e_gg_alpha * s,
        c_prime: pk.g1 * s,
        rows,
        policy,
    };
    (ct, key)
}

pub fn tkgen(sk: &SecretKey, tape: &mut RandomTape) -> (TransformKey, RetrieveKey) {
    let z = tape.nonzero_scalar();
    let z_inv = z.inverse().expect("z is nonzero");
    let tk = TransformKey {
        k: sk.k * (-z_inv),
        l: sk.l * z_inv,
        k_x: sk.k_x.iter().map(|(x, kx)| (x.clone(), *kx * z_inv)).collect(),
    };
    (tk, RetrieveKey(z))
}

/// Checks that `w` only touches rows the transform key can serve and that it
/// reconstructs the unit vector.
pub fn check_coefficients(
    tk: &TransformKey,
    ct: &Ciphertext,
    w: &ReconstructionCoefficients,
) -> Result<(), AbeError> {
    if w.is_empty() {
        return Err(AbeError::Unsatisfied);
    }
    for (row, _) in w.iter() {
        if row >= ct.policy.num_rows() {
            return Err(AbeError::RowOutOfRange(row));
        }
        let attr = ct.policy.rho(row);
        if !tk.k_x.contains_key(attr) {
            return Err(AbeError::AttributeMismatch {
                row,
                attr: attr.to_string(),
            });
        }
    }
    if !w.is_valid_for(&ct.policy, &tk.attrs()) {
        return Err(AbeError::Unsatisfied);
    }
    Ok(())
}

/// Evaluates the transform product for already-validated inputs as a single
/// multi-pairing of `2 + |w|` terms.
pub(crate) fn transform_product(tk: &TransformKey, ct: &Ciphertext, w: &ReconstructionCoefficients) -> Gt {
    let mut lhs = Vec::with_capacity(w.len() + 2);
    let mut rhs = Vec::with_capacity(w.len() + 2);
    let mut c_acc = G1::zero();
    for (row, omega) in w.iter() {
        let (c_i, d_i) = ct.rows[row];
        c_acc += c_i * omega;
        lhs.push(d_i * omega);
        rhs.push(tk.k_x[ct.policy.rho(row)]);
    }
    lhs.push(ct.c_prime);
    rhs.push(tk.k);
    lhs.push(c_acc);
    rhs.push(tk.l);
    multi_pairing(&lhs, &rhs)
}

/// Server-side partial decryption.
pub fn transform(
    tk: &TransformKey,
    ct: &Ciphertext,
    w: &ReconstructionCoefficients,
) -> Result<TransformedCiphertext, AbeError> {
    check_coefficients(tk, ct, w)?;
    Ok(TransformedCiphertext {
        c: ct.c,
        t: transform_product(tk, ct, w),
    })
}

/// Finds coefficients for the key's attribute set and transforms, or returns
/// [`AbeError::Unsatisfied`].
pub fn transform_auto(tk: &TransformKey, ct: &Ciphertext) -> Result<TransformedCiphertext, AbeError> {
    let w = find_coefficients(&ct.policy, &tk.attrs()).ok_or(AbeError::Unsatisfied)?;
    transform(tk, ct, &w)
}

/// `M = C * T^z`.
pub fn retrieve(ct_t: &TransformedCiphertext, rk: &RetrieveKey) -> Gt {
    ct_t.c + ct_t.t * rk.z()
}

/// ABE ciphertext of a KEM key plus the payload sealed under that key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridPackage {
    pub ct: Ciphertext,
    pub nonce: [u8; NONCE_LEN],
    pub tag: [u8; TAG_LEN],
    pub body: Vec<u8>,
}

fn cipher_for(key: &Gt) -> ChaCha20Poly1305 {
    ChaCha20Poly1305::new(Key::from_slice(&kdf(key)))
}

pub fn hybrid_encrypt(
    pk: &PublicKey,
    policy: &PolicyFormula,
    plaintext: &[u8],
    tape: &mut RandomTape,
) -> HybridPackage {
    let (ct, key) = encapsulate(pk, policy, tape);
    let nonce: [u8; NONCE_LEN] = tape.bytes();
    let mut body = plaintext.to_vec();
    let tag = cipher_for(&key)
        .encrypt_in_place_detached(Nonce::from_slice(&nonce), &ct.to_canonical_bytes(), &mut body)
        .expect("payload within AEAD length limits");
    HybridPackage {
        ct,
        nonce,
        tag: tag.into(),
        body,
    }
}

/// Opens the payload with the encapsulated key. Any other key, or any change
/// to the ciphertext or payload, fails authentication.
pub fn hybrid_decrypt(pkg: &HybridPackage, key: &Gt) -> Result<Vec<u8>, AbeError> {
    let mut body = pkg.body.clone();
    cipher_for(key)
        .decrypt_in_place_detached(
            Nonce::from_slice(&pkg.nonce),
            &pkg.ct.to_canonical_bytes(),
            &mut body,
            Tag::from_slice(&pkg.tag),
        )
        .map_err(|_| AbeError::AuthenticationFailure)?;
    Ok(body)
}

fn encode_attr_map(map: &BTreeMap<String, G2>, out: &mut Vec<u8>) {
    put_len(out, map.len());
    for (x, v) in map {
        x.encode_to(out);
        v.encode_to(out);
    }
}

fn decode_attr_map(r: &mut Reader<'_>) -> Result<BTreeMap<String, G2>, DecodeError> {
    let n = r.len_prefix(4 + G2_LEN)?;
    let mut map = BTreeMap::new();
    let mut last: Option<String> = None;
    for _ in 0..n {
        let x = String::decode_from(r)?;
        if x.is_empty() {
            return Err(DecodeError::Invalid("empty attribute"));
        }
        if last.as_ref().is_some_and(|p| *p >= x) {
            return Err(DecodeError::NonCanonical("attributes not strictly ascending"));
        }
        last = Some(x.clone());
        map.insert(x, G2::decode_from(r)?);
    }
    Ok(map)
}

impl Canonical for PublicKey {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.g1.encode_to(out);
        self.g2.encode_to(out);
        self.e_gg_alpha.encode_to(out);
        self.g1_a.encode_to(out);
        self.g2_a.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let pk = PublicKey {
            g1: G1::decode_from(r)?,
            g2: G2::decode_from(r)?,
            e_gg_alpha: Gt::decode_from(r)?,
            g1_a: G1::decode_from(r)?,
            g2_a: G2::decode_from(r)?,
        };
        if pk.g1 != g1() || pk.g2 != g2() {
            return Err(DecodeError::Invalid("public key generators differ from the fixed ones"));
        }
        Ok(pk)
    }
}

impl Canonical for MasterKey {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.g2_alpha.encode_to(out);
        self.alpha.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let msk = MasterKey {
            g2_alpha: G2::decode_from(r)?,
            alpha: Scalar::decode_from(r)?,
        };
        if msk.g2_alpha != g2() * msk.alpha {
            return Err(DecodeError::Invalid("master key components disagree"));
        }
        Ok(msk)
    }
}

impl Canonical for SecretKey {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.k.encode_to(out);
        self.l.encode_to(out);
        encode_attr_map(&self.k_x, out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(SecretKey {
            k: G2::decode_from(r)?,
            l: G2::decode_from(r)?,
            k_x: decode_attr_map(r)?,
        })
    }
}

impl Canonical for TransformKey {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.k.encode_to(out);
        self.l.encode_to(out);
        encode_attr_map(&self.k_x, out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(TransformKey {
            k: G2::decode_from(r)?,
            l: G2::decode_from(r)?,
            k_x: decode_attr_map(r)?,
        })
    }
}

impl Canonical for RetrieveKey {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.0.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        RetrieveKey::new(Scalar::decode_from(r)?).ok_or(DecodeError::Invalid("retrieve key is zero"))
    }
}

impl Canonical for Ciphertext {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.policy.encode_to(out);
        self.c.encode_to(out);
        self.c_prime.encode_to(out);
        put_len(out, self.rows.len());
        for (c_i, d_i) in &self.rows {
            c_i.encode_to(out);
            d_i.encode_to(out);
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let policy = LsssMatrix::decode_from(r)?;
        let c = Gt::decode_from(r)?;
        let c_prime = G1::decode_from(r)?;
        let n = r.len_prefix(2 * G1_LEN)?;
        if n != policy.num_rows() {
            return Err(DecodeError::Invalid("ciphertext row count differs from policy"));
        }
        let rows = (0..n)
            .map(|_| Ok((G1::decode_from(r)?, G1::decode_from(r)?)))
            .collect::<Result<Vec<_>, DecodeError>>()?;
        Ok(Ciphertext {
            policy,
            c,
            c_prime,
            rows,
        })
    }
}

impl Canonical for TransformedCiphertext {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.c.encode_to(out);
        self.t.encode_to(out);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(TransformedCiphertext {
            c: Gt::decode_from(r)?,
            t: Gt::decode_from(r)?,
        })
    }
}

/// Container layout: `ct || nonce || tag || u32 len || body`.
impl Canonical for HybridPackage {
    fn encode_to(&self, out: &mut Vec<u8>) {
        self.ct.encode_to(out);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.tag);
        put_len(out, self.body.len());
        out.extend_from_slice(&self.body);
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let ct = Ciphertext::decode_from(r)?;
        let nonce = r.array()?;
        let tag = r.array()?;
        let n = r.len_prefix(1)?;
        Ok(HybridPackage {
            ct,
            nonce,
            tag,
            body: r.take(n)?.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{attribute_set, parse_policy};
    use ark_ff::One;

    fn world(seed: u64) -> (PublicKey, MasterKey, RandomTape) {
        let mut tape = RandomTape::from_u64(seed);
        let (pk, msk) = setup(&mut tape);
        (pk, msk, tape)
    }

    #[test]
    fn setup_is_deterministic_under_tape() {
        let (pk1, msk1, _) = world(1);
        let (pk2, msk2, _) = world(1);
        assert_eq!(pk1, pk2);
        assert_eq!(msk1, msk2);
        assert_eq!(pk1.e_gg_alpha, pairing(g1(), g2()) * msk1.alpha);
        let (pk3, _, _) = world(2);
        assert_ne!(pk1.e_gg_alpha, pk3.e_gg_alpha);
    }

    #[test]
    fn keygen_shapes_and_checks() {
        let (pk, msk, mut tape) = world(3);
        let sk = keygen(&pk, &msk, &attribute_set(["A"]), &mut tape).unwrap();
        assert!(sk.is_well_formed(&pk));
        let sk3 = keygen(&pk, &msk, &attribute_set(["A", "B", "C"]), &mut tape).unwrap();
        assert_eq!(sk3.k_x.len(), 3);
        assert!(sk3.is_well_formed(&pk));
        assert_eq!(
            keygen(&pk, &msk, &AttributeSet::new(), &mut tape),
            Err(AbeError::EmptyAttributeSet)
        );

        let mut t1 = tape.clone();
        let mut t2 = tape.clone();
        assert_eq!(
            keygen(&pk, &msk, &attribute_set(["A", "B"]), &mut t1).unwrap(),
            keygen(&pk, &msk, &attribute_set(["A", "B"]), &mut t2).unwrap()
        );

        let mut forged = sk3.clone();
        forged.k += g2();
        assert!(!forged.is_well_formed(&pk));
    }

    #[test]
    fn encapsulate_matches_replayed_tape() {
        let (pk, _, mut tape) = world(4);
        let policy = parse_policy("A AND B").unwrap();
        let mut replay = tape.clone();
        let (ct, key) = encapsulate(&pk, &policy, &mut tape);
        let _ = replay.gt_element();
        let s = replay.scalar();
        assert_eq!(ct.c - key, pk.e_gg_alpha * s);
        assert_eq!(pairing(ct.c_prime, g2()), gt() * s);
        assert_eq!(ct.rows.len(), 2);

        let (single, _) = encapsulate(&pk, &PolicyFormula::leaf("A"), &mut tape);
        assert_eq!(single.rows.len(), 1);
    }

    #[test]
    fn tkgen_inverts_blinding() {
        let (pk, msk, mut tape) = world(5);
        let sk = keygen(&pk, &msk, &attribute_set(["A", "B"]), &mut tape).unwrap();
        let (tk, rk) = tkgen(&sk, &mut tape);
        let z = rk.z();
        assert_eq!(tk.k * (-z), sk.k);
        assert_eq!(tk.l * z, sk.l);
        for (x, kx) in &sk.k_x {
            assert_eq!(tk.k_x[x] * z, *kx);
        }
        assert!(tk.attributes_consistent());
        // e(g1, K') * e(g1^a, L') = e(g,g)^(-alpha/z)
        let lhs = pairing(g1(), tk.k) + pairing(pk.g1_a, tk.l);
        assert_eq!(lhs * z, -pk.e_gg_alpha);
    }

    #[test]
    fn pipeline_and_identity() {
        let (pk, msk, mut tape) = world(6);
        let policy = parse_policy("A AND B").unwrap();
        let sk = keygen(&pk, &msk, &attribute_set(["A", "B"]), &mut tape).unwrap();
        let (tk, rk) = tkgen(&sk, &mut tape);
        let mut replay = tape.clone();
        let (ct, key) = encapsulate(&pk, &policy, &mut tape);
        let w = find_coefficients(&ct.policy, &tk.attrs()).unwrap();
        let out = transform(&tk, &ct, &w).unwrap();
        assert_eq!(retrieve(&out, &rk), key);

        // T = e(g,g)^(-alpha s / z)
        let _ = replay.gt_element();
        let s = replay.scalar();
        let expected = gt() * (-(msk.alpha * s) * rk.z().inverse().unwrap());
        assert_eq!(out.t, expected);

        let tampered = TransformedCiphertext { c: out.c, t: out.t + gt() };
        assert_ne!(retrieve(&tampered, &rk), key);
        assert_eq!(retrieve(&out, &rk), retrieve(&out, &rk));
    }

    #[test]
    fn transform_rejects_bad_coefficients() {
        let (pk, msk, mut tape) = world(7);
        let (ct, _) = encapsulate(&pk, &parse_policy("A AND B").unwrap(), &mut tape);
        let sk = keygen(&pk, &msk, &attribute_set(["A"]), &mut tape).unwrap();
        let (tk, _) = tkgen(&sk, &mut tape);
        let full = find_coefficients(&ct.policy, &attribute_set(["A", "B"])).unwrap();
        assert_eq!(
            transform(&tk, &ct, &full),
            Err(AbeError::AttributeMismatch {
                row: 1,
                attr: "B".into()
            })
        );
        assert_eq!(
            transform(&tk, &ct, &ReconstructionCoefficients::default()),
            Err(AbeError::Unsatisfied)
        );
        let partial = ReconstructionCoefficients::new([(0, Scalar::one())].into());
        assert_eq!(transform(&tk, &ct, &partial), Err(AbeError::Unsatisfied));
        let oob = ReconstructionCoefficients::new([(9, Scalar::one())].into());
        assert_eq!(transform(&tk, &ct, &oob), Err(AbeError::RowOutOfRange(9)));
        assert_eq!(transform_auto(&tk, &ct), Err(AbeError::Unsatisfied));
    }

    #[test]
    fn hybrid_roundtrip_and_authentication() {
        let (pk, _, mut tape) = world(8);
        let policy = parse_policy("A OR B").unwrap();
        let payload: Vec<u8> = (0..1024u32).map(|i| (i * 31 % 251) as u8).collect();
        let mut replay = tape.clone();
        let pkg = hybrid_encrypt(&pk, &policy, &payload, &mut tape);
        let (_, key) = encapsulate(&pk, &policy, &mut replay);
        assert_eq!(hybrid_decrypt(&pkg, &key).unwrap(), payload);
        assert_eq!(
            hybrid_decrypt(&pkg, &(key + gt())),
            Err(AbeError::AuthenticationFailure)
        );
        let mut corrupted = pkg.clone();
        corrupted.body[3] ^= 1;
        assert_eq!(hybrid_decrypt(&corrupted, &key), Err(AbeError::AuthenticationFailure));

        let mut replay = tape.clone();
        let empty = hybrid_encrypt(&pk, &policy, &[], &mut tape);
        let (_, key) = encapsulate(&pk, &policy, &mut replay);
        assert!(empty.body.is_empty());
        assert_eq!(hybrid_decrypt(&empty, &key).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn key_and_ciphertext_encodings_roundtrip() {
        let (pk, msk, mut tape) = world(9);
        let sk = keygen(&pk, &msk, &attribute_set(["A", "B", "C"]), &mut tape).unwrap();
        let (tk, rk) = tkgen(&sk, &mut tape);
        let pkg = hybrid_encrypt(&pk, &parse_policy("A AND (B OR C)").unwrap(), b"hi", &mut tape);
        assert_eq!(PublicKey::from_canonical_bytes(&pk.to_canonical_bytes()).unwrap(), pk);
        assert_eq!(MasterKey::from_canonical_bytes(&msk.to_canonical_bytes()).unwrap(), msk);
        assert_eq!(SecretKey::from_canonical_bytes(&sk.to_canonical_bytes()).unwrap(), sk);
        assert_eq!(TransformKey::from_canonical_bytes(&tk.to_canonical_bytes()).unwrap(), tk);
        assert_eq!(RetrieveKey::from_canonical_bytes(&rk.to_canonical_bytes()).unwrap(), rk);
        assert_eq!(HybridPackage::from_canonical_bytes(&pkg.to_canonical_bytes()).unwrap(), pkg);
        assert!(RetrieveKey::from_canonical_bytes(&[0u8; 32]).is_err());
    }
}
