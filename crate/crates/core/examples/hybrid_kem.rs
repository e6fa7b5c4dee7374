//! The symmetric layer: the payload key is derived from the encapsulated
//! target-group element, so a wrong partial decryption shows up as an
//! authentication failure.

use poabe::abe::{encapsulate, hybrid_decrypt, hybrid_encrypt, keygen, retrieve, setup, tkgen, transform_auto, AbeError, HybridPackage};
use poabe::encoding::Canonical;
use poabe::group::{gt, kdf, RandomTape};
use poabe::policy::{attribute_set, PolicyFormula};

fn main() {
    let mut tape = RandomTape::from_u64(9);
    let (pk, msk) = setup(&mut tape);
    let policy = PolicyFormula::all_of(&["finance", "audit"]);

    let (_, m) = encapsulate(&pk, &policy, &mut tape);
    println!("kdf(M)      {}", hex::encode(kdf(&m)));
    println!("kdf(M * g)  {}", hex::encode(kdf(&(m + gt()))));

    for len in [0usize, 1024, 64 * 1024] {
        let payload: Vec<u8> = (0..len).map(|i| (i % 251) as u8).collect();
        let pkg = hybrid_encrypt(&pk, &policy, &payload, &mut tape);
        let bytes = pkg.to_canonical_bytes();
        let back = HybridPackage::from_canonical_bytes(&bytes).expect("canonical");
        println!("payload {len:>6} bytes -> package {:>6} bytes", bytes.len());

        let sk = keygen(&pk, &msk, &attribute_set(["finance", "audit"]), &mut tape).expect("non-empty");
        let (tk, rk) = tkgen(&sk, &mut tape);
        let mut ct_t = transform_auto(&tk, &back.ct).expect("authorized");
        assert_eq!(hybrid_decrypt(&back, &retrieve(&ct_t, &rk)).expect("authentic"), payload);

        // a server returning T * g_T
        ct_t.t += gt();
        assert_eq!(
            hybrid_decrypt(&back, &retrieve(&ct_t, &rk)),
            Err(AbeError::AuthenticationFailure)
        );
    }
    println!("tampered partial decryptions fail authentication");
}
