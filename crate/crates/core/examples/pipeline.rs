//! Full outsourced-decryption pipeline for one policy.
//!
//! ```text
//! cargo run --example pipeline -- "(doctor OR nurse) AND cardiology" doctor cardiology
//! ```

use poabe::abe::{hybrid_decrypt, hybrid_encrypt, keygen, retrieve, setup, tkgen, transform};
use poabe::encoding::Canonical;
use poabe::group::RandomTape;
use poabe::policy::{attribute_set, find_coefficients, parse_policy};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (policy_text, attrs) = match args.split_first() {
        Some((p, a)) if !a.is_empty() => (p.clone(), a.to_vec()),
        _ => (
            "(doctor OR nurse) AND cardiology".to_string(),
            vec!["doctor".to_string(), "cardiology".to_string()],
        ),
    };
    let policy = parse_policy(&policy_text).expect("policy parses");
    let mut tape = RandomTape::from_u64(42);

    // authority and data owner
    let (pk, msk) = setup(&mut tape);
    let message = b"patient 0172: echocardiogram within normal limits".to_vec();
    let pkg = hybrid_encrypt(&pk, &policy, &message, &mut tape);
    println!("policy      {policy}");
    println!("package     {} bytes", pkg.to_canonical_bytes().len());

    // data user blinds its key; only tk leaves the machine
    let sk = keygen(&pk, &msk, &attribute_set(attrs.clone()), &mut tape).expect("attributes given");
    let (tk, rk) = tkgen(&sk, &mut tape);
    println!("attributes  {attrs:?}");

    let Some(w) = find_coefficients(&pkg.ct.policy, &tk.attrs()) else {
        println!("attributes do not satisfy the policy; nothing to outsource");
        return;
    };
    println!("coefficients on rows {:?}", w.entries().keys().collect::<Vec<_>>());

    // server side
    let ct_t = transform(&tk, &pkg.ct, &w).expect("coefficients verified");

    // back on the user side: one exponentiation, then the symmetric layer
    let key = retrieve(&ct_t, &rk);
    let plaintext = hybrid_decrypt(&pkg, &key).expect("authentic payload");
    assert_eq!(plaintext, message);
    println!("recovered   {:?}", String::from_utf8_lossy(&plaintext));
}
