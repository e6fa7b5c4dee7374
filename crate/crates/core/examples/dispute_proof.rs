//! Statement digest, proof generation and verification, including what the
//! verifier costs in pairings.

use poabe::abe::{encapsulate, keygen, setup, tkgen, transform};
use poabe::encoding::Canonical;
use poabe::group::{count_pairings, RandomTape};
use poabe::policy::{attribute_set, find_coefficients, PolicyFormula};
use poabe::proof::{preprocess, prove, verify, Verdict, Witness, TRANSFORM_RELATION};

fn main() {
    let (pk_prove, vk) = preprocess(TRANSFORM_RELATION).expect("known relation");
    let mut tape = RandomTape::from_u64(3);
    let (pk, msk) = setup(&mut tape);

    println!("{:>5} {:>10} {:>9} {:>8}", "rows", "proof B", "pairings", "verdict");
    for n in [1usize, 5, 10, 20, 40] {
        let attrs: Vec<String> = (0..n).map(|i| format!("role{i}")).collect();
        let sk = keygen(&pk, &msk, &attribute_set(attrs.clone()), &mut tape).expect("non-empty");
        let (tk, _) = tkgen(&sk, &mut tape);
        let (ct, _) = encapsulate(&pk, &PolicyFormula::all_of(&attrs), &mut tape);
        let w = find_coefficients(&ct.policy, &tk.attrs()).expect("satisfied");
        let t = transform(&tk, &ct, &w).expect("valid").t;
        let witness = Witness { ct, tk, w, t };
        let x = witness.statement();
        let proof = prove(&pk_prove, &x, &witness).expect("honest witness");
        let (verdict, pairings) = count_pairings(|| verify(&vk, &x, &proof));
        println!(
            "{n:>5} {:>10} {pairings:>9} {:>8}",
            proof.to_canonical_bytes().len(),
            format!("{verdict:?}")
        );

        // a wrong T with a statement recomputed to match still fails the product check
        let mut forged = witness.clone();
        forged.t += tape.gt_element();
        let x_forged = forged.statement();
        let bad = prove(&pk_prove, &x_forged, &forged).expect("statement matches");
        assert!(matches!(verify(&vk, &x_forged, &bad), Verdict::Reject(_)));
        // and the honest proof does not verify against the forged statement
        assert!(!verify(&vk, &x_forged, &proof).is_accept());
    }
}
