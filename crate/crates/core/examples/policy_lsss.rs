//! Policy parsing, LSSS compilation and coefficient search.
//!
//! ```text
//! cargo run --example policy_lsss -- "A AND (B OR C) AND D"
//! ```

use ark_ff::{BigInteger, PrimeField};
use poabe::group::{RandomTape, Scalar};
use poabe::policy::{attribute_set, find_coefficients, parse_policy, share_secret, to_lsss};

/// Small field elements print as signed integers, everything else as hex.
fn show(x: &Scalar) -> String {
    let neg = -*x;
    let small = |v: &Scalar| {
        let bytes = v.into_bigint().to_bytes_be();
        bytes[..24].iter().all(|b| *b == 0).then(|| u64::from_be_bytes(bytes[24..].try_into().unwrap()))
    };
    match (small(x), small(&neg)) {
        (Some(v), _) => v.to_string(),
        (_, Some(v)) => format!("-{v}"),
        _ => format!("0x{}", hex::encode(x.into_bigint().to_bytes_be())),
    }
}

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "A AND (B OR C) AND D".to_string());
    let formula = parse_policy(&text).expect("policy parses");
    let m = to_lsss(&formula);
    println!("formula {formula}");
    println!("matrix  {} x {}", m.num_rows(), m.num_cols());
    for i in 0..m.num_rows() {
        let row: Vec<String> = m.row(i).iter().map(show).collect();
        println!("  {:>3}  [{}]", m.rho(i), row.join(", "));
    }

    let mut tape = RandomTape::from_u64(5);
    let s = tape.scalar();
    let shares = share_secret(&m, s, &mut tape);

    let leaves: Vec<&str> = formula.leaves();
    let n = leaves.len().min(10);
    println!("subsets of the first {n} leaves:");
    for mask in 1u32..(1 << n) {
        let set = attribute_set((0..n).filter(|i| mask & (1 << i) != 0).map(|i| leaves[i]));
        match find_coefficients(&m, &set) {
            Some(w) => {
                assert!(formula.evaluate(&set));
                assert_eq!(w.combine(&shares.shares), s);
                let coeffs: Vec<String> = w.iter().map(|(r, c)| format!("{r}:{}", show(&c))).collect();
                println!("  {set:?} -> {{{}}}", coeffs.join(", "));
            }
            None => assert!(!formula.evaluate(&set)),
        }
    }
}
