//! Test-side policy model: a separate expression tree with its own boolean
//! evaluator, used as the oracle for LSSS satisfiability.
#![allow(dead_code)]

use std::collections::BTreeSet;

use poabe::policy::PolicyFormula;
use rand::Rng;

#[derive(Debug, Clone)]
pub enum Expr {
    Leaf(String),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

/// Random binary tree with exactly `leaves` leaves drawn from a pool of
/// `pool` attribute names (repeats allowed).
pub fn random_expr<R: Rng>(rng: &mut R, leaves: usize, pool: usize) -> Expr {
    assert!(leaves >= 1);
    if leaves == 1 {
        return Expr::Leaf(format!("a{}", rng.gen_range(0..pool)));
    }
    let left = rng.gen_range(1..leaves);
    let l = Box::new(random_expr(rng, left, pool));
    let r = Box::new(random_expr(rng, leaves - left, pool));
    if rng.gen_bool(0.5) {
        Expr::And(l, r)
    } else {
        Expr::Or(l, r)
    }
}

pub fn eval(e: &Expr, set: &BTreeSet<String>) -> bool {
    match e {
        Expr::Leaf(a) => set.contains(a),
        Expr::And(l, r) => eval(l, set) && eval(r, set),
        Expr::Or(l, r) => eval(l, set) || eval(r, set),
    }
}

pub fn to_formula(e: &Expr) -> PolicyFormula {
    match e {
        Expr::Leaf(a) => PolicyFormula::leaf(a.clone()),
        Expr::And(l, r) => PolicyFormula::and(to_formula(l), to_formula(r)),
        Expr::Or(l, r) => PolicyFormula::or(to_formula(l), to_formula(r)),
    }
}

pub fn leaf_count(e: &Expr) -> usize {
    match e {
        Expr::Leaf(_) => 1,
        Expr::And(l, r) | Expr::Or(l, r) => leaf_count(l) + leaf_count(r),
    }
}

/// A set picked by walking the tree: both sides of AND, one side of OR.
pub fn satisfying_set<R: Rng>(rng: &mut R, e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn walk<R: Rng>(rng: &mut R, e: &Expr, out: &mut BTreeSet<String>) {
        match e {
            Expr::Leaf(a) => {
                out.insert(a.clone());
            }
            Expr::And(l, r) => {
                walk(rng, l, out);
                walk(rng, r, out);
            }
            Expr::Or(l, r) => {
                if rng.gen_bool(0.5) {
                    walk(rng, l, out)
                } else {
                    walk(rng, r, out)
                }
            }
        }
    }
    walk(rng, e, &mut out);
    out
}

/// Uniform random subset of the pool.
pub fn random_subset<R: Rng>(rng: &mut R, pool: usize) -> BTreeSet<String> {
    (0..pool)
        .filter(|_| rng.gen_bool(0.5))
        .map(|i| format!("a{i}"))
        .collect()
}
