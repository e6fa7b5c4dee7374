//! Monotone boolean access policies and their LSSS form.
//!
//! Policies are AND/OR formulas over attribute strings. They compile to a
//! share-generating matrix `(M, rho)` with one row per leaf; an attribute set
//! satisfies the policy iff `(1, 0, ..., 0)` lies in the span of the rows it
//! owns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ark_ff::{Field, One, Zero};
use thiserror::Error;

use crate::encoding::{put_len, Canonical, DecodeError, Reader, SCALAR_LEN};
use crate::group::{RandomTape, Scalar};

pub type AttributeSet = BTreeSet<String>;

/// Builds an [`AttributeSet`] from string slices.
pub fn attribute_set<I, S>(attrs: I) -> AttributeSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    attrs.into_iter().map(Into::into).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyFormula {
    Leaf(String),
    And(Box<PolicyFormula>, Box<PolicyFormula>),
    Or(Box<PolicyFormula>, Box<PolicyFormula>),
}

impl PolicyFormula {
    pub fn leaf(attr: impl Into<String>) -> Self {
        PolicyFormula::Leaf(attr.into())
    }

    pub fn and(l: PolicyFormula, r: PolicyFormula) -> Self {
        PolicyFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: PolicyFormula, r: PolicyFormula) -> Self {
        PolicyFormula::Or(Box::new(l), Box::new(r))
    }

    /// Left-nested conjunction of the given attributes. Panics on an empty list.
    pub fn all_of<S: AsRef<str>>(attrs: &[S]) -> Self {
        Self::fold(attrs, Self::and)
    }

    /// Left-nested disjunction of the given attributes. Panics on an empty list.
    pub fn any_of<S: AsRef<str>>(attrs: &[S]) -> Self {
        Self::fold(attrs, Self::or)
    }

    fn fold<S: AsRef<str>>(attrs: &[S], op: fn(Self, Self) -> Self) -> Self {
        let mut it = attrs.iter().map(|a| Self::leaf(a.as_ref()));
        let first = it.next().expect("policy needs at least one attribute");
        it.fold(first, op)
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyFormula::Leaf(_) => 1,
            PolicyFormula::And(l, r) | PolicyFormula::Or(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Leaf attributes in left-to-right order (duplicates kept).
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PolicyFormula::Leaf(a) => out.push(a),
            PolicyFormula::And(l, r) | PolicyFormula::Or(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Plain boolean evaluation.
    pub fn evaluate(&self, attrs: &AttributeSet) -> bool {
        match self {
            PolicyFormula::Leaf(a) => attrs.contains(a),
            PolicyFormula::And(l, r) => l.evaluate(attrs) && r.evaluate(attrs),
            PolicyFormula::Or(l, r) => l.evaluate(attrs) || r.evaluate(attrs),
        }
    }
}

impl fmt::Display for PolicyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyFormula::Leaf(a) => f.write_str(a),
            PolicyFormula::And(l, r) => write!(f, "({l} AND {r})"),
            PolicyFormula::Or(l, r) => write!(f, "({l} OR {r})"),
        }
    }
}

impl std::str::FromStr for PolicyFormula {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("policy syntax error at byte {position}: {message}")]
pub struct PolicyParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    And,
    Or,
    Open,
    Close,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.' | '@' | '/')
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, PolicyParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            out.push((pos, Token::Open));
        } else if c == ')' {
            chars.next();
            out.push((pos, Token::Close));
        } else if is_ident_char(c) {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                word.push(c);
                chars.next();
            }
            let tok = match word.as_str() {
                "AND" | "and" => Token::And,
                "OR" | "or" => Token::Or,
                _ => Token::Ident(word),
            };
            out.push((pos, tok));
        } else {
            return Err(PolicyParseError {
                position: pos,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: impl Into<String>) -> PolicyParseError {
        PolicyParseError {
            position: self.offset(),
            message: message.into(),
        }
    }

    // expr := term (OR term)*
    fn expr(&mut self) -> Result<PolicyFormula, PolicyParseError> {
        let mut lhs = self.term()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            lhs = PolicyFormula::or(lhs, self.term()?);
        }
        Ok(lhs)
    }

    // term := factor (AND factor)*
    fn term(&mut self) -> Result<PolicyFormula, PolicyParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            lhs = PolicyFormula::and(lhs, self.factor()?);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<PolicyFormula, PolicyParseError> {
        match self.peek().cloned() {
            Some(Token::Ident(a)) => {
                self.pos += 1;
                Ok(PolicyFormula::Leaf(a))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(t) => Err(self.error(format!("expected attribute or '(', found {t:?}"))),
            None => Err(self.error("unexpected end of policy")),
        }
    }
}

/// Parses `A AND (B OR C)`-style policies. AND binds tighter than OR and both
/// associate to the left; keywords are `AND`/`and` and `OR`/`or`.
pub fn parse_policy(text: &str) -> Result<PolicyFormula, PolicyParseError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let f = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LsssError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("row {0} has the wrong number of columns")]
    RaggedRow(usize),
    #[error("row count {rows} does not match rho length {rho}")]
    RhoLength { rows: usize, rho: usize },
    #[error("row {0} maps to an empty attribute")]
    EmptyAttribute(usize),
}

/// Share-generating matrix `M` (l x n) with row labelling `rho`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsssMatrix {
    rows: Vec<Vec<Scalar>>,
    rho: Vec<String>,
}

impl LsssMatrix {
    pub fn new(rows: Vec<Vec<Scalar>>, rho: Vec<String>) -> Result<Self, LsssError> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(LsssError::Empty);
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(LsssError::RaggedRow(i));
        }
        if rows.len() != rho.len() {
            return Err(LsssError::RhoLength {
                rows: rows.len(),
                rho: rho.len(),
            });
        }
        if let Some(i) = rho.iter().position(String::is_empty) {
            return Err(LsssError::EmptyAttribute(i));
        }
        Ok(Self { rows, rho })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<Scalar>] {
        &self.rows
    }

    pub fn rho(&self, i: usize) -> &str {
        &self.rho[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.rho
    }
}

impl Canonical for LsssMatrix {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_len(out, self.num_rows());
        put_len(out, self.num_cols());
        for row in &self.rows {
            for v in row {
                v.encode_to(out);
            }
        }
        for label in &self.rho {
            label.encode_to(out);
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let l = r.len_prefix(SCALAR_LEN)?;
        let n = r.len_prefix(0)?;
        if l.saturating_mul(n).saturating_mul(SCALAR_LEN) > r.remaining() {
            return Err(DecodeError::Truncated {
                needed: l * n * SCALAR_LEN,
                offset: 0,
            });
        }
        let rows = (0..l)
            .map(|_| (0..n).map(|_| Scalar::decode_from(r)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let rho = (0..l)
            .map(|_| String::decode_from(r))
            .collect::<Result<Vec<_>, _>>()?;
        LsssMatrix::new(rows, rho).map_err(|_| DecodeError::Invalid("malformed LSSS matrix"))
    }
}

/// Converts a formula to LSSS form by vector labelling.
///
/// The root carries `(1)`. An OR node hands its vector to both children. An
/// AND node with vector `v` opens a fresh column `c`: the left child gets
/// `v | 1` and the right child `0 | -1` in that column. Leaves become rows,
/// zero-padded to the final column count, so rows == leaves and columns ==
/// 1 + number of AND gates.
pub fn to_lsss(f: &PolicyFormula) -> LsssMatrix {
    fn walk(
        node: &PolicyFormula,
        vector: Vec<Scalar>,
        cols: &mut usize,
        rows: &mut Vec<Vec<Scalar>>,
        rho: &mut Vec<String>,
    ) {
        match node {
            PolicyFormula::Leaf(a) => {
                rows.push(vector);
                rho.push(a.clone());
            }
            PolicyFormula::Or(l, r) => {
                walk(l, vector.clone(), cols, rows, rho);
                walk(r, vector, cols, rows, rho);
            }
            PolicyFormula::And(l, r) => {
                let mut left = vector;
                left.resize(*cols, Scalar::zero());
                left.push(Scalar::one());
                let mut right = vec![Scalar::zero(); *cols];
                right.push(-Scalar::one());
                *cols += 1;
                walk(l, left, cols, rows, rho);
                walk(r, right, cols, rows, rho);
            }
        }
    }

    let mut cols = 1;
    let mut rows = Vec::new();
    let mut rho = Vec::new();
    walk(f, vec![Scalar::one()], &mut cols, &mut rows, &mut rho);
    for row in &mut rows {
        row.resize(cols, Scalar::zero());
    }
    LsssMatrix::new(rows, rho).expect("formula leaves are non-empty attributes")
}

/// Shares of a secret `s` under `M`: `lambda_i = v . M_i` with
/// `v = (s, y_2, ..., y_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    pub secret: Scalar,
    pub blinding: Vec<Scalar>,
    pub shares: Vec<Scalar>,
}

/// Draws `y_2..y_n` from the tape (in order) and computes the row shares.
pub fn share_secret(m: &LsssMatrix, s: Scalar, tape: &mut RandomTape) -> ShareVector {
    let blinding: Vec<Scalar> = (1..m.num_cols()).map(|_| tape.scalar()).collect();
    let v: Vec<Scalar> = std::iter::once(s).chain(blinding.iter().copied()).collect();
    let shares = m
        .rows()
        .iter()
        .map(|row| row.iter().zip(&v).map(|(a, b)| *a * b).sum())
        .collect();
    ShareVector {
        secret: s,
        blinding,
        shares,
    }
}

/// Reconstruction coefficients `omega_i` keyed by row index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReconstructionCoefficients(BTreeMap<usize, Scalar>);

impl ReconstructionCoefficients {
    pub fn new(entries: BTreeMap<usize, Scalar>) -> Self {
        Self(entries)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Scalar)> + '_ {
        self.0.iter().map(|(i, w)| (*i, *w))
    }

    pub fn get(&self, row: usize) -> Option<Scalar> {
        self.0.get(&row).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &BTreeMap<usize, Scalar> {
        &self.0
    }

    /// `sum omega_i * lambda_i`.
    pub fn combine(&self, shares: &[Scalar]) -> Scalar {
        self.iter().map(|(i, w)| w * shares[i]).sum()
    }

    /// Checks that every indexed row exists, carries an attribute in `attrs`,
    /// and that `sum omega_i * M_i == (1, 0, ..., 0)`.
    pub fn is_valid_for(&self, m: &LsssMatrix, attrs: &AttributeSet) -> bool {
        if self.is_empty() {
            return false;
        }
        if self
            .0
            .keys()
            .any(|&i| i >= m.num_rows() || !attrs.contains(m.rho(i)))
        {
            return false;
        }
        let mut acc = vec![Scalar::zero(); m.num_cols()];
        for (i, w) in self.iter() {
            for (a, v) in acc.iter_mut().zip(m.row(i)) {
                *a += w * v;
            }
        }
        acc[0].is_one() && acc[1..].iter().all(Zero::is_zero)
    }
}

impl Canonical for ReconstructionCoefficients {
    fn encode_to(&self, out: &mut Vec<u8>) {
        put_len(out, self.0.len());
        for (i, w) in &self.0 {
            put_len(out, *i);
            w.encode_to(out);
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.len_prefix(4 + SCALAR_LEN)?;
        let mut entries = BTreeMap::new();
        let mut last: Option<usize> = None;
        for _ in 0..n {
            let i = r.u32()? as usize;
            if last.is_some_and(|p| p >= i) {
                return Err(DecodeError::NonCanonical("coefficient rows not ascending"));
            }
            last = Some(i);
            entries.insert(i, Scalar::decode_from(r)?);
        }
        Ok(Self(entries))
    }
}

/// Solves `sum_{i in I} omega_i M_i = (1, 0, ..., 0)` over `Z_p` where
/// `I = { i : rho(i) in attrs }`.
///
/// Gauss-Jordan elimination with unknowns ordered by row index; the first
/// usable pivot is always taken and free unknowns are fixed to zero, so the
/// result is a deterministic function of `(M, rho, attrs)`. Zero-valued
/// coefficients are omitted. Returns `None` when the set does not satisfy
/// the policy.
pub fn find_coefficients(m: &LsssMatrix, attrs: &AttributeSet) -> Option<ReconstructionCoefficients> {
    let owned: Vec<usize> = (0..m.num_rows())
        .filter(|&i| attrs.contains(m.rho(i)))
        .collect();
    if owned.is_empty() {
        return None;
    }
    let n = m.num_cols();
    let k = owned.len();
    // equation j: sum_t omega_{owned[t]} * M[owned[t]][j] = target_j
    let mut a: Vec<Vec<Scalar>> = (0..n)
        .map(|j| {
            let mut eq: Vec<Scalar> = owned.iter().map(|&i| m.row(i)[j]).collect();
            eq.push(if j == 0 { Scalar::one() } else { Scalar::zero() });
            eq
        })
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (equation, unknown)
    let mut rank = 0;
    for col in 0..k {
        if rank == n {
            break;
        }
        let Some(p) = (rank..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let inv = a[rank][col].inverse().expect("pivot is nonzero");
        for v in a[rank].iter_mut() {
            *v *= inv;
        }
        for r in 0..n {
            if r != rank && !a[r][col].is_zero() {
                let factor = a[r][col];
                for c in col..=k {
                    let delta = factor * a[rank][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivots.push((rank, col));
        rank += 1;
    }

    // inconsistent: a zeroed equation with nonzero right-hand side
    if a[rank..].iter().any(|eq| !eq[k].is_zero()) {
        return None;
    }

    let entries = pivots
        .into_iter()
        .filter(|&(r, _)| !a[r][k].is_zero())
        .map(|(r, col)| (owned[col], a[r][k]))
        .collect();
    Some(ReconstructionCoefficients(entries))
}
