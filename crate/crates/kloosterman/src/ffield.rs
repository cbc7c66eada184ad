//! Finite fields F_q (q = p^n) as discrete-log tables.
//!
//! A nonzero element is stored as its discrete log with respect to a fixed
//! generator; zero is a distinguished sentinel. Multiplication and inversion
//! are exponent arithmetic, addition goes through a Zech-logarithm table, and
//! the polynomial encoding is kept around for decoding and trace extraction.
//!
//! The modulus for (p, n) is chosen deterministically: monic degree-n
//! polynomials are scanned in increasing order of their base-p coefficient
//! value (constant term least significant) and the first one accepted is the
//! lexicographically smallest that is primitive *and* norm-compatible with the
//! moduli already chosen for every proper subfield — i.e. gen^((q-1)/(p^d-1))
//! is a root of the degree-d modulus. Compatibility is what makes the fixed
//! embedding sub.gen -> sup.gen^((Q-1)/(q_sub-1)) a ring homomorphism rather
//! than just a multiplicative one, so subfield traces and norms decode
//! consistently.

use crate::error::{Error, Result};
use std::sync::Arc;

/// Hard ceiling on table size.
pub const TABLE_BUDGET: u64 = 1 << 20;

const SENTINEL: u32 = u32::MAX;

/// A field element: zero, or gen^j with j in [0, q-2].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elt {
    Zero,
    Exp(u64),
}

impl Elt {
    pub fn is_zero(self) -> bool {
        matches!(self, Elt::Zero)
    }
}

#[derive(Debug)]
pub struct FieldTable {
    p: u64,
    n: u32,
    q: u64,
    /// Monic modulus, coefficients low-degree-first, length n+1.
    modulus: Vec<u64>,
    /// exp[j] = polynomial encoding of gen^j (base-p digits packed).
    exp: Vec<u32>,
    /// log[enc] = j with exp[j] = enc; log[0] is unused.
    log: Vec<u32>,
    /// zech[j] = dlog(1 + gen^j), SENTINEL where 1 + gen^j = 0.
    zech: Vec<u32>,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn proper_divisors(n: u32) -> Vec<u32> {
    (1..n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// Multiply two packed polynomials modulo `modulus` (degree n, monic), all in
/// base-p digit encoding. Used only while building tables.
fn poly_mulmod(a: u32, b: u32, modulus: &[u64], p: u64, n: u32) -> u32 {
    let to_digits = |mut v: u64| {
        let mut d = vec![0u64; n as usize];
        for x in d.iter_mut() {
            *x = v % p;
            v /= p;
        }
        d
    };
    let da = to_digits(a as u64);
    let db = to_digits(b as u64);
    let mut prod = vec![0u64; 2 * n as usize];
    for (i, &x) in da.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    // reduce: x^n = -(modulus[0] + ... + modulus[n-1] x^{n-1})
    for k in (n as usize..prod.len()).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for (i, &m) in modulus[..n as usize].iter().enumerate() {
            let sub = (c * m) % p;
            prod[k - n as usize + i] = (prod[k - n as usize + i] + p - sub) % p;
        }
    }
    let mut enc = 0u64;
    for &d in prod[..n as usize].iter().rev() {
        enc = enc * p + d;
    }
    enc as u32
}

/// Scan powers 1, x, x^2, ... of x modulo the candidate. Returns the exp table
/// when x has exact multiplicative order q-1 (which forces the candidate to be
/// both irreducible and primitive), None otherwise.
fn try_candidate(modulus: &[u64], p: u64, n: u32, q: u64) -> Option<Vec<u32>> {
    let x_enc: u32 = if n == 1 {
        // x reduces to -modulus[0]
        ((p - modulus[0] % p) % p) as u32
    } else {
        p as u32 // encoding of the polynomial x
    };
    let mut exp = Vec::with_capacity((q - 1) as usize);
    let mut cur: u32 = 1;
    for j in 0..q - 1 {
        if j > 0 && cur == 1 {
            return None; // order of x divides j < q-1
        }
        if cur == 0 {
            return None; // x is a zero divisor
        }
        exp.push(cur);
        cur = poly_mulmod(cur, x_enc, modulus, p, n);
    }
    if cur != 1 {
        return None;
    }
    Some(exp)
}

impl FieldTable {
    /// Build the table for F_{p^n} with the deterministic modulus choice.
    pub fn build(p: u64, n: u32) -> Result<Arc<FieldTable>> {
        if !is_prime(p) {
            return Err(Error::NonPrime(p));
        }
        if n == 0 {
            return Err(Error::IncompatibleFields("extension degree 0".into()));
        }
        let q = (0..n).try_fold(1u64, |acc, _| {
            let v = acc.checked_mul(p)?;
            (v <= TABLE_BUDGET).then_some(v)
        });
        let q = q.ok_or(Error::TableBudget(u64::MAX, TABLE_BUDGET))?;
        // Subfield moduli needed for the compatibility filter.
        let subs: Vec<Arc<FieldTable>> = proper_divisors(n)
            .into_iter()
            .map(|d| FieldTable::build(p, d))
            .collect::<Result<_>>()?;
        'cand: for k in 0..q {
            // Monic candidate with coefficient digits of k (constant term = least
            // significant digit), so candidates come in lexicographic order of
            // (c_{n-1}, ..., c_0).
            let mut modulus = Vec::with_capacity(n as usize + 1);
            let mut v = k;
            for _ in 0..n {
                modulus.push(v % p);
                v /= p;
            }
            modulus.push(1);
            let Some(exp) = try_candidate(&modulus, p, n, q) else {
                continue;
            };
            let mut log = vec![SENTINEL; q as usize];
            for (j, &enc) in exp.iter().enumerate() {
                log[enc as usize] = j as u32;
            }
            // Norm-compatibility with every proper subfield: gen^((q-1)/(p^d-1))
            // must be a root of the chosen degree-d modulus. Evaluate by Horner
            // in the candidate field (multiplication via the exp table, constant
            // addition on the low digit).
            for sub in &subs {
                let m = (q - 1) / (sub.q - 1);
                let mul_by_root = |enc: u32| -> u32 {
                    if enc == 0 {
                        0
                    } else {
                        exp[((log[enc as usize] as u64 + m) % (q - 1)) as usize]
                    }
                };
                let mut acc: u32 = 0;
                for &c in sub.modulus.iter().rev() {
                    acc = mul_by_root(acc);
                    let low = acc as u64 % p;
                    acc = acc - low as u32 + ((low + c) % p) as u32;
                }
                if acc != 0 {
                    continue 'cand;
                }
            }
            let mut zech = vec![SENTINEL; (q - 1) as usize];
            for (j, &enc) in exp.iter().enumerate() {
                let low = enc as u64 % p;
                let sum = enc - (low as u32) + ((low + 1) % p) as u32; // 1 + gen^j
                zech[j] = if sum == 0 { SENTINEL } else { log[sum as usize] };
            }
            return Ok(Arc::new(FieldTable {
                p,
                n,
                q,
                modulus,
                exp,
                log,
                zech,
            }));
        }
        unreachable!("a primitive compatible polynomial exists for every (p, n)")
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    /// Monic modulus, coefficients listed low-degree-first.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
    pub fn one(&self) -> Elt {
        Elt::Exp(0)
    }
    pub fn gen(&self) -> Elt {
        Elt::Exp(1 % (self.q - 1))
    }
    pub fn from_dlog(&self, j: u64) -> Elt {
        Elt::Exp(j % (self.q - 1))
    }

    /// The integer k as a field element (canonical prime-subfield embedding).
    pub fn from_int(&self, k: u64) -> Elt {
        let r = k % self.p;
        if r == 0 {
            Elt::Zero
        } else {
            Elt::Exp(self.log[r as usize] as u64)
        }
    }

    /// Index every element 0..q-1: zero at 0, gen^j at 1+j. Handy for tables.
    pub fn elt_index(&self, x: Elt) -> usize {
        match x {
            Elt::Zero => 0,
            Elt::Exp(j) => 1 + (j % (self.q - 1)) as usize,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        std::iter::once(Elt::Zero).chain((0..self.q - 1).map(Elt::Exp))
    }
    pub fn units(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.q - 1).map(Elt::Exp)
    }

    pub fn add(&self, a: Elt, b: Elt) -> Elt {
        let q1 = self.q - 1;
        match (a, b) {
            (Elt::Zero, y) => y,
            (x, Elt::Zero) => x,
            (Elt::Exp(i), Elt::Exp(j)) => {
                let d = (j + q1 - i % q1) % q1;
                let z = self.zech[d as usize];
                if z == SENTINEL {
                    Elt::Zero
                } else {
                    Elt::Exp((i + z as u64) % q1)
                }
            }
        }
    }

    pub fn neg(&self, a: Elt) -> Elt {
        if self.p == 2 {
            return a;
        }
        match a {
            Elt::Zero => Elt::Zero,
            Elt::Exp(i) => Elt::Exp((i + (self.q - 1) / 2) % (self.q - 1)),
        }
    }

    pub fn sub(&self, a: Elt, b: Elt) -> Elt {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elt, b: Elt) -> Elt {
        match (a, b) {
            (Elt::Zero, _) | (_, Elt::Zero) => Elt::Zero,
            (Elt::Exp(i), Elt::Exp(j)) => Elt::Exp((i + j) % (self.q - 1)),
        }
    }

    pub fn inv(&self, a: Elt) -> Result<Elt> {
        match a {
            Elt::Zero => Err(Error::ZeroInverse),
            Elt::Exp(i) => {
                let q1 = self.q - 1;
                Ok(Elt::Exp((q1 - i % q1) % q1))
            }
        }
    }

    pub fn pow(&self, a: Elt, k: i64) -> Result<Elt> {
        let q1 = (self.q - 1) as i64;
        match a {
            Elt::Zero => {
                if k > 0 {
                    Ok(Elt::Zero)
                } else if k == 0 {
                    Ok(self.one())
                } else {
                    Err(Error::ZeroToNegativePower)
                }
            }
            Elt::Exp(i) => {
                let e = (i as i64 % q1) * (k % q1) % q1;
                Ok(Elt::Exp(((e % q1 + q1) % q1) as u64))
            }
        }
    }

    /// Polynomial coefficients of an element, low-degree-first, length n.
    pub fn decode(&self, a: Elt) -> Vec<u64> {
        let mut enc = match a {
            Elt::Zero => 0u64,
            Elt::Exp(j) => self.exp[(j % (self.q - 1)) as usize] as u64,
        };
        let mut digits = vec![0u64; self.n as usize];
        for d in digits.iter_mut() {
            *d = enc % self.p;
            enc /= self.p;
        }
        digits
    }

    /// Inverse of `decode`.
    pub fn encode(&self, digits: &[u64]) -> Result<Elt> {
        if digits.len() != self.n as usize || digits.iter().any(|&d| d >= self.p) {
            return Err(Error::IncompatibleFields("bad coefficient vector".into()));
        }
        let mut enc = 0u64;
        for &d in digits.iter().rev() {
            enc = enc * self.p + d;
        }
        if enc == 0 {
            Ok(Elt::Zero)
        } else {
            Ok(Elt::Exp(self.log[enc as usize] as u64))
        }
    }

    /// Trace to the prime field as an integer in [0, p).
    pub fn prime_trace(&self, a: Elt) -> u64 {
        let mut s = Elt::Zero;
        let mut x = a;
        for _ in 0..self.n {
            s = self.add(s, x);
            x = self.pow(x, self.p as i64).expect("positive power");
        }
        let digits = self.decode(s);
        debug_assert!(digits[1..].iter().all(|&d| d == 0), "trace not in F_p");
        digits[0]
    }
}

/// Check that `sub` embeds in `sup` via gen -> gen^((Q-1)/(q-1)).
fn check_tower(sub: &FieldTable, sup: &FieldTable) -> Result<u64> {
    if sub.p != sup.p || !sup.n.is_multiple_of(sub.n) {
        return Err(Error::IncompatibleFields(format!(
            "F_{}^{} does not embed in F_{}^{}",
            sub.p, sub.n, sup.p, sup.n
        )));
    }
    Ok((sup.q - 1) / (sub.q - 1))
}

/// Image of a sub-field element under the fixed embedding.
pub fn embed(sub: &FieldTable, sup: &FieldTable, x: Elt) -> Result<Elt> {
    let m = check_tower(sub, sup)?;
    Ok(match x {
        Elt::Zero => Elt::Zero,
        Elt::Exp(i) => Elt::Exp((i % (sub.q - 1)) * m),
    })
}

/// Decode an element of `sup` lying in the embedded copy of `sub`.
pub fn to_subfield(sub: &FieldTable, sup: &FieldTable, x: Elt) -> Result<Elt> {
    let m = check_tower(sub, sup)?;
    match x {
        Elt::Zero => Ok(Elt::Zero),
        Elt::Exp(i) => {
            let i = i % (sup.q - 1);
            if !i.is_multiple_of(m) {
                Err(Error::NotInSubfield)
            } else {
                Ok(Elt::Exp(i / m))
            }
        }
    }
}

/// Relative trace and norm of x in sup down to sub, both returned as elements
/// of sub. Computed by Frobenius-power sums/products in sup and decoded back
/// through the fixed embedding.
pub fn subfield_trace_norm(sub: &FieldTable, sup: &FieldTable, x: Elt) -> Result<(Elt, Elt)> {
    check_tower(sub, sup)?;
    let d = sup.n / sub.n;
    let mut tr = Elt::Zero;
    let mut cur = x;
    for _ in 0..d {
        tr = sup.add(tr, cur);
        cur = sup.pow(cur, sub.q as i64)?;
    }
    let trace = to_subfield(sub, sup, tr)?;
    let norm = match x {
        Elt::Zero => Elt::Zero,
        Elt::Exp(i) => Elt::Exp(i % (sub.q - 1)),
    };
    Ok((trace, norm))
}

// --- small polynomial helpers over a FieldTable (used by base change) ---

pub(crate) fn poly_mul(f: &FieldTable, a: &[Elt], b: &[Elt]) -> Vec<Elt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Elt::Zero; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    out
}

/// Remainder of a modulo monic polynomial b (low-degree-first, b.last() = 1).
pub(crate) fn poly_rem(f: &FieldTable, a: &[Elt], b: &[Elt]) -> Vec<Elt> {
    debug_assert_eq!(b.last(), Some(&Elt::Exp(0)), "modulus must be monic");
    let mut r: Vec<Elt> = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        let k = r.len() - 1 - db;
        if !lead.is_zero() {
            for (i, &c) in b.iter().enumerate() {
                let t = f.mul(lead, c);
                r[k + i] = f.sub(r[k + i], t);
            }
        }
        r.pop();
    }
    r.resize(db, Elt::Zero);
    r
}

pub(crate) fn poly_eval(f: &FieldTable, a: &[Elt], x: Elt) -> Elt {
    let mut acc = Elt::Zero;
    for &c in a.iter().rev() {
        acc = f.add(f.mul(acc, x), c);
    }
    acc
}
