//! Exact character values in cyclotomic integer rings, plus the additive and
//! multiplicative characters themselves.
//!
//! Every summand this crate ever adds up is a root of unity, so sums live in
//! Z[ζ_N] for a conductor N divisible by p and by every factor's unit-group
//! order. Values are stored as integer coordinate vectors in the power basis
//! of Z[x]/Φ_N(x) — a free Z-module, so equality is literal coordinate
//! equality and all identity checks are exact. A `CycContext` caches Φ_N and
//! the canonical coordinates of every ζ_N^k, which makes folding a tally of
//! exponent counts into an exact value a table walk.

use crate::error::{Error, Result};
use crate::etale::{BaseChange, EtaleAlgebra};
use crate::ffield::{Elt, FieldTable};
use std::sync::Arc;

/// Cap on conductor * degree, i.e. on the ζ-power table size.
pub const CONDUCTOR_BUDGET: u64 = 1 << 23;

/// An element of Z[ζ_n], coordinates in the power basis of Z[x]/Φ_n, length
/// deg Φ_n. Canonical: equal values have equal coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cyc {
    pub n: u64,
    pub c: Vec<i64>,
}

/// Exact division num / den of integer polynomials (low-degree-first), den
/// monic. Panics if the division is not exact — callers only divide
/// polynomials known to factor.
fn poly_div_exact(mut num: Vec<i64>, den: &[i64]) -> Vec<i64> {
    let dd = den.len() - 1;
    assert_eq!(den[dd], 1, "divisor must be monic");
    assert!(num.len() > dd);
    let mut quot = vec![0i64; num.len() - dd];
    for k in (0..quot.len()).rev() {
        let c = num[k + dd];
        quot[k] = c;
        if c != 0 {
            for (i, &d) in den.iter().enumerate() {
                num[k + i] -= c * d;
            }
        }
    }
    assert!(num.iter().all(|&c| c == 0), "division was not exact");
    quot
}

/// Coefficients of the n-th cyclotomic polynomial, low-degree-first, computed
/// by exact division of x^n - 1 by the cyclotomic polynomials of the proper
/// divisors of n.
pub fn cyclotomic_poly(n: u64) -> Vec<i64> {
    assert!(n >= 1);
    let divisors: Vec<u64> = (1..=n).filter(|d| n.is_multiple_of(*d)).collect();
    let mut table: Vec<Vec<i64>> = Vec::with_capacity(divisors.len());
    for (di, &d) in divisors.iter().enumerate() {
        let mut g = vec![0i64; d as usize + 1];
        g[0] = -1;
        g[d as usize] = 1;
        for (ei, &e) in divisors[..di].iter().enumerate() {
            if d % e == 0 {
                g = poly_div_exact(g, &table[ei]);
            }
        }
        table.push(g);
    }
    table.pop().expect("n divides n")
}

/// Shared arithmetic context for one conductor.
pub struct CycContext {
    n: u64,
    /// Φ_n, monic, low-degree-first.
    phi: Vec<i64>,
    deg: usize,
    /// powers[k] = canonical coordinates of ζ^k, k in [0, n).
    powers: Vec<Vec<i64>>,
}

impl CycContext {
    pub fn new(n: u64) -> Result<Arc<CycContext>> {
        if n == 0 || n > CONDUCTOR_BUDGET {
            return Err(Error::ConductorBudget(n as u128, CONDUCTOR_BUDGET));
        }
        let phi = cyclotomic_poly(n);
        let deg = phi.len() - 1;
        if n.saturating_mul(deg as u64) > CONDUCTOR_BUDGET {
            return Err(Error::ConductorBudget(n as u128 * deg as u128, CONDUCTOR_BUDGET));
        }
        let mut powers = Vec::with_capacity(n as usize);
        let mut cur = vec![0i64; deg];
        cur[0] = 1;
        for _ in 0..n {
            powers.push(cur.clone());
            // multiply by x, reducing x^deg = -(phi[0] + ... + phi[deg-1] x^{deg-1})
            let top = cur[deg - 1];
            for i in (1..deg).rev() {
                cur[i] = cur[i - 1];
            }
            cur[0] = 0;
            if top != 0 {
                for (i, v) in cur.iter_mut().enumerate() {
                    *v -= top * phi[i];
                }
            }
        }
        debug_assert_eq!(cur, powers[0], "zeta^n must equal 1");
        Ok(Arc::new(CycContext { n, phi, deg, powers }))
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn zero(&self) -> Cyc {
        Cyc {
            n: self.n,
            c: vec![0; self.deg],
        }
    }

    pub fn from_int(&self, k: i64) -> Cyc {
        let mut v = self.zero();
        v.c[0] = k;
        v
    }

    pub fn zeta_pow(&self, k: u64) -> Cyc {
        Cyc {
            n: self.n,
            c: self.powers[(k % self.n) as usize].clone(),
        }
    }

    fn check(&self, v: &Cyc) {
        assert_eq!(v.n, self.n, "cyclotomic value from the wrong conductor");
        assert_eq!(v.c.len(), self.deg);
    }

    pub fn add(&self, a: &Cyc, b: &Cyc) -> Cyc {
        self.check(a);
        self.check(b);
        Cyc {
            n: self.n,
            c: a.c.iter().zip(&b.c).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, a: &Cyc, b: &Cyc) -> Cyc {
        self.check(a);
        self.check(b);
        Cyc {
            n: self.n,
            c: a.c.iter().zip(&b.c).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn neg(&self, a: &Cyc) -> Cyc {
        self.check(a);
        Cyc {
            n: self.n,
            c: a.c.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, a: &Cyc, k: i64) -> Cyc {
        self.check(a);
        Cyc {
            n: self.n,
            c: a.c.iter().map(|x| x * k).collect(),
        }
    }

    /// Reduce an integer polynomial (any length) modulo Φ_n.
    fn reduce(&self, mut poly: Vec<i64>) -> Vec<i64> {
        for k in (self.deg..poly.len()).rev() {
            let c = poly[k];
            if c != 0 {
                poly[k] = 0;
                for (i, &d) in self.phi[..self.deg].iter().enumerate() {
                    poly[k - self.deg + i] -= c * d;
                }
            }
        }
        poly.resize(self.deg, 0);
        poly
    }

    pub fn mul(&self, a: &Cyc, b: &Cyc) -> Cyc {
        self.check(a);
        self.check(b);
        let mut prod = vec![0i64; 2 * self.deg - 1];
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.c.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        Cyc {
            n: self.n,
            c: self.reduce(prod),
        }
    }

    /// Complex conjugate: ζ^k -> ζ^{n-k}.
    pub fn conj(&self, a: &Cyc) -> Cyc {
        self.check(a);
        let mut out = vec![0i64; self.deg];
        for (k, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let pw = &self.powers[((self.n - k as u64) % self.n) as usize];
            for (i, v) in out.iter_mut().enumerate() {
                *v += x * pw[i];
            }
        }
        Cyc { n: self.n, c: out }
    }

    /// Re-express a value from a smaller conductor dividing this one
    /// (ζ_m = ζ_n^{n/m}).
    pub fn promote(&self, v: &Cyc) -> Result<Cyc> {
        if v.n == 0 || !self.n.is_multiple_of(v.n) {
            return Err(Error::ConductorMismatch(v.n, self.n));
        }
        let mult = self.n / v.n;
        let mut out = vec![0i64; self.deg];
        for (k, &x) in v.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let pw = &self.powers[((k as u64 * mult) % self.n) as usize];
            for (i, o) in out.iter_mut().enumerate() {
                *o += x * pw[i];
            }
        }
        Ok(Cyc { n: self.n, c: out })
    }

    /// Complex image under ζ -> e^{2πi/n}.
    pub fn approx_complex(&self, v: &Cyc) -> (f64, f64) {
        self.check(v);
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (k, &x) in v.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (self.n as f64);
            re += x as f64 * theta.cos();
            im += x as f64 * theta.sin();
        }
        (re, im)
    }

    pub fn abs(&self, v: &Cyc) -> f64 {
        let (re, im) = self.approx_complex(v);
        re.hypot(im)
    }

    /// Upper bound on the floating-point error of `abs`: each of the deg
    /// terms contributes a few ulps of |coeff|.
    pub fn abs_error_bound(&self, v: &Cyc) -> f64 {
        let m = v.c.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        (self.deg as f64) * (m as f64) * 2f64.powi(-48)
    }
}

/// A rational multiple of a cyclotomic integer: num / den with den > 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatCyc {
    pub num: Cyc,
    pub den: u64,
}

impl CycContext {
    /// v + r for integral v, exact over the common denominator.
    pub fn rat_add(&self, r: &RatCyc, v: &Cyc) -> RatCyc {
        assert!(r.den > 0);
        let scaled = self.scale(v, r.den as i64);
        RatCyc {
            num: self.add(&r.num, &scaled),
            den: r.den,
        }
    }

    pub fn rat_abs(&self, r: &RatCyc) -> f64 {
        self.abs(&r.num) / r.den as f64
    }
}

/// Tally of roots of unity: counts[k] copies of ζ^k, folded exactly at the
/// end. This is how every exponential sum in the crate is accumulated.
pub struct Accumulator<'a> {
    ctx: &'a CycContext,
    counts: Vec<i64>,
}

impl<'a> Accumulator<'a> {
    pub fn new(ctx: &'a CycContext) -> Self {
        Accumulator {
            ctx,
            counts: vec![0; ctx.n as usize],
        }
    }

    /// Add ζ^k.
    pub fn push(&mut self, k: u64) {
        self.counts[(k % self.ctx.n) as usize] += 1;
    }

    /// Add w * ζ^k.
    pub fn push_weighted(&mut self, k: u64, w: i64) {
        self.counts[(k % self.ctx.n) as usize] += w;
    }

    pub fn fold(&self) -> Cyc {
        let mut out = vec![0i64; self.ctx.deg];
        for (k, &cnt) in self.counts.iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            for (i, v) in out.iter_mut().enumerate() {
                *v += cnt * self.ctx.powers[k][i];
            }
        }
        Cyc {
            n: self.ctx.n,
            c: out,
        }
    }
}

/// Smallest conductor whose roots of unity accommodate ζ_p and every listed
/// unit-group order.
pub fn conductor(p: u64, unit_orders: impl IntoIterator<Item = u64>) -> Result<u64> {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut n: u128 = p as u128;
    for o in unit_orders {
        if o == 0 {
            return Err(Error::Internal("zero unit-group order".into()));
        }
        let o = o as u128;
        n = n / gcd(n, o) * o;
        if n > CONDUCTOR_BUDGET as u128 {
            return Err(Error::ConductorBudget(n, CONDUCTOR_BUDGET));
        }
    }
    Ok(n as u64)
}

/// ψ_c(x) = ζ_p^{Tr(c x)} on the field F_q, with nonzero twist c. The trace
/// exponent is tabulated per element.
pub struct AddChar {
    field: Arc<FieldTable>,
    c: Elt,
    tr_int: Vec<u64>,
}

impl AddChar {
    pub fn new(field: Arc<FieldTable>, c: Elt) -> Result<AddChar> {
        if c.is_zero() {
            return Err(Error::TrivialTwist);
        }
        let tr_int = field
            .elements()
            .map(|x| field.prime_trace(field.mul(c, x)))
            .collect();
        Ok(AddChar { field, c, tr_int })
    }

    pub fn field(&self) -> &Arc<FieldTable> {
        &self.field
    }
    pub fn twist(&self) -> Elt {
        self.c
    }

    /// Tr(c x) as an integer in [0, p).
    pub fn trace_exponent(&self, x: Elt) -> u64 {
        self.tr_int[self.field.elt_index(x)]
    }

    /// Exponent of ζ_N contributed by ψ(x), for a conductor N divisible by p.
    pub fn zeta_exponent(&self, ctx: &CycContext, x: Elt) -> u64 {
        debug_assert_eq!(ctx.n() % self.field.p(), 0);
        self.trace_exponent(x) * (ctx.n() / self.field.p())
    }
}

/// χ(x) = Π_i χ_i(x_i) with χ_i determined by an exponent e_i modulo
/// q^{n_i} - 1: χ_i(gen_i^t) = ζ_{q^{n_i}-1}^{e_i t}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultChar {
    exps: Vec<u64>,
}

impl MultChar {
    pub fn new(b: &EtaleAlgebra, exps: &[u64]) -> Result<MultChar> {
        if exps.len() != b.factors().len() {
            return Err(Error::ExpCount {
                got: exps.len(),
                want: b.factors().len(),
            });
        }
        let exps = exps
            .iter()
            .zip(b.factors())
            .map(|(&e, f)| e % (f.field.q() - 1))
            .collect();
        Ok(MultChar { exps })
    }

    pub fn exps(&self) -> &[u64] {
        &self.exps
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn conj(&self, b: &EtaleAlgebra) -> MultChar {
        MultChar {
            exps: self
                .exps
                .iter()
                .zip(b.factors())
                .map(|(&e, f)| {
                    let ord = f.field.q() - 1;
                    (ord - e % ord) % ord
                })
                .collect(),
        }
    }

    /// Exponent of ζ_N for χ(x), N divisible by every factor unit order.
    /// Errors on non-units.
    pub fn zeta_exponent(&self, b: &EtaleAlgebra, ctx: &CycContext, x: &[Elt]) -> Result<u64> {
        if x.len() != self.exps.len() {
            return Err(Error::CoordCount {
                got: x.len(),
                want: self.exps.len(),
            });
        }
        let n = ctx.n();
        let mut acc: u64 = 0;
        for ((&e, &xi), f) in self.exps.iter().zip(x).zip(b.factors()) {
            let Elt::Exp(t) = xi else {
                return Err(Error::NotAUnit);
            };
            let ord = f.field.q() - 1;
            debug_assert_eq!(n % ord, 0);
            let term = (e as u128 * t as u128 % ord as u128) * ((n / ord) as u128) % n as u128;
            acc = ((acc as u128 + term) % n as u128) as u64;
        }
        Ok(acc)
    }

    pub fn eval(&self, b: &EtaleAlgebra, ctx: &CycContext, x: &[Elt]) -> Result<Cyc> {
        Ok(ctx.zeta_pow(self.zeta_exponent(b, ctx, x)?))
    }

    /// χ evaluated at the diagonal unit b·1 (b in the base field): the ζ_N
    /// exponent is dlog(b) · Σ e_i · (N / (q-1)) with each factor's exponent
    /// reduced into the base unit group.
    pub fn zeta_exponent_diagonal(&self, b: &EtaleAlgebra, ctx: &CycContext, s: Elt) -> Result<u64> {
        let Elt::Exp(t) = s else {
            return Err(Error::NotAUnit);
        };
        let n = ctx.n();
        let q1 = b.base().q() - 1;
        debug_assert_eq!(n % q1, 0);
        let mut acc: u64 = 0;
        for (&e, f) in self.exps.iter().zip(b.factors()) {
            let mi = (f.field.q() - 1) / q1;
            // e_i on the embedded element of dlog t*m_i, as a ζ_N exponent
            let ord = f.field.q() - 1;
            let term = (e as u128 * (t as u128 * mi as u128 % ord as u128) % ord as u128)
                * ((n / ord) as u128)
                % n as u128;
            acc = ((acc as u128 + term) % n as u128) as u64;
        }
        Ok(acc)
    }

    /// If χ = χ_0 ∘ N for a character χ_0 of F_q*, return χ_0's exponent
    /// modulo q-1; otherwise None. This happens exactly when every e_i is a
    /// multiple of m_i = (q^{n_i}-1)/(q-1) and the quotients agree mod q-1 —
    /// equivalently, χ is trivial on the norm-one subgroup of B*.
    pub fn norm_induced_exponent(&self, b: &EtaleAlgebra) -> Option<u64> {
        let q1 = b.base().q() - 1;
        let mut e0: Option<u64> = None;
        for (&e, f) in self.exps.iter().zip(b.factors()) {
            let mi = (f.field.q() - 1) / q1;
            if e % mi != 0 {
                return None;
            }
            let s = (e / mi) % q1;
            match e0 {
                None => e0 = Some(s),
                Some(prev) if prev != s => return None,
                _ => {}
            }
        }
        e0
    }

    /// Pull χ through the norm of a base change: the character
    /// x' -> χ(N_{B'/B}(x')) of the extended unit group, written in the
    /// extended algebra's exponent convention.
    pub fn descend_through(&self, bc: &BaseChange) -> Result<MultChar> {
        if self.exps.len() != bc.orig_unit_orders().len() {
            return Err(Error::ExpCount {
                got: self.exps.len(),
                want: bc.orig_unit_orders().len(),
            });
        }
        let exps = bc
            .slots
            .iter()
            .enumerate()
            .map(|(s, slot)| {
                let ord_i = bc.orig_unit_orders()[slot.orig_factor];
                let ord_l = bc.ext.factors()[s].field.q() - 1;
                debug_assert_eq!(ord_l % ord_i, 0);
                let e = self.exps[slot.orig_factor];
                ((e as u128 * slot.d_dlog as u128 % ord_i as u128) * ((ord_l / ord_i) as u128)
                    % ord_l as u128) as u64
            })
            .collect();
        Ok(MultChar { exps })
    }
}
