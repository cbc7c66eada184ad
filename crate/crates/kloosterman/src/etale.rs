//! Finite étale algebras over F_q — products B = K_1 x ... x K_r of field
//! extensions K_i = F_{q^{n_i}} — with trace, norm, enumeration of units and
//! norm fibers, and base change along F_q -> F_{q^m}.
//!
//! Elements are coordinate vectors, one `Elt` per factor. Because every factor
//! table is built with the compatible-modulus convention, the norm of a factor
//! unit gen_i^e down to F_q is gen^(e mod (q-1)), so norm fibers are cut out
//! by a single congruence on discrete logs; `for_each_norm_fiber` walks them
//! directly instead of filtering all units.
//!
//! Base change realizes B ⊗ F_{q^m} as a product of fields again: each factor
//! contributes gcd(n_i, m) copies of F_{q^{lcm(n_i, m)}}. The component maps
//! are standardized so the F_{q^m}-structure of every copy is the fixed
//! power-map embedding, and the norm from B ⊗ F_{q^m} down to B becomes
//! linear in discrete logs: one precomputed coefficient per copy.

use crate::error::{Error, Result};
use crate::ffield::{
    embed, poly_eval, poly_mul, poly_rem, subfield_trace_norm, to_subfield, Elt, FieldTable,
};
use std::sync::Arc;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// k-fold Frobenius x -> x^q relative to a base of order q.
pub(crate) fn frob_pow(f: &FieldTable, x: Elt, q: u64, k: u32) -> Elt {
    let mut y = x;
    for _ in 0..k {
        y = f.pow(y, q as i64).expect("positive exponent");
    }
    y
}

// --- dense linear algebra over a field table (small systems only) ---

// Index loops: elimination reads one row while updating another.
#[allow(clippy::needless_range_loop)]
pub(crate) fn mat_det(f: &FieldTable, mut a: Vec<Vec<Elt>>) -> Elt {
    let n = a.len();
    let mut det = f.one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Elt::Zero;
        };
        if piv != col {
            a.swap(piv, col);
            det = f.neg(det);
        }
        let pv = a[col][col];
        det = f.mul(det, pv);
        let pinv = f.inv(pv).expect("pivot is nonzero");
        for r in col + 1..n {
            let factor = f.mul(a[r][col], pinv);
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let t = f.mul(factor, a[col][c]);
                a[r][c] = f.sub(a[r][c], t);
            }
        }
    }
    det
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn mat_solve(f: &FieldTable, mut a: Vec<Vec<Elt>>, mut b: Vec<Elt>) -> Result<Vec<Elt>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Internal("singular linear system".into()))?;
        a.swap(piv, col);
        b.swap(piv, col);
        let pinv = f.inv(a[col][col])?;
        for c in col..n {
            a[col][c] = f.mul(a[col][c], pinv);
        }
        b[col] = f.mul(b[col], pinv);
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col];
            for c in col..n {
                let t = f.mul(factor, a[col][c]);
                a[r][c] = f.sub(a[r][c], t);
            }
            let t = f.mul(factor, b[col]);
            b[r] = f.sub(b[r], t);
        }
    }
    Ok(b)
}

// --- polynomial-arithmetic helpers on top of ffield's kernels ---

#[cfg_attr(not(test), allow(dead_code))] // cross-check oracle machinery
fn poly_powmod(f: &FieldTable, b: &[Elt], e: u64, modp: &[Elt]) -> Vec<Elt> {
    let mut result = poly_rem(f, &[f.one()], modp);
    let mut base = poly_rem(f, b, modp);
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_rem(f, &poly_mul(f, &result, &base), modp);
        }
        base = poly_rem(f, &poly_mul(f, &base, &base), modp);
        e >>= 1;
    }
    result
}

#[cfg_attr(not(test), allow(dead_code))]
fn poly_compose_mod(f: &FieldTable, u: &[Elt], s: &[Elt], modp: &[Elt]) -> Vec<Elt> {
    let db = modp.len() - 1;
    let mut acc = vec![Elt::Zero; db];
    for &c in u.iter().rev() {
        acc = poly_rem(f, &poly_mul(f, &acc, s), modp);
        acc[0] = f.add(acc[0], c);
    }
    acc
}

/// Minimal polynomial of ext's generator over sub, monic, coefficients in sub,
/// listed low-degree-first.
pub(crate) fn minpoly_of_gen(sub: &FieldTable, ext: &FieldTable) -> Result<Vec<Elt>> {
    if sub.p() != ext.p() || !ext.n().is_multiple_of(sub.n()) {
        return Err(Error::IncompatibleFields(
            "minimal polynomial requested across unrelated fields".into(),
        ));
    }
    let m = ext.n() / sub.n();
    let mut h = vec![ext.one()];
    let mut conj = ext.gen();
    for _ in 0..m {
        h = poly_mul(ext, &h, &[ext.neg(conj), ext.one()]);
        conj = frob_pow(ext, conj, sub.q(), 1);
    }
    h.iter().map(|&c| to_subfield(sub, ext, c)).collect()
}

/// Polynomial model of K ⊗ F_{q^m} = K[y]/(h) for one factor K = F_{q^ni},
/// where h is the minimal polynomial of the F_{q^m} generator over F_q. The
/// roots of h inside the compositum F_{q^l} (l = lcm(ni, m)) are
/// rho_j = gen^(q^j); component j of the splitting (j < g = gcd(ni, m)) is
/// u -> u(rho_j)^(q^(l-j)), normalized so the F_{q^m}-structure of every
/// component is the standard embedding.
pub(crate) struct TensorModel {
    pub ki: Arc<FieldTable>,
    pub big: Arc<FieldTable>,
    pub fprime: Arc<FieldTable>,
    /// h embedded into K, monic of degree m.
    pub h_ki: Vec<Elt>,
    /// rho_j for j = 0..m, in the compositum.
    pub rhos: Vec<Elt>,
    pub ni: u32,
    pub m: u32,
    pub g: u32,
    pub l: u32,
    /// Order of the base field F_q.
    pub q: u64,
}

impl TensorModel {
    pub fn new(base: &Arc<FieldTable>, ki: Arc<FieldTable>, m: u32) -> Result<TensorModel> {
        if m == 0 {
            return Err(Error::ZeroFactorDegree);
        }
        let e = base.n();
        debug_assert_eq!(ki.n() % e, 0);
        let ni = ki.n() / e;
        let g = gcd(ni, m);
        let l = ni / g * m;
        let fprime = FieldTable::build(base.p(), e * m)?;
        let big = FieldTable::build(base.p(), e * l)?;
        let h_base = minpoly_of_gen(base, &fprime)?;
        let h_ki = h_base
            .iter()
            .map(|&c| embed(base, &ki, c))
            .collect::<Result<Vec<_>>>()?;
        let eta = embed(&fprime, &big, fprime.gen())?;
        let rhos = (0..m).map(|j| frob_pow(&big, eta, base.q(), j)).collect();
        Ok(TensorModel {
            ki,
            big,
            fprime,
            h_ki,
            rhos,
            ni,
            m,
            g,
            l,
            q: base.q(),
        })
    }

    /// Standardized component values (u(rho_j))^(q^(l-j)) for j = 0..g, inside
    /// the compositum. u is a polynomial with coefficients in K, length m.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn components(&self, u: &[Elt]) -> Result<Vec<Elt>> {
        let u_big = u
            .iter()
            .map(|&c| embed(&self.ki, &self.big, c))
            .collect::<Result<Vec<_>>>()?;
        (0..self.g)
            .map(|j| {
                let v = poly_eval(&self.big, &u_big, self.rhos[j as usize]);
                Ok(frob_pow(&self.big, v, self.q, self.l - j))
            })
            .collect()
    }

    /// Norm down to K as the determinant of multiplication by u on K[y]/(h).
    pub fn norm_det(&self, u: &[Elt]) -> Elt {
        let m = self.m as usize;
        let cols: Vec<Vec<Elt>> = (0..m)
            .map(|k| {
                let mut shifted = vec![Elt::Zero; k];
                shifted.extend_from_slice(u);
                poly_rem(&self.ki, &shifted, &self.h_ki)
            })
            .collect();
        let a = (0..m)
            .map(|r| (0..m).map(|c| cols[c][r]).collect())
            .collect();
        mat_det(&self.ki, a)
    }

    /// Norm down to K as the product of the Galois conjugates y -> y^(q^s).
    /// Independent of `norm_det`; used to cross-check it.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn norm_product(&self, u: &[Elt]) -> Result<Elt> {
        let ki = &self.ki;
        let y = [Elt::Zero, ki.one()];
        let yq = poly_powmod(ki, &y, self.q, &self.h_ki);
        let mut acc = poly_rem(ki, &[ki.one()], &self.h_ki);
        let mut conj = poly_rem(ki, u, &self.h_ki);
        for _ in 0..self.m {
            acc = poly_rem(ki, &poly_mul(ki, &acc, &conj), &self.h_ki);
            conj = poly_compose_mod(ki, &conj, &yq, &self.h_ki);
        }
        if acc[1..].iter().any(|c| !c.is_zero()) {
            return Err(Error::Internal("conjugate product is not a scalar".into()));
        }
        Ok(acc[0])
    }

    /// The unit whose standardized component j0 is the compositum generator
    /// and whose other components are 1, as a polynomial over K. Found by
    /// interpolating prescribed values at all m roots rho_j (values at
    /// non-representative roots are the forced Frobenius conjugates) and
    /// descending the unique solution to K.
    pub fn solve_generator(&self, j0: u32) -> Result<Vec<Elt>> {
        let m = self.m as usize;
        let big = &self.big;
        let orbit = (self.m / self.g) as usize;
        let mut rhs = vec![Elt::Zero; m];
        for jp in 0..self.g {
            let target = if jp == j0 {
                frob_pow(big, big.gen(), self.q, jp)
            } else {
                big.one()
            };
            let mut v = target;
            for t in 0..orbit {
                let idx = (jp as usize + t * self.ni as usize) % m;
                rhs[idx] = v;
                v = frob_pow(big, v, self.q, self.ni);
            }
        }
        let vander = (0..m)
            .map(|j| {
                let mut row = Vec::with_capacity(m);
                let mut pw = big.one();
                for _ in 0..m {
                    row.push(pw);
                    pw = big.mul(pw, self.rhos[j]);
                }
                row
            })
            .collect();
        let sol = mat_solve(big, vander, rhs)?;
        sol.into_iter()
            .map(|c| to_subfield(&self.ki, &self.big, c))
            .collect()
    }
}

/// One factor K_i = F_{q^{n_i}} of an étale algebra.
pub struct Factor {
    pub field: Arc<FieldTable>,
    /// n_i = [K_i : F_q].
    pub degree: u32,
    /// Relative trace to the base, indexed by `FieldTable::elt_index`.
    trace_tbl: Vec<Elt>,
}

impl Factor {
    pub fn trace_to_base(&self, x: Elt) -> Elt {
        self.trace_tbl[self.field.elt_index(x)]
    }
}

pub struct EtaleAlgebra {
    base: Arc<FieldTable>,
    factors: Vec<Factor>,
    degree: u32,
}

impl EtaleAlgebra {
    pub fn new(base: Arc<FieldTable>, degrees: &[u32]) -> Result<Self> {
        let total: u32 = degrees.iter().sum();
        if total < 2 {
            return Err(Error::DegreeTooSmall(total));
        }
        let mut factors = Vec::with_capacity(degrees.len());
        for &ni in degrees {
            if ni == 0 {
                return Err(Error::ZeroFactorDegree);
            }
            let field = FieldTable::build(base.p(), base.n() * ni)?;
            let trace_tbl = field
                .elements()
                .map(|x| subfield_trace_norm(&base, &field, x).map(|(t, _)| t))
                .collect::<Result<Vec<_>>>()?;
            factors.push(Factor {
                field,
                degree: ni,
                trace_tbl,
            });
        }
        Ok(EtaleAlgebra {
            base,
            factors,
            degree: total,
        })
    }

    pub fn base(&self) -> &Arc<FieldTable> {
        &self.base
    }
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
    /// n = sum of factor degrees = dim_{F_q} B.
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn unit_count(&self) -> u64 {
        self.factors.iter().map(|f| f.field.q() - 1).product()
    }
    /// Factor degrees joined by '+', e.g. "2+1".
    pub fn type_string(&self) -> String {
        self.factors
            .iter()
            .map(|f| f.degree.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    fn check_coords(&self, x: &[Elt]) -> Result<()> {
        if x.len() != self.factors.len() {
            return Err(Error::CoordCount {
                got: x.len(),
                want: self.factors.len(),
            });
        }
        Ok(())
    }

    /// Tr_{B/F_q}(x) = sum of factorwise relative traces.
    pub fn trace(&self, x: &[Elt]) -> Result<Elt> {
        self.check_coords(x)?;
        let mut s = Elt::Zero;
        for (fac, &xi) in self.factors.iter().zip(x) {
            s = self.base.add(s, fac.trace_to_base(xi));
        }
        Ok(s)
    }

    /// N_{B/F_q}(x) = product of factorwise relative norms. Zero whenever any
    /// coordinate is zero; on units the discrete log is the coordinate-log sum
    /// modulo q-1.
    pub fn norm(&self, x: &[Elt]) -> Result<Elt> {
        self.check_coords(x)?;
        let q1 = self.base.q() - 1;
        let mut acc = 0u64;
        for &xi in x {
            match xi {
                Elt::Zero => return Ok(Elt::Zero),
                Elt::Exp(e) => acc = (acc + e) % q1,
            }
        }
        Ok(Elt::Exp(acc))
    }

    /// Visit every unit of B (coordinatewise nonzero) exactly once.
    pub fn for_each_unit(&self, mut f: impl FnMut(&[Elt])) {
        let r = self.factors.len();
        let orders: Vec<u64> = self.factors.iter().map(|fc| fc.field.q() - 1).collect();
        let mut e = vec![0u64; r];
        let mut x = vec![Elt::Exp(0); r];
        loop {
            for i in 0..r {
                x[i] = Elt::Exp(e[i]);
            }
            f(&x);
            let mut i = 0;
            loop {
                if i == r {
                    return;
                }
                e[i] += 1;
                if e[i] < orders[i] {
                    break;
                }
                e[i] = 0;
                i += 1;
            }
        }
    }

    /// Visit every unit with N(x) = a exactly once. The fiber is cut out by
    /// one congruence on coordinate logs, so the last coordinate is stepped in
    /// increments of q-1 rather than filtered.
    pub fn for_each_norm_fiber(&self, a: Elt, mut f: impl FnMut(&[Elt])) -> Result<()> {
        let Elt::Exp(t) = a else {
            return Err(Error::ZeroNormTarget);
        };
        let q1 = self.base.q() - 1;
        let t = t % q1;
        let r = self.factors.len();
        let orders: Vec<u64> = self.factors.iter().map(|fc| fc.field.q() - 1).collect();
        let mut e = vec![0u64; r];
        let mut x = vec![Elt::Exp(0); r];
        'outer: loop {
            let free_sum: u64 = e[..r - 1].iter().sum();
            let mut last = (t + q1 - free_sum % q1) % q1;
            while last < orders[r - 1] {
                e[r - 1] = last;
                for i in 0..r {
                    x[i] = Elt::Exp(e[i]);
                }
                f(&x);
                last += q1;
            }
            let mut i = 0;
            loop {
                if i == r - 1 {
                    break 'outer;
                }
                e[i] += 1;
                if e[i] < orders[i] {
                    continue 'outer;
                }
                e[i] = 0;
                i += 1;
            }
        }
        Ok(())
    }

    /// Realize B ⊗ F_{q^m} as an étale algebra over F_{q^m} together with the
    /// data needed to move elements and characters across.
    pub fn base_change(&self, m: u32) -> Result<BaseChange> {
        if m == 0 {
            return Err(Error::ZeroFactorDegree);
        }
        let mut models = Vec::with_capacity(self.factors.len());
        let mut ext_degrees = Vec::new();
        let mut meta = Vec::new();
        for (i, fac) in self.factors.iter().enumerate() {
            let model = TensorModel::new(&self.base, fac.field.clone(), m)?;
            for j in 0..model.g {
                ext_degrees.push(model.l / m);
                meta.push((i, j));
            }
            models.push(model);
        }
        let fprime = models[0].fprime.clone();
        let ext = EtaleAlgebra::new(fprime, &ext_degrees)?;
        let q = self.base.q();
        let mut slots = Vec::with_capacity(meta.len());
        for &(i, j) in &meta {
            let model = &models[i];
            let u = model.solve_generator(j)?;
            let Elt::Exp(d_dlog) = model.norm_det(&u) else {
                return Err(Error::Internal("descent norm of a unit vanished".into()));
            };
            let big_order = model.big.q() - 1;
            let emb = big_order / (model.ki.q() - 1);
            let qpow = mod_pow(q, (model.l - j) as u64, big_order);
            let lift_mul = ((emb as u128 * qpow as u128) % big_order as u128) as u64;
            slots.push(Slot {
                orig_factor: i,
                copy: j,
                d_dlog,
                lift_mul,
            });
        }
        let orig_orders = self.factors.iter().map(|f| f.field.q() - 1).collect();
        Ok(BaseChange {
            m,
            ext,
            slots,
            orig_orders,
        })
    }
}

/// One factor of the base-changed algebra: the `copy`-th component coming from
/// original factor `orig_factor`.
pub struct Slot {
    pub orig_factor: usize,
    pub copy: u32,
    /// Discrete log (in K_i) of the norm down to K_i of this component's
    /// standardized generator. The full norm B⊗F' -> B is the dlog-linear map
    /// with these coefficients.
    pub d_dlog: u64,
    /// Dlog multiplier realizing K_i -> component (embed, then the
    /// standardizing Frobenius power).
    lift_mul: u64,
}

pub struct BaseChange {
    pub m: u32,
    pub ext: EtaleAlgebra,
    pub slots: Vec<Slot>,
    /// q^{n_i} - 1 per original factor.
    orig_orders: Vec<u64>,
}

impl BaseChange {
    pub fn orig_unit_orders(&self) -> &[u64] {
        &self.orig_orders
    }

    /// Image of u ∈ B under the diagonal map B -> B ⊗ F_{q^m}.
    pub fn lift_diagonal(&self, u: &[Elt]) -> Result<Vec<Elt>> {
        if u.len() != self.orig_orders.len() {
            return Err(Error::CoordCount {
                got: u.len(),
                want: self.orig_orders.len(),
            });
        }
        Ok(self
            .slots
            .iter()
            .enumerate()
            .map(|(s, slot)| match u[slot.orig_factor] {
                Elt::Zero => Elt::Zero,
                Elt::Exp(t) => {
                    let order = self.ext.factors()[s].field.q() - 1;
                    Elt::Exp(((t as u128 * slot.lift_mul as u128) % order as u128) as u64)
                }
            })
            .collect())
    }

    /// Norm of a unit of B ⊗ F_{q^m} down to B, evaluated slotwise on
    /// discrete logs.
    pub fn descend_norm(&self, x: &[Elt]) -> Result<Vec<Elt>> {
        if x.len() != self.slots.len() {
            return Err(Error::CoordCount {
                got: x.len(),
                want: self.slots.len(),
            });
        }
        let mut acc = vec![0u64; self.orig_orders.len()];
        for (slot, &xs) in self.slots.iter().zip(x) {
            let Elt::Exp(t) = xs else {
                return Err(Error::NotAUnit);
            };
            let ord = self.orig_orders[slot.orig_factor];
            let term = ((t as u128 * slot.d_dlog as u128) % ord as u128) as u64;
            acc[slot.orig_factor] = (acc[slot.orig_factor] + term) % ord;
        }
        Ok(acc.into_iter().map(Elt::Exp).collect())
    }
}
