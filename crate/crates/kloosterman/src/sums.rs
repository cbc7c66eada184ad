//! Exponential sums over norm fibers of a finite étale algebra, and their
//! toric counterparts over powers of the multiplicative group.
//!
//! Everything here is computed exactly as a cyclotomic integer: a sum is a
//! tally of roots of unity ζ_N^k folded through [`CycContext`]. The central
//! objects are
//!
//! * the twisted Kloosterman sum `Σ_{N(x)=a} χ(x) ψ(Tr x)`,
//! * the inverted variant `Σ_{N(x)=a, Tr x ≠ 0} χ(x) ψ(1/Tr x)`,
//! * the norm-fiber character sum `S_χ(a) = Σ_{N(x)=a} χ(x)` together with
//!   its closed form, and the rational main term the inverted sum tracks,
//! * Laurent-polynomial character sums over (F_q^*)^v for the monomial
//!   families in [`crate::polytope`], which the identity checks compare
//!   against the fiber sums.

use std::sync::Arc;

use crate::charval::{
    conductor, Accumulator, AddChar, Cyc, CycContext, MultChar, RatCyc,
};
use crate::error::{Error, Result};
use crate::etale::{BaseChange, EtaleAlgebra};
use crate::ffield::{embed, Elt, FieldTable};
use crate::polytope::LaurentFamily;

/// Hard cap on the number of torus points a single Laurent-polynomial sum
/// may visit: (q-1)^v must stay below this.
pub const TORUS_BUDGET: u128 = 100_000_000;

/// Computes exponential sums over the norm fibers of one étale algebra,
/// with all values expressed in the cyclotomic field Q(ζ_N) for the
/// smallest N that accommodates the additive and multiplicative characters
/// of the algebra.
pub struct Summer<'a> {
    alg: &'a EtaleAlgebra,
    ctx: Arc<CycContext>,
}

impl<'a> Summer<'a> {
    pub fn new(alg: &'a EtaleAlgebra) -> Result<Summer<'a>> {
        let p = alg.base().p();
        let orders = alg.factors().iter().map(|f| f.field.q() - 1);
        let ctx = CycContext::new(conductor(p, orders)?)?;
        Ok(Summer { alg, ctx })
    }

    /// Reuse an already-built context for another summer over the same
    /// algebra shape. Building the context is the expensive part (a table
    /// of all N-th roots of unity), so sweeps share one per algebra.
    pub fn with_context(alg: &'a EtaleAlgebra, ctx: Arc<CycContext>) -> Result<Summer<'a>> {
        let p = alg.base().p();
        let orders = alg.factors().iter().map(|f| f.field.q() - 1);
        let want = conductor(p, orders)?;
        if ctx.n() != want {
            return Err(Error::ConductorMismatch(ctx.n(), want));
        }
        Ok(Summer { alg, ctx })
    }

    pub fn algebra(&self) -> &EtaleAlgebra {
        self.alg
    }

    /// The cyclotomic context every sum from this summer lives in.
    pub fn ctx(&self) -> &Arc<CycContext> {
        &self.ctx
    }

    fn check_psi(&self, psi: &AddChar) -> Result<()> {
        let b = self.alg.base();
        if psi.field().p() != b.p() || psi.field().q() != b.q() {
            return Err(Error::MismatchedAlgebra);
        }
        Ok(())
    }

    /// Shared walk over the norm fiber N(x) = a. `additive_exponent` maps a
    /// unit of the fiber to the ζ_N-exponent of its additive-character
    /// factor, or `None` to exclude the term.
    fn fiber_sum(
        &self,
        chi: &MultChar,
        a: Elt,
        mut additive_exponent: impl FnMut(&[Elt]) -> Result<Option<u64>>,
    ) -> Result<Cyc> {
        let mut acc = Accumulator::new(&self.ctx);
        let mut failure: Option<Error> = None;
        self.alg.for_each_norm_fiber(a, |x| {
            if failure.is_some() {
                return;
            }
            let step = (|| -> Result<()> {
                let Some(add_k) = additive_exponent(x)? else {
                    return Ok(());
                };
                let chi_k = chi.zeta_exponent(self.alg, &self.ctx, x)?;
                acc.push(chi_k + add_k);
                Ok(())
            })();
            if let Err(e) = step {
                failure = Some(e);
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(acc.fold()),
        }
    }

    /// Twisted Kloosterman sum Σ_{N(x)=a} χ(x) ψ(Tr x).
    pub fn kloosterman(&self, chi: &MultChar, psi: &AddChar, a: Elt) -> Result<Cyc> {
        self.check_psi(psi)?;
        self.fiber_sum(chi, a, |x| {
            let t = self.alg.trace(x)?;
            Ok(Some(psi.zeta_exponent(&self.ctx, t)))
        })
    }

    /// Inverted Kloosterman sum Σ_{N(x)=a, Tr x ≠ 0} χ(x) ψ(1/Tr x).
    pub fn inverted_kloosterman(&self, chi: &MultChar, psi: &AddChar, a: Elt) -> Result<Cyc> {
        self.check_psi(psi)?;
        let base = self.alg.base();
        self.fiber_sum(chi, a, |x| {
            let t = self.alg.trace(x)?;
            if t == Elt::Zero {
                Ok(None)
            } else {
                Ok(Some(psi.zeta_exponent(&self.ctx, base.inv(t)?)))
            }
        })
    }

    /// Norm-fiber character sum S_χ(a) = Σ_{N(x)=a} χ(x), by enumeration.
    pub fn fiber_char_sum(&self, chi: &MultChar, a: Elt) -> Result<Cyc> {
        self.fiber_sum(chi, a, |_| Ok(Some(0)))
    }

    /// Closed form of S_χ(a): zero unless χ is induced by a character χ_0 of
    /// the base through the norm, in which case every coset of the norm-one
    /// subgroup contributes equally and S_χ(a) = χ_0(a) · |B^*| / (q-1).
    pub fn fiber_char_sum_closed(&self, chi: &MultChar, a: Elt) -> Result<Cyc> {
        let Elt::Exp(t) = a else {
            return Err(Error::ZeroNormTarget);
        };
        match chi.norm_induced_exponent(self.alg) {
            None => Ok(self.ctx.zero()),
            Some(e0) => {
                let q1 = self.alg.base().q() - 1;
                let fiber = (self.alg.unit_count() / q1) as i64;
                let scale = (self.ctx.n() / q1) as u128;
                let k = (e0 as u128 * t as u128 % q1 as u128) * scale % self.ctx.n() as u128;
                Ok(self.ctx.scale(&self.ctx.zeta_pow(k as u64), fiber))
            }
        }
    }

    /// The main term the inverted sum tracks: -χ_0(a) |B^*| / (q (q-1)) when
    /// χ is norm-induced, zero otherwise. The remainder after subtracting
    /// this is what the square-root bounds control.
    pub fn inverted_main_term(&self, chi: &MultChar, a: Elt) -> Result<RatCyc> {
        let s = self.fiber_char_sum_closed(chi, a)?;
        Ok(RatCyc {
            num: self.ctx.neg(&s),
            den: self.alg.base().q(),
        })
    }

    /// The unfolded form Σ_{N(x)=a} Σ_{y∈F_q^*} Σ_{z∈F_q} χ(x) ψ(y + z - yz·Tr x),
    /// which equals q times the inverted sum. For fixed (x, y) with
    /// 1 - y·Tr x ≠ 0 the inner z-sum runs a nontrivial additive character
    /// over all of F_q and vanishes exactly in Z[ζ_N], so only the slices
    /// y·Tr x = 1 are tallied; each contributes the constant ψ(y) = ψ(1/Tr x)
    /// once per z. The test suite checks this against the literal triple loop.
    pub fn unfolded_inverted(&self, chi: &MultChar, psi: &AddChar, a: Elt) -> Result<Cyc> {
        self.check_psi(psi)?;
        let base = self.alg.base();
        let q = base.q() as i64;
        let mut acc = Accumulator::new(&self.ctx);
        let mut failure: Option<Error> = None;
        self.alg.for_each_norm_fiber(a, |x| {
            if failure.is_some() {
                return;
            }
            let step = (|| -> Result<()> {
                let chi_k = chi.zeta_exponent(self.alg, &self.ctx, x)?;
                let t = self.alg.trace(x)?;
                for y in base.units() {
                    if base.sub(base.one(), base.mul(y, t)) != Elt::Zero {
                        continue;
                    }
                    // The coefficient of z vanished, so every z contributes
                    // the constant ψ(y).
                    acc.push_weighted(chi_k + psi.zeta_exponent(&self.ctx, y), q);
                }
                Ok(())
            })();
            if let Err(e) = step {
                failure = Some(e);
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(acc.fold()),
        }
    }
}

/// Character sum of a Laurent monomial family over the torus (F_q^*)^v:
///
///   Σ_{x ∈ (F_q^*)^v}  Π_j χ_{t_j}(x_j) · ψ( Σ_i c_i x^{u_i} )
///
/// where `twists[j] = t_j` gives the multiplicative character of coordinate
/// j as an exponent modulo q-1 (χ_t(g^k) = ζ_{q-1}^{t k}), `coeffs[i] = c_i`
/// pairs with the i-th monomial of the family, and ψ is an additive
/// character of the same field. The conductor of `ctx` must accommodate
/// both ζ_p and ζ_{q-1}.
pub fn laurent_fiber_sum(
    field: &Arc<FieldTable>,
    ctx: &Arc<CycContext>,
    family: &LaurentFamily,
    coeffs: &[Elt],
    twists: &[u64],
    psi: &AddChar,
) -> Result<Cyc> {
    let mons = family.monomials();
    if coeffs.len() != mons.len() {
        return Err(Error::SlotCount {
            got: coeffs.len(),
            want: mons.len(),
        });
    }
    let v = family.nvars();
    if twists.len() != v {
        return Err(Error::TwistCount {
            got: twists.len(),
            want: v,
        });
    }
    if psi.field().p() != field.p() || psi.field().q() != field.q() {
        return Err(Error::MismatchedAlgebra);
    }
    let q1 = field.q() - 1;
    let needed = lcm(field.p(), q1);
    if !ctx.n().is_multiple_of(needed) {
        return Err(Error::ConductorMismatch(needed, ctx.n()));
    }
    match (q1 as u128).checked_pow(v as u32) {
        Some(points) if points <= TORUS_BUDGET => {}
        _ => {
            return Err(Error::Budget(format!(
                "torus with ({})^{} points exceeds the per-sum budget {}",
                q1, v, TORUS_BUDGET
            )))
        }
    }

    // Work entirely in discrete logarithms: coordinate j is g^{k_j}, and the
    // monomial x^{u_i} has dlog Σ_j u_ij k_j mod q-1.
    let exps: Vec<Vec<u64>> = mons
        .iter()
        .map(|m| m.exps.iter().map(|&e| e.rem_euclid(q1 as i64) as u64).collect())
        .collect();
    let twists: Vec<u64> = twists.iter().map(|&t| t % q1).collect();
    let unit_scale = ctx.n() / q1;

    let mut acc = Accumulator::new(ctx);
    let mut k = vec![0u64; v];
    loop {
        let mut mult: u128 = 0;
        for j in 0..v {
            mult += twists[j] as u128 * k[j] as u128;
        }
        let mult = (mult % q1 as u128) as u64;

        let mut f = Elt::Zero;
        for (i, &c) in coeffs.iter().enumerate() {
            if c == Elt::Zero {
                continue;
            }
            let mut dlog: u128 = 0;
            for j in 0..v {
                dlog += exps[i][j] as u128 * k[j] as u128;
            }
            let term = field.mul(c, Elt::Exp((dlog % q1 as u128) as u64));
            f = field.add(f, term);
        }

        acc.push(mult * unit_scale + psi.zeta_exponent(ctx, f));

        // Odometer over (Z/(q-1))^v.
        let mut j = 0;
        while j < v {
            k[j] += 1;
            if k[j] < q1 {
                break;
            }
            k[j] = 0;
            j += 1;
        }
        if j == v {
            break;
        }
    }
    Ok(acc.fold())
}

/// Gauss sum Σ_{x∈F_q^*} χ_e(x) ψ(x) with χ_e(g^k) = ζ_{q-1}^{e k}.
pub fn gauss_sum(
    field: &Arc<FieldTable>,
    ctx: &Arc<CycContext>,
    e: u64,
    psi: &AddChar,
) -> Result<Cyc> {
    if psi.field().p() != field.p() || psi.field().q() != field.q() {
        return Err(Error::MismatchedAlgebra);
    }
    let q1 = field.q() - 1;
    let needed = lcm(field.p(), q1);
    if !ctx.n().is_multiple_of(needed) {
        return Err(Error::ConductorMismatch(needed, ctx.n()));
    }
    let unit_scale = ctx.n() / q1;
    let e = e % q1;
    let mut acc = Accumulator::new(ctx);
    for k in 0..q1 {
        let mult = e as u128 * k as u128 % q1 as u128;
        acc.push(mult as u64 * unit_scale + psi.zeta_exponent(ctx, Elt::Exp(k)));
    }
    Ok(acc.fold())
}

/// Transport an additive character of F_q to the extension field of a base
/// change: the twist embeds, and the resulting character of F' equals
/// ψ ∘ Tr_{F'/F_q} by transitivity of the trace.
pub fn extend_add_char(bc: &BaseChange, psi: &AddChar) -> Result<AddChar> {
    let fext = bc.ext.base().clone();
    let c = embed(psi.field(), &fext, psi.twist())?;
    AddChar::new(fext, c)
}

/// Inverted Kloosterman sum of the extension-of-scalars algebra B ⊗ F_{q^m},
/// with the character χ of B carried up through the norm contraction and ψ
/// composed with the trace of the extension. `a` is a unit of F_{q^m}.
pub fn inverted_kloosterman_extended(
    bc: &BaseChange,
    chi: &MultChar,
    psi: &AddChar,
    a: Elt,
) -> Result<Cyc> {
    let summer = Summer::new(&bc.ext)?;
    let chi_ext = chi.descend_through(bc)?;
    let psi_ext = extend_add_char(bc, psi)?;
    summer.inverted_kloosterman(&chi_ext, &psi_ext, a)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
