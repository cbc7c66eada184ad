//! Non-degeneracy verdicts for the Laurent families with their standard
//! coefficient assignment.
//!
//! A coefficient choice is non-degenerate when, for every face of the Newton
//! polytope not containing the origin, the face-restricted polynomial has no
//! critical point on the torus (over the algebraic closure). Verdicts are
//! produced by, in order:
//!
//! 1. a rank certificate: if the exponent vectors on the face are linearly
//!    independent mod p, the logarithmic critical equations force some
//!    monomial term to vanish, which no torus point allows;
//! 2. a closed form for the balanced inverted family (n + 1 = 2m), whose full
//!    off-origin facet carries every monomial: when p divides m the critical
//!    system has no torus solution for any parameter, and otherwise it has
//!    one exactly at w = m^{-(n+1)}, with an explicit witness;
//! 3. an honest brute-force search for critical points over extension fields
//!    of bounded degree, which can certify degeneracy (a witness) but never
//!    non-degeneracy — exhausted, it yields `Undetermined`.

use super::{hull, LaurentFamily, SlotRole};
use crate::error::{Error, Result};
use crate::ffield::{self, Elt, FieldTable};
use std::sync::Arc;

/// Cap on torus points scanned per extension field during the brute search.
const SEARCH_BUDGET: u128 = 5_000_000;

/// How a non-degeneracy claim was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Every relevant face has exponent vectors independent mod p.
    UnitRankModP,
    /// Rank certificates plus the balanced-family closed form.
    BalancedClosedForm,
}

/// Outcome of the face-by-face analysis for one coefficient assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    NonDegenerate {
        certificate: Certificate,
    },
    /// A face-restricted critical point exists: `witness` is a torus point
    /// over the degree-`ext_degree` extension, `face` the monomial indices
    /// of the offending face.
    Degenerate {
        ext_degree: u32,
        witness: Vec<Elt>,
        face: Vec<usize>,
    },
    /// Certificates failed on some face and the search found nothing up to
    /// the given extension degree.
    Undetermined {
        searched_depth: u32,
    },
}

/// The standard coefficient assignment, parametrized by the norm-fiber value
/// w: the y and z slots get 1, each x_i slot gets -1, and the last slot -w.
pub fn h_coefficients(family: &LaurentFamily, field: &FieldTable, w: Elt) -> Result<Vec<Elt>> {
    if w == Elt::Zero {
        return Err(Error::ZeroParameter);
    }
    Ok(family
        .monomials()
        .iter()
        .map(|mon| match mon.role {
            SlotRole::Y | SlotRole::Z => field.one(),
            SlotRole::X(_) => field.neg(field.one()),
            SlotRole::W => field.neg(w),
        })
        .collect())
}

/// The shape (n, m) if the family is the balanced inverted family
/// (n + 1 = 2m), else None.
fn balanced_shape(family: &LaurentFamily) -> Option<(usize, usize)> {
    if family.nvars() < 3 {
        return None;
    }
    let n = family.nvars() - 2;
    let m = family
        .monomials()
        .iter()
        .find(|mon| mon.role == SlotRole::W)
        .map(|mon| mon.exps[family.nvars() - 1])?;
    if m < 1 || n + 1 != 2 * m as usize {
        return None;
    }
    let m = m as usize;
    (*family == LaurentFamily::fhat_family(n, m)).then_some((n, m))
}

/// For the balanced inverted family with p not dividing m, the unique
/// parameter value w = m^{-(n+1)} whose coefficient assignment is degenerate;
/// None for any other family or when p divides m (never degenerate then).
pub fn balanced_exceptional_w(family: &LaurentFamily, field: &FieldTable) -> Option<Elt> {
    let (n, m) = balanced_shape(family)?;
    let mbar = field.from_int(m as u64);
    if mbar == Elt::Zero {
        return None;
    }
    Some(
        field
            .pow(mbar, -((n as i64) + 1))
            .expect("unit to an integer power"),
    )
}

/// The logarithmic critical values of the face-restricted polynomial at a
/// torus point: for each variable j, sum over the face's monomials of
/// (exponent mod p) * coefficient * monomial value. All-zero means `x` is a
/// critical point of the restriction.
pub fn face_critical_residuals(
    family: &LaurentFamily,
    field: &FieldTable,
    coeffs: &[Elt],
    mons: &[usize],
    x: &[Elt],
) -> Result<Vec<Elt>> {
    let d = family.nvars();
    if coeffs.len() != family.monomials().len() {
        return Err(Error::SlotCount {
            got: coeffs.len(),
            want: family.monomials().len(),
        });
    }
    if x.len() != d {
        return Err(Error::CoordCount {
            got: x.len(),
            want: d,
        });
    }
    if x.contains(&Elt::Zero) {
        return Err(Error::NotAUnit);
    }
    let p = field.p() as i64;
    let mut residuals = vec![Elt::Zero; d];
    for &i in mons {
        let mon = family
            .monomials()
            .get(i)
            .ok_or_else(|| Error::Internal(format!("monomial index {i} out of range")))?;
        let mut term = coeffs[i];
        for (j, &e) in mon.exps.iter().enumerate() {
            term = field.mul(term, field.pow(x[j], e)?);
        }
        for (j, &e) in mon.exps.iter().enumerate() {
            let scalar = field.from_int(e.rem_euclid(p) as u64);
            residuals[j] = field.add(residuals[j], field.mul(scalar, term));
        }
    }
    Ok(residuals)
}

fn within_scan_budget(q_ext: u64, d: usize) -> bool {
    (q_ext as u128 - 1)
        .checked_pow(d as u32)
        .is_some_and(|c| c <= SEARCH_BUDGET)
}

/// Scan the whole torus of `field` for a common zero of the face residuals.
fn scan_face(
    family: &LaurentFamily,
    field: &FieldTable,
    coeffs: &[Elt],
    mons: &[usize],
) -> Result<Option<Vec<Elt>>> {
    let d = family.nvars();
    let units = field.q() - 1;
    let mut dlogs = vec![0u64; d];
    loop {
        let x: Vec<Elt> = dlogs.iter().map(|&j| Elt::Exp(j)).collect();
        let res = face_critical_residuals(family, field, coeffs, mons, &x)?;
        if res.iter().all(|r| *r == Elt::Zero) {
            return Ok(Some(x));
        }
        let mut i = 0;
        loop {
            if i == d {
                return Ok(None);
            }
            dlogs[i] += 1;
            if dlogs[i] < units {
                break;
            }
            dlogs[i] = 0;
            i += 1;
        }
    }
}

/// Build the degree-s extension of `field`, or None when its tables would
/// blow the budget (the search then just stops early).
fn extension_field(field: &FieldTable, s: u32) -> Result<Option<Arc<FieldTable>>> {
    match FieldTable::build(field.p(), field.n() * s) {
        Ok(ext) => Ok(Some(ext)),
        Err(Error::TableBudget(..)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Brute-force hunt for a torus critical point of the face restriction, over
/// extensions of degree 1..=depth (within budget). Some((s, witness)) gives
/// the first witness found, in the deterministic scan order; None certifies
/// nothing beyond "not found where we looked".
pub fn torus_critical_search(
    family: &LaurentFamily,
    field: &FieldTable,
    w: Elt,
    mons: &[usize],
    depth: u32,
) -> Result<Option<(u32, Vec<Elt>)>> {
    let coeffs = h_coefficients(family, field, w)?;
    for s in 1..=depth {
        let Some(ext) = extension_field(field, s)? else {
            break;
        };
        if !within_scan_budget(ext.q(), family.nvars()) {
            break;
        }
        let coeffs_ext: Vec<Elt> = coeffs
            .iter()
            .map(|&c| ffield::embed(field, &ext, c))
            .collect::<Result<_>>()?;
        if let Some(witness) = scan_face(family, &ext, &coeffs_ext, mons)? {
            return Ok(Some((s, witness)));
        }
    }
    Ok(None)
}

/// Face-by-face non-degeneracy analysis of the standard coefficient
/// assignment with parameter w, over the given base field.
pub fn nondegeneracy_verdict(
    family: &LaurentFamily,
    field: &FieldTable,
    w: Elt,
    depth: u32,
) -> Result<Verdict> {
    let coeffs = h_coefficients(family, field, w)?;
    let poly = family.polytope()?;
    let p = field.p();
    let total = family.monomials().len();
    let mut used_closed_form = false;
    let mut hard: Vec<Vec<usize>> = Vec::new();
    for face in poly.faces_off_origin() {
        let mons: Vec<usize> = (0..total)
            .filter(|&i| face.contains(&poly.monomial_point(i)))
            .collect();
        let rows: Vec<&[i64]> = mons
            .iter()
            .map(|&i| family.monomials()[i].exps.as_slice())
            .collect();
        if hull::rank_mod_p(&rows, p) == mons.len() {
            continue;
        }
        if mons.len() == total {
            if let Some((n, m)) = balanced_shape(family) {
                used_closed_form = true;
                if (m as u64).is_multiple_of(p) {
                    // the z-equation reduces to the (nonzero) z-slot term
                    continue;
                }
                let w_exc = balanced_exceptional_w(family, field)
                    .expect("balanced shape with p not dividing m");
                if w == w_exc {
                    let inv_m = field.inv(field.from_int(m as u64))?;
                    let mut witness = vec![inv_m; n];
                    witness.push(field.one());
                    witness.push(field.one());
                    debug_assert!(face_critical_residuals(
                        family, field, &coeffs, &mons, &witness
                    )?
                    .iter()
                    .all(|r| *r == Elt::Zero));
                    return Ok(Verdict::Degenerate {
                        ext_degree: 1,
                        witness,
                        face: mons,
                    });
                }
                continue;
            }
        }
        hard.push(mons);
    }
    if hard.is_empty() {
        let certificate = if used_closed_form {
            Certificate::BalancedClosedForm
        } else {
            Certificate::UnitRankModP
        };
        return Ok(Verdict::NonDegenerate { certificate });
    }
    let mut searched = 0u32;
    for s in 1..=depth {
        let Some(ext) = extension_field(field, s)? else {
            break;
        };
        if !within_scan_budget(ext.q(), family.nvars()) {
            break;
        }
        let coeffs_ext: Vec<Elt> = coeffs
            .iter()
            .map(|&c| ffield::embed(field, &ext, c))
            .collect::<Result<_>>()?;
        for mons in &hard {
            if let Some(witness) = scan_face(family, &ext, &coeffs_ext, mons)? {
                return Ok(Verdict::Degenerate {
                    ext_degree: s,
                    witness,
                    face: mons.clone(),
                });
            }
        }
        searched = s;
    }
    Ok(Verdict::Undetermined {
        searched_depth: searched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::LaurentFamily;

    fn field(p: u64, n: u32) -> Arc<FieldTable> {
        FieldTable::build(p, n).unwrap()
    }

    #[test]
    fn coefficients_require_nonzero_parameter() {
        let f3 = field(3, 1);
        let fam = LaurentFamily::fhat_family(1, 1);
        assert!(matches!(
            h_coefficients(&fam, &f3, Elt::Zero),
            Err(Error::ZeroParameter)
        ));
        let c = h_coefficients(&fam, &f3, f3.one()).unwrap();
        // 1, 1, -1, -1 over F_3
        assert_eq!(c[0], f3.one());
        assert_eq!(c[1], f3.one());
        assert_eq!(c[2], f3.from_int(2));
        assert_eq!(c[3], f3.from_int(2));
    }

    #[test]
    fn balanced_exceptional_parameter_values() {
        let fam11 = LaurentFamily::fhat_family(1, 1);
        let fam32 = LaurentFamily::fhat_family(3, 2);
        let f2 = field(2, 1);
        let f3 = field(3, 1);
        let f4 = field(2, 2);
        // m = 1: w_exc = 1 in every characteristic
        assert_eq!(balanced_exceptional_w(&fam11, &f2), Some(f2.one()));
        assert_eq!(balanced_exceptional_w(&fam11, &f3), Some(f3.one()));
        // m = 2 over F_3: 2^{-4} = 1
        assert_eq!(balanced_exceptional_w(&fam32, &f3), Some(f3.one()));
        // m = 2 in characteristic 2: no exceptional value
        assert_eq!(balanced_exceptional_w(&fam32, &f4), None);
        // not balanced
        assert_eq!(
            balanced_exceptional_w(&LaurentFamily::fhat_family(3, 1), &f3),
            None
        );
        assert_eq!(
            balanced_exceptional_w(&LaurentFamily::f_family(1), &f3),
            None
        );
    }

    #[test]
    fn balanced_closed_form_verdicts() {
        // n=1, m=1 over F_2: the only unit is the exceptional value
        let f2 = field(2, 1);
        let fam = LaurentFamily::fhat_family(1, 1);
        match nondegeneracy_verdict(&fam, &f2, f2.one(), 0).unwrap() {
            Verdict::Degenerate {
                ext_degree,
                witness,
                face,
            } => {
                assert_eq!(ext_degree, 1);
                assert_eq!(witness, vec![f2.one(); 3]);
                assert_eq!(face, vec![0, 1, 2, 3]);
            }
            v => panic!("expected degenerate, got {v:?}"),
        }
        // n=1, m=1 over F_3: degenerate at w=1 only
        let f3 = field(3, 1);
        match nondegeneracy_verdict(&fam, &f3, f3.one(), 0).unwrap() {
            Verdict::Degenerate { witness, .. } => assert_eq!(witness, vec![f3.one(); 3]),
            v => panic!("expected degenerate, got {v:?}"),
        }
        assert_eq!(
            nondegeneracy_verdict(&fam, &f3, f3.from_int(2), 0).unwrap(),
            Verdict::NonDegenerate {
                certificate: Certificate::BalancedClosedForm
            }
        );
        // n=3, m=2 over F_3: w_exc = 2^{-4} = 1, witness x_i = 1/2 = 2
        let fam32 = LaurentFamily::fhat_family(3, 2);
        match nondegeneracy_verdict(&fam32, &f3, f3.one(), 0).unwrap() {
            Verdict::Degenerate {
                ext_degree,
                witness,
                ..
            } => {
                assert_eq!(ext_degree, 1);
                let two = f3.from_int(2);
                assert_eq!(witness, vec![two, two, two, f3.one(), f3.one()]);
            }
            v => panic!("expected degenerate, got {v:?}"),
        }
        assert_eq!(
            nondegeneracy_verdict(&fam32, &f3, f3.from_int(2), 0).unwrap(),
            Verdict::NonDegenerate {
                certificate: Certificate::BalancedClosedForm
            }
        );
    }

    #[test]
    fn balanced_family_in_dividing_characteristic_never_degenerates() {
        // n=3, m=2 over F_4: p | m, so every parameter is fine
        let f4 = field(2, 2);
        let fam = LaurentFamily::fhat_family(3, 2);
        for w in f4.units().collect::<Vec<_>>() {
            assert_eq!(
                nondegeneracy_verdict(&fam, &f4, w, 0).unwrap(),
                Verdict::NonDegenerate {
                    certificate: Certificate::BalancedClosedForm
                },
                "w = {w:?}"
            );
        }
        // n=5, m=3 over F_9 likewise
        let f9 = field(3, 2);
        let fam = LaurentFamily::fhat_family(5, 3);
        assert_eq!(
            nondegeneracy_verdict(&fam, &f9, f9.gen(), 0).unwrap(),
            Verdict::NonDegenerate {
                certificate: Certificate::BalancedClosedForm
            }
        );
    }

    #[test]
    fn x_heavy_family_is_rank_certified() {
        // n+1 > 2m: every off-origin facet is a unimodular simplex, so every
        // face passes the rank test in any characteristic
        let fam = LaurentFamily::fhat_family(3, 1);
        for (p, n) in [(2, 1), (5, 1), (2, 2)] {
            let k = field(p, n);
            for w in k.units().collect::<Vec<_>>() {
                assert_eq!(
                    nondegeneracy_verdict(&fam, &k, w, 0).unwrap(),
                    Verdict::NonDegenerate {
                        certificate: Certificate::UnitRankModP
                    },
                    "q = {}, w = {w:?}",
                    k.q()
                );
            }
        }
    }

    #[test]
    fn z_heavy_family_rank_or_search() {
        // n=2, m=2 over F_3: facet determinants are ±2, invertible mod 3
        let f3 = field(3, 1);
        let fam = LaurentFamily::fhat_family(2, 2);
        for w in f3.units().collect::<Vec<_>>() {
            assert_eq!(
                nondegeneracy_verdict(&fam, &f3, w, 0).unwrap(),
                Verdict::NonDegenerate {
                    certificate: Certificate::UnitRankModP
                }
            );
        }
        // over F_4 the x-part face {x_1, x_2, w-slot} degenerates at every
        // parameter: cubes are trivial on F_4* so x^3 = w z^2 always solves
        let f4 = field(2, 2);
        for w in f4.units().collect::<Vec<_>>() {
            match nondegeneracy_verdict(&fam, &f4, w, 1).unwrap() {
                Verdict::Degenerate {
                    ext_degree,
                    witness,
                    face,
                } => {
                    assert_eq!(ext_degree, 1);
                    let coeffs = h_coefficients(&fam, &f4, w).unwrap();
                    let res =
                        face_critical_residuals(&fam, &f4, &coeffs, &face, &witness).unwrap();
                    assert!(res.iter().all(|r| *r == Elt::Zero));
                }
                v => panic!("expected degenerate at w = {w:?}, got {v:?}"),
            }
        }
    }

    #[test]
    fn search_finds_closed_form_witnesses_independently() {
        // the full-facet witnesses from the closed form are rediscovered by
        // the brute search
        let f3 = field(3, 1);
        let fam = LaurentFamily::fhat_family(1, 1);
        let all = vec![0, 1, 2, 3];
        let (s, witness) = torus_critical_search(&fam, &f3, f3.one(), &all, 2)
            .unwrap()
            .expect("witness");
        assert_eq!(s, 1);
        let coeffs = h_coefficients(&fam, &f3, f3.one()).unwrap();
        let res = face_critical_residuals(&fam, &f3, &coeffs, &all, &witness).unwrap();
        assert!(res.iter().all(|r| *r == Elt::Zero));
        // at the non-exceptional parameter the search comes back empty
        assert_eq!(
            torus_critical_search(&fam, &f3, f3.from_int(2), &all, 2).unwrap(),
            None
        );

        let fam32 = LaurentFamily::fhat_family(3, 2);
        let all = vec![0, 1, 2, 3, 4, 5];
        let (s, witness) = torus_critical_search(&fam32, &f3, f3.one(), &all, 1)
            .unwrap()
            .expect("witness");
        assert_eq!(s, 1);
        let coeffs = h_coefficients(&fam32, &f3, f3.one()).unwrap();
        let res = face_critical_residuals(&fam32, &f3, &coeffs, &all, &witness).unwrap();
        assert!(res.iter().all(|r| *r == Elt::Zero));
    }

    #[test]
    fn undetermined_reports_searched_depth() {
        // force the search path with a face that fails the rank test but has
        // no torus critical point over the scanned extensions: the split
        // family over F_2 has the edge {x_1 y z, y z / x_1} with equal rows
        // mod 2, and its restriction -x y z + -w y z / x = yz(x + w/x)
        // (char 2) has critical points only where x^2 = w ... which always
        // solves! So use F_4 with w outside the squares of the scan... no:
        // squaring is surjective in char 2. Instead check the verdict shape
        // on the split family over F_5, where small searches stay empty.
        let f5 = field(5, 1);
        let fam = LaurentFamily::f_family(1);
        let v = nondegeneracy_verdict(&fam, &f5, f5.one(), 1).unwrap();
        match v {
            Verdict::NonDegenerate { .. } | Verdict::Undetermined { .. } => {}
            Verdict::Degenerate { witness, face, .. } => {
                // if a witness is claimed it must check out
                let coeffs = h_coefficients(&fam, &f5, f5.one()).unwrap();
                let res = face_critical_residuals(&fam, &f5, &coeffs, &face, &witness).unwrap();
                assert!(res.iter().all(|r| *r == Elt::Zero));
            }
        }
        // depth 0 with a hard face reports searched_depth 0
        let f2 = field(2, 1);
        let fam22 = LaurentFamily::fhat_family(2, 2);
        match nondegeneracy_verdict(&fam22, &f2, f2.one(), 0).unwrap() {
            Verdict::Undetermined { searched_depth } => assert_eq!(searched_depth, 0),
            v => panic!("expected undetermined at depth 0, got {v:?}"),
        }
    }

    #[test]
    fn residual_validation() {
        let f3 = field(3, 1);
        let fam = LaurentFamily::fhat_family(1, 1);
        let coeffs = h_coefficients(&fam, &f3, f3.one()).unwrap();
        assert!(matches!(
            face_critical_residuals(&fam, &f3, &coeffs, &[0], &[f3.one(); 2]),
            Err(Error::CoordCount { .. })
        ));
        assert!(matches!(
            face_critical_residuals(&fam, &f3, &coeffs[..2], &[0], &[f3.one(); 3]),
            Err(Error::SlotCount { .. })
        ));
        assert!(matches!(
            face_critical_residuals(&fam, &f3, &coeffs, &[0], &[Elt::Zero, f3.one(), f3.one()]),
            Err(Error::NotAUnit)
        ));
    }
}
