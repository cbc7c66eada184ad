//! Newton-polytope geometry and non-degeneracy reporting.
//!
//! For each lattice shape (n, m) of the reduced inverted family the report
//! records the combinatorics of the Newton polytope — facets off the origin,
//! their lattice determinants, the normalized volume — together with, when a
//! field is supplied, the non-degeneracy verdict of the standard coefficient
//! assignment at every unit parameter w.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ffield::{Elt, FieldTable};
use crate::polytope::{
    balanced_exceptional_w, nondegeneracy_verdict, Certificate, LaurentFamily, Verdict,
};

use super::sweep::csv_err;

/// Largest n or m the report will attempt; hull enumeration beyond this is
/// not desk-scale.
pub const MAX_GRID: usize = 10;

#[derive(Debug, Clone)]
pub struct PolytopeRow {
    pub n: usize,
    pub m: usize,
    /// How n+1 compares with 2m; the combinatorics depend only on this.
    pub regime: &'static str,
    pub facets: usize,
    pub volume: u64,
    /// Lattice determinants of the facets off the origin, in hull order;
    /// None for a facet that is not a simplex (the balanced facet, which the
    /// closed form decides instead).
    pub dets: Vec<Option<i128>>,
    /// Discrete log of the exceptional parameter, when the shape is balanced
    /// and the characteristic does not divide m.
    pub exceptional: Option<u64>,
    /// Parameter this row's verdict refers to (dlog); None for the
    /// field-free geometry rows.
    pub w_dlog: Option<u64>,
    pub verdict: Option<String>,
    /// Witness coordinates (dlogs over the witness field) for degenerate
    /// verdicts.
    pub witness: Option<String>,
}

fn regime_label(n: usize, m: usize) -> &'static str {
    use std::cmp::Ordering;
    match (n + 1).cmp(&(2 * m)) {
        Ordering::Less => "n+1<2m",
        Ordering::Equal => "n+1=2m",
        Ordering::Greater => "n+1>2m",
    }
}

fn verdict_strings(v: &Verdict) -> (String, String) {
    match v {
        Verdict::NonDegenerate {
            certificate: Certificate::UnitRankModP,
        } => ("nondegenerate(rank)".into(), "-".into()),
        Verdict::NonDegenerate {
            certificate: Certificate::BalancedClosedForm,
        } => ("nondegenerate(balanced)".into(), "-".into()),
        Verdict::Degenerate {
            ext_degree,
            witness,
            ..
        } => {
            let coords: Vec<String> = witness
                .iter()
                .map(|e| match e {
                    Elt::Zero => "zero".into(),
                    Elt::Exp(j) => j.to_string(),
                })
                .collect();
            (
                format!("degenerate(ext={ext_degree})"),
                coords.join(";"),
            )
        }
        Verdict::Undetermined { searched_depth } => {
            (format!("undetermined(depth={searched_depth})"), "-".into())
        }
    }
}

/// Build the report grid for 1 ≤ n ≤ n_max, 1 ≤ m ≤ m_max. Without a field
/// each shape yields one geometry row; with a field it yields one row per
/// unit parameter w, geometry columns repeated, with the verdict at search
/// depth `depth`.
pub fn polytope_report(
    n_max: usize,
    m_max: usize,
    field: Option<&Arc<FieldTable>>,
    depth: u32,
) -> Result<Vec<PolytopeRow>> {
    if n_max == 0 || m_max == 0 || n_max > MAX_GRID || m_max > MAX_GRID {
        return Err(Error::Config(format!(
            "polytope grid must satisfy 1 <= n <= {MAX_GRID} and 1 <= m <= {MAX_GRID}, got n_max={n_max} m_max={m_max}"
        )));
    }
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for m in 1..=m_max {
            let fam = LaurentFamily::fhat_family(n, m);
            let poly = fam.polytope()?;
            let off = poly.facets_off_origin();
            let dets: Vec<Option<i128>> = off.iter().map(|f| poly.facet_det(f)).collect();
            let base = PolytopeRow {
                n,
                m,
                regime: regime_label(n, m),
                facets: off.len(),
                volume: poly.normalized_volume(),
                dets,
                exceptional: None,
                w_dlog: None,
                verdict: None,
                witness: None,
            };
            match field {
                None => rows.push(base),
                Some(f) => {
                    let exceptional = balanced_exceptional_w(&fam, f).map(|w| match w {
                        Elt::Exp(j) => j,
                        Elt::Zero => unreachable!("exceptional parameter is a unit"),
                    });
                    for wd in 0..f.q() - 1 {
                        let verdict = nondegeneracy_verdict(&fam, f, f.from_dlog(wd), depth)?;
                        let (vs, ws) = verdict_strings(&verdict);
                        let mut row = base.clone();
                        row.exceptional = exceptional;
                        row.w_dlog = Some(wd);
                        row.verdict = Some(vs);
                        row.witness = Some(ws);
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_polytope_csv<W: Write>(rows: &[PolytopeRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n",
        "m",
        "regime",
        "facets",
        "volume",
        "dets",
        "w_exceptional",
        "w",
        "verdict",
        "witness",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let dets: Vec<String> = r
            .dets
            .iter()
            .map(|d| d.map_or("-".into(), |v| v.to_string()))
            .collect();
        out.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.regime.to_string(),
            r.facets.to_string(),
            r.volume.to_string(),
            dets.join(";"),
            r.exceptional.map_or("-".into(), |j| j.to_string()),
            r.w_dlog.map_or("-".into(), |j| j.to_string()),
            r.verdict.clone().unwrap_or_else(|| "-".into()),
            r.witness.clone().unwrap_or_else(|| "-".into()),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(n: usize, m: usize) -> PolytopeRow {
        polytope_report(n, m, None, 1)
            .unwrap()
            .into_iter()
            .next_back()
            .unwrap()
    }

    #[test]
    fn the_three_regimes_have_the_expected_combinatorics() {
        // Balanced: one facet off the origin, volume 2m. The facet carries
        // every non-origin point, so it is not a simplex and has no
        // determinant — the closed form decides it.
        let r = geometry(1, 1);
        assert_eq!((r.regime, r.facets, r.volume), ("n+1=2m", 1, 2));
        assert_eq!(r.dets, vec![None]);

        // Wide: two diagonal facets, volume 2m, determinants ±m.
        let r = geometry(2, 2);
        assert_eq!((r.regime, r.facets, r.volume), ("n+1<2m", 2, 4));
        let mut mags: Vec<i128> = r.dets.iter().map(|d| d.unwrap().abs()).collect();
        mags.sort_unstable();
        assert_eq!(mags, vec![2, 2]);

        // Tall: n+1 diagonal facets, volume n+1, determinants ±1.
        let r = geometry(3, 1);
        assert_eq!((r.regime, r.facets, r.volume), ("n+1>2m", 4, 4));
        let mags: Vec<i128> = r.dets.iter().map(|d| d.unwrap().abs()).collect();
        assert_eq!(mags, vec![1, 1, 1, 1]);
    }

    #[test]
    fn field_rows_flag_exactly_the_exceptional_parameter() {
        let f = crate::ffield::FieldTable::build(3, 1).unwrap();
        let rows = polytope_report(1, 1, Some(&f), 1).unwrap();
        assert_eq!(rows.len(), 2, "one row per unit of F_3");
        for r in &rows {
            assert_eq!(r.exceptional, Some(0), "w_exc = 1^{{-2}} = 1 has dlog 0");
            let verdict = r.verdict.as_deref().unwrap();
            if r.w_dlog == Some(0) {
                assert_eq!(verdict, "degenerate(ext=1)");
                assert_ne!(r.witness.as_deref(), Some("-"));
            } else {
                assert_eq!(verdict, "nondegenerate(balanced)");
            }
        }
    }

    #[test]
    fn grid_limits_are_enforced() {
        assert!(polytope_report(0, 1, None, 1).is_err());
        assert!(polytope_report(1, MAX_GRID + 1, None, 1).is_err());
    }

    #[test]
    fn csv_has_the_documented_columns() {
        let rows = polytope_report(2, 2, None, 1).unwrap();
        let mut buf = Vec::new();
        write_polytope_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,m,regime,facets,volume,dets,w_exceptional,w,verdict,witness"
        );
        assert_eq!(lines.count(), 4);
    }
}
