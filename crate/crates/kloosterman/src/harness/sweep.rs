//! Sweep orchestration: expand a configuration into cells, compute each
//! inverted Kloosterman sum with its main term, classify the applicable
//! square-root bound, and collect deterministic pass/fail rows.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::charval::{AddChar, CycContext, MultChar, RatCyc};
use crate::error::{Error, Result};
use crate::etale::{BaseChange, EtaleAlgebra};
use crate::ffield::{Elt, FieldTable};
use crate::sums::{extend_add_char, Summer};

use super::config::Config;

/// Absolute tolerance for the floating-point bound comparisons. Identity
/// checks elsewhere use exact cyclotomic equality; only |·| goes through
/// floats.
pub const BOUND_TOL: f64 = 1e-6;

/// Hard cap on the number of cells a single configuration may expand to.
pub const CELL_BUDGET: usize = 1_000_000;

/// One point of a sweep: a base field, a factorization type, a character,
/// an additive twist, an extension-of-scalars degree, and a norm-fiber
/// parameter. Twists and parameters are discrete logarithms; `a_dlog` is
/// taken in the extension field F_{q^ext}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub p: u64,
    pub n: u32,
    pub degrees: Vec<u32>,
    pub exps: Vec<u64>,
    pub c_dlog: u64,
    pub ext: u32,
    pub a_dlog: u64,
}

/// Which square-root bound (if any) applies to a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// p ∤ n+1: bound (2n+2)·q^{mn/2} with the main-term correction.
    Tame,
    /// p | n+1, normalized ψ, non-exceptional a: bound (n+1)·q^{mn/2}.
    Wild,
    /// p | n+1 but the additive twist lies outside the prime field; no
    /// bound is claimed.
    Unnormalized,
    /// p | n+1 with p^k = 2 and a = m^{-(n+1)} (m the tame part of n+1),
    /// the excluded fiber of the wild bound.
    WildExceptional,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Tame => "tame",
            Regime::Wild => "wild",
            Regime::Unnormalized => "skip:unnormalized",
            Regime::WildExceptional => "skip:exceptional",
        }
    }

    pub fn is_skip(self) -> bool {
        matches!(self, Regime::Unnormalized | Regime::WildExceptional)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    True,
    False,
    Skip,
}

impl Pass {
    pub fn label(self) -> &'static str {
        match self {
            Pass::True => "true",
            Pass::False => "false",
            Pass::Skip => "skip",
        }
    }
}

/// One report row. `value` is the inverted sum, `main` the rational main
/// term, both as exact-to-rounding complex floats; `bound` and `slack` are
/// set only where a theorem regime applies.
#[derive(Debug, Clone)]
pub struct Row {
    pub cell: Cell,
    pub q: u64,
    pub type_string: String,
    pub regime: Regime,
    pub value: (f64, f64),
    pub main: (f64, f64),
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub pass: Pass,
}

/// Estimated term count |B*|·q² for one cell after extension of scalars;
/// `None` means overflow, which always exceeds any budget.
fn estimated_terms(q: u64, degrees: &[u32], ext: u32) -> Option<u128> {
    let qe = (q as u128).checked_pow(ext)?;
    let mut units: u128 = 1;
    for &d in degrees {
        let qd = qe.checked_pow(d)?;
        units = units.checked_mul(qd - 1)?;
    }
    units.checked_mul(qe)?.checked_mul(qe)
}

pub(crate) fn check_budget(q: u64, degrees: &[u32], ext: u32, budget: u64) -> Result<()> {
    match estimated_terms(q, degrees, ext) {
        Some(est) if est <= budget as u128 => Ok(()),
        est => Err(Error::Budget(format!(
            "cell (q={}, type={:?}, m={}) estimates {} terms, budget {}",
            q,
            degrees,
            ext,
            est.map_or("overflow".to_string(), |e| e.to_string()),
            budget
        ))),
    }
}

/// All character exponent tuples of an algebra, in odometer order with the
/// first factor fastest.
pub fn all_char_exps(alg: &EtaleAlgebra) -> Vec<Vec<u64>> {
    let orders: Vec<u64> = alg.factors().iter().map(|f| f.field.q() - 1).collect();
    let count: u64 = orders.iter().product();
    let mut out = Vec::with_capacity(count as usize);
    let mut exps = vec![0u64; orders.len()];
    loop {
        out.push(exps.clone());
        let mut i = 0;
        while i < orders.len() {
            exps[i] += 1;
            if exps[i] < orders[i] {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == orders.len() {
            return out;
        }
    }
}

/// Expand a configuration into its ordered list of cells. The order is the
/// nested loop (section, type, extension, character, twist, parameter) and
/// is what fixes report ordering.
pub fn expand_cells(config: &Config) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for section in &config.sweep {
        let base = FieldTable::build(section.p, section.n)?;
        let q = base.q();
        for degrees in &section.types {
            let alg = EtaleAlgebra::new(base.clone(), degrees)?;
            let char_list = section.chars.expand(|| all_char_exps(&alg))?;
            for exps in &char_list {
                if exps.len() != degrees.len() {
                    return Err(Error::Config(format!(
                        "character exponents {:?} have {} entries but type {:?} has {} factors",
                        exps,
                        exps.len(),
                        degrees,
                        degrees.len()
                    )));
                }
            }
            let twist_list = section.twists.expand(|| (0..q - 1).collect())?;
            for &ext in &section.extensions {
                check_budget(q, degrees, ext, config.budget)?;
                // Within budget, q^ext fits comfortably in u64.
                let q_ext = (q as u128).pow(ext) as u64;
                let a_list = section.a_values.expand(|| (0..q_ext - 1).collect())?;
                for exps in &char_list {
                    for &c_dlog in &twist_list {
                        for &a_dlog in &a_list {
                            cells.push(Cell {
                                p: section.p,
                                n: section.n,
                                degrees: degrees.clone(),
                                exps: exps.clone(),
                                c_dlog,
                                ext,
                                a_dlog,
                            });
                            if cells.len() > CELL_BUDGET {
                                return Err(Error::Budget(format!(
                                    "configuration expands past {} cells",
                                    CELL_BUDGET
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// Classify the theorem regime of one cell. `deg` is the algebra degree
/// n+1, `c` the additive twist in the base field, `a` the norm-fiber
/// parameter in the extension field.
pub fn classify(base: &FieldTable, ext_field: &FieldTable, deg: u32, c: Elt, a: Elt) -> Regime {
    let p = base.p();
    if !(deg as u64).is_multiple_of(p) {
        return Regime::Tame;
    }
    let mut tame_part = deg as u64;
    let mut pk = 1u64;
    while tame_part.is_multiple_of(p) {
        tame_part /= p;
        pk *= p;
    }
    // Normalized additive character: the twist is Frobenius-fixed, i.e.
    // lies in the prime field.
    let fixed = matches!(base.pow(c, p as i64), Ok(cp) if cp == c);
    if !fixed {
        return Regime::Unnormalized;
    }
    if pk == 2 {
        let tbar = ext_field.from_int(tame_part);
        if let Ok(exceptional) = ext_field.pow(tbar, -(deg as i64)) {
            if a == exceptional {
                return Regime::WildExceptional;
            }
        }
    }
    Regime::Wild
}

/// Compute one report row.
pub fn compute_row(cell: &Cell, budget: u64) -> Result<Row> {
    let tables = CellTables::build(cell.p, cell.n, &cell.degrees, cell.ext, budget)?;
    row_with_tables(&tables, cell)
}

/// The state shared by every cell with the same (p, n, type, ext): the
/// field and algebra tables and the cyclotomic context. Building the
/// context — a table of all N-th roots of unity — dominates single-cell
/// cost, so sweeps construct it once per group.
pub(crate) struct CellTables {
    base: Arc<FieldTable>,
    alg: EtaleAlgebra,
    bc: Option<BaseChange>,
    ctx: Arc<CycContext>,
}

impl CellTables {
    pub(crate) fn build(
        p: u64,
        n: u32,
        degrees: &[u32],
        ext: u32,
        budget: u64,
    ) -> Result<CellTables> {
        let base = FieldTable::build(p, n)?;
        check_budget(base.q(), degrees, ext, budget)?;
        let alg = EtaleAlgebra::new(base.clone(), degrees)?;
        if ext == 1 {
            let ctx = Summer::new(&alg)?.ctx().clone();
            Ok(CellTables {
                base,
                alg,
                bc: None,
                ctx,
            })
        } else {
            let bc = alg.base_change(ext)?;
            let ctx = Summer::new(&bc.ext)?.ctx().clone();
            Ok(CellTables {
                base,
                alg,
                bc: Some(bc),
                ctx,
            })
        }
    }
}

pub(crate) fn row_with_tables(tables: &CellTables, cell: &Cell) -> Result<Row> {
    let base = &tables.base;
    let alg = &tables.alg;
    let deg = alg.degree();
    let chi = MultChar::new(alg, &cell.exps)?;
    let c = base.from_dlog(cell.c_dlog);
    let psi = AddChar::new(base.clone(), c)?;

    let ctx = &tables.ctx;
    let (value, main, a, ext_field) = match &tables.bc {
        None => {
            let summer = Summer::with_context(alg, ctx.clone())?;
            let a = base.from_dlog(cell.a_dlog);
            let value = summer.inverted_kloosterman(&chi, &psi, a)?;
            let main = summer.inverted_main_term(&chi, a)?;
            (value, main, a, base.clone())
        }
        Some(bc) => {
            let ext_field = bc.ext.base().clone();
            let summer = Summer::with_context(&bc.ext, ctx.clone())?;
            let a = ext_field.from_dlog(cell.a_dlog);
            let chi_ext = chi.descend_through(bc)?;
            let psi_ext = extend_add_char(bc, &psi)?;
            let value = summer.inverted_kloosterman(&chi_ext, &psi_ext, a)?;
            let main = summer.inverted_main_term(&chi_ext, a)?;
            (value, main, a, ext_field)
        }
    };

    let regime = classify(base, &ext_field, deg, c, a);
    let deviation = ctx.rat_abs(&ctx.rat_add(
        &RatCyc {
            num: ctx.neg(&main.num),
            den: main.den,
        },
        &value,
    ));
    let (bound, slack, pass) = match regime {
        Regime::Tame | Regime::Wild => {
            let coeff = if regime == Regime::Tame {
                2.0 * deg as f64
            } else {
                deg as f64
            };
            let half_exponent = cell.ext as f64 * (deg - 1) as f64 / 2.0;
            let bound = coeff * (base.q() as f64).powf(half_exponent);
            let slack = bound - deviation;
            let pass = if slack >= -BOUND_TOL {
                Pass::True
            } else {
                Pass::False
            };
            (Some(bound), Some(slack), pass)
        }
        _ => (None, None, Pass::Skip),
    };

    let value_f = ctx.approx_complex(&value);
    let main_num = ctx.approx_complex(&main.num);
    let den = main.den as f64;
    Ok(Row {
        q: base.q(),
        type_string: alg.type_string(),
        regime,
        value: value_f,
        main: (main_num.0 / den, main_num.1 / den),
        bound,
        slack,
        pass,
        cell: cell.clone(),
    })
}

pub struct SweepReport {
    pub rows: Vec<Row>,
}

impl SweepReport {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Pass::True).count()
    }
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Pass::False).count()
    }
    pub fn skipped(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Pass::Skip).count()
    }
    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    /// Fixed columns: q,type,exps,c,m,a,regime,value_re,value_im,main_re,
    /// main_im,bound,slack,pass. Exponent tuples are ';'-joined; c and a
    /// are discrete logarithms; empty bound/slack mark skipped rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "q", "type", "exps", "c", "m", "a", "regime", "value_re", "value_im", "main_re",
            "main_im", "bound", "slack", "pass",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            let exps = join_dlogs(&r.cell.exps);
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            out.write_record([
                r.q.to_string(),
                r.type_string.clone(),
                exps,
                r.cell.c_dlog.to_string(),
                r.cell.ext.to_string(),
                r.cell.a_dlog.to_string(),
                r.regime.label().to_string(),
                r.value.0.to_string(),
                r.value.1.to_string(),
                r.main.0.to_string(),
                r.main.1.to_string(),
                opt(r.bound),
                opt(r.slack),
                r.pass.label().to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let failures: Vec<serde_json::Value> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.pass == Pass::False)
            .map(|(i, r)| {
                serde_json::json!({
                    "row": i,
                    "q": r.q,
                    "type": r.type_string,
                    "exps": r.cell.exps,
                    "c": r.cell.c_dlog,
                    "m": r.cell.ext,
                    "a": r.cell.a_dlog,
                })
            })
            .collect();
        serde_json::json!({
            "cells": self.rows.len(),
            "passed": self.passed(),
            "failed": self.failed(),
            "skipped": self.skipped(),
            "all_pass": self.all_pass(),
            "failures": failures,
        })
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub(crate) fn join_dlogs(v: &[u64]) -> String {
    v.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Run every cell of the configuration in parallel, preserving cell order.
/// Cells are grouped by (p, n, type, ext) — contiguous runs by
/// construction — so the heavy tables are built once per group.
pub fn run_sweep(config: &Config) -> Result<SweepReport> {
    let cells = expand_cells(config)?;
    let groups: Vec<&[Cell]> = cells
        .chunk_by(|x, y| {
            x.p == y.p && x.n == y.n && x.degrees == y.degrees && x.ext == y.ext
        })
        .collect();
    let nested = groups
        .into_par_iter()
        .map(|group| -> Result<Vec<Row>> {
            let lead = &group[0];
            let tables =
                CellTables::build(lead.p, lead.n, &lead.degrees, lead.ext, config.budget)?;
            group
                .par_iter()
                .map(|cell| row_with_tables(&tables, cell))
                .collect()
        })
        .collect::<Result<Vec<Vec<Row>>>>()?;
    Ok(SweepReport {
        rows: nested.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(p: u64, n: u32) -> Arc<FieldTable> {
        FieldTable::build(p, n).unwrap()
    }

    #[test]
    fn classification_follows_the_degree_and_twist() {
        let f3 = field(3, 1);
        let one = f3.one();
        let two = f3.from_int(2);
        assert_eq!(classify(&f3, &f3, 2, one, one), Regime::Tame);
        // Degree 3 over F_3 is wild for any twist and parameter (p^k = 3).
        assert_eq!(classify(&f3, &f3, 3, two, one), Regime::Wild);

        let f4 = field(2, 2);
        let g = f4.from_dlog(1);
        // Degree 2 over F_4 has p^k = 2: a = 1 is the excluded fiber, and
        // a twist outside F_2 is unnormalized.
        assert_eq!(classify(&f4, &f4, 2, f4.one(), f4.one()), Regime::WildExceptional);
        assert_eq!(classify(&f4, &f4, 2, f4.one(), g), Regime::Wild);
        assert_eq!(classify(&f4, &f4, 2, g, g), Regime::Unnormalized);
    }

    #[test]
    fn expansion_is_ordered_and_counted() {
        let cfg = Config::parse(
            "[[sweep]]\np = 3\ntypes = [[1, 1]]\nchars = \"all\"\ntwists = \"all\"\n",
        )
        .unwrap();
        let cells = expand_cells(&cfg).unwrap();
        // 4 characters × 2 twists × 2 parameters.
        assert_eq!(cells.len(), 16);
        assert_eq!(cells[0].exps, vec![0, 0]);
        assert_eq!((cells[0].c_dlog, cells[0].a_dlog), (0, 0));
        assert_eq!((cells[1].c_dlog, cells[1].a_dlog), (0, 1));
        assert_eq!(cells[15].exps, vec![1, 1]);
        // Character order: first factor fastest.
        assert_eq!(cells[4].exps, vec![1, 0]);
        assert_eq!(cells[8].exps, vec![0, 1]);
    }

    #[test]
    fn empty_config_gives_an_empty_passing_report() {
        let cfg = Config::parse("").unwrap();
        let report = run_sweep(&cfg).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.all_pass());
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            1,
            "header only"
        );
    }

    #[test]
    fn tame_sweep_over_f3_passes_everywhere() {
        let cfg = Config::parse("[[sweep]]\np = 3\ntypes = [[1, 1], [2]]\n").unwrap();
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4 * 2 * 2 + 8 * 2 * 2);
        assert_eq!(report.failed(), 0);
        assert_eq!(report.skipped(), 0);
        assert!(report.rows.iter().all(|r| r.regime == Regime::Tame));
        assert!(report.rows.iter().all(|r| r.slack.unwrap() >= 0.0));
    }

    #[test]
    fn wild_sweep_over_f4_skips_the_excluded_fiber() {
        // Twists: c = 1 is normalized; c = g, g^2 are not. a = 1 is the
        // exceptional fiber when c = 1.
        let cfg = Config::parse("[[sweep]]\np = 2\nn = 2\ntypes = [[1, 1]]\n").unwrap();
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 9 * 3 * 3);
        assert_eq!(report.failed(), 0);
        for r in &report.rows {
            match (r.cell.c_dlog, r.cell.a_dlog) {
                (0, 0) => assert_eq!(r.regime, Regime::WildExceptional),
                (0, _) => {
                    assert_eq!(r.regime, Regime::Wild);
                    assert_eq!(r.bound, Some(4.0));
                }
                _ => assert_eq!(r.regime, Regime::Unnormalized),
            }
        }
    }

    #[test]
    fn extension_cells_use_the_extended_bound() {
        let cfg = Config::parse(
            "[[sweep]]\np = 3\ntypes = [[1, 1]]\nchars = [[1, 0]]\ntwists = [0]\nextensions = [2]\na_values = [1]\n",
        )
        .unwrap();
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        let r = &report.rows[0];
        assert_eq!(r.regime, Regime::Tame);
        // (2n+2) q^{mn/2} = 4 · 3^1.
        assert_eq!(r.bound, Some(12.0));
        assert_eq!(r.pass, Pass::True);
    }

    #[test]
    fn budget_violations_are_reported_as_errors() {
        let cfg = Config::parse("budget = 10\n[[sweep]]\np = 3\ntypes = [[1, 1]]\n").unwrap();
        assert!(matches!(run_sweep(&cfg), Err(Error::Budget(_))));
    }

    #[test]
    fn reports_are_deterministic() {
        let text = "[[sweep]]\np = 3\ntypes = [[2]]\nchars = \"all\"\ntwists = [0]\n";
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let report = run_sweep(&Config::parse(text).unwrap()).unwrap();
            let mut buf = Vec::new();
            report.write_csv(&mut buf).unwrap();
            outputs.push(buf);
        }
        assert_eq!(outputs[0], outputs[1]);
        let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
        assert!(text.starts_with("q,type,exps,c,m,a,regime,"));
        assert!(text.lines().nth(1).unwrap().starts_with("3,2,0,0,1,0,tame,"));
    }
}
