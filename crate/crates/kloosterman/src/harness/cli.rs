//! Command-line front end.
//!
//! Exit codes: 0 — success and every checked bound/identity holds;
//! 1 — a mathematical check failed; 2 — configuration, usage, or budget
//! error. All field elements on the command line are discrete logarithms
//! of the canonical generator; characters are exponent tuples, one entry
//! per factor of the algebra.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::charval::{conductor, AddChar, Cyc, CycContext, MultChar};
use crate::error::{Error, Result};
use crate::etale::EtaleAlgebra;
use crate::ffield::FieldTable;
use crate::polytope::{h_coefficients, LaurentFamily};
use crate::sums::{extend_add_char, laurent_fiber_sum, Summer};

use super::checks::verify_identities;
use super::config::{Config, DEFAULT_BUDGET};
use super::report::{polytope_report, write_polytope_csv};
use super::sweep::{compute_row, run_sweep, Cell, Pass};

#[derive(Parser)]
#[command(
    name = "kloosterman",
    version,
    about = "Exact twisted and inverted Kloosterman sums over finite etale algebras"
)]
struct Cli {
    /// Worker threads for sweeps and verification (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe a finite field table.
    Field {
        /// Characteristic.
        #[arg(long)]
        p: u64,
        /// Degree over the prime field.
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Twisted Kloosterman sum over a norm fiber: sum of chi(x) psi(Tr x).
    Sum(CellArgs),
    /// Inverted Kloosterman sum (psi at the inverse trace), with regime,
    /// main term, and square-root bound.
    Inv(CellArgs),
    /// Unfolded triple sum, checked exactly against q' times the inverted
    /// sum.
    Unfold(CellArgs),
    /// Twisted toric sum of a standard Laurent family at a parameter w.
    Toric(ToricArgs),
    /// Newton-polytope geometry and non-degeneracy report over an (n, m)
    /// grid.
    Polytope {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        m_max: usize,
        /// Field characteristic for per-parameter verdicts (geometry only
        /// if omitted).
        #[arg(long)]
        p: Option<u64>,
        /// Field degree over the prime field.
        #[arg(long, default_value_t = 1)]
        field_n: u32,
        /// Extension-degree ceiling for the witness search.
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bound sweep from a TOML configuration; writes results.csv and
    /// summary.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify exact identities on the cells of a TOML configuration.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for identities.csv and summary.json (summary
        /// to stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CellArgs {
    /// Characteristic of the base field.
    #[arg(long)]
    p: u64,
    /// Base field degree over the prime field.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Factor degrees of the algebra, comma-separated (e.g. 1,1 or 2,1).
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<u32>,
    /// Character exponents, comma-separated, one per factor.
    #[arg(long, value_delimiter = ',', required = true)]
    chars: Vec<u64>,
    /// Additive twist (dlog in the base field).
    #[arg(long, default_value_t = 0)]
    c: u64,
    /// Extension-of-scalars degree.
    #[arg(long, default_value_t = 1)]
    ext: u32,
    /// Norm-fiber parameter (dlog in the extension field).
    #[arg(long, default_value_t = 0)]
    a: u64,
}

#[derive(Args)]
struct ToricArgs {
    /// Characteristic of the field.
    #[arg(long)]
    p: u64,
    /// Field degree over the prime field.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Family: "f" (unfolded, z-power n+1) or "fhat" (reduced, z-power m).
    #[arg(long, value_parser = ["f", "fhat"])]
    family: String,
    /// Number of x variables of the family.
    #[arg(long)]
    fam_n: usize,
    /// z-power of the reduced family (fhat only).
    #[arg(long, default_value_t = 1)]
    fam_m: usize,
    /// Coefficient parameter w (dlog).
    #[arg(long, default_value_t = 0)]
    w: u64,
    /// Multiplicative twists, comma-separated, one per variable
    /// (default: untwisted).
    #[arg(long, value_delimiter = ',')]
    twists: Option<Vec<u64>>,
    /// Additive twist (dlog).
    #[arg(long, default_value_t = 0)]
    c: u64,
}

/// Parse arguments, dispatch, and translate errors to the exit contract.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let built = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
        if let Err(e) = built {
            eprintln!("error: cannot size the worker pool: {e}");
            return 2;
        }
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Field { p, n } => cmd_field(p, n),
        Command::Sum(args) => cmd_sum(&args),
        Command::Inv(args) => cmd_inv(&args),
        Command::Unfold(args) => cmd_unfold(&args),
        Command::Toric(args) => cmd_toric(&args),
        Command::Polytope {
            n_max,
            m_max,
            p,
            field_n,
            depth,
            out,
        } => cmd_polytope(n_max, m_max, p, field_n, depth, out.as_deref()),
        Command::Sweep { config, out } => cmd_sweep(&config, &out),
        Command::Verify { config, out } => cmd_verify(&config, out.as_deref()),
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("valid JSON"));
}

fn cmd_field(p: u64, n: u32) -> Result<i32> {
    let f = FieldTable::build(p, n)?;
    print_json(&serde_json::json!({
        "p": f.p(),
        "n": f.n(),
        "q": f.q(),
        "unit_order": f.q() - 1,
        "modulus": f.modulus(),
    }));
    Ok(0)
}

/// The pieces shared by the single-cell commands: the effective summer
/// inputs after any extension of scalars.
struct Prepared {
    value_ctx: Arc<CycContext>,
    q_effective: u64,
    conductor: u64,
}

fn with_cell<T>(
    args: &CellArgs,
    f: impl FnOnce(&Summer, &MultChar, &AddChar, crate::ffield::Elt) -> Result<T>,
) -> Result<(T, Prepared)> {
    let base = FieldTable::build(args.p, args.n)?;
    let alg = EtaleAlgebra::new(base.clone(), &args.degrees)?;
    let chi = MultChar::new(&alg, &args.chars)?;
    let psi = AddChar::new(base.clone(), base.from_dlog(args.c))?;
    if args.ext == 1 {
        let summer = Summer::new(&alg)?;
        let a = base.from_dlog(args.a);
        let out = f(&summer, &chi, &psi, a)?;
        let prepared = Prepared {
            value_ctx: summer.ctx().clone(),
            q_effective: base.q(),
            conductor: summer.ctx().n(),
        };
        Ok((out, prepared))
    } else {
        let bc = alg.base_change(args.ext)?;
        let fext = bc.ext.base().clone();
        let summer = Summer::new(&bc.ext)?;
        let chi_ext = chi.descend_through(&bc)?;
        let psi_ext = extend_add_char(&bc, &psi)?;
        let a = fext.from_dlog(args.a);
        let out = f(&summer, &chi_ext, &psi_ext, a)?;
        let prepared = Prepared {
            value_ctx: summer.ctx().clone(),
            q_effective: fext.q(),
            conductor: summer.ctx().n(),
        };
        Ok((out, prepared))
    }
}

fn cell_json(args: &CellArgs, prepared: &Prepared, value: &Cyc) -> serde_json::Value {
    let (re, im) = prepared.value_ctx.approx_complex(value);
    serde_json::json!({
        "p": args.p,
        "n": args.n,
        "degrees": args.degrees,
        "exps": args.chars,
        "c": args.c,
        "ext": args.ext,
        "a": args.a,
        "q_effective": prepared.q_effective,
        "conductor": prepared.conductor,
        "value_re": re,
        "value_im": im,
    })
}

fn cmd_sum(args: &CellArgs) -> Result<i32> {
    let (value, prepared) = with_cell(args, |s, chi, psi, a| s.kloosterman(chi, psi, a))?;
    print_json(&cell_json(args, &prepared, &value));
    Ok(0)
}

fn cmd_inv(args: &CellArgs) -> Result<i32> {
    let cell = Cell {
        p: args.p,
        n: args.n,
        degrees: args.degrees.clone(),
        exps: args.chars.clone(),
        c_dlog: args.c,
        ext: args.ext,
        a_dlog: args.a,
    };
    let row = compute_row(&cell, DEFAULT_BUDGET)?;
    print_json(&serde_json::json!({
        "p": args.p,
        "n": args.n,
        "degrees": args.degrees,
        "exps": args.chars,
        "c": args.c,
        "ext": args.ext,
        "a": args.a,
        "q_effective": row.q,
        "regime": row.regime.label(),
        "value_re": row.value.0,
        "value_im": row.value.1,
        "main_re": row.main.0,
        "main_im": row.main.1,
        "bound": row.bound,
        "slack": row.slack,
        "pass": row.pass.label(),
    }));
    Ok(if row.pass == Pass::False { 1 } else { 0 })
}

fn cmd_unfold(args: &CellArgs) -> Result<i32> {
    let ((unfolded, matches), prepared) = with_cell(args, |s, chi, psi, a| {
        let unfolded = s.unfolded_inverted(chi, psi, a)?;
        let inverted = s.inverted_kloosterman(chi, psi, a)?;
        let q = s.algebra().base().q() as i64;
        Ok((unfolded.clone(), unfolded == s.ctx().scale(&inverted, q)))
    })?;
    let mut json = cell_json(args, &prepared, &unfolded);
    json["matches_q_times_inverted"] = serde_json::Value::Bool(matches);
    print_json(&json);
    Ok(if matches { 0 } else { 1 })
}

fn cmd_toric(args: &ToricArgs) -> Result<i32> {
    if args.fam_n == 0 {
        return Err(Error::Config("the family needs at least one x variable".into()));
    }
    if args.fam_m == 0 {
        return Err(Error::Config("the z-power must be positive".into()));
    }
    let fam = match args.family.as_str() {
        "f" => LaurentFamily::f_family(args.fam_n),
        _ => LaurentFamily::fhat_family(args.fam_n, args.fam_m),
    };
    let field = FieldTable::build(args.p, args.n)?;
    let ctx = CycContext::new(conductor(field.p(), [field.q() - 1])?)?;
    let twists = args
        .twists
        .clone()
        .unwrap_or_else(|| vec![0; fam.nvars()]);
    let psi = AddChar::new(field.clone(), field.from_dlog(args.c))?;
    let w = field.from_dlog(args.w);
    let coeffs = h_coefficients(&fam, &field, w)?;
    let value = laurent_fiber_sum(&field, &ctx, &fam, &coeffs, &twists, &psi)?;
    let (re, im) = ctx.approx_complex(&value);
    print_json(&serde_json::json!({
        "q": field.q(),
        "family": args.family,
        "fam_n": args.fam_n,
        "fam_m": if args.family == "f" { args.fam_n + 1 } else { args.fam_m },
        "w": args.w,
        "twists": twists,
        "c": args.c,
        "conductor": ctx.n(),
        "value_re": re,
        "value_im": im,
    }));
    Ok(0)
}

fn cmd_polytope(
    n_max: usize,
    m_max: usize,
    p: Option<u64>,
    field_n: u32,
    depth: u32,
    out: Option<&std::path::Path>,
) -> Result<i32> {
    let field = p.map(|p| FieldTable::build(p, field_n)).transpose()?;
    let rows = polytope_report(n_max, m_max, field.as_ref(), depth)?;
    match out {
        Some(path) => {
            let file = fs::File::create(path)?;
            write_polytope_csv(&rows, file)?;
        }
        None => {
            let mut buf = Vec::new();
            write_polytope_csv(&rows, &mut buf)?;
            print!("{}", String::from_utf8(buf).expect("CSV is UTF-8"));
        }
    }
    Ok(0)
}

fn cmd_sweep(config: &std::path::Path, out: &std::path::Path) -> Result<i32> {
    let cfg = Config::load(config)?;
    let report = run_sweep(&cfg)?;
    fs::create_dir_all(out)?;
    let csv_file = fs::File::create(out.join("results.csv"))?;
    report.write_csv(csv_file)?;
    let summary = report.summary_json();
    fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("valid JSON"),
    )?;
    print_json(&summary);
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn cmd_verify(config: &std::path::Path, out: Option<&std::path::Path>) -> Result<i32> {
    let cfg = Config::load(config)?;
    let report = verify_identities(&cfg)?;
    let summary = report.summary_json();
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let csv_file = fs::File::create(dir.join("identities.csv"))?;
        report.write_csv(csv_file)?;
        fs::write(
            dir.join("summary.json"),
            serde_json::to_string_pretty(&summary).expect("valid JSON"),
        )?;
    }
    print_json(&summary);
    Ok(if report.all_pass() { 0 } else { 1 })
}
