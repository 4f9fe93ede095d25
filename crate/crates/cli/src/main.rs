//! `prismlab`: batch front end over the library. Every subcommand reads JSON
//! (a file argument or stdin) and writes one canonical JSON line.
//!
//! Exit codes: 0 success, 1 mathematical failure, 2 input error.

use std::fs;
use std::io::{self, Read};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use prismlab::galois::{
    action_kernel, converges_at_with, tau_power_kernel, ConvergenceStatus, GaloisElementData, GaloisKernel,
    KernelTag, TauVariant,
};
use prismlab::io::{
    connection_from_json, connection_to_json, element_to_json, field_from_json, field_to_json,
    kernel_from_json, kernel_to_json, matrix_from_json, parse_json, parse_session,
    parse_valuation, series_from_json, stratification_from_json, stratification_to_json,
    to_canonical_string, valuation_to_json,
};
use prismlab::miclog::{
    bk_twist, change_uniformizer, check_nilpotent, classify_ndr, cohomology, dual, kummer_sen_operator,
    tensor, NilpotencyStatus, ProbeConfig, WeightRecord,
};
use prismlab::numfield::{a_log, a_prismatic};
use prismlab::stratconn::{check_cocycle, from_connection, to_connection, verify_key_lemma};
use prismlab::{Field, FieldElement, FieldSpec, LogConnection, Stratification};

#[derive(Parser)]
#[command(name = "prismlab", version, about = "Exact log connections, stratifications and Sen weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Field operations
    #[command(subcommand)]
    Field(FieldCmd),
    /// Connection operations
    #[command(subcommand)]
    Conn(ConnCmd),
    /// Stratification operations
    #[command(subcommand)]
    Strat(StratCmd),
    /// Identity checks
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Built-in example objects
    #[command(subcommand)]
    Examples(ExamplesCmd),
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Validate a field (or session) file and print its distinguished scalars
    Check(Input),
}

#[derive(Args, Clone)]
struct Input {
    /// Input file; stdin when absent or `-`
    file: Option<String>,
    /// Object to select from a session file
    #[arg(long)]
    name: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scalar {
    Prismatic,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    #[value(name = "K")]
    K,
    #[value(name = "Kpi1")]
    Kpi1,
}

#[derive(Subcommand)]
enum ConnCmd {
    /// Constant connection `N(T) = residual` (trivial when no residual given)
    New {
        #[arg(long)]
        field: Option<String>,
        #[arg(long)]
        m: usize,
        /// Rank of the trivial connection
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Residual matrix as JSON, e.g. '[["1/2"]]'
        #[arg(long)]
        residual: Option<String>,
    },
    /// Tensor product of two connections
    Tensor { left: String, right: String },
    /// Dual connection
    Dual(Input),
    /// Breuil–Kisin twist by `n`
    Twist {
        #[command(flatten)]
        input: Input,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
    },
    /// Rewrite in another uniformizer: a series file, or `λ_F`
    ChangeUnif {
        #[command(flatten)]
        input: Input,
        /// Series file giving the new uniformizer in terms of the old
        #[arg(long, conflicts_with = "lambda")]
        y: Option<String>,
        /// Use `λ_F`
        #[arg(long)]
        lambda: Option<u32>,
        #[arg(long, default_value = "y")]
        label: String,
    },
    /// Associated stratification
    Strat {
        #[command(flatten)]
        input: Input,
        #[arg(long = "D")]
        d: Option<usize>,
        #[arg(long, value_enum, default_value = "prismatic")]
        scalar: Scalar,
    },
    /// Dimensions of kernel and cokernel of ∇
    Cohomology(Input),
    /// Nearly / log-nearly de Rham classification
    Classify {
        #[command(flatten)]
        input: Input,
        /// Include per-weight margins
        #[arg(long)]
        verbose: bool,
    },
    /// a-nilpotency certificate
    Nilpotent {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "prismatic")]
        scalar: Scalar,
        #[arg(long = "probe-max")]
        probe_max: Option<usize>,
    },
    /// Operator series of the Galois action
    GaloisKernel {
        #[command(flatten)]
        input: Input,
        #[arg(long = "D")]
        d: Option<usize>,
        #[arg(long, value_enum, default_value = "prismatic")]
        scalar: Scalar,
        /// Kernel for a power of τ instead
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long, default_value_t = 0)]
        i: u32,
    },
    /// Convergence of a kernel (or of a connection's kernel) at valuation v0
    Converges {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        v0: String,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<i64>,
        #[arg(long = "D")]
        d: Option<usize>,
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        #[arg(long, default_value_t = 0)]
        i: u32,
        #[arg(long = "probe-max")]
        probe_max: Option<usize>,
    },
}

#[derive(Subcommand)]
enum StratCmd {
    /// Check the cocycle condition
    CheckCocycle(Input),
    /// Recover the connection
    ToConn(Input),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Check the recurrence identity on a stratification's family
    KeyLemma {
        #[command(flatten)]
        input: Input,
        #[arg(long = "n-max", default_value_t = 1)]
        n_max: usize,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    /// `l` copies of the twist `T ↦ n` modulo `T^m`
    BkTwist {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Field file; defaults to Q_3 with E = u - 3
        #[arg(long)]
        field: Option<String>,
    },
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 2, err }
    }
}

impl From<prismlab::Error> for Failure {
    fn from(err: prismlab::Error) -> Self {
        Failure { code: 2, err: err.into() }
    }
}

/// Report plus exit code (0 or 1).
struct Report {
    value: Value,
    failed: bool,
}

impl Report {
    fn ok(value: Value) -> Self {
        Report { value, failed: false }
    }

    fn verdict(value: Value, failed: bool) -> Self {
        Report { value, failed }
    }
}

fn read_text(file: Option<&str>) -> anyhow::Result<String> {
    match file {
        None | Some("-") => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}")),
    }
}

/// Loaded input: the raw JSON plus session defaults when it was a session.
struct Loaded {
    value: Value,
    field: Option<Field>,
    d: Option<usize>,
    probe_max: Option<usize>,
}

fn load(input: &Input, list: &str) -> Result<Loaded, Failure> {
    let text = read_text(input.file.as_deref())?;
    let value = parse_json(&text)?;
    if value.get("connections").is_none() && value.get("stratifications").is_none() {
        return Ok(Loaded { value, field: None, d: None, probe_max: None });
    }
    let session = parse_session(&text)?;
    let items = value.get(list).and_then(Value::as_array).cloned().unwrap_or_default();
    let picked = match &input.name {
        Some(name) => items
            .into_iter()
            .find(|x| x.get("name").and_then(Value::as_str) == Some(name))
            .ok_or_else(|| anyhow!("no object named {name:?} in {list}"))?,
        None if items.len() == 1 => items.into_iter().next().unwrap(),
        None => return Err(anyhow!("session has {} {list}; select one with --name", items.len()).into()),
    };
    Ok(Loaded {
        value: picked,
        field: Some(session.field),
        d: session.config.d,
        probe_max: session.config.probe_max,
    })
}

fn load_connection(input: &Input) -> Result<(LogConnection, Loaded), Failure> {
    let loaded = load(input, "connections")?;
    let conn = connection_from_json(&loaded.value, loaded.field.as_ref(), "$")?;
    Ok((conn, loaded))
}

fn load_stratification(input: &Input) -> Result<Stratification, Failure> {
    let loaded = load(input, "stratifications")?;
    Ok(stratification_from_json(&loaded.value, loaded.field.as_ref(), "$")?)
}

fn load_field(path: Option<&str>) -> Result<Field, Failure> {
    match path {
        None => Ok(FieldSpec::from_ints(3, &[-3, 1])?),
        Some(p) => {
            let v = parse_json(&read_text(Some(p))?)?;
            let v = v.get("field").cloned().unwrap_or(v);
            Ok(field_from_json(&v, "$")?)
        }
    }
}

fn scalar(field: &Field, s: Scalar) -> FieldElement {
    match s {
        Scalar::Prismatic => a_prismatic(field),
        Scalar::Log => a_log(field),
    }
}

fn probe(max: Option<usize>) -> ProbeConfig {
    let mut cfg = ProbeConfig::default();
    if let Some(n) = max {
        cfg.max_n = n;
        cfg.window = cfg.window.min(n / 2);
    }
    cfg
}

fn trace_json(trace: &[prismlab::Valuation]) -> Value {
    Value::Array(trace.iter().map(valuation_to_json).collect())
}

fn weight_json(w: &WeightRecord) -> Value {
    json!({
        "weight": element_to_json(&w.weight),
        "dist": valuation_to_json(&w.dist),
        "margin_prismatic": valuation_to_json(&w.margin_prism),
        "margin_log": valuation_to_json(&w.margin_log),
    })
}

fn build_kernel(
    conn: &LogConnection,
    d: usize,
    s: Scalar,
    variant: Option<Variant>,
    i: u32,
) -> GaloisKernel {
    let a = scalar(conn.field(), s);
    match variant {
        None => {
            let tag = match s {
                Scalar::Prismatic => KernelTag::Prismatic,
                Scalar::Log => KernelTag::Log,
            };
            action_kernel(conn, &a, d, tag)
        }
        Some(v) => {
            let v = match v {
                Variant::K => TauVariant::K,
                Variant::Kpi1 => TauVariant::Kpi1,
            };
            tau_power_kernel(conn, &a, d, i, v)
        }
    }
}

/// Covers every coefficient that matters at modulus `m`.
fn default_d(c: &LogConnection) -> usize {
    2 * c.modulus() + 2
}

fn run(cli: Cli) -> Result<Report, Failure> {
    match cli.command {
        Command::Field(FieldCmd::Check(input)) => {
            let text = read_text(input.file.as_deref())?;
            let field = parse_session(&text)?.field;
            Ok(Report::ok(json!({
                "status": "ok",
                "field": field_to_json(&field),
                "e": field.e(),
                "a_prismatic": element_to_json(&a_prismatic(&field)),
                "a_log": element_to_json(&a_log(&field)),
                "val_a_prismatic": valuation_to_json(&a_prismatic(&field).val()),
                "val_a_log": valuation_to_json(&a_log(&field).val()),
            })))
        }
        Command::Conn(cmd) => run_conn(cmd),
        Command::Strat(StratCmd::CheckCocycle(input)) => {
            let strat = load_stratification(&input)?;
            let report = check_cocycle(&strat);
            if report.passed() {
                return Ok(Report::ok(json!({ "status": "pass" })));
            }
            let mut out = json!({ "status": "fail", "degeneracy_ok": report.degeneracy_ok });
            if let Some(w) = report.witness {
                out["witness"] = json!({
                    "monomial": { "k": w.monomial.k, "j": w.monomial.j },
                    "basis": w.basis,
                });
            }
            Ok(Report::verdict(out, true))
        }
        Command::Strat(StratCmd::ToConn(input)) => {
            let strat = load_stratification(&input)?;
            match to_connection(&strat, "u-pi") {
                Ok(conn) => Ok(Report::ok(connection_to_json(&conn))),
                Err(e @ (prismlab::Error::NotAStratification(_) | prismlab::Error::LeibnizViolation(_))) => {
                    Ok(Report::verdict(json!({ "status": "fail", "reason": e.to_string() }), true))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Verify(VerifyCmd::KeyLemma { input, n_max }) => {
            let strat = load_stratification(&input)?;
            let d = strat
                .pd_cutoff()
                .checked_sub(n_max)
                .ok_or_else(|| anyhow!("family of length {} too short for n-max {n_max}", strat.pd_cutoff() + 1))?;
            let report = verify_key_lemma(strat.phi(), strat.a(), n_max, d)?;
            Ok(match report.failure {
                None => Report::ok(json!({ "status": "pass", "n_max": n_max, "D": d })),
                Some((n, r)) => Report::verdict(json!({ "status": "fail", "n": n, "r": r }), true),
            })
        }
        Command::Examples(ExamplesCmd::BkTwist { n, m, l, field }) => {
            if m == 0 || l == 0 {
                return Err(anyhow!("--m and --l must be positive").into());
            }
            let field = load_field(field.as_deref())?;
            let conn = bk_twist(&LogConnection::trivial(&field, "u-pi", l, m), n);
            Ok(Report::ok(connection_to_json(&conn)))
        }
    }
}

fn run_conn(cmd: ConnCmd) -> Result<Report, Failure> {
    match cmd {
        ConnCmd::New { field, m, l, residual } => {
            if m == 0 || l == 0 {
                return Err(anyhow!("--m and --l must be positive").into());
            }
            let field = load_field(field.as_deref())?;
            let conn = match residual {
                None => LogConnection::trivial(&field, "u-pi", l, m),
                Some(text) => {
                    let v = parse_json(&text)?;
                    let size = v.as_array().map_or(0, Vec::len);
                    let res = matrix_from_json(&field, &v, size, "--residual")?;
                    LogConnection::from_constant(&res, "u-pi", m)
                }
            };
            Ok(Report::ok(connection_to_json(&conn)))
        }
        ConnCmd::Tensor { left, right } => {
            let (a, _) = load_connection(&Input { file: Some(left), name: None })?;
            let (b, _) = load_connection(&Input { file: Some(right), name: None })?;
            Ok(Report::ok(connection_to_json(&tensor(&a, &b)?)))
        }
        ConnCmd::Dual(input) => {
            let (c, _) = load_connection(&input)?;
            Ok(Report::ok(connection_to_json(&dual(&c))))
        }
        ConnCmd::Twist { input, n } => {
            let (c, _) = load_connection(&input)?;
            Ok(Report::ok(connection_to_json(&bk_twist(&c, n))))
        }
        ConnCmd::ChangeUnif { input, y, lambda, label } => {
            let (c, _) = load_connection(&input)?;
            let out = match (y, lambda) {
                (Some(path), _) => {
                    let v = parse_json(&read_text(Some(&path))?)?;
                    let y = series_from_json(c.field(), &v, "$")?;
                    change_uniformizer(&c, &y, &label)?
                }
                (None, Some(f)) => kummer_sen_operator(&c, f)?.connection,
                (None, None) => return Err(anyhow!("give --y FILE or --lambda F").into()),
            };
            Ok(Report::ok(connection_to_json(&out)))
        }
        ConnCmd::Strat { input, d, scalar: s } => {
            let (c, loaded) = load_connection(&input)?;
            let d = d.or(loaded.d).unwrap_or_else(|| default_d(&c));
            let strat = from_connection(&c, &scalar(c.field(), s), d);
            Ok(Report::ok(stratification_to_json(&strat)))
        }
        ConnCmd::Cohomology(input) => {
            let (c, _) = load_connection(&input)?;
            let h = cohomology(&c);
            Ok(Report::ok(json!({ "h0": h.h0, "h1": h.h1 })))
        }
        ConnCmd::Classify { input, verbose } => {
            let (c, _) = load_connection(&input)?;
            let r = classify_ndr(&c, &[]);
            let mut out = json!({ "nearly_dR": r.nearly_dr, "log_nearly_dR": r.log_nearly_dr });
            if verbose {
                out["weights"] = Value::Array(r.weights.iter().map(weight_json).collect());
                if let Some(p) = &r.probe {
                    out["probe"] = json!({ "status": p.status.as_str(), "trace": trace_json(&p.trace) });
                }
            }
            Ok(Report::ok(out))
        }
        ConnCmd::Nilpotent { input, scalar: s, probe_max } => {
            let (c, loaded) = load_connection(&input)?;
            let cfg = probe(probe_max.or(loaded.probe_max));
            let r = check_nilpotent(&c, &scalar(c.field(), s), &cfg);
            let failed = matches!(
                r.status,
                NilpotencyStatus::ProvenNotNilpotent | NilpotencyStatus::ProbeDivergent
            );
            Ok(Report::verdict(
                json!({ "status": r.status.as_str(), "trace": trace_json(&r.trace) }),
                failed,
            ))
        }
        ConnCmd::GaloisKernel { input, d, scalar: s, variant, i } => {
            let (c, loaded) = load_connection(&input)?;
            let d = d.or(loaded.d).unwrap_or_else(|| default_d(&c));
            Ok(Report::ok(kernel_to_json(&build_kernel(&c, d, s, variant, i))))
        }
        ConnCmd::Converges { input, v0, c, d, variant, i, probe_max } => {
            let loaded = load(&input, "connections")?;
            let kernel = if loaded.value.get("A").is_some() {
                kernel_from_json(&loaded.value, loaded.field.as_ref(), "$")?
            } else {
                let conn = connection_from_json(&loaded.value, loaded.field.as_ref(), "$")?;
                let d = d.or(loaded.d).unwrap_or_else(|| default_d(&conn));
                build_kernel(&conn, d, Scalar::Prismatic, variant, i)
            };
            let v0 = parse_valuation(&Value::String(v0), "--v0")?;
            let c = c.map(Into::into).or_else(|| kernel.c.clone());
            let cfg = probe(probe_max.or(loaded.probe_max));
            let r = converges_at_with(&kernel, &GaloisElementData { v0, c }, &cfg)?;
            Ok(Report::verdict(
                json!({
                    "status": r.status.as_str(),
                    "effective_v0": valuation_to_json(&r.effective_v0),
                    "trace": trace_json(&r.trace),
                }),
                r.status == ConvergenceStatus::Divergent,
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{}", to_canonical_string(&report.value));
            ExitCode::from(if report.failed { 1 } else { 0 })
        }
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
