//! The `qsatlab` command line.
//!
//! Exit codes: 0 on success (including "decided unsatisfiable"), 1 when the
//! golden example mismatches or `--strict` finds a failing report, 2 on
//! usage or input errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::checker::{qsat_decide, PromiseConfig};
use crate::experiments::{
    example1_report, proposition_search_all_pairs, proposition_witness_search, sweep,
    PropositionReport, SweepConfig, SweepMode,
};
use crate::formula::{self, parse_dimacs, Evaluation, Formula, DEFAULT_BRUTE_FORCE_LIMIT};
use crate::linalg::{matrix_dump_json, matrix_grid, Scalar, DEFAULT_TOL};
use crate::qassign::{assignments_for, quantum_assignment, EmbeddingMode, QuantumAssignment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides the largest accepted variable count.
pub const MAX_N_ENV: &str = "QSATLAB_MAX_N";

#[derive(Debug, Parser)]
#[command(name = "qsatlab", version, about = "Quantum assignments for CNF formulas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct Input {
    /// DIMACS CNF file, or `-` for stdin.
    input: PathBuf,
}

#[derive(Debug, Args)]
struct FormatArg {
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Echo the normalized formula and its dimension (k, n).
    Parse {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        format: FormatArg,
    },
    /// List satisfying evaluations as bitstrings x1…xn.
    Sat {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Dump the clause projectors for one evaluation.
    Build {
        #[command(flatten)]
        input: Input,
        /// Satisfying evaluation as a bitstring in x1…xn order.
        #[arg(long)]
        eval: String,
        #[arg(long, default_value = "literal")]
        mode: EmbeddingMode,
        /// Complex scale `re,im` (or just `re`).
        #[arg(long, default_value = "1", value_parser = parse_scale)]
        scale: Scalar,
        /// Only this clause (1-based).
        #[arg(long)]
        clause: Option<usize>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Decide quantum satisfiability; one verdict per evaluation.
    Check {
        #[command(flatten)]
        input: Input,
        /// Check only this evaluation; default is every satisfying one.
        #[arg(long)]
        eval: Option<String>,
        #[arg(long, default_value = "literal")]
        mode: EmbeddingMode,
        #[arg(long, default_value = "1", value_parser = parse_scale)]
        scale: Scalar,
        /// Promise gap; default 1/(8n³).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Reproduce the three-variable golden example; exit 1 on any mismatch.
    Example1 {
        #[command(flatten)]
        format: FormatArg,
    },
    /// Search for evaluations whose natural conversion a clause projector
    /// does not annihilate.
    Prop {
        #[command(flatten)]
        input: Input,
        /// Clause pair `p,q` (1-based); default is every pair with distinct
        /// variable sets.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(usize, usize)>,
        /// Also try every literal order of clause q.
        #[arg(long)]
        permute: bool,
        /// Exit 1 if any pair has no witness.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Exhaustive or random sweep over small formulas.
    Sweep {
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        m: usize,
        /// Random mode with this many formulas; exhaustive when absent.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        permute: bool,
        /// Keep formulas where every clause shares its variable set.
        #[arg(long)]
        allow_shared_varsets: bool,
        /// Directory receiving sweep.json and sweep.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 1 if any pair fails or any consistency check disagrees.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        format: FormatArg,
    },
}

fn parse_scale(s: &str) -> Result<Scalar, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("bad scale component `{t}`: {e}"));
    let z = match parts.as_slice() {
        [re] => Scalar::new(num(re)?, 0.0),
        [re, im] => Scalar::new(num(re)?, num(im)?),
        _ => return Err(format!("expected `re,im`, got `{s}`")),
    };
    if !z.re.is_finite() || !z.im.is_finite() || z == Scalar::new(0.0, 0.0) {
        return Err("scale must be finite and nonzero".into());
    }
    Ok(z)
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s.split_once(',').ok_or_else(|| format!("expected `p,q`, got `{s}`"))?;
    let idx = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad clause index `{t}`: {e}"));
    Ok((idx(p)?, idx(q)?))
}

/// A failure mapped to an exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

type CliResult = Result<i32, Failure>;

struct Context<'a> {
    out: &'a mut dyn Write,
    max_n: usize,
}

impl Context<'_> {
    fn emit(&mut self, text: &str) -> Result<(), Failure> {
        self.out.write_all(text.as_bytes()).map_err(usage)
    }

    fn emit_json(&mut self, v: &Value) -> Result<(), Failure> {
        let s = serde_json::to_string_pretty(v).map_err(usage)?;
        self.emit(&s)?;
        self.emit("\n")
    }

    fn read_formula(&self, input: &Input) -> Result<Formula, Failure> {
        let text = if input.input.as_os_str() == "-" {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(usage)?;
            s
        } else {
            fs::read_to_string(&input.input)
                .map_err(|e| usage(format!("{}: {e}", input.input.display())))?
        };
        let f = parse_dimacs(&text).map_err(usage)?;
        if f.num_vars() > self.max_n {
            return Err(usage(format!(
                "formula has n = {} variables; the cap is {} (set {MAX_N_ENV} to change it)",
                f.num_vars(),
                self.max_n
            )));
        }
        Ok(f)
    }

    fn satisfying(&self, f: &Formula) -> Result<Vec<Evaluation>, Failure> {
        formula::satisfying_evaluations_with_limit(f, self.max_n).map_err(usage)
    }
}

fn parse_eval(f: &Formula, s: &str) -> Result<Evaluation, Failure> {
    let v = Evaluation::parse_bits(s).ok_or_else(|| usage(format!("--eval must be a bitstring, got `{s}`")))?;
    if v.len() != f.num_vars() {
        return Err(usage(format!("--eval has {} bits but the formula has n = {}", v.len(), f.num_vars())));
    }
    Ok(v)
}

fn reject_csv(format: Option<Format>) -> Result<(), Failure> {
    if format == Some(Format::Csv) {
        return Err(usage("csv output is only available for `sat` and `sweep`"));
    }
    Ok(())
}

fn cmd_parse(ctx: &mut Context, input: &Input, format: Option<Format>) -> CliResult {
    reject_csv(format)?;
    let f = ctx.read_formula(input)?;
    let (k, n) = f.dimension();
    match format.unwrap_or(Format::Text) {
        Format::Json => {
            let clauses: Vec<Vec<i64>> = f
                .clauses()
                .iter()
                .map(|c| c.literals().iter().map(|l| l.to_dimacs()).collect())
                .collect();
            ctx.emit_json(&json!({
                "k": k, "n": n, "m": f.num_clauses(),
                "clauses": clauses, "formula": f.to_string(),
            }))?;
        }
        _ => {
            ctx.emit(&f.to_dimacs())?;
            ctx.emit(&format!("c {f}\nc dimension ({k}, {n})\n"))?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_sat(ctx: &mut Context, input: &Input, format: Option<Format>) -> CliResult {
    let f = ctx.read_formula(input)?;
    let evals = ctx.satisfying(&f)?;
    let bits: Vec<String> = evals.iter().map(ToString::to_string).collect();
    match format.unwrap_or(Format::Text) {
        Format::Json => ctx.emit_json(&json!({ "satisfying": bits }))?,
        Format::Csv => {
            ctx.emit("evaluation\n")?;
            for b in &bits {
                ctx.emit(&format!("{b}\n"))?;
            }
        }
        Format::Text => {
            for b in &bits {
                ctx.emit(&format!("{b}\n"))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_build(
    ctx: &mut Context,
    input: &Input,
    eval: &str,
    mode: EmbeddingMode,
    scale: Scalar,
    clause: Option<usize>,
    format: Option<Format>,
) -> CliResult {
    reject_csv(format)?;
    let f = ctx.read_formula(input)?;
    let v = parse_eval(&f, eval)?;
    let assignments: Vec<QuantumAssignment> = match clause {
        Some(i) => vec![quantum_assignment(&f, i, &v, mode, scale).map_err(usage)?],
        None => assignments_for(&f, &v, mode, scale).map_err(usage)?,
    };
    match format.unwrap_or(Format::Json) {
        Format::Text => {
            for q in &assignments {
                ctx.emit(&format!(
                    "clause {} ({}, vars {:?}, bits {})\n",
                    q.clause_index,
                    q.mode,
                    q.clause_vars,
                    Evaluation::new(q.clause_bits.clone())
                ))?;
                ctx.emit(&matrix_grid(&q.matrix).map_err(usage)?)?;
            }
        }
        _ => {
            let dumps = assignments
                .iter()
                .map(|q| {
                    Ok(json!({
                        "clause": q.clause_index,
                        "mode": q.mode,
                        "vars": q.clause_vars,
                        "bits": Evaluation::new(q.clause_bits.clone()).to_string(),
                        "matrix": matrix_dump_json(&q.matrix).map_err(usage)?,
                    }))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            ctx.emit_json(&Value::Array(dumps))?;
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    ctx: &mut Context,
    input: &Input,
    eval: Option<&str>,
    mode: EmbeddingMode,
    scale: Scalar,
    epsilon: Option<f64>,
    tol: f64,
    format: Option<Format>,
) -> CliResult {
    reject_csv(format)?;
    let f = ctx.read_formula(input)?;
    let epsilon = epsilon.unwrap_or_else(|| PromiseConfig::for_qubits(f.num_vars()).epsilon);
    let cfg = PromiseConfig::new(epsilon, tol).map_err(usage)?;
    let evals = match eval {
        Some(s) => vec![parse_eval(&f, s)?],
        None => ctx.satisfying(&f)?,
    };
    // Validate every evaluation before printing anything.
    let instances = evals
        .iter()
        .map(|v| assignments_for(&f, v, mode, scale).map(|a| (v, a)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    for (v, assignments) in instances {
        let verdict = qsat_decide(&assignments, &cfg).map_err(usage)?.with_evaluation(v);
        match format.unwrap_or(Format::Json) {
            Format::Text => ctx.emit(&format!(
                "eval {v} mode {mode}: {} lambda_min {} gap [{}, {}] promise_met {}\n",
                if verdict.satisfiable { "satisfiable" } else { "unsatisfiable" },
                verdict.lambda_min,
                verdict.gap_lower,
                verdict.gap_upper,
                verdict.promise_met
            ))?,
            _ => {
                let line = serde_json::to_string(&verdict.to_json()).map_err(usage)?;
                ctx.emit(&format!("{line}\n"))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_example1(ctx: &mut Context, format: Option<Format>) -> CliResult {
    reject_csv(format)?;
    let r = example1_report().map_err(usage)?;
    match format.unwrap_or(Format::Text) {
        Format::Json => ctx.emit_json(&r.to_json().map_err(usage)?)?,
        _ => {
            ctx.emit(&format!("formula {}  evaluation {}\n", r.formula, r.evaluation))?;
            for (i, m) in r.outer_products.iter().enumerate() {
                ctx.emit(&format!("\nouter product, clause {}\n", i + 1))?;
                ctx.emit(&matrix_grid(m).map_err(usage)?)?;
            }
            for (i, m) in r.projectors.iter().enumerate() {
                ctx.emit(&format!("\nprojector, clause {}\n", i + 1))?;
                ctx.emit(&matrix_grid(m).map_err(usage)?)?;
            }
            let vec: Vec<String> = r.vector.entries().iter().map(|z| format!("{}", z.re)).collect();
            ctx.emit(&format!("\nvector |{}⟩ = ({})\n", r.evaluation, vec.join(", ")))?;
            let res: Vec<String> = r.residuals.iter().map(|z| format!("{}", z.re)).collect();
            ctx.emit(&format!("residuals ({})\n\n", res.join(", ")))?;
            for c in &r.checks {
                ctx.emit(&format!("{:<16} {}\n", c.name, if c.matches { "match" } else { "MISMATCH" }))?;
            }
        }
    }
    Ok(if r.all_match() { EXIT_OK } else { EXIT_FAILURE })
}

fn report_line(r: &PropositionReport) -> String {
    let (p, q) = r.clause_pair;
    let head = format!(
        "pair {p},{q}: {} ({} witnesses, {} natural successes{})",
        if r.proposition_holds { "holds" } else { "FAILS" },
        r.witnesses.len(),
        r.natural_successes.len(),
        if r.permutations_searched { ", permuted" } else { "" }
    );
    match r.witnesses.first() {
        Some(w) => format!(
            "{head}; first witness {} with residuals ({}, {})\n",
            w.evaluation, w.residual_p, w.residual_q
        ),
        None => format!("{head}\n"),
    }
}

fn cmd_prop(
    ctx: &mut Context,
    input: &Input,
    pair: Option<(usize, usize)>,
    permute: bool,
    strict: bool,
    format: Option<Format>,
) -> CliResult {
    reject_csv(format)?;
    let f = ctx.read_formula(input)?;
    let reports = match pair {
        Some((p, q)) => vec![proposition_witness_search(&f, p, q, permute).map_err(usage)?],
        None => proposition_search_all_pairs(&f, permute).map_err(usage)?,
    };
    match format.unwrap_or(Format::Json) {
        Format::Text => {
            for r in &reports {
                ctx.emit(&report_line(r))?;
            }
        }
        _ => {
            let v = serde_json::to_value(&reports).map_err(usage)?;
            ctx.emit_json(&v)?;
        }
    }
    let failed = reports.iter().any(|r| !r.proposition_holds);
    Ok(if strict && failed { EXIT_FAILURE } else { EXIT_OK })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    ctx: &mut Context,
    k: usize,
    n: usize,
    m: usize,
    count: Option<usize>,
    seed: u64,
    permute: bool,
    allow_shared_varsets: bool,
    out: Option<&PathBuf>,
    strict: bool,
    format: Option<Format>,
) -> CliResult {
    let cfg = SweepConfig {
        k,
        n,
        m,
        mode: match count {
            Some(count) => SweepMode::Random { seed, count },
            None => SweepMode::Exhaustive,
        },
        require_distinct_varsets: !allow_shared_varsets,
        permute_literals: permute,
    };
    let report = sweep(&cfg).map_err(usage)?;
    if let Some(dir) = out {
        report.write_to_dir(dir).map_err(usage)?;
    }
    match format.unwrap_or(Format::Json) {
        Format::Csv => {
            let bytes = report.to_csv().map_err(usage)?;
            ctx.out.write_all(&bytes).map_err(usage)?;
        }
        Format::Json if out.is_none() => {
            let bytes = report.to_json().map_err(usage)?;
            ctx.out.write_all(&bytes).map_err(usage)?;
        }
        Format::Json => ctx.emit_json(&serde_json::to_value(&report.summary).map_err(usage)?)?,
        Format::Text => {
            let s = &report.summary;
            ctx.emit(&format!(
                "formulas {} (evaluated {}, unsatisfiable {}, no pair {})\n\
                 pairs {}: holds {}, fails {} (fixed order holds {}, any order holds {})\n\
                 instances {}: literal qsat {}, aligned qsat {}, aligned residuals all zero {}\n\
                 oracle disagreements {}, null-space disagreements {}\n",
                s.formulas_generated,
                s.formulas_evaluated,
                s.formulas_unsatisfiable,
                s.formulas_without_pair,
                s.pairs_tested,
                s.proposition_holds,
                s.proposition_fails,
                s.holds_fixed_order,
                s.holds_any_order,
                s.instances,
                s.literal_qsat,
                s.aligned_qsat,
                s.aligned_residuals_all_zero,
                s.oracle_disagreements,
                s.nullspace_disagreements,
            ))?;
        }
    }
    let s = &report.summary;
    let failed = s.proposition_fails > 0
        || !s.aligned_residuals_all_zero
        || s.oracle_disagreements > 0
        || s.nullspace_disagreements > 0;
    Ok(if strict && failed { EXIT_FAILURE } else { EXIT_OK })
}

fn dispatch(ctx: &mut Context, cmd: &Command) -> CliResult {
    match cmd {
        Command::Parse { input, format } => cmd_parse(ctx, input, format.format),
        Command::Sat { input, format } => cmd_sat(ctx, input, format.format),
        Command::Build {
            input,
            eval,
            mode,
            scale,
            clause,
            format,
        } => cmd_build(ctx, input, eval, *mode, *scale, *clause, format.format),
        Command::Check {
            input,
            eval,
            mode,
            scale,
            epsilon,
            tol,
            format,
        } => cmd_check(ctx, input, eval.as_deref(), *mode, *scale, *epsilon, *tol, format.format),
        Command::Example1 { format } => cmd_example1(ctx, format.format),
        Command::Prop {
            input,
            pair,
            permute,
            strict,
            format,
        } => cmd_prop(ctx, input, *pair, *permute, *strict, format.format),
        Command::Sweep {
            k,
            n,
            m,
            count,
            seed,
            permute,
            allow_shared_varsets,
            out,
            strict,
            format,
        } => cmd_sweep(
            ctx,
            *k,
            *n,
            *m,
            *count,
            *seed,
            *permute,
            *allow_shared_varsets,
            out.as_ref(),
            *strict,
            format.format,
        ),
    }
}

fn max_n_from_env() -> Result<usize, Failure> {
    match std::env::var(MAX_N_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|e| usage(format!("{MAX_N_ENV}={s}: {e}"))),
        Err(_) => Ok(DEFAULT_BRUTE_FORCE_LIMIT),
    }
}

/// Runs the command line with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = max_n_from_env().and_then(|max_n| {
        let mut ctx = Context { out, max_n };
        dispatch(&mut ctx, &cli.command)
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Runs the command line against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
