//! Command-line front end: one subcommand per capability, `--format
//! text|structured`, and script-friendly exit codes (0 success, 1 domain
//! error, 2 input syntax error).

use std::collections::BTreeMap;
use std::fmt;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::calculus::interval::IntervalUnion;
use crate::calculus::{
    self, derivative_at, frechet_check, geometric_family, lebesgue_measures, peano_study,
    riemann_numeric, riemann_symbolic, sigma_subadd_check, tagged_sum_check, NumericBudget,
    TagScheme,
};
use crate::expr::{Env, EvalConfig, Expr};
use crate::forcing::{
    decide_membership, diagonal_thick, enumerate_conditions, forces_clausal, forces_los,
    pseudo_generic, split_fibers, standard_part_name, thickness_nu, Condition, DenseRule,
    FinFamily, IndexSet, SpaceCaps, ThickOutcome, DEFAULT_UNIVERSE_RANK,
};
use crate::formula::parse::parse_formula;
use crate::formula::rewrite::{
    replay, rewrite_and_collapse, rewrite_to_delta_st, RewriteTrace,
};
use crate::formula::{classify_delta_st, DeltaStClass};
use crate::hyper::{Class, LCNum};
use crate::rational::{parse_rational, Rational};

// ---------------------------------------------------------------------------
// errors and exit codes

/// Failures split by exit code: inputs that do not parse exit 2, everything
/// the library rejects exits 1 with the library error name.
#[derive(Debug)]
pub enum CliError {
    Syntax { detail: String },
    Domain { name: String, detail: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Syntax { .. } => 2,
            CliError::Domain { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Syntax { detail } => write!(f, "syntax error: {detail}"),
            CliError::Domain { name, detail } => write!(f, "error[{name}]: {detail}"),
        }
    }
}

/// First token of the `Debug` form: the variant name of a fieldless or
/// struct-style enum error.
fn variant_name<E: fmt::Debug>(e: &E) -> String {
    let d = format!("{e:?}");
    d.split(|c: char| c == ' ' || c == '(' || c == '{')
        .next()
        .unwrap_or("Error")
        .to_string()
}

/// Wraps a library error raised while executing an operation.
fn domain<E: fmt::Debug + fmt::Display>(module: &str, e: E) -> CliError {
    CliError::Domain { name: format!("{module}::{}", variant_name(&e)), detail: e.to_string() }
}

/// Parses a positional or flag value, mapping failure to a syntax error.
fn parse_input<T: FromStr>(what: &str, s: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e| CliError::Syntax { detail: format!("{what} {s:?}: {e}") })
}

fn parse_rat(what: &str, s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|e| CliError::Syntax { detail: format!("{what} {s:?}: {e}") })
}

type Out = Result<String, CliError>;

// ---------------------------------------------------------------------------
// invocation shape

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Line-oriented human-readable output.
    Text,
    /// One machine-readable JSON document.
    Structured,
}

#[derive(Debug, Parser)]
#[command(
    name = "infinilab",
    version,
    about = "Exact infinitesimal calculus, quantifier rewriting, and desk-scale forcing",
    max_term_width = 100
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate an expression over the truncated series field.
    Hyper(HyperArgs),
    /// Differentiate at a point as the shadow of difference quotients.
    Deriv(DerivArgs),
    /// Integrate a polynomial over an interval by closed-form grid sums.
    Integrate(IntegrateArgs),
    /// Re-sum a grid integral with moved tags and compare shadows.
    Tagged(TaggedArgs),
    /// Euler polygons at halved steps with difference-ratio tables.
    Peano(PeanoArgs),
    /// Grid measures of interval unions; subadditivity ledgers.
    Measure(MeasureArgs),
    /// Normalize a formula into standard-block form with a replayable trace.
    Rewrite(FormulaArg),
    /// Report whether a formula is already in standard-block form.
    Classify(FormulaArg),
    /// Normalize and then erase the standard marks on the leading block.
    Collapse(FormulaArg),
    /// Check a forcing assertion clause by clause over an enumerated space.
    Force(ForceArgs),
    /// Extend a condition until it decides membership up to a bound.
    Decide(DecideArgs),
    /// Tabulate thickness degrees of finite-set families.
    Thick(ThickArgs),
    /// Run a dense-rule chain and verify every link extends the last.
    Generic(GenericArgs),
    /// Split a rule fiber's index set into two halves with disjoint selections.
    Split(SplitArgs),
}

// ---------------------------------------------------------------------------
// per-subcommand argument bundles

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Expression over rationals, named variables, `eps`, and exp/sin/cos.
    pub expr: String,
    /// Variable bindings `name=value` with series literals, e.g. `x=3 + 1*eps^1`.
    #[arg(long = "let", value_name = "NAME=VALUE")]
    pub bindings: Vec<String>,
    /// Truncation order for division expansions and series nodes.
    #[arg(long, default_value_t = 8)]
    pub order: i64,
}

#[derive(Debug, Args)]
pub struct DerivArgs {
    /// Expression defining the function.
    pub expr: String,
    /// Point of differentiation (rational or decimal literal).
    #[arg(long)]
    pub at: String,
    /// Function variable; inferred when the expression has at most one.
    #[arg(long)]
    pub var: Option<String>,
    /// Truncation order.
    #[arg(long, default_value_t = 8)]
    pub order: i64,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Polynomial integrand.
    pub expr: String,
    /// Left endpoint.
    #[arg(long)]
    pub from: String,
    /// Right endpoint.
    #[arg(long)]
    pub to: String,
    /// Integration variable; inferred when the expression has at most one.
    #[arg(long)]
    pub var: Option<String>,
    /// Truncation order.
    #[arg(long, default_value_t = 8)]
    pub order: i64,
    /// Use exact left sums at spacings 2^-j plus extrapolation instead of the
    /// closed-form certificate.
    #[arg(long)]
    pub numeric: bool,
    /// Numeric mode: finest spacing exponent.
    #[arg(long, default_value_t = 10)]
    pub j_max: u32,
    /// Numeric mode: coarsest spacing exponent.
    #[arg(long, default_value_t = 3)]
    pub j_min: u32,
    /// Numeric mode: convergence tolerance.
    #[arg(long, default_value = "1/1000000")]
    pub tol: String,
}

#[derive(Debug, Args)]
pub struct TaggedArgs {
    /// Polynomial integrand.
    pub expr: String,
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub var: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub order: i64,
    /// Comma-separated tag schemes (default: all three).
    #[arg(long, value_delimiter = ',')]
    pub schemes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PeanoArgs {
    /// Slope field f(x, y).
    pub expr: String,
    #[arg(long, default_value = "x")]
    pub x_var: String,
    #[arg(long, default_value = "y")]
    pub y_var: String,
    #[arg(long)]
    pub x0: String,
    #[arg(long)]
    pub y0: String,
    /// Coarsest step; later levels halve it.
    #[arg(long)]
    pub h0: String,
    #[arg(long)]
    pub x_max: String,
    /// Number of halving levels (at least 2).
    #[arg(long, default_value_t = 4)]
    pub levels: u32,
    /// Comma-separated report points on the coarsest grid (default: x_max).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub order: i64,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Interval unions like `[0,1]+[2,5/2]` (one report each; the listed
    /// family in `--sigma` mode).
    pub sets: Vec<String>,
    /// Verification spacing.
    #[arg(long, default_value = "1/64")]
    pub h: String,
    /// Run the countable-subadditivity ledger over the listed sets.
    #[arg(long)]
    pub sigma: bool,
    /// Sigma mode: total length bound for the unlisted tail.
    #[arg(long)]
    pub tail: Option<String>,
    /// Sigma mode: additivity budget.
    #[arg(long, default_value = "1/1000000000")]
    pub eps: String,
    /// Sigma mode: materialize the standard shrinking family with this many
    /// pieces instead of listing sets.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FormulaArg {
    /// Formula text, e.g. `Ain h. Ein k. P(h,k)`.
    pub formula: String,
}

#[derive(Debug, Args)]
pub struct ForceArgs {
    /// Condition `p: prelude=.. period=.. | q: rank=.. prelude=[..] period=[..]`.
    pub condition: String,
    /// Assertion about the names, e.g. `st(G0)` or `!(0 in G1)`.
    #[arg(long)]
    pub phi: String,
    /// Universe rank bound for quantifiers and witnesses.
    #[arg(long, default_value_t = DEFAULT_UNIVERSE_RANK)]
    pub rank: usize,
    /// Use the exact almost-everywhere evaluator (true/false) instead of the
    /// clause-by-clause checker (forced/refuted/unknown).
    #[arg(long)]
    pub los: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    /// Condition to extend.
    pub condition: String,
    /// Which name to decide membership in.
    #[arg(long, default_value_t = 0)]
    pub name: usize,
    /// Decide `n in G_name` for every n up to this bound.
    #[arg(long, default_value_t = 4)]
    pub bound: usize,
}

#[derive(Debug, Args)]
pub struct ThickArgs {
    /// Family rule like `contains(5)` or `(contains(0) & card<=3)`; repeat the
    /// flag to give a descending chain for `--diag`.
    #[arg(long = "family", required = true)]
    pub families: Vec<String>,
    /// Largest departure size to tabulate.
    #[arg(long, default_value_t = 6)]
    pub m_max: usize,
    /// Build the diagonal composite over the listed chain and tabulate it.
    #[arg(long)]
    pub diag: bool,
}

#[derive(Debug, Args)]
pub struct GenericArgs {
    /// Starting condition.
    pub condition: String,
    /// Dense rules in order: `fix(z)`, `diag`, `restrict(prelude=.. period=..)`,
    /// `decide(name=m bound=B)`. Repeat the flag.
    #[arg(long = "rule", required = true)]
    pub rules: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Rule fiber like `rank=1 rule=[(vN(i))]`.
    pub fiber: String,
    /// Index set to split (default: all indices).
    #[arg(long, default_value = "period=1")]
    pub p: String,
}

// ---------------------------------------------------------------------------
// entry points

/// Parses real process arguments, runs, prints, and maps errors to exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Dispatches one parsed invocation to its runner.
pub fn run(cli: &Cli) -> Out {
    let fmt = cli.format;
    match &cli.cmd {
        Cmd::Hyper(a) => run_hyper(a, fmt),
        Cmd::Deriv(a) => run_deriv(a, fmt),
        Cmd::Integrate(a) => run_integrate(a, fmt),
        Cmd::Tagged(a) => run_tagged(a, fmt),
        Cmd::Peano(a) => run_peano(a, fmt),
        Cmd::Measure(a) => run_measure(a, fmt),
        Cmd::Rewrite(a) => run_rewrite(a, fmt),
        Cmd::Classify(a) => run_classify(a, fmt),
        Cmd::Collapse(a) => run_collapse(a, fmt),
        Cmd::Force(a) => run_force(a, fmt),
        Cmd::Decide(a) => run_decide(a, fmt),
        Cmd::Thick(a) => run_thick(a, fmt),
        Cmd::Generic(a) => run_generic(a, fmt),
        Cmd::Split(a) => run_split(a, fmt),
    }
}

fn structured<T: Serialize>(value: &T) -> Out {
    serde_json::to_string_pretty(value)
        .map_err(|e| domain("Serialize", e))
}

fn eval_config(order: i64) -> Result<EvalConfig, CliError> {
    if order < 1 {
        return Err(CliError::Syntax { detail: format!("order must be at least 1, got {order}") });
    }
    Ok(EvalConfig { div_order: order, series_order: order as u32 })
}

/// Picks the function variable: the flag if given, else the unique non-`eps`
/// variable of the expression, else `x` for constant expressions.
fn pick_var(expr: &Expr, flag: &Option<String>) -> Result<String, CliError> {
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    let mut vars = expr.vars();
    vars.retain(|v| v != "eps");
    match vars.len() {
        0 => Ok("x".to_string()),
        1 => Ok(vars.remove(0)),
        _ => Err(CliError::Syntax {
            detail: format!("expression has variables {vars:?}; pick one with --var"),
        }),
    }
}

// ---------------------------------------------------------------------------
// runners

fn run_hyper(a: &HyperArgs, fmt: Format) -> Out {
    let expr: Expr = parse_input("expression", &a.expr)?;
    let cfg = eval_config(a.order)?;
    let mut env = Env::new();
    for binding in &a.bindings {
        let (name, value) = binding.split_once('=').ok_or_else(|| CliError::Syntax {
            detail: format!("binding {binding:?} is not NAME=VALUE"),
        })?;
        let v: LCNum = parse_input("binding value", value.trim())?;
        env.insert(name.trim().to_string(), v);
    }
    let value = expr.eval(&env, &cfg).map_err(|e| domain("ExprError", e))?;
    let class = value.classify().map_err(|e| domain("HyperError", e))?;
    let shadow = match class {
        Class::Unlimited => None,
        _ => Some(value.shadow().map_err(|e| domain("HyperError", e))?),
    };
    match fmt {
        Format::Structured => structured(&json!({
            "value": value.to_string(),
            "class": class,
            "shadow": shadow.map(|s| s.to_string()),
            "exact": value.is_exact(),
        })),
        Format::Text => {
            let mut out = format!("value: {value}\nclass: {class}");
            match shadow {
                Some(s) => out.push_str(&format!("\nshadow: {s}")),
                None => out.push_str("\nshadow: none (unlimited)"),
            }
            if !value.is_exact() {
                out.push_str("\nexact: no (truncated)");
            }
            Ok(out)
        }
    }
}

fn run_deriv(a: &DerivArgs, fmt: Format) -> Out {
    let expr: Expr = parse_input("expression", &a.expr)?;
    let var = pick_var(&expr, &a.var)?;
    let at = parse_rat("point", &a.at)?;
    let cfg = eval_config(a.order)?;
    let report = derivative_at(&expr, &var, &at, &calculus::default_h_choices(), &cfg)
        .map_err(|e| domain("CalcError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "var": var,
            "report": report,
        })),
        Format::Text => Ok(report.value.to_string()),
    }
}

fn run_integrate(a: &IntegrateArgs, fmt: Format) -> Out {
    let expr: Expr = parse_input("expression", &a.expr)?;
    let var = pick_var(&expr, &a.var)?;
    let from = parse_rat("endpoint", &a.from)?;
    let to = parse_rat("endpoint", &a.to)?;
    let cfg = eval_config(a.order)?;
    if a.numeric {
        let budget =
            NumericBudget { j_min: a.j_min, j_max: a.j_max, tol: parse_rat("tolerance", &a.tol)? };
        let report = riemann_numeric(&expr, &var, &from, &to, &budget, &cfg)
            .map_err(|e| domain("CalcError", e))?;
        return match fmt {
            Format::Structured => structured(&report),
            Format::Text => {
                let mut out = format!("value: {}", report.value);
                for level in &report.levels {
                    out.push_str(&format!("\nj={} h={} sum={}", level.j, level.h, level.left_sum));
                }
                out.push_str(&format!(
                    "\nfinal increment: {} (tol {})\nconverged: {}",
                    report.final_increment, report.tol, report.converged
                ));
                Ok(out)
            }
        };
    }
    let report = riemann_symbolic(&expr, &var, &from, &to, &cfg)
        .map_err(|e| domain("CalcError", e))?;
    match fmt {
        Format::Structured => structured(&report),
        Format::Text => {
            let mut out = format!("value: {}", report.value);
            match report.remainder_min_h_order {
                Some(k) => out.push_str(&format!(
                    "\nremainder: {} monomials, all carrying h^{k} or higher",
                    report.remainder_terms
                )),
                None => out.push_str("\nremainder: zero"),
            }
            out.push_str(&format!("\nsum at h=eps: {}", report.sample_at_eps));
            Ok(out)
        }
    }
}

fn parse_schemes(flags: &[String]) -> Result<Vec<TagScheme>, CliError> {
    if flags.is_empty() {
        return Ok(vec![TagScheme::Left, TagScheme::Right, TagScheme::Midpoint]);
    }
    flags
        .iter()
        .map(|s| match s.trim() {
            "left" => Ok(TagScheme::Left),
            "right" => Ok(TagScheme::Right),
            "midpoint" => Ok(TagScheme::Midpoint),
            other => Err(CliError::Syntax {
                detail: format!("unknown tag scheme {other:?}: expected left|right|midpoint"),
            }),
        })
        .collect()
}

fn run_tagged(a: &TaggedArgs, fmt: Format) -> Out {
    let expr: Expr = parse_input("expression", &a.expr)?;
    let var = pick_var(&expr, &a.var)?;
    let from = parse_rat("endpoint", &a.from)?;
    let to = parse_rat("endpoint", &a.to)?;
    let cfg = eval_config(a.order)?;
    let schemes = parse_schemes(&a.schemes)?;
    let report = tagged_sum_check(&expr, &var, &from, &to, &schemes, &cfg)
        .map_err(|e| domain("CalcError", e))?;
    match fmt {
        Format::Structured => structured(&report),
        Format::Text => {
            let mut out = format!("value: {}", report.value);
            for row in &report.rows {
                out.push_str(&format!(
                    "\n{:<8} tau={} shadow={} match={}",
                    format!("{:?}", row.scheme).to_lowercase(),
                    row.tau,
                    row.shadow,
                    row.matches_baseline
                ));
            }
            out.push_str(&format!("\nall agree: {}", report.all_agree));
            Ok(out)
        }
    }
}

fn run_peano(a: &PeanoArgs, fmt: Format) -> Out {
    let expr: Expr = parse_input("expression", &a.expr)?;
    let x0 = parse_rat("x0", &a.x0)?;
    let y0 = parse_rat("y0", &a.y0)?;
    let h0 = parse_rat("h0", &a.h0)?;
    let x_max = parse_rat("x_max", &a.x_max)?;
    let cfg = eval_config(a.order)?;
    let grid: Vec<Rational> = if a.grid.is_empty() {
        vec![x_max.clone()]
    } else {
        a.grid.iter().map(|g| parse_rat("grid point", g)).collect::<Result<_, _>>()?
    };
    let study = peano_study(
        &expr, &a.x_var, &a.y_var, &x0, &y0, &h0, &x_max, a.levels, &grid, &cfg,
    )
    .map_err(|e| domain("CalcError", e))?;
    match fmt {
        Format::Structured => structured(&study),
        Format::Text => {
            let mut out = format!(
                "steps: {}",
                study
                    .step_sizes
                    .iter()
                    .map(|h| h.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            for row in &study.rows {
                out.push_str(&format!("\nat x={}:", row.point));
                out.push_str(&format!(
                    "\n  values: {}",
                    row.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                ));
                out.push_str(&format!(
                    "\n  diffs: {}",
                    row.diffs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
                ));
                out.push_str(&format!(
                    "\n  ratios: {}",
                    row.ratios
                        .iter()
                        .map(|r| r.as_ref().map_or("-".to_string(), |v| v.to_string()))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                out.push_str(&format!("\n  extrapolated: {}", row.extrapolated));
            }
            Ok(out)
        }
    }
}

fn run_measure(a: &MeasureArgs, fmt: Format) -> Out {
    if a.sigma {
        let eps = parse_rat("eps", &a.eps)?;
        let (family, tail) = match a.horizon {
            Some(count) => {
                if !a.sets.is_empty() {
                    return Err(CliError::Syntax {
                        detail: "--horizon materializes its own family; drop the positional sets"
                            .to_string(),
                    });
                }
                geometric_family(count)
            }
            None => {
                let family: Vec<IntervalUnion> = a
                    .sets
                    .iter()
                    .map(|s| parse_input("interval union", s))
                    .collect::<Result<_, _>>()?;
                let tail = parse_rat(
                    "tail bound",
                    a.tail.as_deref().ok_or_else(|| CliError::Syntax {
                        detail: "sigma mode needs --tail (or --horizon)".to_string(),
                    })?,
                )?;
                (family, tail)
            }
        };
        let report =
            sigma_subadd_check(&family, &tail, &eps).map_err(|e| domain("CalcError", e))?;
        return match fmt {
            Format::Structured => structured(&report),
            Format::Text => {
                let mut out = format!("h: {}\n", report.h);
                for row in &report.rows {
                    out.push_str(&format!(
                        "piece {}: length={} cover={} slack={} ok={}\n",
                        row.n, row.length, row.cover, row.slack, row.ok
                    ));
                }
                out.push_str(&format!(
                    "sum of lengths: {}\nsum of covers: {}\nmerged measure: {}\nclaim: {}\nverdict: {}",
                    report.sum_lengths,
                    report.sum_covers,
                    report.merged_measure,
                    report.claim,
                    report.verdict
                ));
                Ok(out)
            }
        };
    }
    if a.sets.is_empty() {
        return Err(CliError::Syntax {
            detail: "give at least one interval union like [0,1]+[2,5/2]".to_string(),
        });
    }
    let h = parse_rat("spacing", &a.h)?;
    let mut reports = Vec::new();
    for s in &a.sets {
        let set: IntervalUnion = parse_input("interval union", s)?;
        reports.push(lebesgue_measures(&set, &h).map_err(|e| domain("CalcError", e))?);
    }
    match fmt {
        Format::Structured => structured(&reports),
        Format::Text => {
            let mut blocks = Vec::new();
            for report in &reports {
                let mut out = format!(
                    "set: {}\nouter: {}\ninner: {}",
                    report.set, report.outer, report.inner
                );
                for row in &report.rows {
                    out.push_str(&format!(
                        "\n[{},{}]: length={} grid points={} count*h={} defect={}",
                        row.a, row.b, row.length, row.grid_points, row.count_times_h, row.defect
                    ));
                }
                out.push_str(&format!(
                    "\ncertified within 2h at h={}: {}",
                    report.sample_h, report.certified
                ));
                blocks.push(out);
            }
            Ok(blocks.join("\n\n"))
        }
    }
}

fn trace_lines(trace: &RewriteTrace) -> String {
    if trace.is_empty() {
        return "trace: (already in standard-block form)".to_string();
    }
    let mut out = "trace:".to_string();
    for (k, entry) in trace.iter().enumerate() {
        let path = entry
            .path
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(".");
        let at = if path.is_empty() { "root".to_string() } else { path };
        out.push_str(&format!("\n  {}. {} at {}", k + 1, entry.rule, at));
    }
    out
}

fn run_rewrite(a: &FormulaArg, fmt: Format) -> Out {
    let f = parse_formula(&a.formula).map_err(|e| CliError::Syntax { detail: e.to_string() })?;
    let (result, trace) = rewrite_to_delta_st(&f).map_err(|e| domain("FormulaError", e))?;
    replay(&trace).map_err(|e| domain("FormulaError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "input": f,
            "result": result,
            "result_text": result.to_string(),
            "trace": trace,
        })),
        Format::Text => Ok(format!("result: {result}\n{}", trace_lines(&trace))),
    }
}

fn run_classify(a: &FormulaArg, fmt: Format) -> Out {
    let f = parse_formula(&a.formula).map_err(|e| CliError::Syntax { detail: e.to_string() })?;
    let class = classify_delta_st(&f);
    match fmt {
        Format::Structured => structured(&class),
        Format::Text => Ok(match class {
            DeltaStClass::DeltaSt { prefix_len } => {
                format!("standard-block form; leading block of {prefix_len}")
            }
            DeltaStClass::NotDeltaSt { reason } => format!("not standard-block form: {reason}"),
        }),
    }
}

fn run_collapse(a: &FormulaArg, fmt: Format) -> Out {
    let f = parse_formula(&a.formula).map_err(|e| CliError::Syntax { detail: e.to_string() })?;
    let (result, trace) = rewrite_and_collapse(&f).map_err(|e| domain("FormulaError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "input": f,
            "result": result,
            "result_text": result.to_string(),
            "trace": trace,
        })),
        Format::Text => Ok(format!("result: {result}\n{}", trace_lines(&trace))),
    }
}

fn run_force(a: &ForceArgs, fmt: Format) -> Out {
    let c: Condition = parse_input("condition", &a.condition)?;
    let phi = parse_input("formula", &a.phi)?;
    if a.los {
        let holds = forces_los(&c, &phi, a.rank).map_err(|e| domain("ForcingError", e))?;
        return match fmt {
            Format::Structured => structured(&json!({
                "mode": "exact",
                "condition": c,
                "phi": a.phi,
                "rank": a.rank,
                "forces": holds,
            })),
            Format::Text => Ok(format!("forces: {holds}")),
        };
    }
    let caps = SpaceCaps::default();
    let space = enumerate_conditions(&caps);
    let verdict =
        forces_clausal(&c, &phi, &space, a.rank).map_err(|e| domain("ForcingError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "mode": "clausal",
            "condition": c,
            "phi": a.phi,
            "rank": a.rank,
            "verdict": verdict,
            "space_size": space.len(),
            "caps": caps.to_string(),
        })),
        Format::Text => Ok(format!(
            "verdict: {verdict}\nspace: {} conditions\ncaps: {caps}",
            space.len()
        )),
    }
}

fn run_decide(a: &DecideArgs, fmt: Format) -> Out {
    let c: Condition = parse_input("condition", &a.condition)?;
    let decided =
        decide_membership(&c, a.name, a.bound).map_err(|e| domain("ForcingError", e))?;
    let bits = standard_part_name(&decided, a.name, a.bound)
        .map_err(|e| domain("ForcingError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "name": a.name,
            "bound": a.bound,
            "condition": decided,
            "bits": bits,
        })),
        Format::Text => {
            let bit_text = bits
                .iter()
                .map(|b| if *b { '1' } else { '0' })
                .collect::<String>();
            Ok(format!("condition: {decided}\nbits: {bit_text}"))
        }
    }
}

fn thick_rows_text(rows: &[crate::forcing::ThicknessRow]) -> String {
    rows.iter()
        .map(|row| match &row.outcome {
            ThickOutcome::Nu(nu) => format!("m={} nu={nu}", row.m),
            ThickOutcome::Thin { witness } => {
                let w = witness.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                format!("m={} thin witness={{{w}}}", row.m)
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_thick(a: &ThickArgs, fmt: Format) -> Out {
    let families: Vec<FinFamily> = a
        .families
        .iter()
        .map(|s| parse_input("family rule", s))
        .collect::<Result<_, _>>()?;
    if a.diag {
        let report =
            diagonal_thick(&families, a.m_max).map_err(|e| domain("ForcingError", e))?;
        return match fmt {
            Format::Structured => structured(&report),
            Format::Text => {
                let mut out = format!("composite: {}", report.composite);
                for (m, idx, nu) in &report.guards {
                    out.push_str(&format!("\nguard m={m}: chain[{idx}] nu={nu}"));
                }
                out.push('\n');
                out.push_str(&thick_rows_text(&report.rows));
                for (n, k) in &report.diff_bounds {
                    out.push_str(&format!("\nescapes chain[{n}] beyond size {k}"));
                }
                Ok(out)
            }
        };
    }
    if families.len() != 1 {
        return Err(CliError::Syntax {
            detail: "tabulation takes exactly one --family; pass --diag for a chain".to_string(),
        });
    }
    let rows = thickness_nu(&families[0], a.m_max);
    match fmt {
        Format::Structured => structured(&rows),
        Format::Text => Ok(thick_rows_text(&rows)),
    }
}

fn run_generic(a: &GenericArgs, fmt: Format) -> Out {
    let start: Condition = parse_input("condition", &a.condition)?;
    let rules: Vec<DenseRule> = a
        .rules
        .iter()
        .map(|s| parse_input("dense rule", s))
        .collect::<Result<_, _>>()?;
    let chain = pseudo_generic(&start, &rules).map_err(|e| domain("ForcingError", e))?;
    match fmt {
        Format::Structured => structured(&json!({
            "rules": rules.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "chain": chain,
        })),
        Format::Text => {
            let mut out = format!("start: {start}");
            for (rule, cond) in rules.iter().zip(chain.iter().skip(1)) {
                out.push_str(&format!("\nafter {rule}: {cond}"));
            }
            Ok(out)
        }
    }
}

fn run_split(a: &SplitArgs, fmt: Format) -> Out {
    let fiber: crate::forcing::Fiber = parse_input("fiber", &a.fiber)?;
    let p: IndexSet = parse_input("index set", &a.p)?;
    let report = split_fibers(&fiber, &p).map_err(|e| domain("ForcingError", e))?;
    match fmt {
        Format::Structured => structured(&report),
        Format::Text => {
            let mut out = String::new();
            for stage in &report.stages {
                let s = stage.s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                out.push_str(&format!(
                    "stage {}: position {} index {} alpha {} selects {{{s}}}\n",
                    stage.stage, stage.n, stage.index, stage.alpha
                ));
            }
            out.push_str(&format!("p1: {}\np2: {}", report.p1, report.p2));
            Ok(out)
        }
    }
}

/// Batch evaluation helper shared by examples: evaluates `expr` at the given
/// rational points by substitution.
pub fn eval_at_points(
    expr: &Expr,
    var: &str,
    points: &[Rational],
    cfg: &EvalConfig,
) -> Result<Vec<Rational>, CliError> {
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let mut env = BTreeMap::new();
        env.insert(var.to_string(), point.clone());
        out.push(expr.eval_rational(&env, cfg).map_err(|e| domain("ExprError", e))?);
    }
    Ok(out)
}

// keep the multivariate checker reachable from the library surface even
// though no subcommand wraps it; the examples drive it directly
#[doc(hidden)]
pub fn _frechet_is_public() {
    let _ = frechet_check;
}
