//! Command-line front end: table ingestion, analysis orchestration, and
//! machine-readable reports.
//!
//! Exit codes: 0 success, 2 validation failure, 3 budget refusal, 4 internal
//! consistency abort (a proved statement failed at runtime), 64 usage.

use std::io::Read;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use iterq_core::algebra::{catalog, parse_cayley, structure_probe, CayleyTable, TupleCode};
use iterq_core::classes::{
    closure_checks, decompose, group_class_description, permutation_class_product_closure,
};
use iterq_core::counting::{
    compare, diagonals_direct, diagonals_from_matrix, existence_rule, near_transversals_direct,
    near_transversals_from_matrix, predict, transition_feasible, transversals_direct,
    transversals_from_matrix, CountKind, CountingBudgets,
};
use iterq_core::grouptools::{abelianization, denes_hermann_check, power_sets, PowerBudget};
use iterq_core::oracle::OracleBudget;
use iterq_core::transition::{build_transition, TransitionBudget};
use iterq_core::Error;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "iterq",
    version,
    about = "Exact transversal and diagonal counting in iterated quasigroups",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit JSON reports (the default).
    #[arg(long, global = true)]
    json: bool,

    /// Emit TSV tables for count, predict, and compare.
    #[arg(long, global = true)]
    tsv: bool,

    /// Memory budget in bytes for transition-matrix builds.
    #[arg(long, global = true, value_name = "BYTES")]
    budget_mem: Option<u64>,

    /// Wall-clock budget in seconds for oracle enumeration.
    #[arg(long, global = true, value_name = "SECONDS")]
    budget_time: Option<u64>,

    /// Permit order-7 transition builds (the byte budget still applies).
    #[arg(long, global = true)]
    allow_n7: bool,

    /// Seed for sampled checks and for `catalog "random(n)"` without an
    /// explicit seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for the parallel kernels; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a table file ('-' reads stdin).
    Validate { file: String },
    /// Structure probe, group invariants, and factorization sets.
    Analyze {
        file: String,
        /// Largest multiplicity for the factorization-set scan
        /// (default: twice the order, budget permitting).
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Equivalence classes, periods, units, and the structural checks.
    Classes { file: String },
    /// Exact counts over a depth range.
    Count {
        file: String,
        #[arg(long)]
        kind: KindArg,
        /// Seed tuple for --kind diagonal, as 1-based digits "1,2,3".
        #[arg(long)]
        u: Option<String>,
        /// Target tuple for --kind diagonal.
        #[arg(long)]
        v: Option<String>,
        /// Depth or inclusive range, "3" or "1..8".
        #[arg(long)]
        d: String,
    },
    /// Limit-formula predictions over a depth range.
    Predict {
        file: String,
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        d: String,
    },
    /// Exact counts against predictions, cross-checked by the naive oracle
    /// where it fits the budget.
    Compare {
        file: String,
        #[arg(long)]
        kind: KindArg,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        d: String,
    },
    /// Emit a built-in table in the canonical file format.
    ///
    /// Specs: example1, example2, cyclic(N), "random(N, SEED)",
    /// direct_product(S,S), block(S,S,S,S) with order-k parts (the second
    /// pair is shifted into the upper symbol set).
    Catalog { spec: String },
}

#[derive(Copy, Clone, ValueEnum)]
enum KindArg {
    Transversal,
    Near,
    Diagonal,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    schema: u32,
    tool: String,
    input_digest: String,
    command: String,
    payload: T,
}

fn tool_version() -> String {
    format!("iterq {}", env!("CARGO_PKG_VERSION"))
}

fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in hash {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Writes to stdout, treating a closed pipe as a normal early exit.
fn write_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let result = out.write_all(text.as_bytes()).and_then(|_| out.flush());
    if let Err(e) = result {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn emit_json<T: Serialize>(report: &Report<T>) {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    write_stdout(&text);
}

struct Budgets {
    transition: TransitionBudget,
    counting: CountingBudgets,
    power: PowerBudget,
}

impl Budgets {
    fn from_cli(cli: &Cli) -> Budgets {
        let mut transition = TransitionBudget::default();
        if cli.allow_n7 {
            transition = transition.allowing_order7();
        }
        if let Some(bytes) = cli.budget_mem {
            transition = transition.with_max_bytes(bytes);
        }
        let mut oracle = OracleBudget::default();
        if let Some(secs) = cli.budget_time {
            oracle.time_limit = Duration::from_secs(secs);
        }
        let counting = CountingBudgets {
            transition,
            oracle,
            ..CountingBudgets::default()
        };
        Budgets {
            transition,
            counting,
            power: PowerBudget::default(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are regular output, not usage
            // errors.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if cli.json && cli.tsv {
        eprintln!("error: --json and --tsv are mutually exclusive");
        return ExitCode::from(64);
    }
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = if err.is_budget() {
                3
            } else if err.is_internal() {
                4
            } else if err.is_validation() {
                2
            } else {
                1
            };
            ExitCode::from(code)
        }
    }
}

fn read_input(file: &str) -> Result<(Vec<u8>, String), Error> {
    let bytes = if file == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        buf
    } else {
        std::fs::read(file)?
    };
    let d = digest(&bytes);
    Ok((bytes, d))
}

/// Resolves a table argument: stdin for `-`, a file when one exists, and a
/// catalog spec otherwise, so `count example1 ...` works without a pipe.
/// The digest always covers the canonical table bytes being analyzed.
fn load_table(file: &str, seed: u64) -> Result<(CayleyTable, String), Error> {
    if file != "-" && !std::path::Path::new(file).exists() {
        if let Ok(table) = parse_catalog_spec(file, seed) {
            let digest = digest(table.to_canonical_string().as_bytes());
            return Ok((table, digest));
        }
    }
    let (bytes, d) = read_input(file)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::InvalidParameter("input is not UTF-8".into()))?;
    Ok((parse_cayley(&text)?, d))
}

fn parse_tuple(n: usize, text: &str) -> Result<TupleCode, Error> {
    let symbols: Result<Vec<usize>, _> = text
        .split(',')
        .map(|tok| tok.trim().parse::<usize>())
        .collect();
    let symbols =
        symbols.map_err(|_| Error::InvalidParameter(format!("bad tuple literal {text:?}")))?;
    if symbols.len() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: symbols.len(),
        });
    }
    TupleCode::from_symbols_1based(&symbols)
}

fn parse_depth_range(text: &str) -> Result<std::ops::RangeInclusive<u32>, Error> {
    let bad = || Error::InvalidParameter(format!("bad depth range {text:?}, expected A or A..B"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(lo..=hi)
    } else {
        let d: u32 = text.trim().parse().map_err(|_| bad())?;
        Ok(d..=d)
    }
}

fn resolve_kind(
    n: usize,
    kind: KindArg,
    u: &Option<String>,
    v: &Option<String>,
) -> Result<CountKind, Error> {
    match kind {
        KindArg::Transversal => Ok(CountKind::Transversal),
        KindArg::Near => Ok(CountKind::NearTransversal),
        KindArg::Diagonal => {
            let (u, v) = match (u, v) {
                (Some(u), Some(v)) => (u, v),
                _ => {
                    return Err(Error::InvalidParameter(
                        "--kind diagonal needs --u and --v".into(),
                    ))
                }
            };
            Ok(CountKind::Diagonal {
                u: parse_tuple(n, u)?,
                v: parse_tuple(n, v)?,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let budgets = Budgets::from_cli(cli);
    match &cli.command {
        Command::Validate { file } => cmd_validate(file, cli.seed),
        Command::Analyze { file, kmax } => cmd_analyze(file, *kmax, cli.seed, &budgets),
        Command::Classes { file } => cmd_classes(file, cli.seed, &budgets),
        Command::Count {
            file,
            kind,
            u,
            v,
            d,
        } => cmd_count(file, *kind, u, v, d, cli.tsv, cli.seed, &budgets),
        Command::Predict {
            file,
            kind,
            u,
            v,
            d,
        } => cmd_predict(file, *kind, u, v, d, cli.tsv, cli.seed, &budgets),
        Command::Compare {
            file,
            kind,
            u,
            v,
            d,
        } => cmd_compare(file, *kind, u, v, d, cli.tsv, cli.seed, &budgets),
        Command::Catalog { spec } => cmd_catalog(spec, cli.seed),
    }
}

#[derive(Serialize)]
struct ValidatePayload {
    order: usize,
    latin: bool,
}

fn cmd_validate(file: &str, seed: u64) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    emit_json(&Report {
        schema: SCHEMA_VERSION,
        tool: tool_version(),
        input_digest: dig,
        command: "validate".into(),
        payload: ValidatePayload {
            order: table.order(),
            latin: true,
        },
    });
    Ok(())
}

#[derive(Serialize)]
struct AnalyzePayload {
    order: usize,
    probe: iterq_core::algebra::StructureProbe,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<GroupPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_profile: Option<iterq_core::grouptools::PowerProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_profile_error: Option<String>,
}

#[derive(Serialize)]
struct GroupPayload {
    analysis: iterq_core::grouptools::GroupAnalysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    denes_hermann: Option<iterq_core::grouptools::DenesHermannReport>,
}

fn cmd_analyze(file: &str, kmax: Option<u32>, seed: u64, budgets: &Budgets) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    let probe = structure_probe(&table);

    let group = if probe.is_loop {
        let analysis = abelianization(&table)?;
        let denes_hermann = if analysis.is_group {
            Some(denes_hermann_check(&table, &analysis)?)
        } else {
            None
        };
        Some(GroupPayload {
            analysis,
            denes_hermann,
        })
    } else {
        None
    };

    let requested = kmax.unwrap_or_else(|| iterq_core::grouptools::default_k_max(table.order()));
    let (power_profile, power_profile_error) = match power_sets(&table, requested, &budgets.power) {
        Ok(p) => (Some(p), None),
        // An explicit --kmax that overruns the budget is a refusal; the
        // default scan degrades to an in-report note instead.
        Err(e) if e.is_budget() && kmax.is_none() => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    emit_json(&Report {
        schema: SCHEMA_VERSION,
        tool: tool_version(),
        input_digest: dig,
        command: "analyze".into(),
        payload: AnalyzePayload {
            order: table.order(),
            probe,
            group,
            power_profile,
            power_profile_error,
        },
    });
    Ok(())
}

#[derive(Serialize)]
struct ClassesPayload {
    decomposition: iterq_core::classes::DecompositionSummary,
    closure: iterq_core::classes::ClosureReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_classes: Option<iterq_core::classes::GroupClassReport>,
    u1_product_closure: iterq_core::classes::ProductClosureExperiment,
    existence: iterq_core::counting::ExistenceReport,
}

fn cmd_classes(file: &str, seed: u64, budgets: &Budgets) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    let t = build_transition(&table, &budgets.transition)?;
    let d = decompose(&t)?;
    let probe = structure_probe(&table);
    let analysis = if probe.is_loop {
        Some(abelianization(&table)?)
    } else {
        None
    };

    let closure = closure_checks(&d, &table, seed)?;
    let group_classes = match &analysis {
        Some(a) if a.is_group => Some(group_class_description(&d, &table, a)?),
        _ => None,
    };
    let u1 = permutation_class_product_closure(&d, &table, seed, 1 << 20);
    let existence = existence_rule(
        &table,
        &t,
        &d,
        analysis.as_ref(),
        (4 * table.order() as u32).max(8),
    )?;

    emit_json(&Report {
        schema: SCHEMA_VERSION,
        tool: tool_version(),
        input_digest: dig,
        command: "classes".into(),
        payload: ClassesPayload {
            decomposition: d.summary(&table, analysis.as_ref()),
            closure,
            group_classes,
            u1_product_closure: u1,
            existence,
        },
    });
    Ok(())
}

/// Echo of the query tuples for diagonal-kind reports: digits are the
/// human-readable form, codes the canonical integers.
#[derive(Serialize)]
struct TupleEcho {
    u: String,
    u_code: u64,
    v: String,
    v_code: u64,
}

impl TupleEcho {
    fn for_kind(kind: &CountKind) -> Option<TupleEcho> {
        match kind {
            CountKind::Diagonal { u, v } => Some(TupleEcho {
                u: u.to_display(),
                u_code: u.code(),
                v: v.to_display(),
                v_code: v.code(),
            }),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct CountPayload {
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples: Option<TupleEcho>,
    rows: Vec<CountRow>,
}

#[derive(Serialize)]
struct CountRow {
    kind: String,
    d: u32,
    exact: String,
}

fn cmd_count(
    file: &str,
    kind: KindArg,
    u: &Option<String>,
    v: &Option<String>,
    d: &str,
    tsv: bool,
    seed: u64,
    budgets: &Budgets,
) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    let n = table.order();
    let kind = resolve_kind(n, kind, u, v)?;
    let range = parse_depth_range(d)?;
    if *range.start() == 0 && !matches!(kind, CountKind::Diagonal { .. }) {
        return Err(Error::InvalidParameter("counting needs d >= 1".into()));
    }

    // Build the matrix once when the budget permits; otherwise use the
    // direct backend per depth.
    let matrix = if transition_feasible(n, &budgets.transition) {
        Some(build_transition(&table, &budgets.transition)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    for depth in range {
        let exact = match (&matrix, &kind) {
            (Some(t), CountKind::Transversal) => transversals_from_matrix(t, depth),
            (Some(t), CountKind::NearTransversal) => near_transversals_from_matrix(t, depth),
            (Some(t), CountKind::Diagonal { u, v }) => diagonals_from_matrix(t, u, v, depth),
            (None, CountKind::Transversal) => {
                transversals_direct(&table, depth, &budgets.counting.direct)?
            }
            (None, CountKind::NearTransversal) => {
                near_transversals_direct(&table, depth, &budgets.counting.direct)?
            }
            (None, CountKind::Diagonal { u, v }) => {
                diagonals_direct(&table, u, v, depth, &budgets.counting.direct)?
            }
        };
        rows.push(CountRow {
            kind: kind.label().into(),
            d: depth,
            exact: exact.to_string(),
        });
    }

    if tsv {
        let mut out = String::from("kind\td\texact\n");
        for row in &rows {
            out.push_str(&format!("{}\t{}\t{}\n", row.kind, row.d, row.exact));
        }
        write_stdout(&out);
    } else {
        emit_json(&Report {
            schema: SCHEMA_VERSION,
            tool: tool_version(),
            input_digest: dig,
            command: "count".into(),
            payload: CountPayload {
                tuples: TupleEcho::for_kind(&kind),
                rows,
            },
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictPayload {
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples: Option<TupleEcho>,
    rows: Vec<PredictRow>,
}

#[derive(Serialize)]
struct PredictRow {
    kind: String,
    d: u32,
    predicted_num: String,
    predicted_den: String,
    exists: bool,
    r: u32,
    tau: u32,
    class_id: u32,
}

fn cmd_predict(
    file: &str,
    kind: KindArg,
    u: &Option<String>,
    v: &Option<String>,
    d: &str,
    tsv: bool,
    seed: u64,
    budgets: &Budgets,
) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    let n = table.order();
    let kind = resolve_kind(n, kind, u, v)?;
    let range = parse_depth_range(d)?;
    let t = build_transition(&table, &budgets.transition)?;
    let decomp = decompose(&t)?;
    let probe = structure_probe(&table);
    let analysis = if probe.is_loop {
        Some(abelianization(&table)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for depth in range {
        let p = predict(&table, &kind, depth, &decomp, analysis.as_ref())?;
        rows.push(PredictRow {
            kind: kind.label().into(),
            d: depth,
            predicted_num: p.predicted.numer().to_string(),
            predicted_den: p.predicted.denom().to_string(),
            exists: p.exists,
            r: p.model.r,
            tau: p.model.tau,
            class_id: p.model.class_id,
        });
    }

    if tsv {
        let mut out =
            String::from("kind\td\tpredicted_num\tpredicted_den\texists\tr\ttau\tclass\n");
        for row in &rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                row.kind,
                row.d,
                row.predicted_num,
                row.predicted_den,
                row.exists,
                row.r,
                row.tau,
                row.class_id
            ));
        }
        write_stdout(&out);
    } else {
        emit_json(&Report {
            schema: SCHEMA_VERSION,
            tool: tool_version(),
            input_digest: dig,
            command: "predict".into(),
            payload: PredictPayload {
                tuples: TupleEcho::for_kind(&kind),
                rows,
            },
        });
    }
    Ok(())
}

fn cmd_compare(
    file: &str,
    kind: KindArg,
    u: &Option<String>,
    v: &Option<String>,
    d: &str,
    tsv: bool,
    seed: u64,
    budgets: &Budgets,
) -> Result<(), Error> {
    let (table, dig) = load_table(file, seed)?;
    let n = table.order();
    let kind = resolve_kind(n, kind, u, v)?;
    let range = parse_depth_range(d)?;
    let t = build_transition(&table, &budgets.transition)?;
    let decomp = decompose(&t)?;
    let probe = structure_probe(&table);
    let analysis = if probe.is_loop {
        Some(abelianization(&table)?)
    } else {
        None
    };

    let result = compare(
        &table,
        &t,
        &decomp,
        analysis.as_ref(),
        &kind,
        range,
        &budgets.counting,
    )?;

    if tsv {
        let mut out = String::from(
            "kind\td\texact\tpredicted_num\tpredicted_den\tdeviation_num\tdeviation_den\texists\toracle\n",
        );
        for r in &result.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.kind,
                r.d,
                r.exact,
                r.predicted_num,
                r.predicted_den,
                r.deviation_num.as_deref().unwrap_or("-"),
                r.deviation_den.as_deref().unwrap_or("-"),
                r.exists_predicted,
                r.oracle.as_deref().unwrap_or("-"),
            ));
        }
        write_stdout(&out);
    } else {
        #[derive(Serialize)]
        struct ComparePayload {
            #[serde(skip_serializing_if = "Option::is_none")]
            tuples: Option<TupleEcho>,
            rows: Vec<iterq_core::counting::CountReport>,
            summary: iterq_core::counting::CompareSummary,
        }
        emit_json(&Report {
            schema: SCHEMA_VERSION,
            tool: tool_version(),
            input_digest: dig,
            command: "compare".into(),
            payload: ComparePayload {
                tuples: TupleEcho::for_kind(&kind),
                rows: result.rows,
                summary: result.summary,
            },
        });
    }
    Ok(())
}

fn cmd_catalog(spec: &str, seed: u64) -> Result<(), Error> {
    let table = parse_catalog_spec(spec, seed)?;
    write_stdout(&table.to_canonical_string());
    Ok(())
}

/// Parses catalog specs like `cyclic(4)`, `random(5,42)`, or
/// `direct_product(cyclic(2),cyclic(4))`.
fn parse_catalog_spec(spec: &str, default_seed: u64) -> Result<CayleyTable, Error> {
    let spec = spec.trim();
    let bad = |msg: &str| Error::InvalidParameter(format!("catalog spec {spec:?}: {msg}"));

    let (name, args) = match spec.find('(') {
        None => (spec, Vec::new()),
        Some(open) => {
            if !spec.ends_with(')') {
                return Err(bad("missing closing parenthesis"));
            }
            let inner = &spec[open + 1..spec.len() - 1];
            // Split on top-level commas only.
            let mut args = Vec::new();
            let mut depth = 0usize;
            let mut start = 0usize;
            for (i, ch) in inner.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth = depth.saturating_sub(1),
                    ',' if depth == 0 => {
                        args.push(inner[start..i].trim());
                        start = i + 1;
                    }
                    _ => {}
                }
            }
            if !inner.trim().is_empty() {
                args.push(inner[start..].trim());
            }
            (&spec[..open], args)
        }
    };

    match (name, args.len()) {
        ("example1", 0) => Ok(catalog::example1()),
        ("example2", 0) => Ok(catalog::example2()),
        ("cyclic", 1) => {
            let n: usize = args[0].parse().map_err(|_| bad("cyclic needs an order"))?;
            if n == 0 || n > 255 {
                return Err(bad("order must be in 1..=255"));
            }
            Ok(catalog::cyclic(n))
        }
        ("random", 1) | ("random", 2) => {
            let n: usize = args[0].parse().map_err(|_| bad("random needs an order"))?;
            let s: u64 = if args.len() == 2 {
                args[1].parse().map_err(|_| bad("bad seed"))?
            } else {
                default_seed
            };
            catalog::random(n, s)
        }
        ("direct_product", 2) => {
            let g = parse_catalog_spec(args[0], default_seed)?;
            let h = parse_catalog_spec(args[1], default_seed)?;
            Ok(catalog::direct_product(&g, &h))
        }
        ("block", 4) => {
            let parts: Vec<CayleyTable> = args
                .iter()
                .map(|a| parse_catalog_spec(a, default_seed))
                .collect::<Result<_, _>>()?;
            catalog::block_from_tables(&parts[0], &parts[1], &parts[2], &parts[3])
        }
        _ => Err(bad(
            "expected example1, example2, cyclic(n), random(n[,seed]), \
             direct_product(a,b), or block(a,b,c,d)",
        )),
    }
}
