use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use twosided::experiments::{
    figure_grid, grid, run_existence_census_with, run_sweep, CensusConfig, CensusProperty, SweepAlgorithm,
    SweepConfig, DEFAULT_PCTS, DEFAULT_TRIALS,
};
use twosided::fairness::{fairness_report, ReportOptions, ShareOptions};
use twosided::generate::{generate_instance, InstanceGenConfig};
use twosided::instance::derive_side_ordinal;
use twosided::io::{parse_instance, parse_matching, serialize_instance, serialize_matching};
use twosided::matchers::{
    classic_round_robin, d2_dmms_def1_for, from_rank_space, general_sd_def1, restricted_rr, restricted_rr_coprime,
    three_phase_rr, weak_mms_matching,
};
use twosided::paperbench::{verify_claim, ClaimId, Verdict, VerificationResult, VerifyOptions};
use twosided::search::{find_matching_with, SearchOptions, SearchSpec, SearchStatus};
use twosided::{Instance, Matching, Side};

const EXIT_REFUTED: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "twosided", version, about = "Fair many-to-many matchings between two sides of a market")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a seeded random market.
    Generate(GenerateArgs),
    /// Run a constructive matcher on a market.
    Solve(SolveArgs),
    /// Audit a matching: EF1 and SD-EF1 on both sides, optionally MMS shares.
    Check(CheckArgs),
    /// Exact search for a matching meeting envy and utility constraints.
    Search(SearchArgs),
    /// Re-run a named existence or impossibility check.
    Verify(VerifyArgs),
    /// Non-EF1 counts of the round-robin matchers over random markets (CSV).
    Sweep(SweepArgs),
    /// Fraction of small random markets admitting each fairness notion.
    Census(CensusArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n_left: Option<usize>,
    #[arg(long)]
    n_right: Option<usize>,
    #[arg(long)]
    d_left: Option<usize>,
    #[arg(long)]
    d_right: Option<usize>,
    /// Percentage of left agents sharing one valuation row.
    #[arg(long, default_value_t = 100)]
    pct_left: u32,
    #[arg(long, default_value_t = 100)]
    pct_right: u32,
    #[arg(long, default_value_t = 20)]
    value_max: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    RrCoprime,
    Rr,
    General,
    Crr,
    ThreePhase,
    D2Dmms,
    Wmms,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    alg: Alg,
    /// Start of the picking order (rr-coprime).
    #[arg(long, default_value_t = 0)]
    a: usize,
    /// Step of the picking order, d or n - d (rr-coprime; defaults to d).
    #[arg(long)]
    x: Option<usize>,
    /// Per-block (a, x) choices for rr, as `a:x,a:x,...`.
    #[arg(long)]
    blocks: Option<String>,
    /// Picking side for crr.
    #[arg(long, default_value = "left")]
    picker: Side,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CheckArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, short)]
    matching: PathBuf,
    /// Also compute maximin shares and the DMMS ratio.
    #[arg(long)]
    mms: bool,
}

#[derive(clap::Args)]
struct SearchArgs {
    #[arg(long, short)]
    instance: PathBuf,
    /// Constraints as a JSON search spec; flags below are added to it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Utility floor `side:agent:min`, or `side:min` for a whole side.
    #[arg(long)]
    floor: Vec<String>,
    /// SD-EF-c constraint `side:c`.
    #[arg(long)]
    sd_ef: Vec<String>,
    /// Cardinal EF-c constraint `side:c`.
    #[arg(long)]
    ef: Vec<String>,
    /// Accept matchings that are not complete.
    #[arg(long)]
    incomplete: bool,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Claim name (THM1, THM4, THM6, THM7, THM8, APPC_RATIO, APPD_P1..3,
    /// THM9_PROPERTY) or `all`.
    #[arg(long)]
    claim: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the JSON results here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Use the three figure panels as the grid.
    #[arg(long)]
    figure: bool,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pct: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "restricted_rr,classic_rr")]
    algorithms: Vec<SweepAlgorithm>,
    /// Also run restricted_rr on cells where n and d share a factor.
    #[arg(long)]
    all_cells: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CensusArgs {
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 7)]
    n_max: usize,
    #[arg(long, default_value_t = 1)]
    d_min: usize,
    #[arg(long, default_value_t = 6)]
    d_max: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let n_left = args.n_left.or(args.n).context("--n or --n-left is required")?;
    let n_right = args.n_right.or(args.n).unwrap_or(n_left);
    let deg_left = args.d_left.or(args.d).context("--d or --d-left is required")?;
    let deg_right = args.d_right.or(args.d).unwrap_or(deg_left);
    let cfg = InstanceGenConfig {
        n_left,
        n_right,
        deg_left,
        deg_right,
        pct_identical_left: args.pct_left,
        pct_identical_right: args.pct_right,
        value_max: args.value_max,
        rng_seed: args.seed,
    };
    let inst = generate_instance(&cfg)?;
    emit(args.out.as_deref(), &serialize_instance(&inst))?;
    Ok(ExitCode::SUCCESS)
}

/// Common rankings (left agents' ranking of the right side, and the right
/// agents' ranking of the left side) of a square market with one cap.
fn common_rankings(inst: &Instance) -> Result<(usize, usize, Vec<usize>, Vec<usize>)> {
    let n = inst.n_left();
    let d = inst.uniform_cap(Side::Left);
    if inst.n_right() != n || d.is_none() || d != inst.uniform_cap(Side::Right) {
        bail!("this algorithm needs an n x n market with one cap on both sides");
    }
    let left = derive_side_ordinal(inst, Side::Left);
    let right = derive_side_ordinal(inst, Side::Right);
    if !left.is_identical() || !right.is_identical() {
        bail!("this algorithm needs identical ordinal preferences within each side");
    }
    Ok((n, d.unwrap(), left.rankings[0].clone(), right.rankings[0].clone()))
}

fn parse_blocks(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|pair| {
            let (a, x) = pair.split_once(':').context("blocks are written a:x")?;
            Ok((a.trim().parse()?, x.trim().parse()?))
        })
        .collect()
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let inst = load_instance(&args.instance)?;
    let m: Matching = match args.alg {
        Alg::RrCoprime | Alg::Rr => {
            let (n, d, left_common, right_common) = common_rankings(&inst)?;
            let rank_m = if let Alg::RrCoprime = args.alg {
                restricted_rr_coprime(n, d, args.a, args.x.unwrap_or(d))?
            } else {
                let blocks = args.blocks.as_deref().map(parse_blocks).transpose()?;
                restricted_rr(n, d, blocks.as_deref())?
            };
            from_rank_space(&rank_m, &right_common, &left_common)
        }
        Alg::General => general_sd_def1(&inst)?,
        Alg::Crr => {
            let order: Vec<usize> = (0..inst.size(args.picker)).collect();
            classic_round_robin(&inst, args.picker, &order)?
        }
        Alg::ThreePhase => three_phase_rr(&inst)?,
        Alg::D2Dmms => d2_dmms_def1_for(&inst)?,
        Alg::Wmms => weak_mms_matching(&inst, &ShareOptions::default())?,
    };
    emit(args.out.as_deref(), &serialize_matching(&m))?;
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> Result<ExitCode> {
    let inst = load_instance(&args.instance)?;
    let m = parse_matching(&read(&args.matching)?, inst.n_left(), inst.n_right())?;
    let opts = ReportOptions {
        compute_mms: args.mms,
        ..Default::default()
    };
    let report = fairness_report(&inst, &m, &opts)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn side_and_rest(text: &str) -> Result<(Side, Vec<u64>)> {
    let mut parts = text.split(':');
    let side: Side = parts.next().unwrap_or_default().parse()?;
    let rest = parts.map(|p| p.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>()?;
    Ok((side, rest))
}

fn search(args: SearchArgs) -> Result<ExitCode> {
    let inst = load_instance(&args.instance)?;
    let mut spec = match &args.spec {
        Some(p) => serde_json::from_str::<SearchSpec>(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SearchSpec::complete(),
    };
    if args.incomplete {
        spec.require_complete = false;
    }
    for f in &args.floor {
        spec = match side_and_rest(f)? {
            (side, v) if v.len() == 1 => spec.with_side_floor(&inst, side, v[0]),
            (side, v) if v.len() == 2 => spec.with_floor(side, v[0] as usize, v[1]),
            _ => bail!("--floor takes side:min or side:agent:min, got {f:?}"),
        };
    }
    for (list, sd) in [(&args.sd_ef, true), (&args.ef, false)] {
        for k in list {
            let (side, v) = side_and_rest(k)?;
            let [c] = v[..] else {
                bail!("envy constraints take side:c, got {k:?}");
            };
            spec = if sd { spec.with_sd_ef(side, c as usize) } else { spec.with_ef(side, c as usize) };
        }
    }
    if let Some(n) = args.budget_nodes {
        spec.node_budget = n;
    }
    if let Some(s) = args.budget_secs {
        spec.time_budget = s;
    }
    let opts = SearchOptions {
        workers: args.workers.max(1),
        ..Default::default()
    };
    let outcome = find_matching_with(&inst, &spec, &opts)?;
    println!("{}", serde_json::to_string_pretty(&outcome.to_json())?);
    Ok(match outcome.status {
        SearchStatus::BudgetExceeded => ExitCode::from(EXIT_BUDGET),
        _ => ExitCode::SUCCESS,
    })
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let claims = if args.claim.eq_ignore_ascii_case("all") {
        ClaimId::suite()
    } else {
        vec![ClaimId::from_parts(&args.claim, args.d, args.n, args.c)?]
    };
    let opts = VerifyOptions {
        node_budget: args.budget_nodes,
        time_budget: args.budget_secs,
        workers: args.workers.max(1),
    };
    let mut results: Vec<VerificationResult> = Vec::new();
    for id in claims {
        let r = verify_claim(id, &opts)?;
        eprintln!("{:<16} {:?} ({:.2}s)", r.claim.to_string(), r.verdict, r.wall_time);
        results.push(r);
    }
    let text = serde_json::to_string_pretty(&results)?;
    emit(args.out.as_deref(), &text)?;
    println!("{:<16} {:<16} {:>10}", "claim", "verdict", "seconds");
    for r in &results {
        println!("{:<16} {:<16} {:>10.2}", r.claim.to_string(), format!("{:?}", r.verdict), r.wall_time);
    }
    let code = if results.iter().any(|r| r.verdict == Verdict::Refuted) {
        EXIT_REFUTED
    } else if results.iter().any(|r| r.verdict == Verdict::BudgetExceeded) {
        EXIT_BUDGET
    } else {
        0
    };
    Ok(ExitCode::from(code))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let pcts = if args.pct.is_empty() { DEFAULT_PCTS.to_vec() } else { args.pct };
    let cells = if args.figure {
        figure_grid(&pcts)
    } else {
        if args.n.is_empty() || args.d.is_empty() {
            bail!("give --n and --d lists, or --figure");
        }
        grid(&args.n, &args.d, &pcts)
    };
    let mut cfg = SweepConfig::new(cells, args.trials, args.seed);
    cfg.algorithms = args.algorithms;
    cfg.coprime_only = !args.all_cells;
    cfg.output = args.out;
    let result = run_sweep(&cfg)?;
    match &cfg.output {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
            result.write_csv(f)?;
        }
        None => print!("{}", result.to_csv()?),
    }
    eprintln!("{:>4} {:>4} {:>4} {:<14} {:>8} {:>4} {:>6}", "n", "d", "pct", "algorithm", "mean", "max", "errors");
    for s in result.summaries() {
        eprintln!(
            "{:>4} {:>4} {:>4} {:<14} {:>8.3} {:>4} {:>6}",
            s.cell.n, s.cell.d, s.cell.pct, s.algorithm.name(), s.mean, s.max, s.errors
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn census(args: CensusArgs) -> Result<ExitCode> {
    let mut cfg = CensusConfig::new(args.n_min..=args.n_max, args.d_min..=args.d_max, args.trials, args.seed);
    if let Some(n) = args.budget_nodes {
        cfg.node_budget = n;
    }
    if let Some(s) = args.budget_secs {
        cfg.time_budget = s;
    }
    let cells = run_existence_census_with(&cfg)?;
    let rows: Vec<_> = cells
        .iter()
        .map(|c| {
            let mut row = serde_json::to_value(c).expect("plain data");
            let fractions: serde_json::Map<_, _> = CensusProperty::ALL
                .iter()
                .map(|&p| (p.name().to_string(), json!(c.fraction(p))))
                .collect();
            row["fractions"] = serde_json::Value::Object(fractions);
            row
        })
        .collect();
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&rows)?)?;
    eprint!("{:>3} {:>3}", "n", "d");
    for p in CensusProperty::ALL {
        eprint!(" {:>9}", p.name());
    }
    eprintln!(" {:>9}", "undecided");
    for c in &cells {
        eprint!("{:>3} {:>3}", c.n, c.d);
        for p in CensusProperty::ALL {
            eprint!(" {:>9.3}", c.fraction(p));
        }
        eprintln!(" {:>9}", c.undecided());
    }
    let undecided = cells.iter().any(|c| c.undecided() > 0 || !c.errors.is_empty());
    Ok(if undecided { ExitCode::from(EXIT_BUDGET) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Check(a) => check(a),
        Command::Search(a) => search(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
        Command::Census(a) => census(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
