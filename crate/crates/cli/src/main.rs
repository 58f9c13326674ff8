//! `optdes`: search, evaluate and benchmark exact second-order response-surface designs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use optdes::bench::{self, summarize, ReferenceCatalog, Scenario};
use optdes::criteria::{relative_efficiency, MomentMatrix};
use optdes::io::{
    format_sig6, read_catalog, read_design_csv, read_scenarios, records_to_jsonl, summaries_to_csv,
    write_atomic, RunRecord,
};
use optdes::model::num_params;
use optdes::pso::{self, PsoConfig};
use optdes::{Criterion, CriterionKind, CriterionValue, SecondOrderModel, Topology};

const MAX_MOMENT_FACTORS: usize = 6;

#[derive(Parser)]
#[command(
    name = "optdes",
    version,
    about = "Exact D- and I-optimal response-surface designs by particle swarm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for one optimal design.
    Run(RunArgs),
    /// Score a design read from CSV.
    Eval(EvalArgs),
    /// Print the moment matrix of the second-order model.
    Moment(MomentArgs),
    /// Run replicated searches over a grid of scenarios.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "D")]
    D,
    #[value(name = "I")]
    I,
}

impl From<Kind> for CriterionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::D => CriterionKind::D,
            Kind::I => CriterionKind::I,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    #[value(name = "D")]
    D,
    #[value(name = "I")]
    I,
    #[value(name = "both")]
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Global,
    Local,
}

impl From<Variant> for Topology {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Global => Topology::Global,
            Variant::Local => Topology::local(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, ignore_case = true)]
    criterion: Kind,
    #[arg(long)]
    factors: usize,
    #[arg(long)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    swarm_size: usize,
    #[arg(long, value_enum, default_value_t = Variant::Local)]
    topology: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Iterations over which the net improvement is compared with the tolerance.
    #[arg(long)]
    tol_window: Option<usize>,
    /// Write the run record as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    factors: usize,
    #[arg(long, ignore_case = true, default_value = "both")]
    criterion: EvalKind,
    /// Reference criterion value for relative efficiency.
    #[arg(long)]
    reference: Option<f64>,
    /// Reference catalog JSON keyed "K-N-criterion".
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long)]
    factors: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// The 21 (K, N) scenarios K=1 N=3..9, K=2 N=6..12, K=3 N=10..16.
    #[arg(
        long,
        conflicts_with = "scenarios",
        required_unless_present = "scenarios"
    )]
    paper_grid: bool,
    /// JSON array of {"factors": K, "points": N}.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Replicates per scenario [default: 20, or 140 with --paper-scale].
    #[arg(long)]
    replicates: Option<usize>,
    /// Swarm sizes [default: 50,150, or 50,150,500 with --paper-scale].
    #[arg(long, value_delimiter = ',')]
    swarm_sizes: Option<Vec<usize>>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "global,local"
    )]
    variants: Vec<Variant>,
    #[arg(long, ignore_case = true, value_delimiter = ',', default_value = "D,I")]
    criteria: Vec<Kind>,
    #[arg(long, env = "OPTDES_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    root_seed: u64,
    /// 140 replicates and swarm sizes 50,150,500 unless given explicitly.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol_window: Option<usize>,
    #[arg(long, default_value = "results.jsonl")]
    results: PathBuf,
    #[arg(long, default_value = "summary.csv")]
    summary: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Moment(a) => cmd_moment(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(singular) => ExitCode::from(if singular { 2 } else { 0 }),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn check_output_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure!(
            dir.is_dir(),
            "output directory {} does not exist",
            dir.display()
        );
    }
    Ok(())
}

fn engine_config(max_iter: Option<usize>, tol_window: Option<usize>) -> PsoConfig {
    let mut c = PsoConfig::default();
    if let Some(m) = max_iter {
        c.max_iterations = m;
    }
    if let Some(w) = tol_window {
        c.tol_window = w;
    }
    c
}

fn print_design(rows: &[Vec<f64>]) {
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| format!("{:>10}", format_sig6(*v)))
            .collect();
        println!("  {}", cells.join(" "));
    }
}

/// Returns whether the best design is singular.
fn cmd_run(a: RunArgs) -> Result<bool> {
    ensure!(a.factors >= 1, "--factors must be at least 1");
    ensure!(a.points >= 1, "--points must be at least 1");
    let criterion = Criterion::new(a.criterion.into(), a.factors)?;
    let scenario = Scenario {
        factors: a.factors,
        points: a.points,
        criterion: a.criterion.into(),
        swarm_size: a.swarm_size,
        variant: a.topology.into(),
        replicates: 1,
        root_seed: a.seed,
    };
    let config = PsoConfig {
        swarm_size: a.swarm_size,
        topology: a.topology.into(),
        seed: a.seed,
        ..engine_config(a.max_iter, a.tol_window)
    };
    config.validate(a.points * a.factors)?;
    if let Some(out) = &a.out {
        check_output_dir(out)?;
    }

    let result = pso::run(|d| criterion.evaluate(d), a.points, a.factors, &config)?;
    let record = RunRecord::new(&scenario, 0, &result);
    if let Some(out) = &a.out {
        let mut json = serde_json::to_string_pretty(&record)?;
        json.push('\n');
        write_atomic(out, json.as_bytes()).with_context(|| format!("writing {}", out.display()))?;
    }

    let kind = criterion.kind();
    println!("{kind}-score: {}", record.best_value);
    println!(
        "stop: {} after {} iterations, {} evaluations",
        result.stop_reason.as_str(),
        result.iterations,
        result.function_evaluations
    );
    println!("design ({} x {}):", a.points, a.factors);
    print_design(&record.best_design);
    if record.singular {
        eprintln!("best design is singular");
    }
    Ok(record.singular)
}

fn cmd_eval(a: EvalArgs) -> Result<bool> {
    ensure!(a.factors >= 1, "--factors must be at least 1");
    let kinds = match a.criterion {
        EvalKind::D => vec![CriterionKind::D],
        EvalKind::I => vec![CriterionKind::I],
        EvalKind::Both => vec![CriterionKind::D, CriterionKind::I],
    };
    if let Some(r) = a.reference {
        ensure!(
            r > 0.0 && r.is_finite(),
            "--reference must be positive and finite"
        );
        ensure!(kinds.len() == 1, "--reference needs --criterion D or I");
    }
    let catalog = a.catalog.as_deref().map(read_catalog).transpose()?;
    let design = read_design_csv(&a.design, a.factors)?;
    let p = num_params(a.factors)?;

    let mut singular = false;
    for kind in kinds {
        let value = Criterion::new(kind, a.factors)?.evaluate(&design);
        if value.is_singular() {
            singular = true;
            println!("{kind} = singular");
            continue;
        }
        println!("{kind} = {}", format_sig6(value.value()));
        let reference = a.reference.or_else(|| {
            catalog
                .as_ref()
                .and_then(|c| c.get(a.factors, design.points(), kind))
                .map(|e| e.value)
        });
        if let Some(r) = reference {
            let eff = relative_efficiency(kind, value, CriterionValue::finite(kind, r), p)?;
            println!(
                "{kind} efficiency = {} (reference {})",
                format_sig6(eff),
                format_sig6(r)
            );
        }
    }
    Ok(singular)
}

fn cmd_moment(a: MomentArgs) -> Result<bool> {
    ensure!(
        (1..=MAX_MOMENT_FACTORS).contains(&a.factors),
        "--factors must be between 1 and {MAX_MOMENT_FACTORS}"
    );
    let model = SecondOrderModel::new(a.factors)?;
    let w = MomentMatrix::new(&model);
    let labels: Vec<String> = model.terms().iter().map(|t| t.label()).collect();
    let p = labels.len();
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| w.matrix()[(i, j)]).collect())
        .collect();
    if a.json {
        let doc = serde_json::json!({
            "factors": a.factors,
            "volume": w.volume(),
            "terms": labels,
            "matrix": rows,
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(false);
    }
    println!("V = {}", format_sig6(w.volume()));
    let width = labels.iter().map(String::len).max().unwrap_or(1).max(9);
    print!("{:width$}", "");
    for l in &labels {
        print!(" {l:>width$}");
    }
    println!();
    for (l, row) in labels.iter().zip(&rows) {
        print!("{l:>width$}");
        for v in row {
            print!(" {:>width$}", format_sig6(*v));
        }
        println!();
    }
    Ok(false)
}

fn cmd_bench(a: BenchArgs) -> Result<bool> {
    let replicates = a.replicates.unwrap_or(if a.paper_scale {
        bench::PAPER_REPLICATES
    } else {
        bench::DESK_REPLICATES
    });
    ensure!(replicates >= 1, "--replicates must be at least 1");
    let swarm_sizes = a.swarm_sizes.clone().unwrap_or_else(|| {
        if a.paper_scale {
            bench::PAPER_SWARM_SIZES.to_vec()
        } else {
            bench::DESK_SWARM_SIZES.to_vec()
        }
    });
    ensure!(!swarm_sizes.is_empty(), "--swarm-sizes is empty");
    ensure!(
        swarm_sizes.iter().all(|&s| s >= 1),
        "swarm sizes must be at least 1"
    );
    let workers = match a.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let sizes: Vec<(usize, usize)> = match &a.scenarios {
        Some(path) => read_scenarios(path)?
            .iter()
            .map(|s| (s.factors, s.points))
            .collect(),
        None => bench::paper_grid(),
    };
    let catalog = match &a.catalog {
        Some(path) => read_catalog(path)?,
        None => ReferenceCatalog::default(),
    };
    check_output_dir(&a.results)?;
    check_output_dir(&a.summary)?;
    let base = engine_config(a.max_iter, a.tol_window);

    let mut scenarios = Vec::new();
    for &(factors, points) in &sizes {
        for &kind in &a.criteria {
            for &swarm_size in &swarm_sizes {
                for &variant in &a.variants {
                    let s = Scenario {
                        factors,
                        points,
                        criterion: kind.into(),
                        swarm_size,
                        variant: variant.into(),
                        replicates,
                        root_seed: a.root_seed,
                    };
                    s.validate()?;
                    s.config(0, &base).validate(points * factors)?;
                    scenarios.push(s);
                }
            }
        }
    }

    let results = bench::run_batch(&scenarios, &base, workers)?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (scenario, runs) in scenarios.iter().zip(&results) {
        records.extend(
            runs.iter()
                .enumerate()
                .map(|(i, r)| RunRecord::new(scenario, i, r)),
        );
        let s = summarize(runs, scenario, &catalog)?;
        println!(
            "{:<22} best {:>12}  median {:>12}  success {:>6}  eff95 {:>6}  ref {:<10}  median evals {}",
            scenario.fingerprint(),
            format_sig6(s.best_value),
            format_sig6(s.median_value),
            format_sig6(s.success_probability),
            format_sig6(s.prop_highly_efficient),
            s.reference_source.as_str(),
            format_sig6(s.median_function_evaluations),
        );
        summaries.push(s);
    }
    write_atomic(&a.results, records_to_jsonl(&records)?.as_bytes())
        .with_context(|| format!("writing {}", a.results.display()))?;
    write_atomic(&a.summary, summaries_to_csv(&summaries).as_bytes())
        .with_context(|| format!("writing {}", a.summary.display()))?;
    eprintln!(
        "{} runs in {} scenarios; results {}, summary {}",
        records.len(),
        scenarios.len(),
        a.results.display(),
        a.summary.display()
    );
    Ok(false)
}
