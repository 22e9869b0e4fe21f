use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use critgraph::bounds::{
    easy_bound_c1, easy_bound_cv, thm1_bounds, thm2_bound, thm5_bounds, BoundReport,
};
use critgraph::harness::{
    default_suite, run_experiment, write_results, ExperimentKind, ExperimentSpec, OutputFormat,
    ProbSpec, VerdictReport,
};
use critgraph::oracle::{enumerate_exact, parse_probability, ExactDistribution, MAX_ENUMERATION_N};
use critgraph::params::{ceil_cube_root, floor_two_thirds, GraphParams};
use critgraph::{sweep_streaming, RngStream, SweepSummary};

#[derive(Parser, Debug)]
#[command(
    name = "critgraph",
    version,
    about = "Simulate and bound components of critical random graphs"
)]
struct Cli {
    /// Master seed; trial i runs on stream (seed, i).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CRITGRAPH_THREADS")]
    threads: Option<usize>,
    /// Write machine-readable results here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of the file written by --out.
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full sweeps: |C1|, |C2| and a log2 histogram of component sizes.
    Sweep(SweepArgs),
    /// Tail probability experiments with bound verdicts.
    Tail(TailArgs),
    /// Walk diagnostics: hitting time, capped walk, overshoot, two-stage run.
    Walk(WalkArgs),
    /// Evaluate bounds over a grid, as CSV.
    Bounds(BoundsArgs),
    /// Run the default verification suite.
    Verify(VerifyArgs),
    /// Exact distributions by enumeration, optionally checked against simulation.
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone)]
struct ProbArgs {
    /// Vertex count.
    #[arg(long)]
    n: u64,
    /// Edge probability: `critical` (1/n) or a number.
    #[arg(long, default_value = "critical", conflicts_with = "lambda")]
    p: String,
    /// Use p = 1/n + lambda n^(-4/3).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
}

impl ProbArgs {
    fn spec(&self) -> Result<ProbSpec, String> {
        if let Some(l) = self.lambda {
            return Ok(ProbSpec::Lambda(l));
        }
        match self.p.as_str() {
            "critical" => Ok(ProbSpec::Critical),
            s => s
                .parse::<f64>()
                .map(ProbSpec::Value)
                .map_err(|_| format!("--p expects `critical` or a number, got `{s}`")),
        }
    }

    fn resolve(&self) -> Result<GraphParams, String> {
        self.spec()?.resolve(self.n).map_err(|e| e.to_string())
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long, default_value_t = 1)]
    trials: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TailKind {
    /// P(|C1| > A n^{2/3})
    C1,
    /// P(|C(v)| > A n^{2/3})
    Cv,
    /// P(|C1| < delta n^{2/3})
    Lower,
}

#[derive(Args, Debug)]
struct TailArgs {
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long, value_enum, default_value_t = TailKind::C1)]
    kind: TailKind,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = critgraph::harness::DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WalkMode {
    /// Hitting-time inequalities and stopped-martingale identities.
    Identity,
    /// Overshoot versus Bin(n, p).
    Overshoot,
    /// Two-stage ascent and survival.
    TwoStage,
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[command(flatten)]
    prob: ProbArgs,
    #[arg(long, value_enum, default_value_t = WalkMode::Identity)]
    mode: WalkMode,
    /// Barrier H; defaults to ceil(n^(1/3)).
    #[arg(long = "H")]
    h: Option<u64>,
    /// delta for the two-stage run.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = critgraph::harness::DEFAULT_ALPHA)]
    alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Theorem {
    /// 6 A^(-3/2)
    Easy,
    /// 3 / sqrt(T) at T = floor(A n^{2/3})
    EasyCv,
    Thm1,
    Thm2,
    Thm5,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    thm: Theorem,
    #[arg(long = "A", value_delimiter = ',')]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1000000")]
    n: Vec<u64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Reduced suite: n <= 10^4, at most 10^5 trials.
    #[arg(long)]
    quick: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    n: u64,
    /// `critical`, a fraction `a/b`, or a decimal.
    #[arg(long, default_value = "critical")]
    p: String,
    /// Also simulate this many runs and report TV distances.
    #[arg(long)]
    trials: Option<u64>,
}

/// Resolved configuration echoed into every output.
#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    threads: usize,
    format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<GraphParams>,
}

enum Failure {
    Usage(String),
    Verify,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn manifest<'a>(cli: &Cli, command: &'a str, params: Option<GraphParams>) -> RunManifest<'a> {
    RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        format: cli.format,
        params,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Sweep(args) => sweep(cli, args),
        Command::Tail(args) => tail(cli, args),
        Command::Walk(args) => walk(cli, args),
        Command::Bounds(args) => bounds(cli, args),
        Command::Verify(args) => verify(cli, args),
        Command::Oracle(args) => oracle(cli, args),
    }
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<(), Failure> {
    let params = args.prob.resolve().map_err(Failure::Usage)?;
    let started = Instant::now();
    let summaries: Vec<SweepSummary> = (0..args.trials)
        .into_par_iter()
        .map(|i| sweep_streaming(&params, &mut RngStream::new(cli.seed, i)))
        .collect::<Result<_, _>>()?;
    println!("n = {}  p = {:e}  seed = {}", params.n, params.p, cli.seed);
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "trial", "|C1|", "|C2|", "components", "total"
    );
    for (i, s) in summaries.iter().enumerate() {
        println!(
            "{i:>6} {:>12} {:>12} {:>12} {:>12}",
            s.largest, s.second_largest, s.components, s.total
        );
    }
    if let Some(first) = summaries.first() {
        println!("histogram of trial 0 (bin k holds sizes in [2^k, 2^(k+1))):");
        for (k, c) in first.histogram.iter().enumerate() {
            println!("  {:>12} {c:>12}", 1u64 << k);
        }
    }
    println!("elapsed {:.2}s", started.elapsed().as_secs_f64());
    if let Some(path) = &cli.out {
        let mut w = create(path)?;
        match cli.format {
            Format::Jsonl => {
                writeln!(
                    w,
                    "{}",
                    serde_json::to_string(&manifest(cli, "sweep", Some(params)))?
                )?;
                for s in &summaries {
                    writeln!(w, "{}", serde_json::to_string(s)?)?;
                }
            }
            Format::Csv => {
                writeln!(w, "trial,n,p,largest,second_largest,components,total")?;
                for (i, s) in summaries.iter().enumerate() {
                    writeln!(
                        w,
                        "{i},{},{},{},{},{},{}",
                        params.n, params.p, s.largest, s.second_largest, s.components, s.total
                    )?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn print_report(r: &VerdictReport) {
    let p = &r.params;
    let lambda = p
        .lambda
        .map(|l| format!("  lambda = {l}"))
        .unwrap_or_default();
    println!(
        "{}  n = {}  p = {:e}{lambda}  trials = {}",
        r.spec.kind.name(),
        p.n,
        p.p,
        r.spec.trials
    );
    if let (Some(t), Some(c)) = (r.threshold, &r.comparator) {
        println!("  event threshold {c} {t}");
    }
    if let Some(e) = &r.estimate {
        println!(
            "  successes {}  p_hat {:.6e}  ci [{:.6e}, {:.6e}]  alpha {}",
            e.successes, e.p_hat, e.ci_low, e.ci_high, e.alpha
        );
    }
    if let Some(b) = &r.bound {
        let validity = if b.valid {
            "valid"
        } else {
            "preconditions fail"
        };
        println!("  bound {} = {:.6e} ({validity})", b.name, b.value);
    }
    for c in &r.checks {
        let mark = match (c.pass, c.advisory) {
            (true, _) => "ok",
            (false, true) => "advisory-fail",
            (false, false) => "FAIL",
        };
        println!(
            "  [{mark}] {}: {:.6e} vs {:.6e}",
            c.name, c.value, c.threshold
        );
    }
    for note in &r.notes {
        println!("  note: {note}");
    }
    println!("  verdict: {}", if r.pass { "pass" } else { "FAIL" });
}

fn finish(cli: &Cli, mut reports: Vec<VerdictReport>) -> Result<Vec<VerdictReport>, Failure> {
    let threads = rayon::current_num_threads();
    for r in &mut reports {
        r.manifest.threads = Some(threads);
        print_report(r);
    }
    if let Some(path) = &cli.out {
        let format = match cli.format {
            Format::Jsonl => OutputFormat::JsonLines,
            Format::Csv => OutputFormat::CsvSummary,
        };
        write_results(&reports, path, format)?;
    }
    Ok(reports)
}

fn tail(cli: &Cli, args: &TailArgs) -> Result<(), Failure> {
    let (kind, scale) = match args.kind {
        TailKind::C1 => (ExperimentKind::TailC1, args.a),
        TailKind::Cv => (ExperimentKind::TailCv, args.a),
        TailKind::Lower => (ExperimentKind::LowerC1, args.delta),
    };
    let scale = scale.ok_or_else(|| {
        Failure::Usage(match args.kind {
            TailKind::Lower => "--kind lower needs --delta".into(),
            _ => "upper tails need --A".into(),
        })
    })?;
    let spec = ExperimentSpec::new(
        kind,
        args.prob.n,
        args.prob.spec().map_err(Failure::Usage)?,
        args.trials,
        cli.seed,
    )
    .with_scale(scale)
    .with_alpha(args.alpha);
    finish(cli, vec![run_experiment(&spec)?])?;
    Ok(())
}

fn walk(cli: &Cli, args: &WalkArgs) -> Result<(), Failure> {
    let prob = args.prob.spec().map_err(Failure::Usage)?;
    let n = args.prob.n;
    let mut spec = match args.mode {
        WalkMode::Identity => {
            ExperimentSpec::new(ExperimentKind::WalkIdentity, n, prob, args.trials, cli.seed)
        }
        WalkMode::Overshoot => ExperimentSpec::new(
            ExperimentKind::OvershootDominance,
            n,
            prob,
            args.trials,
            cli.seed,
        )
        .with_barrier(args.h.unwrap_or_else(|| ceil_cube_root(n))),
        WalkMode::TwoStage => {
            let delta = args
                .delta
                .ok_or_else(|| Failure::Usage("--mode two-stage needs --delta".into()))?;
            ExperimentSpec::new(ExperimentKind::TwoStage, n, prob, args.trials, cli.seed)
                .with_scale(delta)
        }
    };
    if let (WalkMode::Identity, Some(h)) = (args.mode, args.h) {
        spec = spec.with_barrier(h);
    }
    if matches!(args.mode, WalkMode::Identity)
        && spec.barrier.is_none()
        && prob == ProbSpec::Critical
    {
        spec = spec.with_barrier(ceil_cube_root(n));
    }
    finish(cli, vec![run_experiment(&spec.with_alpha(args.alpha))?])?;
    Ok(())
}

fn bound_row(
    thm: Theorem,
    a: Option<f64>,
    delta: Option<f64>,
    lambda: Option<f64>,
    n: u64,
) -> Result<BoundReport, Failure> {
    let need = |x: Option<f64>, flag: &str| {
        x.ok_or_else(|| Failure::Usage(format!("--thm {thm:?} needs {flag}")))
    };
    Ok(match thm {
        Theorem::Easy => easy_bound_c1(need(a, "--A")?)?,
        Theorem::EasyCv => easy_bound_cv(floor_two_thirds(need(a, "--A")?, n)?.max(1), n)?,
        Theorem::Thm1 => thm1_bounds(need(a, "--A")?, n)?.1,
        Theorem::Thm2 => thm2_bound(need(delta, "--delta")?, n)?,
        Theorem::Thm5 => thm5_bounds(need(a, "--A")?, need(lambda, "--lambda")?, n)?.1,
    })
}

fn grid(values: &[f64]) -> Vec<Option<f64>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

fn bounds(cli: &Cli, args: &BoundsArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for &n in &args.n {
        for a in grid(&args.a) {
            for delta in grid(&args.delta) {
                for lambda in grid(&args.lambda) {
                    rows.push((
                        n,
                        a,
                        delta,
                        lambda,
                        bound_row(args.thm, a, delta, lambda, n)?,
                    ));
                }
            }
        }
    }
    let show = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut table = String::from("bound,n,A,delta,lambda,value,raw_value,valid\n");
    for (n, a, delta, lambda, b) in &rows {
        table.push_str(&format!(
            "{},{n},{},{},{},{},{},{}\n",
            b.name,
            show(*a),
            show(*delta),
            show(*lambda),
            b.value,
            b.raw_value,
            b.valid
        ));
    }
    print!("{table}");
    if let Some(path) = &cli.out {
        let mut w = create(path)?;
        match cli.format {
            Format::Csv => w.write_all(table.as_bytes())?,
            Format::Jsonl => {
                writeln!(
                    w,
                    "{}",
                    serde_json::to_string(&manifest(cli, "bounds", None))?
                )?;
                for (.., b) in &rows {
                    writeln!(w, "{}", serde_json::to_string(b)?)?;
                }
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<(), Failure> {
    let suite = default_suite(args.quick, cli.seed);
    let mut reports = Vec::with_capacity(suite.len());
    for spec in &suite {
        reports.push(run_experiment(spec)?);
    }
    let reports = finish(cli, reports)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    println!("{} experiments, {failed} failed", reports.len());
    if failed > 0 {
        Err(Failure::Verify)
    } else {
        Ok(())
    }
}

fn print_distribution(label: &str, d: &ExactDistribution) {
    println!("{label}");
    for (i, p) in d.probs.iter().enumerate() {
        println!(
            "  {:>3}  {:<24} {:.12}",
            i + 1,
            p.to_string(),
            d.to_f64()[i]
        );
    }
}

fn oracle(cli: &Cli, args: &OracleArgs) -> Result<(), Failure> {
    if args.n == 0 || args.n > MAX_ENUMERATION_N {
        return Err(Failure::Usage(format!(
            "enumeration needs 1 <= n <= {MAX_ENUMERATION_N}"
        )));
    }
    let p = if args.p == "critical" {
        parse_probability(&format!("1/{}", args.n))?
    } else {
        parse_probability(&args.p)?
    };
    let (cv, c1) = enumerate_exact(args.n, &p)?;
    println!("n = {}  p = {p}", args.n);
    print_distribution("P(|C(v)| = k)", &cv);
    print_distribution("P(|C1| = k)", &c1);
    let mut reports = Vec::new();
    if let Some(trials) = args.trials {
        let prob = if args.p == "critical" {
            ProbSpec::Critical
        } else {
            ProbSpec::Value(num_traits::ToPrimitive::to_f64(&p).unwrap_or(f64::NAN))
        };
        let spec = ExperimentSpec::new(
            ExperimentKind::OracleEquivalence,
            args.n,
            prob,
            trials,
            cli.seed,
        );
        reports = finish(cli, vec![run_experiment(&spec)?])?;
    } else if let Some(path) = &cli.out {
        let mut w = create(path)?;
        #[derive(Serialize)]
        struct Exact<'a> {
            manifest: RunManifest<'a>,
            cv: Vec<String>,
            c1: Vec<String>,
        }
        let strings = |d: &ExactDistribution| d.probs.iter().map(|x| x.to_string()).collect();
        let exact = Exact {
            manifest: manifest(cli, "oracle", None),
            cv: strings(&cv),
            c1: strings(&c1),
        };
        writeln!(w, "{}", serde_json::to_string(&exact)?)?;
        w.flush()?;
    }
    if reports.iter().any(|r| !r.pass) {
        return Err(Failure::Verify);
    }
    Ok(())
}
