//! `astbench`: generate, verify, run, score, classify and compare
//! text-to-code benchmarks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use astbench_core::bench::{self, RunConfig, RunDir};
use astbench_core::bridge::{stub, Client, ModelEndpoint};
use astbench_core::dataset::{self, Dataset, SCHEMA_VERSION, TOOL_VERSION};
use astbench_core::debugdict::{diff_runs, label_counts, table2_text, Annotation, ErrorLabel, RunView};
use astbench_core::runner::{table1_csv, table1_text, RunLimits, Runner};
use astbench_core::uast::gen::{gen_problem, SizeProfile};

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Failure {
    Config = 2,
    Input = 3,
    Verification = 4,
    Infrastructure = 5,
}

#[derive(Debug)]
struct CliError {
    class: Failure,
    error: anyhow::Error,
}

type CliResult<T = ()> = Result<T, CliError>;

trait Classify<T> {
    fn class(self, class: Failure) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn class(self, class: Failure) -> CliResult<T> {
        self.map_err(|e| CliError { class, error: e.into() })
    }
}

fn fail<T>(class: Failure, error: anyhow::Error) -> CliResult<T> {
    Err(CliError { class, error })
}

#[derive(Parser)]
#[command(name = "astbench", about = "AST-derived text-to-code benchmarks", disable_version_flag = true)]
struct Cli {
    /// Print tool and schema versions.
    #[arg(long = "version", short = 'V')]
    version: bool,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Python interpreter used for checks and execution.
    #[arg(long, global = true, default_value = "python3")]
    python: PathBuf,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset from a directory of problem files.
    Gen {
        problems: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to the name of the output directory.
        #[arg(long)]
        dataset_id: Option<String>,
    },
    /// Run every ground truth against its tests.
    Verify {
        dataset: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Query a model on every problem, then execute and score its code.
    Run {
        dataset: PathBuf,
        #[arg(long)]
        endpoint_config: Option<PathBuf>,
        /// Answer from a built-in loopback server instead of the configured
        /// endpoint. Only `ground-truth` is available.
        #[arg(long)]
        stub: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
        /// Defaults to the name of the output directory.
        #[arg(long)]
        run_id: Option<String>,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Print the score row of a stored run.
    Score { run: PathBuf },
    /// Label the failures of a run.
    Classify { run: PathBuf, dataset: PathBuf },
    /// Compare two runs on the same dataset.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Print the diff as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Render score tables for one or more runs, plus label counts.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Record a human verdict for one problem of a run.
    Annotate {
        run: PathBuf,
        problem: String,
        /// Comma-separated labels.
        #[arg(long, value_delimiter = ',', required = true)]
        labels: Vec<String>,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Write problem files: the bundled fixtures or random programs.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        /// Generate this many random problems instead of the bundle.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        tests: usize,
        #[arg(long, default_value_t = 14)]
        max_stmts: usize,
        #[arg(long, default_value_t = 2)]
        max_nesting: usize,
    },
    /// Serve a dataset's ground truth as a chat-completions endpoint.
    ServeStub {
        dataset: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
    },
}

#[derive(Args, Clone)]
struct LimitArgs {
    #[arg(long)]
    per_test_timeout: Option<f64>,
    #[arg(long)]
    import_timeout: Option<f64>,
}

impl LimitArgs {
    fn apply(&self, mut limits: RunLimits) -> RunLimits {
        if let Some(t) = self.per_test_timeout {
            limits.per_test_timeout_s = t;
        }
        if let Some(t) = self.import_timeout {
            limits.import_timeout_s = t;
        }
        limits
    }
}

struct Ctx {
    workers: usize,
    python: PathBuf,
}

impl Ctx {
    fn runner(&self, limits: RunLimits) -> Runner {
        Runner {
            python: self.python.clone(),
            limits,
            log_dir: None,
        }
    }
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty())
        .unwrap_or_else(|| "run".into())
}

fn load_dataset(path: &Path) -> CliResult<Dataset> {
    Dataset::load(path)
        .with_context(|| format!("loading dataset {}", path.display()))
        .class(Failure::Input)
}

fn open_run(path: &Path) -> CliResult<RunDir> {
    RunDir::open(path)
        .with_context(|| format!("opening run {}", path.display()))
        .class(Failure::Input)
}

fn cmd_gen(problems: &Path, out: &Path, dataset_id: Option<String>) -> CliResult {
    let list = dataset::load_problems_dir(problems).class(Failure::Input)?;
    let id = dataset_id.unwrap_or_else(|| dir_name(out));
    let manifest = dataset::generate(&list, &id, out).class(Failure::Input)?;
    println!(
        "{}: {} problems ({}), digest {}",
        manifest.dataset_id,
        manifest.problems.len(),
        manifest.size_class,
        manifest.digest
    );
    Ok(())
}

fn cmd_verify(ctx: &Ctx, path: &Path, limits: &LimitArgs) -> CliResult {
    let ds = load_dataset(path)?;
    let runner = ctx.runner(limits.apply(RunLimits::default()));
    let mut bad = 0;
    for (p, r) in ds.problems.iter().zip(ds.verify(&runner, ctx.workers)) {
        let id = &p.problem.id;
        match r {
            Ok(r) if r.whole => {}
            Ok(r) => {
                bad += 1;
                println!("FAIL {id}: {}/{} tests", r.m, r.n);
            }
            Err(e) => return fail(Failure::Infrastructure, anyhow!("{id}: {e}")),
        }
    }
    println!("{} of {} problems verified", ds.problems.len() - bad, ds.problems.len());
    if bad > 0 {
        return fail(Failure::Verification, anyhow!("{bad} ground truths failed their tests"));
    }
    Ok(())
}

fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .class(Failure::Config)?;
    RunConfig::from_toml(&text)
        .map_err(|e| anyhow!("{}: {e}", path.display()))
        .class(Failure::Config)
}

fn stub_config() -> RunConfig {
    RunConfig {
        endpoint: ModelEndpoint {
            base_url: String::new(),
            model_id: "ground-truth".into(),
            auth_token_env: String::new(),
            request_timeout_s: 60.0,
        },
        gen: Default::default(),
        bridge: Default::default(),
        runner: Default::default(),
    }
}

fn cmd_run(
    ctx: &Ctx,
    dataset: &Path,
    config: Option<&Path>,
    stub_kind: Option<&str>,
    out: &Path,
    run_id: Option<String>,
    limits: &LimitArgs,
) -> CliResult {
    let ds = load_dataset(dataset)?;
    let mut config = match (config, stub_kind) {
        (Some(path), _) => read_config(path)?,
        (None, Some(_)) => stub_config(),
        (None, None) => return fail(Failure::Config, anyhow!("give --endpoint-config or --stub")),
    };
    config.runner = limits.apply(config.runner.clone());
    let server = match stub_kind {
        None => None,
        Some("ground-truth") => {
            let server = stub::StubServer::start(stub::ground_truth(bench::ground_truth_answers(&ds)))
                .class(Failure::Infrastructure)?;
            config.endpoint.base_url = server.base_url();
            config.endpoint.auth_token_env.clear();
            Some(server)
        }
        Some(other) => return fail(Failure::Config, anyhow!("unknown stub {other:?}")),
    };
    let digest = config.digest();
    let client = Client::new(config.endpoint.clone(), config.bridge.clone()).class(Failure::Config)?;
    let runner = ctx.runner(config.runner.clone());
    let run_id = run_id.unwrap_or_else(|| dir_name(out));
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let output = bench::run_dataset(&ds, &client, &config.gen, &runner, ctx.workers, &run_id, &digest, &timestamp)
        .map_err(|e| {
            let class = match &e {
                bench::RunError::Bridge(_) => Failure::Config,
                _ => Failure::Infrastructure,
            };
            CliError { class, error: e.into() }
        })?;
    drop(server);
    let stats: BTreeMap<_, _> = ds.problems.iter().map(|p| (p.problem.id.clone(), p.stats.clone())).collect();
    let saved = RunDir::save(out, &output, &stats).class(Failure::Infrastructure)?;
    print!("{}", table1_text(&[&saved.report]));
    let failed = output.failed_requests();
    if failed > 0 {
        return fail(Failure::Infrastructure, anyhow!("{failed} model requests failed; see {}", bench::REQUEST_LOG));
    }
    Ok(())
}

fn cmd_score(path: &Path) -> CliResult {
    let run = open_run(path)?;
    print!("{}", table1_text(&[&run.report]));
    Ok(())
}

fn cmd_classify(path: &Path, dataset: &Path) -> CliResult {
    let run = open_run(path)?;
    let ds = load_dataset(dataset)?;
    let written = bench::classify_run(&run, &ds).class(Failure::Input)?;
    for a in &written {
        let labels: Vec<&str> = a.labels.iter().map(|l| l.name()).collect();
        println!("{}: {}", a.problem_id, labels.join(", "));
    }
    println!("{} annotations written", written.len());
    Ok(())
}

fn run_labels(run: &RunDir) -> CliResult<BTreeMap<String, std::collections::BTreeSet<ErrorLabel>>> {
    Ok(run.annotations().class(Failure::Input)?.effective_labels())
}

fn cmd_diff(a: &Path, b: &Path, json: bool) -> CliResult {
    let (ra, rb) = (open_run(a)?, open_run(b)?);
    let (la, lb) = (run_labels(&ra)?, run_labels(&rb)?);
    let stats = ra.stats().class(Failure::Input)?;
    let diff = diff_runs(
        RunView {
            run_id: &ra.record.run_id,
            report: &ra.report,
            labels: &la,
        },
        RunView {
            run_id: &rb.record.run_id,
            report: &rb.report,
            labels: &lb,
        },
        &stats,
    )
    .class(Failure::Input)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&diff).class(Failure::Infrastructure)?);
    } else {
        print!("{}", diff.to_text());
    }
    Ok(())
}

fn cmd_report(paths: &[PathBuf], csv: bool) -> CliResult {
    let runs = paths.iter().map(|p| open_run(p)).collect::<CliResult<Vec<_>>>()?;
    let reports: Vec<_> = runs.iter().map(|r| &r.report).collect();
    if csv {
        print!("{}", table1_csv(&reports));
        return Ok(());
    }
    print!("{}", table1_text(&reports));
    let counts = runs
        .iter()
        .map(|r| Ok((r.record.model_id.clone(), label_counts(&r.report, &run_labels(r)?))))
        .collect::<CliResult<Vec<_>>>()?;
    let columns: Vec<(&str, &BTreeMap<ErrorLabel, usize>)> = counts.iter().map(|(m, c)| (m.as_str(), c)).collect();
    println!();
    print!("{}", table2_text(&columns));
    Ok(())
}

fn cmd_annotate(path: &Path, problem: &str, labels: &[String], note: &str) -> CliResult {
    let run = open_run(path)?;
    let labels = labels
        .iter()
        .map(|l| l.trim().parse::<ErrorLabel>().map_err(|e| anyhow!("{e}")))
        .collect::<Result<Vec<_>, _>>()
        .class(Failure::Input)?;
    let mut store = run.annotations().class(Failure::Input)?;
    let a = Annotation::human(problem, &run.record.model_id, &run.record.run_id, &labels, note);
    let added = store.annotate(a).class(Failure::Input)?;
    println!("{}", if added { "recorded" } else { "unchanged" });
    Ok(())
}

fn cmd_synth(out: &Path, count: Option<usize>, seed: u64, tests: usize, profile: SizeProfile) -> CliResult {
    let problems = match count {
        None => astbench_core::fixtures::bundled(),
        Some(n) => (0..n)
            .map(|i| {
                let s = seed.wrapping_add(i as u64);
                gen_problem(&format!("synth-{s}"), s, &profile, tests)
                    .ok_or_else(|| anyhow!("seed {s} gave no valid program"))
            })
            .collect::<anyhow::Result<Vec<_>>>()
            .class(Failure::Input)?,
    };
    dataset::write_problems_dir(out, &problems).class(Failure::Infrastructure)?;
    println!("wrote {} problem files to {}", problems.len(), out.display());
    Ok(())
}

fn cmd_serve_stub(dataset: &Path, addr: &str) -> CliResult {
    let ds = load_dataset(dataset)?;
    let server = stub::StubServer::start_on(addr, stub::ground_truth(bench::ground_truth_answers(&ds)))
        .class(Failure::Infrastructure)?;
    println!("serving {} problems at {}", ds.problems.len(), server.base_url());
    server.join();
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    let ctx = Ctx {
        workers: cli
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
            .max(1),
        python: cli.python,
    };
    let Some(command) = cli.command else {
        return fail(Failure::Input, anyhow!("no subcommand given; see --help"));
    };
    match command {
        Command::Gen { problems, out, dataset_id } => cmd_gen(&problems, &out, dataset_id),
        Command::Verify { dataset, limits } => cmd_verify(&ctx, &dataset, &limits),
        Command::Run {
            dataset,
            endpoint_config,
            stub,
            out,
            run_id,
            limits,
        } => cmd_run(&ctx, &dataset, endpoint_config.as_deref(), stub.as_deref(), &out, run_id, &limits),
        Command::Score { run } => cmd_score(&run),
        Command::Classify { run, dataset } => cmd_classify(&run, &dataset),
        Command::Diff { a, b, json } => cmd_diff(&a, &b, json),
        Command::Report { runs, csv } => cmd_report(&runs, csv),
        Command::Annotate {
            run,
            problem,
            labels,
            note,
        } => cmd_annotate(&run, &problem, &labels, &note),
        Command::Synth {
            out,
            count,
            seed,
            tests,
            max_stmts,
            max_nesting,
        } => cmd_synth(&out, count, seed, tests, SizeProfile::new(max_stmts, max_nesting)),
        Command::ServeStub { dataset, addr } => cmd_serve_stub(&dataset, &addr),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.version {
        println!("astbench {TOOL_VERSION} (schema {SCHEMA_VERSION})");
        return ExitCode::SUCCESS;
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.class as u8)
        }
    }
}
