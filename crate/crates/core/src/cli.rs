use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use taskbench::agents;
use taskbench::batch::{run_batch, BatchError, BatchSpec, PerformanceProfile, PROFILE_FILE};
use taskbench::client::{self, run_agent, ClientError, ClientHandle, Submission, ADDR_ENV, RESULTS_ENV};
use taskbench::eval::{evaluate_with_pools, summarise};
use taskbench::pool::{PoolKind, Pools};
use taskbench::results::{write_json_atomic, ResultsFile};
use taskbench::supervisor::{Supervisor, SupervisorError, DEFAULT_ADDR};

/// Exit statuses shared by every command.
const EXIT_FAILURE: i32 = 1;
const EXIT_CONNECTIVITY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "taskbench", version, about = "Robot task benchmarking harness")]
struct Cli {
    /// Directory holding tasks/, robots/, environments/ and eval_methods/.
    #[arg(long, global = true, default_value = "./pools", env = "TASKBENCH_POOL_ROOT")]
    pool_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a selection and serve it until interrupted.
    Run(RunArgs),
    /// Launch a solution against a running supervisor.
    Submit(SubmitArgs),
    /// Score results files.
    Eval(EvalArgs),
    /// Sweep environments and write a performance profile.
    Batch(BatchArgs),
    /// Run a bundled agent against the supervisor named by the environment.
    #[command(hide = true)]
    Agent(AgentArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, required_unless_present_any = ["list_tasks", "list_robots", "list_envs", "list_eval_methods"])]
    task: Option<String>,
    #[arg(long, required_unless_present_any = ["list_tasks", "list_robots", "list_envs", "list_eval_methods"])]
    robot: Option<String>,
    /// Environment id; repeat or comma-separate for multi-scene tasks.
    #[arg(long, value_delimiter = ',')]
    env: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = DEFAULT_ADDR)]
    addr: String,
    #[arg(long)]
    list_tasks: bool,
    #[arg(long)]
    list_robots: bool,
    #[arg(long)]
    list_envs: bool,
    #[arg(long)]
    list_eval_methods: bool,
}

#[derive(Debug, Args)]
struct SubmitArgs {
    /// Shell command; `{addr}` and `{results}` are substituted.
    #[arg(long)]
    command: String,
    #[arg(long, default_value = "results.json")]
    results: PathBuf,
    #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
    addr: String,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Summary destination when several files are given.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[arg(long)]
    task: String,
    #[arg(long)]
    robot: String,
    /// Comma-separated environment ids; join scene variants with `+`.
    #[arg(long, value_delimiter = ',', required = true)]
    envs: Vec<String>,
    #[arg(long)]
    command: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "batch_output")]
    output_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 10000)]
    port: u16,
}

#[derive(Debug, Args)]
struct AgentArgs {
    /// idle, mapper or explorer.
    name: String,
    /// Actions per scene for the explorer.
    #[arg(long, default_value_t = 60)]
    steps: usize,
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    let pool_root = cli.pool_root;
    let result = match cli.command {
        Command::Run(args) => cmd_run(&pool_root, args),
        Command::Submit(args) => cmd_submit(args),
        Command::Eval(args) => cmd_eval(&pool_root, args),
        Command::Batch(args) => cmd_batch(&pool_root, args),
        Command::Agent(args) => cmd_agent(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            err.downcast_ref::<ClientError>()
                .map_or(EXIT_FAILURE, ClientError::exit_code)
        }
    }
}

fn load_pools(root: &Path) -> anyhow::Result<Pools> {
    Pools::load(root).with_context(|| format!("loading pools from {}", root.display()))
}

fn cmd_run(pool_root: &Path, args: RunArgs) -> anyhow::Result<i32> {
    let pools = load_pools(pool_root)?;
    let listings = [
        (args.list_tasks, PoolKind::Tasks),
        (args.list_robots, PoolKind::Robots),
        (args.list_envs, PoolKind::Environments),
        (args.list_eval_methods, PoolKind::EvalMethods),
    ];
    if listings.iter().any(|(on, _)| *on) {
        for (_, kind) in listings.iter().filter(|(on, _)| *on) {
            for id in pools.list_options(*kind) {
                println!("{id}");
            }
        }
        return Ok(0);
    }
    let (task, robot) = (args.task.unwrap_or_default(), args.robot.unwrap_or_default());
    let config = pools.validate_selection(&task, &robot, &args.env, args.seed)?;
    let env_id = config.env_id();
    let supervisor = match Supervisor::serve(config, args.addr.as_str()) {
        Ok(s) => s,
        Err(e @ (SupervisorError::AddrInUse(_) | SupervisorError::Bind { .. })) => {
            eprintln!("error: {e}");
            return Ok(EXIT_CONNECTIVITY);
        }
        Err(e) => return Err(e.into()),
    };
    println!("task {task} robot {robot} env {env_id} seed {}", args.seed);
    println!("listening on http://{}", supervisor.addr());
    supervisor.wait();
    Ok(0)
}

fn cmd_submit(args: SubmitArgs) -> anyhow::Result<i32> {
    ClientHandle::connect(&args.addr)?;
    let results = Submission::new(args.command, args.addr, &args.results).run()?;
    println!(
        "wrote {} ({} objects)",
        args.results.display(),
        results.objects.len()
    );
    Ok(0)
}

fn report_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    input.with_file_name(format!("{stem}.report.json"))
}

fn cmd_eval(pool_root: &Path, args: EvalArgs) -> anyhow::Result<i32> {
    let pools = load_pools(pool_root)?;
    let mut reports = Vec::with_capacity(args.files.len());
    for file in &args.files {
        let results = ResultsFile::read(file).with_context(|| file.display().to_string())?;
        let report = evaluate_with_pools(&results, &pools).with_context(|| file.display().to_string())?;
        let out = report_path(file);
        report.write(&out).with_context(|| format!("writing {}", out.display()))?;
        println!("{}: {} {:.6} -> {}", file.display(), report.metric, report.score, out.display());
        reports.push(report);
    }
    if reports.len() > 1 {
        let summary = summarise(&reports)?;
        let out = args.summary.unwrap_or_else(|| args.files[0].with_file_name("summary.json"));
        write_json_atomic(&out, &summary).with_context(|| format!("writing {}", out.display()))?;
        println!("mean {:.6} over {} results -> {}", summary.mean_score, reports.len(), out.display());
    }
    Ok(0)
}

fn print_profile(profile: &PerformanceProfile, output_dir: &Path) {
    match profile.mean_score {
        Some(mean) => println!("mean {mean:.6} over {} entries", profile.scored().count()),
        None => println!("no entry was scored"),
    }
    println!("profile {}", output_dir.join(PROFILE_FILE).display());
}

fn cmd_batch(pool_root: &Path, args: BatchArgs) -> anyhow::Result<i32> {
    let pools = load_pools(pool_root)?;
    let spec = BatchSpec {
        task_id: args.task,
        robot_id: args.robot,
        env_ids: args.envs,
        command: args.command,
        seed: args.seed,
        output_dir: args.output_dir,
        host: args.host,
        port: args.port,
    };
    let progress = |entry: &taskbench::batch::ProfileEntry| match (entry.score, &entry.error) {
        (Some(score), _) => println!("{} seed {}: {score:.6}", entry.env_id, entry.seed),
        (None, error) => println!(
            "warning: {} seed {} failed: {}",
            entry.env_id,
            entry.seed,
            error.as_deref().unwrap_or("unknown error")
        ),
    };
    match run_batch(&spec, &pools, progress) {
        Ok(profile) => {
            print_profile(&profile, &spec.output_dir);
            Ok(0)
        }
        Err(BatchError::AllFailed(profile)) => {
            print_profile(&profile, &spec.output_dir);
            eprintln!("error: every batch entry failed");
            Ok(EXIT_FAILURE)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_agent(args: AgentArgs) -> anyhow::Result<i32> {
    let handle = ClientHandle::connect(&client::addr_from_env())?;
    let mut agent = agents::by_name(&args.name, args.steps, handle.scene_count())
        .with_context(|| format!("unknown agent `{}`", args.name))?;
    let results = std::env::var(RESULTS_ENV).unwrap_or_else(|_| "results.json".into());
    let stats = run_agent(&handle, agent.as_mut(), Path::new(&results))?;
    println!(
        "{} actions over {} scene(s), results in {results}",
        stats.actions, stats.scenes
    );
    Ok(0)
}
