//! `ddstab`: generate experiment data, synthesize a filter-based
//! output-feedback controller from it, and check the result against the
//! true plant.
//!
//! Exit codes: 0 success, 1 usage error, 2 simulation failure, 3 synthesis
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use ddstab::campaign::{run_campaign, CampaignSpec};
use ddstab::kfilter::Reconstruction;
use ddstab::plant::{random_minimal_system, ContinuousLtiSystem, Oracle};
use ddstab::simulation::{
    multisine, simulate_closed_loop, simulate_plant, Dataset, DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE,
};
use ddstab::synthesis::{synthesize, verify_closed_loop, Controller, SynthesisConfig};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "ddstab", version, about = "Data-driven output-feedback stabilization")]
struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the plant under a seeded multisine and write the dataset CSV.
    Simulate(SimulateArgs),
    /// Run the synthesis pipeline on a dataset.
    Synthesize(SynthesizeArgs),
    /// Closed-loop spectrum and trajectory of a controller on the true plant.
    Verify(VerifyArgs),
    /// Random-plant campaign with oracle verification of every trial.
    Montecarlo(MontecarloArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// `example1`, a JSON file with keys A, B, C, or `random:n,m,p`.
    #[arg(long)]
    plant: Option<String>,
    /// Experiment length in seconds.
    #[arg(long = "tD", alias = "t-d")]
    t_d: Option<f64>,
    #[arg(long)]
    record_dt: Option<f64>,
    #[arg(long)]
    int_dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial state as comma-separated values; drawn from the seed if absent.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Dataset CSV written by `simulate`.
    #[arg(long)]
    data: PathBuf,
    /// Plant order.
    #[arg(long)]
    n: Option<usize>,
    /// Filter eigenvalues, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    filter: Option<String>,
    /// Batch sampling period in seconds.
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// `cubic` or `zero_order_hold`.
    #[arg(long)]
    reconstruction: Option<String>,
    /// Directory for `controller.json` and `report.json`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    plant: Option<String>,
    #[arg(long)]
    controller: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value = "-1,1,2")]
    x0: String,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long)]
    int_dt: Option<f64>,
    /// Directory for `eigenvalues.csv` and `trajectory.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MontecarloArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "summary.json")]
    out: PathBuf,
}

/// File form of the run settings. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    plant: Option<String>,
    filter_eigenvalues: Option<Vec<f64>>,
    t_d: Option<f64>,
    record_dt: Option<f64>,
    int_dt: Option<f64>,
    period: Option<f64>,
    rank_tol: Option<f64>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [
            ("t_d", self.t_d),
            ("record_dt", self.record_dt),
            ("int_dt", self.int_dt),
            ("period", self.period),
            ("rank_tol", self.rank_tol),
            ("epsilon", self.epsilon),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    bail!("{name} must be positive, got {v}");
                }
            }
        }
        if let (Some(period), Some(dt)) = (self.period, self.record_dt) {
            if period < dt {
                bail!("sampling period {period} is shorter than record_dt {dt}");
            }
        }
        if let Some(ev) = &self.filter_eigenvalues {
            if ev.iter().any(|&l| !(l.is_finite() && l < 0.0)) {
                bail!("filter eigenvalues must be negative reals");
            }
            let mut sorted = ev.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                bail!("filter eigenvalues must be distinct");
            }
        }
        Ok(())
    }
}

enum Failure {
    Usage(anyhow::Error),
    Simulation(anyhow::Error),
    Synthesis(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Simulation(_) => 2,
            Failure::Synthesis(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Simulation(e) | Failure::Synthesis(e) | Failure::Other(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn parse_list(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("not a number: {s:?}")))
        .collect()
}

fn load_plant(source: &str, seed: u64) -> anyhow::Result<ContinuousLtiSystem> {
    if source == "example1" {
        return Ok(ContinuousLtiSystem::example1());
    }
    if let Some(dims) = source.strip_prefix("random:") {
        let d: Vec<usize> = dims
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .context("random plant must be given as random:n,m,p")?;
        let [n, m, p] = d[..] else {
            bail!("random plant must be given as random:n,m,p");
        };
        return Ok(random_minimal_system(n, m, p, seed)?);
    }
    ContinuousLtiSystem::load(Path::new(source)).with_context(|| format!("loading plant {source}"))
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = flag.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn random_x0(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn cmd_simulate(args: SimulateArgs, cfg: RunConfig) -> Result<(), Failure> {
    let cfg = RunConfig {
        plant: args.plant.or(cfg.plant),
        t_d: args.t_d.or(cfg.t_d),
        record_dt: args.record_dt.or(cfg.record_dt),
        int_dt: args.int_dt.or(cfg.int_dt),
        seed: args.seed.or(cfg.seed),
        ..cfg
    };
    cfg.validate().map_err(usage)?;
    let seed = cfg.seed.unwrap_or(0);
    let sys = load_plant(cfg.plant.as_deref().unwrap_or("example1"), seed).map_err(usage)?;
    let (n, m, _) = sys.dims();
    let x0 = match &args.x0 {
        Some(s) => DVector::from_vec(parse_list(s).map_err(usage)?),
        None => random_x0(n, seed),
    };
    if x0.len() != n {
        return Err(usage(anyhow!("x0 has {} entries, plant order is {n}", x0.len())));
    }
    let input = multisine(m, seed, DEFAULT_AMP_RANGE, DEFAULT_FREQ_RANGE);
    let data = simulate_plant(
        &sys,
        &x0,
        &input,
        cfg.t_d.unwrap_or(3.0),
        cfg.record_dt.unwrap_or(1e-3),
        cfg.int_dt.unwrap_or(1e-4),
    )
    .map_err(|e| Failure::Simulation(e.into()))?;
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    data.write_csv(file).context("writing dataset")?;
    eprintln!("wrote {} samples to {}", data.len(), args.out.display());
    Ok(())
}

fn cmd_synthesize(args: SynthesizeArgs, cfg: RunConfig) -> Result<(), Failure> {
    let cfg = RunConfig {
        filter_eigenvalues: match &args.filter {
            Some(s) => Some(parse_list(s).map_err(usage)?),
            None => cfg.filter_eigenvalues,
        },
        period: args.period.or(cfg.period),
        rank_tol: args.rank_tol.or(cfg.rank_tol),
        epsilon: args.epsilon.or(cfg.epsilon),
        ..cfg
    };
    cfg.validate().map_err(usage)?;
    let n = args
        .n
        .or_else(|| cfg.filter_eigenvalues.as_ref().map(Vec::len))
        .ok_or_else(|| usage(anyhow!("--n (plant order) is required")))?;
    let reconstruction = match args.reconstruction.as_deref() {
        None | Some("cubic") => Reconstruction::Cubic,
        Some("zero_order_hold") | Some("zoh") => Reconstruction::ZeroOrderHold,
        Some(other) => return Err(usage(anyhow!("unknown reconstruction {other:?}"))),
    };
    let defaults = SynthesisConfig::for_order(n);
    let config = SynthesisConfig {
        filter_eigenvalues: cfg.filter_eigenvalues.clone(),
        reconstruction,
        rank_tol: cfg.rank_tol.unwrap_or(defaults.rank_tol),
        period: cfg.period.unwrap_or(defaults.period),
        epsilon: cfg.epsilon,
        ..defaults
    };
    if config.filter_matrix().nrows() != n {
        return Err(usage(anyhow!("need {n} filter eigenvalues")));
    }
    let file = fs::File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let data = Dataset::read_csv(file).map_err(|e| usage(anyhow!("reading dataset: {e}")))?;
    let dir = out_dir(args.out_dir, &cfg)?;
    let report_path = dir.join("report.json");
    match synthesize(&data, &config) {
        Ok(run) => {
            fs::write(dir.join("controller.json"), run.controller.to_json()).context("writing controller")?;
            fs::write(&report_path, serde_json::to_string_pretty(&run.report).context("report")?)
                .context("writing report")?;
            eprintln!(
                "controller written to {} (l = {}, N = {})",
                dir.join("controller.json").display(),
                run.report.l,
                run.report.n_samples
            );
            Ok(())
        }
        Err(e) => {
            fs::write(&report_path, serde_json::to_string_pretty(&e.report).context("report")?)
                .context("writing report")?;
            Err(Failure::Synthesis(anyhow!("stage {}: {}", e.stage, e.message)))
        }
    }
}

fn cmd_verify(args: VerifyArgs, cfg: RunConfig) -> Result<(), Failure> {
    let cfg = RunConfig {
        plant: args.plant.or(cfg.plant),
        int_dt: args.int_dt.or(cfg.int_dt),
        ..cfg
    };
    cfg.validate().map_err(usage)?;
    if !(args.t_end.is_finite() && args.t_end > 0.0) {
        return Err(usage(anyhow!("--t-end must be positive")));
    }
    let sys = load_plant(cfg.plant.as_deref().unwrap_or("example1"), cfg.seed.unwrap_or(0)).map_err(usage)?;
    let controller = Controller::load(&args.controller).map_err(|e| usage(anyhow!("loading controller: {e}")))?;
    let x0 = DVector::from_vec(parse_list(&args.x0).map_err(usage)?);
    if x0.len() != sys.a.nrows() {
        return Err(usage(anyhow!("x0 has {} entries, plant order is {}", x0.len(), sys.a.nrows())));
    }
    let oracle = Oracle::new(&sys, &controller.f, &x0, cfg.seed.unwrap_or(0)).map_err(|e| usage(anyhow!(e)))?;
    let spec = verify_closed_loop(&controller, &oracle.extended).map_err(|e| usage(anyhow!(e)))?;
    let dir = out_dir(args.out_dir, &cfg)?;

    let mut eig = String::from("re,im\n");
    for z in &spec.eigenvalues {
        eig.push_str(&format!("{},{}\n", z.re, z.im));
    }
    fs::write(dir.join("eigenvalues.csv"), eig).context("writing eigenvalues")?;

    let int_dt = cfg.int_dt.unwrap_or(1e-4);
    let every = ((1e-2 / int_dt).round() as usize).max(1);
    let traj = simulate_closed_loop(&sys, &controller, &x0, args.t_end, int_dt, every)
        .map_err(|e| Failure::Simulation(e.into()))?;
    let file = fs::File::create(dir.join("trajectory.csv")).context("creating trajectory.csv")?;
    traj.write_csv(file).context("writing trajectory")?;
    println!("abscissa {} hurwitz {}", spec.abscissa, spec.is_hurwitz());
    Ok(())
}

fn cmd_montecarlo(args: MontecarloArgs, cfg: RunConfig) -> Result<(), Failure> {
    cfg.validate().map_err(usage)?;
    if args.n == 0 || args.m == 0 || args.p == 0 {
        return Err(usage(anyhow!("dimensions must be positive")));
    }
    let defaults = CampaignSpec::default();
    let mut synthesis = SynthesisConfig::for_order(args.n);
    synthesis.rank_tol = cfg.rank_tol.unwrap_or(synthesis.rank_tol);
    synthesis.period = cfg.period.unwrap_or(synthesis.period);
    synthesis.epsilon = cfg.epsilon;
    let spec = CampaignSpec {
        n: args.n,
        m: args.m,
        p: args.p,
        trials: args.trials,
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        t_d: cfg.t_d.unwrap_or(defaults.t_d),
        record_dt: cfg.record_dt.unwrap_or(defaults.record_dt),
        int_dt: cfg.int_dt.unwrap_or(defaults.int_dt),
        synthesis,
    };
    let summary = run_campaign(&spec);
    fs::write(&args.out, serde_json::to_string_pretty(&summary).context("summary")?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("{}/{} trials stabilized", summary.successes, summary.trials);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::load(cli.config.as_deref()).map_err(usage)?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, cfg),
        Command::Synthesize(a) => cmd_synthesize(a, cfg),
        Command::Verify(a) => cmd_verify(a, cfg),
        Command::Montecarlo(a) => cmd_montecarlo(a, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
