//! `geoexp` command-line tool.
//!
//! Exit status is 2 for usage errors, 1 for runtime failures and 0 on success.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use geoexp::config::Settings;
use geoexp::io;
use geoexp::sig6;
use geoexp::study::{self, StudySpec};
use geoexp_core::design::{self, DesignMatrix, ScrambleOptions};
use geoexp_core::estimation;
use geoexp_core::seed::{stream_rng, Stream};
use geoexp_core::{bayes, shrinkage, sim};

#[derive(Parser)]
#[command(name = "geoexp", version, about = "Multibrand geo experiment design, simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scramble a balanced checkerboard design and record its correlation trace.
    Design(DesignArgs),
    /// Simulate sales data for a design.
    Simulate(SimulateArgs),
    /// Fit the per-brand regression to a dataset.
    Analyze(AnalyzeArgs),
    /// Shrink per-brand estimates from a fits file toward their mean.
    Shrink(ShrinkArgs),
    /// Run the hierarchical Gibbs sampler on a dataset.
    Bayes(BayesArgs),
    /// Run a replicated simulation study.
    Study(StudyArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = "GEOEXP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Overrides {
    /// Override a config key, e.g. `--set delta=0.02`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    geos: usize,
    #[arg(long)]
    brands: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Flip attempts [default: 50 per cell].
    #[arg(long)]
    steps: Option<usize>,
    /// Record correlations every this many accepted flips.
    #[arg(long, default_value_t = 10)]
    trace_every: usize,
    /// Design file; `.json` selects JSON, anything else CSV.
    #[arg(short, long, default_value = "design.csv")]
    output: PathBuf,
    /// Correlation trace CSV [default: <output>.trace.csv].
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Fits CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// Also fit per-GEO responsiveness and write it as JSON here.
    #[arg(long, value_name = "PATH")]
    geo_response: Option<PathBuf>,
}

#[derive(Args)]
struct ShrinkArgs {
    #[arg(long)]
    fits: PathBuf,
    /// Grid points for the shrinkage parameter.
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Shrinkage JSON.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BayesArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    seed: SeedArg,
    /// Interval summary JSON.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write every retained draw to this CSV.
    #[arg(long)]
    chains: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Used when the spec has no `master_seed`.
    #[command(flatten)]
    seed: SeedArg,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Summary JSON.
    #[arg(short, long)]
    output: PathBuf,
    /// Per-replicate records CSV [default: <output>.records.csv].
    #[arg(long)]
    records: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_settings(base: Settings, config: Option<&Path>, overrides: &Overrides) -> Result<Settings, Failure> {
    let mut s = base;
    if let Some(path) = config {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        s.apply_text(&text)
            .map_err(|e| Failure::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
    }
    for kv in &overrides.set {
        let Some((k, v)) = kv.split_once('=') else {
            return usage(format!("--set expects KEY=VALUE, got `{kv}`"));
        };
        if let Err(e) = s.set(k.trim(), v.trim()) {
            return usage(format!("--set {kv}: {e}"));
        }
    }
    Ok(s)
}

fn run_design(a: &DesignArgs) -> Outcome {
    for (flag, n) in [("--geos", a.geos), ("--brands", a.brands)] {
        if n < 2 || n % 2 != 0 {
            return usage(format!(
                "{flag} must be an even number of at least 2 (got {n}): a balanced design treats exactly half of the GEOs for each brand and half of the brands in each GEO"
            ));
        }
    }
    let options = ScrambleOptions {
        attempts: a.steps.unwrap_or_else(|| design::default_attempts(a.geos, a.brands)),
        trace_every: Some(a.trace_every.max(1)),
    };
    let start = DesignMatrix::checkerboard(a.geos, a.brands).map_err(anyhow::Error::from)?;
    let mut rng = stream_rng(a.seed.seed, 0, Stream::Design);
    let out = design::scramble(start, &options, &mut rng).map_err(anyhow::Error::from)?;
    io::write_design(&a.output, &out.design)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| sibling(&a.output, ".trace.csv"));
    let mut w = io::create(&trace_path)?;
    io::write_trace(&mut w, &out.trace)?;
    w.flush().context("cannot write trace")?;
    let s = out.design.correlations();
    let report = out.design.validate();
    println!("design {}x{}: {} accepted flips in {} attempts", a.geos, a.brands, out.accepted_flips, options.attempts);
    println!("brand correlations: min {} max {} rms {}", sig6(s.brand_min), sig6(s.brand_max), sig6(s.brand_rms));
    println!("GEO correlations: min {} max {} rms {}", sig6(s.geo_min), sig6(s.geo_max), sig6(s.geo_rms));
    println!(
        "balanced: {}, collisions: {} GEO pairs, {} brand pairs",
        report.balanced,
        report.row_collisions.len(),
        report.column_collisions.len()
    );
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Outcome {
    let design = io::read_design(&a.design)?;
    let mut base = Settings::default();
    base.sim.g_count = design.g_count();
    base.sim.b_count = design.b_count();
    let s = load_settings(base, a.config.as_deref(), &a.overrides)?;
    let cfg = s.sim;
    if (cfg.g_count, cfg.b_count) != (design.g_count(), design.b_count()) {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "config asks for {} GEOs x {} brands but {} is {} x {}",
            cfg.g_count,
            cfg.b_count,
            a.design.display(),
            design.g_count(),
            design.b_count()
        )));
    }
    let seed = a.seed.seed;
    let generate = || -> geoexp_core::Result<sim::Dataset> {
        cfg.validate()?;
        let sizes = sim::sample_geo_sizes(&cfg, &mut stream_rng(seed, 0, Stream::Sizes));
        let effects = sim::sample_brand_effects(&cfg, &mut stream_rng(seed, 0, Stream::Effects));
        sim::generate_from_parts(
            &design,
            &cfg,
            &sizes,
            &effects,
            None,
            &mut stream_rng(seed, 0, Stream::PreNoise),
            &mut stream_rng(seed, 0, Stream::PostNoise),
        )
    };
    let data = generate().map_err(anyhow::Error::from)?;
    io::write_dataset_file(&a.output, &data)?;
    println!("simulated {} GEOs x {} brands at delta {}", data.g_count, data.b_count, sig6(cfg.delta));
    Ok(())
}

fn run_analyze(a: &AnalyzeArgs) -> Outcome {
    let data = io::read_dataset_file(&a.data)?;
    let fits = estimation::fit_all_brands(&data).map_err(anyhow::Error::from)?;
    let mut w = io::create(&a.output)?;
    io::write_fits(&mut w, &fits)?;
    w.flush().context("cannot write fits")?;
    println!("brand  beta_hat  se  p_value");
    for (b, f) in fits.iter().enumerate() {
        println!("{}  {}  {}  {}", b + 1, sig6(f.beta_hat), sig6(f.se_beta()), sig6(f.p_value));
    }
    let pooled = estimation::pooled_mean(&fits).map_err(anyhow::Error::from)?;
    println!("mean  {}  {}", sig6(pooled.beta_bar_hat), sig6(pooled.var_beta_bar.sqrt()));
    if let Some(path) = &a.geo_response {
        let g = estimation::fit_geo_responsiveness(&data).map_err(anyhow::Error::from)?;
        io::write_json(path, &g)?;
        println!("GEO responsiveness: residual variance {}, {} dof", sig6(g.sigma2_hat), g.dof);
    }
    Ok(())
}

fn run_shrink(a: &ShrinkArgs) -> Outcome {
    let rows = io::read_fits(io::open(&a.fits)?).with_context(|| format!("{}: invalid fits", a.fits.display()))?;
    let hats: Vec<f64> = rows.iter().map(|r| r.beta_hat).collect();
    let vars: Vec<f64> = rows.iter().map(|r| r.var_beta).collect();
    if a.grid < 2 {
        return usage("--grid must be at least 2");
    }
    let r = shrinkage::choose_lambda(&hats, &vars, a.grid)
        .map_err(anyhow::Error::from)
        .with_context(|| a.fits.display().to_string())?;
    io::write_json(&a.output, &io::ShrinkageJson::from(&r))?;
    let lambda = if r.lambda.is_finite() { sig6(r.lambda) } else { "none (no shrinkage)".into() };
    println!("lambda {lambda}  u {}  SURE {}", sig6(r.u), sig6(r.sure_value));
    println!("brand  beta_hat  beta_tilde");
    for (b, (h, t)) in hats.iter().zip(&r.beta_tilde).enumerate() {
        println!("{}  {}  {}", b + 1, sig6(*h), sig6(*t));
    }
    Ok(())
}

fn run_bayes(a: &BayesArgs) -> Outcome {
    let data = io::read_dataset_file(&a.data)?;
    let s = load_settings(Settings::default(), a.config.as_deref(), &a.overrides)?;
    let cfg = s.bayes;
    let chains = bayes::gibbs_run(&data, &cfg, &mut stream_rng(a.seed.seed, 0, Stream::Sampler))
        .map_err(anyhow::Error::from)?;
    let summary = bayes::summarize_posterior(&chains, cfg.level).map_err(anyhow::Error::from)?;
    io::write_json(&a.output, &summary)?;
    if let Some(path) = &a.chains {
        let mut w = io::create(path)?;
        io::write_chains(&mut w, &chains, cfg.burn_in, cfg.thin)?;
        w.flush().context("cannot write chains")?;
    }
    println!("brand  mean  lower  upper");
    for (b, iv) in summary.brands.iter().enumerate() {
        println!("{}  {}  {}  {}", b + 1, sig6(iv.mean), sig6(iv.lower), sig6(iv.upper));
    }
    let g = summary.grand;
    println!("grand  {}  {}  {}", sig6(g.mean), sig6(g.lower), sig6(g.upper));
    println!("max R-hat over brand effects: {}", sig6(chains.max_beta_rhat()));
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), sig6)
}

fn run_study(a: &StudyArgs) -> Outcome {
    let s = load_settings(Settings::default(), Some(&a.spec), &a.overrides)?;
    let spec = StudySpec::from_settings(&s, a.seed.seed)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("{}: {e}", a.spec.display())))?;
    let out = study::run_study(&spec, a.jobs).map_err(anyhow::Error::from)?;
    io::write_json(&a.output, &out.summary)?;
    let records_path = a.records.clone().unwrap_or_else(|| sibling(&a.output, ".records.csv"));
    let mut w = io::create(&records_path)?;
    study::write_records(&mut w, &out.records)?;
    w.flush().context("cannot write records")?;
    println!("{} study, {} replicates, master seed {}", spec.kind, spec.replicates, spec.master_seed);
    for l in &out.summary.levels {
        println!(
            "delta {}: Pr(p<=0.05) {}  mean 2se {}  rmse {}  E[beta_hat | p<=0.05] {}",
            sig6(l.delta),
            sig6(l.rejection_rate),
            sig6(l.mean_2se),
            sig6(l.rmse),
            opt(l.mean_beta_given_significant)
        );
        if l.mean_2se_pooled.is_some() || l.mean_efficiency.is_some() {
            println!("  pooled 2se {}  mean efficiency {}", opt(l.mean_2se_pooled), opt(l.mean_efficiency));
        }
        if l.mean_rmse_bayes.is_some() {
            println!(
                "  rmse stein {}  rmse bayes {}  coverage {}  mean half-width {}  max R-hat {}",
                opt(l.mean_rmse_stein),
                opt(l.mean_rmse_bayes),
                opt(l.coverage),
                opt(l.mean_half_width),
                opt(l.max_rhat)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(a) => run_design(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Shrink(a) => run_shrink(a),
        Command::Bayes(a) => run_bayes(a),
        Command::Study(a) => run_study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
