//! `twf`: sparse phase retrieval from the command line.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{config_error, ConfigError, Grid, PresetName, RunConfig};
use twf_core::experiments::presets::{self, Preset};
use twf_core::experiments::{
    run_sweep, trial_instance, Axis, SweepOptions, SweepResult, SweepSpec,
};
use twf_core::persist::{self, ToolInfo};
use twf_core::plot::LineChart;
use twf_core::selftest::{self, Fault, SelfTestOptions};
use twf_core::twf::{self, empirical_risk};
use twf_core::{
    initialize, relative_error, InitConfig, NoiseFamily, SeedRecord, ThresholdOperator, TwfError,
};

#[derive(Parser)]
#[command(
    name = "twf",
    version,
    about = "Noisy sparse phase retrieval by thresholded Wirtinger flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one signal, synthetic or loaded from an instance file.
    Recover(RecoverArgs),
    /// Sweep one parameter over a grid of values.
    Sweep(SweepArgs),
    /// Run the four standard simulation sweeps and plot them.
    Figures(FiguresArgs),
    /// Run the built-in property suites.
    Selftest(SelftestArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "p")]
    p: Option<usize>,
    #[arg(long = "m")]
    m: Option<usize>,
    #[arg(long = "k")]
    k: Option<usize>,
    /// Noise scale over |x|^2.
    #[arg(long, allow_negative_numbers = true)]
    nsr: Option<f64>,
    /// Screening parameter of the initializer.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Threshold multiplier.
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Step size.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// soft or hard.
    #[arg(long)]
    operator: Option<ThresholdOperator>,
    /// none, gaussian, laplace or centered_exponential.
    #[arg(long)]
    noise: Option<NoiseFamily>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// paper or quick.
    #[arg(long)]
    preset: Option<PresetName>,
}

impl Common {
    fn resolve(&self, extra: RunConfig) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            p: self.p,
            m: self.m,
            k: self.k,
            nsr: self.nsr,
            alpha: self.alpha,
            beta: self.beta,
            mu: self.mu,
            iters: self.iters,
            operator: self.operator,
            noise: self.noise,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            preset: self.preset,
            ..extra
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    common: Common,
    /// Instance file to recover from instead of drawing one.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Also write the instance used to this path.
    #[arg(long)]
    save_instance: Option<PathBuf>,
    /// Write per-iteration records to trace.csv.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    axis: Option<Axis>,
    /// Comma-separated, strictly increasing.
    #[arg(long, allow_negative_numbers = true)]
    grid: Option<Grid>,
    #[arg(long)]
    trials: Option<usize>,
    /// Keep wall-clock times (results are then not reproducible byte for byte).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Beta,
    Nsr,
    M,
    K,
    All,
}

#[derive(Args)]
struct FiguresArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Threshold,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run a single suite.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Recover(a) => recover(a),
        Command::Sweep(a) => sweep(a),
        Command::Figures(a) => figures(a),
        Command::Selftest(a) => selftest_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<TwfError>() {
            return match e {
                TwfError::InvalidArgument(_) => 2,
                TwfError::DegenerateInstance(_) => 3,
                TwfError::Divergence { .. } => 4,
                _ => 1,
            };
        }
    }
    1
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn prepare_out(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let out = cfg.out();
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(out)
}

fn recover(args: RecoverArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.common.resolve(RunConfig::default())?;
    let params = cfg.trial_params()?;
    let instance = match &args.instance {
        Some(path) => persist::load_instance(path)
            .with_context(|| format!("cannot load instance {}", path.display()))?,
        None => trial_instance(&params, SeedRecord::for_trial(cfg.seed(), 0, 0))?,
    };
    let out = prepare_out(&cfg)?;
    if let Some(path) = &args.save_instance {
        persist::save_instance(&instance, path)?;
    }

    let init = initialize(&instance, &InitConfig::with_alpha(params.alpha))?;
    let mut tcfg = params.twf_config(init.phi_sq);
    tcfg.record_trajectory = args.trace;
    let trace = match twf::run(&init.x0, &instance, &tcfg) {
        Ok(t) => t,
        Err(e) => {
            if let (true, TwfError::Divergence { partial, .. }) = (args.trace, &e) {
                write(&out.join("trace.csv"), partial.to_csv())?;
            }
            return Err(e.into());
        }
    };

    let error = instance
        .signal()
        .map(|x| relative_error(&trace.final_estimate, x))
        .transpose()?;
    let risk = empirical_risk(&trace.final_estimate, &instance);
    let support: Vec<usize> = trace
        .final_estimate
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i + 1)
        .collect();
    let doc = json!({
        "tool": ToolInfo::default(),
        "config": {
            "source": match &args.instance {
                Some(p) => json!({ "instance": p.display().to_string() }),
                None => json!({ "synthetic": { "p": params.p, "m": params.m, "k": params.k, "nsr": params.nsr, "noise": params.noise } }),
            },
            "seed": instance.seed(),
            "alpha": params.alpha,
            "beta": params.beta,
            "mu": params.mu,
            "iterations": params.iterations,
            "operator": params.operator,
        },
        "init": {
            "phi_sq": init.phi_sq,
            "selected": init.selected.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "fallback": init.fallback,
            "eigenvalue": init.eigenvalue,
            "eigen_converged": init.eigen_converged,
        },
        "iterations_run": trace.iterations_run,
        "risk": risk,
        "relative_error": error,
        "support": support,
        "estimate": trace.final_estimate,
    });
    write(
        &out.join("estimate.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    if args.trace {
        write(&out.join("trace.csv"), trace.to_csv())?;
    }

    let shape = format!("p={} m={}", instance.p(), instance.m());
    match error {
        Some(e) => println!(
            "relative error {e:.6e} ({shape}, support {}, risk {risk:.6e})",
            support.len()
        ),
        None => println!(
            "risk {risk:.6e} ({shape}, support {}; no ground truth)",
            support.len()
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let extra = RunConfig {
        axis: args.axis,
        grid: args.grid.clone(),
        trials: args.trials,
        ..Default::default()
    };
    let cfg = args.common.resolve(extra)?;
    let params = cfg.trial_params()?;
    let axis = cfg.axis.ok_or_else(|| config_error("sweep needs --axis"))?;
    let grid = cfg
        .grid
        .clone()
        .ok_or_else(|| config_error("sweep needs --grid"))?
        .0;
    let spec = SweepSpec {
        fixed: params,
        axis,
        grid,
        trials: cfg.trials.unwrap_or(5),
        master_seed: cfg.seed(),
    };
    spec.validate().map_err(|e| config_error(e.to_string()))?;
    let out = prepare_out(&cfg)?;
    let result = run_sweep(
        &spec,
        SweepOptions {
            workers: cfg.workers(),
            record_timings: args.timings,
        },
    )?;
    emit(&out, &format!("sweep_{axis}"), &result)?;
    Ok(ExitCode::SUCCESS)
}

fn figures(args: FiguresArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.common.resolve(RunConfig::default())?;
    let preset = cfg.preset();
    let seed = cfg.seed();
    type Build = fn(Preset, u64) -> SweepSpec;
    let all: [(Which, Build); 4] = [
        (Which::Beta, presets::beta_sweep),
        (Which::Nsr, presets::nsr_sweep),
        (Which::M, presets::m_sweep),
        (Which::K, presets::k_sweep),
    ];
    let params = cfg.trial_params()?;
    let out = prepare_out(&cfg)?;
    for (which, build) in all {
        if args.which != Which::All && args.which != which {
            continue;
        }
        let mut spec = build(preset, seed);
        // explicit settings other than the swept one still apply
        let swept = spec.fixed.with_axis(spec.axis, spec.grid[0])?;
        spec.fixed = params.with_axis(spec.axis, spec.grid[0])?;
        if spec.fixed != swept {
            eprintln!("note: {} sweep uses overridden fixed parameters", spec.axis);
        }
        spec.validate().map_err(|e| config_error(e.to_string()))?;
        let result = run_sweep(
            &spec,
            SweepOptions {
                workers: cfg.workers(),
                record_timings: args.timings,
            },
        )?;
        emit(&out, &format!("figure_{}", spec.axis), &result)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn axis_label(axis: Axis) -> &'static str {
    match axis {
        Axis::Beta => "thresholding parameter beta",
        Axis::Nsr => "noise-to-signal ratio sigma/|x|^2",
        Axis::M => "sample size m",
        Axis::K => "sparsity k",
        Axis::Alpha => "initialization parameter alpha",
        Axis::Mu => "step size mu",
    }
}

fn emit(out: &Path, stem: &str, result: &SweepResult) -> anyhow::Result<()> {
    let axis = result.spec.axis;
    write(
        &out.join(format!("{stem}.json")),
        persist::sweep_json(result)?,
    )?;
    write(
        &out.join(format!("{stem}_trials.csv")),
        persist::trials_csv(result),
    )?;
    write(
        &out.join(format!("{stem}_summary.csv")),
        persist::summary_csv(result),
    )?;
    let points: Vec<(f64, Option<f64>)> = result
        .points
        .iter()
        .map(|p| (p.axis_value, p.mean_error))
        .collect();
    let title = format!("Average relative error against {}", axis_label(axis));
    let chart = LineChart {
        title: &title,
        x_label: axis_label(axis),
        y_label: "average relative error",
        points: &points,
    };
    write(&out.join(format!("{stem}.svg")), chart.to_svg())?;
    for p in &result.points {
        let mean = p
            .mean_error
            .map(|e| format!("{e:.4}"))
            .unwrap_or_else(|| "n/a".into());
        let flag = if p.invalid {
            " (invalid: too many failures)"
        } else {
            ""
        };
        println!(
            "{axis} = {:<8} mean error {mean}  failures {}{flag}",
            p.axis_value, p.failures
        );
    }
    for note in &result.notes {
        println!("note: {note}");
    }
    Ok(())
}

fn selftest_cmd(args: SelftestArgs) -> anyhow::Result<ExitCode> {
    let options = SelfTestOptions {
        suite: args.suite,
        fault: args.inject_fault.map(|f| match f {
            FaultArg::Threshold => Fault::Threshold,
        }),
        seed: args.seed,
    };
    let outcomes = selftest::run(&options).map_err(config_error)?;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    match outcomes.iter().find(|o| !o.passed) {
        Some(first) => {
            eprintln!("selftest failed: {}", first.name);
            Ok(ExitCode::from(1))
        }
        None => Ok(ExitCode::SUCCESS),
    }
}
