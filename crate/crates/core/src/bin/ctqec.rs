//! Command-line harness: trajectory ensembles, the discrete-time
//! comparison, filter timing, basis export, and the Wonham consistency run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctqec::engine::ControllerSpec;
use ctqec::error::{Error, Result};
use ctqec::harness::{
    benchmark_filters, controller_spec, read_config_file, run_comparison, run_ensemble,
    write_basis_export, write_comparison_csv, ControllerKind, RunConfig,
};
use ctqec::linalg::trace_prod;
use ctqec::sde::Scheme;

#[derive(Parser)]
#[command(
    name = "ctqec",
    about = "Continuous-time quantum error correction with real-time feedback"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a trajectory ensemble and write the aggregate fidelity CSV.
    Ensemble(CommonOpts),
    /// Feedback-assisted codeword fidelity against the discrete-time baseline.
    Compare(CommonOpts),
    /// Time the full and truncated filters alone on recorded record streams.
    Bench(CommonOpts),
    /// Export a coefficient basis (operators plus sparse generators).
    Basis(CommonOpts),
    /// Co-integrate the plant and the no-feedback Wonham filter, reporting
    /// the per-step syndrome-probability deviation.
    Wonham(CommonOpts),
}

#[derive(Args)]
struct CommonOpts {
    /// Built-in code name ("five-qubit", "bitflip") or a code file path.
    #[arg(long)]
    code: Option<String>,
    /// full | truncated-136 | untruncated-1024 | minimal-31 |
    /// wonham-no-feedback | none
    #[arg(long)]
    controller: Option<String>,
    /// Measurement strength in units of gamma.
    #[arg(long)]
    kappa: Option<f64>,
    /// Maximum feedback strength in units of gamma.
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    /// Step size in units of 1/gamma.
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon in units of 1/gamma.
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Base seed; trajectory i uses noise stream (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Output sampling stride in steps.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// euler | predictor-corrector
    #[arg(long)]
    scheme: Option<String>,
    /// key=value configuration file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exit zero even if some trajectories aborted.
    #[arg(long)]
    allow_partial: bool,
    /// Also write one CSV per trajectory next to the aggregate file.
    #[arg(long)]
    per_trajectory: bool,
}

fn resolve_config(opts: &CommonOpts) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        let map = read_config_file(path)?;
        for (k, v) in &map {
            let bad = |what: &str| Error::Config(format!("config {k}={v}: bad {what}"));
            match k.as_str() {
                "code" => cfg.code = v.clone(),
                "controller" => cfg.controller = v.parse()?,
                "kappa" => cfg.kappa = v.parse().map_err(|_| bad("float"))?,
                "lambda_max" => cfg.lambda_max = v.parse().map_err(|_| bad("float"))?,
                "dt" => cfg.dt = v.parse().map_err(|_| bad("float"))?,
                "t_final" => cfg.t_final = v.parse().map_err(|_| bad("float"))?,
                "trajectories" => cfg.trajectories = v.parse().map_err(|_| bad("count"))?,
                "seed" => cfg.seed = v.parse().map_err(|_| bad("seed"))?,
                "stride" => cfg.stride = v.parse().map_err(|_| bad("stride"))?,
                "out" => cfg.out = Some(PathBuf::from(v)),
                "workers" => cfg.workers = v.parse().map_err(|_| bad("count"))?,
                "scheme" => cfg.scheme = v.parse()?,
                "allow_partial" => cfg.allow_partial = v.parse().map_err(|_| bad("bool"))?,
                "per_trajectory" => {
                    cfg.per_trajectory_out = v.parse().map_err(|_| bad("bool"))?
                }
                other => {
                    return Err(Error::Config(format!("unknown config key {other:?}")));
                }
            }
        }
    }
    if let Some(v) = &opts.code {
        cfg.code = v.clone();
    }
    if let Some(v) = &opts.controller {
        cfg.controller = v.parse()?;
    }
    if let Some(v) = opts.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = opts.lambda_max {
        cfg.lambda_max = v;
    }
    if let Some(v) = opts.dt {
        cfg.dt = v;
    }
    if let Some(v) = opts.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = opts.trajectories {
        cfg.trajectories = v;
    }
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.stride {
        cfg.stride = v;
    }
    if let Some(v) = &opts.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = opts.workers {
        cfg.workers = v;
    }
    if let Some(v) = &opts.scheme {
        cfg.scheme = v.parse::<Scheme>()?;
    }
    if opts.allow_partial {
        cfg.allow_partial = true;
    }
    if opts.per_trajectory {
        cfg.per_trajectory_out = true;
    }
    cfg.params()?;
    Ok(cfg)
}

fn cmd_ensemble(cfg: &RunConfig) -> Result<bool> {
    let ctx = cfg.context()?;
    let summary = run_ensemble(&ctx, cfg)?;
    let last = summary.times.len() - 1;
    println!(
        "controller={} trajectories={} steps={} horizon={}",
        summary.controller,
        summary.streams.len(),
        cfg.steps(),
        cfg.t_final
    );
    println!(
        "final codespace fidelity: {:.6} +/- {:.6}",
        summary.mean_codespace[last], summary.sem_codespace[last]
    );
    println!(
        "final codeword fidelity:  {:.6} +/- {:.6}",
        summary.mean_codeword[last], summary.sem_codeword[last]
    );
    let total: f64 = summary.wall_secs.iter().sum();
    println!(
        "wall time: {:.2} s total, {:.2} s mean per trajectory",
        total,
        total / summary.wall_secs.len().max(1) as f64
    );
    if summary.psd_violations > 0 {
        println!(
            "positivity monitor: {} soft violations logged",
            summary.psd_violations
        );
    }
    if let Some(out) = &cfg.out {
        println!("aggregate CSV written to {}", out.display());
    }
    report_aborts(&summary.aborted);
    Ok(summary.aborted.is_empty())
}

fn cmd_compare(cfg: &RunConfig) -> Result<bool> {
    let ctx = cfg.context()?;
    let (summary, table) = run_comparison(&ctx, cfg)?;
    // report at the grid point nearest gamma t = 0.2 (or the horizon end)
    let target = 0.2f64.min(cfg.t_final);
    let idx = table
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - target)
                .abs()
                .partial_cmp(&(b.1 - target).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    println!(
        "at gamma t = {:.4}: feedback codeword fidelity {:.6} +/- {:.6}, discrete baseline {:.6}",
        table.times[idx],
        table.mean_codeword_feedback[idx],
        table.sem_codeword_feedback[idx],
        table.discrete_codeword[idx]
    );
    let gap = table.mean_codeword_feedback[idx] - table.discrete_codeword[idx];
    let sem = table.sem_codeword_feedback[idx].max(1e-300);
    println!("gap: {:.6} ({:.1} standard errors)", gap, gap / sem);
    if let Some(out) = &cfg.out {
        write_comparison_csv(&table, out)?;
        println!("comparison CSV written to {}", out.display());
    }
    report_aborts(&summary.aborted);
    Ok(summary.aborted.is_empty())
}

fn cmd_bench(cfg: &RunConfig) -> Result<bool> {
    let ctx = cfg.context()?;
    let report = benchmark_filters(&ctx, cfg)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "{} trajectories of {} steps each",
        report.trajectories, report.steps
    );
    println!(
        "closed loop (plant + truncated controller): {:.3} s per trajectory",
        mean(&report.closed_loop_secs)
    );
    println!(
        "full filter alone:      {:.3} s per trajectory",
        mean(&report.full_filter_secs)
    );
    println!(
        "truncated filter alone: {:.3} s per trajectory",
        mean(&report.truncated_filter_secs)
    );
    println!("full/truncated ratio:   {:.1}", report.ratio);
    Ok(true)
}

fn cmd_basis(cfg: &RunConfig) -> Result<bool> {
    let ctx = cfg.context()?;
    let spec = controller_spec(&ctx, cfg.controller)?;
    let basis = match &spec {
        ControllerSpec::Reduced(b) | ControllerSpec::WonhamNoFeedback(b) => b.clone(),
        _ => {
            return Err(Error::Config(
                "basis export needs a reduced controller kind \
                 (truncated-136, untruncated-1024, minimal-31, wonham-no-feedback)"
                    .into(),
            ))
        }
    };
    println!("{}", basis.summary());
    if let Some(out) = &cfg.out {
        write_basis_export(&basis, out)?;
        println!("basis export written to {}", out.display());
    }
    Ok(true)
}

fn cmd_wonham(cfg: &RunConfig) -> Result<bool> {
    let ctx = cfg.context()?;
    let basis = match controller_spec(&ctx, ControllerKind::WonhamNoFeedback)? {
        ControllerSpec::WonhamNoFeedback(b) => b,
        _ => unreachable!(),
    };
    let params = cfg.params()?;
    let mut sim = ctqec::engine::CoIntegrator::new(
        &ctx,
        &ControllerSpec::WonhamNoFeedback(basis),
        params,
        cfg.scheme,
        cfg.seed,
        0,
    )?;
    let steps = cfg.steps();
    let mut worst = 0.0f64;
    let mut rows: Vec<(f64, Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for s in 1..=steps {
        sim.step()?;
        let p = sim.controller_reduced_state().unwrap().p.clone();
        let mut traces = Vec::with_capacity(ctx.space.num_projectors());
        let mut dev = 0.0f64;
        for (a, pi) in ctx.space.projectors.iter().enumerate() {
            let tr = trace_prod(pi, &sim.plant_state.rho).re;
            dev = dev.max((tr - p[a]).abs());
            traces.push(tr);
        }
        worst = worst.max(dev);
        if s % cfg.stride == 0 {
            rows.push((sim.plant_state.time, p.to_vec(), traces, dev));
        }
    }
    println!(
        "wonham consistency over {} steps: max |Tr[Pi_a rho] - p_a| = {:.3e}",
        steps, worst
    );
    if let Some(out) = &cfg.out {
        use std::io::Write as _;
        let mut f = std::fs::File::create(out)?;
        let labels: Vec<String> = ctx.space.labels.iter().map(|l| l.to_string()).collect();
        let p_cols: Vec<String> = labels.iter().map(|l| format!("p_{l}")).collect();
        let t_cols: Vec<String> = labels.iter().map(|l| format!("tr_{l}")).collect();
        writeln!(f, "time,{},{},max_dev", p_cols.join(","), t_cols.join(","))?;
        for (t, p, tr, dev) in rows {
            let ps: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            let ts: Vec<String> = tr.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{t},{},{},{dev}", ps.join(","), ts.join(","))?;
        }
        println!("comparison CSV written to {}", out.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (opts, run): (&CommonOpts, fn(&RunConfig) -> Result<bool>) = match &cli.cmd {
        Cmd::Ensemble(o) => (o, cmd_ensemble),
        Cmd::Compare(o) => (o, cmd_compare),
        Cmd::Bench(o) => (o, cmd_bench),
        Cmd::Basis(o) => (o, cmd_basis),
        Cmd::Wonham(o) => (o, cmd_wonham),
    };
    let cfg = match resolve_config(opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(clean) => {
            if clean || cfg.allow_partial {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: some trajectories aborted (use --allow-partial to ignore)");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn report_aborts(aborted: &[(u64, String)]) {
    if !aborted.is_empty() {
        eprintln!("{} trajectories aborted:", aborted.len());
        for (stream, reason) in aborted {
            eprintln!("  stream {stream}: {reason}");
        }
    }
}
