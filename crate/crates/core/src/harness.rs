//! Trajectory-ensemble execution, aggregation, persistence, and the
//! experiment recipes: controller comparisons, the discrete-time baseline
//! comparison, and the filter timing benchmark.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::code::load_code;
use crate::discrete::discrete_codeword_fidelity;
use crate::engine::{
    co_integrate, ControlRecording, ControllerSpec, SimContext, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::full_filter::{controller_step, DensityState, FullFilter, ModelParams};
use crate::reduced::{
    build_closure, truncate_first_level, truncate_minimal, truncated_step, wonham_basis,
    CoefficientBasis, ReducedFilter, ReducedState, DEFAULT_BUDGET,
};
use crate::sde::{Scheme, StepScratch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Full,
    Truncated136,
    Untruncated1024,
    Minimal31,
    WonhamNoFeedback,
    None,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Full => "full",
            ControllerKind::Truncated136 => "truncated-136",
            ControllerKind::Untruncated1024 => "untruncated-1024",
            ControllerKind::Minimal31 => "minimal-31",
            ControllerKind::WonhamNoFeedback => "wonham-no-feedback",
            ControllerKind::None => "none",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ControllerKind::Full),
            "truncated-136" | "truncated_136" | "truncated" => Ok(ControllerKind::Truncated136),
            "untruncated-1024" | "untruncated_1024" | "untruncated" => {
                Ok(ControllerKind::Untruncated1024)
            }
            "minimal-31" | "minimal_31" | "minimal" => Ok(ControllerKind::Minimal31),
            "wonham-no-feedback" | "wonham" => Ok(ControllerKind::WonhamNoFeedback),
            "none" => Ok(ControllerKind::None),
            other => Err(Error::Config(format!("unknown controller {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub code: String,
    pub controller: ControllerKind,
    pub kappa: f64,
    pub lambda_max: f64,
    pub dt: f64,
    pub t_final: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub stride: usize,
    pub out: Option<PathBuf>,
    pub per_trajectory_out: bool,
    pub workers: usize,
    pub allow_partial: bool,
    pub scheme: Scheme,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            code: "five-qubit".into(),
            controller: ControllerKind::Truncated136,
            kappa: 100.0,
            lambda_max: 200.0,
            dt: 1e-5,
            t_final: 0.25,
            trajectories: 10,
            seed: 1,
            stride: 100,
            out: None,
            per_trajectory_out: false,
            workers: 0,
            allow_partial: false,
            scheme: Scheme::PredictorCorrector,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(1.0, self.kappa, self.lambda_max, self.dt)
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn context(&self) -> Result<SimContext> {
        SimContext::new(load_code(&self.code)?)
    }
}

/// Build the coefficient basis a controller kind needs (shared read-only).
pub fn controller_spec(ctx: &SimContext, kind: ControllerKind) -> Result<ControllerSpec> {
    let spec = match kind {
        ControllerKind::None => ControllerSpec::None,
        ControllerKind::Full => ControllerSpec::Full,
        ControllerKind::WonhamNoFeedback => {
            let basis = wonham_basis(&ctx.code, &ctx.space)?;
            ControllerSpec::WonhamNoFeedback(Arc::new(basis))
        }
        ControllerKind::Truncated136 => {
            let raw = build_closure(&ctx.code, &ctx.space, Some(1), DEFAULT_BUDGET)?;
            let basis = truncate_first_level(&ctx.code, &ctx.space, &raw)?;
            ControllerSpec::Reduced(Arc::new(basis))
        }
        ControllerKind::Untruncated1024 => {
            let basis = build_closure(&ctx.code, &ctx.space, None, DEFAULT_BUDGET)?;
            ControllerSpec::Reduced(Arc::new(basis))
        }
        ControllerKind::Minimal31 => {
            let raw = build_closure(&ctx.code, &ctx.space, Some(1), DEFAULT_BUDGET)?;
            let combined = truncate_first_level(&ctx.code, &ctx.space, &raw)?;
            let minimal = truncate_minimal(&combined)?;
            ControllerSpec::Reduced(Arc::new(minimal))
        }
    };
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub controller: String,
    pub base_seed: u64,
    pub times: Vec<f64>,
    pub mean_codespace: Vec<f64>,
    pub sem_codespace: Vec<f64>,
    pub mean_codeword: Vec<f64>,
    pub sem_codeword: Vec<f64>,
    pub streams: Vec<u64>,
    pub wall_secs: Vec<f64>,
    pub aborted: Vec<(u64, String)>,
    pub psd_violations: usize,
}

/// Deterministic ordered mean/SEM over records (by trajectory index, not
/// completion order).
pub fn aggregate(
    controller: &str,
    base_seed: u64,
    records: &[TrajectoryRecord],
    aborted: Vec<(u64, String)>,
) -> Result<EnsembleSummary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("no completed trajectories".into()))?;
    let times = first.times.clone();
    let npts = times.len();
    let n = records.len() as f64;
    let mut mean_cs = vec![0.0; npts];
    let mut mean_cw = vec![0.0; npts];
    for r in records {
        if r.times.len() != npts {
            return Err(Error::Internal("trajectory grids differ".into()));
        }
        for i in 0..npts {
            mean_cs[i] += r.codespace[i];
            mean_cw[i] += r.codeword[i];
        }
    }
    for v in mean_cs.iter_mut().chain(mean_cw.iter_mut()) {
        *v /= n;
    }
    let mut sem_cs = vec![0.0; npts];
    let mut sem_cw = vec![0.0; npts];
    if records.len() > 1 {
        for r in records {
            for i in 0..npts {
                sem_cs[i] += (r.codespace[i] - mean_cs[i]).powi(2);
                sem_cw[i] += (r.codeword[i] - mean_cw[i]).powi(2);
            }
        }
        for v in sem_cs.iter_mut().chain(sem_cw.iter_mut()) {
            *v = (*v / (n - 1.0)).sqrt() / n.sqrt();
        }
    }
    Ok(EnsembleSummary {
        controller: controller.to_string(),
        base_seed,
        times,
        mean_codespace: mean_cs,
        sem_codespace: sem_cs,
        mean_codeword: mean_cw,
        sem_codeword: sem_cw,
        streams: records.iter().map(|r| r.stream).collect(),
        wall_secs: records.iter().map(|r| r.wall_secs).collect(),
        aborted,
        psd_violations: records.iter().map(|r| r.psd_violations).sum(),
    })
}

/// Run the configured trajectory ensemble in parallel. Trajectory i uses the
/// noise stream (seed, i), so results are independent of scheduling.
pub fn run_ensemble(ctx: &SimContext, config: &RunConfig) -> Result<EnsembleSummary> {
    let params = config.params()?;
    let spec = controller_spec(ctx, config.controller)?;
    let steps = config.steps();
    let run_all = || -> Vec<(u64, Result<TrajectoryRecord>)> {
        (0..config.trajectories as u64)
            .into_par_iter()
            .map(|stream| {
                (
                    stream,
                    co_integrate(
                        ctx,
                        &spec,
                        params,
                        config.scheme,
                        config.seed,
                        stream,
                        steps,
                        config.stride,
                        ControlRecording::Off,
                    ),
                )
            })
            .collect()
    };
    let results = if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(run_all)
    } else {
        run_all()
    };

    let mut records = Vec::with_capacity(results.len());
    let mut aborted = Vec::new();
    for (stream, res) in results {
        match res {
            Ok(r) => records.push(r),
            Err(e) => aborted.push((stream, e.to_string())),
        }
    }
    let summary = aggregate(config.controller.name(), config.seed, &records, aborted)?;
    if let Some(path) = &config.out {
        write_summary_csv(&summary, path)?;
        if config.per_trajectory_out {
            for r in &records {
                let mut p = path.clone();
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "ensemble".into());
                p.set_file_name(format!("{stem}_traj{:04}.csv", r.stream));
                write_trajectory_csv(r, &p)?;
            }
        }
    }
    Ok(summary)
}

pub fn write_summary_csv(summary: &EnsembleSummary, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "time,mean_codespace_fidelity,sem_codespace_fidelity,mean_codeword_fidelity,sem_codeword_fidelity"
    )?;
    for i in 0..summary.times.len() {
        writeln!(
            f,
            "{},{},{},{},{}",
            summary.times[i],
            summary.mean_codespace[i],
            summary.sem_codespace[i],
            summary.mean_codeword[i],
            summary.sem_codeword[i]
        )?;
    }
    Ok(())
}

/// Read back an aggregate CSV; used by the round-trip check and plotting
/// helpers. Values parse to the exact f64s that were written.
pub fn read_summary_csv(path: &Path) -> Result<EnsembleSummary> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if !header.starts_with("time,mean_codespace_fidelity") {
        return Err(Error::Parse(format!("unexpected CSV header: {header}")));
    }
    let mut summary = EnsembleSummary {
        controller: String::new(),
        base_seed: 0,
        times: Vec::new(),
        mean_codespace: Vec::new(),
        sem_codespace: Vec::new(),
        mean_codeword: Vec::new(),
        sem_codeword: Vec::new(),
        streams: Vec::new(),
        wall_secs: Vec::new(),
        aborted: Vec::new(),
        psd_violations: 0,
    };
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("bad CSV row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad float {s:?}")))
        };
        summary.times.push(parse(fields[0])?);
        summary.mean_codespace.push(parse(fields[1])?);
        summary.sem_codespace.push(parse(fields[2])?);
        summary.mean_codeword.push(parse(fields[3])?);
        summary.sem_codeword.push(parse(fields[4])?);
    }
    Ok(summary)
}

pub fn write_trajectory_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "time,codespace_fidelity,codeword_fidelity")?;
    for i in 0..record.times.len() {
        writeln!(
            f,
            "{},{},{}",
            record.times[i], record.codespace[i], record.codeword[i]
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub times: Vec<f64>,
    pub mean_codeword_feedback: Vec<f64>,
    pub sem_codeword_feedback: Vec<f64>,
    pub discrete_codeword: Vec<f64>,
}

/// Feedback-assisted codeword fidelity alongside the discrete-time
/// closed form on the same grid.
pub fn run_comparison(ctx: &SimContext, config: &RunConfig) -> Result<(EnsembleSummary, ComparisonTable)> {
    if ctx.code.n != 5 {
        return Err(Error::UnsupportedCode("the five-qubit code".into()));
    }
    let summary = run_ensemble(ctx, config)?;
    let discrete = summary
        .times
        .iter()
        .map(|&t| discrete_codeword_fidelity(t, 1.0))
        .collect();
    let table = ComparisonTable {
        times: summary.times.clone(),
        mean_codeword_feedback: summary.mean_codeword.clone(),
        sem_codeword_feedback: summary.sem_codeword.clone(),
        discrete_codeword: discrete,
    };
    Ok((summary, table))
}

pub fn write_comparison_csv(table: &ComparisonTable, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "time,mean_codeword_feedback,sem_codeword_feedback,discrete_codeword_fidelity"
    )?;
    for i in 0..table.times.len() {
        writeln!(
            f,
            "{},{},{},{}",
            table.times[i],
            table.mean_codeword_feedback[i],
            table.sem_codeword_feedback[i],
            table.discrete_codeword[i]
        )?;
    }
    Ok(())
}

/// Record the measurement record and control stream of closed-loop
/// trajectories, then time each filter alone replaying them. This matches
/// the paper's methodology of quoting full-filter and truncated-filter
/// integration times separately from the closed-loop total.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub trajectories: usize,
    pub steps: usize,
    pub closed_loop_secs: Vec<f64>,
    pub full_filter_secs: Vec<f64>,
    pub truncated_filter_secs: Vec<f64>,
    pub ratio: f64,
}

struct RecordedStreams {
    dq: Vec<f64>,
    controls: Vec<f64>,
    l: usize,
}

pub fn benchmark_filters(ctx: &SimContext, config: &RunConfig) -> Result<BenchReport> {
    if ctx.code.n != 5 {
        return Err(Error::UnsupportedCode("the five-qubit code".into()));
    }
    let params = config.params()?;
    let steps = config.steps();
    let trajectories = config.trajectories.max(1);
    let raw = build_closure(&ctx.code, &ctx.space, Some(1), DEFAULT_BUDGET)?;
    let basis136 = Arc::new(truncate_first_level(&ctx.code, &ctx.space, &raw)?);
    let spec = ControllerSpec::Reduced(basis136.clone());

    let mut closed_loop = Vec::new();
    let mut full_secs = Vec::new();
    let mut trunc_secs = Vec::new();
    for traj in 0..trajectories as u64 {
        // closed-loop run recording the streams
        let l = ctx.code.generators.len();
        let channels = 3 * ctx.code.n;
        let mut streams = RecordedStreams {
            dq: Vec::with_capacity(steps * l),
            controls: Vec::with_capacity(steps * channels),
            l,
        };
        let start = Instant::now();
        let mut sim = crate::engine::CoIntegrator::new(
            ctx,
            &spec,
            params,
            config.scheme,
            config.seed,
            traj,
        )?;
        for _ in 0..steps {
            sim.step()?;
            streams.dq.extend_from_slice(sim.last_record());
            streams.controls.extend_from_slice(&sim.controls().strengths);
        }
        closed_loop.push(start.elapsed().as_secs_f64());

        // full filter alone, driven by the recorded streams
        let mut filter = FullFilter::new(&ctx.code, params)?;
        let mut state = DensityState::new(ctx.rho0.clone());
        let mut scratch = StepScratch::like(&state.rho);
        let start = Instant::now();
        for s in 0..steps {
            filter.set_controls(&streams.controls[s * channels..(s + 1) * channels]);
            controller_step(
                &mut filter,
                &mut state,
                &streams.dq[s * streams.l..(s + 1) * streams.l],
                config.scheme,
                &mut scratch,
            );
        }
        full_secs.push(start.elapsed().as_secs_f64());

        // truncated filter alone on the same streams
        let mut filter = ReducedFilter::new(basis136.clone(), params);
        let mut state = ReducedState::initial(&basis136);
        let mut scratch = StepScratch::like(&state.p);
        let start = Instant::now();
        for s in 0..steps {
            filter.set_controls(&streams.controls[s * channels..(s + 1) * channels]);
            truncated_step(
                &mut filter,
                &mut state,
                &streams.dq[s * streams.l..(s + 1) * streams.l],
                config.scheme,
                &mut scratch,
            );
        }
        trunc_secs.push(start.elapsed().as_secs_f64());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ratio = mean(&full_secs) / mean(&trunc_secs);
    Ok(BenchReport {
        trajectories,
        steps,
        closed_loop_secs: closed_loop,
        full_filter_secs: full_secs,
        truncated_filter_secs: trunc_secs,
        ratio,
    })
}

/// Plain-text export of a coefficient basis: the operator list and the
/// labeled sparse generators as coordinate triplets. The format is
/// documented in the README.
pub fn write_basis_export(basis: &CoefficientBasis, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# coefficient basis export")?;
    writeln!(
        f,
        "code={} n={} l={} coords={} syndrome={} combined={} first_level_generated={} dropped_fb_entries={} dropped_fb_weight={}",
        basis.code_name,
        basis.n,
        basis.l,
        basis.dim(),
        basis.num_syndrome,
        basis.combined,
        basis.first_level_generated,
        basis.dropped_fb_entries,
        basis.dropped_fb_weight
    )?;
    writeln!(f, "[coords]")?;
    for (i, c) in basis.coords.iter().enumerate() {
        let label = c
            .label
            .map(|l| format!(" label={l}"))
            .unwrap_or_default();
        let partner = c
            .partner
            .as_ref()
            .map(|(op, sign, rel)| format!(" partner=({} sign={sign} rel={rel})", op))
            .unwrap_or_default();
        writeln!(
            f,
            "{i} level={} sign={} op=({}){label}{partner}",
            c.level, c.sign, c.op
        )?;
    }
    writeln!(f, "[outcome]")?;
    for (l, row) in basis.outcome_rows.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "gen={l} {}", vals.join(" "))?;
    }
    writeln!(f, "[drift]")?;
    for (r, c, v) in basis.drift.triplets() {
        writeln!(f, "{r} {c} {v}")?;
    }
    for (l, diag) in basis.meas_diag.iter().enumerate() {
        writeln!(f, "[meas gen={l}]")?;
        for (k, v) in diag.iter().enumerate() {
            if *v != 0.0 {
                writeln!(f, "{k} {v}")?;
            }
        }
    }
    let channels = crate::full_filter::control_channels(basis.n);
    for (ch, m) in basis.fb.iter().enumerate() {
        writeln!(f, "[fb ch={}]", channels[ch])?;
        for (r, c, v) in m.triplets() {
            writeln!(f, "{r} {c} {v}")?;
        }
    }
    writeln!(f, "[policy]")?;
    for (ch, row) in basis.policy_rows.iter().enumerate() {
        let entries: Vec<String> = row.iter().map(|(i, w)| format!("{i}:{w}")).collect();
        writeln!(f, "ch={} {}", channels[ch], entries.join(" "))?;
    }
    Ok(())
}

/// key=value configuration file: one pair per line, '#' comments. CLI flags
/// override file values.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{}:{}: expected key=value", path.display(), lineno + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
