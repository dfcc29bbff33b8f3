//! Plant/controller co-integration: the full filter as the physical system
//! emitting measurement records, a controller consuming them, and the
//! feedback loop closed through the bang-bang policy.

use std::sync::Arc;
use std::time::Instant;

use ndarray::Array1;

use crate::code::{build_syndrome_space, encoded_zero, CodeSpec, SyndromeSpace};
use crate::error::{Error, Result};
use crate::feedback::{ControlVector, FeedbackPolicy, PolicyOps};
use crate::full_filter::{control_channels, plant_step, ModelParams};
use crate::full_filter::{controller_step, DensityState, FullFilter};
use crate::linalg::{is_psd_within, trace_prod, CMat};
use crate::reduced::{truncated_step, CoefficientBasis, ReducedFilter, ReducedState};
use crate::sde::{NoiseStream, Scheme, SdeState, StepScratch};

/// Shared read-only simulation context for one code.
pub struct SimContext {
    pub code: CodeSpec,
    pub space: SyndromeSpace,
    pub rho0: CMat,
    pub policy_ops: PolicyOps,
}

impl SimContext {
    pub fn new(code: CodeSpec) -> Result<Self> {
        let space = build_syndrome_space(&code)?;
        let rho0 = encoded_zero(&code, &space)?;
        let policy_ops = PolicyOps::new(&space, &control_channels(code.n))?;
        Ok(SimContext {
            code,
            space,
            rho0,
            policy_ops,
        })
    }
}

/// Which state estimator closes the loop.
#[derive(Clone)]
pub enum ControllerSpec {
    /// No controller: controls stay zero (pure decoherence reference).
    None,
    /// Syndrome-probability filter running open-loop (controls zero).
    WonhamNoFeedback(Arc<CoefficientBasis>),
    /// A second copy of the full filter driven by the plant's record.
    Full,
    /// A reduced filter over the given coefficient basis.
    Reduced(Arc<CoefficientBasis>),
}

impl ControllerSpec {
    pub fn label(&self) -> String {
        match self {
            ControllerSpec::None => "none".into(),
            ControllerSpec::WonhamNoFeedback(_) => "wonham-no-feedback".into(),
            ControllerSpec::Full => "full".into(),
            ControllerSpec::Reduced(b) => format!("reduced-{}", b.dim()),
        }
    }
}

enum ControllerState {
    None,
    Wonham {
        filter: ReducedFilter,
        state: ReducedState,
        scratch: StepScratch<Array1<f64>>,
    },
    Full {
        filter: FullFilter,
        state: DensityState,
        scratch: StepScratch<CMat>,
    },
    Reduced {
        filter: ReducedFilter,
        state: ReducedState,
        scratch: StepScratch<Array1<f64>>,
    },
}

/// How often the positivity monitor runs (a soft check, logged only).
const PSD_CHECK_STRIDE: usize = 1000;
const PSD_TOLERANCE: f64 = 1e-6;

pub struct CoIntegrator<'a> {
    ctx: &'a SimContext,
    pub params: ModelParams,
    pub scheme: Scheme,
    plant: FullFilter,
    pub plant_state: DensityState,
    controller: ControllerState,
    policy: FeedbackPolicy,
    noise: NoiseStream,
    dw: Vec<f64>,
    dq: Vec<f64>,
    controls: ControlVector,
    plant_scratch: StepScratch<CMat>,
    pub step_idx: usize,
    pub psd_violations: usize,
}

impl<'a> CoIntegrator<'a> {
    pub fn new(
        ctx: &'a SimContext,
        spec: &ControllerSpec,
        params: ModelParams,
        scheme: Scheme,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        let plant = FullFilter::new(&ctx.code, params)?;
        let plant_state = DensityState::new(ctx.rho0.clone());
        let l = ctx.code.generators.len();
        let controller = match spec {
            ControllerSpec::None => ControllerState::None,
            ControllerSpec::WonhamNoFeedback(basis) => {
                let filter = ReducedFilter::new(basis.clone(), params);
                let state = ReducedState::initial(basis);
                let scratch = StepScratch::like(&state.p);
                ControllerState::Wonham {
                    filter,
                    state,
                    scratch,
                }
            }
            ControllerSpec::Full => {
                let filter = FullFilter::new(&ctx.code, params)?;
                let state = DensityState::new(ctx.rho0.clone());
                let scratch = StepScratch::like(&state.rho);
                ControllerState::Full {
                    filter,
                    state,
                    scratch,
                }
            }
            ControllerSpec::Reduced(basis) => {
                let filter = ReducedFilter::new(basis.clone(), params);
                let state = ReducedState::initial(basis);
                let scratch = StepScratch::like(&state.p);
                ControllerState::Reduced {
                    filter,
                    state,
                    scratch,
                }
            }
        };
        let plant_scratch = StepScratch::like(&plant_state.rho);
        Ok(CoIntegrator {
            ctx,
            params,
            scheme,
            plant,
            plant_state,
            controller,
            policy: FeedbackPolicy::new(params.lambda_max),
            noise: NoiseStream::new(seed, stream),
            dw: vec![0.0; l],
            dq: vec![0.0; l],
            controls: ControlVector::zeros(ctx.code.n),
            plant_scratch,
            step_idx: 0,
            psd_violations: 0,
        })
    }

    /// Feedback strengths from the controller's pre-step state.
    fn compute_controls(&mut self) {
        self.controls = match &self.controller {
            ControllerState::None | ControllerState::Wonham { .. } => {
                ControlVector::zeros(self.ctx.code.n)
            }
            ControllerState::Full { state, .. } => {
                self.policy.from_full(&self.ctx.policy_ops, &state.rho)
            }
            ControllerState::Reduced { filter, state, .. } => {
                self.policy.from_reduced(&filter.basis, &state.p)
            }
        };
    }

    /// One closed-loop step: controls from the controller state, record from
    /// the plant, both states advanced by the same record.
    pub fn step(&mut self) -> Result<()> {
        self.compute_controls();
        self.noise.wiener(self.params.dt, &mut self.dw);
        self.plant.set_controls(&self.controls.strengths);
        plant_step(
            &mut self.plant,
            &mut self.plant_state,
            &self.dw,
            &mut self.dq,
            self.scheme,
            &mut self.plant_scratch,
        );
        match &mut self.controller {
            ControllerState::None => {}
            ControllerState::Wonham {
                filter,
                state,
                scratch,
            } => {
                filter.zero_controls();
                truncated_step(filter, state, &self.dq, self.scheme, scratch);
                crate::reduced::nan_guard(state, self.step_idx)?;
            }
            ControllerState::Full {
                filter,
                state,
                scratch,
            } => {
                filter.set_controls(&self.controls.strengths);
                controller_step(filter, state, &self.dq, self.scheme, scratch);
            }
            ControllerState::Reduced {
                filter,
                state,
                scratch,
            } => {
                filter.set_controls(&self.controls.strengths);
                truncated_step(filter, state, &self.dq, self.scheme, scratch);
                crate::reduced::nan_guard(state, self.step_idx)?;
            }
        }
        self.step_idx += 1;
        if !self.plant_state.rho.is_finite() {
            return Err(Error::TrajectoryAbort {
                step: self.step_idx,
                time: self.plant_state.time,
                reason: "non-finite plant state".into(),
            });
        }
        if self.step_idx % PSD_CHECK_STRIDE == 0
            && !is_psd_within(&self.plant_state.rho, PSD_TOLERANCE)
        {
            self.psd_violations += 1;
            log::warn!(
                "plant positivity monitor: smallest eigenvalue below -{PSD_TOLERANCE} at step {}",
                self.step_idx
            );
        }
        Ok(())
    }

    pub fn codespace_fidelity(&self) -> f64 {
        trace_prod(self.ctx.space.codespace(), &self.plant_state.rho).re
    }

    pub fn codeword_fidelity(&self) -> f64 {
        trace_prod(&self.ctx.rho0, &self.plant_state.rho).re
    }

    pub fn controls(&self) -> &ControlVector {
        &self.controls
    }

    pub fn last_record(&self) -> &[f64] {
        &self.dq
    }

    pub fn controller_reduced_state(&self) -> Option<&ReducedState> {
        match &self.controller {
            ControllerState::Wonham { state, .. } | ControllerState::Reduced { state, .. } => {
                Some(state)
            }
            _ => None,
        }
    }

    pub fn controller_dense_state(&self) -> Option<&DensityState> {
        match &self.controller {
            ControllerState::Full { state, .. } => Some(state),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlRecording {
    Off,
    AtStride,
    EveryStep,
}

/// Time series from one noise realization.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub controller: String,
    pub times: Vec<f64>,
    pub codespace: Vec<f64>,
    pub codeword: Vec<f64>,
    /// Control signs (-1/0/+1 per channel) when recording is enabled.
    pub control_signs: Vec<Vec<i8>>,
    pub wall_secs: f64,
    pub psd_violations: usize,
}

/// Run one trajectory: `steps` SDE steps with fidelities sampled every
/// `stride` steps (plus the initial point).
pub fn co_integrate(
    ctx: &SimContext,
    spec: &ControllerSpec,
    params: ModelParams,
    scheme: Scheme,
    seed: u64,
    stream: u64,
    steps: usize,
    stride: usize,
    recording: ControlRecording,
) -> Result<TrajectoryRecord> {
    let start = Instant::now();
    let mut sim = CoIntegrator::new(ctx, spec, params, scheme, seed, stream)?;
    let samples = steps / stride + 1;
    let mut record = TrajectoryRecord {
        seed,
        stream,
        controller: spec.label(),
        times: Vec::with_capacity(samples),
        codespace: Vec::with_capacity(samples),
        codeword: Vec::with_capacity(samples),
        control_signs: Vec::new(),
        wall_secs: 0.0,
        psd_violations: 0,
    };
    record.times.push(0.0);
    record.codespace.push(sim.codespace_fidelity());
    record.codeword.push(sim.codeword_fidelity());
    for s in 1..=steps {
        sim.step().map_err(|e| {
            log::error!("trajectory (seed {seed}, stream {stream}) aborted: {e}");
            e
        })?;
        let sampled = s % stride == 0;
        if sampled {
            record.times.push(sim.plant_state.time);
            record.codespace.push(sim.codespace_fidelity());
            record.codeword.push(sim.codeword_fidelity());
        }
        match recording {
            ControlRecording::Off => {}
            ControlRecording::AtStride if !sampled => {}
            _ => record.control_signs.push(sim.controls().signs()),
        }
    }
    record.wall_secs = start.elapsed().as_secs_f64();
    record.psd_violations = sim.psd_violations;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::five_qubit_code;
    use crate::reduced::{build_closure, truncate_first_level, wonham_basis, DEFAULT_BUDGET};

    fn quick_params() -> ModelParams {
        ModelParams::defaults()
    }

    #[test]
    fn full_controller_tracks_plant_exactly() {
        // the controller is a copy of the plant driven by the plant's own
        // record, so the two stay bit-identical
        let ctx = SimContext::new(five_qubit_code()).unwrap();
        let mut sim = CoIntegrator::new(
            &ctx,
            &ControllerSpec::Full,
            quick_params(),
            Scheme::PredictorCorrector,
            7,
            0,
        )
        .unwrap();
        for _ in 0..300 {
            sim.step().unwrap();
        }
        let ctrl = sim.controller_dense_state().unwrap();
        assert_eq!(
            crate::linalg::max_abs_diff(&ctrl.rho, &sim.plant_state.rho),
            0.0
        );
    }

    #[test]
    fn deterministic_replay_is_bit_identical() {
        let ctx = SimContext::new(five_qubit_code()).unwrap();
        let basis = Arc::new({
            let raw = build_closure(&ctx.code, &ctx.space, Some(1), DEFAULT_BUDGET).unwrap();
            truncate_first_level(&ctx.code, &ctx.space, &raw).unwrap()
        });
        let run = || {
            co_integrate(
                &ctx,
                &ControllerSpec::Reduced(basis.clone()),
                quick_params(),
                Scheme::PredictorCorrector,
                42,
                3,
                500,
                100,
                ControlRecording::EveryStep,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.codespace, b.codespace);
        assert_eq!(a.codeword, b.codeword);
        assert_eq!(a.control_signs, b.control_signs);
    }

    #[test]
    fn frozen_start_without_rates() {
        // gamma ~ 0, zero rates, start in the codespace: fidelities pinned at 1
        let ctx = SimContext::new(five_qubit_code()).unwrap();
        let params = ModelParams::new(1e-300, 1e-300, 1e-300, 1e-5).unwrap();
        let mut sim = CoIntegrator::new(
            &ctx,
            &ControllerSpec::None,
            params,
            Scheme::PredictorCorrector,
            1,
            0,
        )
        .unwrap();
        for _ in 0..100 {
            sim.step().unwrap();
        }
        assert!((sim.codespace_fidelity() - 1.0).abs() < 1e-12);
        assert!((sim.codeword_fidelity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wonham_matches_plant_syndrome_probabilities() {
        // controls = 0: per-step agreement between Tr[Pi_a rho] and the
        // Wonham coordinates over a short trajectory
        let ctx = SimContext::new(five_qubit_code()).unwrap();
        let basis = Arc::new(wonham_basis(&ctx.code, &ctx.space).unwrap());
        let mut sim = CoIntegrator::new(
            &ctx,
            &ControllerSpec::WonhamNoFeedback(basis),
            quick_params(),
            Scheme::PredictorCorrector,
            11,
            0,
        )
        .unwrap();
        let mut worst = 0.0f64;
        for _ in 0..2000 {
            sim.step().unwrap();
            let p = sim.controller_reduced_state().unwrap().p.clone();
            for (a, pi) in ctx.space.projectors.iter().enumerate() {
                let got = trace_prod(pi, &sim.plant_state.rho).re;
                worst = worst.max((got - p[a]).abs());
            }
        }
        assert!(worst < 1e-6, "wonham deviation {worst}");
    }
}
