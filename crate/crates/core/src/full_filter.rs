//! The exact 2^n-dimensional stochastic quantum filter. It serves both as
//! the simulated physical plant (emitting measurement records) and as the
//! reference controller; both roles advance the state through the same
//! record-driven code path, so a plant and a controller fed the plant's own
//! record stay bit-identical.

use num_complex::Complex64;

use crate::code::CodeSpec;
use crate::error::{Error, Result};
use crate::linalg::{
    add_anticomm_pauli, add_conj_pauli, add_feedback_comm, hermitize, matmul, trace, trace_with,
    CMat,
};
use crate::pauli::{PauliAction, PauliString};
use crate::sde::{self, Scheme, SdeSystem, StepScratch};

/// Physical parameters, all rates in units of gamma and time in 1/gamma.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub gamma: f64,
    pub kappa: f64,
    pub lambda_max: f64,
    pub dt: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, kappa: f64, lambda_max: f64, dt: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma", gamma),
            ("kappa", kappa),
            ("lambda_max", lambda_max),
            ("dt", dt),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be strictly positive")));
            }
        }
        Ok(ModelParams {
            gamma,
            kappa,
            lambda_max,
            dt,
        })
    }

    /// Paper operating point: kappa = 100 gamma, lambda_max = 200 gamma,
    /// gamma dt = 1e-5.
    pub fn defaults() -> Self {
        ModelParams {
            gamma: 1.0,
            kappa: 100.0,
            lambda_max: 200.0,
            dt: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityState {
    pub rho: CMat,
    pub time: f64,
}

impl DensityState {
    pub fn new(rho: CMat) -> Self {
        DensityState { rho, time: 0.0 }
    }
}

/// D[sigma] rho = sigma rho sigma - rho (sigma a Hermitian Pauli realization).
pub fn dissipator(sigma: &CMat, rho: &CMat) -> Result<CMat> {
    if sigma.nrows() != rho.nrows() {
        return Err(Error::DimensionMismatch(sigma.nrows(), rho.nrows()));
    }
    let mut out = matmul(&matmul(sigma, rho), sigma);
    out -= rho;
    Ok(out)
}

/// H[g] rho = g rho + rho g - 2 Tr[g rho] rho.
pub fn h_superop(g: &CMat, rho: &CMat) -> Result<CMat> {
    if g.nrows() != rho.nrows() {
        return Err(Error::DimensionMismatch(g.nrows(), rho.nrows()));
    }
    let tr = crate::linalg::trace_prod(g, rho);
    let mut out = matmul(g, rho);
    out += &matmul(rho, g);
    out.zip_mut_with(rho, |o, r| *o -= 2.0 * tr * r);
    Ok(out)
}

/// All 3n single-qubit feedback channels, ordered (qubit ascending, X,Y,Z).
pub fn control_channels(n: usize) -> Vec<PauliString> {
    crate::code::single_qubit_paulis(n)
}

/// Dense-filter stepper for one code. Holds the per-step control vector so
/// the drift/diffusion evaluators can stay allocation-free.
pub struct FullFilter {
    pub params: ModelParams,
    pub l: usize,
    pub dim: usize,
    error_actions: Vec<PauliAction>,
    gen_actions: Vec<PauliAction>,
    control_actions: Vec<PauliAction>,
    controls: Vec<f64>,
    decay: f64,
}

impl FullFilter {
    pub fn new(code: &CodeSpec, params: ModelParams) -> Result<Self> {
        let error_actions = code
            .error_set
            .iter()
            .map(|e| e.action())
            .collect::<Result<Vec<_>>>()?;
        let gen_actions = code
            .generators
            .iter()
            .map(|g| g.action())
            .collect::<Result<Vec<_>>>()?;
        let control_actions = control_channels(code.n)
            .iter()
            .map(|s| s.action())
            .collect::<Result<Vec<_>>>()?;
        let l = code.generators.len();
        let decay = params.gamma * code.error_set.len() as f64 + params.kappa * l as f64;
        Ok(FullFilter {
            params,
            l,
            dim: 1 << code.n,
            error_actions,
            gen_actions,
            control_actions,
            controls: vec![0.0; 3 * code.n],
            decay,
        })
    }

    pub fn set_controls(&mut self, controls: &[f64]) {
        self.controls.copy_from_slice(controls);
    }

    pub fn zero_controls(&mut self) {
        self.controls.iter_mut().for_each(|c| *c = 0.0);
    }

    /// Measurement record increments dQ_i = 2 sqrt(kappa) Tr[g_i rho] dt + dW_i
    /// from the pre-step state.
    pub fn emit_dq(&self, rho: &CMat, dw: &[f64], dq: &mut [f64]) {
        let c = 2.0 * self.params.kappa.sqrt() * self.params.dt;
        for (i, g) in self.gen_actions.iter().enumerate() {
            dq[i] = c * trace_with(g, rho).re + dw[i];
        }
    }

    pub fn generator_traces(&self, rho: &CMat, out: &mut [f64]) {
        for (i, g) in self.gen_actions.iter().enumerate() {
            out[i] = trace_with(g, rho).re;
        }
    }

    /// Hermitize and rescale to unit trace; returns |Tr - 1| before rescaling.
    pub fn renormalize(rho: &mut CMat) -> f64 {
        hermitize(rho);
        let tr = trace(rho).re;
        let gap = (tr - 1.0).abs();
        if tr != 0.0 {
            rho.mapv_inplace(|z| z / tr);
        }
        gap
    }
}

impl SdeSystem for FullFilter {
    type State = CMat;

    /// Smooth generator part only: depolarizing and measurement dissipators
    /// plus the feedback commutator. The innovation term lives entirely in
    /// `diffusion`, so for a plant fed its own record the stepper reduces to
    /// the textbook scheme driven by the Wiener increments.
    fn drift(&mut self, x: &Self::State, out: &mut Self::State) {
        out.fill(Complex64::new(0.0, 0.0));
        let gamma = self.params.gamma;
        let kappa = self.params.kappa;
        for act in &self.error_actions {
            add_conj_pauli(out, gamma, act, x);
        }
        for act in &self.gen_actions {
            add_conj_pauli(out, kappa, act, x);
        }
        for (i, act) in self.control_actions.iter().enumerate() {
            let lam = self.controls[i];
            if lam != 0.0 {
                add_feedback_comm(out, lam, act, x);
            }
        }
        out.zip_mut_with(x, |o, r| *o -= self.decay * r);
    }

    /// sqrt(kappa) sum_l H[g_l] x (inc_l - 2 sqrt(kappa) Tr[g_l x] dt): the
    /// full innovation against the record increments, evaluated at the
    /// pre-point state.
    fn diffusion(&mut self, x: &Self::State, inc: &[f64], out: &mut Self::State) {
        out.fill(Complex64::new(0.0, 0.0));
        let sk = self.params.kappa.sqrt();
        let dt = self.params.dt;
        let mut w_self = 0.0;
        for (l, act) in self.gen_actions.iter().enumerate() {
            let tr = trace_with(act, x).re;
            let w = sk * (inc[l] - 2.0 * sk * tr * dt);
            add_anticomm_pauli(out, w, act, x);
            w_self -= 2.0 * w * tr;
        }
        out.zip_mut_with(x, |o, r| *o += w_self * r);
    }
}

/// One SDE step of the filter driven by the given measurement record.
/// Used both for the plant (fed its own record) and for a full-filter
/// controller (fed the plant's record).
pub fn controller_step(
    filter: &mut FullFilter,
    state: &mut DensityState,
    dq: &[f64],
    scheme: Scheme,
    scratch: &mut StepScratch<CMat>,
) -> f64 {
    let dt = filter.params.dt;
    sde::step(filter, scheme, dt, &mut state.rho, dq, scratch);
    let gap = FullFilter::renormalize(&mut state.rho);
    state.time += dt;
    gap
}

/// Emits the measurement record from the pre-step state, then advances the
/// plant one step driven by that record. Returns the emitted dQ in `dq`.
pub fn plant_step(
    filter: &mut FullFilter,
    state: &mut DensityState,
    dw: &[f64],
    dq: &mut [f64],
    scheme: Scheme,
    scratch: &mut StepScratch<CMat>,
) -> f64 {
    filter.emit_dq(&state.rho, dw, dq);
    controller_step(filter, state, dq, scheme, scratch)
}

pub fn nan_guard(rho: &CMat, step: usize, time: f64) -> Result<()> {
    use crate::sde::SdeState;
    if !rho.is_finite() {
        return Err(Error::TrajectoryAbort {
            step,
            time,
            reason: "non-finite density matrix entry".into(),
        });
    }
    Ok(())
}
