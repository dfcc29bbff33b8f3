//! Reduced-dimensional filters: the Wonham filter on the syndrome simplex,
//! the symbolic closure of feedback-coefficient operators, its first-level
//! truncation, and the reduced SDE propagator.

mod canon;
mod closure;

pub use canon::{CanonCtx, ClassKey, CoefficientOp};
pub use closure::{build_closure, truncate_first_level, truncate_minimal, DEFAULT_BUDGET};

use std::sync::Arc;

use ndarray::Array1;

use crate::code::{CodeSpec, ErrorLabel, SyndromeSpace};
use crate::error::{Error, Result};
use crate::full_filter::ModelParams;
use crate::linalg::CMat;
use crate::sde::{self, Scheme, SdeSystem, StepScratch};
use crate::sparse::SparseMat;

/// One coordinate of a coefficient basis. For combined bases a coordinate
/// stands for a commutator pair: its value is the representative's
/// coefficient, with the partner constrained to rel * value.
#[derive(Debug, Clone)]
pub struct Coord {
    pub op: CoefficientOp,
    /// Tracked element = sign * op (syndrome elements are +Pi_a exactly).
    pub sign: i8,
    /// Feedback-transition distance from the syndrome block.
    pub level: usize,
    /// Syndrome label for block-0 coordinates.
    pub label: Option<ErrorLabel>,
    /// (partner op, partner sign, rel): p_partner = rel * p_rep.
    pub partner: Option<(CoefficientOp, i8, i8)>,
}

/// Ordered operator set plus the lowered sparse generators defining a
/// reduced filter. All matrix entries are rate-free exact integers or
/// half-integers; gamma, kappa and lambda multiply at propagation time.
pub struct CoefficientBasis {
    pub code_name: String,
    pub n: usize,
    pub l: usize,
    pub num_syndrome: usize,
    pub coords: Vec<Coord>,
    /// Noise generator including the -|error_set| diagonal; times gamma this
    /// restricts to Lambda on the syndrome block.
    pub drift: SparseMat,
    /// Per generator: diagonal innovation coefficients d_k = s_L + s_R.
    pub meas_diag: Vec<Vec<f64>>,
    /// Per coordinate: sum_l (d^2/2 - 2) <= 0, the measurement-dissipator
    /// decay (times kappa).
    pub meas_decay: Vec<f64>,
    /// Per generator: outcome row h_l over the syndrome block.
    pub outcome_rows: Vec<Vec<f64>>,
    /// Per control channel (qubit ascending, X,Y,Z).
    pub fb: Vec<SparseMat>,
    /// Per control channel: sparse row whose dot with p is the policy
    /// argument Tr[-i[Pi_0, sigma] rho].
    pub policy_rows: Vec<Vec<(usize, f64)>>,
    /// Combined-coordinate index per control channel, when combined.
    pub control_index: Vec<Option<usize>>,
    pub combined: bool,
    pub max_level: Option<usize>,
    /// Count of first-level feedback terms generated from the syndrome block
    /// (2 per commutator: 6n(3n+1) for a perfect non-degenerate code).
    pub first_level_generated: usize,
    /// Feedback couplings into discarded levels: entry count and total
    /// absolute weight.
    pub dropped_fb_entries: usize,
    pub dropped_fb_weight: f64,
    /// (T, E): combine and expand maps, for combined bases.
    pub combiner: Option<(SparseMat, SparseMat)>,
}

impl CoefficientBasis {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        let max = self.coords.iter().map(|c| c.level).max().unwrap_or(0);
        let mut counts = vec![0usize; max + 1];
        for c in &self.coords {
            counts[c.level] += 1;
        }
        counts
    }

    /// Dense realization of coordinate k's tracked element.
    pub fn realize_coord(&self, k: usize, pi0: &CMat) -> Result<CMat> {
        let coord = &self.coords[k];
        let mut m = coord.op.realize(pi0)?;
        if coord.sign < 0 {
            m.mapv_inplace(|z| -z);
        }
        Ok(m)
    }

    /// Policy arguments: one value per control channel.
    pub fn policy_arguments_iter<'a>(
        &'a self,
        p: &'a Array1<f64>,
    ) -> impl Iterator<Item = f64> + 'a {
        self.policy_rows
            .iter()
            .map(move |row| row.iter().map(|&(idx, w)| w * p[idx]).sum())
    }

    /// Exact projection of a density matrix onto every coordinate: the real
    /// part of Tr[element rho]. Oracle used by the consistency tests.
    pub fn project_state(&self, space: &SyndromeSpace, rho: &CMat) -> Result<Array1<f64>> {
        let pi0 = space.codespace();
        let mut out = Array1::zeros(self.dim());
        for k in 0..self.dim() {
            let m = self.realize_coord(k, pi0)?;
            out[k] = crate::linalg::trace_prod(&m, rho).re;
        }
        Ok(out)
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} coordinates ({}), syndrome block {}, levels {:?}, first-level terms {}, dropped fb couplings {} (|w| = {})",
            self.code_name,
            self.dim(),
            if self.combined { "combined" } else { "raw" },
            self.num_syndrome,
            self.level_counts(),
            self.first_level_generated,
            self.dropped_fb_entries,
            self.dropped_fb_weight,
        )
    }
}

/// Real coefficient vector over a basis's coordinates.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub p: Array1<f64>,
    pub time: f64,
}

impl ReducedState {
    /// All weight on the no-error syndrome coordinate, zeros elsewhere
    /// (the exact projection of the encoded initial state).
    pub fn initial(basis: &CoefficientBasis) -> Self {
        let mut p = Array1::zeros(basis.dim());
        p[0] = 1.0;
        ReducedState { p, time: 0.0 }
    }

    pub fn syndrome_block<'a>(&'a self, basis: &CoefficientBasis) -> &'a [f64] {
        &self.p.as_slice().unwrap()[..basis.num_syndrome]
    }
}

/// Record-driven propagator for a coefficient basis.
pub struct ReducedFilter {
    pub basis: Arc<CoefficientBasis>,
    pub params: ModelParams,
    controls: Vec<f64>,
}

impl ReducedFilter {
    pub fn new(basis: Arc<CoefficientBasis>, params: ModelParams) -> Self {
        let n = basis.n;
        ReducedFilter {
            basis,
            params,
            controls: vec![0.0; 3 * n],
        }
    }

    pub fn set_controls(&mut self, controls: &[f64]) {
        self.controls.copy_from_slice(controls);
    }

    pub fn zero_controls(&mut self) {
        self.controls.iter_mut().for_each(|c| *c = 0.0);
    }

    fn measured_means(&self, p: &Array1<f64>, out: &mut [f64]) {
        let ps = p.as_slice().unwrap();
        for (l, row) in self.basis.outcome_rows.iter().enumerate() {
            let mut m = 0.0;
            for (a, h) in row.iter().enumerate() {
                m += h * ps[a];
            }
            out[l] = m;
        }
    }

    /// Rescale the syndrome block to sum 1; first-level coordinates are
    /// rescaled by the same factor. Returns |sum - 1| before rescaling.
    pub fn renormalize(basis: &CoefficientBasis, p: &mut Array1<f64>) -> f64 {
        let s: f64 = p.as_slice().unwrap()[..basis.num_syndrome].iter().sum();
        let gap = (s - 1.0).abs();
        if s != 0.0 {
            p.mapv_inplace(|v| v / s);
        }
        gap
    }
}

impl SdeSystem for ReducedFilter {
    type State = Array1<f64>;

    /// Smooth generator part only; the innovation term lives in `diffusion`,
    /// mirroring the dense filter's split so the two stay step-equivalent.
    fn drift(&mut self, x: &Self::State, out: &mut Self::State) {
        let basis = &self.basis;
        let gamma = self.params.gamma;
        let kappa = self.params.kappa;
        out.fill(0.0);
        let xs = x.as_slice().unwrap();
        let os = out.as_slice_mut().unwrap();
        basis.drift.apply(gamma, xs, os);
        for k in 0..basis.dim() {
            os[k] += kappa * basis.meas_decay[k] * xs[k];
        }
        for (ch, mat) in basis.fb.iter().enumerate() {
            let lam = self.controls[ch];
            if lam != 0.0 {
                mat.apply(lam, xs, os);
            }
        }
    }

    /// sqrt(kappa) (d_l - 2 m_l) p (inc_l - 2 sqrt(kappa) m_l dt) with
    /// m_l = h_l . p over the syndrome block, at the pre-point state.
    fn diffusion(&mut self, x: &Self::State, inc: &[f64], out: &mut Self::State) {
        let basis = &self.basis;
        let sk = self.params.kappa.sqrt();
        let dt = self.params.dt;
        out.fill(0.0);
        let xs = x.as_slice().unwrap();
        let os = out.as_slice_mut().unwrap();
        let mut means = [0.0; 16];
        self.measured_means(x, &mut means[..basis.l]);
        for (l, diag) in basis.meas_diag.iter().enumerate() {
            let m = means[l];
            let w = sk * (inc[l] - 2.0 * sk * m * dt);
            for k in 0..basis.dim() {
                os[k] += w * (diag[k] - 2.0 * m) * xs[k];
            }
        }
    }
}

/// One step of the truncated filter driven by the measurement record dq,
/// with the current feedback strengths already set on the filter.
pub fn truncated_step(
    filter: &mut ReducedFilter,
    state: &mut ReducedState,
    dq: &[f64],
    scheme: Scheme,
    scratch: &mut StepScratch<Array1<f64>>,
) -> f64 {
    let dt = filter.params.dt;
    sde::step(filter, scheme, dt, &mut state.p, dq, scratch);
    let gap = ReducedFilter::renormalize(&filter.basis, &mut state.p);
    state.time += dt;
    gap
}

/// Syndrome-probability (Wonham) basis: the closure truncated to level 0.
pub fn wonham_basis(code: &CodeSpec, space: &SyndromeSpace) -> Result<CoefficientBasis> {
    build_closure(code, space, Some(0), DEFAULT_BUDGET)
}

/// One Wonham step: the level-0 filter with no feedback, driven by dq.
pub fn wonham_step(
    filter: &mut ReducedFilter,
    state: &mut ReducedState,
    dq: &[f64],
    scheme: Scheme,
    scratch: &mut StepScratch<Array1<f64>>,
) -> f64 {
    filter.zero_controls();
    truncated_step(filter, state, dq, scheme, scratch)
}

/// Independent construction of the Wonham drift generator (rate-free), from
/// syndrome XOR transitions only. Cross-checks the closure's level-0 block.
pub fn wonham_generator(code: &CodeSpec, space: &SyndromeSpace) -> Result<SparseMat> {
    let num = space.num_projectors();
    let mut triplets = Vec::new();
    for a in 0..num {
        triplets.push((a, a, -(code.error_set.len() as f64)));
    }
    for sigma in &code.error_set {
        let c = code.syndrome_of(sigma)?;
        for a in 0..num {
            let target: Vec<i8> = space.syndromes[a]
                .iter()
                .zip(&c)
                .map(|(&s, &f)| s * f)
                .collect();
            let b = space.index_of_syndrome(&target).ok_or_else(|| {
                Error::InvalidCode(format!(
                    "noise {sigma} maps syndrome {a} outside the projector set"
                ))
            })?;
            triplets.push((b, a, 1.0));
        }
    }
    Ok(SparseMat::from_triplets(num, num, &triplets))
}

/// Check NaN-freeness of a reduced state.
pub fn nan_guard(state: &ReducedState, step: usize) -> Result<()> {
    if !state.p.iter().all(|v| v.is_finite()) {
        return Err(Error::TrajectoryAbort {
            step,
            time: state.time,
            reason: "non-finite reduced-filter coordinate".into(),
        });
    }
    Ok(())
}
