//! The bang-bang feedback law lambda = lambda_max * sgn(Tr[-i[Pi_0, sigma] rho]),
//! computable from the full density matrix or from a reduced filter's
//! first-level coefficients.

use crate::code::SyndromeSpace;
use crate::error::Result;
use crate::linalg::{matmul, trace_prod, CMat};
use crate::pauli::PauliString;
use crate::reduced::CoefficientBasis;

/// 3n feedback strengths, indexed (qubit ascending, X,Y,Z); each entry is
/// -lambda_max, 0 or +lambda_max.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector {
    pub strengths: Vec<f64>,
}

impl ControlVector {
    pub fn zeros(n: usize) -> Self {
        ControlVector {
            strengths: vec![0.0; 3 * n],
        }
    }

    /// Signs as -1/0/+1, convenient for compact recording.
    pub fn signs(&self) -> Vec<i8> {
        self.strengths
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }
}

/// Behavior at an exact sign tie. Without feedback the state never develops
/// coherences between syndrome spaces, so a zero-at-tie loop starting in the
/// codespace computes an exactly zero argument forever and never actuates;
/// keeping the drive on at ties is what lets the bang-bang loop bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// No actuation without information: sgn(0) = 0.
    Zero,
    /// Bang-bang drive stays on through ties: sgn(0) = +1.
    AlwaysOn,
}

fn bang_bang(s: f64, lambda_max: f64, deadband: f64, tie: TieRule) -> f64 {
    if s > deadband {
        lambda_max
    } else if s < -deadband {
        -lambda_max
    } else {
        match tie {
            TieRule::Zero => 0.0,
            TieRule::AlwaysOn => lambda_max,
        }
    }
}

/// Precomputed Hermitian observables -i[Pi_0, sigma_j^(m)] per control channel.
pub struct PolicyOps {
    pub ops: Vec<CMat>,
}

impl PolicyOps {
    pub fn new(space: &SyndromeSpace, channels: &[PauliString]) -> Result<PolicyOps> {
        let pi0 = space.codespace();
        let mut ops = Vec::with_capacity(channels.len());
        for sigma in channels {
            let sd = sigma.realize()?;
            let comm = &matmul(pi0, &sd) - &matmul(&sd, pi0);
            // -i * comm is Hermitian
            ops.push(comm.mapv(|z| num_complex::Complex64::new(0.0, -1.0) * z));
        }
        Ok(PolicyOps { ops })
    }

    /// The raw policy argument Tr[-i[Pi_0, sigma] rho] per channel.
    pub fn arguments(&self, rho: &CMat, out: &mut [f64]) {
        for (i, op) in self.ops.iter().enumerate() {
            out[i] = trace_prod(op, rho).re;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeedbackPolicy {
    pub lambda_max: f64,
    pub deadband: f64,
    pub tie: TieRule,
}

impl FeedbackPolicy {
    /// Closed-loop default: drive on through ties.
    pub fn new(lambda_max: f64) -> Self {
        FeedbackPolicy {
            lambda_max,
            deadband: 0.0,
            tie: TieRule::AlwaysOn,
        }
    }

    pub fn with_tie_zero(lambda_max: f64) -> Self {
        FeedbackPolicy {
            lambda_max,
            deadband: 0.0,
            tie: TieRule::Zero,
        }
    }

    pub fn from_full(&self, ops: &PolicyOps, rho: &CMat) -> ControlVector {
        let strengths = ops
            .ops
            .iter()
            .map(|op| bang_bang(trace_prod(op, rho).re, self.lambda_max, self.deadband, self.tie))
            .collect();
        ControlVector { strengths }
    }

    /// Strengths read off the designated combined first-level coefficients.
    /// Agrees in sign with `from_full` whenever `p` is the exact projection
    /// of rho onto the basis.
    pub fn from_reduced(&self, basis: &CoefficientBasis, p: &ndarray::Array1<f64>) -> ControlVector {
        let strengths = basis
            .policy_arguments_iter(p)
            .map(|s| bang_bang(s, self.lambda_max, self.deadband, self.tie))
            .collect();
        ControlVector { strengths }
    }
}
