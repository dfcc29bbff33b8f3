//! Canonical forms for feedback-coefficient operators.
//!
//! Every operator the closure generates has the shape
//! phase * L * Pi_0 * R with L, R unsigned Pauli words. Two such products
//! are equal up to phase iff the word pair is related by stabilizer
//! multiplication on either side together with a simultaneous logical
//! (normalizer) move. The canonical form minimizes the word pair over that
//! orbit and normalizes the prefactor to 1 or i by word-weight parity; the
//! residual phase of any generated term is then a real sign, which is what
//! makes the lowered generator matrices exactly real.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::code::{CodeSpec, SyndromeSpace};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::pauli::{pack_word, PauliString, Phase};

/// prefactor * left * Pi_0 * right, prefactor restricted to {1, i} and the
/// word pair in canonical (orbit-minimal) form. Equality of canonical forms
/// is equality of dense realizations up to a tracked real sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoefficientOp {
    pub prefactor: Phase,
    pub left: PauliString,
    pub right: PauliString,
}

impl CoefficientOp {
    pub fn realize(&self, pi0: &CMat) -> Result<CMat> {
        let la = self.left.action()?;
        let ra = self.right.action()?;
        let d = pi0.nrows();
        let mut out = CMat::zeros((d, d));
        // out = prefactor * L Pi0 R: (L Pi0 R)[pi_L(i), pi_R^{-1}... build by
        // entries: (L Pi0)[la(i), j] = phi_i Pi0[i, j]; then right-multiply.
        for i in 0..d {
            let li = i ^ la.flip_mask;
            for j in 0..d {
                let rj = j ^ ra.flip_mask;
                // (L Pi0 R)[li, rj] = la.phases[i] Pi0[i, j] ra.phases[rj]
                out[(li, rj)] += la.phases[i] * pi0[(i, j)] * ra.phases[rj];
            }
        }
        let pf = self.prefactor.to_complex();
        if pf != Complex64::new(1.0, 0.0) {
            out.mapv_inplace(|z| pf * z);
        }
        Ok(out)
    }

    pub fn word_weight_parity(&self) -> u8 {
        ((self.left.weight() + self.right.weight()) % 2) as u8
    }
}

impl std::fmt::Display for CoefficientOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pre = match self.prefactor {
            Phase::PlusOne => "1",
            Phase::PlusI => "i",
            _ => "?",
        };
        write!(f, "{} {} P0 {}", pre, self.left, self.right)
    }
}

/// Word-pair key for hash maps.
pub type ClassKey = u64;

fn class_key(left: &PauliString, right: &PauliString) -> ClassKey {
    ((pack_word(&left.letters) as u64) << 32) | pack_word(&right.letters) as u64
}

/// Orbit data shared by all canonicalizations for one code.
pub struct CanonCtx {
    pub n: usize,
    stabilizers: Vec<PauliString>,
    /// {I, Xbar, Ybar, Zbar} as unsigned words.
    transversal: Vec<PauliString>,
    /// Error word per syndrome-space index (identity for index 0).
    pub e_words: Vec<PauliString>,
    /// (packed L, packed R) -> (canonical words, folded phase adjustment)
    memo: HashMap<ClassKey, (PauliString, PauliString, Phase)>,
}

impl CanonCtx {
    pub fn new(code: &CodeSpec, space: &SyndromeSpace) -> Result<CanonCtx> {
        let stabilizers = code.stabilizer_group()?;
        let zbar = code.logical_z.unsigned();
        let xbar = code.logical_x()?.unsigned();
        let ybar = xbar.multiply(&zbar)?.unsigned();
        let transversal = vec![
            PauliString::identity(code.n),
            xbar,
            ybar,
            zbar,
        ];
        let mut e_words = vec![PauliString::identity(code.n)];
        e_words.extend(code.error_set.iter().map(|e| e.unsigned()));
        if e_words.len() != space.num_projectors() {
            return Err(Error::Internal(
                "error words and projectors out of step".into(),
            ));
        }
        Ok(CanonCtx {
            n: code.n,
            stabilizers,
            transversal,
            e_words,
            memo: HashMap::new(),
        })
    }

    /// Canonicalize phase * left * Pi_0 * right. Returns the canonical
    /// operator, its class key, and the residual sign so that the input
    /// operator equals sign * canonical. A residual of +/-i means the input
    /// cannot arise in the closure and signals a bookkeeping bug.
    pub fn canonicalize(
        &mut self,
        phase: Phase,
        left: &PauliString,
        right: &PauliString,
    ) -> Result<(ClassKey, CoefficientOp, i8)> {
        let tau = phase.mul(left.phase).mul(right.phase);
        let lw = left.unsigned();
        let rw = right.unsigned();
        let raw_key = class_key(&lw, &rw);
        let (min_l, min_r, adj) = match self.memo.get(&raw_key) {
            Some(hit) => hit.clone(),
            None => {
                let computed = self.reduce(&lw, &rw)?;
                self.memo.insert(raw_key, computed.clone());
                computed
            }
        };
        // input = tau * L Pi0 R = tau * adj^{-1}... adj already folds the
        // move phases and the {1,i} prefactor normalization: input =
        // (tau * adj) * canonical.
        let residual = tau.mul(adj);
        let sign = match residual {
            Phase::PlusOne => 1i8,
            Phase::MinusOne => -1i8,
            _ => {
                return Err(Error::Internal(format!(
                    "imaginary residual phase for {lw} Pi0 {rw}"
                )))
            }
        };
        let parity = ((min_l.weight() + min_r.weight()) % 2) as u8;
        let op = CoefficientOp {
            prefactor: if parity == 0 { Phase::PlusOne } else { Phase::PlusI },
            left: min_l.clone(),
            right: min_r.clone(),
        };
        Ok((class_key(&min_l, &min_r), op, sign))
    }

    /// Orbit minimization: returns (L*, R*, adj) with
    /// L Pi0 R = (phi_L phi_R) L* Pi0 R* and adj = phi_L phi_R / prefactor(L*,R*),
    /// so that (input phase)*(adj) is the coefficient on the canonical op.
    fn reduce(&self, lw: &PauliString, rw: &PauliString) -> Result<(PauliString, PauliString, Phase)> {
        let mut best: Option<(PauliString, PauliString, Phase)> = None;
        for nmove in &self.transversal {
            let ln = lw.multiply(nmove)?;
            let nr = nmove.multiply(rw)?;
            let mut best_l: Option<PauliString> = None;
            for s in &self.stabilizers {
                let cand = ln.multiply(s)?;
                if best_l.as_ref().map_or(true, |b| cand.letters < b.letters) {
                    best_l = Some(cand);
                }
            }
            let mut best_r: Option<PauliString> = None;
            for s in &self.stabilizers {
                let cand = s.multiply(&nr)?;
                if best_r.as_ref().map_or(true, |b| cand.letters < b.letters) {
                    best_r = Some(cand);
                }
            }
            let bl = best_l.unwrap();
            let br = best_r.unwrap();
            let better = match &best {
                None => true,
                Some((cl, cr, _)) => {
                    (&bl.letters, &br.letters) < (&cl.letters, &cr.letters)
                }
            };
            if better {
                let phi = bl.phase.mul(br.phase);
                best = Some((bl.unsigned(), br.unsigned(), phi));
            }
        }
        let (min_l, min_r, phi) = best.unwrap();
        let parity = (min_l.weight() + min_r.weight()) % 2;
        let prefactor = if parity == 0 { Phase::PlusOne } else { Phase::PlusI };
        // input(unphased) = phi * (minL Pi0 minR) = (phi / prefactor) * canonical
        let adj = phi.mul(prefactor.conj());
        Ok((min_l, min_r, adj))
    }

    /// Number of orbit moves (diagnostics).
    pub fn orbit_size(&self) -> usize {
        self.transversal.len() * self.stabilizers.len() * self.stabilizers.len()
    }
}
