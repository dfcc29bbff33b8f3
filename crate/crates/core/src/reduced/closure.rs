//! Symbolic closure of the filter dynamics over feedback-coefficient
//! operators, level-bounded truncation, and the pair combiner.
//!
//! Starting from the syndrome projectors, three generator applications are
//! iterated until closure: noise conjugation sigma C sigma (level
//! preserving), measurement g C + C g (diagonal, rewritten through the
//! outcome table), and the feedback commutator pair -i C sigma, +i sigma C
//! (level +/- 1). The matrix elements collected along the way are exact
//! signs, so the lowered generators are integer matrices.

use std::collections::HashMap;

use crate::code::{CodeSpec, SyndromeSpace};
use crate::error::{Error, Result};
use crate::full_filter::control_channels;
use crate::pauli::{PauliString, Phase};
use crate::sparse::SparseMat;

use super::canon::{CanonCtx, ClassKey, CoefficientOp};
use super::{CoefficientBasis, Coord};

pub const DEFAULT_BUDGET: usize = 1 << 20;

struct PendingOp {
    key: ClassKey,
    op: CoefficientOp,
    sign: i8,
    level: usize,
}

struct Builder {
    ctx: CanonCtx,
    ops: Vec<PendingOp>,
    index: HashMap<ClassKey, usize>,
    budget: usize,
}

impl Builder {
    /// Expand sign_k * phase * left * Pi0 * right over known ops, creating the
    /// target if allowed. Returns Some((target, coef)) or None when dropped.
    fn resolve(
        &mut self,
        phase: Phase,
        left: &PauliString,
        right: &PauliString,
        source_sign: i8,
        create_level: Option<usize>,
    ) -> Result<Option<(usize, f64)>> {
        let (key, op, ratio) = self.ctx.canonicalize(phase, left, right)?;
        if let Some(&idx) = self.index.get(&key) {
            let coef = (source_sign * ratio * self.ops[idx].sign) as f64;
            return Ok(Some((idx, coef)));
        }
        let level = match create_level {
            Some(lvl) => lvl,
            None => return Ok(None),
        };
        if self.ops.len() >= self.budget {
            return Err(Error::ClosureBudget {
                count: self.ops.len() + 1,
                budget: self.budget,
            });
        }
        let idx = self.ops.len();
        self.index.insert(key, idx);
        self.ops.push(PendingOp {
            key,
            op,
            sign: 1,
            level,
        });
        let coef = (source_sign * ratio) as f64;
        Ok(Some((idx, coef)))
    }

    /// The two commutator pieces of feedback channel sigma on op k, as a
    /// net expansion (zero-coefficient targets dropped).
    fn feedback_expansion(
        &mut self,
        k: usize,
        sigma: &PauliString,
        create_level: Option<usize>,
    ) -> Result<(Vec<(usize, f64)>, usize, f64)> {
        let (pre, left, right, sign) = {
            let o = &self.ops[k];
            (o.op.prefactor, o.op.left.clone(), o.op.right.clone(), o.sign)
        };
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(2);
        let mut dropped_entries = 0usize;
        let mut dropped_weight = 0.0f64;
        // -i * elem * sigma
        let r1 = right.multiply(sigma)?;
        let p1 = self.resolve(pre.mul(Phase::MinusI), &left, &r1, sign, create_level)?;
        // +i * sigma * elem
        let l2 = sigma.multiply(&left)?;
        let p2 = self.resolve(pre.mul(Phase::PlusI), &l2, &right, sign, create_level)?;
        for piece in [p1, p2] {
            match piece {
                Some((idx, coef)) => terms.push((idx, coef)),
                None => {
                    dropped_entries += 1;
                    dropped_weight += 1.0;
                }
            }
        }
        // merge duplicate targets; cancellation deletes the term
        terms.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some((pi, pc)) if *pi == i => *pc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Ok((merged, dropped_entries, dropped_weight))
    }
}

/// Build the coefficient basis by breadth-first closure up to `max_level`
/// (None = until closed). The syndrome block occupies indices
/// 0..num_projectors in the projector order; deeper levels are sorted by
/// canonical words.
pub fn build_closure(
    code: &CodeSpec,
    space: &SyndromeSpace,
    max_level: Option<usize>,
    budget: usize,
) -> Result<CoefficientBasis> {
    if !space.complete {
        return Err(Error::InvalidCode(
            "reduced filters need a complete syndrome-projector set".into(),
        ));
    }
    let ctx = CanonCtx::new(code, space)?;
    let mut b = Builder {
        ctx,
        ops: Vec::new(),
        index: HashMap::new(),
        budget,
    };

    // seed: the syndrome projectors, signed so each element equals +Pi_a
    let e_words = b.ctx.e_words.clone();
    for (a, e) in e_words.iter().enumerate() {
        let (key, op, ratio) = b.ctx.canonicalize(Phase::PlusOne, e, e)?;
        if b.index.insert(key, a).is_some() {
            return Err(Error::InvalidCode(format!(
                "syndrome projector {a} duplicates an earlier class"
            )));
        }
        b.ops.push(PendingOp {
            key,
            op,
            sign: ratio,
            level: 0,
        });
    }
    let num_syndrome = space.num_projectors();

    let error_words: Vec<PauliString> = code.error_set.iter().map(|e| e.unsigned()).collect();
    let channels: Vec<PauliString> = control_channels(code.n);

    let mut first_level_generated = 0usize;
    let mut dropped_entries = 0usize;
    let mut dropped_weight = 0.0f64;

    let mut level_start = 0usize;
    let mut lvl = 0usize;
    loop {
        // close the current level under noise (discovery only)
        let mut i = level_start;
        while i < b.ops.len() {
            debug_assert_eq!(b.ops[i].level, lvl);
            let (pre, left, right) = {
                let o = &b.ops[i];
                (o.op.prefactor, o.op.left.clone(), o.op.right.clone())
            };
            for sigma in &error_words {
                let l2 = sigma.multiply(&left)?;
                let r2 = right.multiply(sigma)?;
                let (key, op, _ratio) = b.ctx.canonicalize(pre, &l2, &r2)?;
                match b.index.get(&key) {
                    Some(&idx) => {
                        if b.ops[idx].level != lvl {
                            return Err(Error::Internal(format!(
                                "noise connected level {lvl} to level {}",
                                b.ops[idx].level
                            )));
                        }
                    }
                    None => {
                        if b.ops.len() >= b.budget {
                            return Err(Error::ClosureBudget {
                                count: b.ops.len() + 1,
                                budget: b.budget,
                            });
                        }
                        let idx = b.ops.len();
                        b.index.insert(key, idx);
                        b.ops.push(PendingOp {
                            key,
                            op,
                            sign: 1,
                            level: lvl,
                        });
                    }
                }
            }
            i += 1;
        }
        let level_end = b.ops.len();

        // feedback discovery into the next level
        let allow_next = max_level.map_or(true, |m| lvl < m);
        let create = if allow_next { Some(lvl + 1) } else { None };
        for k in level_start..level_end {
            for sigma in &channels {
                let (terms, de, dw) = b.feedback_expansion(k, sigma, create)?;
                if lvl == 0 {
                    first_level_generated += terms.len() + de;
                }
                dropped_entries += de;
                dropped_weight += dw;
                let _ = terms;
            }
        }

        if b.ops.len() == level_end {
            break;
        }
        level_start = level_end;
        lvl += 1;
    }

    // deterministic ordering: syndrome block in projector order, deeper
    // levels sorted by (level, canonical words)
    let total = b.ops.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&x, &y| {
        let ox = &b.ops[x];
        let oy = &b.ops[y];
        let kx = (ox.level, if ox.level == 0 { x } else { 0 });
        let ky = (oy.level, if oy.level == 0 { y } else { 0 });
        kx.cmp(&ky).then_with(|| {
            (&ox.op.left.letters, &ox.op.right.letters)
                .cmp(&(&oy.op.left.letters, &oy.op.right.letters))
        })
    });
    let mut ops: Vec<PendingOp> = Vec::with_capacity(total);
    for &old in &order {
        ops.push(PendingOp {
            key: b.ops[old].key,
            op: b.ops[old].op.clone(),
            sign: b.ops[old].sign,
            level: b.ops[old].level,
        });
    }
    b.ops = ops;
    b.index = b
        .ops
        .iter()
        .enumerate()
        .map(|(i, o)| (o.key, i))
        .collect();

    // second pass: emit the generator matrices against the final ordering
    let dim = b.ops.len();
    let n_err = error_words.len() as f64;
    let mut drift_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut fb_triplets: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); channels.len()];
    let mut meas_diag = vec![vec![0.0f64; dim]; code.generators.len()];

    for k in 0..dim {
        drift_triplets.push((k, k, -n_err));
        let (pre, left, right, sign, level) = {
            let o = &b.ops[k];
            (
                o.op.prefactor,
                o.op.left.clone(),
                o.op.right.clone(),
                o.sign,
                o.level,
            )
        };
        for (l, g) in code.generators.iter().enumerate() {
            let s_l = if g.commutes(&left)? { 1.0 } else { -1.0 };
            let s_r = if g.commutes(&right)? { 1.0 } else { -1.0 };
            meas_diag[l][k] = s_l + s_r;
        }
        for sigma in &error_words {
            let l2 = sigma.multiply(&left)?;
            let r2 = right.multiply(sigma)?;
            let (idx, coef) = b
                .resolve(pre, &l2, &r2, sign, None)?
                .ok_or_else(|| Error::Internal("noise image missing after discovery".into()))?;
            drift_triplets.push((k, idx, coef));
        }
        let _ = level;
        for (ch, sigma) in channels.iter().enumerate() {
            let (terms, _, _) = b.feedback_expansion(k, sigma, None)?;
            for (idx, coef) in terms {
                fb_triplets[ch].push((k, idx, coef));
            }
        }
    }

    let drift = SparseMat::from_triplets(dim, dim, &drift_triplets);
    let fb: Vec<SparseMat> = fb_triplets
        .iter()
        .map(|t| SparseMat::from_triplets(dim, dim, t))
        .collect();

    let meas_decay: Vec<f64> = (0..dim)
        .map(|k| {
            meas_diag
                .iter()
                .map(|d| d[k] * d[k] / 2.0 - 2.0)
                .sum::<f64>()
        })
        .collect();

    let outcome_rows: Vec<Vec<f64>> = (0..code.generators.len())
        .map(|l| {
            (0..num_syndrome)
                .map(|a| {
                    let h = meas_diag[l][a] / 2.0;
                    debug_assert_eq!(h, space.outcome[l][a] as f64);
                    h
                })
                .collect()
        })
        .collect();

    // policy rows: expansion of -i [Pi_0, sigma] per channel
    let mut policy_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(channels.len());
    let id = PauliString::identity(code.n);
    for sigma in &channels {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (phase, l, r) in [
            (Phase::MinusI, id.clone(), sigma.clone()),
            (Phase::PlusI, sigma.clone(), id.clone()),
        ] {
            if let Some((idx, coef)) = b.resolve(phase, &l, &r, 1, None)? {
                row.push((idx, coef));
            }
        }
        row.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (i, c) in row {
            match merged.last_mut() {
                Some((pi, pc)) if *pi == i => *pc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        policy_rows.push(merged);
    }

    let coords: Vec<Coord> = b
        .ops
        .iter()
        .enumerate()
        .map(|(i, o)| Coord {
            op: o.op.clone(),
            sign: o.sign,
            level: o.level,
            label: if i < num_syndrome {
                Some(space.labels[i])
            } else {
                None
            },
            partner: None,
        })
        .collect();

    log::info!(
        "closure for {}: {} operators, levels {:?}, dropped fb couplings {} (weight {})",
        code.name,
        dim,
        {
            let mut counts = vec![0usize; b.ops.iter().map(|o| o.level).max().unwrap_or(0) + 1];
            for o in &b.ops {
                counts[o.level] += 1;
            }
            counts
        },
        dropped_entries,
        dropped_weight
    );

    Ok(CoefficientBasis {
        code_name: code.name.clone(),
        n: code.n,
        l: code.generators.len(),
        num_syndrome,
        coords,
        drift,
        meas_diag,
        meas_decay,
        outcome_rows,
        fb,
        policy_rows,
        control_index: vec![None; channels.len()],
        combined: false,
        max_level,
        first_level_generated,
        dropped_fb_entries: dropped_entries,
        dropped_fb_weight: dropped_weight,
        combiner: None,
    })
}

/// Restrict a raw basis to the syndrome block plus first-level terms, zero
/// couplings into deeper levels, and fold commutator pairs (equivalently the
/// Pauli redundancy relation, already identified by canonical equality) into
/// real combined coordinates. For the five-qubit code this yields
/// (3n+1) + (3n+1)6n/4 = 136 coordinates.
pub fn truncate_first_level(
    code: &CodeSpec,
    space: &SyndromeSpace,
    basis: &CoefficientBasis,
) -> Result<CoefficientBasis> {
    if basis.combined {
        return Err(Error::Config(
            "truncate_first_level expects a raw (uncombined) basis".into(),
        ));
    }
    if !basis.coords.iter().any(|c| c.level == 1) {
        return Err(Error::Config(
            "basis has no first-level terms; build with max_level >= 1".into(),
        ));
    }
    let mut ctx = CanonCtx::new(code, space)?;

    // kept raw indices: level <= 1
    let keep: Vec<usize> = basis
        .coords
        .iter()
        .enumerate()
        .filter(|(_, c)| c.level <= 1)
        .map(|(i, _)| i)
        .collect();
    let raw_of: Vec<usize> = keep.clone();
    let mut kept_pos = vec![usize::MAX; basis.dim()];
    for (pos, &raw) in raw_of.iter().enumerate() {
        kept_pos[raw] = pos;
    }
    let nkeep = raw_of.len();
    let num_syndrome = basis.num_syndrome;

    // partner map over kept level-1 ops via the adjoint
    let mut partner = vec![usize::MAX; nkeep];
    let mut rel = vec![0i8; nkeep];
    let mut key_to_pos: HashMap<ClassKey, usize> = HashMap::new();
    for (pos, &raw) in raw_of.iter().enumerate() {
        let (key, _, _) = ctx.canonicalize(
            basis.coords[raw].op.prefactor,
            &basis.coords[raw].op.left,
            &basis.coords[raw].op.right,
        )?;
        key_to_pos.insert(key, pos);
    }
    for (pos, &raw) in raw_of.iter().enumerate() {
        let coord = &basis.coords[raw];
        let (key, _, ratio) = ctx.canonicalize(
            coord.op.prefactor.conj(),
            &coord.op.right,
            &coord.op.left,
        )?;
        let ppos = *key_to_pos.get(&key).ok_or_else(|| {
            Error::CombinerRank(format!("adjoint of coordinate {pos} left the kept set"))
        })?;
        partner[pos] = ppos;
        let psign = basis.coords[raw_of[ppos]].sign;
        rel[pos] = coord.sign * ratio * psign;
    }
    for pos in 0..nkeep {
        let pp = partner[pos];
        if partner[pp] != pos || rel[pp] != rel[pos] {
            return Err(Error::CombinerRank(format!(
                "pairing is not an involution at coordinate {pos}"
            )));
        }
        if pos < num_syndrome && (pp != pos || rel[pos] != 1) {
            return Err(Error::CombinerRank(format!(
                "syndrome coordinate {pos} is not self-adjoint"
            )));
        }
    }

    // combined coordinates: syndrome block, then one per pair (rep = smaller pos)
    let mut coord_of = vec![usize::MAX; nkeep];
    let mut coords: Vec<Coord> = Vec::new();
    for a in 0..num_syndrome {
        coord_of[a] = a;
        coords.push(basis.coords[raw_of[a]].clone());
    }
    for pos in num_syndrome..nkeep {
        if coord_of[pos] != usize::MAX {
            continue;
        }
        let pp = partner[pos];
        if pp == pos {
            // self-adjoint singleton; keep as its own real coordinate
            coord_of[pos] = coords.len();
            coords.push(basis.coords[raw_of[pos]].clone());
            continue;
        }
        let (rep, other) = if pos < pp { (pos, pp) } else { (pp, pos) };
        if coord_of[rep] != usize::MAX {
            continue;
        }
        let c = coords.len();
        coord_of[rep] = c;
        coord_of[other] = c;
        let rep_coord = &basis.coords[raw_of[rep]];
        let other_coord = &basis.coords[raw_of[other]];
        coords.push(Coord {
            op: rep_coord.op.clone(),
            sign: rep_coord.sign,
            level: 1,
            label: None,
            partner: Some((other_coord.op.clone(), other_coord.sign, rel[rep])),
        });
    }
    let ncomb = coords.len();

    // T (combined x raw-kept): u_c = p_rep; E (raw-kept x combined):
    // p_rep = u, p_other = rel * u
    let mut t_triplets = Vec::new();
    let mut e_triplets = Vec::new();
    for pos in 0..nkeep {
        let c = coord_of[pos];
        let pp = partner[pos];
        let rep = if pp == pos { pos } else { pos.min(pp) };
        if pos == rep {
            t_triplets.push((c, pos, 1.0));
            e_triplets.push((pos, c, 1.0));
        } else {
            e_triplets.push((pos, c, rel[pos] as f64));
        }
    }
    let t = SparseMat::from_triplets(ncomb, nkeep, &t_triplets);
    let e = SparseMat::from_triplets(nkeep, ncomb, &e_triplets);

    // restrict the raw generators to the kept set, tallying dropped feedback
    let mut dropped_entries = basis.dropped_fb_entries;
    let mut dropped_weight = basis.dropped_fb_weight;
    let restrict = |m: &SparseMat, dropped: Option<(&mut usize, &mut f64)>| -> Result<SparseMat> {
        let mut triplets = Vec::new();
        let mut de = 0usize;
        let mut dw = 0.0f64;
        for (r, c, v) in m.triplets() {
            let (kr, kc) = (kept_pos[r], kept_pos[c]);
            match (kr != usize::MAX, kc != usize::MAX) {
                (true, true) => triplets.push((kr, kc, v)),
                (true, false) => {
                    de += 1;
                    dw += v.abs();
                }
                _ => {}
            }
        }
        if let Some((entries, weight)) = dropped {
            *entries += de;
            *weight += dw;
        } else if de > 0 {
            return Err(Error::Internal(
                "level-preserving generator crossed the truncation boundary".into(),
            ));
        }
        Ok(SparseMat::from_triplets(nkeep, nkeep, &triplets))
    };
    let drift_kept = restrict(&basis.drift, None)?;
    let mut fb_kept = Vec::with_capacity(basis.fb.len());
    for m in &basis.fb {
        fb_kept.push(restrict(m, Some((&mut dropped_entries, &mut dropped_weight)))?);
    }

    // pairing symmetry of the kept generators (the combiner is exact only if
    // M[p(r), p(c)] rel_r rel_c == M[r, c])
    for (name, m) in std::iter::once(("drift", &drift_kept)).chain(fb_kept.iter().map(|m| ("fb", m)))
    {
        for (r, c, v) in m.triplets() {
            let sym = m.get(partner[r], partner[c]) * (rel[r] * rel[c]) as f64;
            if sym != v {
                return Err(Error::CombinerRank(format!(
                    "{name} generator breaks pair symmetry at ({r},{c}): {v} vs {sym}"
                )));
            }
        }
    }

    let drift_c = SparseMat::sandwich(&t, &drift_kept, &e);
    let fb_c: Vec<SparseMat> = fb_kept
        .iter()
        .map(|m| SparseMat::sandwich(&t, m, &e))
        .collect();

    let mut meas_diag_c = vec![vec![0.0f64; ncomb]; basis.l];
    for l in 0..basis.l {
        for pos in 0..nkeep {
            let c = coord_of[pos];
            let v = basis.meas_diag[l][raw_of[pos]];
            if meas_diag_c[l][c] != 0.0 && meas_diag_c[l][c] != v {
                return Err(Error::CombinerRank(format!(
                    "paired coordinates disagree on measurement diagonal l={l}"
                )));
            }
            meas_diag_c[l][c] = v;
        }
    }
    let meas_decay_c: Vec<f64> = (0..ncomb)
        .map(|k| {
            meas_diag_c
                .iter()
                .map(|d| d[k] * d[k] / 2.0 - 2.0)
                .sum::<f64>()
        })
        .collect();

    // policy rows in combined coordinates
    let mut policy_rows = Vec::with_capacity(basis.policy_rows.len());
    let mut control_index = Vec::with_capacity(basis.policy_rows.len());
    for row in &basis.policy_rows {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &(raw_idx, w) in row {
            let pos = kept_pos[raw_idx];
            if pos == usize::MAX {
                return Err(Error::MissingControlChannel {
                    qubit: 0,
                    axis: '?',
                });
            }
            let c = coord_of[pos];
            // p_pos = E[pos, c] * u_c
            let factor = e.get(pos, c);
            *acc.entry(c).or_insert(0.0) += w * factor;
        }
        let mut merged: Vec<(usize, f64)> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        merged.sort_by_key(|&(i, _)| i);
        control_index.push(merged.first().map(|&(i, _)| i));
        policy_rows.push(merged);
    }

    let tc = SparseMat::sandwich(&t, &SparseMat::from_triplets(
        nkeep,
        nkeep,
        &(0..nkeep).map(|i| (i, i, 1.0)).collect::<Vec<_>>(),
    ), &e);
    for c in 0..ncomb {
        if (tc.get(c, c) - 1.0).abs() > 1e-12 {
            return Err(Error::CombinerRank("T E != I".into()));
        }
    }

    Ok(CoefficientBasis {
        code_name: basis.code_name.clone(),
        n: basis.n,
        l: basis.l,
        num_syndrome,
        coords,
        drift: drift_c,
        meas_diag: meas_diag_c,
        meas_decay: meas_decay_c,
        outcome_rows: basis.outcome_rows.clone(),
        fb: fb_c,
        policy_rows,
        control_index,
        combined: true,
        max_level: Some(1),
        first_level_generated: basis.first_level_generated,
        dropped_fb_entries: dropped_entries,
        dropped_fb_weight: dropped_weight,
        combiner: Some((t, e)),
    })
}

/// Keep only the syndrome block and the combined coefficients the policy
/// reads (those with nonzero feedback elements against the codespace):
/// 31 coordinates for the five-qubit code. Defined for perfect
/// non-degenerate closures only.
pub fn truncate_minimal(basis: &CoefficientBasis) -> Result<CoefficientBasis> {
    if !basis.combined {
        return Err(Error::Config(
            "truncate_minimal expects a combined first-level basis".into(),
        ));
    }
    if basis.num_syndrome != 3 * basis.n + 1
        || basis.policy_rows.iter().any(|r| r.len() != 1)
    {
        return Err(Error::UnsupportedCode(
            "the five-qubit (perfect, non-degenerate) code".into(),
        ));
    }
    let mut keep: Vec<usize> = (0..basis.num_syndrome).collect();
    for row in &basis.policy_rows {
        let idx = row[0].0;
        if !keep.contains(&idx) {
            keep.push(idx);
        }
    }
    let mut pos_of = vec![usize::MAX; basis.dim()];
    for (pos, &old) in keep.iter().enumerate() {
        pos_of[old] = pos;
    }
    let nkeep = keep.len();

    let mut dropped_entries = basis.dropped_fb_entries;
    let mut dropped_weight = basis.dropped_fb_weight;
    let restrict = |m: &SparseMat, de: &mut usize, dw: &mut f64| {
        let mut triplets = Vec::new();
        for (r, c, v) in m.triplets() {
            let (kr, kc) = (pos_of[r], pos_of[c]);
            if kr != usize::MAX && kc != usize::MAX {
                triplets.push((kr, kc, v));
            } else if kr != usize::MAX || kc != usize::MAX {
                *de += 1;
                *dw += v.abs();
            }
        }
        SparseMat::from_triplets(nkeep, nkeep, &triplets)
    };
    let mut d0 = 0usize;
    let mut w0 = 0.0f64;
    let drift = restrict(&basis.drift, &mut d0, &mut w0);
    let fb: Vec<SparseMat> = basis
        .fb
        .iter()
        .map(|m| restrict(m, &mut dropped_entries, &mut dropped_weight))
        .collect();
    dropped_entries += d0;
    dropped_weight += w0;

    let coords: Vec<Coord> = keep.iter().map(|&i| basis.coords[i].clone()).collect();
    let meas_diag: Vec<Vec<f64>> = basis
        .meas_diag
        .iter()
        .map(|d| keep.iter().map(|&i| d[i]).collect())
        .collect();
    let meas_decay: Vec<f64> = keep.iter().map(|&i| basis.meas_decay[i]).collect();
    let policy_rows: Vec<Vec<(usize, f64)>> = basis
        .policy_rows
        .iter()
        .map(|row| row.iter().map(|&(i, w)| (pos_of[i], w)).collect())
        .collect();
    let control_index = policy_rows
        .iter()
        .map(|r: &Vec<(usize, f64)>| r.first().map(|&(i, _)| i))
        .collect();

    Ok(CoefficientBasis {
        code_name: basis.code_name.clone(),
        n: basis.n,
        l: basis.l,
        num_syndrome: basis.num_syndrome,
        coords,
        drift,
        meas_diag,
        meas_decay,
        outcome_rows: basis.outcome_rows.clone(),
        fb,
        policy_rows,
        control_index,
        combined: true,
        max_level: Some(1),
        first_level_generated: basis.first_level_generated,
        dropped_fb_entries: dropped_entries,
        dropped_fb_weight: dropped_weight,
        combiner: basis.combiner.clone(),
    })
}
