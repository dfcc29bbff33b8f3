//! Stabilizer code definitions: built-in bit-flip and five-qubit codes,
//! syndrome-space projectors, outcome tables, recovery maps, and encoded
//! fiducial states.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, matmul, max_abs_diff, trace, trace_prod, CMat};
use crate::pauli::{Letter, PauliString, Phase};

/// Syndrome as the vector of generator outcomes, entries +/-1.
pub type Syndrome = Vec<i8>;

/// A stabilizer code with its noise model and recovery table.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub generators: Vec<PauliString>,
    pub logical_z: PauliString,
    /// Single-qubit errors of the noise model, ordered (qubit ascending, X,Y,Z).
    pub error_set: Vec<PauliString>,
    /// Syndrome -> correction. Generated from the outcome table.
    pub recovery: BTreeMap<Syndrome, PauliString>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorLabel {
    NoError,
    /// 1-based qubit index and Pauli letter.
    Single { qubit: usize, letter: Letter },
}

impl std::fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ErrorLabel::NoError => write!(f, "0"),
            ErrorLabel::Single { qubit, letter } => {
                write!(f, "{}{}", letter.to_char(), qubit)
            }
        }
    }
}

/// Projectors onto the distinct syndrome spaces, with the outcome table
/// h_l per projector.
pub struct SyndromeSpace {
    pub dim: usize,
    pub projectors: Vec<CMat>,
    pub labels: Vec<ErrorLabel>,
    /// Syndrome vector of each projector (outcome of each generator).
    pub syndromes: Vec<Syndrome>,
    /// outcome[l][a] = h_l for projector a, entries +/-1.
    pub outcome: Vec<Vec<i8>>,
    /// Whether the projectors sum to the identity.
    pub complete: bool,
}

impl CodeSpec {
    pub fn l(&self) -> usize {
        self.n - self.k
    }

    /// Commutation pattern of `p` with the generators, as +/-1 outcomes.
    pub fn syndrome_of(&self, p: &PauliString) -> Result<Syndrome> {
        self.generators
            .iter()
            .map(|g| Ok(if g.commutes(p)? { 1 } else { -1 }))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.k != 1 {
            return Err(Error::InvalidCode("only k = 1 codes are supported".into()));
        }
        if self.generators.len() != self.l() {
            return Err(Error::InvalidCode(format!(
                "expected {} generators, found {}",
                self.l(),
                self.generators.len()
            )));
        }
        for g in &self.generators {
            if g.len() != self.n {
                return Err(Error::InvalidCode("generator length != n".into()));
            }
            if g.phase != Phase::PlusOne {
                return Err(Error::InvalidCode("generators must carry phase +1".into()));
            }
        }
        for (i, a) in self.generators.iter().enumerate() {
            for b in self.generators.iter().skip(i + 1) {
                if !a.commutes(b)? {
                    return Err(Error::InvalidCode(format!(
                        "generators {a} and {b} anticommute"
                    )));
                }
            }
        }
        // independence: no nonempty subset multiplies to the identity word
        for mask in 1usize..(1 << self.generators.len()) {
            let mut prod = PauliString::identity(self.n);
            for (i, g) in self.generators.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    prod = prod.multiply(g)?;
                }
            }
            if prod.is_identity_word() {
                return Err(Error::InvalidCode(
                    "generators are not independent".into(),
                ));
            }
        }
        if self.logical_z.len() != self.n {
            return Err(Error::InvalidCode("logical_z length != n".into()));
        }
        for g in &self.generators {
            if !self.logical_z.commutes(g)? {
                return Err(Error::InvalidCode(
                    "logical_z must commute with all generators".into(),
                ));
            }
        }
        for e in &self.error_set {
            if e.len() != self.n {
                return Err(Error::InvalidCode("error_set entry length != n".into()));
            }
        }
        let id_syndrome = vec![1i8; self.l()];
        match self.recovery.get(&id_syndrome) {
            Some(r) if r.is_identity_word() => {}
            _ => {
                return Err(Error::InvalidCode(
                    "recovery(all +1) must be the identity".into(),
                ))
            }
        }
        Ok(())
    }

    /// Full stabilizer group (2^l elements). Errors if any product picks up
    /// a nontrivial phase, which would signal an invalid generating set.
    pub fn stabilizer_group(&self) -> Result<Vec<PauliString>> {
        let l = self.generators.len();
        let mut group = Vec::with_capacity(1 << l);
        for mask in 0usize..(1 << l) {
            let mut prod = PauliString::identity(self.n);
            for (i, g) in self.generators.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    prod = prod.multiply(g)?;
                }
            }
            if prod.phase != Phase::PlusOne {
                return Err(Error::InvalidCode(format!(
                    "stabilizer product has phase {prod}"
                )));
            }
            group.push(prod);
        }
        Ok(group)
    }

    /// A logical X representative: commutes with every generator and
    /// anticommutes with logical_z. Found by weight-ordered search.
    pub fn logical_x(&self) -> Result<PauliString> {
        let n = self.n;
        let mut best: Option<PauliString> = None;
        let total = 4usize.pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut letters = Vec::with_capacity(n);
            for _ in 0..n {
                letters.push(match c & 3 {
                    0 => Letter::I,
                    1 => Letter::X,
                    2 => Letter::Y,
                    _ => Letter::Z,
                });
                c >>= 2;
            }
            let p = PauliString::from_letters(letters);
            if p.commutes(&self.logical_z)? {
                continue;
            }
            if self.generators.iter().any(|g| !g.commutes(&p).unwrap()) {
                continue;
            }
            match &best {
                Some(b) if (b.weight(), b.clone()) <= (p.weight(), p.clone()) => {}
                _ => best = Some(p),
            }
        }
        best.ok_or_else(|| Error::InvalidCode("no logical X representative found".into()))
    }
}

/// All 3n single-qubit Paulis, ordered (qubit ascending, X, Y, Z). This
/// fixes the ordering of syndrome projectors and feedback channels.
pub fn single_qubit_paulis(n: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(3 * n);
    for m in 1..=n {
        for letter in [Letter::X, Letter::Y, Letter::Z] {
            out.push(PauliString::single(n, m, letter));
        }
    }
    out
}

/// Derive the recovery table: each syndrome reachable by an error in
/// {identity}, error_set maps back to that error. Rejects codes where two
/// distinct errors share a syndrome (degenerate codes are out of scope).
fn derive_recovery(
    n: usize,
    generators: &[PauliString],
    error_set: &[PauliString],
) -> Result<BTreeMap<Syndrome, PauliString>> {
    let mut recovery = BTreeMap::new();
    let mut insert = |syn: Syndrome, e: PauliString| -> Result<()> {
        if let Some(prev) = recovery.insert(syn, e.clone()) {
            return Err(Error::InvalidCode(format!(
                "errors {prev} and {e} share a syndrome (degenerate code)"
            )));
        }
        Ok(())
    };
    let id = PauliString::identity(n);
    let syn_of = |p: &PauliString| -> Result<Syndrome> {
        generators
            .iter()
            .map(|g| Ok(if g.commutes(p)? { 1 } else { -1 }))
            .collect()
    };
    insert(syn_of(&id)?, id)?;
    for e in error_set {
        insert(syn_of(e)?, e.unsigned())?;
    }
    Ok(recovery)
}

/// The five-qubit perfect code protecting against the symmetric
/// depolarizing channel.
pub fn five_qubit_code() -> CodeSpec {
    let generators: Vec<PauliString> = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let error_set = single_qubit_paulis(5);
    let recovery = derive_recovery(5, &generators, &error_set).unwrap();
    let code = CodeSpec {
        name: "five-qubit".into(),
        n: 5,
        k: 1,
        generators,
        logical_z: "ZZZZZ".parse().unwrap(),
        error_set,
        recovery,
    };
    code.validate().expect("five-qubit code is valid");
    code
}

/// The three-qubit bit-flip code with the X-only error channel.
pub fn bit_flip_code() -> CodeSpec {
    let generators: Vec<PauliString> = ["ZZI", "IZZ"].iter().map(|s| s.parse().unwrap()).collect();
    let error_set: Vec<PauliString> = ["XII", "IXI", "IIX"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let recovery = derive_recovery(3, &generators, &error_set).unwrap();
    let code = CodeSpec {
        name: "bitflip".into(),
        n: 3,
        k: 1,
        generators,
        logical_z: "ZZZ".parse().unwrap(),
        error_set,
        recovery,
    };
    code.validate().expect("bit-flip code is valid");
    code
}

/// Resolve a `--code` argument: a built-in name or a path to a code file.
pub fn load_code(spec: &str) -> Result<CodeSpec> {
    match spec {
        "five-qubit" | "five_qubit" | "5q" => Ok(five_qubit_code()),
        "bitflip" | "bit-flip" | "3q" => Ok(bit_flip_code()),
        path => read_code_file(Path::new(path)),
    }
}

#[derive(Serialize, Deserialize)]
struct CodeFile {
    n: usize,
    k: usize,
    generators: Vec<String>,
    logical_z: String,
    error_set: Vec<String>,
}

pub fn read_code_file(path: &Path) -> Result<CodeSpec> {
    let text = std::fs::read_to_string(path)?;
    let file: CodeFile =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let generators = file
        .generators
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<PauliString>>>()?;
    let error_set = file
        .error_set
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<PauliString>>>()?;
    if file.k != file.n.saturating_sub(generators.len()) {
        return Err(Error::InvalidCode("k != n - #generators".into()));
    }
    let recovery = derive_recovery(file.n, &generators, &error_set)?;
    let code = CodeSpec {
        name: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into()),
        n: file.n,
        k: file.k,
        generators,
        logical_z: file.logical_z.parse()?,
        error_set,
        recovery,
    };
    code.validate()?;
    Ok(code)
}

pub fn write_code_file(code: &CodeSpec, path: &Path) -> Result<()> {
    let file = CodeFile {
        n: code.n,
        k: code.k,
        generators: code.generators.iter().map(|g| g.to_string()).collect(),
        logical_z: code.logical_z.to_string(),
        error_set: code.error_set.iter().map(|e| e.to_string()).collect(),
    };
    let text = toml::to_string(&file).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Build the syndrome-space projectors Pi_0 = prod (I+g)/2 and
/// Pi_e = e Pi_0 e, with the outcome table h_l = Tr[g Pi]/Tr[Pi].
pub fn build_syndrome_space(code: &CodeSpec) -> Result<SyndromeSpace> {
    let dim = 1usize << code.n;
    let mut pi0: CMat = Array2::eye(dim);
    for g in &code.generators {
        let gd = g.realize()?;
        let mut next = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                next[(i, j)] = 0.5 * (pi0[(i, j)] + gd.row(i).dot(&pi0.column(j)));
            }
        }
        pi0 = next;
    }

    let mut projectors = vec![pi0.clone()];
    let mut labels = vec![ErrorLabel::NoError];
    let mut syndromes = vec![vec![1i8; code.l()]];
    for e in &code.error_set {
        let act = e.action()?;
        let mut pe: CMat = Array2::zeros((dim, dim));
        crate::linalg::add_conj_pauli(&mut pe, 1.0, &act, &pi0);
        projectors.push(pe);
        let (qubit, letter) = e
            .letters
            .iter()
            .enumerate()
            .find(|(_, &l)| l != Letter::I)
            .map(|(i, &l)| (i + 1, l))
            .ok_or_else(|| Error::InvalidCode("error_set entry is the identity".into()))?;
        labels.push(ErrorLabel::Single { qubit, letter });
        syndromes.push(code.syndrome_of(e)?);
    }

    // distinct syndromes required downstream (non-degenerate codes only)
    for i in 0..syndromes.len() {
        for j in (i + 1)..syndromes.len() {
            if syndromes[i] == syndromes[j] {
                return Err(Error::InvalidCode(format!(
                    "projectors {} and {} share a syndrome",
                    labels[i], labels[j]
                )));
            }
        }
    }

    let expected_trace = (1usize << code.k) as f64;
    let mut outcome = vec![vec![0i8; projectors.len()]; code.l()];
    for (l, g) in code.generators.iter().enumerate() {
        let ga = g.action()?;
        for (a, pi) in projectors.iter().enumerate() {
            let tr_pi = trace(pi).re;
            if (tr_pi - expected_trace).abs() > 1e-9 {
                return Err(Error::InvalidCode(format!(
                    "projector {} has trace {tr_pi}, expected {expected_trace}",
                    labels[a]
                )));
            }
            let h = crate::linalg::trace_with(&ga, pi).re / tr_pi;
            if (h - 1.0).abs() > 1e-9 {
                if (h + 1.0).abs() > 1e-9 {
                    return Err(Error::OutcomeNotSign { value: h });
                }
                outcome[l][a] = -1;
            } else {
                outcome[l][a] = 1;
            }
        }
    }

    // idempotence and Hermiticity
    for (a, pi) in projectors.iter().enumerate() {
        let sq = matmul(pi, pi);
        if max_abs_diff(&sq, pi) > 1e-9 {
            return Err(Error::InvalidCode(format!(
                "projector {} is not idempotent",
                labels[a]
            )));
        }
    }

    let mut sum: CMat = Array2::zeros((dim, dim));
    for pi in &projectors {
        sum += pi;
    }
    let complete = max_abs_diff(&sum, &Array2::eye(dim)) < 1e-9;

    Ok(SyndromeSpace {
        dim,
        projectors,
        labels,
        syndromes,
        outcome,
        complete,
    })
}

impl SyndromeSpace {
    pub fn num_projectors(&self) -> usize {
        self.projectors.len()
    }

    /// Index of the projector with the given syndrome, if present.
    pub fn index_of_syndrome(&self, syn: &Syndrome) -> Option<usize> {
        self.syndromes.iter().position(|s| s == syn)
    }

    pub fn codespace(&self) -> &CMat {
        &self.projectors[0]
    }
}

/// Density matrix of the encoded |0>: proportional to Pi_0 (I + logical_z)/2.
pub fn encoded_zero(code: &CodeSpec, space: &SyndromeSpace) -> Result<CMat> {
    if code.k != 1 {
        return Err(Error::UnsupportedCode("k = 1 codes".into()));
    }
    let dim = space.dim;
    let zl = code.logical_z.realize()?;
    let pi0 = space.codespace();
    let mut m: CMat = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = 0.5 * (pi0[(i, j)] + pi0.row(i).dot(&zl.column(j)));
        }
    }
    let tr = trace(&m).re;
    if tr.abs() < 1e-12 {
        return Err(Error::InvalidCode(
            "encoded zero projector has zero trace".into(),
        ));
    }
    m.mapv_inplace(|z| z / tr);
    hermitize(&mut m);
    let purity_gap = max_abs_diff(&matmul(&m, &m), &m);
    if purity_gap > 1e-12 {
        return Err(Error::InvalidCode(format!(
            "encoded zero is not pure (||rho^2 - rho|| = {purity_gap:.2e})"
        )));
    }
    Ok(m)
}

/// Codespace fidelity Tr[Pi_0 rho].
pub fn codespace_fidelity(space: &SyndromeSpace, rho: &CMat) -> f64 {
    trace_prod(space.codespace(), rho).re
}
