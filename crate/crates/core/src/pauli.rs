//! Phased n-qubit Pauli strings with exact quarter-phase arithmetic, plus
//! their dense realizations as permutation-with-phase actions on basis states.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Fourth roots of unity, stored exactly. Never a float.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    /// Phase as i^k with k in 0..4.
    pub fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn from_exponent(k: u8) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + other.exponent())
    }

    pub fn conj(self) -> Phase {
        Phase::from_exponent((4 - self.exponent()) % 4)
    }

    pub fn negate(self) -> Phase {
        Phase::from_exponent(self.exponent() + 2)
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Letter {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Letter {
    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
        _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// Product of two letters: (phase, letter) with phase in {1, +i, -i}.
    pub fn mul(self, other: Letter) -> (Phase, Letter) {
        use Letter::*;
        match (self, other) {
            (I, b) => (Phase::PlusOne, b),
            (a, I) => (Phase::PlusOne, a),
            (a, b) if a == b => (Phase::PlusOne, I),
            (X, Y) => (Phase::PlusI, Z),
            (Y, X) => (Phase::MinusI, Z),
            (Y, Z) => (Phase::PlusI, X),
            (Z, Y) => (Phase::MinusI, X),
            (Z, X) => (Phase::PlusI, Y),
            (X, Z) => (Phase::MinusI, Y),
            _ => unreachable!(),
        }
    }

    pub fn commutes(self, other: Letter) -> bool {
        self == Letter::I || other == Letter::I || self == other
    }
}

/// Phased tensor product of single-qubit Pauli letters. Qubit 1 is the
/// leftmost letter (most significant bit of the basis index).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub phase: Phase,
    pub letters: Vec<Letter>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            phase: Phase::PlusOne,
            letters: vec![Letter::I; n],
        }
    }

    /// Single-qubit Pauli on `qubit` (1-based, matching X_1..X_n notation).
    pub fn single(n: usize, qubit: usize, letter: Letter) -> Self {
        assert!(qubit >= 1 && qubit <= n, "qubit index out of range");
        let mut letters = vec![Letter::I; n];
        letters[qubit - 1] = letter;
        PauliString {
            phase: Phase::PlusOne,
            letters,
        }
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        PauliString {
            phase: Phase::PlusOne,
            letters,
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != Letter::I).count()
    }

    pub fn is_identity_word(&self) -> bool {
        self.letters.iter().all(|&l| l == Letter::I)
    }

    /// The string with phase reset to +1.
    pub fn unsigned(&self) -> PauliString {
        PauliString {
            phase: Phase::PlusOne,
            letters: self.letters.clone(),
        }
    }

    pub fn with_phase(&self, phase: Phase) -> PauliString {
        PauliString {
            phase,
            letters: self.letters.clone(),
        }
    }

    /// Group product with exact accumulated phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let mut phase = self.phase.mul(other.phase);
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (p, l) = a.mul(b);
                phase = phase.mul(p);
                l
            })
            .collect();
        Ok(PauliString { phase, letters })
    }

    /// True iff ab = ba, from per-qubit anticommutation parity.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| !a.commutes(b))
            .count();
        Ok(anti % 2 == 0)
    }

    pub fn adjoint(&self) -> PauliString {
        PauliString {
            phase: self.phase.conj(),
            letters: self.letters.clone(),
        }
    }

    /// Hilbert-space dimension 2^n, guarded to desk scale.
    pub fn dim(&self) -> Result<usize> {
        let n = self.len();
        if n == 0 || n > 12 {
            return Err(Error::DimensionOverflow(n));
        }
        Ok(1 << n)
    }

    /// Permutation-with-phase action on computational basis states.
    pub fn action(&self) -> Result<PauliAction> {
        let dim = self.dim()?;
        let n = self.len();
        let mut flip_mask = 0usize;
        for (q, &l) in self.letters.iter().enumerate() {
            if matches!(l, Letter::X | Letter::Y) {
                // qubit 1 is the most significant bit
                flip_mask |= 1 << (n - 1 - q);
            }
        }
        let mut phases = Vec::with_capacity(dim);
        for b in 0..dim {
            let mut k = self.phase.exponent() as u32;
            for (q, &l) in self.letters.iter().enumerate() {
                let bit = (b >> (n - 1 - q)) & 1;
                match l {
                    Letter::I | Letter::X => {}
                    // Y|0> = i|1>, Y|1> = -i|0>
                    Letter::Y => k += if bit == 0 { 1 } else { 3 },
                    // Z|b> = (-1)^b |b>
                    Letter::Z => k += 2 * bit as u32,
                }
            }
            phases.push(Phase::from_exponent((k % 4) as u8).to_complex());
        }
        Ok(PauliAction {
            dim,
            flip_mask,
            phases,
        })
    }

    /// Dense 2^n x 2^n matrix: phase times the tensor product of 2x2 Paulis.
    pub fn realize(&self) -> Result<Array2<Complex64>> {
        let act = self.action()?;
        let mut m = Array2::zeros((act.dim, act.dim));
        for col in 0..act.dim {
            m[(col ^ act.flip_mask, col)] = act.phases[col];
        }
        Ok(m)
    }
}

/// P|b> = phases[b] |b ^ flip_mask>. Multiplying by a Pauli string or
/// conjugating with one is O(d) / O(d^2) through this form.
#[derive(Debug, Clone)]
pub struct PauliAction {
    pub dim: usize,
    pub flip_mask: usize,
    pub phases: Vec<Complex64>,
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            Phase::PlusOne => "",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        };
        write!(f, "{}", prefix)?;
        for l in &self.letters {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PlusOne, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else {
            (Phase::PlusOne, s)
        };
        if rest.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string: {s:?}")));
        }
        let letters = rest
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString { phase, letters })
    }
}

/// Packed 2-bit-per-letter key for hashing word pairs during closure builds.
pub fn pack_word(letters: &[Letter]) -> u32 {
    let mut k = 0u32;
    for &l in letters {
        k = (k << 2) | l as u32;
    }
    k
}
