//! Small dense complex-matrix helpers, plus O(d^2) multiply/conjugate
//! routines that exploit the permutation structure of Pauli actions.

use ndarray::Array2;
use num_complex::Complex64;

use crate::pauli::PauliAction;

pub type CMat = Array2<Complex64>;

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a.dot(b)
}

pub fn dagger(m: &CMat) -> CMat {
    let mut out = m.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diag().sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// (m + m^dagger)/2
pub fn hermitize(m: &mut CMat) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        let di = m[(i, i)];
        m[(i, i)] = Complex64::new(di.re, 0.0);
    }
}

/// out += w * P rho P with P given as a permutation action (P assumed
/// Hermitian so that P rho P^dagger = P rho P).
pub fn add_conj_pauli(out: &mut CMat, w: f64, p: &PauliAction, rho: &CMat) {
    let d = p.dim;
    let rho_s = rho.as_slice().expect("contiguous");
    let out_s = out.as_slice_mut().expect("contiguous");
    for i in 0..d {
        let pi = i ^ p.flip_mask;
        let wi = p.phases[i];
        let row_in = &rho_s[i * d..(i + 1) * d];
        let row_out = &mut out_s[pi * d..(pi + 1) * d];
        for j in 0..d {
            let ph = wi * p.phases[j].conj();
            row_out[j ^ p.flip_mask] += w * (ph * row_in[j]);
        }
    }
}

/// out += w * (P rho + rho P), P Hermitian permutation action.
pub fn add_anticomm_pauli(out: &mut CMat, w: f64, p: &PauliAction, rho: &CMat) {
    let d = p.dim;
    let rho_s = rho.as_slice().expect("contiguous");
    let out_s = out.as_slice_mut().expect("contiguous");
    for i in 0..d {
        let pi = i ^ p.flip_mask;
        let wi = p.phases[i] * w;
        // (P rho)[pi, j] = phases[i] rho[i, j]
        let row_in = &rho_s[i * d..(i + 1) * d];
        let row_out = &mut out_s[pi * d..(pi + 1) * d];
        for j in 0..d {
            row_out[j] += wi * row_in[j];
        }
        // (rho P)[r, pi] = rho[r, i] phases[pi]  -- column update
        let wpi = p.phases[pi];
        for r in 0..d {
            out_s[r * d + pi] += w * (rho_s[r * d + i] * wpi);
        }
    }
}

/// out += i*w * (rho P - P rho) = -i*w*[P, rho], P Hermitian permutation action.
pub fn add_feedback_comm(out: &mut CMat, w: f64, p: &PauliAction, rho: &CMat) {
    let d = p.dim;
    let iw = Complex64::new(0.0, w);
    let rho_s = rho.as_slice().expect("contiguous");
    let out_s = out.as_slice_mut().expect("contiguous");
    for i in 0..d {
        let pi = i ^ p.flip_mask;
        let wi = p.phases[i];
        let row_in = &rho_s[i * d..(i + 1) * d];
        let row_out = &mut out_s[pi * d..(pi + 1) * d];
        for j in 0..d {
            row_out[j] -= iw * (wi * row_in[j]);
        }
        let wpi = p.phases[pi];
        for r in 0..d {
            out_s[r * d + pi] += iw * (rho_s[r * d + i] * wpi);
        }
    }
}

/// Tr[P rho] in O(d).
pub fn trace_with(p: &PauliAction, rho: &CMat) -> Complex64 {
    let d = p.dim;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..d {
        acc += p.phases[k] * rho[(k, k ^ p.flip_mask)];
    }
    acc
}

/// Tr[A rho] for dense A (O(d^2)).
pub fn trace_prod(a: &CMat, rho: &CMat) -> Complex64 {
    let d = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * rho[(j, i)];
        }
    }
    acc
}

/// True iff m + eps*I admits a Cholesky factorization, i.e. the smallest
/// eigenvalue of the Hermitian matrix m is >= -eps (up to rounding).
pub fn is_psd_within(m: &CMat, eps: f64) -> bool {
    let d = m.nrows();
    let mut a = m.clone();
    for i in 0..d {
        a[(i, i)] += Complex64::new(eps, 0.0);
    }
    // standard complex Cholesky, failing on a non-positive pivot
    for k in 0..d {
        let mut pivot = a[(k, k)].re;
        for j in 0..k {
            pivot -= a[(k, j)].norm_sqr();
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return false;
        }
        let lkk = pivot.sqrt();
        a[(k, k)] = Complex64::new(lkk, 0.0);
        for i in (k + 1)..d {
            let mut v = a[(i, k)];
            for j in 0..k {
                v -= a[(i, j)] * a[(k, j)].conj();
            }
            a[(i, k)] = v / lkk;
        }
    }
    true
}
