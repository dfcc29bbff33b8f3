//! Structural property suite, runnable in isolation:
//! `cargo test --release --test structural`

use ctqec::code::{bit_flip_code, build_syndrome_space, five_qubit_code};
use ctqec::engine::SimContext;
use ctqec::full_filter::control_channels;
use ctqec::linalg::{matmul, max_abs, max_abs_diff, CMat};
use ctqec::reduced::{build_closure, DEFAULT_BUDGET};

#[test]
fn projector_orthogonality_and_completeness() {
    let code = five_qubit_code();
    let space = build_syndrome_space(&code).unwrap();
    let mut sum = CMat::zeros((32, 32));
    for (i, pi) in space.projectors.iter().enumerate() {
        sum += pi;
        assert!((ctqec::linalg::trace(pi).re - 2.0).abs() < 1e-12);
        for pj in space.projectors.iter().skip(i + 1) {
            assert!(max_abs(&matmul(pi, pj)) < 1e-12);
        }
    }
    assert!(max_abs_diff(&sum, &CMat::eye(32)) < 1e-12);

    // bit-flip code with the X-only error set is complete as well
    let code = bit_flip_code();
    let space = build_syndrome_space(&code).unwrap();
    let mut sum = CMat::zeros((8, 8));
    for pi in &space.projectors {
        sum += pi;
    }
    assert!(max_abs_diff(&sum, &CMat::eye(8)) < 1e-12);
}

#[test]
fn recovery_correctness_all_single_qubit_errors() {
    let code = five_qubit_code();
    let group = code.stabilizer_group().unwrap();
    assert_eq!(code.error_set.len(), 15);
    for e in &code.error_set {
        let syn = code.syndrome_of(e).unwrap();
        let recovery = &code.recovery[&syn];
        let residual = recovery.multiply(e).unwrap();
        assert!(
            group.contains(&residual),
            "recovery residual {residual} for error {e} is not a stabilizer"
        );
    }
}

#[test]
fn symbolic_generator_matrices_match_dense_full_sweep() {
    // every matrix element of the lowered generators against dense matrix
    // algebra, across the entire 1024-operator closure
    let ctx = SimContext::new(five_qubit_code()).unwrap();
    let basis = build_closure(&ctx.code, &ctx.space, None, DEFAULT_BUDGET).unwrap();
    let pi0 = ctx.space.codespace();
    let dim = basis.dim();
    let realized: Vec<CMat> = (0..dim)
        .map(|k| basis.realize_coord(k, pi0).unwrap())
        .collect();
    let actions: Vec<_> = ctx
        .code
        .error_set
        .iter()
        .map(|e| e.action().unwrap())
        .collect();

    for k in 0..dim {
        // noise row
        let mut want = realized[k].mapv(|z| -15.0 * z);
        for act in &actions {
            ctqec::linalg::add_conj_pauli(&mut want, 1.0, act, &realized[k]);
        }
        let mut got = CMat::zeros((32, 32));
        for (c, v) in basis.drift.row(k) {
            got.zip_mut_with(&realized[c], |g, r| *g += v * r);
        }
        assert_eq!(max_abs_diff(&got, &want), 0.0, "noise row {k}");

        // measurement diagonal
        for (l, g) in ctx.code.generators.iter().enumerate() {
            let ga = g.action().unwrap();
            let mut want = CMat::zeros((32, 32));
            ctqec::linalg::add_anticomm_pauli(&mut want, 1.0, &ga, &realized[k]);
            let got = realized[k].mapv(|z| basis.meas_diag[l][k] * z);
            assert_eq!(max_abs_diff(&got, &want), 0.0, "meas row {k} gen {l}");
        }
    }

    // feedback rows (the full closure has no dropped couplings)
    assert_eq!(basis.dropped_fb_entries, 0);
    let channels = control_channels(5);
    for k in 0..dim {
        for (ch, sigma) in channels.iter().enumerate() {
            // dual action on coefficients: -i (C sigma - sigma C)
            let sd = sigma.realize().unwrap();
            let i = num_complex::Complex64::new(0.0, 1.0);
            let want = (&matmul(&realized[k], &sd) - &matmul(&sd, &realized[k])).mapv(|z| -i * z);
            let mut got = CMat::zeros((32, 32));
            for (c, v) in basis.fb[ch].row(k) {
                got.zip_mut_with(&realized[c], |g, r| *g += v * r);
            }
            assert_eq!(max_abs_diff(&got, &want), 0.0, "fb row {k} channel {ch}");
        }
    }
}

#[test]
fn trace_and_hermiticity_preservation_bounds() {
    use ctqec::full_filter::{plant_step, DensityState, FullFilter, ModelParams};
    use ctqec::sde::{NoiseStream, Scheme, StepScratch};
    let ctx = SimContext::new(five_qubit_code()).unwrap();
    let params = ModelParams::defaults();
    let mut filter = FullFilter::new(&ctx.code, params).unwrap();
    let mut state = DensityState::new(ctx.rho0.clone());
    let mut scratch = StepScratch::like(&state.rho);
    let mut noise = NoiseStream::new(2, 0);
    let mut dw = [0.0; 4];
    let mut dq = [0.0; 4];
    let mut worst = 0.0f64;
    for _ in 0..3_000 {
        noise.wiener(params.dt, &mut dw);
        let gap = plant_step(
            &mut filter,
            &mut state,
            &dw,
            &mut dq,
            Scheme::PredictorCorrector,
            &mut scratch,
        );
        worst = worst.max(gap);
    }
    assert!(worst <= 1e-8, "per-step trace drift {worst:.3e}");
}
