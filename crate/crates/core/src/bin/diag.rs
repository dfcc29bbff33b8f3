//! Developer diagnostic: dump filter internals around a chosen window.

use ctqec::code::five_qubit_code;
use ctqec::engine::{ControllerSpec, CoIntegrator, SimContext};
use ctqec::full_filter::ModelParams;
use ctqec::linalg::{is_psd_within, trace_prod};
use ctqec::sde::Scheme;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(7);
    let t_final: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.1);
    let window: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.08);

    let ctx = SimContext::new(five_qubit_code()).unwrap();
    let gamma: f64 = std::env::var("DIAG_GAMMA").ok().and_then(|v| v.parse().ok()).unwrap_or(1.0);
    let params = ModelParams::new(gamma, 100.0, 200.0, 1e-5).unwrap();
    let mut sim = CoIntegrator::new(
        &ctx,
        &ControllerSpec::Full,
        params,
        Scheme::PredictorCorrector,
        seed,
        0,
    )
    .unwrap();
    let steps = (t_final / params.dt).round() as usize;
    let mut args_buf = vec![0.0; 15];
    for s in 1..=steps {
        sim.step().unwrap();
        let t = sim.plant_state.time;
        if t >= window && s % 200 == 0 {
            let mut probs: Vec<f64> = ctx
                .space
                .projectors
                .iter()
                .map(|pi| trace_prod(pi, &sim.plant_state.rho).re)
                .collect();
            ctx.policy_ops.arguments(&sim.plant_state.rho, &mut args_buf);
            let max_u = args_buf.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            let psd6 = is_psd_within(&sim.plant_state.rho, 1e-6);
            let psd2 = is_psd_within(&sim.plant_state.rho, 1e-2);
            let fcs = probs[0];
            probs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            println!(
                "t={t:.4} Fcs={fcs:.4} top_p=[{:.3} {:.3} {:.3}] min_p={:.3e} max|u|={max_u:.3e} psd(1e-6)={psd6} psd(1e-2)={psd2}",
                probs[0], probs[1], probs[2], probs[15]
            );
        }
    }
}
