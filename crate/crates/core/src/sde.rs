//! Stochastic integration kernel: seeded Wiener increment streams and the
//! Euler-Maruyama / predictor-corrector steppers shared by the dense and
//! reduced filters.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Per-trajectory Gaussian increment generator. Stream-split so trajectory i
/// reproduces identically regardless of thread scheduling.
pub struct NoiseStream {
    rng: ChaCha12Rng,
    pub seed: u64,
    pub stream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream.into());
        NoiseStream { rng, seed, stream }
    }

    /// Fill `out` with independent N(0, dt) Wiener increments.
    pub fn wiener(&mut self, dt: f64, out: &mut [f64]) {
        let s = dt.sqrt();
        for v in out.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = s * z;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    /// Weak drift-corrected scheme: predictor Euler step, corrector averages
    /// the drift at the pre-point and predicted point; diffusion evaluated at
    /// the pre-point.
    PredictorCorrector,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scheme> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "predictor-corrector" | "pc" => Ok(Scheme::PredictorCorrector),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, t_final: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if t_final < dt {
            return Err(Error::Config("t_final must be at least dt".into()));
        }
        Ok(SchemeConfig {
            scheme,
            dt,
            t_final,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// State vectors the steppers can drive. All stepper coefficients are real.
pub trait SdeState: Clone {
    fn assign(&mut self, other: &Self);
    /// self += c * other
    fn add_scaled(&mut self, c: f64, other: &Self);
    fn is_finite(&self) -> bool;
}

impl SdeState for Array1<f64> {
    fn assign(&mut self, other: &Self) {
        self.clone_from(other);
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        self.zip_mut_with(other, |a, b| *a += c * b);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl SdeState for Array2<Complex64> {
    fn assign(&mut self, other: &Self) {
        self.clone_from(other);
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        self.zip_mut_with(other, |a, b| *a += c * b);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// dx = a(x) dt + sum_l b_l(x) inc_l, with the increments supplied externally
/// (plant: Wiener increments; controller: the measurement record).
pub trait SdeSystem {
    type State: SdeState;
    fn drift(&mut self, x: &Self::State, out: &mut Self::State);
    /// Overwrites `out` with sum_l b_l(x) * inc[l].
    fn diffusion(&mut self, x: &Self::State, inc: &[f64], out: &mut Self::State);
}

/// Scratch buffers so stepping never allocates.
pub struct StepScratch<S> {
    drift0: S,
    drift1: S,
    diff: S,
    pred: S,
}

impl<S: SdeState> StepScratch<S> {
    pub fn like(template: &S) -> Self {
        StepScratch {
            drift0: template.clone(),
            drift1: template.clone(),
            diff: template.clone(),
            pred: template.clone(),
        }
    }
}

/// Advance `x` by one step of the chosen scheme.
pub fn step<Sys: SdeSystem>(
    sys: &mut Sys,
    scheme: Scheme,
    dt: f64,
    x: &mut Sys::State,
    inc: &[f64],
    scratch: &mut StepScratch<Sys::State>,
) {
    sys.drift(x, &mut scratch.drift0);
    sys.diffusion(x, inc, &mut scratch.diff);
    match scheme {
        Scheme::Euler => {
            x.add_scaled(dt, &scratch.drift0);
            x.add_scaled(1.0, &scratch.diff);
        }
        Scheme::PredictorCorrector => {
            scratch.pred.assign(x);
            scratch.pred.add_scaled(dt, &scratch.drift0);
            scratch.pred.add_scaled(1.0, &scratch.diff);
            sys.drift(&scratch.pred, &mut scratch.drift1);
            x.add_scaled(0.5 * dt, &scratch.drift0);
            x.add_scaled(0.5 * dt, &scratch.drift1);
            x.add_scaled(1.0, &scratch.diff);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    struct Gbm {
        mu: f64,
        sigma: f64,
    }

    impl SdeSystem for Gbm {
        type State = Array1<f64>;
        fn drift(&mut self, x: &Self::State, out: &mut Self::State) {
            out[0] = self.mu * x[0];
        }
        fn diffusion(&mut self, x: &Self::State, inc: &[f64], out: &mut Self::State) {
            out[0] = self.sigma * x[0] * inc[0];
        }
    }

    struct LinearDecay;

    impl SdeSystem for LinearDecay {
        type State = Array1<f64>;
        fn drift(&mut self, x: &Self::State, out: &mut Self::State) {
            out[0] = -x[0];
        }
        fn diffusion(&mut self, _x: &Self::State, _inc: &[f64], out: &mut Self::State) {
            out[0] = 0.0;
        }
    }

    #[test]
    fn zero_dynamics_is_identity() {
        struct Zero;
        impl SdeSystem for Zero {
            type State = Array1<f64>;
            fn drift(&mut self, _: &Self::State, out: &mut Self::State) {
                out[0] = 0.0;
            }
            fn diffusion(&mut self, _: &Self::State, _: &[f64], out: &mut Self::State) {
                out[0] = 0.0;
            }
        }
        let mut x = array![0.75];
        let mut scratch = StepScratch::like(&x);
        step(&mut Zero, Scheme::PredictorCorrector, 0.1, &mut x, &[1.0], &mut scratch);
        assert_eq!(x[0], 0.75);
    }

    #[test]
    fn deterministic_limit_matches_heun() {
        // dx = -x dt: predictor-corrector reduces to Heun's method, with
        // one-step error O(dt^2) relative accuracy against exp(-dt)
        let dt = 1e-2;
        let mut x = array![1.0];
        let mut scratch = StepScratch::like(&x);
        step(
            &mut LinearDecay,
            Scheme::PredictorCorrector,
            dt,
            &mut x,
            &[0.0],
            &mut scratch,
        );
        let heun = 1.0 - dt + dt * dt / 2.0;
        assert!((x[0] - heun).abs() < 1e-15);
        assert!((x[0] - (-dt).exp()).abs() < dt * dt);
    }

    #[test]
    fn noise_stream_replays() {
        let mut a = NoiseStream::new(7, 3);
        let mut b = NoiseStream::new(7, 3);
        let mut va = [0.0; 4];
        let mut vb = [0.0; 4];
        for _ in 0..10 {
            a.wiener(1e-5, &mut va);
            b.wiener(1e-5, &mut vb);
            assert_eq!(va, vb);
        }
        let mut c = NoiseStream::new(7, 4);
        let mut vc = [0.0; 4];
        c.wiener(1e-5, &mut vc);
        assert_ne!(va, vc);
    }

    #[test]
    fn gbm_weak_convergence_order_one() {
        // E[x_T] = x0 exp(mu T); the Euler bias in the mean is deterministic
        // for linear drift, so the halving check is clean.
        let mu = 2.0;
        let t_final = 1.0;
        let paths = 10_000;
        let mean_err = |dt: f64, seed: u64| -> f64 {
            let steps = (t_final / dt).round() as usize;
            let mut sum = 0.0;
            for p in 0..paths {
                let mut noise = NoiseStream::new(seed, p as u64);
                let mut x = array![1.0];
                let mut scratch = StepScratch::like(&x);
                let mut sys = Gbm { mu, sigma: 0.2 };
                let mut inc = [0.0];
                for _ in 0..steps {
                    noise.wiener(dt, &mut inc);
                    step(&mut sys, Scheme::Euler, dt, &mut x, &inc, &mut scratch);
                }
                sum += x[0];
            }
            (sum / paths as f64 - (mu * t_final).exp()).abs()
        };
        let e1 = mean_err(0.02, 11);
        let e2 = mean_err(0.01, 12);
        assert!(e2 < e1, "weak error did not decrease: {e1} -> {e2}");
        let ratio = e2 / e1;
        assert!(
            (0.3..0.7).contains(&ratio),
            "weak error ratio {ratio} not compatible with O(dt)"
        );
    }
}
