//! Python bindings: Pauli algebra, code definitions, coefficient-basis
//! construction, and the trajectory/ensemble runners.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ctqec::code::load_code;
use ctqec::discrete;
use ctqec::engine::{co_integrate, ControlRecording, SimContext};
use ctqec::error::Error;
use ctqec::full_filter::ModelParams;
use ctqec::harness::{controller_spec, ControllerKind};
use ctqec::pauli::PauliString;
use ctqec::reduced::{
    build_closure, truncate_first_level, truncate_minimal, wonham_basis, CoefficientBasis,
    DEFAULT_BUDGET,
};
use ctqec::sde::Scheme;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Phased tensor product of single-qubit Pauli letters.
#[pyclass(name = "PauliString", frozen)]
struct PyPauli {
    inner: PauliString,
}

#[pymethods]
impl PyPauli {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyPauli {
            inner: text.parse().map_err(err)?,
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString({:?})", self.inner.to_string())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Group product with exact accumulated phase.
    fn multiply(&self, other: &PyPauli) -> PyResult<PyPauli> {
        Ok(PyPauli {
            inner: self.inner.multiply(&other.inner).map_err(err)?,
        })
    }

    fn commutes(&self, other: &PyPauli) -> PyResult<bool> {
        self.inner.commutes(&other.inner).map_err(err)
    }

    #[getter]
    fn weight(&self) -> usize {
        self.inner.weight()
    }

    #[getter]
    fn phase(&self) -> String {
        match self.inner.phase {
            ctqec::pauli::Phase::PlusOne => "+1".into(),
            ctqec::pauli::Phase::PlusI => "+i".into(),
            ctqec::pauli::Phase::MinusOne => "-1".into(),
            ctqec::pauli::Phase::MinusI => "-i".into(),
        }
    }

    /// Dense matrix as nested lists of complex numbers.
    fn to_matrix(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self.inner.realize().map_err(err)?;
        Ok((0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect())
    }
}

/// A coefficient basis: operator list plus the lowered sparse generators.
#[pyclass(name = "CoefficientBasis", frozen)]
struct PyBasis {
    inner: Arc<CoefficientBasis>,
}

#[pymethods]
impl PyBasis {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_syndrome(&self) -> usize {
        self.inner.num_syndrome
    }

    #[getter]
    fn combined(&self) -> bool {
        self.inner.combined
    }

    #[getter]
    fn first_level_generated(&self) -> usize {
        self.inner.first_level_generated
    }

    fn level_counts(&self) -> Vec<usize> {
        self.inner.level_counts()
    }

    fn summary(&self) -> String {
        self.inner.summary()
    }

    /// Operator text forms, one per coordinate.
    fn operators(&self) -> Vec<String> {
        self.inner
            .coords
            .iter()
            .map(|c| format!("{}{}", if c.sign < 0 { "-" } else { "" }, c.op))
            .collect()
    }

    fn export(&self, path: &str) -> PyResult<()> {
        ctqec::harness::write_basis_export(&self.inner, std::path::Path::new(path)).map_err(err)
    }
}

/// Fidelity time series from one noise realization.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    codespace: Vec<f64>,
    #[pyo3(get)]
    codeword: Vec<f64>,
    #[pyo3(get)]
    seed: u64,
    #[pyo3(get)]
    stream: u64,
}

/// A stabilizer code with its simulation context.
#[pyclass(name = "Code", frozen)]
struct PyCode {
    ctx: Arc<SimContext>,
}

impl PyCode {
    fn params(&self, kappa: f64, lambda_max: f64, dt: f64) -> PyResult<ModelParams> {
        ModelParams::new(1.0, kappa, lambda_max, dt).map_err(err)
    }
}

#[pymethods]
impl PyCode {
    /// Built-in name ("five-qubit", "bitflip") or a code file path.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let code = load_code(spec).map_err(err)?;
        Ok(PyCode {
            ctx: Arc::new(SimContext::new(code).map_err(err)?),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.ctx.code.name.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.ctx.code.n
    }

    #[getter]
    fn k(&self) -> usize {
        self.ctx.code.k
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.ctx.code.generators.iter().map(|g| g.to_string()).collect()
    }

    #[getter]
    fn logical_z(&self) -> String {
        self.ctx.code.logical_z.to_string()
    }

    #[getter]
    fn error_set(&self) -> Vec<String> {
        self.ctx.code.error_set.iter().map(|e| e.to_string()).collect()
    }

    /// Generator outcomes (+/-1) for the given Pauli string.
    fn syndrome_of(&self, pauli: &str) -> PyResult<Vec<i8>> {
        let p: PauliString = pauli.parse().map_err(err)?;
        self.ctx.code.syndrome_of(&p).map_err(err)
    }

    /// Recovery Pauli for a syndrome vector.
    fn recovery(&self, syndrome: Vec<i8>) -> PyResult<String> {
        self.ctx
            .code
            .recovery
            .get(&syndrome)
            .map(|p| p.to_string())
            .ok_or_else(|| PyValueError::new_err("syndrome not in the recovery table"))
    }

    /// Full symbolic closure (1024 operators for the five-qubit code).
    #[pyo3(signature = (max_level=None))]
    fn closure(&self, max_level: Option<usize>) -> PyResult<PyBasis> {
        let basis =
            build_closure(&self.ctx.code, &self.ctx.space, max_level, DEFAULT_BUDGET).map_err(err)?;
        Ok(PyBasis {
            inner: Arc::new(basis),
        })
    }

    /// First-level truncated, pair-combined basis (136 for the five-qubit code).
    fn truncated_basis(&self) -> PyResult<PyBasis> {
        let raw = build_closure(&self.ctx.code, &self.ctx.space, Some(1), DEFAULT_BUDGET)
            .map_err(err)?;
        let basis = truncate_first_level(&self.ctx.code, &self.ctx.space, &raw).map_err(err)?;
        Ok(PyBasis {
            inner: Arc::new(basis),
        })
    }

    /// Minimal policy-only filter (31 for the five-qubit code).
    fn minimal_basis(&self) -> PyResult<PyBasis> {
        let raw = build_closure(&self.ctx.code, &self.ctx.space, Some(1), DEFAULT_BUDGET)
            .map_err(err)?;
        let combined = truncate_first_level(&self.ctx.code, &self.ctx.space, &raw).map_err(err)?;
        Ok(PyBasis {
            inner: Arc::new(truncate_minimal(&combined).map_err(err)?),
        })
    }

    /// Syndrome-probability filter basis (level 0 only).
    fn wonham_basis(&self) -> PyResult<PyBasis> {
        Ok(PyBasis {
            inner: Arc::new(wonham_basis(&self.ctx.code, &self.ctx.space).map_err(err)?),
        })
    }

    /// Encoded |0> density matrix as nested complex lists.
    fn encoded_zero(&self) -> Vec<Vec<Complex64>> {
        let m = &self.ctx.rho0;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    /// Co-integrate plant and controller for one noise realization.
    #[pyo3(signature = (controller="truncated-136", seed=1, stream=0, t_final=0.25,
                        kappa=100.0, lambda_max=200.0, dt=1e-5, stride=100, scheme="pc"))]
    #[allow(clippy::too_many_arguments)]
    fn run_trajectory(
        &self,
        py: Python<'_>,
        controller: &str,
        seed: u64,
        stream: u64,
        t_final: f64,
        kappa: f64,
        lambda_max: f64,
        dt: f64,
        stride: usize,
        scheme: &str,
    ) -> PyResult<PyTrajectory> {
        let kind: ControllerKind = controller.parse().map_err(err)?;
        let params = self.params(kappa, lambda_max, dt)?;
        let scheme: Scheme = scheme.parse().map_err(err)?;
        let steps = (t_final / dt).round() as usize;
        let ctx = self.ctx.clone();
        let record = py.detach(move || {
            let spec = controller_spec(&ctx, kind)?;
            co_integrate(
                &ctx,
                &spec,
                params,
                scheme,
                seed,
                stream,
                steps,
                stride,
                ControlRecording::Off,
            )
        });
        let record = record.map_err(err)?;
        Ok(PyTrajectory {
            times: record.times,
            codespace: record.codespace,
            codeword: record.codeword,
            seed: record.seed,
            stream: record.stream,
        })
    }
}

/// Closed-form discrete-time codeword fidelity (asymptote 1/64).
#[pyfunction]
#[pyo3(signature = (t, gamma=1.0))]
fn discrete_codeword_fidelity(t: f64, gamma: f64) -> f64 {
    discrete::discrete_codeword_fidelity(t, gamma)
}

/// Pauli-weight class coefficients a_0..a_5 of the depolarized state.
#[pyfunction]
#[pyo3(signature = (t, gamma=1.0))]
fn ansatz_coefficients(t: f64, gamma: f64) -> [f64; 6] {
    discrete::ansatz_coefficients(t, gamma).a
}

#[pymodule]
fn _ctqec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauli>()?;
    m.add_class::<PyCode>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(discrete_codeword_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(ansatz_coefficients, m)?)?;
    Ok(())
}
