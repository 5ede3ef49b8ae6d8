//! Python bindings: the three imaging solvers plus the operators and
//! utilities needed to drive them from Python. Images travel as flat
//! row-major lists of floats in [0, 1].

// `?` inside #[pyfunction] bodies trips this lint through the macro
// expansion on recent clippy versions.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pdsplit::imaging::{DeblurTask, DenoiseTask, InpaintTask};
use pdsplit::metrics;
use pdsplit::pgm::{self, ImageFile};
use pdsplit::solvers::{solve, Callbacks, SolverConfig, Variant};
use pdsplit::vector::PrimalVector;
use pdsplit::{linops, prox, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        Error::Diverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn make_config(
    algorithm: &str,
    iters: usize,
    rho: f64,
    gamma0: Option<f64>,
    ergodic: bool,
    threads: usize,
) -> PyResult<SolverConfig> {
    Ok(SolverConfig {
        variant: Variant::parse(algorithm).map_err(py_err)?,
        max_iters: iters,
        rho,
        gamma0,
        ergodic,
        threads,
        ..Default::default()
    })
}

/// TV-regularized denoising of a noisy image `b`. Returns
/// `(restored, iterations, objective)`.
#[pyfunction]
#[pyo3(signature = (b, rows, cols, lam, algorithm="alg2", iters=100, rho=0.3, gamma0=None, threads=1))]
#[allow(clippy::too_many_arguments)]
fn denoise(
    b: Vec<f64>,
    rows: usize,
    cols: usize,
    lam: f64,
    algorithm: &str,
    iters: usize,
    rho: f64,
    gamma0: Option<f64>,
    threads: usize,
) -> PyResult<(Vec<f64>, usize, f64)> {
    let task = DenoiseTask::new(b, rows, cols, lam).map_err(py_err)?;
    let spec = task.build_spec();
    let config = make_config(algorithm, iters, rho, gamma0, false, threads)?;
    let result =
        solve(&spec, &config, task.b.clone(), None, &Callbacks::default()).map_err(py_err)?;
    let objective = task.objective(&result.state.x.data).map_err(py_err)?;
    Ok((result.state.x.data, result.state.iter, objective))
}

/// TV + l1 deblurring of a blurred noisy image `b` under a Gaussian kernel.
/// Returns `(restored, iterations, objective)`.
#[pyfunction]
#[pyo3(signature = (b, rows, cols, kernel_size, kernel_sigma, lambda1=3e-3, lambda2=2e-5, algorithm="alg1", iters=400, threads=1))]
#[allow(clippy::too_many_arguments)]
fn deblur(
    b: Vec<f64>,
    rows: usize,
    cols: usize,
    kernel_size: usize,
    kernel_sigma: f64,
    lambda1: f64,
    lambda2: f64,
    algorithm: &str,
    iters: usize,
    threads: usize,
) -> PyResult<(Vec<f64>, usize, f64)> {
    let kernel = linops::gaussian_kernel(kernel_size, kernel_sigma).map_err(py_err)?;
    let task =
        DeblurTask::new(b, rows, cols, kernel, kernel_size, lambda1, lambda2).map_err(py_err)?;
    let spec = task.build_spec().map_err(py_err)?;
    let config = make_config(algorithm, iters, 0.0, None, false, threads)?;
    let result =
        solve(&spec, &config, task.b.clone(), None, &Callbacks::default()).map_err(py_err)?;
    // report the feasible prox point
    let x = result.state.p1.data;
    let objective = task.objective(&x).map_err(py_err)?;
    Ok((x, result.state.iter, objective))
}

/// TV inpainting of an image with lost pixels (`mask` entries 0 where
/// lost). Returns `(restored, iterations, objective)`.
#[pyfunction]
#[pyo3(signature = (b, mask, rows, cols, lam=0.05, algorithm="alg1", iters=200, threads=1))]
#[allow(clippy::too_many_arguments)]
fn inpaint(
    b: Vec<f64>,
    mask: Vec<f64>,
    rows: usize,
    cols: usize,
    lam: f64,
    algorithm: &str,
    iters: usize,
    threads: usize,
) -> PyResult<(Vec<f64>, usize, f64)> {
    let task = InpaintTask::new(b, mask, rows, cols, lam).map_err(py_err)?;
    let spec = task.build_spec().map_err(py_err)?;
    let config = make_config(algorithm, iters, 0.0, None, false, threads)?;
    let result =
        solve(&spec, &config, task.b.clone(), None, &Callbacks::default()).map_err(py_err)?;
    let x = result.state.p1.data;
    let objective = task.objective(&x).map_err(py_err)?;
    Ok((x, result.state.iter, objective))
}

#[pyfunction]
fn synthetic_image(rows: usize, cols: usize) -> Vec<f64> {
    pdsplit::imaging::synthetic_image(rows, cols)
}

#[pyfunction]
fn add_noise(x: Vec<f64>, sigma: f64, seed: u64) -> Vec<f64> {
    pdsplit::imaging::add_noise(&x, sigma, seed)
}

#[pyfunction]
fn drop_mask(n: usize, drop_fraction: f64, seed: u64) -> PyResult<Vec<f64>> {
    pdsplit::imaging::drop_mask(n, drop_fraction, seed).map_err(py_err)
}

#[pyfunction]
fn tv_iso(x: Vec<f64>, rows: usize, cols: usize) -> PyResult<f64> {
    prox::tv_iso(&x, rows, cols).map_err(py_err)
}

#[pyfunction]
fn tv_aniso(x: Vec<f64>, rows: usize, cols: usize) -> PyResult<f64> {
    prox::tv_aniso(&x, rows, cols).map_err(py_err)
}

#[pyfunction]
fn grad_apply(x: Vec<f64>, rows: usize, cols: usize) -> PyResult<Vec<f64>> {
    linops::grad_apply(&x, rows, cols).map_err(py_err)
}

#[pyfunction]
fn grad_adjoint(y: Vec<f64>, rows: usize, cols: usize) -> PyResult<Vec<f64>> {
    linops::grad_adjoint(&y, rows, cols).map_err(py_err)
}

#[pyfunction]
fn gaussian_kernel(size: usize, sigma: f64) -> PyResult<Vec<f64>> {
    linops::gaussian_kernel(size, sigma).map_err(py_err)
}

/// Reflexive-boundary correlation with a Gaussian kernel.
#[pyfunction]
fn blur(
    x: Vec<f64>,
    rows: usize,
    cols: usize,
    kernel_size: usize,
    kernel_sigma: f64,
) -> PyResult<Vec<f64>> {
    let kernel = linops::gaussian_kernel(kernel_size, kernel_sigma).map_err(py_err)?;
    linops::blur_apply(&x, &kernel, kernel_size, rows, cols).map_err(py_err)
}

/// Power-iteration estimate of the discrete gradient norm (below sqrt(8)).
#[pyfunction]
#[pyo3(signature = (rows, cols, iters=200, seed=0))]
fn gradient_norm_estimate(rows: usize, cols: usize, iters: usize, seed: u64) -> PyResult<f64> {
    linops::estimate_norm(&linops::GradientOp::new(rows, cols), iters, seed).map_err(py_err)
}

/// The decreasing step sequence of the accelerated variant
/// (`n_max + 1` values).
#[pyfunction]
fn gamma_schedule(gamma0: f64, rho: f64, n_max: usize) -> PyResult<Vec<f64>> {
    pdsplit::solvers::gamma_schedule_alg2(gamma0, rho, n_max).map_err(py_err)
}

#[pyfunction]
fn rmse(x: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    metrics::rmse(&x, &reference).map_err(py_err)
}

/// Loads a P2/P5 PGM file; returns `(pixels, width, height)`.
#[pyfunction]
fn load_pgm(path: &str) -> PyResult<(Vec<f64>, usize, usize)> {
    let img = pgm::load_pgm(path).map_err(py_err)?;
    Ok((img.pixels, img.width, img.height))
}

/// Saves normalized pixels as binary P5 with maxval 255.
#[pyfunction]
fn save_pgm(path: &str, pixels: Vec<f64>, width: usize, height: usize) -> PyResult<()> {
    let img = ImageFile::from_normalized(pixels, width, height).map_err(py_err)?;
    pgm::save_pgm(path, &img).map_err(py_err)
}

/// Distance of the primal iterate to a reference after each iteration of
/// a denoising run; handy for convergence plots.
#[pyfunction]
#[pyo3(signature = (b, rows, cols, lam, reference, algorithm="alg2", iters=1000, rho=0.3))]
#[allow(clippy::too_many_arguments)]
fn denoise_distance_trace(
    b: Vec<f64>,
    rows: usize,
    cols: usize,
    lam: f64,
    reference: Vec<f64>,
    algorithm: &str,
    iters: usize,
    rho: f64,
) -> PyResult<Vec<f64>> {
    let task = DenoiseTask::new(b, rows, cols, lam).map_err(py_err)?;
    let spec = task.build_spec();
    let config = make_config(algorithm, iters, rho, None, false, 1)?;
    let callbacks = Callbacks {
        reference: Some(&reference),
        ..Default::default()
    };
    let x0: PrimalVector = task.b.clone();
    let result = solve(&spec, &config, x0, None, &callbacks).map_err(py_err)?;
    Ok(result
        .log
        .records
        .iter()
        .map(|r| r.dist_to_ref.sqrt())
        .collect())
}

#[pymodule]
fn pdsplit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(deblur, m)?)?;
    m.add_function(wrap_pyfunction!(inpaint, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_image, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(drop_mask, m)?)?;
    m.add_function(wrap_pyfunction!(tv_iso, m)?)?;
    m.add_function(wrap_pyfunction!(tv_aniso, m)?)?;
    m.add_function(wrap_pyfunction!(grad_apply, m)?)?;
    m.add_function(wrap_pyfunction!(grad_adjoint, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(blur, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_norm_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(load_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(save_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_distance_trace, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
