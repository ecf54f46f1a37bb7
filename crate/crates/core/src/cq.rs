//! Convolution quadrature based on backward differentiation formulas.
//!
//! For a transfer operator `K(s)` the weights are the Taylor coefficients of
//! `K(delta(zeta) / dt)`, where `delta` is the BDF generating polynomial.
//! They are approximated by the trapezoidal rule on a circle of radius `R`
//! with `L = M + 1` nodes and recovered from nodal values with one FFT per
//! matrix entry.

use crate::bem::{factorize, Factorization};
use crate::error::{Error, Result};
use crate::kernels::ComplexFrequency;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Target accuracy of the contour rule; sets `R = eps^(1 / (2 L))`.
pub const CONTOUR_EPSILON: f64 = 1e-15;
/// Largest accepted imaginary part of `W_n`, relative to `R^{-n} max_l |K(s_l)|`
/// (the size of the rounding errors the contour transform can produce).
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// `delta(zeta) = sum_{l=1}^p (1 - zeta)^l / l`.
pub fn bdf_delta(order: usize, zeta: Complex64) -> Complex64 {
    let w = Complex64::new(1.0, 0.0) - zeta;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut out = Complex64::new(0.0, 0.0);
    for l in 1..=order {
        pow *= w;
        out += pow / l as f64;
    }
    out
}

/// Highest supported BDF order.
pub const MAX_BDF_ORDER: usize = 6;

/// BDF order, step size, number of steps and contour nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqScheme {
    order: usize,
    steps: usize,
    dt: f64,
    nodes: usize,
}

impl CqScheme {
    /// `steps` steps of size `final_time / steps`, `L = steps + 1` contour nodes.
    pub fn new(order: usize, final_time: f64, steps: usize) -> Result<Self> {
        if !(1..=MAX_BDF_ORDER).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "BDF order must be between 1 and {MAX_BDF_ORDER}, got {order}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("at least one time step is required".into()));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidParameter(format!("final time must be positive, got {final_time}")));
        }
        let scheme = CqScheme { order, steps, dt: final_time / steps as f64, nodes: steps + 1 };
        scheme.frequencies()?;
        Ok(scheme)
    }

    /// Same scheme with `nodes >= steps + 1` contour nodes.
    pub fn with_nodes(self, nodes: usize) -> Result<Self> {
        if nodes < self.steps + 1 {
            return Err(Error::InvalidParameter(format!(
                "need at least {} contour nodes, got {nodes}",
                self.steps + 1
            )));
        }
        let scheme = CqScheme { nodes, ..self };
        scheme.frequencies()?;
        Ok(scheme)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.dt * n as f64
    }

    /// Number of contour nodes `L` (default `M + 1`).
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn radius(&self) -> f64 {
        CONTOUR_EPSILON.powf(1.0 / (2.0 * self.nodes() as f64))
    }

    /// `s_l = delta(R e^{2 pi i l / L}) / dt` for `l = 0..L`.
    pub fn frequency(&self, l: usize) -> Result<ComplexFrequency> {
        let ang = 2.0 * PI * l as f64 / self.nodes() as f64;
        let zeta = Complex64::from_polar(self.radius(), ang);
        ComplexFrequency::new(bdf_delta(self.order, zeta) / self.dt)
    }

    pub fn frequencies(&self) -> Result<Vec<ComplexFrequency>> {
        (0..self.nodes()).map(|l| self.frequency(l)).collect()
    }

    /// Largest `|sqrt(s_l)|` over all nodes.
    pub fn max_sqrt_modulus(&self) -> Result<f64> {
        Ok(self.frequencies()?.iter().map(|f| f.sqrt_s().norm()).fold(0.0, f64::max))
    }
}

/// Real weight matrices `W_0, ..., W_M` (`W_n` for `n < L`).
#[derive(Debug, Clone)]
pub struct WeightSequence {
    pub weights: Vec<DMatrix<f64>>,
}

impl WeightSequence {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.weights.first().map(|w| w.shape()).unwrap_or((0, 0))
    }

    pub fn get(&self, n: usize) -> &DMatrix<f64> {
        &self.weights[n]
    }
}

/// Evaluates `transfer` at the nodes `l = 0..=L/2` (the others are complex
/// conjugates) and returns the real weights.
///
/// `transfer(freq, l)` must satisfy `K(conj s) = conj K(s)`.
pub fn cq_weights<F>(scheme: &CqScheme, mut transfer: F) -> Result<WeightSequence>
where
    F: FnMut(&ComplexFrequency, usize) -> Result<DMatrix<Complex64>>,
{
    let nodes = scheme.nodes();
    let half = nodes / 2 + 1;
    let mut shape = (0, 0);
    // entry-major storage so that each FFT input is contiguous
    let mut data: Vec<Complex64> = Vec::new();
    for l in 0..half {
        let freq = scheme.frequency(l)?;
        let k = transfer(&freq, l).map_err(|e| Error::Transfer { node: l, source: Box::new(e) })?;
        if l == 0 {
            shape = k.shape();
            data = vec![Complex64::default(); shape.0 * shape.1 * half];
        } else if k.shape() != shape {
            return Err(Error::Shape(format!("transfer returned {:?} at node {l}, expected {:?}", k.shape(), shape)));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::Transfer {
                node: l,
                source: Box::new(Error::Singular("non-finite transfer matrix".into())),
            });
        }
        for (idx, v) in k.iter().enumerate() {
            data[idx * half + l] = *v;
        }
    }
    let entries = shape.0 * shape.1;
    let count = scheme.steps() + 1;
    let mut weights = vec![DMatrix::<f64>::zeros(shape.0, shape.1); count];
    let fft = FftPlanner::new().plan_fft_forward(nodes);
    let mut buf = vec![Complex64::default(); nodes];
    let scale_pow: Vec<f64> = (0..count).map(|n| scheme.radius().powi(-(n as i32)) / nodes as f64).collect();
    let k_max = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut max_im = 0.0f64;
    for idx in 0..entries {
        let src = &data[idx * half..(idx + 1) * half];
        buf[..half].copy_from_slice(src);
        for l in half..nodes {
            buf[l] = src[nodes - l].conj();
        }
        fft.process(&mut buf);
        for (n, w) in weights.iter_mut().enumerate() {
            let v = buf[n] * scale_pow[n];
            w.as_mut_slice()[idx] = v.re;
            // relative to the rounding scale R^{-n} max|K|
            max_im = max_im.max(v.im.abs() / (scale_pow[n] * nodes as f64));
        }
    }
    if k_max > 0.0 && max_im > REALITY_TOLERANCE * k_max {
        return Err(Error::NonReal(max_im / k_max));
    }
    Ok(WeightSequence { weights })
}

/// Complex weights from all `L` nodes, without using conjugate symmetry.
pub fn cq_weights_full<F>(scheme: &CqScheme, mut transfer: F) -> Result<Vec<DMatrix<Complex64>>>
where
    F: FnMut(&ComplexFrequency, usize) -> Result<DMatrix<Complex64>>,
{
    let nodes = scheme.nodes();
    let mats: Vec<DMatrix<Complex64>> = (0..nodes)
        .map(|l| {
            let f = scheme.frequency(l)?;
            transfer(&f, l).map_err(|e| Error::Transfer { node: l, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let shape = mats[0].shape();
    if mats.iter().any(|m| m.shape() != shape) {
        return Err(Error::Shape("transfer matrices change shape between nodes".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(nodes);
    let count = scheme.steps() + 1;
    let mut out = vec![DMatrix::<Complex64>::zeros(shape.0, shape.1); count];
    let mut buf = vec![Complex64::default(); nodes];
    for idx in 0..shape.0 * shape.1 {
        for (l, m) in mats.iter().enumerate() {
            buf[l] = m.as_slice()[idx];
        }
        fft.process(&mut buf);
        for (n, w) in out.iter_mut().enumerate() {
            w.as_mut_slice()[idx] = buf[n] * (scheme.radius().powi(-(n as i32)) / nodes as f64);
        }
    }
    Ok(out)
}

/// Discrete solution history `x_0, ..., x_M` of the bordered system; the
/// leading `n_dof` entries of each vector are the density.
#[derive(Debug, Clone)]
pub struct TimeHistory {
    pub values: Vec<DVector<f64>>,
    pub n_dof: usize,
}

impl TimeHistory {
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self, n: usize) -> DVector<f64> {
        self.values[n].rows(0, self.n_dof).into_owned()
    }

    /// Multiplier values at step `n` (empty for unbordered systems).
    pub fn multipliers(&self, n: usize) -> DVector<f64> {
        let v = &self.values[n];
        v.rows(self.n_dof, v.len() - self.n_dof).into_owned()
    }
}

/// Solves `sum_{m=0}^n W_m x_{n-m} = g_n` for `n = 0..=M`.
///
/// `system0` is `W_0` possibly bordered with constant constraint rows; the
/// remaining weights act on the leading `n_dof = weights.shape().1` entries.
/// `rhs(n)` returns `g_n` of length `n_dof`.
pub fn cq_march<G>(weights: &WeightSequence, system0: &DMatrix<f64>, mut rhs: G) -> Result<TimeHistory>
where
    G: FnMut(usize) -> Result<DVector<f64>>,
{
    let (rows, n_dof) = weights.shape();
    if rows != n_dof || system0.nrows() < n_dof || system0.nrows() != system0.ncols() {
        return Err(Error::Shape(format!(
            "weights {rows}x{n_dof} incompatible with a {}x{} leading system",
            system0.nrows(),
            system0.ncols()
        )));
    }
    let lu: Factorization<f64> = factorize(system0)?;
    let mut values: Vec<DVector<f64>> = Vec::with_capacity(weights.len());
    let mut densities: Vec<DVector<f64>> = Vec::with_capacity(weights.len());
    for n in 0..weights.len() {
        let mut r = rhs(n)?;
        if r.len() != n_dof {
            return Err(Error::Shape(format!("right-hand side has length {}, expected {n_dof}", r.len())));
        }
        for m in 1..=n {
            r.gemv(-1.0, weights.get(m), &densities[n - m], 1.0);
        }
        let x = lu.solve_padded(&r);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("non-finite solution at step {n}")));
        }
        densities.push(x.rows(0, n_dof).into_owned());
        values.push(x);
    }
    Ok(TimeHistory { values, n_dof })
}

/// `u_n = sum_{m=0}^n S_m lambda_{n-m}` for every step of `history`.
pub fn cq_postprocess(weights: &WeightSequence, history: &TimeHistory) -> Result<Vec<DVector<f64>>> {
    let (rows, cols) = weights.shape();
    if cols != history.n_dof || weights.len() < history.steps() {
        return Err(Error::Shape(format!(
            "{} weights of shape {rows}x{cols} cannot act on {} densities of length {}",
            weights.len(),
            history.steps(),
            history.n_dof
        )));
    }
    let dens: Vec<DVector<f64>> = (0..history.steps()).map(|n| history.density(n)).collect();
    Ok((0..history.steps())
        .map(|n| {
            let mut out = DVector::zeros(rows);
            for m in 0..=n {
                out.gemv(1.0, weights.get(m), &dens[n - m], 1.0);
            }
            out
        })
        .collect())
}

/// Scalar convolution `y_n = sum_m w_m g_{n-m}`.
pub fn convolve(weights: &[f64], data: &[f64]) -> Vec<f64> {
    (0..data.len()).map(|n| (0..=n).map(|m| weights[m] * data[n - m]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(
        f: impl Fn(Complex64) -> Complex64,
    ) -> impl FnMut(&ComplexFrequency, usize) -> Result<DMatrix<Complex64>> {
        move |fr, _| Ok(DMatrix::from_element(1, 1, f(fr.s())))
    }

    #[test]
    fn delta_polynomials() {
        let z = Complex64::new(0.3, 0.2);
        let w = Complex64::new(1.0, 0.0) - z;
        assert!((bdf_delta(1, z) - w).norm() < 1e-15);
        assert!((bdf_delta(2, z) - (w + w * w / 2.0)).norm() < 1e-15);
        assert!((bdf_delta(3, z) - (w + w * w / 2.0 + w * w * w / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn scheme_validation() {
        assert!(CqScheme::new(7, 1.0, 10).is_err());
        assert!(CqScheme::new(6, 1.0, 10).is_ok());
        assert!(CqScheme::new(2, 1.0, 10).unwrap().with_nodes(5).is_err());
        assert!(CqScheme::new(2, 1.0, 0).is_err());
        assert!(CqScheme::new(2, -1.0, 10).is_err());
        let s = CqScheme::new(2, 2.0, 8).unwrap();
        assert_eq!(s.nodes(), 9);
        assert!((s.dt() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_transfer_gives_delta_sequence() {
        let s = CqScheme::new(2, 1.0, 16).unwrap();
        let w = cq_weights(&s, scalar(|_| Complex64::new(1.0, 0.0))).unwrap();
        assert!((w.get(0)[(0, 0)] - 1.0).abs() < 1e-7);
        for n in 1..w.len() {
            assert!(w.get(n)[(0, 0)].abs() < 1e-6);
        }
    }

    #[test]
    fn backward_euler_integration_weights() {
        // K(s) = 1/s with BDF1 gives dt * (1, 1, 1, ...)
        let s = CqScheme::new(1, 1.0, 20).unwrap();
        let w = cq_weights(&s, scalar(|s| 1.0 / s)).unwrap();
        for n in 0..w.len() {
            assert!((w.get(n)[(0, 0)] - s.dt()).abs() < 1e-7, "n={n}");
        }
    }

    #[test]
    fn derivative_weights_bdf2() {
        // K(s) = s gives the BDF2 differentiation stencil
        let s = CqScheme::new(2, 1.0, 10).unwrap();
        let w = cq_weights(&s, scalar(|s| s)).unwrap();
        let expected = [1.5, -2.0, 0.5];
        for n in 0..w.len() {
            let e = expected.get(n).copied().unwrap_or(0.0) / s.dt();
            assert!((w.get(n)[(0, 0)] - e).abs() < 1e-5, "n={n}");
        }
    }

    #[test]
    fn non_conjugate_transfer_is_rejected() {
        let s = CqScheme::new(1, 1.0, 8).unwrap();
        let err = cq_weights(&s, scalar(|s| Complex64::new(0.0, 1.0) * s)).unwrap_err();
        // s_0 is real, so K(s_0) must be real too
        assert!(matches!(err, Error::NonReal(_)));
    }

    #[test]
    fn march_reproduces_known_convolution() {
        // W = [1, 1, 1, ...] (K = 1/s, BDF1, dt = 1): x_n = g_n - g_{n-1}
        let s = CqScheme::new(1, 8.0, 8).unwrap();
        let w = cq_weights(&s, scalar(|s| 1.0 / s)).unwrap();
        let g: Vec<f64> = (0..9).map(|n| (n * n) as f64).collect();
        let sys = w.get(0).clone();
        let h = cq_march(&w, &sys, |n| Ok(DVector::from_element(1, g[n]))).unwrap();
        for n in 1..9 {
            assert!((h.density(n)[0] - (g[n] - g[n - 1])).abs() < 1e-5);
        }
    }

    #[test]
    fn convolve_matches_hand_sum() {
        assert_eq!(convolve(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), vec![1.0, 3.0, 6.0]);
    }
}
