//! Brinkman (resolvent Stokes) kernels in the Laplace domain.
//!
//! The velocity kernel is
//!
//! ```text
//! E_u(r; s) = 1 / (4 (d-1) pi nu) * ( A_d(sqrt(s) r) / r^(d-2) I + B_d(sqrt(s) r) / r^d  r (x) r )
//! ```
//!
//! and the pressure kernel `e_p(r) = r / (2 (d-1) pi r^d)` does not depend on `s`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::bessel::{k01, EULER_GAMMA, UNDERFLOW_RE};
use crate::error::{Error, Result};

/// Below this modulus `A_d`, `B_d` are evaluated from their power series.
pub const SERIES_SWITCH_RADIUS: f64 = 0.5;

const TINY_TERM: f64 = 1e-18;

/// A Laplace parameter `s` off the cut `(-inf, 0]`, with its principal root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency {
    s: Complex64,
    sqrt_s: Complex64,
}

impl ComplexFrequency {
    pub fn new(s: Complex64) -> Result<Self> {
        let sqrt_s = principal_sqrt(s)?;
        Ok(Self { s, sqrt_s })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn sqrt_s(&self) -> Complex64 {
        self.sqrt_s
    }

    /// `Re s^{1/2}`.
    pub fn omega(&self) -> f64 {
        self.sqrt_s.re
    }

    /// `min(1, Re s^{1/2})`.
    pub fn omega_lower(&self) -> f64 {
        self.omega().min(1.0)
    }

    pub fn conj(&self) -> Self {
        Self { s: self.s.conj(), sqrt_s: self.sqrt_s.conj() }
    }
}

/// Viscosity and space dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConfig {
    nu: f64,
    dimension: usize,
}

impl ProblemConfig {
    pub fn new(nu: f64, dimension: usize) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("viscosity must be > 0, got {nu}")));
        }
        if dimension != 2 && dimension != 3 {
            return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {dimension}")));
        }
        Ok(Self { nu, dimension })
    }

    pub fn planar(nu: f64) -> Result<Self> {
        Self::new(nu, 2)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { nu: 1.0, dimension: 2 }
    }
}

/// Value of the velocity kernel: a symmetric `d x d` complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTensor {
    dimension: usize,
    entries: [[Complex64; 3]; 3],
}

impl KernelTensor {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dimension && j < self.dimension);
        self.entries[i][j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dimension).all(|i| (0..self.dimension).all(|j| self.entries[i][j] == self.entries[j][i]))
    }
}

/// `|s|^{1/2} exp(i Arg(s) / 2)`, rejecting the cut `(-inf, 0]`.
pub fn principal_sqrt(s: Complex64) -> Result<Complex64> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Domain(format!("non-finite frequency {s}")));
    }
    if s.im == 0.0 && s.re <= 0.0 {
        return Err(Error::Domain(format!("s = {s} lies on the cut (-inf, 0]")));
    }
    let root = Complex64::from_polar(s.norm().sqrt(), 0.5 * s.im.atan2(s.re));
    Ok(root)
}

fn check_argument(dimension: usize, z: Complex64) -> Result<()> {
    match dimension {
        2 if z.re > 0.0 => Ok(()),
        2 => Err(Error::Domain(format!("A_2/B_2 need Re z > 0, got {z}"))),
        3 if z.re >= 0.0 => Ok(()),
        3 => Err(Error::Domain(format!("A_3/B_3 need Re z >= 0, got {z}"))),
        d => Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}"))),
    }
}

/// `A_d(z)`.
pub fn scalar_a(dimension: usize, z: Complex64) -> Result<Complex64> {
    check_argument(dimension, z)?;
    Ok(if z.norm() <= SERIES_SWITCH_RADIUS {
        scalar_ab_series(dimension, z).0
    } else {
        scalar_ab_direct(dimension, z).0
    })
}

/// `B_d(z)`.
pub fn scalar_b(dimension: usize, z: Complex64) -> Result<Complex64> {
    check_argument(dimension, z)?;
    Ok(if z.norm() <= SERIES_SWITCH_RADIUS {
        scalar_ab_series(dimension, z).1
    } else {
        scalar_ab_direct(dimension, z).1
    })
}

/// Closed-form branch (cancellation-prone near 0). Domain unchecked.
pub fn scalar_ab_direct(dimension: usize, z: Complex64) -> (Complex64, Complex64) {
    let zi2 = (z * z).inv();
    if dimension == 2 {
        if z.re > UNDERFLOW_RE {
            return (-2.0 * zi2, 4.0 * zi2);
        }
        let (k0, k1) = k01(z);
        let a = 2.0 * (k0 + k1 / z - zi2);
        let k2 = k0 + 2.0 * k1 / z;
        let b = 2.0 * (2.0 * zi2 - k2);
        (a, b)
    } else {
        let e = if z.re > UNDERFLOW_RE { Complex64::new(0.0, 0.0) } else { (-z).exp() };
        let a = 2.0 * zi2 * (e * (z * z + z + 1.0) - 1.0);
        let b = -2.0 * zi2 * (e * (z * z + 3.0 * z + 3.0) - 3.0);
        (a, b)
    }
}

/// Power-series branch. Domain unchecked; accurate for `|z|` up to about 2.
pub fn scalar_ab_series(dimension: usize, z: Complex64) -> (Complex64, Complex64) {
    if dimension == 2 {
        let parts = LogSeries::new(z * z * 0.25);
        let ell = (z * 0.5).ln();
        (ell * parts.log_a + parts.rest_a, ell * parts.log_b + parts.rest_b)
    } else {
        // A_3 = 2 sum (-1)^j (j+1)^2 / (j+2)! z^j
        // B_3 = -2 sum (-1)^j (j+1)(j-1) / (j+2)! z^j
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut zj = Complex64::new(1.0, 0.0);
        let mut fact = 2.0; // (j+2)!
        for j in 0..80 {
            let jf = j as f64;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let ta = zj * (2.0 * sign * (jf + 1.0) * (jf + 1.0) / fact);
            let tb = zj * (-2.0 * sign * (jf + 1.0) * (jf - 1.0) / fact);
            a += ta;
            b += tb;
            if j > 2 && ta.norm() < TINY_TERM && tb.norm() < TINY_TERM {
                break;
            }
            zj *= z;
            fact *= jf + 3.0;
        }
        (a, b)
    }
}

/// Entire-in-`y = z^2/4` pieces of the planar functions:
/// `A_2(z) = log(z/2) * log_a(y) + rest_a(y)` and likewise for `B_2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSeries {
    pub log_a: Complex64,
    pub rest_a: Complex64,
    pub log_b: Complex64,
    pub rest_b: Complex64,
}

impl LogSeries {
    pub fn new(y: Complex64) -> Self {
        let mut log_a = Complex64::new(0.0, 0.0);
        let mut rest_a = Complex64::new(0.0, 0.0);
        let mut sum_b = Complex64::new(0.0, 0.0);
        let mut rest_b_sum = Complex64::new(0.0, 0.0);
        // t = y^k/(k!)^2, v = y^k/(k!(k+2)!)
        let mut t = Complex64::new(1.0, 0.0);
        let mut v = Complex64::new(0.5, 0.0);
        let mut harmonic = 0.0;
        for k in 0..64 {
            let kf = k as f64;
            let psi1 = harmonic - EULER_GAMMA;
            let psi2 = psi1 + 1.0 / (kf + 1.0);
            let psi3 = psi2 + 1.0 / (kf + 2.0);
            log_a += t * (-2.0 + 1.0 / (kf + 1.0));
            rest_a += t * (2.0 * psi1 - 0.5 * (psi1 + psi2) / (kf + 1.0));
            sum_b += v;
            rest_b_sum += v * (psi1 + psi3);
            if k > 1 && t.norm() < TINY_TERM {
                break;
            }
            t *= y / ((kf + 1.0) * (kf + 1.0));
            v *= y / ((kf + 1.0) * (kf + 3.0));
            harmonic += 1.0 / (kf + 1.0);
        }
        Self { log_a, rest_a, log_b: 2.0 * y * sum_b, rest_b: 1.0 - y * rest_b_sum }
    }
}

/// `E_u(r; s)`.
pub fn velocity_kernel(r: &[f64], freq: &ComplexFrequency, cfg: &ProblemConfig) -> Result<KernelTensor> {
    let d = cfg.dimension();
    if r.len() != d {
        return Err(Error::Shape(format!("displacement has {} components, expected {d}", r.len())));
    }
    let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rn == 0.0 {
        return Err(Error::Singularity);
    }
    let z = freq.sqrt_s() * rn;
    let (a, b) = if z.norm() <= SERIES_SWITCH_RADIUS { scalar_ab_series(d, z) } else { scalar_ab_direct(d, z) };
    let pre = 1.0 / (4.0 * (d as f64 - 1.0) * PI * cfg.nu());
    let a = a * pre / rn.powi(d as i32 - 2);
    let b = b * pre / rn.powi(d as i32);
    let mut entries = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..d {
        for j in i..d {
            let mut v = b * (r[i] * r[j]);
            if i == j {
                v += a;
            }
            entries[i][j] = v;
            entries[j][i] = v;
        }
    }
    Ok(KernelTensor { dimension: d, entries })
}

/// `e_p(r) = r / (2 (d-1) pi |r|^d)`.
pub fn pressure_kernel(r: &[f64], dimension: usize) -> Result<Vec<f64>> {
    if dimension != 2 && dimension != 3 {
        return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {dimension}")));
    }
    if r.len() != dimension {
        return Err(Error::Shape(format!("displacement has {} components, expected {dimension}", r.len())));
    }
    let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rn == 0.0 {
        return Err(Error::Singularity);
    }
    let scale = 1.0 / (2.0 * (dimension as f64 - 1.0) * PI * rn.powi(dimension as i32));
    Ok(r.iter().map(|x| x * scale).collect())
}

/// Planar velocity kernel `(xx, xy, yy)` without checks; `rn = |r| > 0`.
#[inline]
pub(crate) fn velocity_kernel_2d(rx: f64, ry: f64, sqrt_s: Complex64, nu: f64) -> [Complex64; 3] {
    let r2 = rx * rx + ry * ry;
    let rn = r2.sqrt();
    let z = sqrt_s * rn;
    let (a, b) = if z.norm() <= SERIES_SWITCH_RADIUS { scalar_ab_series(2, z) } else { scalar_ab_direct(2, z) };
    let pre = 1.0 / (4.0 * PI * nu);
    let a = a * pre;
    let b = b * (pre / r2);
    [a + b * (rx * rx), b * (rx * ry), a + b * (ry * ry)]
}

/// Split of the planar kernel near the diagonal:
/// `E_u(r; s) = log|r| * log_part + rest`, both entire in `r` along smooth
/// curves. Only accurate while `|sqrt(s) r|` stays below ~2.
#[inline]
pub(crate) fn velocity_kernel_2d_split(
    rx: f64,
    ry: f64,
    sqrt_s: Complex64,
    nu: f64,
) -> ([Complex64; 3], [Complex64; 3]) {
    let r2 = rx * rx + ry * ry;
    let y = sqrt_s * sqrt_s * (0.25 * r2);
    let parts = LogSeries::new(y);
    let shift = (sqrt_s * 0.5).ln();
    let pre = 1.0 / (4.0 * PI * nu);
    let la = parts.log_a * pre;
    let ra = (shift * parts.log_a + parts.rest_a) * pre;
    // log_b = 2 y sum(...) carries the r^2 factor, so log_b / r^2 is regular
    let (lb, rb) = if r2 > 0.0 {
        (parts.log_b * (pre / r2), (shift * parts.log_b + parts.rest_b) * (pre / r2))
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    };
    (
        [la + lb * (rx * rx), lb * (rx * ry), la + lb * (ry * ry)],
        [ra + rb * (rx * rx), rb * (rx * ry), ra + rb * (ry * ry)],
    )
}

/// Planar pressure kernel without checks.
#[inline]
pub(crate) fn pressure_kernel_2d(rx: f64, ry: f64) -> [f64; 2] {
    let scale = 1.0 / (2.0 * PI * (rx * rx + ry * ry));
    [rx * scale, ry * scale]
}
