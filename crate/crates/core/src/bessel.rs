//! Modified Bessel functions of the second kind, integer orders 0, 1, 2,
//! for complex arguments in the open right half-plane.
//!
//! Three regimes:
//! * `|z| <= 2`: ascending series with the logarithmic term,
//! * `2 < |z| < 17`: Steed's continued fraction (CF2, Temme normalization),
//! * `|z| >= 17`: Hankel asymptotic expansion.
//!
//! `exp(-z)` flushes to zero once `Re z > 745`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub(crate) const SERIES_RADIUS: f64 = 2.0;
pub(crate) const ASYMPTOTIC_RADIUS: f64 = 17.0;
pub(crate) const UNDERFLOW_RE: f64 = 745.0;

const TINY_TERM: f64 = 1e-18;

/// `K_order(z)` for `order` in {0, 1, 2} and `Re z > 0`.
pub fn bessel_k(order: u32, z: Complex64) -> Result<Complex64> {
    if order > 2 {
        return Err(Error::InvalidParameter(format!("Bessel order {order} not supported (0, 1 or 2)")));
    }
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(Error::Domain(format!("K_{order}({z}) requires Re z > 0")));
    }
    let (k0, k1) = k01(z);
    Ok(match order {
        0 => k0,
        1 => k1,
        _ => k0 + 2.0 * k1 / z,
    })
}

/// `(K_0(z), K_1(z))` without domain checks; caller guarantees `Re z > 0`.
pub(crate) fn k01(z: Complex64) -> (Complex64, Complex64) {
    if z.re > UNDERFLOW_RE {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let r = z.norm();
    if r <= SERIES_RADIUS {
        k01_series(z)
    } else if r < ASYMPTOTIC_RADIUS {
        k01_steed(z)
    } else {
        k01_asymptotic(z)
    }
}

fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let y = z * z * 0.25;
    let ell = (z * 0.5).ln();
    // t_k = y^k / (k!)^2
    let mut t = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0; // H_k
    let mut i0 = Complex64::new(0.0, 0.0);
    let mut k0_tail = Complex64::new(0.0, 0.0);
    let mut i1_half = Complex64::new(0.0, 0.0); // sum t_k/(k+1)
    let mut k1_tail = Complex64::new(0.0, 0.0);
    for k in 0..64 {
        let kf = k as f64;
        let u = t / (kf + 1.0);
        let psi_k1 = harmonic - EULER_GAMMA;
        let psi_k2 = harmonic + 1.0 / (kf + 1.0) - EULER_GAMMA;
        i0 += t;
        k0_tail += t * harmonic;
        i1_half += u;
        k1_tail += u * (psi_k1 + psi_k2);
        if t.norm() < TINY_TERM * (1.0 + i0.norm()) && k > 1 {
            break;
        }
        t *= y / ((kf + 1.0) * (kf + 1.0));
        harmonic += 1.0 / (kf + 1.0);
    }
    let k0 = -(ell + EULER_GAMMA) * i0 + k0_tail;
    let i1 = z * 0.5 * i1_half;
    let k1 = z.inv() + ell * i1 - z * 0.25 * k1_tail;
    (k0, k1)
}

fn k01_steed(x: Complex64) -> (Complex64, Complex64) {
    // Numerical Recipes `bessik`, x >= 2 branch, with mu = 0.
    let one = Complex64::new(1.0, 0.0);
    let mut b = 2.0 * (one + x);
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..20_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = (b + a * d).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn k01_asymptotic(z: Complex64) -> (Complex64, Complex64) {
    // K_nu(z) ~ sqrt(pi/2z) e^{-z} sum_k a_k(nu) / z^k,
    // a_k = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
    let zi = z.inv();
    let mut s0 = Complex64::new(1.0, 0.0);
    let mut s1 = Complex64::new(1.0, 0.0);
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = Complex64::new(1.0, 0.0);
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let denom = 8.0 * k as f64;
        let n0 = t0 * ((0.0 - odd * odd) / denom) * zi;
        let n1 = t1 * ((4.0 - odd * odd) / denom) * zi;
        // stop before the asymptotic series starts to diverge
        if n0.norm() > t0.norm() {
            break;
        }
        t0 = n0;
        t1 = n1;
        s0 += t0;
        s1 += t1;
        if t0.norm() < 1e-17 && t1.norm() < 1e-17 {
            break;
        }
    }
    let pre = (PI / (2.0 * z)).sqrt() * (-z).exp();
    (pre * s0, pre * s1)
}
