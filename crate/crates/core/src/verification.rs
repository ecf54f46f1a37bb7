//! Convergence tables, Laplace-domain property checks and closed-form
//! references for the time discretization.

use crate::bem::{
    apply_constraints, assemble_v, solve_bordered, ConstraintMode, DensitySpace, Discretization, SpaceKind,
};
use crate::cq::{convolve, cq_weights, CqScheme};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point};
use crate::kernels::{ComplexFrequency, ProblemConfig};
use crate::quadrature::gauss_legendre;
use crate::solver::{run_simulation, DirichletData, Simulation};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;

pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;
/// Galerkin quadrature tolerance for `|V c_n| / (|V| |c_n|)`.
pub const KERNEL_TOLERANCE: f64 = 1e-8;
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;
/// Random vectors per frequency in the positivity check.
pub const POSITIVITY_SAMPLES: usize = 100;

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub m: usize,
    pub err_u: f64,
    pub err_p: f64,
    pub ecr_u: Option<f64>,
    pub ecr_p: Option<f64>,
}

/// Estimated convergence rate `log2(previous / current)`.
pub fn ecr(previous: f64, current: f64) -> f64 {
    (previous / current).log2()
}

/// Rejects ladders that do not double both `N` and `M` from row to row.
pub fn check_ladder(ladder: &[(usize, usize)]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Ladder);
    }
    for w in ladder.windows(2) {
        if w[1].0 != 2 * w[0].0 || w[1].1 != 2 * w[0].1 {
            return Err(Error::Ladder);
        }
    }
    Ok(())
}

/// Table rows from errors measured along a ladder.
pub fn records_from_errors(ladder: &[(usize, usize)], errors: &[(f64, f64)]) -> Result<Vec<ConvergenceRecord>> {
    check_ladder(ladder)?;
    if ladder.len() != errors.len() {
        return Err(Error::Shape(format!("{} ladder rows but {} error pairs", ladder.len(), errors.len())));
    }
    Ok(ladder
        .iter()
        .zip(errors)
        .enumerate()
        .map(|(k, (&(n, m), &(eu, ep)))| ConvergenceRecord {
            n,
            m,
            err_u: eu,
            err_p: ep,
            ecr_u: (k > 0).then(|| ecr(errors[k - 1].0, eu)),
            ecr_p: (k > 0).then(|| ecr(errors[k - 1].1, ep)),
        })
        .collect())
}

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// A manufactured-solution experiment, refined along a ladder.
#[derive(Debug, Clone)]
pub struct ConvergenceProblem {
    pub curve: BoundaryCurve,
    pub space: SpaceKind,
    pub discretization: Discretization,
    pub constraints: ConstraintMode,
    pub order: usize,
    pub final_time: f64,
    pub config: ProblemConfig,
    pub points: Vec<Point>,
}

impl ConvergenceProblem {
    /// Square `(-1, 1)^2`, discontinuous P1 Galerkin, BDF3, `T = 1`.
    pub fn square() -> Self {
        ConvergenceProblem {
            curve: BoundaryCurve::Square { half_width: 1.0 },
            space: SpaceKind::P1Discontinuous,
            discretization: Discretization::Galerkin,
            constraints: ConstraintMode::MultiplierM,
            order: 3,
            final_time: 1.0,
            config: ProblemConfig::default(),
            points: vec![[-0.5, -0.5], [0.3, 0.7], [0.6, 0.2]],
        }
    }

    /// Unit circle, P0 with reduced integration, BDF3, `T = 1`.
    pub fn circle() -> Self {
        ConvergenceProblem {
            curve: BoundaryCurve::Circle { radius: 1.0 },
            space: SpaceKind::P0,
            discretization: Discretization::Nystrom,
            constraints: ConstraintMode::MultiplierM,
            order: 3,
            final_time: 1.0,
            config: ProblemConfig::default(),
            points: vec![[0.0, 0.0], [0.5, 0.5], [-0.6, 0.1]],
        }
    }

    pub fn simulation(&self, n: usize, m: usize) -> Result<Simulation> {
        Ok(Simulation {
            curve: self.curve,
            n_elements: n,
            space: self.space,
            discretization: self.discretization,
            constraints: self.constraints,
            scheme: CqScheme::new(self.order, self.final_time, m)?,
            config: self.config,
        })
    }

    /// `(errU, errP)` at the final time for one resolution.
    pub fn errors(&self, n: usize, m: usize) -> Result<(f64, f64)> {
        let sim = self.simulation(n, m)?;
        let res = run_simulation(&sim, &DirichletData::manufactured(), &self.points)?;
        Ok(res.errors_at(m))
    }
}

/// Runs every rung of the ladder and fills in the rates.
pub fn convergence_sweep(problem: &ConvergenceProblem, ladder: &[(usize, usize)]) -> Result<Vec<ConvergenceRecord>> {
    check_ladder(ladder)?;
    let errors: Vec<(f64, f64)> = ladder.iter().map(|&(n, m)| problem.errors(n, m)).collect::<Result<_>>()?;
    records_from_errors(ladder, &errors)
}

/// Outcome of one property at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub s: Complex64,
    /// Residual (or margin, for positivity) in the units of `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Reported for information, not counted by [`PropertyReport::all_passed`].
    pub diagnostic: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.diagnostic)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed && !c.diagnostic)
    }

    pub fn property_passed(&self, property: &str) -> bool {
        self.checks.iter().filter(|c| c.property == property).all(|c| c.passed)
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let cmp = if c.property.starts_with("positivity") { ">=" } else { "<=" };
            writeln!(
                f,
                "{:<15} s = {:>+11.4e} {:>+11.4e}i  value = {:>+11.4e}  ({cmp} {:.1e})  {}",
                c.property,
                c.s.re,
                c.s.im,
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// `|s| in {0.1, 1, 10, 100}` times `Arg s in {0, +-pi/2, +-3pi/4}`.
pub fn default_frequencies() -> Vec<Complex64> {
    let mut out = Vec::new();
    for m in [0.1, 1.0, 10.0, 100.0] {
        for a in [0.0, 0.5, -0.5, 0.75, -0.75] {
            out.push(Complex64::from_polar(m, a * PI));
        }
    }
    out
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Checks, for each frequency, Galerkin symmetry, positivity of
/// `Re(conj(sqrt s) x^H V x)`, `V c_n ~ 0` for the discrete normal, and the
/// agreement of the bordered and rank-one-augmented solves.
pub fn laplace_property_suite(
    space: &DensitySpace,
    frequencies: &[Complex64],
    cfg: &ProblemConfig,
) -> Result<PropertyReport> {
    laplace_property_suite_with(space, frequencies, cfg, |sp, f, c| assemble_v(sp, Discretization::Galerkin, f, c))
}

/// As [`laplace_property_suite`] with a caller-supplied assembler.
pub fn laplace_property_suite_with<A>(
    space: &DensitySpace,
    frequencies: &[Complex64],
    cfg: &ProblemConfig,
    assemble: A,
) -> Result<PropertyReport>
where
    A: Fn(&DensitySpace, &ComplexFrequency, &ProblemConfig) -> Result<DMatrix<Complex64>>,
{
    let mut report = PropertyReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let moments = space.moments(Discretization::Galerkin)?;
    let cn = space.normal_coefficients().map(|v| Complex64::new(v, 0.0));
    let mut push = |property: &'static str, s, value: f64, tolerance, passed| {
        let diagnostic = property == "positivity-sqrt";
        report.checks.push(PropertyCheck { property, s, value, tolerance, passed, diagnostic });
    };
    for &s in frequencies {
        let freq = ComplexFrequency::new(s)?;
        let v = assemble(space, &freq, cfg)?;
        let norm = frobenius(&v);

        let sym = frobenius(&(&v - v.transpose())) / norm;
        push("symmetry", s, sym, SYMMETRY_TOLERANCE, sym <= SYMMETRY_TOLERANCE);

        // conj(sqrt s) is the stated weight; sqrt s is reported alongside
        let mut margin = f64::INFINITY;
        let mut margin_sqrt = f64::INFINITY;
        for _ in 0..POSITIVITY_SAMPLES {
            let x = random_vector(&mut rng, v.nrows());
            let q = x.conjugate().dot(&(&v * &x)) / (norm * x.norm_squared());
            margin = margin.min((freq.sqrt_s().conj() * q).re);
            margin_sqrt = margin_sqrt.min((freq.sqrt_s() * q).re);
        }
        push("positivity", s, margin, -POSITIVITY_TOLERANCE, margin >= -POSITIVITY_TOLERANCE);
        push("positivity-sqrt", s, margin_sqrt, -POSITIVITY_TOLERANCE, margin_sqrt >= -POSITIVITY_TOLERANCE);

        let kern = (&v * &cn).norm() / (norm * cn.norm());
        push("kernel", s, kern, KERNEL_TOLERANCE, kern <= KERNEL_TOLERANCE);

        // matched data: rhs = V x0 with <x0, m> = 0, so the multiplier vanishes
        let b = moments.m.map(|v| Complex64::new(v, 0.0));
        let mut x0 = random_vector(&mut rng, v.nrows());
        let proj = b.dot(&x0) / b.norm_squared();
        x0 -= &b * proj;
        let rhs = &v * &x0;
        let bordered = apply_constraints(&v, &moments, ConstraintMode::MultiplierM);
        let augmented = apply_constraints(&v, &moments, ConstraintMode::AugmentedVtilde);
        let equiv = match (solve_bordered(&bordered, &rhs), solve_bordered(&augmented, &rhs)) {
            (Ok(a), Ok(c)) => {
                let a = a.rows(0, v.nrows()).into_owned();
                (&a - &c).norm() / a.norm()
            }
            _ => f64::INFINITY,
        };
        push("equivalence", s, equiv, EQUIVALENCE_TOLERANCE, equiv <= EQUIVALENCE_TOLERANCE);
    }
    Ok(report)
}

/// Scalar transfer functions with known inverse transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogTransfer {
    /// `1/s`, kernel `H(t)`.
    Integrator,
    /// `1/(s+1)`, kernel `e^{-t}`.
    Relaxation,
    /// `1/s^2`, kernel `t`.
    DoubleIntegrator,
}

impl CatalogTransfer {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.replace(' ', "").as_str() {
            "1/s" => Ok(CatalogTransfer::Integrator),
            "1/(s+1)" => Ok(CatalogTransfer::Relaxation),
            "1/s^2" | "1/s2" => Ok(CatalogTransfer::DoubleIntegrator),
            _ => Err(Error::Catalog(name.to_string())),
        }
    }

    pub fn symbol(&self, s: Complex64) -> Complex64 {
        match self {
            CatalogTransfer::Integrator => 1.0 / s,
            CatalogTransfer::Relaxation => 1.0 / (s + 1.0),
            CatalogTransfer::DoubleIntegrator => 1.0 / (s * s),
        }
    }

    /// Inverse Laplace transform at `t > 0`.
    pub fn kernel(&self, t: f64) -> f64 {
        match self {
            CatalogTransfer::Integrator => 1.0,
            CatalogTransfer::Relaxation => (-t).exp(),
            CatalogTransfer::DoubleIntegrator => t,
        }
    }
}

/// `(f * g)(t) = int_0^t f(t - tau) g(tau) dtau` by composite Gauss quadrature.
pub fn time_convolution_oracle<G: Fn(f64) -> f64>(transfer: &str, g: G, t: f64) -> Result<f64> {
    let k = CatalogTransfer::from_name(transfer)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let panels = 64;
    let h = t / panels as f64;
    let rule = gauss_legendre(20);
    Ok((0..panels).map(|p| rule.integrate(p as f64 * h, (p + 1) as f64 * h, |tau| k.kernel(t - tau) * g(tau))).sum())
}

/// CQ approximation of `(f * g)(T)` with `steps` steps of BDF`order`.
pub fn cq_convolution<G: Fn(f64) -> f64>(
    transfer: CatalogTransfer,
    g: G,
    order: usize,
    final_time: f64,
    steps: usize,
) -> Result<f64> {
    let scheme = CqScheme::new(order, final_time, steps)?;
    let w = cq_weights(&scheme, |f, _| Ok(DMatrix::from_element(1, 1, transfer.symbol(f.s()))))?;
    let weights: Vec<f64> = w.weights.iter().map(|m| m[(0, 0)]).collect();
    let data: Vec<f64> = (0..=steps).map(|n| g(scheme.time(n))).collect();
    Ok(*convolve(&weights, &data).last().unwrap_or(&0.0))
}

/// Errors `|y_M - y(1)|` of the CQ convolution of `1/(s+1)` with `t^3` along
/// a step ladder, and the fitted order (slope of `log err` against `log dt`).
pub fn cq_order_study(order: usize, steps: &[usize]) -> Result<(Vec<f64>, f64)> {
    let g = |t: f64| if t > 0.0 { t * t * t } else { 0.0 };
    let exact = time_convolution_oracle("1/(s+1)", g, 1.0)?;
    let errors: Vec<f64> = steps
        .iter()
        .map(|&m| cq_convolution(CatalogTransfer::Relaxation, g, order, 1.0, m).map(|y| (y - exact).abs()))
        .collect::<Result<_>>()?;
    let x: Vec<f64> = steps.iter().map(|&m| (1.0 / m as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let slope = least_squares_slope(&x, &y);
    Ok((errors, slope))
}
