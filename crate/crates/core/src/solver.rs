//! Time-domain pipeline: sample and test the Dirichlet data, march the
//! discretized single-layer equation, postprocess velocity and pressure.

use crate::bem::{
    apply_constraints, assemble_v_scaled, potential_pressure_matrix, potential_velocity_matrix_scaled, ConstraintMode,
    DensitySpace, Discretization, SpaceKind,
};
use crate::cq::{cq_march, cq_postprocess, cq_weights, CqScheme, TimeHistory, WeightSequence};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, BoundaryCurve, Point};
use crate::kernels::ProblemConfig;
use nalgebra::DVector;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

/// Tolerance for `|int_Gamma phi . n| / max(1, int_Gamma |phi|)`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;
/// Observation points evaluated together when computing potential weights.
const POINT_CHUNK: usize = 48;

type DataFn = dyn Fn(f64, Point) -> [f64; 2] + Send + Sync;

/// Causal boundary velocity `phi(t, x)`; evaluates to zero for `t <= 0`.
#[derive(Clone)]
pub struct DirichletData {
    f: Arc<DataFn>,
    smoothness: usize,
    label: String,
}

impl fmt::Debug for DirichletData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletData").field("label", &self.label).field("smoothness", &self.smoothness).finish()
    }
}

impl DirichletData {
    /// `smoothness` is the number of continuous causal derivatives the caller
    /// vouches for; it is informational.
    pub fn new<F>(label: &str, smoothness: usize, f: F) -> Self
    where
        F: Fn(f64, Point) -> [f64; 2] + Send + Sync + 'static,
    {
        DirichletData { f: Arc::new(f), smoothness, label: label.to_string() }
    }

    pub fn zero() -> Self {
        DirichletData::new("zero", usize::MAX, |_, _| [0.0, 0.0])
    }

    /// Trace of the manufactured solution `sin^9(t) (2x, -2y)`.
    pub fn manufactured() -> Self {
        DirichletData::new("manufactured", 8, |t, x| exact_solution(t, x).0)
    }

    /// Rigid translation `t^5 e^{-2t} (1, 1) / sqrt(2)`.
    pub fn translation() -> Self {
        DirichletData::new("translation", 4, |t, _| {
            let a = t.powi(5) * (-2.0 * t).exp() * FRAC_1_SQRT_2;
            [a, a]
        })
    }

    /// The same data delayed by `t0 >= 0`.
    pub fn delayed(&self, t0: f64) -> Self {
        let f = self.f.clone();
        DirichletData {
            f: Arc::new(move |t, x| if t <= t0 { [0.0, 0.0] } else { f(t - t0, x) }),
            smoothness: self.smoothness,
            label: format!("{} delayed by {t0}", self.label),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    #[inline]
    pub fn eval(&self, t: f64, x: Point) -> [f64; 2] {
        if t <= 0.0 {
            [0.0, 0.0]
        } else {
            (self.f)(t, x)
        }
    }
}

/// Manufactured interior solution: `u = sin^9(t) H(t) (2x, -2y)`,
/// `p = -9 sin^8(t) cos(t) H(t) (x^2 - y^2)`.
pub fn exact_solution(t: f64, x: Point) -> ([f64; 2], f64) {
    if t <= 0.0 {
        return ([0.0, 0.0], 0.0);
    }
    let s = t.sin();
    let s8 = s.powi(8);
    let a = s8 * s;
    ([2.0 * a * x[0], -2.0 * a * x[1]], -9.0 * s8 * t.cos() * (x[0] * x[0] - x[1] * x[1]))
}

/// Everything that defines a discretization, independent of the data.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub curve: BoundaryCurve,
    pub n_elements: usize,
    pub space: SpaceKind,
    pub discretization: Discretization,
    pub constraints: ConstraintMode,
    pub scheme: CqScheme,
    pub config: ProblemConfig,
}

/// Assembled space and frequency-domain machinery shared by postprocessing.
#[derive(Debug, Clone)]
pub struct SolverContext {
    pub space: DensitySpace,
    pub scheme: CqScheme,
    pub config: ProblemConfig,
    pub discretization: Discretization,
    /// `|sqrt(s)|` used to lay out all quadrature rules.
    pub rule_scale: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub context: SolverContext,
    pub history: TimeHistory,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// `velocity[n][k]` at step `n`, point `k`.
    pub velocity: Vec<Vec<[f64; 2]>>,
    pub pressure: Vec<Vec<f64>>,
}

impl SimulationResult {
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    /// `(errU, errP)` against the manufactured solution at step `n`.
    pub fn errors_at(&self, n: usize) -> (f64, f64) {
        let t = self.times[n];
        let mut eu = 0.0f64;
        let mut ep = 0.0f64;
        for (k, &x) in self.points.iter().enumerate() {
            let (u, p) = exact_solution(t, x);
            let v = self.velocity[n][k];
            eu = eu.max(((v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2)).sqrt());
            ep = ep.max((self.pressure[n][k] - p).abs());
        }
        (eu, ep)
    }
}

impl Simulation {
    pub fn context(&self) -> Result<SolverContext> {
        if self.config.dimension() != 2 {
            return Err(Error::InvalidParameter("time marching is implemented in two dimensions".into()));
        }
        let mesh = build_mesh(self.curve, self.n_elements)?;
        Ok(SolverContext {
            space: DensitySpace::new(mesh, self.space),
            scheme: self.scheme,
            config: self.config,
            discretization: self.discretization,
            rule_scale: self.scheme.max_sqrt_modulus()?,
        })
    }
}

/// Checks `int_Gamma phi(t) . n ds = 0` at every time step.
pub fn check_compatibility(ctx: &SolverContext, data: &DirichletData) -> Result<()> {
    let mesh = ctx.space.mesh();
    for n in 0..=ctx.scheme.steps() {
        let t = ctx.scheme.time(n);
        let flux = mesh.integrate(12, |x, nrm| {
            let v = data.eval(t, x);
            v[0] * nrm[0] + v[1] * nrm[1]
        });
        let size = mesh.integrate(12, |x, _| {
            let v = data.eval(t, x);
            v[0].abs() + v[1].abs()
        });
        if flux.abs() > COMPATIBILITY_TOLERANCE * size.max(1.0) {
            return Err(Error::Incompatible { time: t, flux });
        }
    }
    Ok(())
}

/// Tested data `phi_{n,j} = <mu_j, phi(t_n)>` for every step.
pub fn sample_data(ctx: &SolverContext, data: &DirichletData) -> Result<Vec<DVector<f64>>> {
    (0..=ctx.scheme.steps())
        .map(|n| {
            let t = ctx.scheme.time(n);
            ctx.space.load_vector(ctx.discretization, |x| data.eval(t, x))
        })
        .collect()
}

/// CQ weights of the discretized single-layer operator.
pub fn operator_weights(ctx: &SolverContext) -> Result<WeightSequence> {
    cq_weights(&ctx.scheme, |f, _| assemble_v_scaled(&ctx.space, ctx.discretization, f, &ctx.config, ctx.rule_scale))
}

/// Marches the boundary equation and returns the density history.
pub fn solve_densities(
    ctx: &SolverContext,
    weights: &WeightSequence,
    constraints: ConstraintMode,
    data: &DirichletData,
) -> Result<TimeHistory> {
    check_compatibility(ctx, data)?;
    let rhs = sample_data(ctx, data)?;
    let moments = ctx.space.moments(ctx.discretization)?;
    let system0 = apply_constraints(weights.get(0), &moments, constraints);
    cq_march(weights, &system0, |n| Ok(rhs[n].clone()))
}

/// Full pipeline: densities, then velocity and pressure at `points`.
pub fn run_simulation(sim: &Simulation, data: &DirichletData, points: &[Point]) -> Result<SimulationResult> {
    let ctx = sim.context()?;
    let weights = operator_weights(&ctx)?;
    let history = solve_densities(&ctx, &weights, sim.constraints, data)?;
    drop(weights);
    let velocity = velocity_history(&ctx, &history, points)?;
    let pmat = potential_pressure_matrix(&ctx.space, points)?;
    let pressure = (0..history.steps()).map(|n| (&pmat * history.density(n)).iter().copied().collect()).collect();
    Ok(SimulationResult {
        times: (0..history.steps()).map(|n| ctx.scheme.time(n)).collect(),
        context: ctx,
        history,
        points: points.to_vec(),
        velocity,
        pressure,
    })
}

/// Velocity at `points` for every step (`[step][point]`).
pub fn velocity_history(ctx: &SolverContext, history: &TimeHistory, points: &[Point]) -> Result<Vec<Vec<[f64; 2]>>> {
    let mut out = vec![Vec::with_capacity(points.len()); history.steps()];
    for chunk in points.chunks(POINT_CHUNK) {
        let w = cq_weights(&ctx.scheme, |f, _| {
            potential_velocity_matrix_scaled(&ctx.space, f, &ctx.config, chunk, ctx.rule_scale)
        })?;
        let series = cq_postprocess(&w, history)?;
        for (n, u) in series.iter().enumerate() {
            out[n].extend((0..chunk.len()).map(|k| [u[2 * k], u[2 * k + 1]]));
        }
    }
    Ok(out)
}

/// Velocity at `points` for the requested steps only (`[i][point]`).
pub fn velocity_at_steps(
    ctx: &SolverContext,
    history: &TimeHistory,
    points: &[Point],
    steps: &[usize],
) -> Result<Vec<Vec<[f64; 2]>>> {
    if let Some(&bad) = steps.iter().find(|&&n| n >= history.steps()) {
        return Err(Error::InvalidParameter(format!("step {bad} is beyond the last step {}", history.steps() - 1)));
    }
    let dens: Vec<DVector<f64>> = (0..history.steps()).map(|n| history.density(n)).collect();
    let mut out = vec![Vec::with_capacity(points.len()); steps.len()];
    for chunk in points.chunks(POINT_CHUNK) {
        let w = cq_weights(&ctx.scheme, |f, _| {
            potential_velocity_matrix_scaled(&ctx.space, f, &ctx.config, chunk, ctx.rule_scale)
        })?;
        for (i, &n) in steps.iter().enumerate() {
            let mut u = DVector::zeros(2 * chunk.len());
            for m in 0..=n {
                u.gemv(1.0, w.get(m), &dens[n - m], 1.0);
            }
            out[i].extend((0..chunk.len()).map(|k| [u[2 * k], u[2 * k + 1]]));
        }
    }
    Ok(out)
}

/// Pressure at `points` for the requested steps (`[i][point]`).
pub fn pressure_at_steps(
    ctx: &SolverContext,
    history: &TimeHistory,
    points: &[Point],
    steps: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let pmat = potential_pressure_matrix(&ctx.space, points)?;
    Ok(steps.iter().map(|&n| (&pmat * history.density(n)).iter().copied().collect()).collect())
}

/// Outward flux `int u . n ds` through the circle of given center and radius
/// at each requested step, by the trapezoidal rule with `samples` points.
pub fn circle_flux(
    ctx: &SolverContext,
    history: &TimeHistory,
    center: Point,
    radius: f64,
    samples: usize,
    steps: &[usize],
) -> Result<Vec<f64>> {
    let angles: Vec<f64> = (0..samples).map(|k| 2.0 * std::f64::consts::PI * k as f64 / samples as f64).collect();
    let points: Vec<Point> =
        angles.iter().map(|a| [center[0] + radius * a.cos(), center[1] + radius * a.sin()]).collect();
    let vel = velocity_at_steps(ctx, history, &points, steps)?;
    let ds = 2.0 * std::f64::consts::PI * radius / samples as f64;
    Ok(vel.iter().map(|u| u.iter().zip(&angles).map(|(v, a)| (v[0] * a.cos() + v[1] * a.sin()) * ds).sum()).collect())
}

/// Uniform grid `x = x0 + j dx`, `y = y0 + i dy`, stored row-major by `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Also mask cells inside the obstacle.
    pub mask_interior: bool,
}

impl GridSpec {
    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.x0 + j as f64 * self.dx, self.y0 + i as f64 * self.dy]
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Field values on a grid; `None` marks masked cells.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub grid: GridSpec,
    pub ux: Vec<Option<f64>>,
    pub uy: Vec<Option<f64>>,
    pub p: Vec<Option<f64>>,
    pub vorticity: Vec<Option<f64>>,
}

/// Cells closer to the boundary than the smallest element (or inside the
/// obstacle when requested) are masked.
pub fn grid_mask(ctx: &SolverContext, grid: &GridSpec) -> Vec<bool> {
    let mesh = ctx.space.mesh();
    let h_min = mesh.min_arclength();
    let mut mask = Vec::with_capacity(grid.len());
    for i in 0..grid.rows {
        for j in 0..grid.cols {
            let p = grid.point(i, j);
            let near = mesh.distance(p) <= h_min;
            let inside = grid.mask_interior && mesh.curve().contains(p);
            mask.push(near || inside);
        }
    }
    mask
}

/// Velocity, pressure and vorticity on `grid` at the given steps.
pub fn field_snapshot(
    ctx: &SolverContext,
    history: &TimeHistory,
    grid: &GridSpec,
    steps: &[usize],
) -> Result<Vec<Snapshot>> {
    if grid.is_empty() || grid.dx <= 0.0 || grid.dy <= 0.0 {
        return Err(Error::EmptyGrid);
    }
    let mask = grid_mask(ctx, grid);
    let live: Vec<usize> = (0..grid.len()).filter(|&c| !mask[c]).collect();
    if live.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let pts: Vec<Point> = live.iter().map(|&c| grid.point(c / grid.cols, c % grid.cols)).collect();
    let vel = velocity_at_steps(ctx, history, &pts, steps)?;
    let pre = pressure_at_steps(ctx, history, &pts, steps)?;
    let mut out = Vec::with_capacity(steps.len());
    for (i, &n) in steps.iter().enumerate() {
        let mut ux = vec![None; grid.len()];
        let mut uy = vec![None; grid.len()];
        let mut p = vec![None; grid.len()];
        for (k, &c) in live.iter().enumerate() {
            ux[c] = Some(vel[i][k][0]);
            uy[c] = Some(vel[i][k][1]);
            p[c] = Some(pre[i][k]);
        }
        let vorticity = vorticity(grid, &ux, &uy);
        out.push(Snapshot { step: n, time: ctx.scheme.time(n), grid: *grid, ux, uy, p, vorticity });
    }
    Ok(out)
}

/// Derivative along one grid direction: central where both neighbours are
/// present, one-sided otherwise.
fn directional_derivative(
    f: &[Option<f64>],
    c: usize,
    prev: Option<usize>,
    next: Option<usize>,
    h: f64,
) -> Option<f64> {
    let fc = f[c]?;
    let fp = prev.and_then(|i| f[i]);
    let fn_ = next.and_then(|i| f[i]);
    match (fp, fn_) {
        (Some(a), Some(b)) => Some((b - a) / (2.0 * h)),
        (None, Some(b)) => Some((b - fc) / h),
        (Some(a), None) => Some((fc - a) / h),
        (None, None) => None,
    }
}

/// `d uy / dx - d ux / dy` on the grid.
pub fn vorticity(grid: &GridSpec, ux: &[Option<f64>], uy: &[Option<f64>]) -> Vec<Option<f64>> {
    let (rows, cols) = (grid.rows, grid.cols);
    let mut out = vec![None; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let c = i * cols + j;
            let left = (j > 0).then(|| c - 1);
            let right = (j + 1 < cols).then(|| c + 1);
            let down = (i > 0).then(|| c - cols);
            let up = (i + 1 < rows).then(|| c + cols);
            let dvx = directional_derivative(uy, c, left, right, grid.dx);
            let duy = directional_derivative(ux, c, down, up, grid.dy);
            out[c] = match (dvx, duy) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exact_solution_examples() {
        assert_eq!(exact_solution(0.0, [0.3, 0.7]), ([0.0, 0.0], 0.0));
        assert_eq!(exact_solution(-1.0, [0.3, 0.7]), ([0.0, 0.0], 0.0));
        let (u, p) = exact_solution(FRAC_PI_2, [0.3, 0.7]);
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] + 1.4).abs() < 1e-15);
        assert!(p.abs() < 1e-15);
        let (u, p) = exact_solution(1.0, [-0.5, -0.5]);
        let s9 = 1f64.sin().powi(9);
        assert!((u[0] + s9).abs() < 1e-15 && (u[1] - s9).abs() < 1e-15);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn data_is_causal_and_delay_shifts() {
        let d = DirichletData::translation();
        assert_eq!(d.eval(0.0, [1.0, 0.0]), [0.0, 0.0]);
        let late = d.delayed(0.5);
        assert_eq!(late.eval(0.4, [1.0, 0.0]), [0.0, 0.0]);
        assert_eq!(late.eval(1.5, [0.0, 0.0]), d.eval(1.0, [0.0, 0.0]));
    }

    #[test]
    fn vorticity_of_linear_field() {
        // u = (a y, b x) has vorticity b - a everywhere
        let grid = GridSpec { rows: 5, cols: 6, x0: -1.0, y0: -1.0, dx: 0.3, dy: 0.4, mask_interior: false };
        let mut ux = Vec::new();
        let mut uy = Vec::new();
        for i in 0..grid.rows {
            for j in 0..grid.cols {
                let p = grid.point(i, j);
                ux.push(Some(2.0 * p[1]));
                uy.push(Some(-0.5 * p[0]));
            }
        }
        ux[14] = None;
        uy[14] = None;
        let w = vorticity(&grid, &ux, &uy);
        assert!(w[14].is_none());
        for (c, v) in w.iter().enumerate() {
            if c != 14 {
                assert!((v.unwrap() + 2.5).abs() < 1e-12);
            }
        }
    }
}
