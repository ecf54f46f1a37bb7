//! Density spaces on a boundary mesh and the discretized single-layer
//! operator, its constraint borderings and the potentials it induces.
//!
//! Degrees of freedom are ordered element-major: index `(e * nb + a) * 2 + c`
//! for element `e`, local basis function `a` (`nb` per element) and vector
//! component `c`.
//!
//! Galerkin entries over touching element pairs are computed with Duffy-type
//! substitutions. Near the coincidence point the kernel is split into
//! `log|r| * C + D` with entire `C, D`; the logarithm is integrated with a
//! log-weighted Gauss rule and the remainder with Gauss–Legendre. Away from it
//! the kernel is integrated directly on geometrically graded panels.

use crate::error::{Error, Result};
use crate::geometry::{norm, BoundaryMesh, Point};
use crate::kernels::{
    pressure_kernel_2d, velocity_kernel_2d, velocity_kernel_2d_split, ComplexFrequency, ProblemConfig,
};
use crate::quadrature::{gauss_legendre, gauss_log};
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

/// Gauss points per panel for well-separated element pairs.
const REGULAR_ORDER: usize = 10;
/// Gauss points in each direction of the singular sub-rules.
const SINGULAR_ORDER: usize = 12;
/// Gauss points per panel for potentials and load vectors.
const POTENTIAL_ORDER: usize = 12;
/// `|sqrt(s) r|` below which the split kernel is used.
const SPLIT_RADIUS: f64 = 2.0;
/// Pivot ratio below which a factorized system is reported singular.
const PIVOT_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Piecewise constant vector densities.
    P0,
    /// Piecewise linear, discontinuous across element ends.
    P1Discontinuous,
}

/// How the single-layer operator is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    Galerkin,
    /// Midpoint collocation weighted by element length, data sampled at
    /// midpoints. Only for P0 on smooth curves.
    Nystrom,
}

/// Handling of the one-dimensional kernel of the continuous operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    None,
    /// Lagrange multiplier for `<lambda, m> = 0` with `m(x) = x`.
    MultiplierM,
    /// Multipliers for `<lambda, e1> = <lambda, e2> = 0`.
    MultiplierRigid,
    /// Rank-one update `V + b b^T` with `b_j = <mu_j, m>`.
    AugmentedVtilde,
}

impl ConstraintMode {
    pub fn multipliers(self) -> usize {
        match self {
            ConstraintMode::MultiplierM => 1,
            ConstraintMode::MultiplierRigid => 2,
            ConstraintMode::None | ConstraintMode::AugmentedVtilde => 0,
        }
    }
}

/// Moment vectors `b_j = <mu_j, m>`, `<mu_j, e1>`, `<mu_j, e2>`.
#[derive(Debug, Clone)]
pub struct Moments {
    pub m: DVector<f64>,
    pub e1: DVector<f64>,
    pub e2: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct DensitySpace {
    mesh: BoundaryMesh,
    kind: SpaceKind,
}

impl DensitySpace {
    pub fn new(mesh: BoundaryMesh, kind: SpaceKind) -> Self {
        DensitySpace { mesh, kind }
    }

    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Scalar basis functions per element.
    pub fn local_count(&self) -> usize {
        match self.kind {
            SpaceKind::P0 => 1,
            SpaceKind::P1Discontinuous => 2,
        }
    }

    pub fn dof_count(&self) -> usize {
        2 * self.local_count() * self.mesh.n_elements()
    }

    #[inline]
    pub fn dof_index(&self, e: usize, a: usize, c: usize) -> usize {
        (e * self.local_count() + a) * 2 + c
    }

    /// Values of the local basis functions at `u`.
    #[inline]
    pub fn basis(&self, u: f64) -> [f64; 2] {
        match self.kind {
            SpaceKind::P0 => [1.0, 0.0],
            SpaceKind::P1Discontinuous => [1.0 - u, u],
        }
    }

    /// Density value at local coordinate `u` of element `e`.
    pub fn evaluate<T: ComplexField<RealField = f64> + Copy>(&self, coeffs: &DVector<T>, e: usize, u: f64) -> [T; 2] {
        let phi = self.basis(u);
        let mut out = [T::zero(), T::zero()];
        for (a, &pa) in phi.iter().enumerate().take(self.local_count()) {
            for (c, o) in out.iter_mut().enumerate() {
                *o += coeffs[self.dof_index(e, a, c)].scale(pa);
            }
        }
        out
    }

    fn check_discretization(&self, disc: Discretization) -> Result<()> {
        if disc == Discretization::Nystrom {
            if self.kind != SpaceKind::P0 {
                return Err(Error::InvalidParameter(
                    "the Nystrom discretization needs piecewise constant densities".into(),
                ));
            }
            if !self.mesh.curve().is_smooth() {
                return Err(Error::InvalidParameter("the Nystrom discretization needs a smooth boundary".into()));
            }
        }
        Ok(())
    }

    /// `<mu_j, f>` for all basis functions.
    pub fn load_vector<F: Fn(Point) -> [f64; 2] + Sync>(&self, disc: Discretization, f: F) -> Result<DVector<f64>> {
        self.check_discretization(disc)?;
        let mut out = DVector::zeros(self.dof_count());
        match disc {
            Discretization::Nystrom => {
                for (e, el) in self.mesh.elements().iter().enumerate() {
                    let v = f(el.midpoint);
                    out[self.dof_index(e, 0, 0)] = el.arclength * v[0];
                    out[self.dof_index(e, 0, 1)] = el.arclength * v[1];
                }
            }
            Discretization::Galerkin => {
                let rule = gauss_legendre(POTENTIAL_ORDER);
                for e in 0..self.mesh.n_elements() {
                    for (u, w) in rule.iter() {
                        let v = f(self.mesh.point(e, u));
                        let wj = w * self.mesh.jacobian(e, u);
                        let phi = self.basis(u);
                        for (a, &pa) in phi.iter().enumerate().take(self.local_count()) {
                            out[self.dof_index(e, a, 0)] += wj * pa * v[0];
                            out[self.dof_index(e, a, 1)] += wj * pa * v[1];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn moments(&self, disc: Discretization) -> Result<Moments> {
        Ok(Moments {
            m: self.load_vector(disc, |x| x)?,
            e1: self.load_vector(disc, |_| [1.0, 0.0])?,
            e2: self.load_vector(disc, |_| [0.0, 1.0])?,
        })
    }

    /// Coefficients of the interpolated outward normal.
    pub fn normal_coefficients(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dof_count());
        for e in 0..self.mesh.n_elements() {
            let nodes: &[f64] = match self.kind {
                SpaceKind::P0 => &[0.5],
                SpaceKind::P1Discontinuous => &[0.0, 1.0],
            };
            for (a, &u) in nodes.iter().enumerate() {
                let n = self.mesh.normal(e, u);
                out[self.dof_index(e, a, 0)] = n[0];
                out[self.dof_index(e, a, 1)] = n[1];
            }
        }
        out
    }

    /// Density with `lambda = g` sampled like the data of `disc`.
    pub fn interpolate<F: Fn(Point) -> [f64; 2]>(&self, f: F) -> DVector<f64> {
        let mut out = DVector::zeros(self.dof_count());
        for e in 0..self.mesh.n_elements() {
            let nodes: &[f64] = match self.kind {
                SpaceKind::P0 => &[0.5],
                SpaceKind::P1Discontinuous => &[0.0, 1.0],
            };
            for (a, &u) in nodes.iter().enumerate() {
                let v = f(self.mesh.point(e, u));
                out[self.dof_index(e, a, 0)] = v[0];
                out[self.dof_index(e, a, 1)] = v[1];
            }
        }
        out
    }
}

/// Discretized single-layer operator at one frequency, possibly bordered.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: DMatrix<Complex64>,
    pub n_dof: usize,
    pub mode: ConstraintMode,
}

impl TransferMatrix {
    pub fn n_system(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Galerkin matrix `V_jk = <mu_j, V(s) mu_k>`, optionally bordered.
pub fn assemble_galerkin_v(
    space: &DensitySpace,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
    mode: ConstraintMode,
) -> Result<TransferMatrix> {
    let v = assemble_v(space, Discretization::Galerkin, freq, cfg)?;
    let moments = space.moments(Discretization::Galerkin)?;
    Ok(TransferMatrix { matrix: apply_constraints(&v, &moments, mode), n_dof: space.dof_count(), mode })
}

/// Nystrom matrix (midpoint collocation times element length), unbordered.
pub fn assemble_nystrom_v(
    space: &DensitySpace,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
) -> Result<TransferMatrix> {
    Ok(TransferMatrix {
        matrix: assemble_v(space, Discretization::Nystrom, freq, cfg)?,
        n_dof: space.dof_count(),
        mode: ConstraintMode::None,
    })
}

/// `V + b b^T` (Galerkin).
pub fn assemble_vtilde(space: &DensitySpace, freq: &ComplexFrequency, cfg: &ProblemConfig) -> Result<TransferMatrix> {
    assemble_galerkin_v(space, freq, cfg, ConstraintMode::AugmentedVtilde)
}

/// Borders (or augments) a square operator matrix according to `mode`.
/// The added blocks do not depend on the frequency.
pub fn apply_constraints<T: ComplexField<RealField = f64> + Copy>(
    v: &DMatrix<T>,
    moments: &Moments,
    mode: ConstraintMode,
) -> DMatrix<T> {
    let n = v.nrows();
    let cols: Vec<&DVector<f64>> = match mode {
        ConstraintMode::None => return v.clone(),
        ConstraintMode::AugmentedVtilde => {
            let b = &moments.m;
            let mut out = v.clone();
            for j in 0..n {
                for k in 0..n {
                    out[(j, k)] += T::from_real(b[j] * b[k]);
                }
            }
            return out;
        }
        ConstraintMode::MultiplierM => vec![&moments.m],
        ConstraintMode::MultiplierRigid => vec![&moments.e1, &moments.e2],
    };
    let ns = n + cols.len();
    let mut out = DMatrix::zeros(ns, ns);
    out.view_mut((0, 0), (n, n)).copy_from(v);
    for (i, b) in cols.iter().enumerate() {
        for j in 0..n {
            out[(j, n + i)] = T::from_real(b[j]);
            out[(n + i, j)] = T::from_real(b[j]);
        }
    }
    out
}

/// Solves `matrix x = [rhs; 0]` and returns the leading `n_dof` entries.
pub fn solve_transfer(tm: &TransferMatrix, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let sol = solve_bordered(&tm.matrix, rhs)?;
    Ok(sol.rows(0, tm.n_dof).into_owned())
}

/// LU solve with zero-padded right-hand side; detects numerical singularity.
pub fn solve_bordered<T: ComplexField<RealField = f64> + Copy>(
    matrix: &DMatrix<T>,
    rhs: &DVector<T>,
) -> Result<DVector<T>> {
    let lu = factorize(matrix)?;
    Ok(lu.solve_padded(rhs))
}

/// An LU factorization that remembers the system size.
pub struct Factorization<T: ComplexField<RealField = f64> + Copy> {
    lu: nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl<T: ComplexField<RealField = f64> + Copy> Factorization<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves with `rhs` padded by zeros up to the system size.
    pub fn solve_padded(&self, rhs: &DVector<T>) -> DVector<T> {
        let mut b = DVector::zeros(self.n);
        b.rows_mut(0, rhs.len()).copy_from(rhs);
        self.lu.solve_mut(&mut b);
        b
    }
}

pub fn factorize<T: ComplexField<RealField = f64> + Copy>(matrix: &DMatrix<T>) -> Result<Factorization<T>> {
    let n = matrix.nrows();
    if n == 0 || matrix.ncols() != n {
        return Err(Error::Shape(format!("cannot factorize a {}x{} matrix", n, matrix.ncols())));
    }
    if matrix.iter().any(|x| !x.modulus().is_finite()) {
        return Err(Error::Singular("matrix has non-finite entries".into()));
    }
    let lu = matrix.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].modulus()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min <= PIVOT_TOLERANCE * max {
        return Err(Error::Singular(format!("pivot ratio {:.3e}", if max > 0.0 { min / max } else { 0.0 })));
    }
    Ok(Factorization { lu, n })
}

/// Unbordered operator matrix for either discretization.
pub fn assemble_v(
    space: &DensitySpace,
    disc: Discretization,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
) -> Result<DMatrix<Complex64>> {
    assemble_v_scaled(space, disc, freq, cfg, freq.sqrt_s().norm())
}

/// As [`assemble_v`], with the quadrature rules laid out for `|sqrt(s)| = rule_scale`
/// instead of the actual frequency. Families of frequencies assembled with a
/// common scale get quadrature errors that vary smoothly with `s`, which keeps
/// them from being amplified by contour-integral transforms.
pub fn assemble_v_scaled(
    space: &DensitySpace,
    disc: Discretization,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
    rule_scale: f64,
) -> Result<DMatrix<Complex64>> {
    if cfg.dimension() != 2 {
        return Err(Error::InvalidParameter("boundary elements are implemented in two dimensions".into()));
    }
    space.check_discretization(disc)?;
    let ctx = Context { space, sqrt_s: freq.sqrt_s(), k: rule_scale.max(freq.sqrt_s().norm()), nu: cfg.nu() };
    let n_el = space.mesh.n_elements();
    let nl = space.local_count();
    let mut out = DMatrix::zeros(space.dof_count(), space.dof_count());
    match disc {
        Discretization::Galerkin => {
            let pairs: Vec<(usize, usize)> = (0..n_el).flat_map(|e| (e..n_el).map(move |f| (e, f))).collect();
            let blocks: Vec<Block> = pairs.par_iter().map(|&(e, f)| ctx.galerkin_block(e, f)).collect();
            for (&(e, f), blk) in pairs.iter().zip(&blocks) {
                ctx.scatter(&mut out, e, f, blk, nl);
                if e != f {
                    let mut t = [[[Complex64::default(); 3]; 2]; 2];
                    for (a, row) in blk.iter().enumerate() {
                        for (b, v) in row.iter().enumerate() {
                            t[b][a] = *v;
                        }
                    }
                    ctx.scatter(&mut out, f, e, &t, nl);
                }
            }
        }
        Discretization::Nystrom => {
            let pairs: Vec<(usize, usize)> = (0..n_el).flat_map(|e| (0..n_el).map(move |f| (e, f))).collect();
            let blocks: Vec<Block> = pairs.par_iter().map(|&(e, f)| ctx.nystrom_block(e, f)).collect();
            for (&(e, f), blk) in pairs.iter().zip(&blocks) {
                ctx.scatter(&mut out, e, f, blk, nl);
            }
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Quadrature { test: 0, trial: 0 });
    }
    Ok(out)
}

/// `[a][b][xx, xy, yy]` for test basis `a`, trial basis `b`.
type Block = [[[Complex64; 3]; 2]; 2];

#[derive(Clone, Copy)]
enum Eval {
    /// Plain kernel.
    Full,
    /// `log(|r| / tau) * C + D` on the singular sub-interval.
    Split(f64),
    /// Only the log coefficient `C` (log-weighted nodes).
    LogOnly,
}

#[derive(Clone, Copy)]
struct Node {
    x: f64,
    w: f64,
    eval: Eval,
}

/// Rule on `[0, 1]` for integrands with a logarithmic singularity at `0`;
/// `x0` is the extent of the split region.
fn singular_rule(x0: f64) -> Vec<Node> {
    let mut nodes = Vec::new();
    let leg = gauss_legendre(SINGULAR_ORDER);
    for (t, w) in leg.iter() {
        nodes.push(Node { x: x0 * t, w: x0 * w, eval: Eval::Split(t) });
    }
    for (t, w) in gauss_log(SINGULAR_ORDER).iter() {
        nodes.push(Node { x: x0 * t, w: -x0 * w, eval: Eval::LogOnly });
    }
    let mut a = x0;
    while a < 1.0 - 1e-14 {
        let b = (2.0 * a).min(1.0);
        for (t, w) in leg.iter() {
            nodes.push(Node { x: a + (b - a) * t, w: (b - a) * w, eval: Eval::Full });
        }
        a = b;
    }
    nodes
}

/// Composite Gauss rule with `panels` equal panels on `[0, 1]`.
fn composite(panels: usize, q: usize) -> impl Iterator<Item = (f64, f64)> {
    let rule = gauss_legendre(q);
    let h = 1.0 / panels as f64;
    (0..panels).flat_map(move |p| rule.iter().map(move |(t, w)| ((p as f64 + t) * h, w * h)))
}

/// Panels needed on an element of length `len` at distance `gap` from the
/// singular point, for a kernel with decay/oscillation scale `1 / k`.
fn panel_count(len: f64, gap: f64, k: f64) -> usize {
    let near = if gap >= 0.5 * len { 1.0 } else { (0.5 * len / gap.max(0.02 * len)).ceil() };
    let osc = (k * len / 4.0).ceil();
    near.max(osc).clamp(1.0, 64.0) as usize
}

struct Context<'a> {
    space: &'a DensitySpace,
    sqrt_s: Complex64,
    k: f64,
    nu: f64,
}

impl Context<'_> {
    fn scatter(&self, out: &mut DMatrix<Complex64>, e: usize, f: usize, blk: &Block, nl: usize) {
        for (a, row) in blk.iter().enumerate().take(nl) {
            for (b, v) in row.iter().enumerate().take(nl) {
                let (i, j) = (self.space.dof_index(e, a, 0), self.space.dof_index(f, b, 0));
                out[(i, j)] = v[0];
                out[(i, j + 1)] = v[1];
                out[(i + 1, j)] = v[1];
                out[(i + 1, j + 1)] = v[2];
            }
        }
    }

    #[inline]
    fn kernel(&self, x: Point, y: Point, eval: Eval) -> [Complex64; 3] {
        let (rx, ry) = (x[0] - y[0], x[1] - y[1]);
        match eval {
            Eval::Full => velocity_kernel_2d(rx, ry, self.sqrt_s, self.nu),
            Eval::Split(tau) => {
                let (c, d) = velocity_kernel_2d_split(rx, ry, self.sqrt_s, self.nu);
                let l = ((rx * rx + ry * ry).sqrt() / tau).ln();
                [c[0] * l + d[0], c[1] * l + d[1], c[2] * l + d[2]]
            }
            Eval::LogOnly => velocity_kernel_2d_split(rx, ry, self.sqrt_s, self.nu).0,
        }
    }

    #[inline]
    fn accumulate(&self, blk: &mut Block, u: f64, v: f64, w: f64, kv: [Complex64; 3]) {
        let pu = self.space.basis(u);
        let pv = self.space.basis(v);
        let nl = self.space.local_count();
        for a in 0..nl {
            for b in 0..nl {
                let c = w * pu[a] * pv[b];
                for (dst, src) in blk[a][b].iter_mut().zip(kv.iter()) {
                    *dst += src * c;
                }
            }
        }
    }

    /// Extent of the split region for a coincidence variable with `|r| <= x * len`.
    fn split_extent(&self, len: f64) -> f64 {
        if self.k * len <= SPLIT_RADIUS {
            1.0
        } else {
            SPLIT_RADIUS / (self.k * len)
        }
    }

    fn galerkin_block(&self, e: usize, f: usize) -> Block {
        let mesh = &self.space.mesh;
        if e == f {
            self.self_block(e)
        } else if mesh.follows(e, f) {
            self.adjacent_block(e, f)
        } else if mesh.follows(f, e) {
            let b = self.adjacent_block(f, e);
            let mut t = [[[Complex64::default(); 3]; 2]; 2];
            for (a, row) in b.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    t[c][a] = *v;
                }
            }
            t
        } else {
            self.regular_block(e, f)
        }
    }

    fn regular_block(&self, e: usize, f: usize) -> Block {
        let mesh = &self.space.mesh;
        let gap = mesh.element_gap(e, f);
        let (le, lf) = (mesh.element(e).arclength, mesh.element(f).arclength);
        let pe = panel_count(le, gap, self.k);
        let pf = panel_count(lf, gap, self.k);
        let ys: Vec<(f64, Point, f64)> =
            composite(pf, REGULAR_ORDER).map(|(v, w)| (v, mesh.point(f, v), w * mesh.jacobian(f, v))).collect();
        let mut blk: Block = Default::default();
        for (u, wu) in composite(pe, REGULAR_ORDER) {
            let x = mesh.point(e, u);
            let wx = wu * mesh.jacobian(e, u);
            for &(v, y, wy) in &ys {
                let kv = self.kernel(x, y, Eval::Full);
                self.accumulate(&mut blk, u, v, wx * wy, kv);
            }
        }
        blk
    }

    /// Coincident element: the triangle `v < u` with `u = w + t(1 - w)`,
    /// `v = t(1 - w)`; the other triangle follows by symmetry.
    fn self_block(&self, e: usize) -> Block {
        let mesh = &self.space.mesh;
        let len = 2.0 * mesh.element(e).reach;
        let rule = singular_rule(self.split_extent(len));
        let pt = panel_count(len, len, self.k);
        let ts: Vec<(f64, f64)> = composite(pt, SINGULAR_ORDER).collect();
        let mut half: Block = Default::default();
        for node in &rule {
            let w = node.x;
            for &(t, wt) in &ts {
                let u = w + t * (1.0 - w);
                let v = t * (1.0 - w);
                let kv = self.kernel(mesh.point(e, u), mesh.point(e, v), node.eval);
                let jac = (1.0 - w) * mesh.jacobian(e, u) * mesh.jacobian(e, v);
                self.accumulate(&mut half, u, v, node.w * wt * jac, kv);
            }
        }
        let mut blk: Block = Default::default();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..3 {
                    blk[a][b][c] = half[a][b][c] + half[b][a][c];
                }
            }
        }
        blk
    }

    /// `f` starts where `e` ends. Local distances to the shared vertex are
    /// `alpha = 1 - u` and `beta = v`; each of the two triangles is mapped by
    /// `(rho, t) -> (rho, rho t)` with Jacobian `rho`.
    fn adjacent_block(&self, e: usize, f: usize) -> Block {
        let mesh = &self.space.mesh;
        let len = 2.0 * (mesh.element(e).reach + mesh.element(f).reach);
        let rule = singular_rule(self.split_extent(len));
        let pt = panel_count(len, len, self.k);
        let ts: Vec<(f64, f64)> = composite(pt, SINGULAR_ORDER).collect();
        let mut blk: Block = Default::default();
        for node in &rule {
            let rho = node.x;
            for &(t, wt) in &ts {
                for (alpha, beta) in [(rho, rho * t), (rho * t, rho)] {
                    let (u, v) = (1.0 - alpha, beta);
                    let kv = self.kernel(mesh.point(e, u), mesh.point(f, v), node.eval);
                    let jac = rho * mesh.jacobian(e, u) * mesh.jacobian(f, v);
                    self.accumulate(&mut blk, u, v, node.w * wt * jac, kv);
                }
            }
        }
        blk
    }

    /// `h_e * int_f E(x_e - y) mu(y) ds_y` with `x_e` the midpoint of `e`.
    fn nystrom_block(&self, e: usize, f: usize) -> Block {
        let mesh = &self.space.mesh;
        let el = mesh.element(e);
        let x = el.midpoint;
        let lf = mesh.element(f).arclength;
        let mut blk: Block = Default::default();
        if e == f {
            let len = mesh.element(e).reach;
            let rule = singular_rule(self.split_extent(len));
            for node in &rule {
                for v in [0.5 + 0.5 * node.x, 0.5 - 0.5 * node.x] {
                    let kv = self.kernel(x, mesh.point(f, v), node.eval);
                    let w = 0.5 * node.w * mesh.jacobian(f, v) * el.arclength;
                    self.accumulate(&mut blk, 0.5, v, w, kv);
                }
            }
        } else {
            let gap = mesh.point_gap(f, x);
            let p = panel_count(lf, gap, self.k);
            for (v, w) in composite(p, 2 * REGULAR_ORDER) {
                let kv = self.kernel(x, mesh.point(f, v), Eval::Full);
                let w = w * mesh.jacobian(f, v) * el.arclength;
                self.accumulate(&mut blk, 0.5, v, w, kv);
            }
        }
        blk
    }
}

pub fn check_points(mesh: &BoundaryMesh, points: &[Point]) -> Result<()> {
    let tol = 1e-10 * mesh.perimeter();
    for (index, &p) in points.iter().enumerate() {
        let near = (0..mesh.n_elements()).any(|e| mesh.point_gap(e, p) <= tol);
        if near && mesh.distance(p) <= tol {
            return Err(Error::PointOnBoundary { index, x: p[0], y: p[1] });
        }
    }
    Ok(())
}

/// Composite Gauss samples `(u, y, weight * jacobian)` of element `f` adapted
/// to the observation point `z`.
fn potential_samples(mesh: &BoundaryMesh, f: usize, z: Point, k: f64) -> Vec<(f64, Point, f64)> {
    let len = mesh.element(f).arclength;
    let p = panel_count(len, mesh.point_gap(f, z), k);
    composite(p, POTENTIAL_ORDER).map(|(u, w)| (u, mesh.point(f, u), w * mesh.jacobian(f, u))).collect()
}

/// Single-layer velocity potential at `points`: rows `2 k + c` map density
/// coefficients to component `c` of the velocity at point `k`.
pub fn potential_velocity_matrix(
    space: &DensitySpace,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
    points: &[Point],
) -> Result<DMatrix<Complex64>> {
    potential_velocity_matrix_scaled(space, freq, cfg, points, freq.sqrt_s().norm())
}

/// As [`potential_velocity_matrix`] with quadrature laid out for `rule_scale`
/// (see [`assemble_v_scaled`]).
pub fn potential_velocity_matrix_scaled(
    space: &DensitySpace,
    freq: &ComplexFrequency,
    cfg: &ProblemConfig,
    points: &[Point],
    rule_scale: f64,
) -> Result<DMatrix<Complex64>> {
    let mesh = &space.mesh;
    check_points(mesh, points)?;
    let (sqrt_s, nu, k) = (freq.sqrt_s(), cfg.nu(), rule_scale.max(freq.sqrt_s().norm()));
    let n = space.dof_count();
    let rows: Vec<Vec<Complex64>> = points
        .par_iter()
        .map(|&z| {
            let mut row = vec![Complex64::default(); 2 * n];
            for f in 0..mesh.n_elements() {
                for (u, y, w) in potential_samples(mesh, f, z, k) {
                    let kv = velocity_kernel_2d(z[0] - y[0], z[1] - y[1], sqrt_s, nu);
                    let phi = space.basis(u);
                    for (a, &pa) in phi.iter().enumerate().take(space.local_count()) {
                        let j = space.dof_index(f, a, 0);
                        let c = w * pa;
                        row[j] += kv[0] * c;
                        row[j + 1] += kv[1] * c;
                        row[n + j] += kv[1] * c;
                        row[n + j + 1] += kv[2] * c;
                    }
                }
            }
            row
        })
        .collect();
    let mut out = DMatrix::zeros(2 * points.len(), n);
    for (kk, row) in rows.iter().enumerate() {
        for j in 0..n {
            out[(2 * kk, j)] = row[j];
            out[(2 * kk + 1, j)] = row[n + j];
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Quadrature { test: 0, trial: 0 });
    }
    Ok(out)
}

/// Single-layer pressure potential at `points` (independent of `s`).
pub fn potential_pressure_matrix(space: &DensitySpace, points: &[Point]) -> Result<DMatrix<f64>> {
    let mesh = &space.mesh;
    check_points(mesh, points)?;
    let n = space.dof_count();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&z| {
            let mut row = vec![0.0; n];
            for f in 0..mesh.n_elements() {
                for (u, y, w) in potential_samples(mesh, f, z, 0.0) {
                    let kv = pressure_kernel_2d(z[0] - y[0], z[1] - y[1]);
                    let phi = space.basis(u);
                    for (a, &pa) in phi.iter().enumerate().take(space.local_count()) {
                        let j = space.dof_index(f, a, 0);
                        row[j] += kv[0] * w * pa;
                        row[j + 1] += kv[1] * w * pa;
                    }
                }
            }
            row
        })
        .collect();
    let mut out = DMatrix::zeros(points.len(), n);
    for (kk, row) in rows.iter().enumerate() {
        for j in 0..n {
            out[(kk, j)] = row[j];
        }
    }
    Ok(out)
}

/// Element lengths `|Gamma_e|`, convenient for flux computations.
pub fn element_lengths(mesh: &BoundaryMesh) -> Vec<f64> {
    mesh.elements().iter().map(|e| e.arclength).collect()
}

/// Euclidean distance helper for callers working with raw points.
pub fn distance(a: Point, b: Point) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}
