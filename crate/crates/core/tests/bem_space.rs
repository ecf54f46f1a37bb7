//! Boundary spaces, operator matrices and potentials.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use stokes_cq::bem::*;
use stokes_cq::quadrature::gauss_legendre;
use stokes_cq::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn space(curve: BoundaryCurve, n: usize, kind: SpaceKind) -> DensitySpace {
    DensitySpace::new(build_mesh(curve, n).unwrap(), kind)
}

fn circle() -> BoundaryCurve {
    BoundaryCurve::circle(1.0).unwrap()
}

fn square() -> BoundaryCurve {
    BoundaryCurve::square(1.0).unwrap()
}

fn freq(s: Complex64) -> ComplexFrequency {
    ComplexFrequency::new(s).unwrap()
}

fn cfg() -> ProblemConfig {
    ProblemConfig::default()
}

fn complexify(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| c(x, 0.0))
}

fn pseudo_random(n: usize, seed: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |i, _| {
        let t = (i * 7919 + seed * 104_729) as f64;
        c((t * 0.37).sin(), (t * 0.91).cos())
    })
}

#[test]
fn mesh_examples() {
    let m = build_mesh(circle(), 20).unwrap();
    assert!((m.perimeter() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!(build_mesh(square(), 6).is_err());
    assert!(build_mesh(circle(), 3).is_err());
    let arcs = element_lengths(&m);
    assert!(arcs.iter().all(|a| (a - arcs[0]).abs() < 1e-14));
}

#[test]
fn divergence_theorem_for_all_curves() {
    for (curve, area) in
        [(square(), Some(4.0)), (circle(), Some(std::f64::consts::PI)), (BoundaryCurve::six_lobed_star(), None)]
    {
        let mesh = build_mesh(curve, 48).unwrap();
        let flux = mesh.integrate(16, |x, n| x[0] * n[0] + x[1] * n[1]);
        let area = area.unwrap_or_else(|| curve.area());
        assert!((flux - 2.0 * area).abs() < 1e-10 * area, "{curve:?}: {flux} vs {}", 2.0 * area);
    }
}

#[test]
fn moment_examples() {
    let sp = space(circle(), 16, SpaceKind::P0);
    let m = sp.moments(Discretization::Galerkin).unwrap();
    assert!(m.m.sum().abs() <= 1e-12);
    // <n, m> = int x.n = 2 pi on the unit circle, up to the P0 normal error
    let mesh = build_mesh(circle(), 16).unwrap();
    assert!((mesh.integrate(12, |x, n| x[0] * n[0] + x[1] * n[1]) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let fine = space(circle(), 256, SpaceKind::P0);
    let dot = fine.moments(Discretization::Galerkin).unwrap().m.dot(&fine.normal_coefficients());
    assert!((dot - 2.0 * std::f64::consts::PI).abs() < 1e-3, "{dot}");

    let sq = space(square(), 8, SpaceKind::P1Discontinuous);
    let m = sq.moments(Discretization::Galerkin).unwrap();
    assert!((m.m.dot(&sq.normal_coefficients()) - 8.0).abs() < 1e-12);
}

#[test]
fn galerkin_matrix_is_complex_symmetric() {
    let sp = space(circle(), 8, SpaceKind::P1Discontinuous);
    let v = assemble_galerkin_v(&sp, &freq(c(2.0, 3.0)), &cfg(), ConstraintMode::None).unwrap().matrix;
    let res = (&v - v.transpose()).norm() / v.norm();
    assert!(res <= 1e-12, "{res:e}");
    assert!(v.iter().all(|x| x.is_finite()));
}

#[test]
fn normal_is_in_the_discrete_kernel_on_the_square() {
    for kind in [SpaceKind::P0, SpaceKind::P1Discontinuous] {
        let sp = space(square(), 16, kind);
        let cn = complexify(&sp.normal_coefficients());
        for s in [c(1.0, 0.0), c(2.0, 3.0), c(-30.0, 30.0)] {
            let v = assemble_v(&sp, Discretization::Galerkin, &freq(s), &cfg()).unwrap();
            let res = (&v * &cn).norm() / (v.norm() * cn.norm());
            assert!(res <= 1e-8, "{kind:?} s={s}: {res:e}");
        }
    }
}

#[test]
fn nystrom_circle_is_block_circulant() {
    let sp = space(circle(), 4, SpaceKind::P0);
    let v = assemble_nystrom_v(&sp, &freq(c(1.0, 0.0)), &cfg()).unwrap().matrix;
    // rotating by one element rotates each 2x2 block by 90 degrees
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]).map(|x| c(x, 0.0));
    let block = |i: usize, j: usize| v.view((2 * i, 2 * j), (2, 2)).into_owned();
    let scale = v.norm();
    for i in 0..4 {
        for j in 0..4 {
            let mut b = block(0, (j + 4 - i) % 4);
            for _ in 0..i {
                b = &rot * b * rot.transpose();
            }
            let d = (&block(i, j) - b).norm() / scale;
            assert!(d <= 1e-12, "block ({i},{j}) differs by {d:e}");
        }
    }
}

#[test]
fn nystrom_normal_residual_on_the_circle() {
    // the midpoint normal is only approximately in the kernel: the residual
    // decays like h^3 and drops below 1e-6 at the finest mesh of the circle study
    let residual = |n: usize, s: Complex64| {
        let sp = space(circle(), n, SpaceKind::P0);
        let cn = complexify(&sp.normal_coefficients());
        let v = assemble_nystrom_v(&sp, &freq(s), &cfg()).unwrap().matrix;
        (&v * &cn).norm() / (v.norm() * cn.norm())
    };
    for s in [c(1.0, 0.0), c(5.0, -5.0)] {
        let r = residual(160, s);
        assert!(r <= 1e-6, "s={s}: {r:e}");
        let rate = (residual(32, s) / residual(64, s)).log2();
        assert!(rate > 2.8, "s={s}: rate {rate}");
    }
}

#[test]
fn vtilde_is_a_rank_one_update() {
    let sp = space(square(), 8, SpaceKind::P1Discontinuous);
    let f = freq(c(2.0, -1.0));
    let v = assemble_v(&sp, Discretization::Galerkin, &f, &cfg()).unwrap();
    let vt = assemble_vtilde(&sp, &f, &cfg()).unwrap();
    assert_eq!(vt.n_system(), sp.dof_count());
    let b = complexify(&sp.moments(Discretization::Galerkin).unwrap().m);
    let rebuilt = &v + &b * b.transpose();
    assert_eq!(vt.matrix, rebuilt);

    // orthogonal to m: the update is invisible
    let mut x = pseudo_random(sp.dof_count(), 3);
    let proj = b.dot(&x) / b.norm_squared();
    x -= &b * proj;
    let diff = (&vt.matrix * &x - &v * &x).norm() / (&v * &x).norm();
    assert!(diff < 1e-13, "{diff:e}");
}

#[test]
fn bordered_solve_round_trip_and_constraint() {
    let sp = space(square(), 8, SpaceKind::P1Discontinuous);
    let f = freq(c(1.0, 1.0));
    let x = pseudo_random(sp.dof_count(), 7);
    let vt = assemble_vtilde(&sp, &f, &cfg()).unwrap();
    let back = solve_transfer(&vt, &(&vt.matrix * &x)).unwrap();
    assert!((&back - &x).norm() / x.norm() < 1e-10);

    let tm = assemble_galerkin_v(&sp, &f, &cfg(), ConstraintMode::MultiplierM).unwrap();
    assert_eq!(tm.n_system(), sp.dof_count() + 1);
    let rhs = complexify(&sp.load_vector(Discretization::Galerkin, |p| [p[1], p[0] * p[0]]).unwrap());
    let lam = solve_transfer(&tm, &rhs).unwrap();
    let b = complexify(&sp.moments(Discretization::Galerkin).unwrap().m);
    assert!(b.dot(&lam).norm() <= 1e-10 * lam.norm());
}

#[test]
fn rigid_multipliers_make_the_system_singular() {
    // int n = 0 puts the discrete normal in both the kernel and the constraint space
    let sp = space(square(), 8, SpaceKind::P0);
    let tm = assemble_galerkin_v(&sp, &freq(c(1.0, 0.0)), &cfg(), ConstraintMode::MultiplierRigid).unwrap();
    assert_eq!(tm.n_system(), sp.dof_count() + 2);
    let rhs = DVector::from_element(sp.dof_count(), c(1.0, 0.0));
    assert!(matches!(solve_transfer(&tm, &rhs), Err(Error::Singular(_))));
}

#[test]
fn galerkin_forms_are_consistent_under_refinement() {
    let coarse = space(circle(), 8, SpaceKind::P0);
    let fine = space(circle(), 16, SpaceKind::P0);
    let f = freq(c(3.0, 2.0));
    let vc = assemble_v(&coarse, Discretization::Galerkin, &f, &cfg()).unwrap();
    let vf = assemble_v(&fine, Discretization::Galerkin, &f, &cfg()).unwrap();
    let x = pseudo_random(coarse.dof_count(), 1);
    let y = pseudo_random(coarse.dof_count(), 2);
    let prolong = |v: &DVector<Complex64>| {
        DVector::from_fn(fine.dof_count(), |i, _| {
            let (e, comp) = (i / 2, i % 2);
            v[coarse.dof_index(e / 2, 0, comp)]
        })
    };
    let a = x.transpose() * &vc * &y;
    let b = prolong(&x).transpose() * &vf * prolong(&y);
    let d = (a[(0, 0)] - b[(0, 0)]).norm() / a[(0, 0)].norm();
    assert!(d < 1e-10, "{d:e}");
}

fn brute_force_velocity(sp: &DensitySpace, f: &ComplexFrequency, z: Point, lam: &DVector<f64>) -> [Complex64; 2] {
    let mesh = sp.mesh();
    let rule = gauss_legendre(40);
    let mut out = [Complex64::default(); 2];
    for e in 0..mesh.n_elements() {
        for p in 0..8 {
            for (x, w) in rule.iter() {
                let u = (p as f64 + x) / 8.0;
                let y = mesh.point(e, u);
                let k = velocity_kernel(&[z[0] - y[0], z[1] - y[1]], f, &cfg()).unwrap();
                let l = sp.evaluate(lam, e, u);
                let wj = w / 8.0 * mesh.jacobian(e, u);
                for i in 0..2 {
                    out[i] += (k.get(i, 0) * l[0] + k.get(i, 1) * l[1]) * wj;
                }
            }
        }
    }
    out
}

#[test]
fn velocity_potential_at_a_far_point() {
    let sp = space(square(), 8, SpaceKind::P1Discontinuous);
    let f = freq(c(0.5, 0.2));
    let z = [14.0, 9.0];
    let lam = sp.interpolate(|p| [1.0 + p[0], p[1] * p[0]]);
    let m = potential_velocity_matrix(&sp, &f, &cfg(), &[z]).unwrap();
    let got = &m * complexify(&lam);
    let want = brute_force_velocity(&sp, &f, z, &lam);
    let scale = want[0].norm().max(want[1].norm());
    for i in 0..2 {
        assert!((got[i] - want[i]).norm() <= 1e-12 * scale, "component {i}: {} vs {}", got[i], want[i]);
    }
}

#[test]
fn normal_density_produces_no_velocity() {
    let sp = space(square(), 16, SpaceKind::P0);
    let pts = [[2.0, 0.3], [-1.5, -1.7], [0.2, 4.0]];
    for s in [c(1.0, 0.0), c(4.0, 6.0)] {
        let m = potential_velocity_matrix(&sp, &freq(s), &cfg(), &pts).unwrap();
        let u = &m * complexify(&sp.normal_coefficients());
        assert!(u.iter().all(|x| x.norm() <= 1e-8), "{u}");
    }
}

#[test]
fn potentials_are_linear() {
    let sp = space(circle(), 12, SpaceKind::P0);
    let m = potential_velocity_matrix(&sp, &freq(c(2.0, 0.5)), &cfg(), &[[0.1, 0.2], [3.0, 0.0]]).unwrap();
    let (x, y) = (pseudo_random(sp.dof_count(), 4), pseudo_random(sp.dof_count(), 5));
    let (a, b) = (c(0.3, -1.0), c(2.0, 0.0));
    let lhs = &m * (&x * a + &y * b);
    let rhs = (&m * &x) * a + (&m * &y) * b;
    assert!((lhs - rhs).norm() <= 1e-14 * (m.norm() * (x.norm() + y.norm())));
}

#[test]
fn pressure_potential_is_odd_on_the_circle() {
    let sp = space(circle(), 16, SpaceKind::P0);
    let n = sp.mesh().n_elements();
    let lam = sp.interpolate(|p| [1.0 + p[1], p[0] * p[0]]);
    // lambda'(x) = lambda(-x): element e maps to e + N/2
    let reflected = DVector::from_fn(sp.dof_count(), |i, _| {
        let (e, comp) = (i / 2, i % 2);
        lam[sp.dof_index((e + n / 2) % n, 0, comp)]
    });
    let z = [0.3, -0.2];
    let p = potential_pressure_matrix(&sp, &[z, [-z[0], -z[1]]]).unwrap();
    let a = (&p * &lam)[0];
    let b = (&p * &reflected)[1];
    assert!((a + b).abs() <= 1e-13 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn pressure_potential_at_a_far_point() {
    let sp = space(square(), 8, SpaceKind::P0);
    let lam = sp.interpolate(|p| [p[0] - 0.5, 2.0 + p[1]]);
    let z = [-11.0, 13.0];
    let got = (potential_pressure_matrix(&sp, &[z]).unwrap() * &lam)[0];
    let mesh = sp.mesh();
    let rule = gauss_legendre(40);
    let mut want = 0.0;
    for e in 0..mesh.n_elements() {
        for (u, w) in rule.iter() {
            let y = mesh.point(e, u);
            let k = pressure_kernel(&[z[0] - y[0], z[1] - y[1]], 2).unwrap();
            let l = sp.evaluate(&lam, e, u);
            want += w * mesh.jacobian(e, u) * (k[0] * l[0] + k[1] * l[1]);
        }
    }
    assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
}

#[test]
fn points_on_the_boundary_are_rejected() {
    let sp = space(square(), 8, SpaceKind::P0);
    assert!(matches!(
        potential_pressure_matrix(&sp, &[[0.0, 0.0], [1.0, 0.3]]),
        Err(Error::PointOnBoundary { index: 1, .. })
    ));
}
