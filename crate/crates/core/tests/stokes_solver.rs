//! End-to-end runs of the time-domain solver.

use stokes_cq::bem::{ConstraintMode, Discretization, SpaceKind};
use stokes_cq::cq::CqScheme;
use stokes_cq::solver::*;
use stokes_cq::*;

fn circle_run(n: usize, m: usize) -> Simulation {
    Simulation {
        curve: BoundaryCurve::circle(1.0).unwrap(),
        n_elements: n,
        space: SpaceKind::P0,
        discretization: Discretization::Nystrom,
        constraints: ConstraintMode::MultiplierM,
        scheme: CqScheme::new(3, 1.0, m).unwrap(),
        config: ProblemConfig::default(),
    }
}

fn square_run(n: usize, m: usize) -> Simulation {
    Simulation {
        curve: BoundaryCurve::square(1.0).unwrap(),
        n_elements: n,
        space: SpaceKind::P1Discontinuous,
        discretization: Discretization::Galerkin,
        constraints: ConstraintMode::MultiplierM,
        scheme: CqScheme::new(3, 1.0, m).unwrap(),
        config: ProblemConfig::default(),
    }
}

const CIRCLE_POINTS: [Point; 3] = [[0.0, 0.0], [0.5, 0.5], [-0.6, 0.1]];

#[test]
fn zero_data_gives_zero_fields() {
    let res = run_simulation(&circle_run(12, 10), &DirichletData::zero(), &CIRCLE_POINTS).unwrap();
    assert_eq!(res.steps(), 11);
    assert!(res.velocity.iter().flatten().all(|v| v[0] == 0.0 && v[1] == 0.0));
    assert!(res.pressure.iter().flatten().all(|p| *p == 0.0));
}

#[test]
fn incompatible_data_is_rejected() {
    let source = DirichletData::new("source", 4, |t, x| [t.powi(4) * x[0], t.powi(4) * x[1]]);
    let err = run_simulation(&circle_run(12, 10), &source, &CIRCLE_POINTS).unwrap_err();
    assert!(matches!(err, Error::Incompatible { .. }), "{err}");
}

#[test]
fn manufactured_solution_on_the_circle() {
    let res = run_simulation(&circle_run(40, 40), &DirichletData::manufactured(), &CIRCLE_POINTS).unwrap();
    let (eu, ep) = res.errors_at(40);
    assert!(eu < 1e-3 && ep < 3e-3, "errU={eu:e} errP={ep:e}");
    assert!(res.times[40] == 1.0);
}

#[test]
fn manufactured_solution_on_the_square() {
    let res =
        run_simulation(&square_run(16, 40), &DirichletData::manufactured(), &[[-0.5, -0.5], [0.3, 0.7], [0.6, 0.2]])
            .unwrap();
    let (eu, ep) = res.errors_at(40);
    assert!(eu < 1e-2 && ep < 1e-2, "errU={eu:e} errP={ep:e}");
}

#[test]
fn velocity_is_solenoidal_inside_and_outside() {
    let sim = circle_run(40, 40);
    let ctx = sim.context().unwrap();
    let w = operator_weights(&ctx).unwrap();
    let hist = solve_densities(&ctx, &w, sim.constraints, &DirichletData::manufactured()).unwrap();
    let steps: Vec<usize> = (0..=40).step_by(5).collect();
    for radius in [0.5, 2.0] {
        let flux = circle_flux(&ctx, &hist, [0.0, 0.0], radius, 96, &steps).unwrap();
        let scale = velocity_at_steps(&ctx, &hist, &[[radius, 0.0]], &[40]).unwrap()[0][0][0].abs().max(1e-3);
        for (n, f) in steps.iter().zip(&flux) {
            assert!(f.abs() <= 1e-9 * scale * radius, "r={radius} step {n}: flux {f:e}");
        }
    }
}

#[test]
fn delayed_data_gives_delayed_densities() {
    let sim = circle_run(24, 40);
    let ctx = sim.context().unwrap();
    let w = operator_weights(&ctx).unwrap();
    let data = DirichletData::manufactured().delayed(0.5);
    let hist = solve_densities(&ctx, &w, sim.constraints, &data).unwrap();
    for n in 0..=40 {
        let norm = hist.density(n).norm();
        if ctx.scheme.time(n) <= 0.5 {
            assert!(norm <= 1e-12, "step {n}: {norm:e}");
        }
    }
    assert!(hist.density(40).norm() > 1e-3);
}

#[test]
fn densities_stay_bounded_under_refinement() {
    // max|phi''| is fixed by the data, so max_n |lambda_n| should not grow with N
    let mut bounds = Vec::new();
    for n in [10, 20, 40] {
        let sim = circle_run(n, n);
        let ctx = sim.context().unwrap();
        let w = operator_weights(&ctx).unwrap();
        let hist = solve_densities(&ctx, &w, sim.constraints, &DirichletData::manufactured()).unwrap();
        let lengths = stokes_cq::bem::element_lengths(ctx.space.mesh());
        // L2 norm of the density on the boundary
        let norm = |v: nalgebra::DVector<f64>| {
            (0..lengths.len()).map(|e| lengths[e] * (v[2 * e].powi(2) + v[2 * e + 1].powi(2))).sum::<f64>().sqrt()
        };
        bounds.push((0..hist.steps()).map(|k| norm(hist.density(k))).fold(0.0, f64::max));
    }
    let (lo, hi) = bounds.iter().fold((f64::INFINITY, 0.0f64), |a, &b| (a.0.min(b), a.1.max(b)));
    assert!(hi <= 1.5 * lo, "{bounds:?}");
}

#[test]
fn snapshots_agree_with_observation_points() {
    let sim = square_run(32, 12);
    let pts = [[-0.5, -0.5], [0.3, 0.7], [0.6, 0.2]];
    let res = run_simulation(&sim, &DirichletData::manufactured(), &pts).unwrap();
    // a grid whose nodes include the three points
    let grid = GridSpec { rows: 13, cols: 12, x0: -0.5, y0: -0.5, dx: 0.1, dy: 0.1, mask_interior: false };
    let snaps = field_snapshot(&res.context, &res.history, &grid, &[6, 12]).unwrap();
    for snap in &snaps {
        for (k, p) in pts.iter().enumerate() {
            let i = ((p[1] - grid.y0) / grid.dy).round() as usize;
            let j = ((p[0] - grid.x0) / grid.dx).round() as usize;
            let c = i * grid.cols + j;
            let u = res.velocity[snap.step][k];
            assert!((snap.ux[c].unwrap() - u[0]).abs() <= 1e-12 * u[0].abs().max(1e-3));
            assert!((snap.uy[c].unwrap() - u[1]).abs() <= 1e-12 * u[1].abs().max(1e-3));
            assert!((snap.p[c].unwrap() - res.pressure[snap.step][k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn grid_overlapping_the_obstacle_is_masked() {
    let sim = circle_run(16, 8);
    let ctx = sim.context().unwrap();
    let grid = GridSpec { rows: 9, cols: 9, x0: -2.0, y0: -2.0, dx: 0.5, dy: 0.5, mask_interior: true };
    let mask = grid_mask(&ctx, &grid);
    assert!(mask.iter().filter(|m| **m).count() > 0);
    assert!(mask.iter().filter(|m| !**m).count() > 0);
    let w = operator_weights(&ctx).unwrap();
    let hist = solve_densities(&ctx, &w, sim.constraints, &DirichletData::translation()).unwrap();
    let snap = &field_snapshot(&ctx, &hist, &grid, &[8]).unwrap()[0];
    for (c, m) in mask.iter().enumerate() {
        assert_eq!(snap.ux[c].is_none(), *m);
        if let Some(v) = snap.vorticity[c] {
            assert!(v.is_finite());
        }
    }
    let tiny = GridSpec { rows: 1, cols: 1, x0: 0.0, y0: 0.0, dx: 0.1, dy: 0.1, mask_interior: true };
    assert!(matches!(field_snapshot(&ctx, &hist, &tiny, &[8]), Err(Error::EmptyGrid)));
}
