//! Command implementations for the `stokes-cq` binary.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use stokes_cq::bem::{assemble_v, DensitySpace, Discretization, SpaceKind};
use stokes_cq::solver::{field_snapshot, run_simulation, Snapshot};
use stokes_cq::verification::{
    convergence_sweep, cq_convolution, cq_order_study, default_frequencies, laplace_property_suite_with,
    time_convolution_oracle, CatalogTransfer, ConvergenceRecord, PropertyReport,
};
use stokes_cq::{build_mesh, BoundaryCurve, ComplexFrequency, ProblemConfig};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Numerical(#[from] stokes_cq::Error),
    #[error("verification failed: {0} check(s) out of tolerance")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    RunConfig::parse(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    fs::write(path, contents).map_err(io_error(path))
}

/// Runs one simulation; writes the observation CSV and any snapshots.
pub fn cmd_run(cfg: &RunConfig) -> Result<String, CliError> {
    let sim = cfg.simulation()?;
    if let Some(snap) = &cfg.snapshots {
        if let Some(&bad) = snap.steps.iter().find(|&&n| n > sim.scheme.steps()) {
            return Err(CliError::Config(format!(
                "snapshot step {bad} is beyond the last step {}",
                sim.scheme.steps()
            )));
        }
    }
    let result = run_simulation(&sim, &cfg.dirichlet_data(), &cfg.points)?;

    let mut csv = String::from("step,time,point_id,ux,uy,p\n");
    for n in 0..result.steps() {
        for k in 0..result.points.len() {
            let u = result.velocity[n][k];
            writeln!(
                csv,
                "{n},{:.16e},{k},{:.16e},{:.16e},{:.16e}",
                result.times[n], u[0], u[1], result.pressure[n][k]
            )
            .expect("writing to a String");
        }
    }
    write_file(&cfg.output, &csv)?;
    let mut summary = format!(
        "wrote {} rows ({} steps x {} points) to {}\n",
        result.steps() * result.points.len(),
        result.steps(),
        result.points.len(),
        cfg.output.display()
    );

    if let Some(snap) = &cfg.snapshots {
        let snaps = field_snapshot(&result.context, &result.history, &snap.grid, &snap.steps)?;
        for s in &snaps {
            write_snapshot(&snap.dir, s)?;
        }
        writeln!(summary, "wrote {} snapshot(s) to {}", snaps.len(), snap.dir.display()).expect("writing to a String");
    }
    Ok(summary)
}

/// One file per field under `<dir>/<field>/snap_<step>.txt`.
pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<(), CliError> {
    let g = &snap.grid;
    let fields: [(&str, &[Option<f64>]); 4] =
        [("ux", &snap.ux), ("uy", &snap.uy), ("p", &snap.p), ("vorticity", &snap.vorticity)];
    for (name, values) in fields {
        let mut text = format!("{} {} {:.16e} {:.16e} {:.16e} {:.16e}\n", g.rows, g.cols, g.x0, g.y0, g.dx, g.dy);
        for row in values.chunks(g.cols) {
            let line: Vec<String> =
                row.iter().map(|v| v.map_or_else(|| "masked".to_string(), |x| format!("{x:.16e}"))).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        write_file(&dir.join(name).join(format!("snap_{}.txt", snap.step)), &text)?;
    }
    Ok(())
}

pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.4}"));
    let mut csv = String::from("N,M,errU,ecrU,errP,ecrP\n");
    for r in records {
        writeln!(csv, "{},{},{:.4e},{},{:.4e},{}", r.n, r.m, r.err_u, opt(r.ecr_u), r.err_p, opt(r.ecr_p))
            .expect("writing to a String");
    }
    csv
}

pub fn convergence_table(records: &[ConvergenceRecord]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
    let mut out = format!("{:>6} {:>6} {:>11} {:>6} {:>11} {:>6}\n", "N", "M", "errU", "ecrU", "errP", "ecrP");
    for r in records {
        writeln!(
            out,
            "{:>6} {:>6} {:>11.4e} {:>6} {:>11.4e} {:>6}",
            r.n,
            r.m,
            r.err_u,
            opt(r.ecr_u),
            r.err_p,
            opt(r.ecr_p)
        )
        .expect("writing to a String");
    }
    out
}

/// Runs the refinement ladder against the manufactured solution.
pub fn cmd_converge(cfg: &RunConfig) -> Result<String, CliError> {
    let (problem, ladder) = cfg.convergence()?;
    let records = convergence_sweep(&problem, &ladder)?;
    write_file(&cfg.convergence_output, &convergence_csv(&records))?;
    Ok(format!("{}wrote {}\n", convergence_table(&records), cfg.convergence_output.display()))
}

/// Elements of the square mesh used by `verify`.
pub const VERIFY_ELEMENTS: usize = 8;
/// Step ladder of the CQ order check.
pub const VERIFY_STEPS: [usize; 5] = [10, 20, 40, 80, 160];
/// Allowed deviation of the fitted CQ order from the BDF order.
pub const ORDER_TOLERANCE: f64 = 0.2;
/// Allowed catalog mismatch at the finest step of [`VERIFY_STEPS`].
pub const CATALOG_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub properties: PropertyReport,
    /// `(order, fitted slope, passed)`.
    pub orders: Vec<(usize, f64, bool)>,
    /// `(transfer, |CQ - oracle|, passed)`.
    pub catalog: Vec<(&'static str, f64, bool)>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.properties.failures().count()
            + self.orders.iter().filter(|o| !o.2).count()
            + self.catalog.iter().filter(|c| !c.2).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("operator properties (square, P1dc, Galerkin)\n");
        out.push_str(&self.properties.to_string());
        out.push_str("convolution quadrature order (1/(s+1) * t^3)\n");
        for (p, slope, ok) in &self.orders {
            writeln!(out, "BDF{p}  slope = {slope:.3}  (|slope - {p}| <= {ORDER_TOLERANCE})  {}", pass(*ok))
                .expect("writing to a String");
        }
        out.push_str("convolution catalog (BDF3, t^3)\n");
        for (name, err, ok) in &self.catalog {
            writeln!(out, "{name:<8} error = {err:.3e}  (<= {CATALOG_TOLERANCE:.0e})  {}", pass(*ok))
                .expect("writing to a String");
        }
        writeln!(out, "{} failure(s)", self.failures()).expect("writing to a String");
        out
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs the verification suite with the Galerkin assembler.
pub fn verify() -> Result<VerifyReport, CliError> {
    verify_with(|sp, f, c| assemble_v(sp, Discretization::Galerkin, f, c))
}

/// Runs the verification suite with a caller-supplied operator assembler.
pub fn verify_with<A>(assemble: A) -> Result<VerifyReport, CliError>
where
    A: Fn(&DensitySpace, &ComplexFrequency, &ProblemConfig) -> stokes_cq::Result<DMatrix<Complex64>>,
{
    let mesh = build_mesh(BoundaryCurve::square(1.0)?, VERIFY_ELEMENTS)?;
    let space = DensitySpace::new(mesh, SpaceKind::P1Discontinuous);
    let cfg = ProblemConfig::planar(1.0)?;
    let properties = laplace_property_suite_with(&space, &default_frequencies(), &cfg, assemble)?;

    let mut orders = Vec::new();
    for p in 1..=3 {
        let (_, slope) = cq_order_study(p, &VERIFY_STEPS)?;
        orders.push((p, slope, (slope - p as f64).abs() <= ORDER_TOLERANCE));
    }

    let g = |t: f64| if t > 0.0 { t * t * t } else { 0.0 };
    let steps = VERIFY_STEPS[VERIFY_STEPS.len() - 1];
    let mut catalog = Vec::new();
    for name in ["1/s", "1/(s+1)", "1/s^2"] {
        let exact = time_convolution_oracle(name, g, 1.0)?;
        let approx = cq_convolution(CatalogTransfer::from_name(name)?, g, 3, 1.0, steps)?;
        let err = (approx - exact).abs();
        catalog.push((name, err, err <= CATALOG_TOLERANCE));
    }
    Ok(VerifyReport { properties, orders, catalog })
}
