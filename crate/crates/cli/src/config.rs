//! Line-oriented `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use stokes_cq::bem::{check_points, ConstraintMode, Discretization, SpaceKind};
use stokes_cq::cq::CqScheme;
use stokes_cq::solver::{DirichletData, GridSpec, Simulation};
use stokes_cq::verification::{check_ladder, ConvergenceProblem};
use stokes_cq::{build_mesh, BoundaryCurve, Point, ProblemConfig};

use crate::CliError;

const KEYS: &[&str] = &[
    "curve",
    "radius",
    "half_width",
    "star_radius",
    "star_amplitude",
    "star_lobes",
    "elements",
    "space",
    "discretization",
    "constraints",
    "order",
    "final_time",
    "steps",
    "dt",
    "nu",
    "data",
    "data_delay",
    "points",
    "output",
    "snapshot_dir",
    "snapshot_grid",
    "snapshot_steps",
    "snapshot_mask_interior",
    "ladder",
    "convergence_output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Manufactured,
    Zero,
    Translation,
}

#[derive(Debug, Clone)]
pub struct SnapshotSpec {
    pub dir: PathBuf,
    pub grid: GridSpec,
    pub steps: Vec<usize>,
}

/// Parsed configuration; which fields are required depends on the command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub curve: BoundaryCurve,
    pub elements: Option<usize>,
    pub space: SpaceKind,
    pub discretization: Discretization,
    pub constraints: ConstraintMode,
    pub order: usize,
    pub final_time: f64,
    pub steps: Option<usize>,
    pub problem: ProblemConfig,
    pub data: DataKind,
    pub data_delay: f64,
    pub points: Vec<Point>,
    pub output: PathBuf,
    pub snapshots: Option<SnapshotSpec>,
    pub ladder: Option<Vec<(usize, usize)>>,
    pub convergence_output: PathBuf,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| config_error(format!("{key}: cannot parse '{v}'")))
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(|t| number(key, t)).collect()
}

fn parse_points(v: &str) -> Result<Vec<Point>, CliError> {
    v.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match numbers("points", t)?.as_slice() {
            [x, y] => Ok([*x, *y]),
            _ => Err(config_error(format!("points: '{}' is not an x, y pair", t.trim()))),
        })
        .collect()
}

fn parse_ladder(v: &str) -> Result<Vec<(usize, usize)>, CliError> {
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match t.trim().split_once(':') {
            Some((n, m)) => Ok((number("ladder", n)?, number("ladder", m)?)),
            None => Err(config_error(format!("ladder: '{}' is not N:M", t.trim()))),
        })
        .collect()
}

fn default_points(curve: &BoundaryCurve) -> Vec<Point> {
    match curve {
        BoundaryCurve::Square { .. } => ConvergenceProblem::square().points,
        BoundaryCurve::Circle { .. } => ConvergenceProblem::circle().points,
        BoundaryCurve::Star { .. } => Vec::new(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_error(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(config_error(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(config_error(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);

        let curve = match get("curve") {
            Some("circle") => BoundaryCurve::circle(get("radius").map_or(Ok(1.0), |v| number("radius", v))?),
            Some("square") => BoundaryCurve::square(get("half_width").map_or(Ok(1.0), |v| number("half_width", v))?),
            Some("star") => BoundaryCurve::star(
                get("star_radius").map_or(Ok(1.0), |v| number("star_radius", v))?,
                get("star_amplitude").map_or(Ok(0.3), |v| number("star_amplitude", v))?,
                get("star_lobes").map_or(Ok(6), |v| number("star_lobes", v))?,
            ),
            Some(other) => return Err(config_error(format!("curve: unknown curve '{other}'"))),
            None => return Err(config_error("curve is required")),
        }
        .map_err(|e| config_error(e.to_string()))?;

        let discretization = match get("discretization").unwrap_or("galerkin") {
            "galerkin" => Discretization::Galerkin,
            "nystrom" => Discretization::Nystrom,
            other => return Err(config_error(format!("discretization: unknown value '{other}'"))),
        };
        let default_space = match discretization {
            Discretization::Nystrom => "p0",
            Discretization::Galerkin => "p1dc",
        };
        let space = match get("space").unwrap_or(default_space) {
            "p0" => SpaceKind::P0,
            "p1dc" => SpaceKind::P1Discontinuous,
            other => return Err(config_error(format!("space: unknown value '{other}'"))),
        };
        let constraints = match get("constraints").unwrap_or("multiplier_m") {
            "none" => ConstraintMode::None,
            "multiplier_m" => ConstraintMode::MultiplierM,
            "multiplier_rigid" => ConstraintMode::MultiplierRigid,
            "augmented_vtilde" => ConstraintMode::AugmentedVtilde,
            other => return Err(config_error(format!("constraints: unknown value '{other}'"))),
        };
        let data = match get("data").unwrap_or("manufactured") {
            "manufactured" => DataKind::Manufactured,
            "zero" => DataKind::Zero,
            "translation" => DataKind::Translation,
            other => return Err(config_error(format!("data: unknown value '{other}'"))),
        };

        let order = get("order").map_or(Ok(3), |v| number("order", v))?;
        let final_time: f64 = get("final_time").map_or(Ok(1.0), |v| number("final_time", v))?;
        let steps = match (get("steps"), get("dt")) {
            (Some(m), None) => Some(number::<usize>("steps", m)?),
            (None, Some(dt)) => {
                let dt: f64 = number("dt", dt)?;
                if !(dt > 0.0) {
                    return Err(config_error("dt must be positive"));
                }
                let m = (final_time / dt).round();
                if (m * dt - final_time).abs() > 1e-9 * final_time || m < 1.0 {
                    return Err(config_error(format!("dt = {dt} does not divide final_time = {final_time}")));
                }
                Some(m as usize)
            }
            (Some(_), Some(_)) => return Err(config_error("give either steps or dt, not both")),
            (None, None) => None,
        };
        let nu = get("nu").map_or(Ok(1.0), |v| number("nu", v))?;
        let problem = ProblemConfig::planar(nu).map_err(|e| config_error(e.to_string()))?;
        let data_delay: f64 = get("data_delay").map_or(Ok(0.0), |v| number("data_delay", v))?;
        if !(data_delay >= 0.0) {
            return Err(config_error("data_delay must be non-negative"));
        }

        let points = match get("points") {
            Some(v) => parse_points(v)?,
            None => default_points(&curve),
        };
        let snapshots = match (get("snapshot_dir"), get("snapshot_grid"), get("snapshot_steps")) {
            (None, None, None) => None,
            (Some(dir), Some(grid), Some(steps)) => {
                let g = numbers("snapshot_grid", grid)?;
                if g.len() != 6 || g[0] < 1.0 || g[1] < 1.0 || g[0].fract() != 0.0 || g[1].fract() != 0.0 {
                    return Err(config_error("snapshot_grid: expected 'rows cols x0 y0 dx dy'"));
                }
                let mask_interior = match get("snapshot_mask_interior").unwrap_or("true") {
                    "true" => true,
                    "false" => false,
                    other => return Err(config_error(format!("snapshot_mask_interior: '{other}' is not a boolean"))),
                };
                let steps = steps
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| number("snapshot_steps", t))
                    .collect::<Result<Vec<usize>, _>>()?;
                Some(SnapshotSpec {
                    dir: PathBuf::from(dir),
                    grid: GridSpec {
                        rows: g[0] as usize,
                        cols: g[1] as usize,
                        x0: g[2],
                        y0: g[3],
                        dx: g[4],
                        dy: g[5],
                        mask_interior,
                    },
                    steps,
                })
            }
            _ => return Err(config_error("snapshot_dir, snapshot_grid and snapshot_steps go together")),
        };
        let ladder = get("ladder").map(parse_ladder).transpose()?;

        let cfg = RunConfig {
            curve,
            elements: get("elements").map(|v| number("elements", v)).transpose()?,
            space,
            discretization,
            constraints,
            order,
            final_time,
            steps,
            problem,
            data,
            data_delay,
            points,
            output: PathBuf::from(get("output").unwrap_or("observations.csv")),
            snapshots,
            ladder,
            convergence_output: PathBuf::from(get("convergence_output").unwrap_or("convergence.csv")),
        };
        cfg.validate_common()?;
        Ok(cfg)
    }

    fn validate_common(&self) -> Result<(), CliError> {
        CqScheme::new(self.order, self.final_time, 1).map_err(|e| config_error(e.to_string()))?;
        if self.discretization == Discretization::Nystrom {
            if self.space != SpaceKind::P0 {
                return Err(config_error("the nystrom discretization needs space = p0"));
            }
            if !self.curve.is_smooth() {
                return Err(config_error("the nystrom discretization needs a smooth curve"));
            }
        }
        Ok(())
    }

    pub fn dirichlet_data(&self) -> DirichletData {
        let base = match self.data {
            DataKind::Manufactured => DirichletData::manufactured(),
            DataKind::Zero => DirichletData::zero(),
            DataKind::Translation => DirichletData::translation(),
        };
        if self.data_delay > 0.0 {
            base.delayed(self.data_delay)
        } else {
            base
        }
    }

    /// Simulation for `run`: needs `elements` and `steps` (or `dt`).
    pub fn simulation(&self) -> Result<Simulation, CliError> {
        let n = self.elements.ok_or_else(|| config_error("elements is required"))?;
        let m = self.steps.ok_or_else(|| config_error("steps (or dt) is required"))?;
        self.simulation_at(n, m)
    }

    pub fn simulation_at(&self, n: usize, m: usize) -> Result<Simulation, CliError> {
        let mesh = build_mesh(self.curve, n).map_err(|e| config_error(e.to_string()))?;
        check_points(&mesh, &self.points).map_err(|e| config_error(e.to_string()))?;
        Ok(Simulation {
            curve: self.curve,
            n_elements: n,
            space: self.space,
            discretization: self.discretization,
            constraints: self.constraints,
            scheme: CqScheme::new(self.order, self.final_time, m).map_err(|e| config_error(e.to_string()))?,
            config: self.problem,
        })
    }

    /// Problem for `converge`: manufactured data and a doubling ladder.
    pub fn convergence(&self) -> Result<(ConvergenceProblem, Vec<(usize, usize)>), CliError> {
        let ladder = self.ladder.clone().ok_or_else(|| config_error("ladder is required"))?;
        check_ladder(&ladder).map_err(|e| config_error(e.to_string()))?;
        if self.data != DataKind::Manufactured || self.data_delay != 0.0 {
            return Err(config_error("convergence studies use the manufactured data"));
        }
        if self.points.is_empty() {
            return Err(config_error("points are required"));
        }
        for &(n, m) in &ladder {
            self.simulation_at(n, m)?;
        }
        Ok((
            ConvergenceProblem {
                curve: self.curve,
                space: self.space,
                discretization: self.discretization,
                constraints: self.constraints,
                order: self.order,
                final_time: self.final_time,
                config: self.problem,
                points: self.points.clone(),
            },
            ladder,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "curve = circle\nelements = 8\nsteps = 4\n";

    #[test]
    fn defaults_and_comments() {
        let cfg = RunConfig::parse("# circle study\ncurve = circle   # unit\ndiscretization = nystrom\nsteps = 10\n")
            .unwrap();
        assert_eq!(cfg.space, SpaceKind::P0);
        assert_eq!(cfg.order, 3);
        assert_eq!(cfg.points.len(), 3);
        assert_eq!(cfg.steps, Some(10));
        assert_eq!(cfg.output, PathBuf::from("observations.csv"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse(&format!("{BASE}colour = red\n")), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse(&format!("{BASE}steps = 5\n")), Err(CliError::Config(_))));
        assert!(RunConfig::parse("elements = 8\n").is_err());
    }

    #[test]
    fn step_size_must_divide_the_interval() {
        let cfg = RunConfig::parse("curve = circle\ndt = 0.25\n").unwrap();
        assert_eq!(cfg.steps, Some(4));
        assert!(RunConfig::parse("curve = circle\ndt = 0.3\n").is_err());
        assert!(RunConfig::parse("curve = circle\ndt = 0.25\nsteps = 4\n").is_err());
    }

    #[test]
    fn points_and_ladder() {
        let cfg = RunConfig::parse(&format!("{BASE}points = 0.1, 0.2; -0.3 0.4\nladder = 4:4, 8:8\n")).unwrap();
        assert_eq!(cfg.points, vec![[0.1, 0.2], [-0.3, 0.4]]);
        assert_eq!(cfg.ladder, Some(vec![(4, 4), (8, 8)]));
        assert!(RunConfig::parse(&format!("{BASE}points = 0.1\n")).is_err());
        assert!(RunConfig::parse(&format!("{BASE}ladder = 4-4\n")).is_err());
    }

    #[test]
    fn preconditions_are_checked_at_parse_time() {
        assert!(RunConfig::parse("curve = square\ndiscretization = nystrom\n").is_err());
        assert!(RunConfig::parse("curve = circle\norder = 7\n").is_err());
        assert!(RunConfig::parse("curve = circle\nnu = -1\n").is_err());
        let cfg = RunConfig::parse(&format!("{BASE}points = 1, 0\n")).unwrap();
        assert!(cfg.simulation().is_err());
        let cfg = RunConfig::parse("curve = square\nelements = 6\nsteps = 4\n").unwrap();
        assert!(cfg.simulation().is_err());
    }
}
