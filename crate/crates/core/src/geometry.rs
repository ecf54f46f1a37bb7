//! Closed boundary curves and their uniform partitions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

pub type Point = [f64; 2];

/// A closed curve parametrized counterclockwise over `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCurve {
    /// Boundary of `(-h, h)^2`, arclength-proportional, starting at `(-h, -h)`.
    Square { half_width: f64 },
    /// Circle of the given radius centred at the origin, starting at `(r, 0)`.
    Circle { radius: f64 },
    /// Polar curve `r(t) = base_radius + amplitude cos(2 pi lobes t)`.
    Star { base_radius: f64, amplitude: f64, lobes: u32 },
}

impl BoundaryCurve {
    pub fn square(half_width: f64) -> Result<Self> {
        let c = BoundaryCurve::Square { half_width };
        c.validate()?;
        Ok(c)
    }

    pub fn circle(radius: f64) -> Result<Self> {
        let c = BoundaryCurve::Circle { radius };
        c.validate()?;
        Ok(c)
    }

    pub fn star(base_radius: f64, amplitude: f64, lobes: u32) -> Result<Self> {
        let c = BoundaryCurve::Star { base_radius, amplitude, lobes };
        c.validate()?;
        Ok(c)
    }

    /// The six-lobed curve used for the flow illustration.
    pub fn six_lobed_star() -> Self {
        BoundaryCurve::Star { base_radius: 1.0, amplitude: 0.3, lobes: 6 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BoundaryCurve::Square { half_width } => half_width > 0.0 && half_width.is_finite(),
            BoundaryCurve::Circle { radius } => radius > 0.0 && radius.is_finite(),
            BoundaryCurve::Star { base_radius, amplitude, lobes } => {
                // r > 0 everywhere keeps the polar graph simple
                base_radius > 0.0 && amplitude >= 0.0 && amplitude < base_radius && lobes >= 1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid curve {self:?}")))
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, BoundaryCurve::Square { .. })
    }

    pub fn point(&self, t: f64) -> Point {
        match *self {
            BoundaryCurve::Square { half_width: h } => {
                let t = t.rem_euclid(1.0);
                let side = ((t * 4.0) as usize).min(3);
                let u = t * 4.0 - side as f64;
                let s = -h + 2.0 * h * u;
                match side {
                    0 => [s, -h],
                    1 => [h, s],
                    2 => [-s, h],
                    _ => [-h, -s],
                }
            }
            BoundaryCurve::Circle { radius } => {
                let a = 2.0 * PI * t;
                [radius * a.cos(), radius * a.sin()]
            }
            BoundaryCurve::Star { base_radius, amplitude, lobes } => {
                let a = 2.0 * PI * t;
                let r = base_radius + amplitude * (lobes as f64 * a).cos();
                [r * a.cos(), r * a.sin()]
            }
        }
    }

    /// `dx/dt`. On the square, the side is chosen from `t` (one-sided at corners).
    pub fn tangent(&self, t: f64) -> Point {
        match *self {
            BoundaryCurve::Square { half_width: h } => {
                let t = t.rem_euclid(1.0);
                let side = ((t * 4.0) as usize).min(3);
                let v = 8.0 * h;
                match side {
                    0 => [v, 0.0],
                    1 => [0.0, v],
                    2 => [-v, 0.0],
                    _ => [0.0, -v],
                }
            }
            BoundaryCurve::Circle { radius } => {
                let a = 2.0 * PI * t;
                [-2.0 * PI * radius * a.sin(), 2.0 * PI * radius * a.cos()]
            }
            BoundaryCurve::Star { base_radius, amplitude, lobes } => {
                let a = 2.0 * PI * t;
                let l = lobes as f64;
                let r = base_radius + amplitude * (l * a).cos();
                let dr = -2.0 * PI * l * amplitude * (l * a).sin();
                [dr * a.cos() - 2.0 * PI * r * a.sin(), dr * a.sin() + 2.0 * PI * r * a.cos()]
            }
        }
    }

    /// Area of the enclosed region.
    pub fn area(&self) -> f64 {
        match *self {
            BoundaryCurve::Square { half_width } => 4.0 * half_width * half_width,
            BoundaryCurve::Circle { radius } => PI * radius * radius,
            BoundaryCurve::Star { base_radius, amplitude, .. } => {
                // (1/2) int r^2 dtheta
                PI * (base_radius * base_radius + 0.5 * amplitude * amplitude)
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            BoundaryCurve::Square { half_width } => 8.0 * half_width,
            BoundaryCurve::Circle { radius } => 2.0 * PI * radius,
            BoundaryCurve::Star { lobes, .. } => {
                let rule = gauss_legendre(24);
                let pieces = 8 * lobes as usize;
                (0..pieces)
                    .map(|k| {
                        let a = k as f64 / pieces as f64;
                        let b = (k + 1) as f64 / pieces as f64;
                        rule.integrate(a, b, |t| norm(self.tangent(t)))
                    })
                    .sum()
            }
        }
    }

    /// Strictly inside the enclosed region.
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            BoundaryCurve::Square { half_width: h } => p[0].abs() < h && p[1].abs() < h,
            BoundaryCurve::Circle { radius } => p[0].hypot(p[1]) < radius,
            BoundaryCurve::Star { base_radius, amplitude, lobes } => {
                let a = p[1].atan2(p[0]);
                p[0].hypot(p[1]) < base_radius + amplitude * (lobes as f64 * a).cos()
            }
        }
    }

    /// Euclidean distance from `p` to the curve.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            BoundaryCurve::Square { half_width: h } => {
                let (x, y) = (p[0].abs(), p[1].abs());
                if x <= h && y <= h {
                    (h - x).min(h - y)
                } else {
                    let dx = (x - h).max(0.0);
                    let dy = (y - h).max(0.0);
                    dx.hypot(dy)
                }
            }
            BoundaryCurve::Circle { radius } => (p[0].hypot(p[1]) - radius).abs(),
            BoundaryCurve::Star { .. } => {
                // dense sampling, then golden-section refinement around the best sample
                let samples = 4096;
                let dist = |t: f64| {
                    let q = self.point(t);
                    (q[0] - p[0]).hypot(q[1] - p[1])
                };
                let mut best = (0.0, f64::INFINITY);
                for k in 0..samples {
                    let t = k as f64 / samples as f64;
                    let d = dist(t);
                    if d < best.1 {
                        best = (t, d);
                    }
                }
                let step = 1.0 / samples as f64;
                let (mut a, mut b) = (best.0 - step, best.0 + step);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let c = b - g * (b - a);
                    let d = a + g * (b - a);
                    if dist(c) < dist(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                dist(0.5 * (a + b)).min(best.1)
            }
        }
    }
}

pub(crate) fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

/// One element of a boundary partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Parameter interval `[t0, t1)`.
    pub t0: f64,
    pub t1: f64,
    pub start: Point,
    pub end: Point,
    pub midpoint: Point,
    /// Outward unit normal at the midpoint.
    pub normal: Point,
    pub arclength: f64,
    /// Upper bound for the distance from the midpoint to any point of the element.
    pub reach: f64,
}

/// Uniform partition (in parameter space) of a closed curve.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    curve: BoundaryCurve,
    elements: Vec<Element>,
}

/// Builds the uniform `n_elements` partition of `curve`.
pub fn build_mesh(curve: BoundaryCurve, n_elements: usize) -> Result<BoundaryMesh> {
    curve.validate()?;
    if n_elements < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 elements, got {n_elements}")));
    }
    if matches!(curve, BoundaryCurve::Square { .. }) && !n_elements.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!("square meshes need a multiple of 4 elements, got {n_elements}")));
    }
    let rule = gauss_legendre(20);
    let n = n_elements as f64;
    let elements = (0..n_elements)
        .map(|k| {
            let t0 = k as f64 / n;
            let t1 = (k + 1) as f64 / n;
            let tm = 0.5 * (t0 + t1);
            let tan = curve.tangent(tm);
            let len = norm(tan);
            let (left, right) = match curve {
                BoundaryCurve::Square { half_width } => (4.0 * half_width / n, 4.0 * half_width / n),
                BoundaryCurve::Circle { radius } => (PI * radius / n, PI * radius / n),
                BoundaryCurve::Star { .. } => (
                    rule.integrate(t0, tm, |t| norm(curve.tangent(t))),
                    rule.integrate(tm, t1, |t| norm(curve.tangent(t))),
                ),
            };
            let arclength = left + right;
            Element {
                t0,
                t1,
                start: curve.point(t0),
                end: curve.point(t1),
                midpoint: curve.point(tm),
                normal: [tan[1] / len, -tan[0] / len],
                arclength,
                reach: left.max(right),
            }
        })
        .collect();
    Ok(BoundaryMesh { curve, elements })
}

impl BoundaryMesh {
    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn perimeter(&self) -> f64 {
        self.elements.iter().map(|e| e.arclength).sum()
    }

    pub fn max_arclength(&self) -> f64 {
        self.elements.iter().map(|e| e.arclength).fold(0.0, f64::max)
    }

    pub fn min_arclength(&self) -> f64 {
        self.elements.iter().map(|e| e.arclength).fold(f64::INFINITY, f64::min)
    }

    /// Physical point at local coordinate `u` in `[0, 1]` of element `e`.
    #[inline]
    pub fn point(&self, e: usize, u: f64) -> Point {
        let el = &self.elements[e];
        self.curve.point(el.t0 + u * (el.t1 - el.t0))
    }

    /// `|dx/du|` at local coordinate `u` of element `e`.
    #[inline]
    pub fn jacobian(&self, e: usize, u: f64) -> f64 {
        let el = &self.elements[e];
        let dt = el.t1 - el.t0;
        // interior sample keeps the square's side selection inside the element
        let t = el.t0 + u.clamp(1e-12, 1.0 - 1e-12) * dt;
        norm(self.curve.tangent(t)) * dt
    }

    /// Outward unit normal at local coordinate `u` of element `e`.
    #[inline]
    pub fn normal(&self, e: usize, u: f64) -> Point {
        let el = &self.elements[e];
        let t = el.t0 + u.clamp(1e-12, 1.0 - 1e-12) * (el.t1 - el.t0);
        let tan = self.curve.tangent(t);
        let len = norm(tan);
        [tan[1] / len, -tan[0] / len]
    }

    /// Elements `e` and `f` share the vertex at the end of `e` (start of `f`).
    pub fn follows(&self, e: usize, f: usize) -> bool {
        (e + 1) % self.n_elements() == f
    }

    /// Lower bound for the distance between two elements (bounding discs).
    pub fn element_gap(&self, e: usize, f: usize) -> f64 {
        let a = &self.elements[e];
        let b = &self.elements[f];
        let d = norm([a.midpoint[0] - b.midpoint[0], a.midpoint[1] - b.midpoint[1]]);
        d - a.reach - b.reach
    }

    /// Lower bound for the distance from `p` to element `e`.
    pub fn point_gap(&self, e: usize, p: Point) -> f64 {
        let el = &self.elements[e];
        norm([el.midpoint[0] - p[0], el.midpoint[1] - p[1]]) - el.reach
    }

    /// Distance from `p` to the boundary.
    pub fn distance(&self, p: Point) -> f64 {
        self.curve.distance(p)
    }

    /// Centroid of the vertices (the origin for all built-in curves).
    pub fn centroid(&self) -> Point {
        let n = self.n_elements() as f64;
        let (sx, sy) = self.elements.iter().fold((0.0, 0.0), |acc, e| (acc.0 + e.start[0], acc.1 + e.start[1]));
        [sx / n, sy / n]
    }

    /// `int_Gamma f(x, n(x)) ds` with `q` Gauss points per element.
    pub fn integrate<F: Fn(Point, Point) -> f64>(&self, q: usize, f: F) -> f64 {
        let rule = gauss_legendre(q);
        (0..self.n_elements())
            .map(|e| {
                rule.iter().map(|(u, w)| w * f(self.point(e, u), self.normal(e, u)) * self.jacobian(e, u)).sum::<f64>()
            })
            .sum()
    }
}
