//! Boundary element and convolution quadrature solver for the transient
//! Stokes equations in the exterior of a bounded planar obstacle.
//!
//! The time-dependent problem is reduced to a family of Brinkman problems
//! `s u - nu Δu + ∇p = 0` at complex frequencies `s`. Each one is solved with a
//! single-layer boundary integral equation; the frequency-domain solutions are
//! recombined into a time stepper by BDF-based convolution quadrature.

pub mod bem;
pub mod bessel;
pub mod cq;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
pub use geometry::{build_mesh, BoundaryCurve, BoundaryMesh, Element, Point};
pub use kernels::{pressure_kernel, velocity_kernel, ComplexFrequency, KernelTensor, ProblemConfig};
