//! Invariant Hermitian geometry of 6-dimensional almost-abelian Lie algebras:
//! exterior calculus on a fixed frame, Gauduchon connections and their
//! curvature, the Hull–Strominger system with flat bundle, and the reduced
//! Anomaly flow.

pub mod algebra;
pub mod connections;
pub mod exterior;
pub mod flow;
pub mod hull_strominger;
pub mod verify;

pub use algebra::{AlmostAbelianStructure, BalancedParams, HermitianMetric, StructureSpec};
pub use exterior::{ComplexForm, Form, KForm, StructureConstants};
