//! Pairwise quantification of multipartite entanglement.
//!
//! A probe quantity is evaluated on every two-site reduced density matrix of
//! a register and averaged into the measure `M` (or summed into the
//! unnormalized `M^T`). Two probes are provided: the quasi-concurrence
//! `Q_C = λ₁ + λ₂ − λ₃ − λ₄` built from the Wootters spectrum, and the
//! halved mutual information `Fr = ½[S(A) + S(B) − S(AB)]`.
//!
//! Mixed states are handled by a convex-roof search over ensemble
//! decompositions, and [`locc`] provides a Monte Carlo harness that tries
//! to catch `M` increasing on average under local operations.

pub mod convexroof;
pub mod error;
pub mod locc;
pub mod measure;
pub mod numerics;
pub mod probes;
pub mod qstate;

pub use error::{Error, Result};
pub use measure::{MeasureResult, PairProfile};
pub use probes::ProbeKind;
pub use qstate::{DensityMatrix, SiteSubset, State, StateVector};
