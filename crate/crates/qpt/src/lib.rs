//! Quantum process tomography by Riemannian gradient descent.
//!
//! A quantum channel is parameterized by its column-stacked Kraus operators,
//! a point on the complex Stiefel manifold. Reconstruction minimizes a
//! least-squares loss over measurement records by stochastic gradient steps
//! retracted onto the manifold with an (iterative) Cayley transform, so the
//! trace-preservation constraint holds at every iterate.
//!
//! Module map:
//! - [`channel`]: Kraus/Choi/Liouville/Pauli-Liouville representations,
//!   conversions, fidelity, rank reduction, random channels.
//! - [`manifold`]: Stiefel geometry: tangent projection, metrics, Cayley
//!   retractions, exponential-map reference.
//! - [`optimizer`]: loss, analytic gradient, momentum SGD and Adam on the
//!   manifold, the end-to-end `fit` driver.
//! - [`tomography`]: probe/measurement bases, synthetic data, subsampling,
//!   train/test splits, channel evaluation.
//! - [`experiments`]: scripted case studies (random channels, retraction
//!   benchmark, Pauli noise extraction, bosonic mode, QND steady states).
//! - [`io`]: file formats for channels, datasets, and fit reports.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod manifold;
pub mod optimizer;
pub mod tomography;

pub use error::{QptError, Result};
pub use linalg::{CMat, CVec};
