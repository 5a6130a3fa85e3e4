//! Numerical toolkit for holomorphic retracts of Lie balls, the tetrablock
//! and a few neighbouring domains: membership gauges, the explicit maps
//! between the domains, retraction families with a sampling verifier, and
//! bounds on the Carathéodory and Lempert functions.

pub mod domains;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod metrics;
pub mod optim;
pub mod report;
pub mod retractions;
pub mod verify;

pub use domains::DomainDescriptor;
pub use error::{Error, Result};
pub use linalg::{CVec, SymMat2, C64};
