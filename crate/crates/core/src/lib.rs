//! Local distinguishability of orthogonal product states.
//!
//! A complete orthogonal product basis can be perfectly distinguished by
//! local operations and classical communication exactly when it can be
//! distinguished by local projective measurements that never disturb any
//! state. This crate decides that question with a greedy component-splitting
//! procedure ([`distinguish::decide`]), emits either an explicit protocol or
//! a stuck certificate, cross-checks the procedure against a brute-force
//! search ([`oracle`]), and simulates arbitrary local measurement trees,
//! POVMs included ([`sim`]).

pub mod canon;
pub mod distinguish;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod relativity;
pub mod sim;

pub use distinguish::{decide, Mode, ProtocolTree, Verdict, VerdictKind};
pub use ensemble::{catalog, parse_ensemble, Ensemble, ProductState};
pub use error::{Error, Result};
pub use linalg::{LocalVector, DEFAULT_TOL};
