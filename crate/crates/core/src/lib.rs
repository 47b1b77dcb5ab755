//! Routing speedup laboratory: hub labeling, contraction hierarchies and
//! transit node routing on the adversarial `G(t,k,q)` family, together with
//! exact highway-dimension checkers, shortcut and path-class censuses, and
//! the exact-cover reduction to minimum hub labeling.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod gtkq;
pub mod ch;
pub mod highway;
pub mod hub_labeling;
pub mod mhl;
pub mod tnr;

pub use error::{Error, Result};
