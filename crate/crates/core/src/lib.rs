//! Exact motivic zeta functions, Denef–Loeser nearby cycles, Grothendieck
//! ring morphisms on Γ-polyhedra, and finite-field arc counting.

pub mod arcs;
pub mod error;
pub mod expr;
pub mod gamma;
pub mod gring;
pub mod identity;
pub mod lex;
pub mod linalg;
pub mod nearby;
pub mod props;
pub mod report;
pub mod run;
pub mod series;
pub mod taskfile;

pub use error::{Error, Result};
