//! Exact desk-scale workbench for removal-based attribution methods:
//! cooperative games built from models via removal operators and behaviour
//! mappings, game-theoretic values and interaction indices, canonical
//! additive decompositions, and machine-checked structural properties.

pub mod cad;
pub mod coalition;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod exprfn;
pub mod game;
pub mod indices;
pub mod rbam;
pub mod removal;

pub use error::{Error, Result};
