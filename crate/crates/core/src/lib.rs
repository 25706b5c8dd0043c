//! Generalised sequential algorithms over ordinals: formulas, states,
//! satisfaction, machine validation, transfinite runs and the standard
//! machine constructions.

pub mod alpha;
pub mod logic;
pub mod ordinal;
pub mod runtime;
pub mod sample;
pub mod satisfaction;
pub mod specfile;
pub mod state;
pub mod transforms;
pub mod validator;
