//! Fixed periodic descriptions of regular 3D honeycombs, geodesic regular
//! tree structures learned from them, transducer-based verification, and
//! exact coordination sequences.

pub mod field;
pub mod graph;
pub mod geometry;
pub mod group;
pub mod learner;
pub mod mat;
pub mod quotient;
pub mod rts;
pub mod schema;
pub mod verifier;

pub use field::{Field, FieldElement};
pub use geometry::{GeneratorTriple, GeometryKind, SchlafliSymbol};
pub use mat::{Mat4, Vec4};
