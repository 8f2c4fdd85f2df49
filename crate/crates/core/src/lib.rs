//! Dynamics of polynomial self-maps of C^2 tangent to the identity.
//!
//! The crate computes characteristic directions with multiplicities and
//! directors, classifies orbit fates, renders basin pictures deterministically,
//! and runs executable verification experiments backed by an extended-precision
//! iteration oracle. Core math is generic over the real scalar (`scalar::Real`);
//! the aliases below fix the common instantiations.

pub mod scalar;

pub mod poly;

pub mod parse;

pub mod chardir;

pub mod orbit;

pub mod render;

pub mod verify;

mod aberth;

pub use scalar::Real;

pub type Complex2F64 = poly::Complex2<f64>;
pub type Complex2F32 = poly::Complex2<f32>;
pub type HomPoly2F64 = poly::HomPoly2<f64>;
pub type HomPoly2F32 = poly::HomPoly2<f32>;
pub type PolyMap2F64 = poly::PolyMap2<f64>;
pub type PolyMap2F32 = poly::PolyMap2<f32>;
pub type LinearChangeF64 = poly::LinearChange<f64>;
pub type ProjDirectionF64 = chardir::ProjDirection<f64>;

/// Format with 17 significant digits, the file-format contract for all
/// floating-point numbers in CLI-emitted JSON and CSV.
pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
