//! Bench description files for the shutter simulator.
//!
//! A bench file is a sequence of brace-delimited sections:
//!
//! ```text
//! device  { displacer d=4mm ; pockels vhalf=3200V ; displacer d=4mm ; pinhole rails=[1] ; hwp angle=45deg }
//! source  { rep_rate=250kHz wavelength=800nm polarization=H }
//! trigger { freq=1kHz vpeak=3200V flat=10ns tau=500ns jitter=1.5ns }
//! ```
//!
//! Values are kept as exact decimals in a canonical unit per dimension
//! (mm, ns, V, Hz, and rad or deg for angles), so `parse(serialize(doc))`
//! reproduces `doc` exactly.

#[cfg(feature = "proptest")]
pub mod arbitrary;
pub mod build;
pub mod diagnostic;
pub mod document;
pub mod lexer;
pub mod parser;
pub mod schema;
pub mod units;

pub use build::{Bench, BuildError, SweepMode, SweepSpec};
pub use diagnostic::{Diagnostic, DiagnosticKind, Pos};
pub use document::{Assignment, BenchDocument, ElementDecl, ElementKind, Quantity, SectionKind, Value};
pub use parser::parse;

pub type BenchF64 = Bench<f64>;
pub type BenchF32 = Bench<f32>;
