//! Qudit circuit diagrams as open tensor networks.
//!
//! Diagrams are built from named generators, rewritten with diagrammatic
//! laws and checked by dense evaluation. The numerical core is generic over
//! the real field ([`f32`] or [`f64`]); the aliases below fix `f64`.

pub mod channels;
pub mod diagram;
pub mod document;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod protocols;
pub mod random;
pub mod report;
pub mod rewrite;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Real, ScalarFactor};

pub type Complex64 = num_complex::Complex<f64>;
pub type ComplexTensor = tensor::Tensor<f64>;
pub type ComplexTensorF32 = tensor::Tensor<f32>;
pub type Diagram = diagram::Diagram<f64>;
pub type DiagramF32 = diagram::Diagram<f32>;
pub type GeneratorSpec = generators::GeneratorSpec<f64>;
pub type RewriteRule = rewrite::RewriteRule<f64>;
pub type KrausSet = channels::KrausSet<f64>;
