//! Numerical laboratory for multidimensional Laplace transforms of
//! vector-valued functions: Widder growth bounds, Post–Widder inversion and
//! fractional-integral representations.
//!
//! Values live in `C^d` equipped with a family of weighted sup seminorms,
//! which models a locally convex target space at desk scale.

pub mod calculus;
pub mod catalog;
pub mod error;
pub mod function;
pub mod inversion;
pub mod kernels;
pub mod lcs;
pub mod quad;
pub mod representations;
pub mod special;
pub mod transform;
pub mod value;
pub mod widder;

pub use calculus::{mixed_derivative, normalized_derivative, Method, TransformOracle};
pub use catalog::{Catalog, CatalogEntry, ClosedFormPair, ExpPoly, PairTerm, Trig};
pub use error::{Error, Result};
pub use function::{Envelope, EnvelopedFunction, Factor, Tail, Term};
pub use inversion::{extrapolate, invert, post_widder_1d, post_widder_nd, InversionReport, PWApproximant};
pub use kernels::{convolve_finite, fractional_integrate, kernel_eval, Convolvable, FractionalOrder};
pub use lcs::{Functional, Seminorm, SeminormFamily};
pub use representations::{build_f_r, build_g_h, build_h_r, RepresentationBundle};
pub use transform::{laplace_forward, region_probe, weighted_transform, RegionClass, Status, TransformResult};
pub use value::{Scaled, Value, C64};
pub use widder::{certify, envelope_check, widder_ratio, CertificateRecord, Verdict};
