//! Pure, stateless mathematical kernels shared by the rest of the crate:
//! matrices, seeded random streams, score functions, solvers, interpolation,
//! sampling, and set statistics. Everything here is reentrant; sampling is a
//! pure function of its parameters and the supplied random stream.

pub mod als;
pub mod linalg;
pub mod matrix;
pub mod nnls;
pub mod rng;
pub mod sample;
pub mod scores;
pub mod slerp;
pub mod stats;

pub use als::{als_factorize, als_factorize_warm, als_objective, AlsParams};
pub use matrix::Matrix;
pub use nnls::{nnls, NnlsProblem};
pub use rng::RngStream;
pub use sample::{sample_beta_mean, sample_dirichlet, sample_power_law_degrees, PowerLawDegrees};
pub use scores::{cosine, cosine_scores, inner_product_scores};
pub use slerp::slerp;
pub use stats::{jaccard, pearson, shannon_entropy};
