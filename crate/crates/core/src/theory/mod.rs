//! Numerical checks of the quantization argument and of the scaling laws
//! behind the estimator's rates.

pub mod mesh;
pub mod scaling;

pub use mesh::{
    build_mesh, check_embedding_inequalities, lattice_coord, mesh_resolution, EmbeddingCheck, MeshConstants,
    MeshQuantization,
};
pub use scaling::{
    aerr_scaling, degree_check, embedding_suite, estimate_aerr, manifold_contrast, max_knn_radius, penalty_scaling,
    radius_scaling, rate_experiment, uniform_cloud, AerrConfig, AerrEstimate, AerrSignal, ContrastConfig, DegreeCheck,
    EmbeddingCase, EmbeddingConfig, EmbeddingSuite, ManifoldContrast, PenaltyConfig, RadiusConfig, RateConfig,
    ScalingReport,
};
