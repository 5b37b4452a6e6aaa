//! Joint and individual subspace estimation for matched-sample data views.
//!
//! Each view `Y_k` (`n x p_k`, rows are the shared samples) is denoised by a
//! truncated SVD. The singular values of the product of the two estimated
//! column-space projectors, `σ(P̂₁P̂₂)`, are the cosines of the principal
//! angles between the estimated column spaces. Joint directions sit near 1;
//! the joint rank is the number of values above both a rotational-bootstrap
//! threshold `1 − ε̂₁` and the edge `√λ₊` of the spectrum produced by chance
//! alignment of random subspaces.
//!
//! ```no_run
//! use ppd_core::{decompose, generate, DecomposeOptions, RankMode, SimConfig};
//!
//! let (views, _truth) = generate(&SimConfig::two_view(90.0, 2.0, RankMode::Estimated, 7)).unwrap();
//! let result = decompose(&views[0], &views[1], &DecomposeOptions::default()).unwrap();
//! println!("joint rank {}", result.joint_rank);
//! ```

pub mod bootstrap;
pub mod decompose;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod noise_spectrum;
pub mod oracle;
mod quadrature;
pub mod random;
pub mod rank;
pub mod sim;

pub use bootstrap::{
    estimate_epsilon1, estimate_epsilon1_naive, haar_pair, noise_replicate, rotate_align,
    BootstrapConfig, BootstrapVariant, BootstrapView, EpsilonEstimate,
};
pub use decompose::{
    decompose, decompose_multiview, individual_basis, joint_basis, joint_rank,
    multiview_joint_basis, product_spectrum, DecomposeOptions, DecompositionResult, PairSummary,
    ProductSpectrum, RankSpec,
};
pub use diagnostics::{
    build_report, export_json, parse_json, render_svg, DiagnosticReport, Histogram,
};
pub use error::{Error, Result};
pub use linalg::{
    compact_svd, orthonormalize, principal_spectrum, subspace_distance, CompactSvd, DenseMatrix,
    OrthonormalBasis,
};
pub use noise_spectrum::{
    noise_density, noise_law, sample_noise_spectrum, singular_value_threshold, NoiseSpectrumLaw,
};
pub use oracle::{
    theorem1_intervals, theorem2_bounds, true_epsilons, truth_oracle, ClusterIntervals, Interval,
    SubspaceBounds, TruthOracle,
};
pub use rank::{
    estimate_noise_sigma, mp_median_sv, select_rank, threshold_coefficient, truncate,
    RankSelection, Truncation,
};
pub use sim::{
    generate, misspecify_ranks, run_benchmark, score, CellResult, RankMode, ScoreTriple, SimConfig,
    SimTruth,
};
