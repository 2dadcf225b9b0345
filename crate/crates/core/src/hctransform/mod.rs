//! Rank-one harmonic analysis on PSL2(R): spherical functions, the
//! Harish-Chandra transform, the test functions k_nu, and the oscillatory
//! integrals of the relative trace formula.

pub mod cutoff;
pub mod knu;
pub mod model;
pub mod orbital;
pub mod spherical;
pub mod transform;

pub use spherical::{spherical, spherical_complex, Bump, Radial, SphericalProfile};
pub use transform::{
    abel_transform, beta, hc_transform, hc_transform_complex, inverse_hc, inverse_hc_grid, AbelProjection,
    DecayCertificate, TransformProfile,
};
pub use knu::{KnuCertificate, KnuEntry, KnuFamily, KnuSettings};
pub use cutoff::{CutoffB, ModelCutoff};
pub use model::{model_integral, model_integral_complex, model_phase_hessian};
pub use orbital::{
    critical_thetas, orbital_integral, oscillatory_j, relative_geometric_side, stationary_phase_reduction,
    support_bound, RelativeSide, SupportBound,
};
