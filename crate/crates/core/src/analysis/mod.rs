//! Measurement and audit machinery.

pub mod blowdown;
pub mod decay;
pub mod gauss_bonnet;
pub mod max_principle;
pub mod slice;

pub use blowdown::{blowdown, BlowdownSequence, BlowdownWindow};
pub use decay::{bessel_log_profile, decay_fit, decay_fit_samples, BesselCompliance, DecayFit, DecayMode, LinearFit};
pub use gauss_bonnet::{
    gauss_bonnet_audit, geodesic_curvature, BoundaryCircle, GaussBonnetAudit, GeodesicCurvature, Orientation, Topology,
};
pub use max_principle::{comparison_audit, weak_gradient_audit, ComparisonAudit, Extremes, WeakGradientAudit};
pub use slice::{coarea_slice, SliceCandidate, SliceResult};
