//! Core of the city planner: the landscape model, trace ingestion, the
//! city layout and the restructure changelog.

pub mod ingest;
pub mod layout;
pub mod model;
pub mod restructure;
pub mod scalar;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use model::{EntityId, EntityKind, Landscape};
pub use restructure::{ChangeError, ChangeOp, ChangelogEntry, PlanState};
pub use scalar::Scalar;

/// Layout types at the default `f64` precision.
pub type LayoutConfig = layout::LayoutConfig<f64>;
pub type Box3D = layout::Box3D<f64>;
pub type CityLayout = layout::CityLayout<f64>;

/// Single-precision variants, e.g. for GPU-bound consumers.
pub type LayoutConfig32 = layout::LayoutConfig<f32>;
pub type CityLayout32 = layout::CityLayout<f32>;
