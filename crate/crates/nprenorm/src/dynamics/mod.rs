pub mod birkhoff;
pub mod cycles;
pub mod density;
pub mod map;
pub mod orbit;
pub mod siegel;

pub use birkhoff::{birkhoff_average, BirkhoffRun, Observable};
pub use cycles::{find_small_cycle, CycleOptions, CycleSearch};
pub use density::{density_estimate, DensityEstimate, DensityMode};
pub use map::{from_alpha, make_map, NeutralQuadratic, Variant};
pub use orbit::{advance, iterate, BoundarySample, IterOptions, OrbitTrace, Stepper};
pub use siegel::{siegel_estimate, SiegelEstimate, SiegelOptions};
