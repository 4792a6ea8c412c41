pub mod chart;
pub mod covering;
pub mod renorm;
pub mod template;

pub use chart::{ChartConfig, FatouChart, ResidualStats};
pub use covering::{covering_t, covering_t_inv, exp_lift, exp_proj};
pub use renorm::{image_bound, renorm_multiplier, renormalize_eval, MultiplierCheck, RenormOptions, RenormPoint};
pub use template::Template;
