//! The floating-point slopes domain.

mod arith;
mod baseline;
mod order;
mod registry;
mod value;

pub use arith::{
    fps_add, fps_div, fps_div_with, fps_mul, fps_mul_with, fps_neg, fps_sqrt, fps_sub, real_add,
    real_div, real_mul, real_sqrt, real_sub, FormChoice,
};
pub use baseline::{
    interval_eval, literal_enclosure, mean_value_enclosure, real_derivative_eval, real_slope_eval,
    DerivValue, EvalError,
};
pub use order::{fps_join, fps_leq, fps_meet, fps_widen, meet_case, MeetCase};
pub use registry::{Branch, IndRegistry, IndVar, Origin};
pub use value::{absorption, forget, iota, kappa, phi, rho, Absorption, FpsValue};
