//! Generic simply-actuated Hamiltonian system machinery.

pub mod linalg;
mod poisson;
mod system;
mod transform;

pub use poisson::{poisson_bracket, BRACKET_STEP};
pub use system::{
    full_vector_field, inverse_inertia_gradient, is_positive_definite, total_energy, wrap_angle, FullState,
    MechanicalSystem, Period, FD_GRADIENT_STEP,
};
pub(crate) use system::invert_spd;
pub use transform::{normalize_input_matrix, simply_actuated_transform, InputNormalization, SimplyActuated};
