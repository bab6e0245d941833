//! Dense `f64` matrices, a reverse-mode tape over them, parameters with
//! Adam state, checkpoints and a finite-difference gradient checker.

pub mod checkpoint;
pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod suite;
pub mod tape;
pub mod tensor;

pub use gradcheck::{grad_check, grad_check_params, GradCheckReport};
pub use optim::{adam_step, AdamConfig};
pub use params::{ParamId, ParameterStore};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
