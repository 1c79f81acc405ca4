//! D-type positive maps `Phi_{t,pi}` on `M_n`, their Choi witnesses, and
//! optimality checks for qutrit systems.

pub mod dtype_map;
pub mod error;
pub mod inequality;
pub mod linalg;
pub mod optimality;
pub mod perm;
pub mod positivity;

pub use dtype_map::{DTypeMap, MapDescriptor, Witness};
pub use error::{Result, WitnessError};
pub use linalg::{ComplexMatrix, C64};
pub use perm::{loop_decomposition, LoopDecomposition, Permutation};
