//! Projection operators, constitutive laws and a periodic spectral solver
//! for linear field problems written as `J = L E - s` with `E` in the range
//! of a projector and `J` in its kernel.

pub mod materials;
pub mod spectral;
pub mod symbols;
pub mod tensor;
pub mod willis;

pub use materials::{build_material_law, MaterialError, MaterialLaw, MaterialParams};
pub use num_complex::Complex64;
pub use spectral::{Grid, GridField, MeanMode, SolveConfig, SolveMethod, SolverError};
pub use symbols::{PhysicsId, SpectralPoint, SymbolError};
pub use tensor::{ComplexMatrix, FieldLayout};
