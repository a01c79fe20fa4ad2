//! Exterior calculus on periodic grids: fields, spectral derivatives, forms,
//! Monge-Ampère densities and the field file format.

pub mod density;
pub mod field;
pub mod forms;
pub mod grid;
pub mod hmaf;
pub mod spectral;

pub use density::{
    integrate, ma_density, mixed_ma_density, mixed_mass, stokes_defect, Slot, StokesReport,
};
pub use field::{HermitianForm11Field, ScalarField};
pub use forms::{closedness, Closedness, FormField};
pub use grid::GridSpec;
pub use spectral::{ddc, BandSpectrum, Spectral};
