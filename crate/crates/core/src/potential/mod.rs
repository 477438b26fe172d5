//! Logarithmic potentials and energies of discrete measures.

mod energy;
mod measure;

pub use energy::{
    cross_energy, log_potential, mutual_energy, partial_potential, vector_energy, EnergyBreakdown, EvalMode,
};
pub use measure::{ComponentMeasure, DiscreteVectorMeasure};

pub(crate) use energy::kernel_entry;
