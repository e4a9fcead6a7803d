//! Trial states giving upper bounds: the floating crystal and quasi-free
//! quantum states.

mod lattice;
mod quantum;

pub use lattice::{
    cube_self_energy, cubic_block_energy, finite_crystal_check, floating_crystal_direct, floating_crystal_upper_bound, lattice_potential_f,
    CrystalLayout, FiniteCrystalCheck, FloatingCrystalReport, LatticeSumSpec,
};
pub use quantum::{
    exchange_pair_function, fermi_momentum, quasi_free_bound, smoothed_box_bound, smoothed_box_exchange,
    tf_dirac_constants, ExchangeEstimate, QuantumBoundReport, SmoothedBox, LIEB_OXFORD_COULOMB,
};
