//! Grand-canonical states: mixtures of couplings with different particle
//! numbers.

mod energy;
mod replicate;
mod state;

pub use energy::{default_max_n, gc_indirect_energy, gc_product_trial};
pub use replicate::{approximate_weights, rationalize_weights, replicate_to_canonical, replicate_with, Replication};
pub use state::{gc_tensor, localize, GcComponentSummary, GcStateSummary, GrandCanonicalState};
