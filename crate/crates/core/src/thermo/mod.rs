//! Thermodynamic-limit experiments for the uniform gas.

mod gs;
mod lda;
mod series;

pub use gs::{
    default_frequencies, graf_schenker_kernel, graf_schenker_kernel_with, gs_lower_bound, GsKernel, GsLowerBound,
    GsSource, MIN_GS_SAMPLES,
};
pub use lda::{lda_bounds_3d, lda_exact_1d, LdaMode, LdaRow, LdaTable, Plateau};
pub use series::{
    cube_series_1d, cube_series_3d, floating_crystal_series, tile_bound_check, BoundKind, Extrapolation,
    ThermoRecord, ThermoSeries, TileBoundReport, UegBracket, BALL_60_REFERENCE, JELLIUM_LOWER_BOUND,
};
