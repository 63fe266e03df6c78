//! Multistep quantum resonant transition, simulated exactly in the sector of
//! cell-uniform register states.

mod protocol;
mod sector;
mod step;

pub use protocol::{
    refine, run_multistep, run_multistep_with, sample_final, terminal_threshold, EnergySource, ProtocolConfig,
    RefineOptions, RefineOutcome, RunMeta, RunReport, Sample, SamplingMode, StepFailure, StepRecord,
};
pub use sector::{
    evolve, measure_probe, sector_matrix, CellPartition, LevelHamiltonian, Propagator, SectorMatrix, SectorState,
};
pub use step::{
    build_step_hamiltonian, estimate_overlap_from_rabi, fit_rabi, frequency_sweep, min_spacing, run_step, RabiFit,
    StepConfig, StepOutcome, StepPlan, Sweep,
};
