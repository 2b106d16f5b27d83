//! Seeded experiment harness: paired recovery batches, sparsity sweeps,
//! phase transitions and block image recovery.

mod batch;
mod image;
mod phase;

pub use batch::{
    aggregate, anmse, normalized_sq_error, run_batch, sweep_k, write_jsonl, write_records_csv,
    write_sweep_csv, Aggregate, BatchSetup, KmaxRule, SolverSpec, TrialBatchResult, TrialRecord,
    EXACT_TOLERANCE,
};
pub use image::{
    haar2d, haar2d_inverse, haar_basis, mse, psnr, recover_image, sparsify_blocks, synthetic_image,
    Image, ImageRecovery, ImageSetup, BLOCK, BLOCK_LEN, PSNR_CAP,
};
pub use phase::{
    fit_crossing, isotonic_decreasing, logistic_mle, phase_transition, BinomialPoint, Censor,
    Crossing, FitMethod, PhaseCell, PhasePoint, PhaseSetup, PhaseTransitionCurve,
};
