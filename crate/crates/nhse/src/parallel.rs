//! Multi-threaded sweep evaluation.

use nhse_core::sweep::{empty_table, evaluate_line, sweep_basis, SweepError, SweepSpec, SweepTable};
use rayon::prelude::*;

/// Evaluate `spec` on `workers` threads. Lines are the unit of work and are
/// merged in grid order, so the table equals the serial one.
pub fn run_sweep_parallel(spec: &SweepSpec, workers: usize) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    let basis = sweep_basis(spec)?;
    let lines = spec.lines();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|_| SweepError::InvalidSpec("could not start worker pool"))?;
    let chunks: Vec<_> = pool.install(|| lines.into_par_iter().map(|line| evaluate_line(spec, &basis, line)).collect());
    let mut table = empty_table(spec);
    for rows in chunks {
        table.rows.extend(rows);
    }
    Ok(table)
}
