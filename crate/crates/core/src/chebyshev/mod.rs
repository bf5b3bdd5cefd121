//! Chebyshev interpolation of Ψ, differentiation and extraction of ψ.

mod analysis;
mod grid;
mod tensor;

pub use analysis::{
    coefficient_decay, error_budget, isotonic, node_precision, select_degree, DecayFit, ErrorBudget,
    DEGREE_CONSTANTS, ZERO_TAIL,
};
pub use grid::{make_grid, ChebyshevGrid, Provenance, Sample, SampleSet, SnappedNodes, SAMPLE_BAND};
pub use tensor::{
    chebyshev_t, chebyshev_u, cross_validate, fit, t_values, vandermonde, FitMethod, InterpolantTensor,
    CONDITION_WARNING, LAMBDA_GRID,
};

use crate::error::{Error, Result};

/// Replaces one-dimensional node values by their isotonic (non-decreasing
/// in x) projection.
pub fn monotone_project(samples: &SampleSet) -> Result<SampleSet> {
    if samples.grid.dimension != 1 {
        return Err(Error::InvalidParameter("monotone projection is one-dimensional".into()));
    }
    let values = samples.values()?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    let coords = samples.grid.coords();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let projected = isotonic(&order.iter().map(|&i| values[i]).collect::<Vec<_>>());
    let mut out = samples.clone();
    for (&i, v) in order.iter().zip(projected) {
        if let Some(s) = out.entries.get_mut(&vec![i]) {
            s.value = v;
        }
    }
    Ok(out)
}
