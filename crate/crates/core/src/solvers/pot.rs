use ndarray::Array2;

use crate::instance::ProblemInstance;
use crate::plan::TransportPlan;

/// Transport with only the column constraint: every column sends its mass to
/// its cheapest row (smallest index on ties). Returns the plan and
/// `Σ_j b_j min_i C_ij`.
pub fn pot_column_min(inst: &ProblemInstance) -> (TransportPlan, f64) {
    let c = inst.cost.entries();
    let mut t = Array2::zeros(c.dim());
    let mut value = 0.0;
    for (j, col) in c.columns().into_iter().enumerate() {
        let (best, cmin) =
            col.iter().enumerate().fold(
                (0, f64::INFINITY),
                |(bi, bc), (i, &x)| {
                    if x < bc {
                        (i, x)
                    } else {
                        (bi, bc)
                    }
                },
            );
        let bj = inst.b.weights()[j];
        t[[best, j]] = bj;
        value += bj * cmin;
    }
    (TransportPlan::from_trusted(t), value)
}
