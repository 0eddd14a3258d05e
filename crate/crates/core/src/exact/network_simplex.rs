use std::collections::VecDeque;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::plan::TransportPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    /// The final basis violates the marginals beyond 1e-9.
    Infeasible,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub plan: TransportPlan,
    pub objective: f64,
    pub iterations: usize,
    pub status: LpStatus,
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
    /// `max(0, −min_ij (C_ij − u_i − v_j))`.
    pub dual_infeasibility: f64,
    /// `max_ij T_ij |C_ij − u_i − v_j|`.
    pub slackness_residual: f64,
}

#[derive(Serialize)]
struct LpSummary {
    objective: f64,
    status: LpStatus,
    iterations: usize,
    dual_infeasibility: f64,
    slackness_residual: f64,
}

impl LpSolution {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LpSummary {
            objective: self.objective,
            status: self.status,
            iterations: self.iterations,
            dual_infeasibility: self.dual_infeasibility,
            slackness_residual: self.slackness_residual,
        })?)
    }
}

const NONE: usize = usize::MAX;

/// Spanning-tree basis of the transportation graph: row nodes `0..n`, column
/// nodes `n..n+m`, one basic cell per tree edge.
struct Basis {
    n: usize,
    m: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    slot: Vec<usize>, // cell -> position in `cells`, or NONE
}

impl Basis {
    /// Northwest-corner start. Exactly one index advances per step, so the
    /// staircase always has `n + m − 1` cells even when a step carries no mass.
    fn northwest(supply: &[f64], demand: &[f64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut basis = Basis {
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            flow: Vec::with_capacity(n + m - 1),
            slot: vec![NONE; n * m],
        };
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]);
            s[i] -= x;
            d[j] -= x;
            basis.push(i, j, x);
            if i == n - 1 && j == m - 1 {
                break;
            }
            if (s[i] <= d[j] && i < n - 1) || j == m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        basis
    }

    fn push(&mut self, i: usize, j: usize, x: f64) {
        self.slot[i * self.m + j] = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(x);
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(e);
            adj[self.n + j].push(e);
        }
        adj
    }

    fn other_end(&self, e: usize, node: usize) -> usize {
        let (i, j) = self.cells[e];
        if node == i {
            self.n + j
        } else {
            i
        }
    }

    /// `u_0 = 0` and `u_i + v_j = C_ij` on every basic cell.
    fn potentials(&self, c: &Array2<f64>, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.n + self.m];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &e in &adj[node] {
                let next = self.other_end(e, node);
                if pot[next].is_nan() {
                    let (i, j) = self.cells[e];
                    pot[next] = c[[i, j]] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.n);
        (pot, v)
    }

    /// Tree edges on the path from row node `from` to column node `to`.
    fn path(&self, adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
        let mut parent_edge = vec![NONE; self.n + self.m];
        let mut seen = vec![false; self.n + self.m];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &e in &adj[node] {
                let next = self.other_end(e, node);
                if !seen[next] {
                    seen[next] = true;
                    parent_edge[next] = e;
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = to;
        while node != from {
            let e = parent_edge[node];
            edges.push(e);
            node = self.other_end(e, node);
        }
        edges.reverse();
        edges
    }
}

/// Exact optimal transport by the transportation simplex (MODI potentials,
/// first-improving entering cell in row-major order, lowest-index leaving cell).
pub fn solve_ot_exact(inst: &ProblemInstance) -> Result<LpSolution> {
    let (alpha, beta) = (inst.a.total(), inst.b.total());
    if !(alpha > 0.0) {
        return Err(Error::Degenerate("zero total mass".into()));
    }
    if (alpha - beta).abs() > 1e-10 * alpha.max(beta) {
        return Err(Error::Unbalanced { alpha, beta });
    }
    let c = inst.cost.entries();
    let (n, m) = c.dim();
    let mut basis = Basis::northwest(inst.a.as_slice(), inst.b.as_slice());
    let eps = 1e-12 * inst.cost.inf_norm().max(1.0);
    let max_iterations = 50 * n * m + 1000;

    let mut iterations = 0;
    let mut status = LpStatus::Optimal;
    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(c, &adj);
        let entering = (0..n * m).find(|&cell| {
            let (i, j) = (cell / m, cell % m);
            basis.slot[cell] == NONE && c[[i, j]] - u[i] - v[j] < -eps
        });
        let Some(cell) = entering else { break };
        if iterations == max_iterations {
            status = LpStatus::IterationLimit;
            break;
        }
        iterations += 1;
        let (ei, ej) = (cell / m, cell % m);
        let path = basis.path(&adj, ei, n + ej);
        let len = path.len();
        // The edge touching column `ej` loses mass, then signs alternate.
        let minus = |t: usize| (len - 1 - t).is_multiple_of(2);
        let leave_pos = (0..len)
            .filter(|&t| minus(t))
            .min_by(|&s, &t| {
                let (es, et) = (path[s], path[t]);
                let key = |e: usize| {
                    let (i, j) = basis.cells[e];
                    i * m + j
                };
                basis.flow[es]
                    .total_cmp(&basis.flow[et])
                    .then(key(es).cmp(&key(et)))
            })
            .expect("cycle has a decreasing edge");
        let leave = path[leave_pos];
        let theta = basis.flow[leave];
        for (t, &e) in path.iter().enumerate() {
            if minus(t) {
                basis.flow[e] -= theta;
            } else {
                basis.flow[e] += theta;
            }
        }
        let (li, lj) = basis.cells[leave];
        basis.slot[li * m + lj] = NONE;
        basis.slot[cell] = leave;
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;
    }

    let adj = basis.adjacency();
    let (u, v) = basis.potentials(c, &adj);
    let mut t = Array2::zeros((n, m));
    for (e, &(i, j)) in basis.cells.iter().enumerate() {
        t[[i, j]] = basis.flow[e].max(0.0);
    }
    let mut dual_infeasibility = 0.0f64;
    let mut slackness_residual = 0.0f64;
    for ((i, j), &cij) in c.indexed_iter() {
        let d = cij - u[i] - v[j];
        dual_infeasibility = dual_infeasibility.max(-d);
        slackness_residual = slackness_residual.max(t[[i, j]] * d.abs());
    }
    let plan = TransportPlan::from_trusted(t);
    let objective = plan.cost(&inst.cost)?;
    if status == LpStatus::Optimal {
        let row_err = (&plan.row_marginal() - inst.a.weights())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        let col_err = (&plan.col_marginal() - inst.b.weights())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        if row_err.max(col_err) > 1e-9 * alpha.max(1.0) {
            status = LpStatus::Infeasible;
        }
    }
    Ok(LpSolution {
        plan,
        objective,
        iterations,
        status,
        row_potentials: u,
        col_potentials: v,
        dual_infeasibility,
        slackness_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostMatrix;
    use crate::measure::DiscreteMeasure;
    use ndarray::array;

    fn inst(c: Array2<f64>, a: Vec<f64>, b: Vec<f64>) -> ProblemInstance {
        ProblemInstance::new(
            CostMatrix::new(c).unwrap(),
            DiscreteMeasure::new(a).unwrap(),
            DiscreteMeasure::new(b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_is_free() {
        let p = inst(
            array![[0.0, 1.0], [1.0, 0.0]],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        );
        let s = solve_ot_exact(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.plan.entries(), &array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn hand_derived_two_by_two() {
        let p = inst(
            array![[1.0, 2.0], [3.0, 1.0]],
            vec![0.4, 0.6],
            vec![0.5, 0.5],
        );
        let s = solve_ot_exact(&p).unwrap();
        assert!((s.objective - 1.2).abs() < 1e-15);
        assert!((s.plan.entries()[[0, 0]] - 0.4).abs() < 1e-15);
        assert!(s.dual_infeasibility <= 1e-12);
        assert!(s.slackness_residual <= 1e-12);
    }

    #[test]
    fn rectangular_and_degenerate() {
        // Northwest corner hits a tie at the first step.
        let p = inst(
            array![[3.0, 1.0, 2.0], [1.0, 4.0, 2.0]],
            vec![0.5, 0.5],
            vec![0.5, 0.25, 0.25],
        );
        let s = solve_ot_exact(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        // Row 1 sends 0.5 to col 0 at cost 1; row 0 covers the rest at 1·0.25 + 2·0.25.
        assert!((s.objective - 1.25).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_rejected() {
        let p = inst(array![[1.0]], vec![1.0], vec![2.0]);
        assert!(matches!(solve_ot_exact(&p), Err(Error::Unbalanced { .. })));
        let p = inst(array![[1.0]], vec![0.0], vec![0.0]);
        assert!(matches!(solve_ot_exact(&p), Err(Error::Degenerate(_))));
    }
}
