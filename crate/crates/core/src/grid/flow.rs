use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{island_droop_frequency, IslandState, NodeId};

const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("injections do not balance: net {net} pu")]
    Unbalanced { net: f64 },
    #[error("expected {expected} injections, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("reference node {0} is not in the island")]
    UnknownReference(NodeId),
    #[error("susceptance matrix is singular; island is not connected")]
    Singular,
}

/// DC flow solution on an island.
///
/// `flows` follows the island's line order (positive from `from` to `to`),
/// `theta` its node order. `frequency` is the droop equilibrium of the
/// island, `None` when it has no equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    pub flows: Vec<f64>,
    pub theta: Vec<f64>,
    pub frequency: Option<f64>,
}

impl FlowAssignment {
    /// Largest `|net outflow - injection|` over the island's nodes.
    pub fn balance_residual(&self, island: &IslandState, injections: &[f64]) -> f64 {
        let mut net = vec![0.0; island.nodes().len()];
        for (l, f) in island.lines().iter().zip(&self.flows) {
            net[island.node_index(l.from).unwrap()] += f;
            net[island.node_index(l.to).unwrap()] -= f;
        }
        net.iter()
            .zip(injections)
            .map(|(n, p)| (n - p).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|x * f - (theta_from - theta_to)|` over the island's lines.
    pub fn flow_law_residual(&self, island: &IslandState) -> f64 {
        island
            .lines()
            .iter()
            .zip(&self.flows)
            .map(|(l, f)| {
                let dt = self.theta[island.node_index(l.from).unwrap()] - self.theta[island.node_index(l.to).unwrap()];
                (l.reactance_x * f - dt).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `B theta = p` with `theta[reference] = 0` by Cholesky factorization
/// of the reference-reduced susceptance matrix, then `f = dtheta / x`.
pub fn dc_flow_solve(island: &IslandState, injections: &[f64], reference: NodeId) -> Result<FlowAssignment, FlowError> {
    let n = island.nodes().len();
    if injections.len() != n {
        return Err(FlowError::LengthMismatch {
            expected: n,
            got: injections.len(),
        });
    }
    let r = island
        .node_index(reference)
        .ok_or(FlowError::UnknownReference(reference))?;
    let net: f64 = injections.iter().sum();
    let scale = injections.iter().map(|p| p.abs()).sum::<f64>().max(1.0);
    if net.abs() > BALANCE_TOL * scale {
        return Err(FlowError::Unbalanced { net });
    }

    // reduced index: node i maps to i or i-1, reference dropped
    let red = |i: usize| {
        if i < r {
            Some(i)
        } else if i == r {
            None
        } else {
            Some(i - 1)
        }
    };
    let m = n - 1;
    let mut theta = vec![0.0; n];
    if m > 0 {
        let mut b = DMatrix::<f64>::zeros(m, m);
        for l in island.lines() {
            let y = 1.0 / l.reactance_x;
            let i = red(island.node_index(l.from).unwrap());
            let j = red(island.node_index(l.to).unwrap());
            if let Some(i) = i {
                b[(i, i)] += y;
            }
            if let Some(j) = j {
                b[(j, j)] += y;
            }
            if let (Some(i), Some(j)) = (i, j) {
                b[(i, j)] -= y;
                b[(j, i)] -= y;
            }
        }
        let rhs = DVector::from_iterator(m, (0..n).filter(|&i| i != r).map(|i| injections[i]));
        let chol = b.cholesky().ok_or(FlowError::Singular)?;
        let sol = chol.solve(&rhs);
        for i in 0..n {
            if let Some(k) = red(i) {
                theta[i] = sol[k];
            }
        }
    }

    let flows = island
        .lines()
        .iter()
        .map(|l| {
            let dt = theta[island.node_index(l.from).unwrap()] - theta[island.node_index(l.to).unwrap()];
            dt / l.reactance_x
        })
        .collect();

    Ok(FlowAssignment {
        flows,
        theta,
        frequency: island_droop_frequency(island).ok(),
    })
}
