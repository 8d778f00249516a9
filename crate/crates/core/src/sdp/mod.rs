//! Numeric phase: LMI feasibility/optimization programs over scalar
//! unknowns and PSD matrix blocks, lowered onto the interior-point solver,
//! plus SOS decomposition and the alternating scheme for bilinear programs.

pub mod bmi;
pub mod ipm;
pub mod sos;

use crate::error::{Error, Result};
use ipm::{SdpConstraint, SdpOutcome, SdpProblem};
use nalgebra::DMatrix;

/// A named PSD block of unknowns.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub name: String,
    pub order: usize,
}

/// One affine equality constraint:
/// sum scalar_coef * z_k + sum coef * W_b[i][j] = rhs  (i <= j).
#[derive(Clone, Debug, Default)]
pub struct LinearEq {
    pub label: String,
    pub scalar_terms: Vec<(usize, f64)>,
    pub block_terms: Vec<(usize, usize, usize, f64)>,
    pub rhs: f64,
}

/// Linear objective (minimized).
#[derive(Clone, Debug, Default)]
pub struct LinearObjective {
    pub scalar_terms: Vec<(usize, f64)>,
    /// coef * trace(W_b)
    pub block_trace_terms: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct LmiProgram {
    pub scalars: Vec<String>,
    pub blocks: Vec<LmiBlock>,
    pub eqs: Vec<LinearEq>,
    pub objective: LinearObjective,
}

impl LmiProgram {
    pub fn add_scalar(&mut self, name: impl Into<String>) -> usize {
        self.scalars.push(name.into());
        self.scalars.len() - 1
    }

    pub fn add_block(&mut self, name: impl Into<String>, order: usize) -> usize {
        self.blocks.push(LmiBlock {
            name: name.into(),
            order,
        });
        self.blocks.len() - 1
    }

    /// Adds `sum scalar_coef * z <= rhs` as an equality with a fresh
    /// nonnegative slack block.
    pub fn add_scalar_upper_bound(&mut self, scalar_terms: Vec<(usize, f64)>, rhs: f64) {
        let slack = self.add_block(format!("__slack{}", self.blocks.len()), 1);
        self.eqs.push(LinearEq {
            label: format!("bound<= {rhs}"),
            scalar_terms,
            block_terms: vec![(slack, 0, 0, 1.0)],
            rhs,
        });
    }
}

/// Float witness for an LMI program: scalar values, one symmetric matrix
/// per block, and the maximum equality violation.
#[derive(Clone, Debug)]
pub struct NumericWitness {
    pub scalars: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
    pub residual: f64,
}

impl NumericWitness {
    /// Maximum equality violation of this witness against a program.
    pub fn residual_for(&self, prog: &LmiProgram) -> f64 {
        prog.eqs
            .iter()
            .map(|eq| eval_eq(eq, &self.scalars, &self.blocks).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_block_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.nrows() > 0)
            .map(|b| b.symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn eval_eq(eq: &LinearEq, scalars: &[f64], blocks: &[DMatrix<f64>]) -> f64 {
    let mut acc = -eq.rhs;
    for (k, c) in &eq.scalar_terms {
        acc += c * scalars[*k];
    }
    for (b, i, j, c) in &eq.block_terms {
        acc += c * blocks[*b][(*i, *j)];
    }
    acc
}

#[derive(Clone, Debug)]
pub enum LmiOutcome {
    Feasible(NumericWitness),
    /// Primal infeasible with a certified (numerically) dual improving ray.
    Infeasible { ray: Vec<f64> },
}

fn lower(prog: &LmiProgram) -> SdpProblem {
    let nb = prog.blocks.len();
    let ns = prog.scalars.len();
    let mut block_dims: Vec<usize> = prog.blocks.iter().map(|b| b.order).collect();
    // each free scalar becomes a difference of two nonnegative 1x1 blocks
    for _ in 0..ns {
        block_dims.push(1);
        block_dims.push(1);
    }
    let mut objective: Vec<DMatrix<f64>> = block_dims
        .iter()
        .map(|&d| DMatrix::zeros(d, d))
        .collect();
    for (b, c) in &prog.objective.block_trace_terms {
        let d = prog.blocks[*b].order;
        for i in 0..d {
            objective[*b][(i, i)] += c;
        }
    }
    for (k, c) in &prog.objective.scalar_terms {
        objective[nb + 2 * k][(0, 0)] += c;
        objective[nb + 2 * k + 1][(0, 0)] -= c;
    }
    // tiny regularization keeps the split variables bounded
    let reg = 1e-9;
    for k in 0..ns {
        objective[nb + 2 * k][(0, 0)] += reg;
        objective[nb + 2 * k + 1][(0, 0)] += reg;
    }
    let constraints = prog
        .eqs
        .iter()
        .map(|eq| {
            let mut touched: Vec<(usize, DMatrix<f64>)> = Vec::new();
            let mut idx_of = std::collections::HashMap::new();
            for (b, i, j, c) in &eq.block_terms {
                let slot = *idx_of.entry(*b).or_insert_with(|| {
                    touched.push((
                        *b,
                        DMatrix::zeros(prog.blocks[*b].order, prog.blocks[*b].order),
                    ));
                    touched.len() - 1
                });
                if i == j {
                    touched[slot].1[(*i, *j)] += c;
                } else {
                    touched[slot].1[(*i, *j)] += c / 2.0;
                    touched[slot].1[(*j, *i)] += c / 2.0;
                }
            }
            for (k, c) in &eq.scalar_terms {
                touched.push((nb + 2 * k, DMatrix::from_element(1, 1, *c)));
                touched.push((nb + 2 * k + 1, DMatrix::from_element(1, 1, -*c)));
            }
            SdpConstraint { blocks: touched }
        })
        .collect();
    SdpProblem {
        block_dims,
        objective,
        constraints,
        rhs: prog.eqs.iter().map(|e| e.rhs).collect(),
    }
}

/// Solves an LMI program with the interior-point method.
///
/// Feasible outcomes carry a witness with equality residual <= 1e-8;
/// primal infeasibility is only reported together with a dual improving
/// ray, anything else is a numerical failure.
pub fn solve_lmi(prog: &LmiProgram) -> Result<LmiOutcome> {
    let sdp = lower(prog);
    match sdp.solve() {
        SdpOutcome::Optimal(sol) => {
            let nb = prog.blocks.len();
            let scalars: Vec<f64> = (0..prog.scalars.len())
                .map(|k| sol.x[nb + 2 * k][(0, 0)] - sol.x[nb + 2 * k + 1][(0, 0)])
                .collect();
            let blocks: Vec<DMatrix<f64>> = sol.x[..nb].to_vec();
            let mut w = NumericWitness {
                scalars,
                blocks,
                residual: 0.0,
            };
            w.residual = w.residual_for(prog);
            if w.residual > 1e-8 {
                return Err(Error::SdpNumerical(format!(
                    "equality residual {:.3e} above tolerance",
                    w.residual
                )));
            }
            Ok(LmiOutcome::Feasible(w))
        }
        SdpOutcome::Infeasible { ray } => Ok(LmiOutcome::Infeasible {
            ray: ray.iter().cloned().collect(),
        }),
        SdpOutcome::NumericalFailure(sol) => Err(Error::SdpNumerical(format!(
            "no convergence after {} iterations (gap {:.3e}, primal residual {:.3e})",
            sol.iterations, sol.duality_gap, sol.primal_residual
        ))),
    }
}

/// Solves the program while maximizing a uniform eigenvalue margin `t` on
/// the named blocks (W_b is reinterpreted as U_b + t I with U_b PSD).
/// Returns the reassembled witness and the achieved margin; `t < 0` means
/// the program is only feasible with an indefinite block.
pub fn solve_lmi_max_margin(
    prog: &LmiProgram,
    margin_blocks: &[usize],
) -> Result<(NumericWitness, f64)> {
    let mut shifted = prog.clone();
    let t = shifted.add_scalar("__margin");
    for eq in &mut shifted.eqs {
        let mut tcoef = 0.0;
        for (b, i, j, c) in &eq.block_terms {
            if i == j && margin_blocks.contains(b) {
                tcoef += c;
            }
        }
        if tcoef != 0.0 {
            eq.scalar_terms.push((t, tcoef));
        }
    }
    shifted.objective.scalar_terms.push((t, -1.0));
    // margins beyond 1 are never needed; the cap keeps programs whose
    // coefficients can scale freely from becoming unbounded
    shifted.add_scalar_upper_bound(vec![(t, 1.0)], 1.0);
    match solve_lmi(&shifted)? {
        LmiOutcome::Feasible(mut w) => {
            let margin = w.scalars[t];
            w.scalars.truncate(prog.scalars.len());
            for &b in margin_blocks {
                let d = prog.blocks[b].order;
                for i in 0..d {
                    w.blocks[b][(i, i)] += margin;
                }
            }
            w.residual = w.residual_for(prog);
            Ok((w, margin))
        }
        LmiOutcome::Infeasible { .. } => Err(Error::SdpNumerical(
            "margin-relaxed program reported infeasible".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_split_roundtrip() {
        // find z with z = -3 (free scalar), trivial one-block padding
        let mut p = LmiProgram::default();
        let z = p.add_scalar("z");
        p.add_block("pad", 1);
        p.eqs.push(LinearEq {
            label: "fix z".into(),
            scalar_terms: vec![(z, 1.0)],
            block_terms: vec![],
            rhs: -3.0,
        });
        match solve_lmi(&p).unwrap() {
            LmiOutcome::Feasible(w) => {
                assert!((w.scalars[z] + 3.0).abs() < 1e-7);
                assert!(w.residual <= 1e-8);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn margin_maximization_finds_interior() {
        // W 2x2 with W00 = 1, W11 = 1 and a free off-diagonal:
        // the max-margin point is W = I with t = 1
        let mut p = LmiProgram::default();
        let b = p.add_block("w", 2);
        p.eqs.push(LinearEq {
            label: "w00".into(),
            scalar_terms: vec![],
            block_terms: vec![(b, 0, 0, 1.0)],
            rhs: 1.0,
        });
        p.eqs.push(LinearEq {
            label: "w11".into(),
            scalar_terms: vec![],
            block_terms: vec![(b, 1, 1, 1.0)],
            rhs: 1.0,
        });
        let (w, t) = solve_lmi_max_margin(&p, &[b]).unwrap();
        assert!((t - 1.0).abs() < 1e-5, "margin {t}");
        assert!((w.blocks[b][(0, 0)] - 1.0).abs() < 1e-6);
        assert!(w.blocks[b][(0, 1)].abs() < 1e-4);
    }
}
