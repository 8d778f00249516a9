//! From numeric witnesses to exact rational ones: bounded-denominator
//! recovery, the nonnegative truncated PLDL^T P^T decomposition, and
//! Gauss-Newton refinement of equality residuals.

use crate::linalg::{RatMatrix, SymRationalMatrix};
use crate::poly::IPoly;
use crate::rational::{rat_to_f64, rationalize, Rat};
use crate::sdp::{LmiProgram, NumericWitness};
use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};

pub use crate::rational::rationalize as rationalize_f64;

/// Exact LDL^T with symmetric max-diagonal pivoting where negative (or
/// zero) pivots are truncated to zero; the reassembled P L D L^T P^T is
/// positive semidefinite by construction and close to the input when the
/// input was nearly PSD.
pub fn truncated_pldlt(w: &DMatrix<f64>) -> SymRationalMatrix {
    let n = w.nrows();
    assert_eq!(n, w.ncols());
    // symmetrize and rationalize entrywise
    let mut a = RatMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rationalize(0.5 * (w[(i, j)] + w[(j, i)]), 1_000_000_000_000);
            a.set(i, j, v.clone());
            a.set(j, i, v);
        }
    }
    truncated_pldlt_rational(&a)
}

/// Rational-input variant (entries already exact).
pub fn truncated_pldlt_rational(a0: &RatMatrix) -> SymRationalMatrix {
    let n = a0.rows;
    let mut a = a0.clone();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut remaining: Vec<usize> = (0..n).collect();
    // columns of L (in pivot order) over original indices, and pivots d
    let mut lcols: Vec<Vec<Rat>> = Vec::with_capacity(n);
    let mut d: Vec<Rat> = Vec::with_capacity(n);

    while !remaining.is_empty() {
        let (p, pivot) = remaining
            .iter()
            .map(|&i| (i, a.at(i, i).clone()))
            .max_by(|(_, x), (_, y)| x.cmp(y))
            .unwrap();
        remaining.retain(|&i| i != p);
        perm.push(p);
        if !pivot.is_positive() {
            // truncate: this and all later pivots contribute nothing
            lcols.push(vec![Rat::zero(); n]);
            d.push(Rat::zero());
            continue;
        }
        let mut col = vec![Rat::zero(); n];
        col[p] = Rat::from_integer(1.into());
        for &i in &remaining {
            col[i] = a.at(i, p) / &pivot;
        }
        for &i in &remaining {
            for &j in &remaining {
                if j < i {
                    continue;
                }
                let v = a.at(i, j) - &col[i] * &pivot * &col[j];
                a.set(i, j, v.clone());
                a.set(j, i, v);
            }
        }
        lcols.push(col);
        d.push(pivot);
    }

    // reassemble sum_k d_k l_k l_k^T
    let mut out = SymRationalMatrix::zeros(n);
    for (k, col) in lcols.iter().enumerate() {
        if d[k].is_zero() {
            continue;
        }
        for i in 0..n {
            if col[i].is_zero() {
                continue;
            }
            for j in i..n {
                if col[j].is_zero() {
                    continue;
                }
                let v = out.at(i, j) + &col[i] * &d[k] * &col[j];
                out.set_sym(i, j, v);
            }
        }
    }
    out
}

/// Outcome of [`gauss_newton_refine`].
#[derive(Clone, Debug)]
pub struct RefineOutcome {
    pub witness: NumericWitness,
    /// True when the iteration stalled or diverged and the input witness
    /// (or an earlier iterate) was returned instead.
    pub stalled: bool,
}

/// Gauss-Newton least-squares refinement of the equality residuals of an
/// LMI witness, projecting every block back onto the PSD cone after each
/// step. The accepted-iterate residual sequence is non-increasing.
pub fn gauss_newton_refine(witness: &NumericWitness, prog: &LmiProgram) -> RefineOutcome {
    let ns = prog.scalars.len();
    // unknown vector: scalars then upper triangles of each block
    let mut offsets = vec![ns];
    for b in &prog.blocks {
        offsets.push(offsets.last().unwrap() + b.order * (b.order + 1) / 2);
    }
    let total = *offsets.last().unwrap();
    let pack = |w: &NumericWitness| -> DVector<f64> {
        let mut z = DVector::zeros(total);
        for k in 0..ns {
            z[k] = w.scalars[k];
        }
        for (bi, b) in prog.blocks.iter().enumerate() {
            let mut idx = offsets[bi];
            for i in 0..b.order {
                for j in i..b.order {
                    z[idx] = w.blocks[bi][(i, j)];
                    idx += 1;
                }
            }
        }
        z
    };
    let unpack = |z: &DVector<f64>| -> NumericWitness {
        let scalars: Vec<f64> = (0..ns).map(|k| z[k]).collect();
        let mut blocks = Vec::with_capacity(prog.blocks.len());
        for (bi, b) in prog.blocks.iter().enumerate() {
            let mut m = DMatrix::zeros(b.order, b.order);
            let mut idx = offsets[bi];
            for i in 0..b.order {
                for j in i..b.order {
                    m[(i, j)] = z[idx];
                    m[(j, i)] = z[idx];
                    idx += 1;
                }
            }
            blocks.push(m);
        }
        let mut w = NumericWitness {
            scalars,
            blocks,
            residual: 0.0,
        };
        w.residual = w.residual_for(prog);
        w
    };

    // the equalities are affine: jacobian is constant
    let m = prog.eqs.len();
    let mut jac = DMatrix::zeros(m, total);
    let mut rhs = DVector::zeros(m);
    for (r, eq) in prog.eqs.iter().enumerate() {
        rhs[r] = eq.rhs;
        for (k, c) in &eq.scalar_terms {
            jac[(r, *k)] += c;
        }
        for (b, i, j, c) in &eq.block_terms {
            let local = {
                // index of (i, j), i <= j, within the packed upper triangle
                let order = prog.blocks[*b].order;
                let (i, j) = if i <= j { (*i, *j) } else { (*j, *i) };
                offsets[*b] + (0..i).map(|r| order - r).sum::<usize>() + (j - i)
            };
            jac[(r, local)] += c;
        }
    }

    let svd = nalgebra::SVD::new(jac.clone(), true, true);
    let mut best = witness.clone();
    let mut z = pack(witness);
    let mut stalled = false;
    for _ in 0..25 {
        if best.residual < 1e-13 {
            break;
        }
        let res = &jac * &z - &rhs;
        let step = match svd.solve(&res, 1e-12) {
            Ok(s) => s,
            Err(_) => {
                stalled = true;
                break;
            }
        };
        z -= step;
        let mut cand = unpack(&z);
        // PSD projection by eigenvalue clamping
        for b in cand.blocks.iter_mut() {
            if b.nrows() == 0 {
                continue;
            }
            let eig = nalgebra::SymmetricEigen::new(b.clone());
            if eig.eigenvalues.min() < 0.0 {
                let clamped = DVector::from_iterator(
                    eig.eigenvalues.len(),
                    eig.eigenvalues.iter().map(|&v| v.max(0.0)),
                );
                *b = &eig.eigenvectors
                    * DMatrix::from_diagonal(&clamped)
                    * eig.eigenvectors.transpose();
            }
        }
        cand.residual = cand.residual_for(prog);
        if cand.residual < best.residual {
            best = cand;
            z = pack(&best);
        } else {
            stalled = true;
            break;
        }
    }
    RefineOutcome {
        witness: best,
        stalled,
    }
}

/// Exact equality of two exact polynomials (identical coefficient maps).
pub fn exact_identity_check(lhs: &IPoly, rhs: &IPoly) -> bool {
    debug_assert!(lhs.is_exact() && rhs.is_exact());
    lhs.sub(rhs).is_zero()
}

/// Denominator-bound schedule for rational vector recovery.
pub fn denominator_schedule() -> impl Iterator<Item = u64> {
    (1..=6).map(|k| 10u64.pow(k))
}

/// Recovers a rational vector at a given denominator bound.
pub fn recover_vector(xs: &[f64], bound: u64) -> Vec<Rat> {
    xs.iter().map(|&x| rationalize(x, bound)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::sdp::{LinearEq, LmiProgram};
    use num_traits::One;

    #[test]
    fn pldlt_keeps_exact_psd_matrices() {
        let w = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 1.0]);
        let out = truncated_pldlt(&w);
        assert_eq!(out.at(0, 0), &rat_int(4));
        assert_eq!(out.at(0, 1), &rat_int(2));
        assert_eq!(out.at(1, 1), &rat_int(1));
        assert!(out.is_psd_exact());
    }

    #[test]
    fn pldlt_clamps_tiny_negative() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-9]);
        let out = truncated_pldlt(&w);
        assert_eq!(out.at(0, 0), &Rat::one());
        assert!(out.at(1, 1).is_zero());
        assert!(out.is_psd_exact());
    }

    #[test]
    fn pldlt_on_noisy_gram_matrices() {
        // A A^T plus noise at 1e-8: output is exactly PSD and within 1e-6
        let mut seed = 0x9e3779b9u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..10 {
            let a = DMatrix::from_fn(5, 5, |_, _| next());
            let mut w = &a * a.transpose();
            for i in 0..5 {
                for j in 0..5 {
                    let noise = 1e-8 * next();
                    w[(i, j)] += noise;
                    w[(j, i)] = w[(i, j)];
                }
            }
            let out = truncated_pldlt(&w);
            assert!(out.is_psd_exact());
            let mut max_err: f64 = 0.0;
            for i in 0..5 {
                for j in 0..5 {
                    max_err = max_err.max((rat_to_f64(out.at(i, j)) - w[(i, j)]).abs());
                }
            }
            assert!(max_err <= 1e-6, "deviation {max_err}");
        }
    }

    #[test]
    fn refinement_restores_perturbed_witness() {
        // (x+1)^2 Gram with W perturbed by 1e-3: residual < 1e-12 after
        // a few steps
        let mut prog = LmiProgram::default();
        let b = prog.add_block("w", 2);
        for (i, j, c, rhs) in [(0, 0, 1.0, 1.0), (0, 1, 2.0, 2.0), (1, 1, 1.0, 1.0)] {
            prog.eqs.push(LinearEq {
                label: format!("({i},{j})"),
                scalar_terms: vec![],
                block_terms: vec![(b, i, j, c)],
                rhs,
            });
        }
        let mut w = NumericWitness {
            scalars: vec![],
            blocks: vec![DMatrix::from_row_slice(2, 2, &[1.001, 0.9994, 0.9994, 1.0006])],
            residual: 0.0,
        };
        w.residual = w.residual_for(&prog);
        assert!(w.residual > 1e-4);
        let out = gauss_newton_refine(&w, &prog);
        assert!(out.witness.residual < 1e-12, "residual {}", out.witness.residual);
        // zero-residual witness is a fixed point
        let again = gauss_newton_refine(&out.witness, &prog);
        assert!(again.witness.residual <= out.witness.residual);
    }

    #[test]
    fn identity_check_is_absolute() {
        let vars = vec!["x".to_string()];
        let x = IPoly::var(vars.clone(), 0);
        let one = IPoly::constant(vars.clone(), Rat::one());
        let lhs = x.add(&one).mul(&x.add(&one));
        let rhs = x
            .mul(&x)
            .add(&x.scale_rat(&rat_int(2)))
            .add(&one);
        assert!(exact_identity_check(&lhs, &rhs));
        let off = rhs.add(&IPoly::constant(vars, rat(1, 1_000_000_000_000_000_000)));
        assert!(!exact_identity_check(&lhs, &off));
    }
}
