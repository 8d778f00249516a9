//! Tensor meshes over axis-aligned boxes.

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalVector};
use crate::rational::{rat_int, sqrt_upper, Rat};
use num_traits::{Signed, Zero};

/// A tensor grid on a box: the points are all cell vertices and the cells
/// tile the box with diameter at most spacing * sqrt(n).
#[derive(Clone, Debug)]
pub struct Mesh {
    pub boxv: IntervalVector,
    pub spacing: Rat,
    /// Actual per-axis step (at most `spacing`).
    pub steps: Vec<Rat>,
    /// Per-axis node coordinates.
    pub axes: Vec<Vec<Rat>>,
    pub points: Vec<Vec<Rat>>,
    pub cells: Vec<IntervalVector>,
}

pub fn build_mesh(boxv: &IntervalVector, spacing: &Rat) -> Result<Mesh> {
    if !spacing.is_positive() {
        return Err(Error::Semantic("mesh spacing must be positive".into()));
    }
    let mut axes = Vec::with_capacity(boxv.len());
    let mut steps = Vec::with_capacity(boxv.len());
    for iv in &boxv.0 {
        let width = iv.hi() - iv.lo();
        if width.is_zero() {
            axes.push(vec![iv.lo().clone()]);
            steps.push(Rat::zero());
            continue;
        }
        let ratio = &width / spacing;
        let mut n = ratio.numer().clone() / ratio.denom();
        if &Rat::from_integer(n.clone()) < &ratio {
            n += 1;
        }
        let n = n.max(1.into());
        let n_usize: usize = n.to_string().parse().map_err(|_| {
            Error::Semantic("mesh too fine for this box".into())
        })?;
        let h = &width / Rat::from_integer(n);
        let nodes: Vec<Rat> = (0..=n_usize)
            .map(|j| iv.lo() + &h * rat_int(j as i64))
            .collect();
        axes.push(nodes);
        steps.push(h);
    }
    // points: cartesian product of axis nodes
    let mut points = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for v in axis {
                let mut q = p.clone();
                q.push(v.clone());
                next.push(q);
            }
        }
        points = next;
    }
    // cells: product of consecutive node pairs
    let mut cells = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::new();
        let segments: Vec<Interval> = if axis.len() == 1 {
            vec![Interval::point(axis[0].clone())]
        } else {
            axis.windows(2)
                .map(|w| Interval::new(w[0].clone(), w[1].clone()))
                .collect()
        };
        for c in &cells {
            for seg in &segments {
                let mut q: Vec<Interval> = c.clone();
                q.push(seg.clone());
                next.push(q);
            }
        }
        cells = next;
    }
    Ok(Mesh {
        boxv: boxv.clone(),
        spacing: spacing.clone(),
        steps,
        axes,
        points,
        cells: cells.into_iter().map(IntervalVector).collect(),
    })
}

impl Mesh {
    /// Certified upper bound on the cell diameter sqrt(sum h_i^2).
    pub fn cell_diameter(&self) -> Rat {
        let sum: Rat = self.steps.iter().map(|h| h * h).sum();
        sqrt_upper(&sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn mesh_covers_box() {
        let boxv = IntervalVector(vec![
            Interval::new(rat(-2, 1), rat(2, 1)),
            Interval::new(rat(0, 1), rat(1, 1)),
        ]);
        let mesh = build_mesh(&boxv, &rat(1, 4)).unwrap();
        assert_eq!(mesh.axes[0].len(), 17);
        assert_eq!(mesh.axes[1].len(), 5);
        assert_eq!(mesh.points.len(), 17 * 5);
        assert_eq!(mesh.cells.len(), 16 * 4);
        // every step at most the requested spacing
        assert!(mesh.steps.iter().all(|h| h <= &rat(1, 4)));
        // diameter bound: sqrt(2)/4
        let d = mesh.cell_diameter();
        let d2 = &d * &d;
        assert!(d2 >= rat(2, 16) && d2 <= rat(2, 16) * rat(1_000_001, 1_000_000));
        // union of cells covers the box: check a few sample points
        for p in [(rat(-2, 1), rat(0, 1)), (rat(199, 100), rat(99, 100))] {
            let inside = mesh
                .cells
                .iter()
                .any(|c| c.0[0].contains_value(&p.0) && c.0[1].contains_value(&p.1));
            assert!(inside);
        }
    }

    #[test]
    fn degenerate_axis() {
        let boxv = IntervalVector(vec![Interval::point(rat(3, 1))]);
        let mesh = build_mesh(&boxv, &rat(1, 2)).unwrap();
        assert_eq!(mesh.points.len(), 1);
        assert_eq!(mesh.cells.len(), 1);
    }
}
