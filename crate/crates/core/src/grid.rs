//! Uniform tensor grids on intervals and rectangles.
//!
//! Nodes are stored row-major: in 2D the flat index of node `(i0, i1)` is
//! `i0 * n1 + i1`, so axis 1 is contiguous. Quadrature uses the composite
//! trapezoid rule, and the Laplacian uses ghost-node reflection at the
//! boundary, which makes `W L` symmetric for `W = diag(weights)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Debug, PartialEq)]
struct GridData {
    extents: Vec<(f64, f64)>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    axis_coords: Vec<Vec<f64>>,
    axis_weights: Vec<Vec<f64>>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// A uniform grid in one or two dimensions.
///
/// Cheap to clone: the node and weight tables are shared.
#[derive(Debug, Clone)]
pub struct Grid(Arc<GridData>);

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.counts == other.0.counts && self.0.extents == other.0.extents)
    }
}

impl Grid {
    /// Builds a uniform grid with `counts[a]` nodes on `extents[a]` along each axis.
    pub fn uniform(extents: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if extents.is_empty() || extents.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                extents.len()
            )));
        }
        if extents.len() != counts.len() {
            return Err(Error::InvalidDomain(format!(
                "{} extents but {} counts",
                extents.len(),
                counts.len()
            )));
        }
        for (axis, (&(lo, hi), &n)) in extents.iter().zip(counts).enumerate() {
            if n < 3 {
                return Err(Error::InvalidDomain(format!(
                    "axis {axis} has {n} nodes; at least 3 are required"
                )));
            }
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidDomain(format!(
                    "axis {axis} has degenerate extent ({lo}, {hi})"
                )));
            }
        }

        let spacing: Vec<f64> = extents
            .iter()
            .zip(counts)
            .map(|(&(lo, hi), &n)| (hi - lo) / (n - 1) as f64)
            .collect();
        let axis_coords: Vec<Vec<f64>> = extents
            .iter()
            .zip(counts)
            .zip(&spacing)
            .map(|((&(lo, hi), &n), &h)| {
                (0..n)
                    .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
                    .collect()
            })
            .collect();
        let axis_weights: Vec<Vec<f64>> = counts
            .iter()
            .zip(&spacing)
            .map(|(&n, &h)| {
                (0..n)
                    .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
                    .collect()
            })
            .collect();

        let dim = counts.len();
        let len: usize = counts.iter().product();
        let mut nodes = Vec::with_capacity(len * dim);
        let mut weights = Vec::with_capacity(len);
        if dim == 1 {
            nodes.extend_from_slice(&axis_coords[0]);
            weights.extend_from_slice(&axis_weights[0]);
        } else {
            for i0 in 0..counts[0] {
                for i1 in 0..counts[1] {
                    nodes.push(axis_coords[0][i0]);
                    nodes.push(axis_coords[1][i1]);
                    weights.push(axis_weights[0][i0] * axis_weights[1][i1]);
                }
            }
        }

        Ok(Grid(Arc::new(GridData {
            extents: extents.to_vec(),
            counts: counts.to_vec(),
            spacing,
            axis_coords,
            axis_weights,
            nodes,
            weights,
        })))
    }

    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::uniform(&[(lo, hi)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), counts: (usize, usize)) -> Result<Self> {
        Self::uniform(&[x, y], &[counts.0, counts.1])
    }

    pub fn dim(&self) -> usize {
        self.0.counts.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.0.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.weights.is_empty()
    }

    pub fn counts(&self) -> &[usize] {
        &self.0.counts
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.0.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.0.spacing
    }

    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.0.axis_coords[axis]
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.0.axis_weights[axis]
    }

    /// Coordinates of node `i` (length `dim`).
    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.0.nodes[i * d..(i + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.0.extents.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Splits a flat index into per-axis indices.
    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        match self.dim() {
            1 => [i, 0],
            _ => [i / self.0.counts[1], i % self.0.counts[1]],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.0.counts[1] + idx[1],
        }
    }

    /// Stride between neighbours along `axis` in the flat layout.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        if self.dim() == 2 && axis == 0 {
            self.0.counts[1]
        } else {
            1
        }
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                actual: values.len(),
            });
        }
        Ok(())
    }

    /// Trapezoid quadrature `Σ w_i f_i`.
    pub fn integrate(&self, field: &Field) -> Result<f64> {
        self.check_len(field.values())?;
        Ok(self.integrate_values(field.values()))
    }

    pub(crate) fn integrate_values(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Neumann Laplacian with ghost-node reflection at the boundary.
    pub fn apply_neumann_laplacian(&self, field: &Field) -> Result<Field> {
        self.check_len(field.values())?;
        let mut out = vec![0.0; self.len()];
        self.laplacian_into(field.values(), &mut out);
        Ok(Field::from_parts(self.clone(), out))
    }

    pub(crate) fn laplacian_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for axis in 0..self.dim() {
            let n = self.0.counts[axis];
            let inv_h2 = 1.0 / (self.0.spacing[axis] * self.0.spacing[axis]);
            let stride = self.stride(axis);
            for (i, o) in out.iter_mut().enumerate() {
                let k = self.multi_index(i)[axis];
                let lap = if k == 0 {
                    2.0 * (u[i + stride] - u[i])
                } else if k == n - 1 {
                    2.0 * (u[i - stride] - u[i])
                } else {
                    u[i + stride] - 2.0 * u[i] + u[i - stride]
                };
                *o += lap * inv_h2;
            }
        }
    }

    /// Assembles the Laplacian as a sparse matrix; `L f` equals
    /// [`Grid::apply_neumann_laplacian`] applied to `f`.
    pub fn laplacian_matrix(&self) -> CsrMatrix {
        let len = self.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(5); len];
        for axis in 0..self.dim() {
            let n = self.0.counts[axis];
            let inv_h2 = 1.0 / (self.0.spacing[axis] * self.0.spacing[axis]);
            let stride = self.stride(axis);
            for (i, row) in rows.iter_mut().enumerate() {
                let k = self.multi_index(i)[axis];
                row.push((i, -2.0 * inv_h2));
                if k == 0 {
                    row.push((i + stride, 2.0 * inv_h2));
                } else if k == n - 1 {
                    row.push((i - stride, 2.0 * inv_h2));
                } else {
                    row.push((i + stride, inv_h2));
                    row.push((i - stride, inv_h2));
                }
            }
        }
        CsrMatrix::from_rows(len, rows)
    }

    /// Visits every grid edge as `(left, right, axis, edge_weight)`.
    ///
    /// The edge weight is `h_axis` times the trapezoid weight of the
    /// cross-axis coordinate, so that
    /// `Σ_i w_i f_i (L g)_i = -Σ_e w_e (Δf/h)(Δg/h)` holds exactly.
    pub fn for_each_edge(&self, mut visit: impl FnMut(usize, usize, usize, f64)) {
        for axis in 0..self.dim() {
            let n = self.0.counts[axis];
            let h = self.0.spacing[axis];
            let stride = self.stride(axis);
            for i in 0..self.len() {
                let idx = self.multi_index(i);
                if idx[axis] + 1 == n {
                    continue;
                }
                let cross = if self.dim() == 2 {
                    self.0.axis_weights[1 - axis][idx[1 - axis]]
                } else {
                    1.0
                };
                visit(i, i + stride, axis, h * cross);
            }
        }
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(Self::from_parts(grid.clone(), values))
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Field { grid, values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_parts(grid.clone(), vec![value; grid.len()])
    }

    /// Evaluates `f` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::from_parts(grid.clone(), values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ w_i u_i`.
    pub fn mass(&self) -> f64 {
        self.grid.integrate_values(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Self::from_parts(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_weights_on_unit_interval() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), &[0.25]);
        assert_eq!(g.weights(), &[0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn weight_sums_match_measure() {
        let sq = Grid::rectangle((0.0, 1.0), (0.0, 1.0), (3, 3)).unwrap();
        assert!((sq.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let g = Grid::interval(0.0, 2.0, 9).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-12);
        let r = Grid::rectangle((-1.0, 2.5), (0.5, 1.25), (17, 6)).unwrap();
        assert!(((r.weights().iter().sum::<f64>() - r.measure()) / r.measure()).abs() < 1e-12);
        assert!(r.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn rejects_invalid_domains() {
        assert!(matches!(
            Grid::interval(0.0, 1.0, 2),
            Err(Error::InvalidDomain(_))
        ));
        assert!(matches!(
            Grid::interval(1.0, 1.0, 5),
            Err(Error::InvalidDomain(_))
        ));
        assert!(matches!(
            Grid::interval(1.0, 0.0, 5),
            Err(Error::InvalidDomain(_))
        ));
        assert!(Grid::uniform(&[(0.0, 1.0); 3], &[3, 3, 3]).is_err());
        assert!(Grid::uniform(&[(0.0, 1.0)], &[3, 3]).is_err());
    }

    #[test]
    fn integrate_simple_fields() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        assert_eq!(g.integrate(&Field::constant(&g, 2.0)).unwrap(), 2.0);
        assert_eq!(g.integrate(&Field::constant(&g, 0.0)).unwrap(), 0.0);
        let g = Grid::interval(0.0, 1.0, 101).unwrap();
        let x = Field::from_fn(&g, |p| p[0]);
        assert!((g.integrate(&x).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integrate_rejects_foreign_field() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        assert!(matches!(
            Field::new(&g, vec![1.0; 4]),
            Err(Error::Shape { .. })
        ));
        let other = Grid::interval(0.0, 1.0, 6).unwrap();
        let f = Field::constant(&other, 1.0);
        assert!(matches!(g.integrate(&f), Err(Error::Shape { .. })));
    }

    #[test]
    fn laplacian_of_constant_and_quadratic() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 2.0), (7, 9)).unwrap();
        let lap = g
            .apply_neumann_laplacian(&Field::constant(&g, 3.5))
            .unwrap();
        assert!(lap.values().iter().all(|&v| v.abs() < 1e-10));

        let g = Grid::interval(0.0, 1.0, 21).unwrap();
        let lap = g
            .apply_neumann_laplacian(&Field::from_fn(&g, |p| p[0] * p[0]))
            .unwrap();
        for &v in &lap.values()[1..20] {
            assert!((v - 2.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn laplacian_of_neumann_cosine() {
        let g = Grid::interval(0.0, 1.0, 201).unwrap();
        let u = Field::from_fn(&g, |p| (PI * p[0]).cos());
        let lap = g.apply_neumann_laplacian(&u).unwrap();
        let err = lap
            .values()
            .iter()
            .zip(g.axis_coords(0))
            .map(|(l, x)| (l + PI * PI * (PI * x).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn laplacian_matrix_three_nodes() {
        let g = Grid::interval(0.0, 1.0, 3).unwrap();
        let dense = g.laplacian_matrix().to_dense();
        let expected = [[-2.0, 2.0, 0.0], [1.0, -2.0, 1.0], [0.0, 2.0, -2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense[(i, j)], expected[i][j] / 0.25);
            }
        }
    }

    #[test]
    fn laplacian_matrix_matches_stencil_in_2d() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 0.5), (5, 4)).unwrap();
        let u = Field::from_fn(&g, |p| (3.0 * p[0]).sin() + p[1] * p[1] * p[0]);
        let direct = g.apply_neumann_laplacian(&u).unwrap();
        let via_matrix = g.laplacian_matrix().mul_vec(u.values());
        for (a, b) in direct.values().iter().zip(&via_matrix) {
            assert!((a - b).abs() < 1e-12);
        }
        let ones = g.laplacian_matrix().mul_vec(&vec![1.0; g.len()]);
        assert!(ones.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn edge_pairing_reproduces_laplacian_form() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 2.0), (6, 5)).unwrap();
        let f = Field::from_fn(&g, |p| p[0].exp() * (0.3 + p[1]));
        let lap = g.apply_neumann_laplacian(&f).unwrap();
        let lhs: f64 = (0..g.len())
            .map(|i| g.weights()[i] * f.values()[i] * lap.values()[i])
            .sum();
        let mut rhs = 0.0;
        g.for_each_edge(|a, b, axis, w| {
            let d = (f.values()[b] - f.values()[a]) / g.spacing()[axis];
            rhs -= w * d * d;
        });
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs());
    }

    #[test]
    fn multi_index_round_trip() {
        let g = Grid::rectangle((0.0, 1.0), (0.0, 1.0), (4, 7)).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat_index(g.multi_index(i)), i);
        }
        let idx = g.multi_index(9);
        assert_eq!(
            g.node(9),
            &[g.axis_coords(0)[idx[0]], g.axis_coords(1)[idx[1]]]
        );
    }
}
