//! Uniform node-centered grid on a square domain and the scalar fields that
//! live on it, together with the discrete norms and inter-grid transfer used
//! throughout the pipeline.
//!
//! Conventions: a grid has `n` points per axis including both boundaries,
//! spacing `h = (x_max - x_min) / (n - 1)`, and node `(i, j)` sits at
//! `(x_min + i*h, y_min + j*h)`. Fields store their values row-major with
//! `j` (the y index) as the slow axis: `values[j * n + i]`.

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Uniform tensor grid on a square domain, boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D<T: Scalar> {
    x_min: T,
    x_max: T,
    y_min: T,
    y_max: T,
    n: usize,
    h: T,
}

impl<T: Scalar> Grid2D<T> {
    /// Build a grid with `n` points per axis on `[x_min, x_max] x [y_min, y_max]`.
    ///
    /// The domain must be square and `n >= 3` so that at least one interior
    /// node exists.
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T, n: usize) -> Result<Self> {
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidGrid(format!(
                "domain corners must be ordered: x [{x_min}, {x_max}], y [{y_min}, {y_max}]"
            )));
        }
        let lx = x_max - x_min;
        let ly = y_max - y_min;
        if lx != ly {
            return Err(Error::InvalidGrid(format!(
                "domain must be square, got side lengths {lx} and {ly}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3 points per axis, got {n}")));
        }
        let h = lx / cast::<T>((n - 1) as f64);
        Ok(Self { x_min, x_max, y_min, y_max, n, h })
    }

    /// Grid on the unit square `(0,1)^2`.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(T::zero(), T::one(), T::zero(), T::one(), n)
    }

    /// Grid on `(-1,1)^2`, the domain used by the phantom experiments.
    pub fn centered_square(n: usize) -> Result<Self> {
        Self::new(-T::one(), T::one(), -T::one(), T::one(), n)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Total number of nodes, `n * n`.
    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn y_min(&self) -> T {
        self.y_min
    }

    pub fn y_max(&self) -> T {
        self.y_max
    }

    /// Flat index of node `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        j * self.n + i
    }

    /// Coordinates of node `(i, j)`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> (T, T) {
        (
            self.x_min + cast::<T>(i as f64) * self.h,
            self.y_min + cast::<T>(j as f64) * self.h,
        )
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// True when both grids span the same rectangle (resolution may differ).
    pub fn same_domain(&self, other: &Self) -> bool {
        self.x_min == other.x_min
            && self.x_max == other.x_max
            && self.y_min == other.y_min
            && self.y_max == other.y_max
    }
}

/// A grid-attached array of real values, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T: Scalar> {
    grid: Grid2D<T>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    /// Wrap a value vector; rejects length mismatches and non-finite entries.
    pub fn new(grid: Grid2D<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.num_nodes(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid2D<T>, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.num_nodes()],
        }
    }

    pub fn zeros(grid: Grid2D<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Sample a function of the node coordinates.
    pub fn from_fn(grid: Grid2D<T>, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                let (x, y) = grid.node(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let k = self.grid.idx(i, j);
        self.values[k] = value;
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Check that `other` lives on the same grid.
    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Nodewise map.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: T, other: &Self) -> Result<Self> {
        self.zip_map(other, move |a, b| a + scale * b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| s * v)
    }

    /// Discrete L1 norm `h^2 * sum |u_ij|` over all nodes, boundary included.
    pub fn l1_norm(&self) -> T {
        let h2 = self.grid.h() * self.grid.h();
        h2 * self.values.iter().map(|v| v.abs()).sum::<T>()
    }

    /// h-weighted discrete L2 norm `sqrt(h^2 * sum u_ij^2)`.
    pub fn l2_norm(&self) -> T {
        self.inner(self).expect("same grid").sqrt()
    }

    /// h-weighted inner product `h^2 * sum a_ij b_ij`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        let h2 = self.grid.h() * self.grid.h();
        Ok(h2 * self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum::<T>())
    }
}

/// Relative h-weighted L2 error `||u - u_ref|| / ||u_ref||`.
pub fn relative_l2_error<T: Scalar>(u: &ScalarField<T>, u_ref: &ScalarField<T>) -> Result<T> {
    u.same_grid(u_ref)?;
    let denom = u_ref.l2_norm();
    if denom == T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(u.sub(u_ref)?.l2_norm() / denom)
}

/// Transfer a fine-grid field onto a coarser grid covering the same domain
/// by bilinear interpolation at the coarse nodes.
pub fn restrict<T: Scalar>(u_fine: &ScalarField<T>, grid_coarse: &Grid2D<T>) -> Result<ScalarField<T>> {
    let fine = u_fine.grid();
    if !fine.same_domain(grid_coarse) {
        return Err(Error::DomainMismatch);
    }
    let nf = fine.n();
    let hf = fine.h();
    let nc = grid_coarse.n();
    let mut values = Vec::with_capacity(grid_coarse.num_nodes());
    for j in 0..nc {
        for i in 0..nc {
            let (x, y) = grid_coarse.node(i, j);
            // cell containing (x, y), clamped so the top/right boundary
            // falls in the last cell with weight 1
            let px = (x - fine.x_min()) / hf;
            let py = (y - fine.y_min()) / hf;
            let ix = (px.floor().to_usize().unwrap_or(0)).min(nf - 2);
            let iy = (py.floor().to_usize().unwrap_or(0)).min(nf - 2);
            let wx = px - cast::<T>(ix as f64);
            let wy = py - cast::<T>(iy as f64);
            let one = T::one();
            let v = u_fine.get(ix, iy) * (one - wx) * (one - wy)
                + u_fine.get(ix + 1, iy) * wx * (one - wy)
                + u_fine.get(ix, iy + 1) * (one - wx) * wy
                + u_fine.get(ix + 1, iy + 1) * wx * wy;
            values.push(v);
        }
    }
    ScalarField::new(*grid_coarse, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing_and_node_count() {
        let g = Grid2D::<f64>::new(0.0, 1.0, 0.0, 1.0, 3).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.num_nodes(), 9);
        assert_eq!(g.node(2, 2), (1.0, 1.0));
    }

    #[test]
    fn grid_matches_experiment_convention() {
        let g = Grid2D::<f64>::new(-1.0, 1.0, -1.0, 1.0, 150).unwrap();
        assert_eq!(g.h(), 2.0 / 149.0);
    }

    #[test]
    fn grid_rejects_bad_domains() {
        assert!(Grid2D::<f64>::new(0.0, 1.0, 0.0, 2.0, 3).is_err());
        assert!(Grid2D::<f64>::new(1.0, 0.0, 0.0, 1.0, 3).is_err());
        assert!(Grid2D::<f64>::new(0.0, 1.0, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn l1_norm_of_ones() {
        let g = Grid2D::<f64>::unit_square(3).unwrap();
        let u = ScalarField::constant(g, 1.0);
        assert_relative_eq!(u.l1_norm(), 2.25, max_relative = 1e-15);
        assert_eq!(ScalarField::zeros(g).l1_norm(), 0.0);
    }

    #[test]
    fn l1_norm_matches_independent_sum() {
        // independently frozen: h^2 * sum |sin(i h) sin(j h)| on (0,1)^2,
        // n = 101, h = 1/100 (direct double sum in exact node order)
        let g = Grid2D::<f64>::unit_square(101).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (x).sin() * (y).sin());
        assert_relative_eq!(u.l1_norm(), 2.1520434028028573e-1, max_relative = 1e-13);
    }

    #[test]
    fn field_rejects_non_finite_and_bad_length() {
        let g = Grid2D::<f64>::unit_square(3).unwrap();
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 8]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(
            ScalarField::new(g, v),
            Err(Error::NonFiniteValue { index: 4 })
        ));
    }

    #[test]
    fn relative_error_examples() {
        let g = Grid2D::<f64>::unit_square(5).unwrap();
        let r = ScalarField::from_fn(g, |x, y| 1.0 + x + y * y);
        assert_eq!(relative_l2_error(&r, &r).unwrap(), 0.0);
        let doubled = r.scale(2.0);
        assert_relative_eq!(relative_l2_error(&doubled, &r).unwrap(), 1.0, max_relative = 1e-14);
        assert!(matches!(
            relative_l2_error(&r, &ScalarField::zeros(g)),
            Err(Error::ZeroReference)
        ));
    }

    #[test]
    fn relative_error_matches_independent_computation() {
        let g = Grid2D::<f64>::unit_square(17).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (3.0 * x).cos() + y);
        let r = ScalarField::from_fn(g, |x, y| x * y + 0.5);
        // independent route: plain loops over node indices
        let h = g.h();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..g.n() {
            for i in 0..g.n() {
                let d: f64 = u.get(i, j) - r.get(i, j);
                num += d * d;
                den += r.get(i, j) * r.get(i, j);
            }
        }
        let expected = (h * h * num).sqrt() / (h * h * den).sqrt();
        assert_relative_eq!(relative_l2_error(&u, &r).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn restrict_reproduces_constants_and_bilinear() {
        let fine = Grid2D::<f64>::unit_square(41).unwrap();
        let coarse = Grid2D::<f64>::unit_square(15).unwrap();
        let c = restrict(&ScalarField::constant(fine, 3.25), &coarse).unwrap();
        for &v in c.values() {
            assert_relative_eq!(v, 3.25, max_relative = 1e-15);
        }
        let xy = restrict(&ScalarField::from_fn(fine, |x, y| x * y), &coarse).unwrap();
        for j in 0..coarse.n() {
            for i in 0..coarse.n() {
                let (x, y) = coarse.node(i, j);
                assert_relative_eq!(xy.get(i, j), x * y, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn restrict_error_is_second_order_in_fine_spacing() {
        let fine = Grid2D::<f64>::unit_square(400).unwrap();
        let coarse = Grid2D::<f64>::unit_square(150).unwrap();
        let pi = std::f64::consts::PI;
        let u = ScalarField::from_fn(fine, |x, y| (pi * x).sin() * (pi * y).sin());
        let r = restrict(&u, &coarse).unwrap();
        let hf = fine.h();
        let mut max_err: f64 = 0.0;
        for j in 0..coarse.n() {
            for i in 0..coarse.n() {
                let (x, y) = coarse.node(i, j);
                max_err = max_err.max((r.get(i, j) - (pi * x).sin() * (pi * y).sin()).abs());
            }
        }
        // bilinear interpolation error bound: (h^2/8)(|u_xx| + |u_yy|) <= h^2 pi^2 / 4
        assert!(max_err <= 0.25 * pi * pi * hf * hf * 1.05, "max_err = {max_err}");
    }

    #[test]
    fn restrict_rejects_mismatched_domains() {
        let fine = Grid2D::<f64>::unit_square(11).unwrap();
        let coarse = Grid2D::<f64>::centered_square(5).unwrap();
        assert!(matches!(
            restrict(&ScalarField::zeros(fine), &coarse),
            Err(Error::DomainMismatch)
        ));
    }

    #[test]
    fn restrict_preserves_swap_symmetry() {
        let fine = Grid2D::<f64>::unit_square(33).unwrap();
        let coarse = Grid2D::<f64>::unit_square(12).unwrap();
        let u = ScalarField::from_fn(fine, |x, y| (x + y).sin() + x * y);
        let r = restrict(&u, &coarse).unwrap();
        for j in 0..coarse.n() {
            for i in 0..coarse.n() {
                assert_relative_eq!(r.get(i, j), r.get(j, i), epsilon = 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn l1_norm_triangle_and_homogeneity(
            a in proptest::collection::vec(-100.0f64..100.0, 25),
            b in proptest::collection::vec(-100.0f64..100.0, 25),
            s in -10.0f64..10.0,
        ) {
            let g = Grid2D::<f64>::unit_square(5).unwrap();
            let fa = ScalarField::new(g, a).unwrap();
            let fb = ScalarField::new(g, b).unwrap();
            let sum = fa.zip_map(&fb, |x, y| x + y).unwrap();
            prop_assert!(sum.l1_norm() <= fa.l1_norm() + fb.l1_norm() + 1e-12);
            prop_assert!((fa.scale(s).l1_norm() - s.abs() * fa.l1_norm()).abs() <= 1e-12 * (1.0 + fa.l1_norm()));
        }

        #[test]
        fn restrict_is_linear(
            a in proptest::collection::vec(-10.0f64..10.0, 81),
            b in proptest::collection::vec(-10.0f64..10.0, 81),
            ca in -5.0f64..5.0,
            cb in -5.0f64..5.0,
        ) {
            let fine = Grid2D::<f64>::unit_square(9).unwrap();
            let coarse = Grid2D::<f64>::unit_square(4).unwrap();
            let fa = ScalarField::new(fine, a).unwrap();
            let fb = ScalarField::new(fine, b).unwrap();
            let combo = fa.scale(ca).zip_map(&fb.scale(cb), |x, y| x + y).unwrap();
            let lhs = restrict(&combo, &coarse).unwrap();
            let rhs = restrict(&fa, &coarse).unwrap().scale(ca)
                .zip_map(&restrict(&fb, &coarse).unwrap().scale(cb), |x, y| x + y).unwrap();
            for (l, r) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((l - r).abs() <= 1e-10);
            }
        }
    }
}
