//! Five-point finite-volume discretization of `-div(D grad w) + c w = f` on
//! the node-centered grid, with either Dirichlet data eliminated into the
//! right-hand side or a pure Neumann (reflected) stencil, and a Jacobi
//! preconditioned conjugate-gradient solver for the resulting SPD systems.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::scalar::{cast, Scalar};

/// Harmonic mean of the two node values adjacent to a face; preserves flux
/// continuity across jumps in the diffusion coefficient.
#[inline]
fn face_diffusion<T: Scalar>(a: T, b: T) -> T {
    let two = T::one() + T::one();
    two * a * b / (a + b)
}

/// Default linear-solver tolerance on the relative algebraic residual.
pub fn default_tolerance<T: Scalar>() -> T {
    cast::<T>(1e-10)
}

/// Default iteration cap, `10 n^2` for an `n x n` grid.
pub fn default_max_iter(n: usize) -> usize {
    10 * n * n
}

/// Symmetric positive definite five-point system over the interior nodes,
/// Dirichlet values eliminated into the right-hand side.
///
/// Interior unknown `(i, j)` (with `1 <= i, j <= n-2`) maps to row
/// `(j-1)*(n-2) + (i-1)`. For each row the four positive face
/// transmissibilities `D_face / h^2` enter the diagonal; couplings to
/// eliminated boundary neighbors are folded into `rhs`.
#[derive(Debug, Clone)]
pub struct EllipticSystem<T: Scalar> {
    grid: Grid2D<T>,
    diag: Vec<T>,
    // coupling to the (i+1), (i-1), (j+1), (j-1) neighbor; zero when that
    // neighbor is a boundary node
    east: Vec<T>,
    west: Vec<T>,
    north: Vec<T>,
    south: Vec<T>,
    rhs: Vec<T>,
    boundary: ScalarField<T>,
}

/// Assemble the Dirichlet problem. `g_boundary` is read only at boundary
/// nodes; `c` and `f` only at interior nodes.
pub fn assemble<T: Scalar>(
    d: &ScalarField<T>,
    c: &ScalarField<T>,
    f: &ScalarField<T>,
    g_boundary: &ScalarField<T>,
) -> Result<EllipticSystem<T>> {
    d.same_grid(c)?;
    d.same_grid(f)?;
    d.same_grid(g_boundary)?;
    let dmin = d.min_value();
    if !(dmin > T::zero()) {
        return Err(Error::NonPositiveField {
            name: "diffusion coefficient",
            min: dmin.to_f64().unwrap_or(f64::NAN),
        });
    }
    let grid = *d.grid();
    let n = grid.n();
    let m = (n - 2) * (n - 2);
    let inv_h2 = T::one() / (grid.h() * grid.h());

    let mut sys = EllipticSystem {
        grid,
        diag: vec![T::zero(); m],
        east: vec![T::zero(); m],
        west: vec![T::zero(); m],
        north: vec![T::zero(); m],
        south: vec![T::zero(); m],
        rhs: vec![T::zero(); m],
        boundary: g_boundary.clone(),
    };

    let mut row = 0usize;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let dij = d.get(i, j);
            let mut diag = c.get(i, j);
            let mut rhs = f.get(i, j);
            let neighbors = [
                (i + 1, j, 0usize),
                (i - 1, j, 1),
                (i, j + 1, 2),
                (i, j - 1, 3),
            ];
            for (ni, nj, which) in neighbors {
                let t = face_diffusion(dij, d.get(ni, nj)) * inv_h2;
                diag = diag + t;
                if grid.is_boundary(ni, nj) {
                    rhs = rhs + t * g_boundary.get(ni, nj);
                } else {
                    match which {
                        0 => sys.east[row] = t,
                        1 => sys.west[row] = t,
                        2 => sys.north[row] = t,
                        _ => sys.south[row] = t,
                    }
                }
            }
            sys.diag[row] = diag;
            sys.rhs[row] = rhs;
            row += 1;
        }
    }
    Ok(sys)
}

impl<T: Scalar> EllipticSystem<T> {
    pub fn grid(&self) -> &Grid2D<T> {
        &self.grid
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    /// Number of interior unknowns.
    pub fn num_unknowns(&self) -> usize {
        self.diag.len()
    }

    /// Matrix-vector product `y = A x` over the interior unknowns.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let stride = self.grid.n() - 2;
        for (row, yv) in y.iter_mut().enumerate() {
            let mut acc = self.diag[row] * x[row];
            let e = self.east[row];
            if e != T::zero() {
                acc = acc - e * x[row + 1];
            }
            let w = self.west[row];
            if w != T::zero() {
                acc = acc - w * x[row - 1];
            }
            let nn = self.north[row];
            if nn != T::zero() {
                acc = acc - nn * x[row + stride];
            }
            let s = self.south[row];
            if s != T::zero() {
                acc = acc - s * x[row - stride];
            }
            *yv = acc;
        }
    }

    /// Solve to the requested relative residual; the returned field carries
    /// the Dirichlet data on its boundary nodes.
    pub fn solve(&self, tol: T, max_iter: usize) -> Result<ScalarField<T>> {
        let x = pcg(
            |x, y| self.apply(x, y),
            &self.diag,
            &self.rhs,
            tol,
            max_iter,
        )?;
        let n = self.grid.n();
        let mut out = self.boundary.clone();
        let mut row = 0usize;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                out.set(i, j, x[row]);
                row += 1;
            }
        }
        Ok(out)
    }

    /// Emit the assembled matrix as `row col value` triples.
    pub fn dump_coo(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        let stride = self.grid.n() - 2;
        for row in 0..self.diag.len() {
            writeln!(out, "{} {} {:e}", row, row, self.diag[row])?;
            if self.east[row] != T::zero() {
                writeln!(out, "{} {} {:e}", row, row + 1, -self.east[row])?;
            }
            if self.west[row] != T::zero() {
                writeln!(out, "{} {} {:e}", row, row - 1, -self.west[row])?;
            }
            if self.north[row] != T::zero() {
                writeln!(out, "{} {} {:e}", row, row + stride, -self.north[row])?;
            }
            if self.south[row] != T::zero() {
                writeln!(out, "{} {} {:e}", row, row - stride, -self.south[row])?;
            }
        }
        Ok(())
    }
}

/// Five-point system over all `n^2` nodes with homogeneous Neumann boundary
/// treatment (fluxes through the domain boundary dropped). Positive definite
/// whenever `c > 0` somewhere.
#[derive(Debug, Clone)]
pub struct NeumannSystem<T: Scalar> {
    grid: Grid2D<T>,
    diag: Vec<T>,
    east: Vec<T>,
    west: Vec<T>,
    north: Vec<T>,
    south: Vec<T>,
    rhs: Vec<T>,
}

/// Assemble `-div(D grad w) + c w = f` with homogeneous Neumann conditions.
pub fn assemble_neumann<T: Scalar>(
    d: &ScalarField<T>,
    c: &ScalarField<T>,
    f: &ScalarField<T>,
) -> Result<NeumannSystem<T>> {
    d.same_grid(c)?;
    d.same_grid(f)?;
    let dmin = d.min_value();
    if !(dmin > T::zero()) {
        return Err(Error::NonPositiveField {
            name: "diffusion coefficient",
            min: dmin.to_f64().unwrap_or(f64::NAN),
        });
    }
    let grid = *d.grid();
    let n = grid.n();
    let m = n * n;
    let inv_h2 = T::one() / (grid.h() * grid.h());
    let mut sys = NeumannSystem {
        grid,
        diag: vec![T::zero(); m],
        east: vec![T::zero(); m],
        west: vec![T::zero(); m],
        north: vec![T::zero(); m],
        south: vec![T::zero(); m],
        rhs: f.values().to_vec(),
    };
    for j in 0..n {
        for i in 0..n {
            let row = grid.idx(i, j);
            let dij = d.get(i, j);
            let mut diag = c.get(i, j);
            if i + 1 < n {
                let t = face_diffusion(dij, d.get(i + 1, j)) * inv_h2;
                diag = diag + t;
                sys.east[row] = t;
            }
            if i > 0 {
                let t = face_diffusion(dij, d.get(i - 1, j)) * inv_h2;
                diag = diag + t;
                sys.west[row] = t;
            }
            if j + 1 < n {
                let t = face_diffusion(dij, d.get(i, j + 1)) * inv_h2;
                diag = diag + t;
                sys.north[row] = t;
            }
            if j > 0 {
                let t = face_diffusion(dij, d.get(i, j - 1)) * inv_h2;
                diag = diag + t;
                sys.south[row] = t;
            }
            sys.diag[row] = diag;
        }
    }
    Ok(sys)
}

impl<T: Scalar> NeumannSystem<T> {
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.grid.n();
        for (row, yv) in y.iter_mut().enumerate() {
            let mut acc = self.diag[row] * x[row];
            let e = self.east[row];
            if e != T::zero() {
                acc = acc - e * x[row + 1];
            }
            let w = self.west[row];
            if w != T::zero() {
                acc = acc - w * x[row - 1];
            }
            let nn = self.north[row];
            if nn != T::zero() {
                acc = acc - nn * x[row + n];
            }
            let s = self.south[row];
            if s != T::zero() {
                acc = acc - s * x[row - n];
            }
            *yv = acc;
        }
    }

    pub fn solve(&self, tol: T, max_iter: usize) -> Result<ScalarField<T>> {
        let x = pcg(
            |x, y| self.apply(x, y),
            &self.diag,
            &self.rhs,
            tol,
            max_iter,
        )?;
        ScalarField::new(self.grid, x)
    }
}

/// Apply `-div(D grad u)` at interior nodes of a full-grid field `u`
/// (boundary rows of the result are zero). Used to evaluate residuals of
/// converged solutions against the same discrete operator the solver uses.
pub fn apply_variable_laplacian<T: Scalar>(
    d: &ScalarField<T>,
    u: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    d.same_grid(u)?;
    let grid = *d.grid();
    let n = grid.n();
    let inv_h2 = T::one() / (grid.h() * grid.h());
    let mut out = ScalarField::zeros(grid);
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let dij = d.get(i, j);
            let uij = u.get(i, j);
            let mut acc = T::zero();
            for (ni, nj) in [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)] {
                let t = face_diffusion(dij, d.get(ni, nj)) * inv_h2;
                acc = acc + t * (uij - u.get(ni, nj));
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator given by
/// `apply`; stops at relative residual `tol`.
fn pcg<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    tol: T,
    max_iter: usize,
) -> Result<Vec<T>> {
    let m = b.len();
    let norm_b = b.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm_b == T::zero() {
        return Ok(vec![T::zero(); m]);
    }
    let mut x = vec![T::zero(); m];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(diag).map(|(&ri, &di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).map(|(&a, &b)| a * b).sum::<T>();
    let mut ap = vec![T::zero(); m];
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let pap = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum::<T>();
        let alpha = rz / pap;
        for k in 0..m {
            x[k] = x[k] + alpha * p[k];
            r[k] = r[k] - alpha * ap[k];
        }
        let norm_r = r.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm_r <= tol * norm_b {
            return Ok(x);
        }
        for k in 0..m {
            z[k] = r[k] / diag[k];
        }
        let rz_new = r.iter().zip(&z).map(|(&a, &b)| a * b).sum::<T>();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    let norm_r = r.iter().map(|&v| v * v).sum::<T>().sqrt();
    Err(Error::SolverDiverged {
        iterations: max_iter,
        residual: (norm_r / norm_b).to_f64().unwrap_or(f64::NAN),
    })
}
