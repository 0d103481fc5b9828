//! Free-space Poisson solve by zero padding (domain doubling).

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::fft::fft3;
use super::grid::{FieldGrid, GridSpec};
use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Mean of `1/|x|` over the unit cube centered at the origin.
const CUBE_MEAN_INV_R: f64 = 2.380_077_363_979_553_5;

/// Solver for `Delta phi = rho` on all of space, with `E = grad phi`.
///
/// The grid is embedded in a doubled array and convolved with
/// `G = -1 / (4 pi r)`; the self cell uses the cell average of `G`.
#[derive(Clone, Debug)]
pub struct PoissonSolver {
    spec: GridSpec,
    padded: [usize; 3],
    /// Transform of the sampled Green's function, scaled by the cell volume.
    /// `G` is real and even, so its transform is real.
    green_hat: Vec<f64>,
}

fn alloc_complex(len: usize) -> Result<Vec<Complex64>> {
    let mut v: Vec<Complex64> = Vec::new();
    v.try_reserve_exact(len).map_err(|_| {
        Error::Resource(format!(
            "cannot allocate {} MiB for the doubled Poisson grid",
            (len * std::mem::size_of::<Complex64>()) >> 20
        ))
    })?;
    v.resize(len, Complex64::default());
    Ok(v)
}

impl PoissonSolver {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        spec.validate()?;
        let padded = spec.dims.map(|n| 2 * n);
        let [p0, p1, p2] = padded;
        let len = p0 * p1 * p2;
        let h = spec.spacing;
        let mut g = alloc_complex(len)?;
        g.par_chunks_mut(p1 * p2).enumerate().for_each(|(i, plane)| {
            let di = i.min(p0 - i) as f64;
            for j in 0..p1 {
                let dj = j.min(p1 - j) as f64;
                for k in 0..p2 {
                    let dk = k.min(p2 - k) as f64;
                    let r = (di * di + dj * dj + dk * dk).sqrt();
                    let inv_r = if r == 0.0 { CUBE_MEAN_INV_R } else { 1.0 / r };
                    // G(r) h^3 = -(h^2 / 4 pi) / (r / h).
                    plane[j * p2 + k] = Complex64::new(-inv_r * h * h / (4.0 * PI), 0.0);
                }
            }
        });
        fft3(&mut g, padded, false);
        let green_hat = g.into_iter().map(|c| c.re).collect();
        Ok(PoissonSolver { spec: *spec, padded, green_hat })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Fill `potential` and `e_field` of a deposited grid.
    pub fn solve(&self, grid: &mut FieldGrid) -> Result<()> {
        if grid.spec != self.spec {
            return Err(crate::error::validation("grid does not match the solver's grid spec"));
        }
        let [n0, n1, n2] = self.spec.dims;
        let [p0, p1, p2] = self.padded;
        let mut work = alloc_complex(p0 * p1 * p2)?;
        work.par_chunks_mut(p1 * p2).enumerate().for_each(|(i, plane)| {
            if i < n0 {
                for j in 0..n1 {
                    for k in 0..n2 {
                        plane[j * p2 + k] = Complex64::new(grid.rho[(i * n1 + j) * n2 + k], 0.0);
                    }
                }
            }
        });
        fft3(&mut work, self.padded, false);
        work.par_iter_mut().zip(self.green_hat.par_iter()).for_each(|(w, g)| *w *= *g);
        fft3(&mut work, self.padded, true);
        let mut phi = vec![0.0; self.spec.len()];
        phi.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, plane)| {
            for j in 0..n1 {
                for k in 0..n2 {
                    plane[j * n2 + k] = work[(i * p1 + j) * p2 + k].re;
                }
            }
        });
        drop(work);
        grid.e_field = gradient(&phi, &self.spec);
        grid.potential = phi;
        Ok(())
    }
}

/// Central differences inside, one-sided first differences on the faces.
pub fn gradient(phi: &[f64], spec: &GridSpec) -> Vec<Vec3> {
    let dims = spec.dims;
    let h = spec.spacing;
    let [_, n1, n2] = dims;
    let strides = [n1 * n2, n2, 1];
    let mut out = vec![Vec3::ZERO; phi.len()];
    out.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, plane)| {
        for j in 0..n1 {
            for k in 0..n2 {
                let pos = [i, j, k];
                let idx = (i * n1 + j) * n2 + k;
                let mut e = [0.0; 3];
                for a in 0..3 {
                    let s = strides[a];
                    e[a] = if pos[a] == 0 {
                        (phi[idx + s] - phi[idx]) / h
                    } else if pos[a] == dims[a] - 1 {
                        (phi[idx] - phi[idx - s]) / h
                    } else {
                        (phi[idx + s] - phi[idx - s]) / (2.0 * h)
                    };
                }
                plane[j * n2 + k] = Vec3(e);
            }
        }
    });
    out
}

/// Deposit-free convenience: solve and return the grid.
pub fn grid_poisson_solve(mut grid: FieldGrid) -> Result<FieldGrid> {
    let solver = PoissonSolver::new(&grid.spec)?;
    solver.solve(&mut grid)?;
    Ok(grid)
}
