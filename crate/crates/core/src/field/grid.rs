//! Uniform Cartesian grids: cloud-in-cell deposition, trilinear
//! interpolation and binary export.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::kinetics::{Ensemble, Particle};
use crate::reduce::BLOCK;
use crate::vec3::Vec3;

/// Node `(i, j, k)` sits at `origin + spacing * (i, j, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    /// Cube of `n^3` nodes spanning `[-half_width, half_width]^3`.
    pub fn centered_cube(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 {
            return Err(validation("grid needs at least 2 nodes per axis"));
        }
        let spec = GridSpec {
            origin: Vec3::new(-half_width, -half_width, -half_width),
            spacing: 2.0 * half_width / (n - 1) as f64,
            dims: [n; 3],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(validation(format!("grid spacing must be positive, got {}", self.spacing)));
        }
        if self.dims.iter().any(|&d| d < 2) {
            return Err(validation(format!("grid dims must be at least 2 per axis, got {:?}", self.dims)));
        }
        if !self.origin.is_finite() {
            return Err(validation("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Periodic box length `n h` along each axis.
    pub fn box_lengths(&self) -> [f64; 3] {
        self.dims.map(|n| n as f64 * self.spacing)
    }

    /// Base node and fractional offsets of the trilinear stencil, or `None`
    /// when the stencil leaves the grid.
    #[inline]
    pub fn stencil(&self, x: Vec3) -> Option<([usize; 3], [f64; 3])> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = (x.0[a] - self.origin.0[a]) / self.spacing;
            let top = (self.dims[a] - 1) as f64;
            if !(u >= 0.0 && u <= top) {
                return None;
            }
            let mut i = u.floor();
            if i >= top {
                i = top - 1.0;
            }
            base[a] = i as usize;
            frac[a] = u - i;
        }
        Some((base, frac))
    }

    fn stencil_entries(&self, base: [usize; 3], frac: [f64; 3]) -> [(usize, f64); 8] {
        let mut out = [(0usize, 0.0); 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            let wx = if di == 1 { frac[0] } else { 1.0 - frac[0] };
            let wy = if dj == 1 { frac[1] } else { 1.0 - frac[1] };
            let wz = if dk == 1 { frac[2] } else { 1.0 - frac[2] };
            *slot = (self.index(base[0] + di, base[1] + dj, base[2] + dk), wx * wy * wz);
        }
        out
    }
}

/// Gridded density and field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub spec: GridSpec,
    /// Density per node, mass per unit volume.
    pub rho: Vec<f64>,
    /// Potential, filled by the Poisson solve.
    pub potential: Vec<f64>,
    /// `E = grad phi`, filled by the Poisson solve.
    pub e_field: Vec<Vec3>,
    /// Deposited weight of particles whose stencil left the grid.
    pub outside_mass: f64,
    pub outside_count: usize,
    /// Total deposited weight, inside and outside. Used for the monopole
    /// fallback of off-grid queries.
    pub total_mass: f64,
}

impl FieldGrid {
    pub fn empty(spec: GridSpec) -> Self {
        FieldGrid {
            spec,
            rho: vec![0.0; spec.len()],
            potential: Vec::new(),
            e_field: Vec::new(),
            outside_mass: 0.0,
            outside_count: 0,
            total_mass: 0.0,
        }
    }

    /// `sum rho * cell volume`.
    pub fn grid_mass(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.spec.cell_volume()
    }

    pub fn has_field(&self) -> bool {
        self.e_field.len() == self.spec.len()
    }

    /// Largest discrete curl component over interior nodes, using central
    /// differences.
    pub fn curl_residual(&self) -> f64 {
        let s = &self.spec;
        let [n0, n1, n2] = s.dims;
        if !self.has_field() || n0 < 3 || n1 < 3 || n2 < 3 {
            return 0.0;
        }
        let h2 = 2.0 * s.spacing;
        let e = |i, j, k| self.e_field[s.index(i, j, k)];
        let mut worst: f64 = 0.0;
        for i in 2..n0 - 2 {
            for j in 2..n1 - 2 {
                for k in 2..n2 - 2 {
                    let dy_ez = (e(i, j + 1, k).z() - e(i, j - 1, k).z()) / h2;
                    let dz_ey = (e(i, j, k + 1).y() - e(i, j, k - 1).y()) / h2;
                    let dz_ex = (e(i, j, k + 1).x() - e(i, j, k - 1).x()) / h2;
                    let dx_ez = (e(i + 1, j, k).z() - e(i - 1, j, k).z()) / h2;
                    let dx_ey = (e(i + 1, j, k).y() - e(i - 1, j, k).y()) / h2;
                    let dy_ex = (e(i, j + 1, k).x() - e(i, j - 1, k).x()) / h2;
                    worst = worst
                        .max((dy_ez - dz_ey).abs())
                        .max((dz_ex - dx_ez).abs())
                        .max((dx_ey - dy_ex).abs());
                }
            }
        }
        worst
    }

    /// Write `<name>.bin` (little-endian f64, row-major, components
    /// interleaved) and `<name>.json` (dims, spacing, origin, field name).
    pub fn export(&self, dir: &Path, name: &str, field: GridQuantity) -> Result<()> {
        let (values, components): (Vec<f64>, usize) = match field {
            GridQuantity::Density => (self.rho.clone(), 1),
            GridQuantity::Potential => (self.potential.clone(), 1),
            GridQuantity::Field => (self.e_field.iter().flat_map(|e| e.0).collect(), 3),
        };
        if values.len() != self.spec.len() * components {
            return Err(validation(format!("grid quantity `{}` is not filled", field.name())));
        }
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in &values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(dir.join(format!("{name}.bin")), bytes)?;
        let header = serde_json::json!({
            "field": field.name(),
            "dims": self.spec.dims,
            "spacing": self.spec.spacing,
            "origin": self.spec.origin.0,
            "components": components,
            "dtype": "f64",
            "byte_order": "little-endian",
            "layout": "row-major, last axis fastest",
        });
        fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridQuantity {
    Density,
    Potential,
    Field,
}

impl GridQuantity {
    pub fn name(self) -> &'static str {
        match self {
            GridQuantity::Density => "rho",
            GridQuantity::Potential => "phi",
            GridQuantity::Field => "e_field",
        }
    }
}

/// Cloud-in-cell deposition of the particle weights.
pub fn grid_deposit(ensemble: &Ensemble, spec: &GridSpec) -> Result<FieldGrid> {
    deposit_weighted(ensemble, spec, |p| p.w)
}

/// Cloud-in-cell deposition of `weight(p)` per particle.
///
/// Scatter list of one particle block: `(node, weight)` pairs, then the
/// out-of-box mass and count, then the block's total weight.
type BlockScatter = (Vec<(usize, f64)>, f64, usize, f64);

/// Blocks of particles build scatter lists in parallel; the lists are applied
/// in block order so the sums do not depend on the thread count.
pub fn deposit_weighted<F>(ensemble: &Ensemble, spec: &GridSpec, weight: F) -> Result<FieldGrid>
where
    F: Fn(&Particle) -> f64 + Sync + Send,
{
    spec.validate()?;
    let mut grid = FieldGrid::empty(*spec);
    let inv_vol = 1.0 / spec.cell_volume();
    let lists: Vec<BlockScatter> = ensemble
        .particles
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut scatter = Vec::with_capacity(chunk.len() * 8);
            let (mut out_mass, mut out_count, mut total) = (0.0, 0usize, 0.0);
            for p in chunk {
                let w = weight(p);
                total += w;
                match spec.stencil(p.x) {
                    Some((base, frac)) => {
                        for (idx, c) in spec.stencil_entries(base, frac) {
                            scatter.push((idx, w * c));
                        }
                    }
                    None => {
                        out_mass += w;
                        out_count += 1;
                    }
                }
            }
            (scatter, out_mass, out_count, total)
        })
        .collect();
    for (scatter, out_mass, out_count, total) in lists {
        for (idx, m) in scatter {
            grid.rho[idx] += m * inv_vol;
        }
        grid.outside_mass += out_mass;
        grid.outside_count += out_count;
        grid.total_mass += total;
    }
    Ok(grid)
}

/// Trilinear interpolation of the field; queries off the grid use the
/// monopole `M x / (4 pi |x|^3)` with the total deposited mass.
pub fn interpolate_field(grid: &FieldGrid, x: Vec3) -> Vec3 {
    match grid.spec.stencil(x) {
        Some((base, frac)) if grid.has_field() => {
            let mut acc = Vec3::ZERO;
            for (idx, c) in grid.spec.stencil_entries(base, frac) {
                acc += grid.e_field[idx] * c;
            }
            acc
        }
        Some(_) => Vec3::ZERO,
        None => {
            let r2 = x.norm_sq();
            if r2 == 0.0 {
                Vec3::ZERO
            } else {
                x * (grid.total_mass / (4.0 * PI * r2 * r2.sqrt()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(x: Vec3, w: f64) -> Ensemble {
        Ensemble::new(vec![Particle::new(x, Vec3::ZERO, w, 1.0)], 0.0, 0)
    }

    fn spec() -> GridSpec {
        GridSpec { origin: Vec3::ZERO, spacing: 0.5, dims: [4, 5, 6] }
    }

    #[test]
    fn node_particle_fills_one_cell() {
        let s = spec();
        let g = grid_deposit(&one(s.node(1, 2, 3), 2.0), &s).unwrap();
        let idx = s.index(1, 2, 3);
        assert_eq!(g.rho[idx] * s.cell_volume(), 2.0);
        assert_eq!(g.rho.iter().filter(|&&r| r != 0.0).count(), 1);
    }

    #[test]
    fn corner_particle_splits_eight_ways() {
        let s = spec();
        let x = s.node(1, 1, 1) + Vec3::new(0.25, 0.25, 0.25);
        let g = grid_deposit(&one(x, 1.0), &s).unwrap();
        let nonzero: Vec<f64> = g.rho.iter().copied().filter(|&r| r != 0.0).collect();
        assert_eq!(nonzero.len(), 8);
        for r in nonzero {
            assert_eq!(r * s.cell_volume(), 0.125);
        }
    }

    #[test]
    fn outside_particles_are_counted() {
        let s = spec();
        let g = grid_deposit(&one(Vec3::new(-1.0, 0.0, 0.0), 3.0), &s).unwrap();
        assert_eq!(g.outside_count, 1);
        assert_eq!(g.outside_mass, 3.0);
        assert_eq!(g.grid_mass(), 0.0);
    }

    #[test]
    fn last_node_is_inside() {
        let s = spec();
        let g = grid_deposit(&one(s.node(3, 4, 5), 1.0), &s).unwrap();
        assert_eq!(g.outside_count, 0);
        assert_eq!(g.rho[s.index(3, 4, 5)] * s.cell_volume(), 1.0);
    }

    #[test]
    fn degenerate_spacing_is_rejected() {
        let mut s = spec();
        s.spacing = 0.0;
        assert!(grid_deposit(&one(Vec3::ZERO, 1.0), &s).is_err());
        s.spacing = 0.5;
        s.dims = [1, 4, 4];
        assert!(grid_deposit(&one(Vec3::ZERO, 1.0), &s).is_err());
    }

    fn linear_grid() -> FieldGrid {
        let s = spec();
        let mut g = FieldGrid::empty(s);
        g.e_field = vec![Vec3::ZERO; s.len()];
        for i in 0..4 {
            for j in 0..5 {
                for k in 0..6 {
                    let x = s.node(i, j, k);
                    g.e_field[s.index(i, j, k)] =
                        Vec3::new(1.0 + 2.0 * x.x() - x.z(), 3.0 * x.y(), x.x() + x.y() + x.z());
                }
            }
        }
        g
    }

    #[test]
    fn interpolation_identities() {
        let g = linear_grid();
        let s = g.spec;
        assert_eq!(interpolate_field(&g, s.node(2, 3, 1)), g.e_field[s.index(2, 3, 1)]);
        let x = Vec3::new(0.37, 1.21, 0.93);
        let f = interpolate_field(&g, x);
        let exact = Vec3::new(1.0 + 2.0 * x.x() - x.z(), 3.0 * x.y(), x.x() + x.y() + x.z());
        assert!((f - exact).norm() < 1e-13);
    }

    #[test]
    fn far_query_is_monopole() {
        let mut g = linear_grid();
        g.total_mass = 2.0;
        let x = Vec3::new(30.0, -40.0, 0.0);
        let f = interpolate_field(&g, x);
        let expect = x * (2.0 / (4.0 * PI * 50.0f64.powi(3)));
        assert!((f - expect).norm() < 1e-18);
    }

    #[test]
    fn export_writes_header_and_payload() {
        let g = linear_grid();
        let dir = tempfile::tempdir().unwrap();
        g.export(dir.path(), "efield", GridQuantity::Field).unwrap();
        let bytes = fs::read(dir.path().join("efield.bin")).unwrap();
        assert_eq!(bytes.len(), g.spec.len() * 3 * 8);
        let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
        assert_eq!(first, g.e_field[0].x());
        let header: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("efield.json")).unwrap()).unwrap();
        assert_eq!(header["dims"], serde_json::json!([4, 5, 6]));
        assert!(g.export(dir.path(), "phi", GridQuantity::Potential).is_err());
    }
}
