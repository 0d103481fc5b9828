//! Field evaluators driven by the pusher.
//!
//! Each evaluator freezes its sources at `rebuild` and is then queried at
//! the current particle positions until the next rebuild.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::field::direct::direct_field_energy;
use crate::field::grid::{grid_deposit, interpolate_field, FieldGrid, GridSpec};
use crate::field::poisson::PoissonSolver;
use crate::field::radial::SmoothShellField;
use crate::kinetics::Ensemble;
use crate::vec3::Vec3;

/// Time-independent external fields used for integrator tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyticField {
    Zero,
    Constant { e: [f64; 3] },
    /// Outward field of a fixed charge `mass` at the origin.
    PointCharge { mass: f64 },
    /// In-plane field `strength * x_planar / (|x_planar|^2 + core^2)`.
    PlanarLog { strength: f64, core: f64 },
}

impl AnalyticField {
    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticField::Zero => Ok(()),
            AnalyticField::Constant { e } => {
                if Vec3(*e).is_finite() {
                    Ok(())
                } else {
                    Err(validation("constant field must be finite"))
                }
            }
            AnalyticField::PointCharge { mass } => {
                if mass.is_finite() {
                    Ok(())
                } else {
                    Err(validation("point charge must be finite"))
                }
            }
            AnalyticField::PlanarLog { strength, core } => {
                if strength.is_finite() && core.is_finite() && *core >= 0.0 {
                    Ok(())
                } else {
                    Err(validation("planar-log field needs finite strength and nonnegative core"))
                }
            }
        }
    }

    pub fn field(&self, x: Vec3) -> Vec3 {
        match *self {
            AnalyticField::Zero => Vec3::ZERO,
            AnalyticField::Constant { e } => Vec3(e),
            AnalyticField::PointCharge { mass } => {
                let r2 = x.norm_sq();
                if r2 == 0.0 {
                    Vec3::ZERO
                } else {
                    x * (mass / (4.0 * PI * r2 * r2.sqrt()))
                }
            }
            AnalyticField::PlanarLog { strength, core } => {
                let d = x.x() * x.x() + x.y() * x.y() + core * core;
                if d == 0.0 {
                    Vec3::ZERO
                } else {
                    Vec3::new(x.x(), x.y(), 0.0) * (strength / d)
                }
            }
        }
    }

    /// Potential energy per unit weight, `E = -grad V`.
    pub fn potential(&self, x: Vec3) -> f64 {
        match *self {
            AnalyticField::Zero => 0.0,
            AnalyticField::Constant { e } => -Vec3(e).dot(x),
            AnalyticField::PointCharge { mass } => {
                let r = x.norm();
                if r == 0.0 {
                    0.0
                } else {
                    mass / (4.0 * PI * r)
                }
            }
            AnalyticField::PlanarLog { strength, core } => {
                let d = x.x() * x.x() + x.y() * x.y() + core * core;
                -0.5 * strength * d.ln()
            }
        }
    }
}

/// Backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Radial,
    Direct,
    Grid,
    Analytic,
}

pub trait FieldEvaluator: Send + Sync {
    /// Freeze the sources at the ensemble's current state.
    fn rebuild(&mut self, ensemble: &Ensemble) -> Result<()>;

    /// Field on each particle at its current position, in ensemble order.
    fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3>;

    /// Field energy of the ensemble. With `current` set the caller
    /// guarantees the last rebuild used the present positions, so cached
    /// work may be reused.
    fn field_energy(&self, ensemble: &Ensemble, current: bool) -> Result<f64>;
}

pub struct RadialEvaluator {
    shells: SmoothShellField,
}

impl RadialEvaluator {
    pub fn new(shell_width: f64) -> Result<Self> {
        Ok(RadialEvaluator { shells: SmoothShellField::new(shell_width)? })
    }
}

impl FieldEvaluator for RadialEvaluator {
    fn rebuild(&mut self, ensemble: &Ensemble) -> Result<()> {
        self.shells.rebuild(ensemble);
        Ok(())
    }

    fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3> {
        self.shells.field_on_particles(ensemble)
    }

    fn field_energy(&self, ensemble: &Ensemble, current: bool) -> Result<f64> {
        if current {
            return Ok(self.shells.energy());
        }
        let mut fresh = SmoothShellField::new(self.shells.width)?;
        fresh.rebuild(ensemble);
        Ok(fresh.energy())
    }
}

pub struct DirectEvaluator {
    softening: f64,
    sources: Vec<(Vec3, f64)>,
}

impl DirectEvaluator {
    pub fn new(softening: f64) -> Result<Self> {
        if !(softening >= 0.0 && softening.is_finite()) {
            return Err(validation(format!("softening must be nonnegative, got {softening}")));
        }
        Ok(DirectEvaluator { softening, sources: Vec::new() })
    }
}

impl FieldEvaluator for DirectEvaluator {
    fn rebuild(&mut self, ensemble: &Ensemble) -> Result<()> {
        self.sources = ensemble.particles.iter().map(|p| (p.x, p.w)).collect();
        Ok(())
    }

    fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3> {
        let eps2 = self.softening * self.softening;
        ensemble
            .particles
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut acc = Vec3::ZERO;
                for (j, &(y, w)) in self.sources.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let d = p.x - y;
                    let r2 = d.norm_sq() + eps2;
                    acc += d * (w / (r2 * r2.sqrt()));
                }
                acc / (4.0 * PI)
            })
            .collect()
    }

    fn field_energy(&self, ensemble: &Ensemble, _current: bool) -> Result<f64> {
        Ok(direct_field_energy(ensemble, self.softening))
    }
}

pub struct GridEvaluator {
    solver: PoissonSolver,
    grid: FieldGrid,
}

impl GridEvaluator {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        Ok(GridEvaluator { solver: PoissonSolver::new(spec)?, grid: FieldGrid::empty(*spec) })
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.grid
    }

    /// `-(1/2) sum rho phi dV`, equal to `(1/2) int |E|^2` over all space.
    fn energy_of(grid: &FieldGrid) -> f64 {
        let s: f64 = grid.rho.iter().zip(&grid.potential).map(|(r, p)| r * p).sum();
        -0.5 * s * grid.spec.cell_volume()
    }
}

impl FieldEvaluator for GridEvaluator {
    fn rebuild(&mut self, ensemble: &Ensemble) -> Result<()> {
        let mut g = grid_deposit(ensemble, self.solver.spec())?;
        self.solver.solve(&mut g)?;
        self.grid = g;
        Ok(())
    }

    fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3> {
        ensemble.particles.par_iter().map(|p| interpolate_field(&self.grid, p.x)).collect()
    }

    fn field_energy(&self, ensemble: &Ensemble, current: bool) -> Result<f64> {
        if current {
            return Ok(Self::energy_of(&self.grid));
        }
        let mut g = grid_deposit(ensemble, self.solver.spec())?;
        self.solver.solve(&mut g)?;
        Ok(Self::energy_of(&g))
    }
}

pub struct AnalyticEvaluator {
    pub field: AnalyticField,
}

impl FieldEvaluator for AnalyticEvaluator {
    fn rebuild(&mut self, _ensemble: &Ensemble) -> Result<()> {
        Ok(())
    }

    fn field_on_particles(&self, ensemble: &Ensemble) -> Vec<Vec3> {
        ensemble.particles.par_iter().map(|p| self.field.field(p.x)).collect()
    }

    /// External potential energy `sum w V(x)`.
    fn field_energy(&self, ensemble: &Ensemble, _current: bool) -> Result<f64> {
        Ok(crate::reduce::block_sum(&ensemble.particles, |p| p.w * self.field.potential(p.x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Particle;

    #[test]
    fn analytic_potentials_match_fields() {
        let fields = [
            AnalyticField::Constant { e: [0.3, -1.0, 2.0] },
            AnalyticField::PointCharge { mass: 1.5 },
            AnalyticField::PlanarLog { strength: 0.7, core: 0.2 },
        ];
        let x = Vec3::new(0.4, -0.9, 0.3);
        let h = 1e-6;
        for f in fields {
            let e = f.field(x);
            for a in 0..3 {
                let mut up = x;
                up.0[a] += h;
                let mut dn = x;
                dn.0[a] -= h;
                let fd = -(f.potential(up) - f.potential(dn)) / (2.0 * h);
                assert!((fd - e.0[a]).abs() < 1e-8, "{f:?}");
            }
        }
    }

    #[test]
    fn direct_evaluator_excludes_self_and_freezes_sources() {
        let mut e = Ensemble::new(
            vec![
                Particle::new(Vec3::ZERO, Vec3::ZERO, 1.0, 1.0),
                Particle::new(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO, 1.0, 1.0),
            ],
            0.0,
            0,
        );
        let mut d = DirectEvaluator::new(0.0).unwrap();
        d.rebuild(&e).unwrap();
        let f = d.field_on_particles(&e);
        assert!((f[1].x() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        e.particles[1].x = Vec3::new(2.0, 0.0, 0.0);
        let f = d.field_on_particles(&e);
        assert!((f[1].x() - 1.0 / (16.0 * PI)).abs() < 1e-16);
    }
}
