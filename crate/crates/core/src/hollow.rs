//! Hollow counterparts of solid objects: keep the lattice cells whose signed
//! distance lies in `(t · s_min, 0)`, then tetrahedralize the shell.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_distance, voxel_to_tet, Lattice, SdfGrid, SurfaceMesh, TetMesh, VoxelGrid};

pub const THICKNESS_RANGE: (f64, f64) = (0.3, 0.7);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub thickness_ratio: f64,
    pub resolution: usize,
    /// Upper bound for automatic resolution doubling when the shell
    /// disconnects.
    pub max_resolution: usize,
}

impl ShellSpec {
    pub fn new(thickness_ratio: f64, resolution: usize) -> Result<Self> {
        let s = ShellSpec { thickness_ratio, resolution, max_resolution: resolution.max(128) };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if !(self.thickness_ratio > 0.0 && self.thickness_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "thickness ratio must lie in (0, 1), got {}",
                self.thickness_ratio
            )));
        }
        if self.resolution == 0 || self.max_resolution < self.resolution {
            return Err(Error::InvalidArgument("invalid shell resolution bounds".into()));
        }
        Ok(())
    }
}

/// Uniform draw on `[0.3, 0.7]`, deterministic per seed.
pub fn sample_thickness(seed: u64) -> f64 {
    sample_thickness_in(seed, THICKNESS_RANGE)
}

pub fn sample_thickness_in(seed: u64, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).random();
    lo + (hi - lo) * u
}

/// Cell occupied iff `t · s_min < S(P) < 0` at its center.
pub fn hollow_shell(sdf: &SdfGrid, t: f64) -> Result<VoxelGrid> {
    let s_min = sdf
        .s_min()
        .filter(|&s| s < 0.0)
        .ok_or_else(|| Error::Degenerate("signed distance field has no interior".into()))?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("thickness ratio must lie in (0, 1), got {t}")));
    }
    let bound = t * s_min;
    Ok(VoxelGrid { lattice: sdf.lattice, occupancy: sdf.values.iter().map(|&s| bound < s && s < 0.0).collect() })
}

/// Cells with negative signed distance.
pub fn solid_occupancy(sdf: &SdfGrid) -> VoxelGrid {
    VoxelGrid { lattice: sdf.lattice, occupancy: sdf.values.iter().map(|&s| s < 0.0).collect() }
}

#[derive(Clone, Debug)]
pub struct HollowMesh {
    pub tet: TetMesh,
    pub shell: VoxelGrid,
    pub solid: VoxelGrid,
    pub thickness_ratio: f64,
    pub lattice_resolution: usize,
}

/// SDF → shell → tetrahedra, on the cell-center lattice tiling the bounding
/// cube of `solid`. The resolution doubles (up to `max_resolution`) while
/// the shell falls apart into several pieces.
pub fn hollow_tet_mesh(solid: &SurfaceMesh, spec: &ShellSpec) -> Result<HollowMesh> {
    spec.check()?;
    let bb = solid
        .bounding_box()
        .filter(|_| !solid.is_empty())
        .ok_or_else(|| Error::Degenerate("cannot hollow an empty mesh".into()))?;
    let mut resolution = spec.resolution;
    loop {
        let lattice = Lattice::cell_centers(bb.center(), bb.half_extent(), resolution)?;
        let sdf = signed_distance(solid, lattice)?;
        let shell = hollow_shell(&sdf, spec.thickness_ratio)?;
        let components = shell.component_count();
        if components == 1 {
            return Ok(HollowMesh {
                tet: voxel_to_tet(&shell)?,
                solid: solid_occupancy(&sdf),
                shell,
                thickness_ratio: spec.thickness_ratio,
                lattice_resolution: resolution,
            });
        }
        if resolution * 2 > spec.max_resolution {
            return Err(Error::ShellDisconnected { resolution, components });
        }
        resolution *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn thickness_draws() {
        assert_eq!(sample_thickness(9), sample_thickness(9));
        let n = 10_000;
        let mut sum = 0.0;
        for seed in 0..n {
            let t = sample_thickness(seed);
            assert!((0.3..=0.7).contains(&t));
            sum += t;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    fn radial_sdf(res: usize) -> SdfGrid {
        let lattice = Lattice::unit_cube(res).unwrap();
        let values = (0..lattice.len())
            .map(|i| {
                let p = lattice.point_at(i);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0
            })
            .collect();
        SdfGrid { lattice, values }
    }

    #[test]
    fn ball_shell_is_a_radial_band() {
        let sdf = radial_sdf(20);
        let s_min = sdf.s_min().unwrap();
        let shell = hollow_shell(&sdf, 0.5).unwrap();
        for i in 0..sdf.lattice.len() {
            let r = sdf.values[i] + 1.0;
            assert_eq!(shell.occupancy[i], r > 1.0 + 0.5 * s_min && r < 1.0, "r = {r}");
        }
    }

    #[test]
    fn shell_plus_core_is_the_solid() {
        let sdf = radial_sdf(16);
        let t = 0.4;
        let shell = hollow_shell(&sdf, t).unwrap();
        let solid = solid_occupancy(&sdf);
        let bound = t * sdf.s_min().unwrap();
        for i in 0..sdf.lattice.len() {
            let core = sdf.values[i] <= bound;
            assert_eq!(solid.occupancy[i] && !shell.occupancy[i], core);
        }
    }

    #[test]
    fn near_one_keeps_almost_everything() {
        let sdf = radial_sdf(16);
        let shell = hollow_shell(&sdf, 1.0 - 1e-12).unwrap();
        let solid = solid_occupancy(&sdf);
        let lost = solid.occupied_count() - shell.occupied_count();
        assert!(lost <= 8, "{lost}");
    }

    #[test]
    fn monotone_in_t() {
        let sdf = radial_sdf(16);
        let a = hollow_shell(&sdf, 0.3).unwrap();
        let b = hollow_shell(&sdf, 0.6).unwrap();
        assert!(a.occupancy.iter().zip(&b.occupancy).all(|(&x, &y)| !x || y));
    }

    #[test]
    fn errors() {
        let lattice = Lattice::unit_cube(2).unwrap();
        let outside = SdfGrid { lattice, values: vec![1.0; 8] };
        assert!(hollow_shell(&outside, 0.5).is_err());
        assert!(hollow_shell(&radial_sdf(4), 1.0).is_err());
        assert!(ShellSpec::new(0.0, 16).is_err());
    }

    #[test]
    fn hollow_ball_keeps_exterior() {
        let ball = shapes::icosphere(3, 1.0);
        let h = hollow_tet_mesh(&ball, &ShellSpec::new(0.5, 16).unwrap()).unwrap();
        assert_eq!(h.shell.exterior_layer(), h.solid.exterior_layer());
        assert!(h.tet.volume() < h.solid.volume());
        assert_eq!(h.shell.component_count(), 1);
    }
}
