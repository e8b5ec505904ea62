//! Pipeline configuration: one document holding every stage default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::fem::MassMode;
use crate::synthesis::SynthesisParams;
use crate::topology::ValidityThresholds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Cells per axis of the tetrahedralization lattice.
    pub voxel_resolution: usize,
    /// Cells per axis of the lattice the thickness SDF is sampled on.
    pub thickness_resolution: usize,
    pub genus_max: i64,
    pub thickness_min: f64,
    /// Retained eigenvalues must be at least `-spectrum_tolerance · λ_max`.
    pub spectrum_tolerance: f64,
    /// Number of non-rigid modes solved per object.
    pub modes: usize,
    pub krylov_factor: usize,
    pub block_size: usize,
    pub max_restarts: usize,
    pub residual_tol: f64,
    pub rigid_tol: f64,
    /// Negative shift `σ = -shift_factor · tr(K)/tr(M)` unless `shift` is set.
    pub shift_factor: f64,
    pub shift: Option<f64>,
    pub mass_mode: MassMode,
    pub sample_rate: u32,
    pub duration: f64,
    pub peak: f64,
    /// Overrides the material's Rayleigh coefficients when set.
    pub rayleigh_alpha: Option<f64>,
    pub rayleigh_beta: Option<f64>,
    pub hollow_thickness_range: (f64, f64),
    pub hollow_resolution: usize,
    pub hollow_max_resolution: usize,
    /// Material for objects without a class label.
    pub default_material: String,
    /// Material used for the spectrum stage of stand-alone validation.
    pub validation_material: String,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            voxel_resolution: 64,
            thickness_resolution: 64,
            genus_max: 3,
            thickness_min: 0.05,
            spectrum_tolerance: 1e-8,
            modes: 64,
            krylov_factor: 4,
            block_size: 8,
            max_restarts: 200,
            residual_tol: 1e-8,
            rigid_tol: 1e-6,
            shift_factor: 1e-3,
            shift: None,
            mass_mode: MassMode::Consistent,
            sample_rate: 32_000,
            duration: 1.0,
            peak: 0.9,
            rayleigh_alpha: None,
            rayleigh_beta: None,
            hollow_thickness_range: (0.3, 0.7),
            hollow_resolution: 64,
            hollow_max_resolution: 128,
            default_material: "steel".into(),
            validation_material: "steel".into(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        use crate::geometry::voxel::{MAX_RESOLUTION, MIN_RESOLUTION};
        for (name, r) in [
            ("voxel_resolution", self.voxel_resolution),
            ("thickness_resolution", self.thickness_resolution),
            ("hollow_resolution", self.hollow_resolution),
            ("hollow_max_resolution", self.hollow_max_resolution),
        ] {
            if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&r) {
                return fail(format!("{name} {r} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"));
            }
        }
        if self.hollow_max_resolution < self.hollow_resolution {
            return fail("hollow_max_resolution below hollow_resolution".into());
        }
        if self.genus_max < 0 {
            return fail("genus_max must be non-negative".into());
        }
        if !(self.thickness_min >= 0.0) {
            return fail("thickness_min must be non-negative".into());
        }
        if self.modes == 0 || self.krylov_factor < 2 || self.block_size == 0 {
            return fail("modes, krylov_factor ≥ 2 and block_size must be positive".into());
        }
        for (name, v) in [
            ("spectrum_tolerance", self.spectrum_tolerance),
            ("residual_tol", self.residual_tol),
            ("rigid_tol", self.rigid_tol),
            ("shift_factor", self.shift_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive"));
            }
        }
        if let Some(s) = self.shift {
            if !(s < 0.0) {
                return fail("shift must be negative".into());
            }
        }
        if self.sample_rate == 0 || !(self.duration > 0.0) || !(self.peak > 0.0 && self.peak <= 1.0) {
            return fail("sample_rate, duration must be positive and peak in (0, 1]".into());
        }
        for v in [self.rayleigh_alpha, self.rayleigh_beta].into_iter().flatten() {
            if !(v >= 0.0) {
                return fail("Rayleigh coefficients must be non-negative".into());
            }
        }
        let (lo, hi) = self.hollow_thickness_range;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return fail(format!("hollow_thickness_range ({lo}, {hi}) must satisfy 0 < lo ≤ hi < 1"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical (sorted-key, compact) JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }

    pub fn thresholds(&self) -> ValidityThresholds {
        ValidityThresholds {
            genus_max: self.genus_max,
            thickness_min: self.thickness_min,
            thickness_resolution: self.thickness_resolution,
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            krylov_factor: self.krylov_factor,
            block_size: self.block_size,
            max_restarts: self.max_restarts,
            residual_tol: self.residual_tol,
            rigid_tol: self.rigid_tol,
            shift: self.shift,
            shift_factor: self.shift_factor,
            ..EigenOptions::default()
        }
    }

    pub fn synthesis_params(&self) -> SynthesisParams {
        SynthesisParams { sample_rate: self.sample_rate, duration: self.duration, peak: self.peak }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// 64-bit seed derived from a base seed and a label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let d = Sha256::digest(format!("{seed}:{label}").as_bytes());
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_hash_is_stable() {
        let c = PipelineConfig::default();
        c.check().unwrap();
        assert_eq!(c.hash(), PipelineConfig::default().hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn key_order_does_not_change_the_hash() {
        let a = PipelineConfig::from_json(r#"{"modes": 32, "seed": 4}"#).unwrap();
        let b = PipelineConfig::from_json(r#"{"seed": 4, "modes": 32}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        assert!(PipelineConfig::from_json(r#"{"mode": 32}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"voxel_resolution": 0}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"shift": 1.0}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"hollow_thickness_range": [0.7, 0.3]}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"mass_mode": "lumped"}"#).is_ok());
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_eq!(derive_seed(1, "a"), derive_seed(1, "a"));
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }
}
