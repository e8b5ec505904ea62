//! Material library and class-driven material assignment.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MATERIALS_JSON: &str = include_str!("../data/materials.json");
const CLASS_MATERIALS_JSON: &str = include_str!("../data/class_materials.json");

/// Isotropic linear-elastic material with Rayleigh damping `C = αM + βK`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    /// kg/m³
    #[serde(rename = "rho")]
    pub density: f64,
    /// Pa
    #[serde(rename = "E")]
    pub youngs_modulus: f64,
    #[serde(rename = "nu")]
    pub poisson_ratio: f64,
    /// 1/s
    #[serde(rename = "alpha")]
    pub rayleigh_alpha: f64,
    /// s
    #[serde(rename = "beta")]
    pub rayleigh_beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MaterialSpec {
    pub fn new(
        name: &str,
        density: f64,
        youngs_modulus: f64,
        poisson_ratio: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let m = MaterialSpec {
            name: name.to_string(),
            density,
            youngs_modulus,
            poisson_ratio,
            rayleigh_alpha: alpha,
            rayleigh_beta: beta,
            note: None,
        };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.density > 0.0
            && self.youngs_modulus > 0.0
            && self.poisson_ratio > 0.0
            && self.poisson_ratio < 0.5
            && self.rayleigh_alpha >= 0.0
            && self.rayleigh_beta >= 0.0
            && [self.density, self.youngs_modulus, self.rayleigh_alpha, self.rayleigh_beta]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("material '{}' has out-of-range constants", self.name)))
        }
    }

    pub fn with_damping(mut self, alpha: f64, beta: f64) -> Result<Self> {
        self.rayleigh_alpha = alpha;
        self.rayleigh_beta = beta;
        self.check()?;
        Ok(self)
    }
}

/// Materials plus the class → plausible-materials table.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialBank {
    materials: Vec<MaterialSpec>,
    classes: BTreeMap<String, Vec<String>>,
}

impl MaterialBank {
    /// The bundled ten-entry library and default class table.
    pub fn builtin() -> Self {
        Self::from_json(MATERIALS_JSON, CLASS_MATERIALS_JSON).expect("bundled material tables are valid")
    }

    pub fn from_json(materials: &str, classes: &str) -> Result<Self> {
        let materials: Vec<MaterialSpec> = serde_json::from_str(materials)?;
        let classes: BTreeMap<String, Vec<String>> = serde_json::from_str(classes)?;
        Self::new(materials, classes)
    }

    pub fn from_files(materials: &Path, classes: &Path) -> Result<Self> {
        let m = std::fs::read_to_string(materials).map_err(|e| Error::io(materials, e))?;
        let c = std::fs::read_to_string(classes).map_err(|e| Error::io(classes, e))?;
        Self::from_json(&m, &c)
    }

    pub fn new(materials: Vec<MaterialSpec>, classes: BTreeMap<String, Vec<String>>) -> Result<Self> {
        for (i, m) in materials.iter().enumerate() {
            m.check()?;
            if materials[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::Config(format!("duplicate material '{}'", m.name)));
            }
        }
        for (class, names) in &classes {
            if names.is_empty() {
                return Err(Error::Config(format!("class '{class}' lists no materials")));
            }
            for n in names {
                if !materials.iter().any(|m| &m.name == n) {
                    return Err(Error::Config(format!("class '{class}' names unknown material '{n}'")));
                }
            }
        }
        Ok(MaterialBank { materials, classes })
    }

    pub fn materials(&self) -> &[MaterialSpec] {
        &self.materials
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.classes.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn candidates(&self, class: &str) -> Result<&[String]> {
        self.classes.get(class).map(Vec::as_slice).ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&MaterialSpec> {
        self.materials.iter().find(|m| m.name == name).ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    /// Uniform draw from the class's material list, deterministic in `seed`.
    pub fn assign(&self, class: &str, seed: u64) -> Result<&MaterialSpec> {
        let names = self.candidates(class)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pick = rng.random_range(0..names.len());
        self.get(&names[pick])
    }
}

/// The bundled material library.
pub fn library() -> Vec<MaterialSpec> {
    MaterialBank::builtin().materials
}

/// Draws a material for `category` from the bundled class table.
pub fn assign_material(category: &str, seed: u64) -> Result<MaterialSpec> {
    MaterialBank::builtin().assign(category, seed).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::lame_parameters;

    #[test]
    fn library_has_ten_valid_entries() {
        let lib = library();
        let names: Vec<&str> = lib.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "wood",
                "plastic",
                "ceramic",
                "glass",
                "steel",
                "copper",
                "aluminum",
                "concrete",
                "stone",
                "polycarbonate"
            ]
        );
        for m in &lib {
            assert!(m.poisson_ratio > 0.0 && m.poisson_ratio < 0.5);
            let l = lame_parameters(m.youngs_modulus, m.poisson_ratio).unwrap();
            assert!(l.lambda.is_finite() && l.lambda > 0.0 && l.mu > 0.0);
        }
        let steel = MaterialBank::builtin().get("steel").unwrap().clone();
        assert_eq!((steel.density, steel.youngs_modulus, steel.poisson_ratio), (7850.0, 200e9, 0.3));
    }

    #[test]
    fn assignment_is_deterministic_and_in_table() {
        let a = assign_material("mug", 7).unwrap();
        assert_eq!(a, assign_material("mug", 7).unwrap());
        for seed in 0..200 {
            let m = assign_material("mug", seed).unwrap();
            assert!(["ceramic", "glass", "steel", "plastic"].contains(&m.name.as_str()));
        }
        assert!(matches!(assign_material("unknown-class", 1), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn bad_tables_are_rejected() {
        let bad = r#"[{"name":"x","rho":1.0,"E":1.0,"nu":0.5,"alpha":0.0,"beta":0.0}]"#;
        assert!(MaterialBank::from_json(bad, "{}").is_err());
        let ok = r#"[{"name":"x","rho":1.0,"E":1.0,"nu":0.3,"alpha":0.0,"beta":0.0}]"#;
        assert!(MaterialBank::from_json(ok, r#"{"c":["y"]}"#).is_err());
        assert!(MaterialBank::from_json(ok, r#"{"c":["x"]}"#).is_ok());
    }
}
