//! Geometry-to-acoustics pipeline: validity filtering of closed surfaces,
//! voxel tetrahedralization, linear FEM, shift-invert modal analysis,
//! damped modal impact synthesis and dataset assembly.

pub mod config;
pub mod dataset;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod hollow;
pub mod material;
pub mod synthesis;
pub mod topology;

pub use config::{derive_seed, PipelineConfig};
pub use dataset::{
    build_corpus, build_hollow_counterparts, build_sample, verify_manifest, Manifest, SampleRecord, VerifyReport,
};
pub use eigen::{
    dense_reference_modes, frequency_hz, mass_normalize, mel_frequency_error, smallest_modes, EigenOptions, ModalModel,
};
pub use error::{Error, Result};
pub use fem::{assemble, lame_parameters, AssembledSystem, ElasticityModuli, MassMode, SymCsr};
pub use geometry::{SurfaceMesh, TetMesh};
pub use material::{assign_material, library, MaterialBank, MaterialSpec};
pub use topology::{ValidityReport, Verdict};
