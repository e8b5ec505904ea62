//! End-to-end sample construction and corpus manifests.
//!
//! Layout under an output directory:
//! `manifest_header.json`, `manifest.jsonl` (one record per line, sorted by
//! id) and `corpus/{id}/{surface.obj, mesh.node, mesh.ele, audio.wav,
//! record.json}` for every accepted sample.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{derive_seed, hex, PipelineConfig};
use crate::eigen::{smallest_modes, ModalModel};
use crate::error::{Error, Result};
use crate::fem::assemble;
use crate::geometry::io::{
    load_surface_mesh_auto, obj_string, parse_obj, parse_tet_mesh, read_tet_mesh, tet_mesh_strings,
};
use crate::geometry::{normalize, voxel_to_tet, voxelize, MeshFormat, NormalizationTransform, SurfaceMesh, TetMesh};
use crate::hollow::{hollow_tet_mesh, sample_thickness_in, ShellSpec};
use crate::material::{MaterialBank, MaterialSpec};
use crate::synthesis::{parse_wav, sample_count, synthesize, wav_bytes, SynthesisSummary};
use crate::topology::{validate_geometry, ValidityReport, RIGID_MODES};

pub const SCHEMA_VERSION: u32 = 1;
pub const HEADER_FILE: &str = "manifest_header.json";
pub const RECORDS_FILE: &str = "manifest.jsonl";
pub const LABELS_FILE: &str = "labels.json";
/// Objects are simulated at their normalized size (bounding cube `[-1, 1]³`,
/// read as metres); the normalization scale is not undone.
pub const UNITS: &str = "normalized";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_corpus: String,
    pub source_file: Option<String>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub tetrahedra: usize,
    pub volume: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub status: RecordStatus,
    pub rejection_stage: Option<String>,
    pub detail: Option<String>,
    /// Set when the record is usable but incomplete (fewer modes than
    /// configured, or a silent clip).
    pub degraded: Option<String>,
    pub class: Option<String>,
    pub material: Option<MaterialSpec>,
    pub surface_path: Option<String>,
    pub tet_node_path: Option<String>,
    pub tet_ele_path: Option<String>,
    pub audio_path: Option<String>,
    /// Reserved for a rendered view; never populated.
    pub image_path: Option<String>,
    pub modal: Option<ModalModel>,
    pub synthesis: Option<SynthesisSummary>,
    pub mesh_stats: Option<MeshStats>,
    pub normalization: Option<NormalizationTransform>,
    pub is_hollow: bool,
    pub thickness_ratio: Option<f64>,
    pub lattice_resolution: Option<usize>,
    pub parent_id: Option<String>,
    pub validity: ValidityReport,
    pub provenance: Provenance,
}

impl SampleRecord {
    pub fn is_accepted(&self) -> bool {
        self.status == RecordStatus::Accepted
    }

    fn files(&self) -> impl Iterator<Item = &String> {
        [&self.surface_path, &self.tet_node_path, &self.tet_ele_path, &self.audio_path].into_iter().flatten()
    }
}

/// File contents of an accepted sample.
#[derive(Clone, Debug)]
pub struct SampleArtifacts {
    pub surface_obj: String,
    pub node: String,
    pub ele: String,
    pub wav: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct SampleBuild {
    pub record: SampleRecord,
    pub artifacts: Option<SampleArtifacts>,
}

/// Result of the physical chain for one surface.
#[derive(Clone, Debug)]
pub struct ChainOutcome {
    pub report: ValidityReport,
    pub normalized: Option<SurfaceMesh>,
    pub transform: Option<NormalizationTransform>,
    pub tet: Option<TetMesh>,
    pub modal: Option<ModalModel>,
    pub degraded: Option<String>,
}

/// Solves the configured number of modes on a tet mesh, or as many as the
/// mesh supports (reported through the second value).
pub fn solve_modes(
    tet: &TetMesh,
    material: &MaterialSpec,
    config: &PipelineConfig,
) -> Result<(ModalModel, Option<String>)> {
    let system = assemble(tet, material, config.mass_mode)?;
    let available = system.n_dof.saturating_sub(RIGID_MODES);
    let k = config.modes.min(available);
    if k == 0 {
        return Err(Error::Degenerate(format!("{} DOF leave no elastic modes", system.n_dof)));
    }
    let modal = smallest_modes(&system, k, &config.eigen_options())?;
    let degraded = (k < config.modes).then(|| format!("only {k} of {} modes exist at this resolution", config.modes));
    Ok((modal, degraded))
}

/// normalize → geometric validity → voxelize → tetrahedralize → assemble →
/// modal solve → spectrum sanity.
pub fn run_chain(surface: &SurfaceMesh, material: &MaterialSpec, config: &PipelineConfig) -> ChainOutcome {
    run_chain_scaled(surface, material, config, 1.0)
}

/// As [`run_chain`], with the normalized object enlarged by `scale` before
/// the physics stages.
pub fn run_chain_scaled(
    surface: &SurfaceMesh,
    material: &MaterialSpec,
    config: &PipelineConfig,
    scale: f64,
) -> ChainOutcome {
    let mut out = ChainOutcome {
        report: ValidityReport::input_failure(""),
        normalized: None,
        transform: None,
        tet: None,
        modal: None,
        degraded: None,
    };
    let (normalized, transform) = match normalize(surface) {
        Ok(x) => x,
        Err(e) => {
            out.report = ValidityReport::input_failure(e.to_string());
            return out;
        }
    };
    out.report = validate_geometry(&normalized, &config.thresholds());
    out.normalized = Some(normalized);
    out.transform = Some(transform);
    if out.report.is_rejected() {
        return out;
    }
    let normalized = out.normalized.as_ref().unwrap();
    let tet = voxelize(normalized, config.voxel_resolution).and_then(|grid| {
        if grid.occupied_count() == 0 {
            return Err(Error::Degenerate(format!("no cell centers inside at resolution {}", config.voxel_resolution)));
        }
        let tet = voxel_to_tet(&grid)?;
        Ok(if scale == 1.0 { tet } else { tet.scaled(scale) })
    });
    let tet = match tet {
        Ok(t) => t,
        Err(e) => {
            out.report.fail_spectrum(e.to_string());
            return out;
        }
    };
    match solve_modes(&tet, material, config) {
        Ok((modal, degraded)) => {
            out.report.apply_spectrum(&modal, config.spectrum_tolerance);
            out.modal = Some(modal);
            out.degraded = degraded;
        }
        Err(e) => out.report.fail_spectrum(e.to_string()),
    }
    out.tet = Some(tet);
    out
}

/// Full validity verdict of a raw surface, with the spectrum stage run on the
/// configured validation material.
pub fn validate_mesh(surface: &SurfaceMesh, config: &PipelineConfig) -> Result<ChainOutcome> {
    let material = MaterialBank::builtin().get(&config.validation_material)?.clone();
    Ok(run_chain(surface, &material, config))
}

/// The material with the config's Rayleigh overrides applied.
pub fn effective_material(material: &MaterialSpec, config: &PipelineConfig) -> Result<MaterialSpec> {
    material.clone().with_damping(
        config.rayleigh_alpha.unwrap_or(material.rayleigh_alpha),
        config.rayleigh_beta.unwrap_or(material.rayleigh_beta),
    )
}

fn sample_paths(id: &str) -> [String; 5] {
    let d = format!("corpus/{id}");
    [
        format!("{d}/surface.obj"),
        format!("{d}/mesh.node"),
        format!("{d}/mesh.ele"),
        format!("{d}/audio.wav"),
        format!("{d}/record.json"),
    ]
}

/// Everything `build_sample` decides, without touching the file system.
pub struct SampleInput<'a> {
    pub id: &'a str,
    pub surface: &'a SurfaceMesh,
    pub material: &'a MaterialSpec,
    pub class: Option<&'a str>,
    pub source_corpus: &'a str,
    pub source_file: Option<&'a str>,
    pub seed: u64,
}

fn rejected_record(input: &SampleInput<'_>, config: &PipelineConfig, report: ValidityReport) -> SampleRecord {
    let (stage, detail) = match &report.verdict {
        crate::topology::Verdict::Rejected { reason, detail } => (Some(reason.to_string()), Some(detail.clone())),
        _ => (None, None),
    };
    SampleRecord {
        id: input.id.to_string(),
        status: RecordStatus::Rejected,
        rejection_stage: stage,
        detail,
        degraded: None,
        class: input.class.map(str::to_string),
        material: Some(input.material.clone()),
        surface_path: None,
        tet_node_path: None,
        tet_ele_path: None,
        audio_path: None,
        image_path: None,
        modal: None,
        synthesis: None,
        mesh_stats: None,
        normalization: None,
        is_hollow: false,
        thickness_ratio: None,
        lattice_resolution: None,
        parent_id: None,
        validity: report,
        provenance: Provenance {
            source_corpus: input.source_corpus.to_string(),
            source_file: input.source_file.map(str::to_string),
            seed: input.seed,
            config_hash: config.hash(),
        },
    }
}

fn finish_accepted(
    mut record: SampleRecord,
    surface: &SurfaceMesh,
    tet: &TetMesh,
    modal: ModalModel,
    material: &MaterialSpec,
    config: &PipelineConfig,
) -> Result<SampleBuild> {
    let (clip, summary) = synthesize(&modal, material, &config.synthesis_params())?;
    if clip.silent {
        record.degraded.get_or_insert_with(|| "no audible modes; silent clip".into());
    }
    let [surface_path, node_path, ele_path, audio_path, _] = sample_paths(&record.id);
    let (node, ele) = tet_mesh_strings(tet);
    let volume = tet.volume();
    record.status = RecordStatus::Accepted;
    record.surface_path = Some(surface_path);
    record.tet_node_path = Some(node_path);
    record.tet_ele_path = Some(ele_path);
    record.audio_path = Some(audio_path);
    record.modal = Some(modal);
    record.synthesis = Some(summary);
    record.mesh_stats = Some(MeshStats {
        vertices: tet.vertices.len(),
        tetrahedra: tet.tets.len(),
        volume,
        mass: volume * material.density,
    });
    Ok(SampleBuild {
        record,
        artifacts: Some(SampleArtifacts { surface_obj: obj_string(surface), node, ele, wav: wav_bytes(&clip) }),
    })
}

/// Runs the chain for one object. Physics failures become rejection records;
/// only invalid configuration is an error.
pub fn compute_sample(input: &SampleInput<'_>, config: &PipelineConfig) -> Result<SampleBuild> {
    config.check()?;
    let material = effective_material(input.material, config)?;
    let chain = run_chain(input.surface, &material, config);
    let input = SampleInput { material: &material, ..*input };
    let mut record = rejected_record(&input, config, chain.report.clone());
    record.normalization = chain.transform;
    if !chain.report.is_accepted() {
        return Ok(SampleBuild { record, artifacts: None });
    }
    record.degraded = chain.degraded.clone();
    record.lattice_resolution = Some(config.voxel_resolution);
    finish_accepted(
        record,
        chain.normalized.as_ref().unwrap(),
        chain.tet.as_ref().unwrap(),
        chain.modal.unwrap(),
        &material,
        config,
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn record_line(record: &SampleRecord) -> String {
    serde_json::to_string(record).expect("record serializes")
}

/// Writes the sample's files under `out_dir` (accepted samples only).
pub fn write_sample(out_dir: &Path, build: &SampleBuild) -> Result<()> {
    let Some(a) = &build.artifacts else {
        return Ok(());
    };
    let [surface, node, ele, audio, record] = sample_paths(&build.record.id);
    write_file(&out_dir.join(surface), a.surface_obj.as_bytes())?;
    write_file(&out_dir.join(node), a.node.as_bytes())?;
    write_file(&out_dir.join(ele), a.ele.as_bytes())?;
    write_file(&out_dir.join(audio), &a.wav)?;
    write_file(&out_dir.join(record), format!("{}\n", record_line(&build.record)).as_bytes())
}

/// Builds one sample and writes its files under `out_dir`.
pub fn build_sample(
    id: &str,
    surface: &SurfaceMesh,
    material: &MaterialSpec,
    config: &PipelineConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<SampleRecord> {
    let input = SampleInput { id, surface, material, class: None, source_corpus: "", source_file: None, seed };
    let build = compute_sample(&input, config)?;
    write_sample(out_dir, &build)?;
    Ok(build.record)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub accepted: usize,
    pub rejected: usize,
    pub hollow_accepted: usize,
    pub rejected_by_reason: BTreeMap<String, usize>,
}

impl Counts {
    pub fn tally(records: &[SampleRecord]) -> Self {
        let mut c = Counts::default();
        for r in records {
            if r.is_accepted() {
                c.accepted += 1;
                c.hollow_accepted += r.is_hollow as usize;
            } else {
                c.rejected += 1;
                let reason = r.rejection_stage.clone().unwrap_or_else(|| "unknown".into());
                *c.rejected_by_reason.entry(reason).or_default() += 1;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema_version: u32,
    pub source_corpus: String,
    pub seed: u64,
    pub units: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub record_count: usize,
    pub counts: Counts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<SampleRecord>,
}

impl Manifest {
    pub fn new(source_corpus: &str, config: &PipelineConfig, mut records: Vec<SampleRecord>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Manifest {
            header: ManifestHeader {
                schema_version: SCHEMA_VERSION,
                source_corpus: source_corpus.to_string(),
                seed: config.seed,
                units: UNITS.to_string(),
                config_hash: config.hash(),
                config: config.clone(),
                record_count: records.len(),
                counts: Counts::tally(&records),
            },
            records,
        }
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.header).expect("header serializes");
        s.push('\n');
        s.into_bytes()
    }

    pub fn records_bytes(&self) -> Vec<u8> {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&record_line(r));
            s.push('\n');
        }
        s.into_bytes()
    }

    /// SHA-256 over the header bytes followed by the record lines.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.header_bytes());
        h.update(self.records_bytes());
        hex(&h.finalize())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        write_file(&out_dir.join(RECORDS_FILE), &self.records_bytes())?;
        write_file(&out_dir.join(HEADER_FILE), &self.header_bytes())
    }

    pub fn read(out_dir: &Path) -> Result<Self> {
        let hp = out_dir.join(HEADER_FILE);
        let rp = out_dir.join(RECORDS_FILE);
        let header: ManifestHeader = serde_json::from_str(&fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?)?;
        let text = fs::read_to_string(&rp).map_err(|e| Error::io(&rp, e))?;
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(RECORDS_FILE, i + 1, e.to_string())))
            .collect::<Result<Vec<SampleRecord>>>()?;
        Ok(Manifest { header, records })
    }
}

/// Hash of the manifest files as stored on disk.
pub fn manifest_file_hash(out_dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in [HEADER_FILE, RECORDS_FILE] {
        let p = out_dir.join(name);
        h.update(fs::read(&p).map_err(|e| Error::io(&p, e))?);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Worker threads for sample-level parallelism; results do not depend
    /// on it.
    pub workers: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { workers: 1 }
    }
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Mesh files in `dir` with a supported extension, sorted by file name.
pub fn list_meshes(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && MeshFormat::from_path(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

fn sample_id(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn refuse_foreign_manifest(out_dir: &Path, config: &PipelineConfig) -> Result<()> {
    let hp = out_dir.join(HEADER_FILE);
    if !hp.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: ManifestHeader = serde_json::from_str(&text)?;
    if header.config_hash != config.hash() {
        return Err(Error::Config(format!(
            "{} was built with config {}, current config is {}; use a fresh output directory",
            hp.display(),
            header.config_hash,
            config.hash()
        )));
    }
    Ok(())
}

/// Builds every mesh in `input_dir` into `out_dir`. An optional
/// `labels.json` in the input directory maps file stems to object classes;
/// labelled objects draw their material from the class table, the rest use
/// `default_material`.
pub fn build_corpus(
    input_dir: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    opts: &BuildOptions,
) -> Result<Manifest> {
    config.check()?;
    refuse_foreign_manifest(out_dir, config)?;
    let bank = MaterialBank::builtin();
    let default_material = bank.get(&config.default_material)?.clone();
    let labels: BTreeMap<String, String> = {
        let p = input_dir.join(LABELS_FILE);
        if p.exists() {
            serde_json::from_str(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?
        } else {
            BTreeMap::new()
        }
    };
    let files = list_meshes(input_dir)?;
    let mut seen = BTreeSet::new();
    for f in &files {
        if !seen.insert(sample_id(f)) {
            return Err(Error::Config(format!("two input meshes map to sample id '{}'", sample_id(f))));
        }
    }
    let source_corpus = input_dir.file_name().and_then(|s| s.to_str()).unwrap_or("corpus").to_string();

    let builds: Vec<Result<SampleBuild>> = with_workers(opts.workers, || {
        files
            .par_iter()
            .map(|path| {
                let id = sample_id(path);
                let seed = derive_seed(config.seed, &id);
                let class = labels.get(&id).map(String::as_str);
                let material = match class {
                    Some(c) => bank.assign(c, seed)?.clone(),
                    None => default_material.clone(),
                };
                let file_name = path.file_name().and_then(|s| s.to_str()).map(str::to_string);
                let surface = match load_surface_mesh_auto(path) {
                    Ok(s) => s,
                    Err(Error::Io { path, source }) => return Err(Error::Io { path, source }),
                    Err(e) => {
                        let input = SampleInput {
                            id: &id,
                            surface: &SurfaceMesh::default(),
                            material: &material,
                            class,
                            source_corpus: &source_corpus,
                            source_file: file_name.as_deref(),
                            seed,
                        };
                        let record = rejected_record(&input, config, ValidityReport::input_failure(e.to_string()));
                        return Ok(SampleBuild { record, artifacts: None });
                    }
                };
                let input = SampleInput {
                    id: &id,
                    surface: &surface,
                    material: &material,
                    class,
                    source_corpus: &source_corpus,
                    source_file: file_name.as_deref(),
                    seed,
                };
                compute_sample(&input, config)
            })
            .collect()
    })?;
    let builds = builds.into_iter().collect::<Result<Vec<_>>>()?;

    let corpus_dir = out_dir.join("corpus");
    if corpus_dir.exists() {
        fs::remove_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
    }
    for b in &builds {
        write_sample(out_dir, b)?;
    }
    let manifest = Manifest::new(&source_corpus, config, builds.into_iter().map(|b| b.record).collect());
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Id of the hollow counterpart of `parent`.
pub fn hollow_id(parent: &str) -> String {
    format!("{parent}-hollow")
}

fn hollow_sample(parent: &SampleRecord, out_dir: &Path, config: &PipelineConfig, seed: u64) -> Result<SampleBuild> {
    let id = hollow_id(&parent.id);
    let surface_path =
        parent.surface_path.as_ref().ok_or_else(|| Error::Config(format!("record '{}' has no surface", parent.id)))?;
    let p = out_dir.join(surface_path);
    let surface = parse_obj(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?, surface_path)?;
    let material =
        parent.material.clone().ok_or_else(|| Error::Config(format!("record '{}' has no material", parent.id)))?;
    let sample_seed = derive_seed(seed, &format!("hollow/{}", parent.id));
    let t = sample_thickness_in(sample_seed, config.hollow_thickness_range);

    let mut record = parent.clone();
    record.id = id;
    record.parent_id = Some(parent.id.clone());
    record.provenance.seed = sample_seed;
    record.validity = parent.validity.geometry_passed();
    hollow_from_surface(record, &surface, &material, t, config)
}

fn hollow_from_surface(
    mut record: SampleRecord,
    surface: &SurfaceMesh,
    material: &MaterialSpec,
    t: f64,
    config: &PipelineConfig,
) -> Result<SampleBuild> {
    record.status = RecordStatus::Rejected;
    record.degraded = None;
    record.surface_path = None;
    record.tet_node_path = None;
    record.tet_ele_path = None;
    record.audio_path = None;
    record.modal = None;
    record.synthesis = None;
    record.mesh_stats = None;
    record.is_hollow = true;
    record.thickness_ratio = Some(t);
    record.provenance.config_hash = config.hash();

    let spec = ShellSpec {
        thickness_ratio: t,
        resolution: config.hollow_resolution,
        max_resolution: config.hollow_max_resolution,
    };
    let reject = |mut record: SampleRecord| {
        if let crate::topology::Verdict::Rejected { reason, detail } = &record.validity.verdict {
            record.rejection_stage = Some(reason.to_string());
            record.detail = Some(detail.clone());
        }
        Ok(SampleBuild { record, artifacts: None })
    };
    let hollow = match hollow_tet_mesh(surface, &spec) {
        Ok(h) => h,
        Err(e @ Error::ShellDisconnected { .. }) => {
            record.validity.reject_shell(e.to_string());
            return reject(record);
        }
        Err(e) => return Err(e),
    };
    record.lattice_resolution = Some(hollow.lattice_resolution);
    match solve_modes(&hollow.tet, material, config) {
        Ok((modal, degraded)) => {
            record.validity.apply_spectrum(&modal, config.spectrum_tolerance);
            if !record.validity.is_accepted() {
                return reject(record);
            }
            record.degraded = degraded;
            record.rejection_stage = None;
            record.detail = None;
            finish_accepted(record, surface, &hollow.tet, modal, material, config)
        }
        Err(e) => {
            record.validity.fail_spectrum(e.to_string());
            reject(record)
        }
    }
}

/// Hollows one object with thickness ratio `thickness` and writes its files
/// under `out_dir` when accepted. The solid must pass the geometric stages.
pub fn build_hollow_sample(
    input: &SampleInput<'_>,
    thickness: f64,
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<SampleRecord> {
    config.check()?;
    ShellSpec::new(thickness, config.hollow_resolution)?;
    let material = effective_material(input.material, config)?;
    let input = SampleInput { material: &material, ..*input };
    let (normalized, transform) = match normalize(input.surface) {
        Ok(x) => x,
        Err(e) => return Ok(rejected_record(&input, config, ValidityReport::input_failure(e.to_string()))),
    };
    let report = validate_geometry(&normalized, &config.thresholds());
    let mut record = rejected_record(&input, config, report.geometry_passed());
    record.normalization = Some(transform);
    if report.is_rejected() {
        let mut rejected = rejected_record(&input, config, report);
        rejected.normalization = Some(transform);
        rejected.is_hollow = true;
        rejected.thickness_ratio = Some(thickness);
        return Ok(rejected);
    }
    let build = hollow_from_surface(record, &normalized, &material, thickness, config)?;
    write_sample(out_dir, &build)?;
    Ok(build.record)
}

/// Adds hollow counterparts for a seeded `fraction` of the accepted solid
/// records of the corpus in `out_dir` and rewrites its manifest. Returns the
/// new records.
pub fn build_hollow_counterparts(
    out_dir: &Path,
    fraction: f64,
    seed: u64,
    config: &PipelineConfig,
    opts: &BuildOptions,
) -> Result<Vec<SampleRecord>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    config.check()?;
    let manifest = Manifest::read(out_dir)?;
    if manifest.header.config_hash != config.hash() {
        return Err(Error::Config("corpus was built with a different config".into()));
    }
    let mut solids: Vec<&SampleRecord> = manifest.records.iter().filter(|r| r.is_accepted() && !r.is_hollow).collect();
    solids.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "hollow-selection")));
    let take = (fraction * solids.len() as f64).round() as usize;
    let mut chosen: Vec<&SampleRecord> = solids.into_iter().take(take).collect();
    chosen.sort_by(|a, b| a.id.cmp(&b.id));

    let builds: Vec<Result<SampleBuild>> =
        with_workers(opts.workers, || chosen.par_iter().map(|p| hollow_sample(p, out_dir, config, seed)).collect())?;
    let builds = builds.into_iter().collect::<Result<Vec<_>>>()?;
    for b in &builds {
        write_sample(out_dir, b)?;
    }
    let new_ids: BTreeSet<&str> = builds.iter().map(|b| b.record.id.as_str()).collect();
    let mut records: Vec<SampleRecord> =
        manifest.records.iter().filter(|r| !new_ids.contains(r.id.as_str())).cloned().collect();
    let delta: Vec<SampleRecord> = builds.into_iter().map(|b| b.record).collect();
    records.extend(delta.iter().cloned());
    Manifest::new(&manifest.header.source_corpus, config, records).write(out_dir)?;
    Ok(delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: Option<String>,
    pub problem: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub records_checked: usize,
    pub findings: Vec<Finding>,
}

/// Re-checks a built corpus: manifest consistency, referenced files, WAV
/// headers, eigenvalue counts and parent links. Problems are reported, not
/// raised.
pub fn verify_manifest(out_dir: &Path) -> VerifyReport {
    let mut findings = Vec::new();
    let mut push = |id: Option<&str>, problem: String| findings.push(Finding { id: id.map(str::to_string), problem });
    let manifest = match Manifest::read(out_dir) {
        Ok(m) => m,
        Err(e) => {
            push(None, format!("manifest unreadable: {e}"));
            return VerifyReport { passed: false, records_checked: 0, findings };
        }
    };
    let h = &manifest.header;
    let config = &h.config;
    if h.config_hash != config.hash() {
        push(None, "header config hash does not match its config".into());
    }
    if h.record_count != manifest.records.len() {
        push(None, format!("header lists {} records, manifest has {}", h.record_count, manifest.records.len()));
    }
    if h.counts != Counts::tally(&manifest.records) {
        push(None, "header counts disagree with records".into());
    }
    let mut ids = BTreeSet::new();
    let accepted_solids: BTreeSet<&str> =
        manifest.records.iter().filter(|r| r.is_accepted() && !r.is_hollow).map(|r| r.id.as_str()).collect();
    for r in &manifest.records {
        let id = Some(r.id.as_str());
        if !ids.insert(r.id.as_str()) {
            push(id, "duplicate id".into());
        }
        if r.provenance.config_hash != h.config_hash {
            push(id, "config hash differs from the manifest".into());
        }
        if r.is_hollow {
            match &r.parent_id {
                Some(p) if accepted_solids.contains(p.as_str()) => {}
                _ => push(id, "hollow record without an accepted solid parent".into()),
            }
            let (lo, hi) = config.hollow_thickness_range;
            if !r.thickness_ratio.is_some_and(|t| (lo..=hi).contains(&t)) {
                push(id, "thickness ratio missing or out of range".into());
            }
        }
        if !r.is_accepted() {
            if r.rejection_stage.is_none() {
                push(id, "rejected record without a stage".into());
            }
            continue;
        }
        for f in r.files() {
            if !out_dir.join(f).is_file() {
                push(id, format!("missing file {f}"));
            }
        }
        if let Some(s) = &r.surface_path {
            if let Ok(text) = fs::read_to_string(out_dir.join(s)) {
                if let Err(e) = parse_obj(&text, s) {
                    push(id, format!("surface does not parse: {e}"));
                }
            }
        }
        if let (Some(n), Some(e)) = (&r.tet_node_path, &r.tet_ele_path) {
            if let (Ok(nt), Ok(et)) = (fs::read_to_string(out_dir.join(n)), fs::read_to_string(out_dir.join(e))) {
                if let Err(err) = parse_tet_mesh(&nt, &et, n) {
                    push(id, format!("tet mesh does not parse: {err}"));
                }
            }
        }
        if let Some(a) = &r.audio_path {
            if let Ok(bytes) = fs::read(out_dir.join(a)) {
                match parse_wav(&bytes) {
                    Ok(clip) => {
                        if clip.sample_rate != config.sample_rate
                            || clip.samples.len() != sample_count(config.sample_rate, config.duration)
                        {
                            push(id, "WAV rate or length differs from config".into());
                        }
                    }
                    Err(e) => push(id, format!("WAV does not parse: {e}")),
                }
            }
        }
        match &r.modal {
            None => push(id, "accepted record without modal data".into()),
            Some(m) => {
                let available = r.mesh_stats.as_ref().map_or(0, |s| (3 * s.vertices).saturating_sub(RIGID_MODES));
                let expected = config.modes.min(available);
                if m.eigenvalues.len() != expected {
                    push(id, format!("{} eigenvalues, expected {expected}", m.eigenvalues.len()));
                } else if expected < config.modes && r.degraded.is_none() {
                    push(id, "short eigenvalue list without a degraded reason".into());
                }
                if m.frequencies_hz.len() != m.eigenvalues.len() {
                    push(id, "frequency and eigenvalue counts differ".into());
                }
                if m.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
                    push(id, "eigenvalues not ascending".into());
                }
                if m.rigid_count != RIGID_MODES {
                    push(id, format!("{} rigid modes", m.rigid_count));
                }
            }
        }
        let rp = out_dir.join(&sample_paths(&r.id)[4]);
        match fs::read_to_string(&rp).ok().and_then(|t| serde_json::from_str::<SampleRecord>(&t).ok()) {
            Some(stored) if &stored == r => {}
            Some(_) => push(id, "record.json differs from the manifest entry".into()),
            None => push(id, "record.json missing or unreadable".into()),
        }
    }
    VerifyReport { passed: findings.is_empty(), records_checked: manifest.records.len(), findings }
}

/// Re-solves an accepted record from its stored tet mesh and material.
pub fn rebuild_eigenvalues(out_dir: &Path, record: &SampleRecord, config: &PipelineConfig) -> Result<Vec<f64>> {
    let (Some(n), Some(e), Some(material)) = (&record.tet_node_path, &record.tet_ele_path, &record.material) else {
        return Err(Error::InvalidArgument(format!("record '{}' has no stored tet mesh", record.id)));
    };
    let tet = read_tet_mesh(out_dir.join(n), out_dir.join(e))?;
    Ok(solve_modes(&tet, material, config)?.0.eigenvalues)
}

/// Seeded train/test partition of ids; both parts come back sorted.
pub fn split_ids(ids: &[String], seed: u64, train_fraction: f64) -> Result<(Vec<String>, Vec<String>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidArgument(format!("train fraction must lie in [0, 1], got {train_fraction}")));
    }
    let mut keyed: Vec<(u64, &String)> = ids.iter().map(|id| (derive_seed(seed, id), id)).collect();
    keyed.sort();
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    let mut train: Vec<String> = keyed[..n_train].iter().map(|(_, id)| (*id).clone()).collect();
    let mut test: Vec<String> = keyed[n_train..].iter().map(|(_, id)| (*id).clone()).collect();
    train.sort();
    test.sort();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            voxel_resolution: 6,
            thickness_resolution: 12,
            hollow_resolution: 8,
            hollow_max_resolution: 16,
            modes: 8,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn chain_accepts_a_cube_and_rejects_two_pieces() {
        let cfg = small_config();
        let steel = MaterialBank::builtin().get("steel").unwrap().clone();
        let cube = shapes::cuboid([0.0; 3], [2.0; 3]);
        let out = run_chain(&cube, &steel, &cfg);
        assert!(out.report.is_accepted(), "{:?}", out.report);
        let modal = out.modal.unwrap();
        assert_eq!(modal.eigenvalues.len(), 8);
        assert_eq!(modal.rigid_count, 6);

        let two = cube.merged(&shapes::cuboid([5.0; 3], [6.0; 3]));
        let out = run_chain(&two, &steel, &cfg);
        assert_eq!(out.report.rejection_stage(), Some(crate::topology::Stage::Connectivity));
    }

    #[test]
    fn tiny_lattice_is_degraded_not_failed() {
        let cfg = PipelineConfig { voxel_resolution: 1, modes: 64, ..small_config() };
        let steel = MaterialBank::builtin().get("steel").unwrap().clone();
        let out = run_chain(&shapes::cuboid([0.0; 3], [1.0; 3]), &steel, &cfg);
        assert!(out.report.is_accepted(), "{:?}", out.report);
        assert_eq!(out.modal.unwrap().eigenvalues.len(), 18);
        assert!(out.degraded.is_some());
    }

    #[test]
    fn split_is_seeded_and_complete() {
        let ids: Vec<String> = (0..50).map(|i| format!("s{i:02}")).collect();
        let (a, b) = split_ids(&ids, 3, 0.9).unwrap();
        assert_eq!((a.len(), b.len()), (45, 5));
        assert_eq!(split_ids(&ids, 3, 0.9).unwrap(), (a.clone(), b.clone()));
        let mut all: Vec<String> = a.into_iter().chain(b).collect();
        all.sort();
        assert_eq!(all, ids);
    }

    #[test]
    fn sample_ids_are_sanitized() {
        assert_eq!(sample_id(Path::new("/x/my mesh.v2.obj")), "my_mesh_v2");
    }
}
