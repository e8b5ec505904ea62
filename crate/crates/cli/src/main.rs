use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use modalforge::dataset::{
    build_hollow_sample, effective_material, manifest_file_hash, run_chain_scaled, validate_mesh, BuildOptions,
    SampleInput,
};
use modalforge::geometry::io::load_surface_mesh_auto;
use modalforge::geometry::{
    chamfer_distance, normalize, surface_samples, voxel_iou, voxelize_in, Aabb, Lattice, SurfaceMesh,
};
use modalforge::hollow::sample_thickness_in;
use modalforge::synthesis::{synthesize_eigenvalues, write_wav};
use modalforge::topology::validate_geometry;
use modalforge::{
    build_corpus, build_hollow_counterparts, derive_seed, verify_manifest, MassMode, MaterialBank, PipelineConfig,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "modalforge", version, about = "Closed surfaces in, modal spectra and impact sounds out")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Pipeline configuration (JSON); flags below take precedence.
    #[arg(long, global = true, env = "MODALFORGE_CONFIG")]
    config: Option<PathBuf>,
    /// Lattice cells per axis used for tetrahedralization.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    genus_max: Option<i64>,
    #[arg(long, global = true)]
    thickness_min: Option<f64>,
    #[arg(long, global = true)]
    sample_rate: Option<u32>,
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// consistent or lumped
    #[arg(long, global = true)]
    mass_mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the validity stages on one mesh.
    Validate {
        mesh: PathBuf,
        /// Stop after the geometric stages.
        #[arg(long)]
        geometry_only: bool,
    },
    /// Solve the smallest non-rigid modes of one mesh.
    Modal {
        mesh: PathBuf,
        #[arg(long)]
        material: Option<String>,
        /// Enlarge the normalized object by this factor.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Render the impact response of a modal spectrum to WAV.
    Synth {
        /// Output of `modal`, a serialized modal model, or {"eigenvalues": [...]}.
        modal: PathBuf,
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Hollow one mesh, or add hollow counterparts to a built corpus.
    Hollow {
        #[arg(required_unless_present = "corpus", conflicts_with = "corpus")]
        mesh: Option<PathBuf>,
        #[arg(long, required_unless_present = "corpus")]
        out: Option<PathBuf>,
        /// Shell thickness ratio; drawn from the configured range when absent.
        #[arg(long)]
        thickness: Option<f64>,
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        fraction: f64,
    },
    /// Build a dataset from a directory of meshes.
    Build {
        input: PathBuf,
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Single worker.
        #[arg(long)]
        deterministic: bool,
        /// Also hollow this fraction of the accepted solids.
        #[arg(long)]
        hollow_fraction: Option<f64>,
    },
    /// Check a built dataset against its manifest.
    Verify { dir: PathBuf },
    /// Shape similarity of two meshes.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Normalize each mesh into the unit cube first.
        #[arg(long)]
        normalize: bool,
    },
}

impl Overrides {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(r) = self.resolution {
            cfg.voxel_resolution = r;
        }
        if let Some(m) = self.modes {
            cfg.modes = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = self.genus_max {
            cfg.genus_max = g;
        }
        if let Some(t) = self.thickness_min {
            cfg.thickness_min = t;
        }
        if let Some(r) = self.sample_rate {
            cfg.sample_rate = r;
        }
        if let Some(d) = self.duration {
            cfg.duration = d;
        }
        if let Some(m) = &self.mass_mode {
            cfg.mass_mode = match m.as_str() {
                "consistent" => MassMode::Consistent,
                "lumped" => MassMode::Lumped,
                other => bail!("unknown mass mode {other:?}, expected consistent or lumped"),
            };
        }
        cfg.check()?;
        Ok(cfg)
    }
}

struct Outcome {
    doc: Value,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.doc).expect("output serializes"));
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = cli.overrides.config()?;
    let hash = cfg.hash();
    let mut out = match cli.command {
        Command::Validate { mesh, geometry_only } => validate(&mesh, geometry_only, &cfg)?,
        Command::Modal { mesh, material, scale } => modal(&mesh, material.as_deref(), scale, &cfg)?,
        Command::Synth { modal, material, out, alpha, beta } => {
            synth(&modal, material.as_deref(), &out, alpha, beta, &cfg)?
        }
        Command::Hollow { mesh: Some(mesh), out: Some(out), thickness, material, .. } => {
            hollow_one(&mesh, &out, thickness, material.as_deref(), &cfg)?
        }
        Command::Hollow { corpus: Some(dir), fraction, .. } => hollow_corpus(&dir, fraction, &cfg)?,
        Command::Hollow { .. } => bail!("hollow needs either <mesh> --out or --corpus"),
        Command::Build { input, out, workers, deterministic, hollow_fraction } => {
            build(&input, &out, if deterministic { 1 } else { workers }, hollow_fraction, &cfg)?
        }
        Command::Verify { dir } => verify(&dir)?,
        Command::Metrics { a, b, resolution, samples, normalize } => {
            metrics(&a, &b, resolution, samples, normalize, &cfg)?
        }
    };
    if let Value::Object(map) = &mut out.doc {
        map.entry("config_hash").or_insert_with(|| Value::String(hash));
    }
    Ok(out)
}

fn load(path: &Path) -> Result<SurfaceMesh> {
    eprintln!("loading {}", path.display());
    Ok(load_surface_mesh_auto(path)?)
}

fn material(name: Option<&str>, cfg: &PipelineConfig) -> Result<modalforge::MaterialSpec> {
    let name = name.unwrap_or(&cfg.default_material);
    let spec = MaterialBank::builtin().get(name)?.clone();
    Ok(effective_material(&spec, cfg)?)
}

fn validate(path: &Path, geometry_only: bool, cfg: &PipelineConfig) -> Result<Outcome> {
    let surface = load(path)?;
    let report = if geometry_only {
        match normalize(&surface) {
            Ok((n, _)) => validate_geometry(&n, &cfg.thresholds()),
            Err(e) => modalforge::ValidityReport::input_failure(e.to_string()),
        }
    } else {
        validate_mesh(&surface, cfg)?.report
    };
    let ok = if geometry_only { !report.is_rejected() } else { report.is_accepted() };
    Ok(Outcome { doc: json!({ "mesh": path, "accepted": ok, "validity": report }), ok })
}

fn modal(path: &Path, material_name: Option<&str>, scale: f64, cfg: &PipelineConfig) -> Result<Outcome> {
    if !(scale > 0.0 && scale.is_finite()) {
        bail!("scale must be positive, got {scale}");
    }
    let mat = material(material_name, cfg)?;
    let surface = load(path)?;
    eprintln!("solving {} modes at resolution {}", cfg.modes, cfg.voxel_resolution);
    let chain = run_chain_scaled(&surface, &mat, cfg, scale);
    let ok = chain.report.is_accepted();
    let doc = json!({
        "mesh": path,
        "material": mat,
        "scale": scale,
        "accepted": ok,
        "validity": chain.report,
        "degraded": chain.degraded,
        "vertices": chain.tet.as_ref().map(|t| t.vertices.len()),
        "tetrahedra": chain.tet.as_ref().map(|t| t.tets.len()),
        "modal": chain.modal,
    });
    Ok(Outcome { doc, ok })
}

fn eigenvalues_of(doc: &Value) -> Result<Vec<f64>> {
    let source = match doc.get("modal") {
        Some(m) if !m.is_null() => m,
        Some(_) => bail!("input carries no modal model"),
        None => doc,
    };
    let list = source.get("eigenvalues").context("input has no \"eigenvalues\" list")?;
    serde_json::from_value(list.clone()).context("eigenvalues must be numbers")
}

fn synth(
    path: &Path,
    material_name: Option<&str>,
    out: &Path,
    alpha: Option<f64>,
    beta: Option<f64>,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let eigenvalues = eigenvalues_of(&doc)?;
    let from_input = doc.pointer("/material/name").and_then(Value::as_str);
    let mat = material(material_name.or(from_input), cfg)?;
    let alpha = alpha.unwrap_or(mat.rayleigh_alpha);
    let beta = beta.unwrap_or(mat.rayleigh_beta);
    let (clip, summary) = synthesize_eigenvalues(&eigenvalues, alpha, beta, &cfg.synthesis_params())?;
    write_wav(&clip, out)?;
    if clip.silent {
        eprintln!("no audible modes; wrote a silent clip");
    }
    let doc = json!({
        "out": out,
        "material": mat.name,
        "samples": clip.samples.len(),
        "silent": clip.silent,
        "synthesis": summary,
    });
    Ok(Outcome { doc, ok: !clip.silent })
}

fn hollow_one(
    path: &Path,
    out: &Path,
    thickness: Option<f64>,
    material_name: Option<&str>,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let surface = load(path)?;
    let mat = material(material_name, cfg)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    let id = format!("{stem}__hollow");
    let seed = derive_seed(cfg.seed, &format!("hollow/{stem}"));
    let t = thickness.unwrap_or_else(|| sample_thickness_in(seed, cfg.hollow_thickness_range));
    let source = path.to_string_lossy();
    let input = SampleInput {
        id: &id,
        surface: &surface,
        material: &mat,
        class: None,
        source_corpus: "cli",
        source_file: Some(&source),
        seed,
    };
    let record = build_hollow_sample(&input, t, cfg, out)?;
    let ok = record.is_accepted();
    Ok(Outcome { doc: json!({ "out": out, "record": record }), ok })
}

fn hollow_corpus(dir: &Path, fraction: f64, cfg: &PipelineConfig) -> Result<Outcome> {
    let delta = build_hollow_counterparts(dir, fraction, cfg.seed, cfg, &BuildOptions::default())?;
    let accepted = delta.iter().filter(|r| r.is_accepted()).count();
    let doc = json!({
        "dir": dir,
        "added": delta.len(),
        "accepted": accepted,
        "ids": delta.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        "manifest_hash": manifest_file_hash(dir)?,
    });
    Ok(Outcome { doc, ok: true })
}

fn build(
    input: &Path,
    out: &Path,
    workers: usize,
    hollow_fraction: Option<f64>,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let opts = BuildOptions { workers: workers.max(1) };
    eprintln!("building {} into {} with {} worker(s)", input.display(), out.display(), opts.workers);
    let mut manifest = build_corpus(input, out, cfg, &opts)?;
    if let Some(f) = hollow_fraction {
        build_hollow_counterparts(out, f, cfg.seed, cfg, &opts)?;
        manifest = modalforge::Manifest::read(out)?;
    }
    let doc = json!({
        "out": out,
        "records": manifest.records.len(),
        "counts": manifest.header.counts,
        "manifest_hash": manifest_file_hash(out)?,
    });
    Ok(Outcome { doc, ok: true })
}

fn verify(dir: &Path) -> Result<Outcome> {
    let report = verify_manifest(dir);
    let header = modalforge::Manifest::read(dir).ok().map(|m| m.header.config_hash);
    let ok = report.passed;
    let mut doc = serde_json::to_value(&report)?;
    doc["config_hash"] = json!(header);
    Ok(Outcome { doc, ok })
}

fn metrics(
    a: &Path,
    b: &Path,
    resolution: usize,
    samples: usize,
    normalize_first: bool,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let mut ma = load(a)?;
    let mut mb = load(b)?;
    if normalize_first {
        ma = normalize(&ma)?.0;
        mb = normalize(&mb)?.0;
    }
    let bounds = |m: &SurfaceMesh| Aabb::from_points(&m.vertices).context("mesh has no vertices");
    let bb = bounds(&ma)?.merge(&bounds(&mb)?);
    let lattice = Lattice::cell_centers(bb.center(), bb.half_extent(), resolution)?;
    let iou = voxel_iou(&voxelize_in(&ma, lattice)?, &voxelize_in(&mb, lattice)?)?;
    let pa = surface_samples(&ma, samples, cfg.seed)?;
    let pb = surface_samples(&mb, samples, cfg.seed)?;
    let chamfer = chamfer_distance(&pa, &pb)?;
    let doc = json!({ "a": a, "b": b, "resolution": resolution, "samples": samples, "iou": iou, "chamfer": chamfer });
    Ok(Outcome { doc, ok: true })
}
