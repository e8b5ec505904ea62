mod common;

use std::fs;
use std::path::Path;

use common::*;
use modalforge::dataset::{
    build_corpus, build_hollow_counterparts, build_sample, manifest_file_hash, rebuild_eigenvalues, split_ids,
    verify_manifest, BuildOptions, Manifest, RecordStatus, HEADER_FILE, RECORDS_FILE,
};
use modalforge::geometry::io::{obj_string, stl_binary_bytes};
use modalforge::geometry::shapes;
use modalforge::synthesis::read_wav;
use modalforge::PipelineConfig;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use tempfile::TempDir;

fn config() -> PipelineConfig {
    PipelineConfig {
        voxel_resolution: 6,
        thickness_resolution: 16,
        hollow_resolution: 8,
        hollow_max_resolution: 16,
        modes: 16,
        ..PipelineConfig::default()
    }
}

fn write_corpus(dir: &Path) {
    fs::write(dir.join("cube.obj"), obj_string(&shapes::cuboid([0.0; 3], [1.0; 3]))).unwrap();
    fs::write(dir.join("ball.stl"), stl_binary_bytes(&shapes::icosphere(2, 1.0))).unwrap();
    fs::write(dir.join("ring.obj"), obj_string(&shapes::torus(1.0, 0.4, 20, 10))).unwrap();
    let pair = shapes::tetrahedron().merged(&shapes::cuboid([3.0; 3], [4.0; 3]));
    fs::write(dir.join("pair.obj"), obj_string(&pair)).unwrap();
    fs::write(dir.join("broken.obj"), "v 0 0 0\nf 1 2 3\n").unwrap();
    fs::write(dir.join("notes.txt"), "ignored").unwrap();
    fs::write(dir.join("labels.json"), r#"{"cube": "bell", "ring": "ring"}"#).unwrap();
}

fn built() -> (TempDir, TempDir, Manifest) {
    let input = TempDir::new().unwrap();
    let out = TempDir::new().unwrap();
    write_corpus(input.path());
    let m = build_corpus(input.path(), out.path(), &config(), &BuildOptions::default()).unwrap();
    (input, out, m)
}

fn peak_bins(path: &Path, count: usize) -> Vec<usize> {
    let clip = read_wav(path).unwrap();
    let mut buf: Vec<Complex<f64>> = clip.samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let mags: Vec<f64> = buf[..buf.len() / 2].iter().map(|c| c.norm()).collect();
    let mut local: Vec<usize> =
        (2..mags.len() - 2).filter(|&i| mags[i] > mags[i - 1] && mags[i] >= mags[i + 1]).collect();
    local.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]));
    local.truncate(count);
    local.sort();
    local
}

#[test]
fn clean_cube_becomes_a_complete_record() {
    let out = TempDir::new().unwrap();
    let cfg = PipelineConfig { voxel_resolution: 6, ..PipelineConfig::default() };
    let cube = shapes::cuboid([0.0; 3], [1.0; 3]);
    let record = build_sample("cube", &cube, &material("steel"), &cfg, 9, out.path()).unwrap();
    assert_eq!(record.status, RecordStatus::Accepted);
    let modal = record.modal.as_ref().unwrap();
    assert_eq!(modal.eigenvalues.len(), 64);
    assert_eq!(modal.rigid_count, 6);
    assert!(record.degraded.is_none());
    assert!(record.image_path.is_none());
    let clip = read_wav(&out.path().join(record.audio_path.as_ref().unwrap())).unwrap();
    assert_eq!((clip.sample_rate, clip.samples.len()), (32_000, 32_000));

    let again = TempDir::new().unwrap();
    build_sample("cube", &cube, &material("steel"), &cfg, 9, again.path()).unwrap();
    for f in ["surface.obj", "mesh.node", "mesh.ele", "audio.wav", "record.json"] {
        let a = fs::read(out.path().join("corpus/cube").join(f)).unwrap();
        let b = fs::read(again.path().join("corpus/cube").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn two_pieces_are_rejected_without_files() {
    let out = TempDir::new().unwrap();
    let pair = shapes::tetrahedron().merged(&shapes::cuboid([3.0; 3], [4.0; 3]));
    let record = build_sample("pair", &pair, &material("steel"), &config(), 0, out.path()).unwrap();
    assert_eq!(record.status, RecordStatus::Rejected);
    assert_eq!(record.rejection_stage.as_deref(), Some("connectivity"));
    assert!(!out.path().join("corpus").exists());
}

#[test]
fn corpus_accounting_and_verification() {
    let (_input, out, m) = built();
    assert_eq!(m.records.len(), 5);
    let ids: Vec<&str> = m.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["ball", "broken", "cube", "pair", "ring"]);
    let c = &m.header.counts;
    assert_eq!((c.accepted, c.rejected), (3, 2));
    assert_eq!(c.rejected_by_reason.values().sum::<usize>(), c.rejected);
    assert_eq!(c.rejected_by_reason.get("input"), Some(&1));
    assert_eq!(c.rejected_by_reason.get("connectivity"), Some(&1));
    let cube = m.records.iter().find(|r| r.id == "cube").unwrap();
    assert_eq!(cube.class.as_deref(), Some("bell"));
    assert!(["steel", "copper", "aluminum"].contains(&cube.material.as_ref().unwrap().name.as_str()));
    let ball = m.records.iter().find(|r| r.id == "ball").unwrap();
    assert_eq!(ball.material.as_ref().unwrap().name, "steel");
    for r in m.records.iter().filter(|r| r.is_accepted()) {
        assert_eq!(r.modal.as_ref().unwrap().rigid_count, 6);
        let rebuilt = rebuild_eigenvalues(out.path(), r, &m.header.config).unwrap();
        for (a, b) in rebuilt.iter().zip(&r.modal.as_ref().unwrap().eigenvalues) {
            assert!(rel(*a, *b) <= 1e-8, "{}", r.id);
        }
    }
    let report = verify_manifest(out.path());
    assert!(report.passed, "{:?}", report.findings);
    assert_eq!(report.records_checked, 5);
    assert_eq!(Manifest::read(out.path()).unwrap(), m);
}

#[test]
fn manifest_is_deterministic_across_runs_and_workers() {
    let input = TempDir::new().unwrap();
    write_corpus(input.path());
    let mut hashes = Vec::new();
    for workers in [1, 3, 1] {
        let out = TempDir::new().unwrap();
        let m = build_corpus(input.path(), out.path(), &config(), &BuildOptions { workers }).unwrap();
        assert_eq!(m.hash(), manifest_file_hash(out.path()).unwrap());
        hashes.push(m.hash());
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn a_different_config_is_refused() {
    let (input, out, _) = built();
    let other = PipelineConfig { modes: 12, ..config() };
    assert!(build_corpus(input.path(), out.path(), &other, &BuildOptions::default()).is_err());
    assert!(build_hollow_counterparts(out.path(), 1.0, 0, &other, &BuildOptions::default()).is_err());
    assert!(build_corpus(input.path(), out.path(), &config(), &BuildOptions::default()).is_ok());
}

#[test]
fn tampering_is_found() {
    let (_input, out, m) = built();
    fs::remove_file(out.path().join("corpus/ball/audio.wav")).unwrap();
    let report = verify_manifest(out.path());
    assert!(!report.passed);
    assert!(report.findings.iter().any(|f| f.id.as_deref() == Some("ball") && f.problem.contains("missing")));

    let (_input, out, _) = built();
    let mut edited = m.clone();
    let cube = edited.records.iter_mut().find(|r| r.id == "cube").unwrap();
    cube.modal.as_mut().unwrap().eigenvalues.pop();
    fs::write(out.path().join(RECORDS_FILE), edited.records_bytes()).unwrap();
    let report = verify_manifest(out.path());
    assert!(!report.passed);
    assert!(report.findings.iter().any(|f| f.id.as_deref() == Some("cube") && f.problem.contains("15 eigenvalues")));

    let (_input, out, _) = built();
    fs::write(out.path().join(HEADER_FILE), "{").unwrap();
    assert!(!verify_manifest(out.path()).passed);
}

#[test]
fn hollow_counterparts_link_to_their_parents() {
    let (_input, out, m) = built();
    let cfg = config();
    let delta = build_hollow_counterparts(out.path(), 1.0, 5, &cfg, &BuildOptions::default()).unwrap();
    assert_eq!(delta.len(), 3);
    let after = Manifest::read(out.path()).unwrap();
    assert_eq!(after.records.len(), 8);
    for h in &delta {
        assert!(h.is_hollow);
        let t = h.thickness_ratio.unwrap();
        assert!((0.3..=0.7).contains(&t));
        let parent = m.records.iter().find(|r| Some(&r.id) == h.parent_id.as_ref()).unwrap();
        assert!(parent.is_accepted() && !parent.is_hollow);
        if h.is_accepted() {
            let a = peak_bins(&out.path().join(parent.audio_path.as_ref().unwrap()), 5);
            let b = peak_bins(&out.path().join(h.audio_path.as_ref().unwrap()), 5);
            assert_ne!(a, b, "{}", h.id);
        } else {
            assert_eq!(h.rejection_stage.as_deref(), Some("shell"));
        }
    }
    assert!(delta.iter().any(|h| h.is_accepted()));
    let report = verify_manifest(out.path());
    assert!(report.passed, "{:?}", report.findings);

    let again = build_hollow_counterparts(out.path(), 1.0, 5, &cfg, &BuildOptions::default()).unwrap();
    assert_eq!(again, delta);
    assert_eq!(Manifest::read(out.path()).unwrap().records.len(), 8);
}

#[test]
fn id_split_is_a_seeded_partition() {
    let ids: Vec<String> = (0..40).map(|i| format!("obj{i}")).collect();
    let (train, test) = split_ids(&ids, 11, 0.9).unwrap();
    assert_eq!((train.len(), test.len()), (36, 4));
    assert_ne!(split_ids(&ids, 12, 0.9).unwrap().1, test);
    assert!(split_ids(&ids, 1, 1.5).is_err());
}
