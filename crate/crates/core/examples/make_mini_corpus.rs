//! Regenerates the bundled 20-mesh corpus under `data/mini_corpus`.
//!
//! cargo run -p modalforge-core --example make_mini_corpus -- [out_dir]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use modalforge::geometry::io::{obj_string, stl_binary_bytes};
use modalforge::geometry::shapes;
use modalforge::{PipelineConfig, SurfaceMesh};

fn off_string(mesh: &SurfaceMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices.len(), mesh.faces.len());
    for v in &mesh.vertices {
        writeln!(s, "{} {} {}", v[0], v[1], v[2]).unwrap();
    }
    for f in &mesh.faces {
        writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    s
}

fn translated(mesh: &SurfaceMesh, d: [f64; 3]) -> SurfaceMesh {
    SurfaceMesh {
        vertices: mesh.vertices.iter().map(|p| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect(),
        faces: mesh.faces.clone(),
    }
}

fn open_cube() -> SurfaceMesh {
    let mut m = shapes::cuboid([0.0; 3], [1.0; 3]);
    m.faces.truncate(10);
    m
}

/// Closed tetrahedron with an extra triangle hanging off one edge.
fn fin() -> SurfaceMesh {
    let mut m = shapes::tetrahedron();
    m.vertices.push([1.0, 1.0, -1.0]);
    m.faces.push([0, 1, 4]);
    m
}

fn bowtie() -> SurfaceMesh {
    shapes::cuboid([0.0; 3], [1.0; 3]).merged(&shapes::cuboid([1.0; 3], [2.0; 3]))
}

fn write(dir: &Path, name: &str, mesh: &SurfaceMesh) {
    let path = dir.join(name);
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => fs::write(&path, obj_string(mesh)),
        Some("off") => fs::write(&path, off_string(mesh)),
        Some("stl") => fs::write(&path, stl_binary_bytes(mesh)),
        _ => unreachable!(),
    }
    .unwrap();
}

fn main() {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "data/mini_corpus".into()).into();
    fs::create_dir_all(&out).unwrap();

    let meshes: Vec<(&str, Option<&str>, SurfaceMesh)> = vec![
        ("cube.obj", Some("block"), shapes::cuboid([0.0; 3], [1.0; 3])),
        ("box.off", Some("table"), shapes::cuboid([-1.0, -0.6, -0.4], [1.0, 0.6, 0.4])),
        ("bar.obj", Some("tool"), shapes::cuboid([0.0; 3], [2.0, 0.4, 0.4])),
        ("plate.stl", Some("plate"), shapes::cuboid([0.0; 3], [2.0, 2.0, 0.3])),
        ("sphere.stl", Some("toy"), shapes::icosphere(3, 1.0)),
        ("pebble.obj", Some("statue"), shapes::icosphere(1, 0.5)),
        ("ring.obj", Some("ring"), shapes::torus(1.0, 0.35, 32, 16)),
        ("donut.off", Some("toy"), shapes::torus(0.8, 0.45, 24, 12)),
        ("bottle.obj", Some("bottle"), shapes::cylinder(0.4, 1.0, 24)),
        ("bell.stl", Some("bell"), shapes::cone(0.8, 0.8, 24)),
        ("gem.off", Some("statue"), shapes::octahedron(1.0)),
        ("tetra.stl", Some("toy"), shapes::tetrahedron()),
        ("bracket.obj", Some("tool"), shapes::l_bracket()),
        ("slab2.obj", Some("block"), shapes::holed_slab(2)),
        ("two_tets.obj", None, shapes::tetrahedron().merged(&translated(&shapes::tetrahedron(), [3.0, 0.0, 0.0]))),
        ("open_cube.obj", None, open_cube()),
        ("fin.obj", None, fin()),
        ("bowtie.off", None, bowtie()),
        ("slab4.obj", None, shapes::holed_slab(4)),
        ("foil.obj", Some("plate"), shapes::cuboid([0.0; 3], [2.0, 2.0, 0.02])),
    ];
    assert_eq!(meshes.len(), 20);
    let mut labels = BTreeMap::new();
    for (name, class, mesh) in &meshes {
        write(&out, name, mesh);
        if let Some(c) = class {
            labels.insert(name.rsplit_once('.').unwrap().0, *c);
        }
    }
    fs::write(out.join("labels.json"), serde_json::to_string_pretty(&labels).unwrap() + "\n").unwrap();

    let config = PipelineConfig {
        voxel_resolution: 16,
        thickness_resolution: 32,
        hollow_resolution: 16,
        hollow_max_resolution: 32,
        ..PipelineConfig::default()
    };
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&config).unwrap() + "\n").unwrap();
    eprintln!("wrote {} meshes to {}", meshes.len(), out.display());
}
