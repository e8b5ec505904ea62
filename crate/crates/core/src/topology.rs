//! Validity filtering: connectivity, manifoldness and watertightness, genus,
//! minimum thickness and modal-spectrum sanity, evaluated in that order with
//! a short circuit on the first failing stage.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eigen::ModalModel;
use crate::error::{Error, Result};
use crate::geometry::{signed_distance, Lattice, SdfGrid, SurfaceMesh};

/// Union-find with path halving.
struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Undirected edge -> list of (face, directed as stored in the face).
fn edge_faces(mesh: &SurfaceMesh) -> HashMap<(usize, usize), Vec<(usize, bool)>> {
    let mut map: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push((fi, a < b));
        }
    }
    map
}

/// Number of face-adjacency components (faces joined through shared edges).
pub fn connected_components(mesh: &SurfaceMesh) -> usize {
    let mut ds = DisjointSet::new(mesh.faces.len());
    for faces in edge_faces(mesh).values() {
        for w in faces.windows(2) {
            ds.union(w[0].0, w[1].0);
        }
    }
    (0..mesh.faces.len()).filter(|&f| ds.find(f) == f).count()
}

/// `(is_manifold, is_watertight)`.
///
/// Manifold: every edge borders at most two faces and the faces around each
/// vertex form a single fan. Watertight: every edge borders exactly two faces
/// that traverse it in opposite directions.
pub fn manifold_watertight_check(mesh: &SurfaceMesh) -> (bool, bool) {
    let edges = edge_faces(mesh);
    let mut manifold = true;
    let mut watertight = !mesh.faces.is_empty();
    for faces in edges.values() {
        match faces.len() {
            1 => watertight = false,
            2 => {
                if faces[0].1 == faces[1].1 {
                    watertight = false;
                }
            }
            _ => {
                manifold = false;
                watertight = false;
            }
        }
    }
    if manifold && !vertex_stars_are_fans(mesh) {
        manifold = false;
        watertight = false;
    }
    (manifold, watertight)
}

/// Each vertex's link (the edges opposite it in incident faces) must be one
/// connected path or cycle.
fn vertex_stars_are_fans(mesh: &SurfaceMesh) -> bool {
    let mut links: Vec<Vec<(usize, usize)>> = vec![Vec::new(); mesh.vertices.len()];
    for f in &mesh.faces {
        for e in 0..3 {
            links[f[e]].push((f[(e + 1) % 3], f[(e + 2) % 3]));
        }
    }
    for link in &links {
        if link.len() <= 1 {
            continue;
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in link {
            let n = ids.len();
            ids.entry(a).or_insert(n);
            let n = ids.len();
            ids.entry(b).or_insert(n);
        }
        let mut degree = vec![0usize; ids.len()];
        let mut ds = DisjointSet::new(ids.len());
        for &(a, b) in link {
            let (ia, ib) = (ids[&a], ids[&b]);
            degree[ia] += 1;
            degree[ib] += 1;
            ds.union(ia, ib);
        }
        if degree.iter().any(|&d| d > 2) {
            return false;
        }
        let roots = (0..ids.len()).filter(|&i| ds.find(i) == i).count();
        if roots != 1 {
            return false;
        }
    }
    true
}

/// Euler characteristic `V - E + F` over vertices referenced by faces.
pub fn euler_characteristic(mesh: &SurfaceMesh) -> i64 {
    let mut used = vec![false; mesh.vertices.len()];
    for f in &mesh.faces {
        for &v in f {
            used[v] = true;
        }
    }
    let v = used.iter().filter(|&&u| u).count() as i64;
    let e = edge_faces(mesh).len() as i64;
    v - e + mesh.faces.len() as i64
}

/// Total genus of a closed manifold surface, `(2c - χ) / 2` over its `c`
/// components (`(2 - χ) / 2` for a single one).
pub fn genus(mesh: &SurfaceMesh) -> Result<i64> {
    let (manifold, watertight) = manifold_watertight_check(mesh);
    if !(manifold && watertight) {
        return Err(Error::InvalidArgument("genus needs a closed manifold surface".into()));
    }
    let c = connected_components(mesh) as i64;
    let chi = euler_characteristic(mesh);
    let twice = 2 * c - chi;
    if twice % 2 != 0 || twice < 0 {
        return Err(Error::InvalidArgument(format!("inconsistent Euler characteristic {chi}")));
    }
    Ok(twice / 2)
}

/// `(min_thickness, pass)` with `min_thickness = |s_min|`.
pub fn thickness_check(sdf: &SdfGrid, thickness_min: f64) -> Result<(f64, bool)> {
    let s_min = sdf
        .s_min()
        .filter(|&s| s < 0.0)
        .ok_or_else(|| Error::Degenerate("signed distance field has no interior lattice point".into()))?;
    let t = s_min.abs();
    Ok((t, t >= thickness_min))
}

/// True iff the solve converged, exactly six rigid modes were discarded and
/// no retained eigenvalue is below `-tolerance * λ_max`.
pub fn spectrum_sanity(modal: &ModalModel, tolerance: f64) -> bool {
    spectrum_problem(modal, tolerance).is_none()
}

/// Expected number of zero-energy modes of a single free body.
pub const RIGID_MODES: usize = 6;

fn spectrum_problem(modal: &ModalModel, tolerance: f64) -> Option<String> {
    if !modal.converged {
        return Some("eigensolver did not converge".into());
    }
    if modal.rigid_count != RIGID_MODES {
        return Some(format!("{} rigid modes, expected {RIGID_MODES}", modal.rigid_count));
    }
    let lambda_max = modal.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if let Some(bad) = modal.eigenvalues.iter().find(|&&l| !l.is_finite() || l < -tolerance * lambda_max) {
        return Some(format!("eigenvalue {bad:e} below -{tolerance:e}·λmax"));
    }
    if modal.eigenvalues.is_empty() {
        return Some("no elastic modes".into());
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// The mesh file could not be read or normalized.
    Input,
    Connectivity,
    Manifold,
    Genus,
    Thickness,
    Spectrum,
    /// A hollow shell fell apart at every allowed resolution.
    Shell,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Input => "input",
            Stage::Connectivity => "connectivity",
            Stage::Manifold => "manifold",
            Stage::Genus => "genus",
            Stage::Thickness => "thickness",
            Stage::Spectrum => "spectrum",
            Stage::Shell => "shell",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Rejected {
        reason: Stage,
        detail: String,
    },
    /// Geometry stages passed; spectrum not yet evaluated.
    Pending,
}

/// Outcome of the validity pipeline. Fields of stages that were not reached
/// are `None` (serialized as `null`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub component_count: Option<usize>,
    pub is_manifold: Option<bool>,
    pub is_watertight: Option<bool>,
    pub genus: Option<i64>,
    pub min_thickness: Option<f64>,
    pub spectrum_ok: Option<bool>,
    pub verdict: Verdict,
}

impl ValidityReport {
    fn blank() -> Self {
        ValidityReport {
            component_count: None,
            is_manifold: None,
            is_watertight: None,
            genus: None,
            min_thickness: None,
            spectrum_ok: None,
            verdict: Verdict::Pending,
        }
    }

    /// Report for an input that never reached the geometric stages.
    pub fn input_failure(detail: impl Into<String>) -> Self {
        let mut r = Self::blank();
        r.reject(Stage::Input, detail);
        r
    }

    /// Copy of the geometric stage results with the spectrum stage reset,
    /// for a derived object sharing the same exterior surface.
    pub fn geometry_passed(&self) -> Self {
        ValidityReport { spectrum_ok: None, verdict: Verdict::Pending, ..self.clone() }
    }

    pub fn reject_shell(&mut self, detail: impl Into<String>) {
        self.reject(Stage::Shell, detail);
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self.verdict, Verdict::Rejected { .. })
    }

    pub fn rejection_stage(&self) -> Option<Stage> {
        match &self.verdict {
            Verdict::Rejected { reason, .. } => Some(*reason),
            _ => None,
        }
    }

    fn reject(&mut self, reason: Stage, detail: impl Into<String>) {
        self.verdict = Verdict::Rejected { reason, detail: detail.into() };
    }

    /// Completes a pending report with the spectrum stage.
    pub fn apply_spectrum(&mut self, modal: &ModalModel, tolerance: f64) {
        if self.verdict != Verdict::Pending {
            return;
        }
        match spectrum_problem(modal, tolerance) {
            None => {
                self.spectrum_ok = Some(true);
                self.verdict = Verdict::Accepted;
            }
            Some(why) => {
                self.spectrum_ok = Some(false);
                self.reject(Stage::Spectrum, why);
            }
        }
    }

    /// Rejects a pending report at the spectrum stage for a failure that
    /// prevented the solve altogether.
    pub fn fail_spectrum(&mut self, detail: impl Into<String>) {
        if self.verdict == Verdict::Pending {
            self.spectrum_ok = Some(false);
            self.reject(Stage::Spectrum, detail);
        }
    }

    /// Fixed-key-order single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Thresholds for the geometric stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityThresholds {
    pub genus_max: i64,
    pub thickness_min: f64,
    /// Resolution of the cell-center lattice the thickness SDF is sampled on.
    pub thickness_resolution: usize,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        ValidityThresholds { genus_max: 3, thickness_min: 0.05, thickness_resolution: 64 }
    }
}

/// Runs connectivity → manifold/watertight → genus → thickness. Returns a
/// report whose verdict is `Pending` when every geometric stage passed.
pub fn validate_geometry(mesh: &SurfaceMesh, th: &ValidityThresholds) -> ValidityReport {
    let mut r = ValidityReport::blank();

    let components = connected_components(mesh);
    r.component_count = Some(components);
    if components != 1 {
        r.reject(Stage::Connectivity, format!("{components} connected components"));
        return r;
    }

    let (manifold, watertight) = manifold_watertight_check(mesh);
    r.is_manifold = Some(manifold);
    r.is_watertight = Some(watertight);
    if !manifold {
        r.reject(Stage::Manifold, "non-manifold edge or vertex");
        return r;
    }
    if !watertight {
        r.reject(Stage::Manifold, "open boundary or inconsistent orientation");
        return r;
    }

    let g = match genus(mesh) {
        Ok(g) => g,
        Err(e) => {
            r.reject(Stage::Genus, e.to_string());
            return r;
        }
    };
    r.genus = Some(g);
    if g > th.genus_max {
        r.reject(Stage::Genus, format!("genus {g} exceeds {}", th.genus_max));
        return r;
    }

    let thickness = mesh
        .bounding_box()
        .ok_or_else(|| Error::Degenerate("empty mesh".into()))
        .and_then(|bb| Lattice::cell_centers(bb.center(), bb.half_extent(), th.thickness_resolution))
        .and_then(|lattice| signed_distance(mesh, lattice))
        .and_then(|sdf| thickness_check(&sdf, th.thickness_min));
    match thickness {
        Ok((t, pass)) => {
            r.min_thickness = Some(t);
            if !pass {
                r.reject(Stage::Thickness, format!("thickness {t:.6} below {}", th.thickness_min));
            }
        }
        Err(e) => {
            r.min_thickness = Some(0.0);
            r.reject(Stage::Thickness, e.to_string());
        }
    }
    r
}
