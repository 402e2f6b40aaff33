//! Weighted generalized triangulations of closed surfaces.
//!
//! Faces carry explicit edge references so that parallel edges (two edges
//! with the same endpoints) can be represented. The edge in slot `n` of a
//! face joins the two vertices in the other two slots.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod loops;

pub use loops::{enumerate_short_loops, loop_bounds_disk, Homotopy, ShortLoop};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    pub vertices: [usize; 3],
    /// `edges[n]` joins `vertices[(n + 1) % 3]` and `vertices[(n + 2) % 3]`.
    pub edges: [usize; 3],
}

impl Face {
    pub fn slot_of(&self, v: usize) -> Option<usize> {
        self.vertices.iter().position(|&w| w == v)
    }

    pub fn edge_slot(&self, e: usize) -> Option<usize> {
        self.edges.iter().position(|&f| f == e)
    }
}

/// Which reading of the "one triangle per vertex triple" clause to enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValidationMode {
    /// At most one face per unordered vertex triple.
    #[default]
    Strict,
    /// Admits several faces on the same vertex triple (experimental).
    Relaxed,
}

/// A structural defect found by [`WeightedTriangulation::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    EdgeEndpointOutOfRange { edge: usize, vertex: usize },
    FaceIndexOutOfRange { face: usize },
    SelfLoop { edge: usize },
    WeightOutOfRange { edge: usize, weight: f64 },
    FaceEdgeMismatch { face: usize, slot: usize },
    EdgeFaceCount { edge: usize, count: usize },
    VertexDegree { vertex: usize, degree: usize },
    NonManifoldVertex { vertex: usize },
    NullHomotopicBigon { edges: [usize; 2] },
    DuplicateFace { faces: [usize; 2] },
    RepeatedVertexTriple { faces: [usize; 2] },
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "mesh has no vertices"),
            Violation::EdgeEndpointOutOfRange { edge, vertex } => {
                write!(f, "edge {edge} references vertex {vertex} which does not exist")
            }
            Violation::FaceIndexOutOfRange { face } => {
                write!(f, "face {face} references a vertex or edge which does not exist")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {edge} is a loop at a single vertex"),
            Violation::WeightOutOfRange { edge, weight } => {
                write!(f, "edge {edge} has weight {weight} outside [0, pi/2]")
            }
            Violation::FaceEdgeMismatch { face, slot } => write!(
                f,
                "face {face}: edge in slot {slot} does not join the vertices of the other two slots"
            ),
            Violation::EdgeFaceCount { edge, count } => {
                write!(f, "edge {edge} belongs to {count} face(s), expected 2")
            }
            Violation::VertexDegree { vertex, degree } => {
                write!(f, "vertex {vertex} has degree {degree}, expected at least 3")
            }
            Violation::NonManifoldVertex { vertex } => {
                write!(f, "faces around vertex {vertex} do not form a single disk")
            }
            Violation::NullHomotopicBigon { edges } => write!(
                f,
                "edges {} and {} form a null-homotopic loop of length 2",
                edges[0], edges[1]
            ),
            Violation::DuplicateFace { faces } => {
                write!(f, "faces {} and {} have the same edges", faces[0], faces[1])
            }
            Violation::RepeatedVertexTriple { faces } => write!(
                f,
                "faces {} and {} span the same three vertices",
                faces[0], faces[1]
            ),
            Violation::Disconnected { components } => {
                write!(f, "surface has {components} connected components")
            }
        }
    }
}

/// Combinatorial surface with a weight on every edge.
///
/// Immutable after construction. Invalid index data is tolerated by the
/// constructor so that [`validate`](Self::validate) can report it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTriangulation {
    vertex_count: usize,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    // (neighbor, edge) per vertex, in edge order
    incidence: Vec<Vec<(usize, usize)>>,
    // (face, slot) per edge
    edge_faces: Vec<Vec<(usize, usize)>>,
    // faces containing each vertex, in face order
    vertex_faces: Vec<Vec<usize>>,
}

impl WeightedTriangulation {
    pub fn new(vertex_count: usize, edges: Vec<Edge>, faces: Vec<Face>) -> Self {
        let mut incidence = vec![Vec::new(); vertex_count];
        for (e, edge) in edges.iter().enumerate() {
            if edge.a < vertex_count && edge.b < vertex_count {
                incidence[edge.a].push((edge.b, e));
                if edge.a != edge.b {
                    incidence[edge.b].push((edge.a, e));
                } else {
                    incidence[edge.a].push((edge.a, e));
                }
            }
        }
        let mut edge_faces = vec![Vec::new(); edges.len()];
        let mut vertex_faces = vec![Vec::new(); vertex_count];
        for (f, face) in faces.iter().enumerate() {
            for n in 0..3 {
                if let Some(list) = edge_faces.get_mut(face.edges[n]) {
                    list.push((f, n));
                }
                if let Some(list) = vertex_faces.get_mut(face.vertices[n]) {
                    if list.last() != Some(&f) {
                        list.push(f);
                    }
                }
            }
        }
        Self { vertex_count, edges, faces, incidence, edge_faces, vertex_faces }
    }

    /// Build a simplicial triangulation from vertex triples, creating one edge
    /// per adjacent vertex pair. Every edge gets `weight`.
    pub fn from_triangles(vertex_count: usize, triangles: &[[usize; 3]], weight: f64) -> Self {
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut faces = Vec::with_capacity(triangles.len());
        for tri in triangles {
            let mut fe = [0; 3];
            for n in 0..3 {
                let a = tri[(n + 1) % 3];
                let b = tri[(n + 2) % 3];
                let key = (a.min(b), a.max(b));
                fe[n] = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge { a: key.0, b: key.1, weight });
                    edges.len() - 1
                });
            }
            faces.push(Face { vertices: *tri, edges: fe });
        }
        Self::new(vertex_count, edges, faces)
    }

    /// Copy with one edge weight replaced.
    pub fn with_weight(&self, edge: usize, weight: f64) -> Self {
        let mut edges = self.edges.clone();
        edges[edge].weight = weight;
        Self::new(self.vertex_count, edges, self.faces.clone())
    }

    /// Copy with every edge weight mapped through `f(edge index, edge)`.
    pub fn map_weights(&self, mut f: impl FnMut(usize, &Edge) -> f64) -> Self {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| Edge { weight: f(i, e), ..*e })
            .collect();
        Self::new(self.vertex_count, edges, self.faces.clone())
    }

    /// Relabel vertices: vertex `v` becomes `perm[v]`. Edge and face indices are kept.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { a: perm[e.a], b: perm[e.b], weight: e.weight })
            .collect();
        let faces = self
            .faces
            .iter()
            .map(|f| Face { vertices: f.vertices.map(|v| perm[v]), edges: f.edges })
            .collect();
        Self::new(self.vertex_count, edges, faces)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    #[inline]
    pub fn face(&self, f: usize) -> &Face {
        &self.faces[f]
    }

    /// `(neighbor, edge)` pairs around `v`.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.incidence[v]
    }

    /// `(face, slot)` pairs containing edge `e`.
    pub fn edge_faces(&self, e: usize) -> &[(usize, usize)] {
        &self.edge_faces[e]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Number of edge ends at `v`.
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    /// Weights of the face's edges, slot by slot.
    pub fn face_weights(&self, f: usize) -> [f64; 3] {
        self.faces[f].edges.map(|e| self.edges[e].weight)
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.incidence
            .get(a)?
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, e)| e)
    }

    /// `N - |E| + |F|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Structural check in strict mode.
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(ValidationMode::Strict)
    }

    pub fn validate_with(&self, mode: ValidationMode) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.vertex_count;
        if n == 0 {
            out.push(Violation::Empty);
            return out;
        }

        for (e, edge) in self.edges.iter().enumerate() {
            for v in [edge.a, edge.b] {
                if v >= n {
                    out.push(Violation::EdgeEndpointOutOfRange { edge: e, vertex: v });
                }
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            if face.vertices.iter().any(|&v| v >= n) || face.edges.iter().any(|&e| e >= self.edges.len())
            {
                out.push(Violation::FaceIndexOutOfRange { face: f });
            }
        }
        if !out.is_empty() {
            return out;
        }

        for (e, edge) in self.edges.iter().enumerate() {
            if edge.a == edge.b {
                out.push(Violation::SelfLoop { edge: e });
            }
            if !(edge.weight.is_finite() && (0.0..=FRAC_PI_2).contains(&edge.weight)) {
                out.push(Violation::WeightOutOfRange { edge: e, weight: edge.weight });
            }
        }

        for (f, face) in self.faces.iter().enumerate() {
            for slot in 0..3 {
                let edge = &self.edges[face.edges[slot]];
                let want = {
                    let a = face.vertices[(slot + 1) % 3];
                    let b = face.vertices[(slot + 2) % 3];
                    (a.min(b), a.max(b))
                };
                if edge.key() != want {
                    out.push(Violation::FaceEdgeMismatch { face: f, slot });
                }
            }
        }

        let mut closed = true;
        for (e, list) in self.edge_faces.iter().enumerate() {
            if list.len() != 2 {
                closed = false;
                out.push(Violation::EdgeFaceCount { edge: e, count: list.len() });
            }
        }

        for v in 0..n {
            let d = self.degree(v);
            if d < 3 {
                out.push(Violation::VertexDegree { vertex: v, degree: d });
            }
        }

        let mut by_edges: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        let mut by_vertices: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            let mut ek = face.edges;
            ek.sort_unstable();
            if let Some(&g) = by_edges.get(&ek) {
                out.push(Violation::DuplicateFace { faces: [g, f] });
            } else {
                by_edges.insert(ek, f);
            }
            if mode == ValidationMode::Strict {
                let mut vk = face.vertices;
                vk.sort_unstable();
                if let Some(&g) = by_vertices.get(&vk) {
                    if by_edges.get(&ek) != Some(&g) {
                        out.push(Violation::RepeatedVertexTriple { faces: [g, f] });
                    }
                } else {
                    by_vertices.insert(vk, f);
                }
            }
        }

        let components = self.vertex_components();
        if components > 1 {
            out.push(Violation::Disconnected { components });
        }

        let structural_ok = out.is_empty() && closed;
        if structural_ok {
            for v in 0..n {
                if !self.vertex_star_is_disk(v) {
                    out.push(Violation::NonManifoldVertex { vertex: v });
                }
            }
        }
        if out.is_empty() {
            // two-edge loops: forbidden only when they bound a disk
            let mut parallel: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for (e, edge) in self.edges.iter().enumerate() {
                parallel.entry(edge.key()).or_default().push(e);
            }
            for group in parallel.values().filter(|g| g.len() > 1) {
                for (i, &e1) in group.iter().enumerate() {
                    for &e2 in &group[i + 1..] {
                        if loop_bounds_disk(self, &[e1, e2]) {
                            out.push(Violation::NullHomotopicBigon { edges: [e1, e2] });
                        }
                    }
                }
            }
        }
        out
    }

    /// Validate, turning violations into an error.
    pub fn ensure_valid(&self, mode: ValidationMode) -> Result<()> {
        let v = self.validate_with(mode);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    fn vertex_components(&self) -> usize {
        let mut uf = UnionFind::new(self.vertex_count);
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        uf.count()
    }

    // Faces around `v` joined across edges incident to `v` must form one cycle.
    fn vertex_star_is_disk(&self, v: usize) -> bool {
        let faces = &self.vertex_faces[v];
        if faces.is_empty() {
            return false;
        }
        let local: BTreeMap<usize, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut uf = UnionFind::new(faces.len());
        for &(_, e) in &self.incidence[v] {
            let list = &self.edge_faces[e];
            if list.len() == 2 {
                uf.union(local[&list[0].0], local[&list[1].0]);
            }
        }
        uf.count() == 1
    }

    pub fn subcomplex_and_link(&self, subset: &VertexSubset) -> SubcomplexStats {
        let inside = subset.mask(self.vertex_count);
        let edge_count = self.edges.iter().filter(|e| inside[e.a] && inside[e.b]).count();
        let mut face_count = 0;
        let mut link_pairs = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            let hits = face.vertices.iter().filter(|&&v| inside[v]).count();
            if hits == 3 {
                face_count += 1;
            } else if hits == 1 {
                let slot = face.vertices.iter().position(|&v| inside[v]).unwrap_or(0);
                link_pairs.push(LinkPair { edge: face.edges[slot], vertex: face.vertices[slot], face: f });
            }
        }
        let vertex_count = subset.len();
        SubcomplexStats {
            vertex_count,
            edge_count,
            face_count,
            euler_char: vertex_count as i64 - edge_count as i64 + face_count as i64,
            link_pairs,
        }
    }

    /// Connected components of the subcomplex spanned by `subset`, as vertex subsets.
    pub fn subcomplex_components(&self, subset: &VertexSubset) -> Vec<VertexSubset> {
        let inside = subset.mask(self.vertex_count);
        let mut uf = UnionFind::new(self.vertex_count);
        for e in &self.edges {
            if inside[e.a] && inside[e.b] {
                uf.union(e.a, e.b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in subset.members() {
            groups.entry(uf.find(v)).or_default().push(v);
        }
        groups
            .into_values()
            .map(|members| VertexSubset { members })
            .collect()
    }
}

/// A nonempty set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSubset {
    members: Vec<usize>,
}

impl VertexSubset {
    /// A proper nonempty subset of `0..vertex_count`.
    pub fn new(members: impl IntoIterator<Item = usize>, vertex_count: usize) -> Result<Self> {
        let set: BTreeSet<usize> = members.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        if let Some(&v) = set.iter().find(|&&v| v >= vertex_count) {
            return Err(Error::InvalidSubset(format!("vertex {v} out of range")));
        }
        if set.len() >= vertex_count {
            return Err(Error::InvalidSubset("subset must be proper".into()));
        }
        Ok(Self { members: set.into_iter().collect() })
    }

    /// Subset from the set bits of `mask`.
    pub fn from_mask(mask: u64, vertex_count: usize) -> Result<Self> {
        Self::new((0..vertex_count.min(64)).filter(|&v| mask >> v & 1 == 1), vertex_count)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn mask(&self, vertex_count: usize) -> Vec<bool> {
        let mut m = vec![false; vertex_count];
        for &v in &self.members {
            m[v] = true;
        }
        m
    }
}

/// `(e, v)` in the link of a vertex subset, with the face it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkPair {
    pub edge: usize,
    pub vertex: usize,
    pub face: usize,
}

/// Cell counts of the subcomplex spanned by a vertex subset, plus its link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubcomplexStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_char: i64,
    pub link_pairs: Vec<LinkPair>,
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub(crate) fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }
}
