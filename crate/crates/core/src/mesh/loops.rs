//! Short closed edge paths and their null-homotopy.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{UnionFind, WeightedTriangulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Homotopy {
    NullHomotopic,
    Essential,
    /// The path revisits a vertex; no verdict is attempted.
    Undetermined,
}

/// A closed edge path of length 3 or 4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortLoop {
    /// `vertices[i]` and `vertices[i + 1]` are joined by `edges[i]` (cyclically).
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub weight_sum: f64,
    pub bounds_face: bool,
    pub bounds_two_faces: bool,
    pub homotopy: Homotopy,
}

impl ShortLoop {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_embedded(&self) -> bool {
        let set: BTreeSet<_> = self.vertices.iter().collect();
        set.len() == self.vertices.len()
    }
}

/// All closed trails (no repeated edge) of length `3..=max_len`, one entry per edge set.
///
/// `max_len` is clamped to `[3, 4]`. Loops are sorted by length, then by edge set.
pub fn enumerate_short_loops(mesh: &WeightedTriangulation, max_len: usize) -> Vec<ShortLoop> {
    let max_len = max_len.clamp(3, 4);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut found: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();

    for start in 0..mesh.vertex_count() {
        let mut verts = vec![start];
        let mut edges = Vec::new();
        walk(mesh, start, max_len, &mut verts, &mut edges, &mut |vs, es| {
            let mut key = es.to_vec();
            key.sort_unstable();
            if seen.insert(key) {
                found.push((vs.to_vec(), es.to_vec()));
            }
        });
    }

    let mut loops: Vec<ShortLoop> = found
        .into_iter()
        .map(|(vertices, edges)| annotate(mesh, vertices, edges))
        .collect();
    loops.sort_by(|a, b| {
        let mut ka = a.edges.clone();
        let mut kb = b.edges.clone();
        ka.sort_unstable();
        kb.sort_unstable();
        (a.len(), ka).cmp(&(b.len(), kb))
    });
    loops
}

fn walk(
    mesh: &WeightedTriangulation,
    start: usize,
    max_len: usize,
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize], &[usize]),
) {
    let here = *verts.last().unwrap_or(&start);
    for &(next, e) in mesh.incident(here) {
        if edges.contains(&e) {
            continue;
        }
        // only trails whose smallest vertex is the start, so each loop is met
        // from one base point
        if next < start {
            continue;
        }
        edges.push(e);
        if next == start {
            if edges.len() >= 3 {
                emit(verts, edges);
            }
        } else if edges.len() < max_len {
            verts.push(next);
            walk(mesh, start, max_len, verts, edges, emit);
            verts.pop();
        }
        edges.pop();
    }
}

fn annotate(mesh: &WeightedTriangulation, vertices: Vec<usize>, edges: Vec<usize>) -> ShortLoop {
    let mut key = edges.clone();
    key.sort_unstable();
    let weight_sum = edges.iter().map(|&e| mesh.edge(e).weight).sum();

    let bounds_face = key.len() == 3
        && mesh.faces().iter().any(|f| {
            let mut fe = f.edges;
            fe.sort_unstable();
            fe[..] == key[..]
        });

    let bounds_two_faces = key.len() == 4
        && (0..mesh.edges().len()).any(|e| {
            if key.contains(&e) {
                return false;
            }
            let fs = mesh.edge_faces(e);
            if fs.len() != 2 || fs[0].0 == fs[1].0 {
                return false;
            }
            let mut rim: Vec<usize> = mesh
                .face(fs[0].0)
                .edges
                .iter()
                .chain(mesh.face(fs[1].0).edges.iter())
                .copied()
                .filter(|&x| x != e)
                .collect();
            rim.sort_unstable();
            rim == key
        });

    let mut lp = ShortLoop {
        vertices,
        edges,
        weight_sum,
        bounds_face,
        bounds_two_faces,
        homotopy: Homotopy::Undetermined,
    };
    if lp.is_embedded() {
        lp.homotopy = if loop_bounds_disk(mesh, &lp.edges) {
            Homotopy::NullHomotopic
        } else {
            Homotopy::Essential
        };
    }
    lp
}

/// Whether the closed path made of `loop_edges` bounds an embedded disk.
///
/// Faces are joined across every edge not on the path. A complementary
/// region that meets each path edge from exactly one side and whose open
/// Euler characteristic (faces minus interior edges plus interior vertices)
/// is 1 is a disk with the path as its boundary.
pub fn loop_bounds_disk(mesh: &WeightedTriangulation, loop_edges: &[usize]) -> bool {
    if loop_edges.is_empty() {
        return false;
    }
    let on_loop: BTreeSet<usize> = loop_edges.iter().copied().collect();
    let loop_vertices: BTreeSet<usize> =
        loop_edges.iter().flat_map(|&e| [mesh.edge(e).a, mesh.edge(e).b]).collect();
    // every loop vertex must meet exactly two loop edges
    for &v in &loop_vertices {
        let ends = mesh.incident(v).iter().filter(|&&(_, e)| on_loop.contains(&e)).count();
        if ends != 2 {
            return false;
        }
    }

    let nf = mesh.faces().len();
    let mut uf = UnionFind::new(nf);
    for e in 0..mesh.edges().len() {
        if on_loop.contains(&e) {
            continue;
        }
        let fs = mesh.edge_faces(e);
        for w in fs.windows(2) {
            uf.union(w[0].0, w[1].0);
        }
    }

    let mut roots: BTreeSet<usize> = BTreeSet::new();
    for f in 0..nf {
        roots.insert(uf.find(f));
    }
    for root in roots {
        let in_region: Vec<bool> = (0..nf).map(|f| uf.find(f) == root).collect();
        let faces = in_region.iter().filter(|&&b| b).count() as i64;

        let one_sided = loop_edges.iter().all(|&e| {
            mesh.edge_faces(e).iter().filter(|&&(f, _)| in_region[f]).count() == 1
        });
        if !one_sided {
            continue;
        }

        let interior_edges = (0..mesh.edges().len())
            .filter(|e| !on_loop.contains(e))
            .filter(|&e| mesh.edge_faces(e).iter().any(|&(f, _)| in_region[f]))
            .count() as i64;
        let interior_vertices = (0..mesh.vertex_count())
            .filter(|v| !loop_vertices.contains(v))
            .filter(|&v| mesh.vertex_faces(v).iter().any(|&f| in_region[f]))
            .count() as i64;
        if faces - interior_edges + interior_vertices == 1 {
            return true;
        }
    }
    false
}
