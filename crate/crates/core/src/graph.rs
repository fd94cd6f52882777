//! Undirected simple graphs in compressed adjacency form, plus component
//! labelling, induced subgraphs and edge-list I/O.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

/// Immutable undirected graph without self-loops or multi-edges.
///
/// Neighbor lists are stored back to back (`offsets[i]..offsets[i + 1]`),
/// each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SparseGraph {
    /// Builds a graph on `n` vertices. Edges may repeat and appear in either
    /// orientation; they are symmetrized and deduplicated.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(invalid(format!("vertex count {n} exceeds u32 range")));
        }
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::OutOfRange(format!("edge ({u}, {v}) with n = {n}")));
            }
            if u == v {
                return Err(invalid(format!("self-loop at vertex {u}")));
            }
            pairs.push((u as u32, v as u32));
            pairs.push((v as u32, u as u32));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_arcs(n, &pairs))
    }

    // `arcs` must be sorted, deduplicated and symmetric.
    fn from_sorted_arcs(n: usize, arcs: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in arcs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = arcs.iter().map(|&(_, v)| v).collect();
        Self { offsets, neighbors }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Undirected edge count.
    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    pub fn degree_vector(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn connected_components(&self) -> ComponentMap {
        connected_components(self)
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the
    /// order given.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<(SparseGraph, VertexMap)> {
        if vertices.is_empty() {
            return Err(invalid("induced subgraph of an empty vertex set"));
        }
        let n = self.n();
        let mut to_new = vec![u32::MAX; n];
        for (new, &old) in vertices.iter().enumerate() {
            if old >= n {
                return Err(Error::OutOfRange(format!("vertex {old} with n = {n}")));
            }
            if to_new[old] != u32::MAX {
                return Err(invalid(format!("vertex {old} listed twice")));
            }
            to_new[old] = new as u32;
        }
        let mut arcs = Vec::new();
        for (new_u, &old_u) in vertices.iter().enumerate() {
            for &old_v in self.neighbors(old_u) {
                let new_v = to_new[old_v as usize];
                if new_v != u32::MAX {
                    arcs.push((new_u as u32, new_v));
                }
            }
        }
        arcs.sort_unstable();
        let sub = Self::from_sorted_arcs(vertices.len(), &arcs);
        Ok((
            sub,
            VertexMap {
                original: vertices.to_vec(),
                to_new,
            },
        ))
    }

    /// Writes the edge list with a `# n=<count>` header.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# n={}", self.n())?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Correspondence between a subgraph's compact indices and the parent graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexMap {
    original: Vec<usize>,
    to_new: Vec<u32>,
}

impl VertexMap {
    pub fn identity(n: usize) -> Self {
        Self {
            original: (0..n).collect(),
            to_new: (0..n as u32).collect(),
        }
    }

    /// Parent index of compact vertex `new`.
    pub fn original(&self, new: usize) -> usize {
        self.original[new]
    }

    /// Compact index of parent vertex `old`, if it was selected.
    pub fn to_new(&self, old: usize) -> Option<usize> {
        match self.to_new.get(old) {
            Some(&v) if v != u32::MAX => Some(v as usize),
            _ => None,
        }
    }

    pub fn originals(&self) -> &[usize] {
        &self.original
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }
}

/// Connected components. Ids are assigned in order of each component's
/// smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentMap {
    pub component_id: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Largest component; ties go to the smallest id.
    pub giant_index: usize,
}

impl ComponentMap {
    pub fn giant_size(&self) -> usize {
        self.sizes.get(self.giant_index).copied().unwrap_or(0)
    }

    /// Vertices of component `id` in ascending order.
    pub fn members(&self, id: usize) -> Vec<usize> {
        self.component_id
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == id)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn giant_vertices(&self) -> Vec<usize> {
        self.members(self.giant_index)
    }
}

pub fn connected_components(g: &SparseGraph) -> ComponentMap {
    let n = g.n();
    let mut component_id = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..n {
        if component_id[root] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        component_id[root] = id;
        queue.push_back(root);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in g.neighbors(u) {
                let v = v as usize;
                if component_id[v] == usize::MAX {
                    component_id[v] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    let giant_index = sizes
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > sizes[best] { i } else { best });
    ComponentMap {
        component_id,
        sizes,
        giant_index,
    }
}

pub fn degree_vector(g: &SparseGraph) -> Vec<usize> {
    g.degree_vector()
}

pub fn induced_subgraph(g: &SparseGraph, vertices: &[usize]) -> Result<(SparseGraph, VertexMap)> {
    g.induced_subgraph(vertices)
}

/// Reads a whitespace-separated edge list.
///
/// Blank lines and lines starting with `#` are skipped, except a `# n=<int>`
/// header which fixes the vertex count. `n_override` takes precedence over
/// both the header and the largest id seen.
pub fn load_edge_list<R: BufRead>(reader: R, n_override: Option<usize>) -> Result<SparseGraph> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                let n = v.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    msg: format!("bad vertex-count header: {e}"),
                })?;
                header_n = Some(n);
            }
            continue;
        }
        let mut fields = t.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected two vertex ids, got {t:?}"),
            });
        };
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad vertex id {s:?}: {e}"),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("self-loop at vertex {u}"),
            });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = n_override
        .or(header_n)
        .unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    if let Some(m) = max_id {
        if m >= n {
            return Err(Error::OutOfRange(format!("vertex {m} with declared n = {n}")));
        }
    }
    SparseGraph::from_edges(n, edges)
}
