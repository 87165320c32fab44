//! Finite multigraphs with explicit half-edge incidence.
//!
//! A [`Graph`] is a 1-dimensional CW complex: vertices, edges, and for every
//! edge exactly two half-edges. Half-edge `h` belongs to edge `h / 2` and sits
//! at end `h % 2` of that edge, so a self-loop has both half-edges at one
//! vertex. All orderings are declaration order and are stable: they fix the
//! sign conventions of the chain complexes built on top.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type VertexId = usize;
pub type EdgeId = usize;
pub type HalfEdgeId = usize;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("parse error: invalid JSON graph: {0}")]
    Json(String),
    #[error("edge `{edge}` references undeclared vertex `{vertex}`")]
    UndeclaredVertex { edge: String, vertex: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("isolated vertex `{0}`")]
    IsolatedVertex(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown half-edge `{0}`")]
    UnknownHalfEdge(String),
    #[error("graph is disconnected ({0} components); compute per component")]
    Disconnected(usize),
    #[error("requested {requested} essential vertices but the graph has only {available}")]
    TooManyVertices { requested: usize, available: usize },
    #[error("vertex `{0}` is not essential (degree < 3)")]
    NotEssential(String),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// A finite multigraph with half-edge incidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    /// `ends[e][s]` is the vertex of half-edge `2e + s`.
    ends: Vec<[VertexId; 2]>,
    /// `H(v)` in ascending half-edge order.
    incidence: Vec<Vec<HalfEdgeId>>,
    vertex_index: HashMap<String, VertexId>,
    edge_index: HashMap<String, EdgeId>,
}

/// A set of vertices of some graph, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexSet(BTreeSet<VertexId>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: VertexId) -> bool {
        self.0.insert(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.0.iter().copied()
    }

    /// Vertex names, in vertex order.
    pub fn names<'g>(&self, g: &'g Graph) -> Vec<&'g str> {
        self.iter().map(|v| g.vertex_name(v)).collect()
    }
}

impl FromIterator<VertexId> for VertexSet {
    fn from_iter<I: IntoIterator<Item = VertexId>>(iter: I) -> Self {
        VertexSet(iter.into_iter().collect())
    }
}

/// A partition of the edge set into nonempty disjoint blocks.
///
/// Blocks are sorted internally and ordered by their smallest edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePartition {
    blocks: Vec<Vec<EdgeId>>,
    block_of: Vec<usize>,
}

impl EdgePartition {
    /// Builds a partition from a block label per edge.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: BTreeMap<usize, Vec<EdgeId>> = BTreeMap::new();
        for (e, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(e);
        }
        let mut blocks: Vec<Vec<EdgeId>> = groups.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![0; labels.len()];
        for (bi, b) in blocks.iter().enumerate() {
            for &e in b {
                block_of[e] = bi;
            }
        }
        EdgePartition { blocks, block_of }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<EdgeId>] {
        &self.blocks
    }

    pub fn block_of(&self, e: EdgeId) -> usize {
        self.block_of[e]
    }

    pub fn same_block(&self, a: EdgeId, b: EdgeId) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// Blocks rendered with edge names, for reports and tests.
    pub fn named_blocks(&self, g: &Graph) -> Vec<Vec<String>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&e| g.edge_name(e).to_string()).collect())
            .collect()
    }
}

/// Result of [`Graph::subdivide`].
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: Graph,
    pub vertex: VertexId,
    pub edges: [EdgeId; 2],
}

/// The `i`th Ramos number with all maximizing vertex sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RamosNumber {
    pub i: usize,
    pub delta: usize,
    pub maximizers: Vec<VertexSet>,
}

#[derive(Deserialize)]
struct JsonGraph {
    vertices: Vec<String>,
    edges: Vec<JsonEdge>,
}

#[derive(Deserialize)]
struct JsonEdge {
    id: String,
    ends: [String; 2],
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Graph {
    /// Builds a graph from named vertices and `(edge, end0, end1)` triples.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Graph>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String)>,
    {
        let vertex_names: Vec<String> = vertices.into_iter().map(Into::into).collect();
        let mut vertex_index = HashMap::new();
        for (i, v) in vertex_names.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(GraphError::DuplicateId(v.clone()));
            }
        }
        let mut edge_names = Vec::new();
        let mut ends = Vec::new();
        let mut edge_index = HashMap::new();
        for (name, a, b) in edges {
            if vertex_index.contains_key(&name) || edge_index.contains_key(&name) {
                return Err(GraphError::DuplicateId(name));
            }
            let lookup = |v: &String| {
                vertex_index.get(v).copied().ok_or_else(|| GraphError::UndeclaredVertex {
                    edge: name.clone(),
                    vertex: v.clone(),
                })
            };
            let ea = lookup(&a)?;
            let eb = lookup(&b)?;
            edge_index.insert(name.clone(), edge_names.len());
            edge_names.push(name);
            ends.push([ea, eb]);
        }
        Self::from_raw(vertex_names, edge_names, ends)
    }

    fn from_raw(vertex_names: Vec<String>, edge_names: Vec<String>, ends: Vec<[VertexId; 2]>) -> Result<Graph> {
        if vertex_names.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut incidence = vec![Vec::new(); vertex_names.len()];
        for (e, pair) in ends.iter().enumerate() {
            incidence[pair[0]].push(2 * e);
            incidence[pair[1]].push(2 * e + 1);
        }
        for h in incidence.iter_mut() {
            h.sort_unstable();
        }
        if let Some(v) = incidence.iter().position(Vec::is_empty) {
            return Err(GraphError::IsolatedVertex(vertex_names[v].clone()));
        }
        let vertex_index = vertex_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let edge_index = edge_names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        Ok(Graph { vertex_names, edge_names, ends, incidence, vertex_index, edge_index })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_names.len()
    }

    pub fn half_edge_count(&self) -> usize {
        2 * self.edge_names.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.vertex_count()
    }

    pub fn edges(&self) -> std::ops::Range<EdgeId> {
        0..self.edge_count()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e]
    }

    /// Half-edges are named `<edge>.<end>` with end 0 or 1.
    pub fn half_edge_name(&self, h: HalfEdgeId) -> String {
        format!("{}.{}", self.edge_names[h / 2], h % 2)
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index.get(name).copied().ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn edge_id(&self, name: &str) -> Result<EdgeId> {
        self.edge_index.get(name).copied().ok_or_else(|| GraphError::UnknownEdge(name.to_string()))
    }

    pub fn half_edge_id(&self, name: &str) -> Result<HalfEdgeId> {
        let bad = || GraphError::UnknownHalfEdge(name.to_string());
        let (edge, end) = name.rsplit_once('.').ok_or_else(bad)?;
        let e = self.edge_index.get(edge).copied().ok_or_else(bad)?;
        match end {
            "0" => Ok(2 * e),
            "1" => Ok(2 * e + 1),
            _ => Err(bad()),
        }
    }

    pub fn vertex_set<'a, I: IntoIterator<Item = &'a str>>(&self, names: I) -> Result<VertexSet> {
        names.into_iter().map(|n| self.vertex_id(n)).collect()
    }

    /// The vertex `v(h)`.
    pub fn half_edge_vertex(&self, h: HalfEdgeId) -> VertexId {
        self.ends[h / 2][h % 2]
    }

    /// The edge `e(h)`.
    pub fn half_edge_edge(&self, h: HalfEdgeId) -> EdgeId {
        h / 2
    }

    /// The other half-edge of the same edge.
    pub fn opposite(&self, h: HalfEdgeId) -> HalfEdgeId {
        h ^ 1
    }

    pub fn edge_ends(&self, e: EdgeId) -> [VertexId; 2] {
        self.ends[e]
    }

    /// `H(v)` in ascending order.
    pub fn half_edges_at(&self, v: VertexId) -> &[HalfEdgeId] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v].len()
    }

    pub fn essential_vertices(&self) -> VertexSet {
        self.vertices().filter(|&v| self.degree(v) >= 3).collect()
    }

    /// Edges with an endpoint of degree 1.
    pub fn tails(&self) -> BTreeSet<EdgeId> {
        self.edges().filter(|&e| self.is_tail(e)).collect()
    }

    pub fn is_tail(&self, e: EdgeId) -> bool {
        self.ends[e].iter().any(|&v| self.degree(v) == 1)
    }

    /// Labels each vertex by connected component.
    fn vertex_components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.vertex_count());
        for [a, b] in &self.ends {
            uf.union(*a, *b);
        }
        (0..self.vertex_count()).map(|v| uf.find(v)).collect()
    }

    pub fn component_count(&self) -> usize {
        self.vertex_components().into_iter().collect::<HashSet<_>>().len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// `b_1 = |E| - |V| + #components`.
    pub fn first_betti(&self) -> usize {
        self.edge_count() + self.component_count() - self.vertex_count()
    }

    /// Replaces `e` by two edges meeting at a fresh bivalent vertex.
    ///
    /// The first new edge keeps the position of `e` and its end-0 half-edge;
    /// the second is inserted directly after it and keeps the end-1 half-edge.
    pub fn subdivide(&self, e: EdgeId) -> Result<Subdivision> {
        if e >= self.edge_count() {
            return Err(GraphError::UnknownEdge(format!("#{e}")));
        }
        let base = &self.edge_names[e];
        let mid = self.fresh_name(&format!("{base}_m"));
        let first = self.fresh_name(&format!("{base}_a"));
        let second = self.fresh_name(&format!("{base}_b"));
        let mut vertex_names = self.vertex_names.clone();
        let new_vertex = vertex_names.len();
        vertex_names.push(mid);
        let mut edge_names = self.edge_names.clone();
        let mut ends = self.ends.clone();
        let [a, b] = self.ends[e];
        edge_names[e] = first;
        ends[e] = [a, new_vertex];
        edge_names.insert(e + 1, second);
        ends.insert(e + 1, [new_vertex, b]);
        let graph = Self::from_raw(vertex_names, edge_names, ends)?;
        Ok(Subdivision { graph, vertex: new_vertex, edges: [e, e + 1] })
    }

    /// Explodes every vertex of `w`: each half-edge at `u ∈ w` is moved to a
    /// fresh degree-1 stub. Surviving vertices keep their names and relative
    /// order, stubs are appended in half-edge order, and edges and half-edges
    /// keep their ids.
    pub fn explode(&self, w: &VertexSet) -> Result<Graph> {
        for v in w.iter() {
            if v >= self.vertex_count() {
                return Err(GraphError::UnknownVertex(format!("#{v}")));
            }
        }
        let mut vertex_names = self.vertex_names.clone();
        let mut ends = self.ends.clone();
        let mut taken: HashSet<String> = self.vertex_names.iter().chain(&self.edge_names).cloned().collect();
        for h in 0..self.half_edge_count() {
            let v = self.half_edge_vertex(h);
            if !w.contains(v) {
                continue;
            }
            let mut name = format!("{}_{}_{}", self.vertex_names[v], self.edge_names[h / 2], h % 2);
            while taken.contains(&name) {
                name.push('_');
            }
            taken.insert(name.clone());
            ends[h / 2][h % 2] = vertex_names.len();
            vertex_names.push(name);
        }
        // exploded vertices become isolated; drop them and renumber
        let keep: Vec<VertexId> = (0..vertex_names.len()).filter(|&v| v >= self.vertex_count() || !w.contains(v)).collect();
        let mut renumber = vec![usize::MAX; vertex_names.len()];
        for (new, &old) in keep.iter().enumerate() {
            renumber[old] = new;
        }
        let names = keep.iter().map(|&v| vertex_names[v].clone()).collect();
        let ends = ends.iter().map(|[a, b]| [renumber[*a], renumber[*b]]).collect();
        Self::from_raw(names, self.edge_names.clone(), ends)
    }

    /// Partition of `E` by connected component of the explosion `Γ_W`.
    pub fn component_partition(&self, w: &VertexSet) -> EdgePartition {
        let mut uf = UnionFind::new(self.edge_count());
        for v in self.vertices() {
            if w.contains(v) {
                continue;
            }
            let hs = self.half_edges_at(v);
            for pair in hs.windows(2) {
                uf.union(pair[0] / 2, pair[1] / 2);
            }
        }
        let labels: Vec<usize> = self.edges().map(|e| uf.find(e)).collect();
        EdgePartition::from_labels(&labels)
    }

    /// `Δ^W`, the number of components of `Γ_W`.
    pub fn delta(&self, w: &VertexSet) -> usize {
        self.component_partition(w).block_count()
    }

    /// The `i`th Ramos number, by exhaustive search over `i`-subsets of
    /// essential vertices.
    pub fn ramos_number(&self, i: usize) -> Result<RamosNumber> {
        let comps = self.component_count();
        if comps != 1 {
            return Err(GraphError::Disconnected(comps));
        }
        let essential: Vec<VertexId> = self.essential_vertices().iter().collect();
        if i > essential.len() {
            return Err(GraphError::TooManyVertices { requested: i, available: essential.len() });
        }
        let mut delta = 0;
        let mut maximizers = Vec::new();
        for combo in essential.iter().copied().combinations(i) {
            let w: VertexSet = combo.into_iter().collect();
            let d = self.delta(&w);
            if d > delta {
                delta = d;
                maximizers.clear();
            }
            if d == delta {
                maximizers.push(w);
            }
        }
        Ok(RamosNumber { i, delta, maximizers })
    }

    /// Whether every `u ∈ w` has half-edges in at least two blocks of `π₀(Γ_W)`.
    pub fn is_well_separating(&self, w: &VertexSet) -> Result<bool> {
        for u in w.iter() {
            if u >= self.vertex_count() {
                return Err(GraphError::UnknownVertex(format!("#{u}")));
            }
            if self.degree(u) < 3 {
                return Err(GraphError::NotEssential(self.vertex_names[u].clone()));
            }
        }
        let partition = self.component_partition(w);
        Ok(w.iter().all(|u| {
            self.half_edges_at(u).iter().map(|&h| partition.block_of(h / 2)).unique().count() >= 2
        }))
    }

    /// Disjoint union; right-hand names are prefixed with `r_` on collision.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph> {
        let mut taken: HashSet<String> = self.vertex_names.iter().chain(&self.edge_names).cloned().collect();
        let mut rename = |n: &String| {
            let mut name = n.clone();
            while taken.contains(&name) {
                name = format!("r_{name}");
            }
            taken.insert(name.clone());
            name
        };
        let mut vertex_names = self.vertex_names.clone();
        vertex_names.extend(other.vertex_names.iter().map(&mut rename));
        let mut edge_names = self.edge_names.clone();
        edge_names.extend(other.edge_names.iter().map(&mut rename));
        let offset = self.vertex_count();
        let mut ends = self.ends.clone();
        ends.extend(other.ends.iter().map(|[a, b]| [a + offset, b + offset]));
        Self::from_raw(vertex_names, edge_names, ends)
    }

    fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.vertex_index.contains_key(&name) || self.edge_index.contains_key(&name) {
            name.push('_');
        }
        name
    }

    /// Canonical text form, accepted by [`parse_graph`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertex_names {
            out.push_str(&format!("vertex {v}\n"));
        }
        for (e, [a, b]) in self.ends.iter().enumerate() {
            out.push_str(&format!("edge {} {} {}\n", self.edge_names[e], self.vertex_names[*a], self.vertex_names[*b]));
        }
        out
    }

    /// Short content hash of the canonical text form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses the line format (`vertex <id>`, `edge <id> <v> <v>`, `#` comments)
/// or the JSON mirror `{"vertices": [...], "edges": [{"id", "ends"}]}`.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        let doc: JsonGraph = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        for id in doc.vertices.iter().chain(doc.edges.iter().map(|e| &e.id)) {
            if !valid_token(id) {
                return Err(GraphError::Json(format!("invalid id `{id}`")));
            }
        }
        let edges = doc.edges.into_iter().map(|e| {
            let [a, b] = e.ends;
            (e.id, a, b)
        });
        return Graph::new(doc.vertices, edges);
    }
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| GraphError::Parse { line: n + 1, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if let Some(bad) = tokens[1..].iter().find(|t| !valid_token(t)) {
            return Err(err(format!("invalid id `{bad}`")));
        }
        match tokens.as_slice() {
            ["vertex", id] => vertices.push(id.to_string()),
            ["edge", id, a, b] => edges.push((id.to_string(), a.to_string(), b.to_string())),
            ["vertex", ..] => return Err(err("expected `vertex <id>`".into())),
            ["edge", ..] => return Err(err("expected `edge <id> <vertex> <vertex>`".into())),
            [other, ..] => return Err(err(format!("unknown directive `{other}`"))),
            [] => unreachable!(),
        }
    }
    Graph::new(vertices, edges)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
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
            // smaller root wins so labels are deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Small named graphs used throughout tests, examples, and the CLI docs.
pub mod library {
    use super::{Graph, VertexId};

    fn build(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Graph {
        Graph::new(
            vertices.iter().map(|s| s.to_string()),
            edges.iter().map(|(e, a, b)| (e.to_string(), a.to_string(), b.to_string())),
        )
        .expect("library graph is well-formed")
    }

    /// The star `S_n`: center `c`, leaves `l1..ln`, edges `e1..en`.
    pub fn star(n: usize) -> Graph {
        let mut vs = vec!["c".to_string()];
        vs.extend((1..=n).map(|j| format!("l{j}")));
        Graph::new(vs, (1..=n).map(|j| (format!("e{j}"), "c".to_string(), format!("l{j}")))).unwrap()
    }

    /// A path with `n` edges.
    pub fn path(n: usize) -> Graph {
        Graph::new(
            (0..=n).map(|j| format!("p{j}")),
            (0..n).map(|j| (format!("s{j}"), format!("p{j}"), format!("p{}", j + 1))),
        )
        .unwrap()
    }

    pub fn interval() -> Graph {
        path(1)
    }

    /// The cycle with `n ≥ 1` vertices.
    pub fn cycle(n: usize) -> Graph {
        Graph::new(
            (0..n).map(|j| format!("c{j}")),
            (0..n).map(|j| (format!("z{j}"), format!("c{j}"), format!("c{}", (j + 1) % n))),
        )
        .unwrap()
    }

    pub fn triangle() -> Graph {
        cycle(3)
    }

    /// Two vertices joined by `n` parallel edges.
    pub fn banana(n: usize) -> Graph {
        Graph::new(["a", "b"].map(String::from), (1..=n).map(|j| (format!("e{j}"), "a".to_string(), "b".to_string())))
            .unwrap()
    }

    /// The theta graph: `banana(3)` with vertices named top/bottom and
    /// edges left, middle, right.
    pub fn theta() -> Graph {
        build(&["t", "b"], &[("x", "t", "b"), ("y", "t", "b"), ("z", "t", "b")])
    }

    /// Junction `a` with a self-loop `f` and a stick `e` to the leaf `b`.
    pub fn lollipop() -> Graph {
        build(&["a", "b"], &[("e", "a", "b"), ("f", "a", "a")])
    }

    /// Two trivalent vertices `u`, `w` joined by `m`, each with two leaves.
    pub fn h_tree() -> Graph {
        build(
            &["u", "w", "p", "q", "r", "s"],
            &[("up", "u", "p"), ("uq", "u", "q"), ("m", "u", "w"), ("wr", "w", "r"), ("ws", "w", "s")],
        )
    }

    /// The tree with vertices A..H, essential vertices C, D, F.
    pub fn partition_example() -> Graph {
        build(
            &["A", "B", "C", "D", "E", "F", "G", "H"],
            &[
                ("AC", "A", "C"),
                ("BC", "B", "C"),
                ("CD", "C", "D"),
                ("DE", "D", "E"),
                ("DF", "D", "F"),
                ("FG", "F", "G"),
                ("FH", "F", "H"),
            ],
        )
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                edges.push((format!("k{a}{b}"), format!("v{a}"), format!("v{b}")));
            }
        }
        Graph::new((1..=n).map(|j| format!("v{j}")), edges).unwrap()
    }

    pub fn k33() -> Graph {
        let mut edges = Vec::new();
        for a in 1..=3 {
            for b in 1..=3 {
                edges.push((format!("k{a}{b}"), format!("x{a}"), format!("y{b}")));
            }
        }
        Graph::new((1..=3).map(|j| format!("x{j}")).chain((1..=3).map(|j| format!("y{j}"))), edges).unwrap()
    }

    /// The first vertex of degree `d`, if any.
    pub fn first_of_degree(g: &Graph, d: usize) -> Option<VertexId> {
        g.vertices().find(|&v| g.degree(v) == d)
    }
}

#[cfg(test)]
mod tests {
    use super::library::*;
    use super::*;

    fn names(g: &Graph, w: &VertexSet) -> Vec<String> {
        w.names(g).into_iter().map(String::from).collect()
    }

    #[test]
    fn parse_star() {
        let g = parse_graph("# star\nvertex a\nvertex b\nvertex c\nvertex d\nedge ab a b\nedge ac a c\nedge ad a d\n").unwrap();
        assert_eq!(g.degree(g.vertex_id("a").unwrap()), 3);
        for v in ["b", "c", "d"] {
            assert_eq!(g.degree(g.vertex_id(v).unwrap()), 1);
        }
    }

    #[test]
    fn parse_parallel_edges() {
        let g = parse_graph("vertex a\nvertex b\nedge e1 a b\nedge e2 a b\nedge e3 a b\nedge e4 a b").unwrap();
        assert_eq!((g.vertex_count(), g.edge_count(), g.half_edge_count()), (2, 4, 8));
    }

    #[test]
    fn parse_json_matches_text() {
        let j = r#"{"vertices": ["a", "b"], "edges": [{"id": "e", "ends": ["a", "b"]}, {"id": "f", "ends": ["a", "a"]}]}"#;
        let g = parse_graph(j).unwrap();
        assert_eq!(g, lollipop());
        assert_eq!(parse_graph(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_graph("vertex a\nvertex b\nvertex c\nedge e a b"), Err(GraphError::IsolatedVertex("c".into())));
        assert!(matches!(parse_graph("vertex a\nedge e a z"), Err(GraphError::UndeclaredVertex { .. })));
        assert_eq!(parse_graph("vertex a\nvertex a"), Err(GraphError::DuplicateId("a".into())));
        assert!(matches!(parse_graph("vertex a\nedgy e a a"), Err(GraphError::Parse { line: 2, .. })));
        assert!(matches!(parse_graph("vertex a b"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse_graph("vertex a-b"), Err(GraphError::Parse { .. })));
        assert_eq!(parse_graph("# nothing"), Err(GraphError::Empty));
    }

    #[test]
    fn essential_and_tails() {
        let s3 = star(3);
        assert_eq!(names(&s3, &s3.essential_vertices()), ["c"]);
        assert!(triangle().essential_vertices().is_empty());
        let g = partition_example();
        assert_eq!(names(&g, &g.essential_vertices()), ["C", "D", "F"]);
        assert_eq!(s3.tails().len(), 3);
        assert!(triangle().tails().is_empty());
        let tails: Vec<&str> = g.tails().into_iter().map(|e| g.edge_name(e)).collect();
        assert_eq!(tails, ["AC", "BC", "DE", "FG", "FH"]);
    }

    #[test]
    fn subdivide_cases() {
        let s = interval().subdivide(0).unwrap();
        assert_eq!(s.graph.edge_count(), 2);
        assert_eq!(s.graph.degree(s.vertex), 2);
        assert_eq!(s.graph.component_count(), 1);

        let g = lollipop();
        let f = g.edge_id("f").unwrap();
        let s = g.subdivide(f).unwrap();
        let [x, y] = s.edges;
        let a = s.graph.vertex_id("a").unwrap();
        assert_eq!(s.graph.edge_ends(x), [a, s.vertex]);
        assert_eq!(s.graph.edge_ends(y), [s.vertex, a]);

        let sq = triangle().subdivide(1).unwrap().graph;
        assert_eq!((sq.vertex_count(), sq.edge_count()), (4, 4));
        assert!(sq.vertices().all(|v| sq.degree(v) == 2));
        assert!(matches!(triangle().subdivide(7), Err(GraphError::UnknownEdge(_))));
    }

    #[test]
    fn explode_cases() {
        let s3 = star(3);
        let ex = s3.explode(&s3.essential_vertices()).unwrap();
        assert_eq!(ex.component_count(), 3);
        assert_eq!(ex.vertex_count(), 6);

        let b = banana(4);
        let w: VertexSet = [0].into_iter().collect();
        let ex = b.explode(&w).unwrap();
        assert_eq!(ex.component_count(), 1);
        assert_eq!(ex.degree(ex.vertex_id("b").unwrap()), 4);

        let g = partition_example();
        let w = g.vertex_set(["C", "D"]).unwrap();
        assert_eq!(g.explode(&w).unwrap().component_count(), 5);
        assert!(matches!(g.explode(&[42].into_iter().collect()), Err(GraphError::UnknownVertex(_))));
    }

    #[test]
    fn component_partition_cases() {
        let g = partition_example();
        let w = g.vertex_set(["C", "D"]).unwrap();
        let blocks = g.component_partition(&w).named_blocks(&g);
        assert_eq!(blocks, vec![vec!["AC"], vec!["BC"], vec!["CD"], vec!["DE"], vec!["DF", "FG", "FH"]]);
        assert_eq!(g.component_partition(&VertexSet::new()).block_count(), 1);
        let s3 = star(3);
        assert_eq!(s3.component_partition(&s3.essential_vertices()).block_count(), 3);
    }

    #[test]
    fn ramos_cases() {
        let g = partition_example();
        let r0 = g.ramos_number(0).unwrap();
        assert_eq!((r0.delta, r0.maximizers.len()), (1, 1));
        assert!(r0.maximizers[0].is_empty());
        // every pair of {C, D, F} leaves five components
        let r2 = g.ramos_number(2).unwrap();
        assert_eq!(r2.delta, 5);
        let pairs: Vec<Vec<String>> = r2.maximizers.iter().map(|w| names(&g, w)).collect();
        assert_eq!(pairs, vec![vec!["C", "D"], vec!["C", "F"], vec!["D", "F"]]);
        assert_eq!(banana(4).ramos_number(1).unwrap().delta, 1);
        assert_eq!(g.ramos_number(4), Err(GraphError::TooManyVertices { requested: 4, available: 3 }));
        let two = star(3).disjoint_union(&star(3)).unwrap();
        assert_eq!(two.ramos_number(1), Err(GraphError::Disconnected(2)));
    }

    #[test]
    fn well_separating_cases() {
        let s3 = star(3);
        assert!(s3.is_well_separating(&s3.essential_vertices()).unwrap());
        let th = theta();
        assert!(!th.is_well_separating(&th.vertex_set(["t"]).unwrap()).unwrap());
        let g = partition_example();
        assert!(g.is_well_separating(&g.vertex_set(["C", "D"]).unwrap()).unwrap());
        assert_eq!(g.is_well_separating(&g.vertex_set(["A"]).unwrap()), Err(GraphError::NotEssential("A".into())));
    }

    #[test]
    fn first_betti_cases() {
        assert_eq!(partition_example().first_betti(), 0);
        assert_eq!(triangle().first_betti(), 1);
        assert_eq!(banana(4).first_betti(), 3);
    }

    #[test]
    fn half_edge_names_round_trip() {
        let g = lollipop();
        for h in 0..g.half_edge_count() {
            assert_eq!(g.half_edge_id(&g.half_edge_name(h)).unwrap(), h);
        }
        assert!(g.half_edge_id("f.2").is_err());
    }
}
