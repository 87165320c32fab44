//! Standard representatives of loop, star, and torus classes, rigidity,
//! the relations among star and loop classes, and freeness of the module
//! generated by a family of rigid tori.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::asymptotics::partition_dimension;
use crate::complex::{BasisElement, ChainTerm, ChainVector, Complex, ComplexError, Factor, VertexState};
use crate::graph::{EdgeId, EdgePartition, Graph, GraphError, HalfEdgeId, VertexId, VertexSet};
use crate::homology::{self, HomologyError};
use crate::linalg::FieldTag;

#[derive(Debug, thiserror::Error)]
pub enum ClassError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("walk is not closed at step {0}")]
    OpenWalk(usize),
    #[error("walk is empty")]
    EmptyWalk,
    #[error("star half-edges must be three distinct half-edges at one vertex")]
    BadStar,
    #[error("vertex `{0}` carries more than one star factor")]
    OverlappingStars(String),
    #[error("vertex set {0:?} is not well-separating")]
    NotWellSeparating(Vec<String>),
    #[error("chosen half-edges at `{0}` lie in one component of the explosion")]
    SameBlock(String),
    #[error("graph lacks the configuration: {0}")]
    MissingConfiguration(String),
    #[error("representative is not a cycle")]
    NotACycle,
}

pub type Result<T> = std::result::Result<T, ClassError>;

/// A closed walk given by the half-edges it leaves through: step `j` leaves
/// `v(h_j)` along `e(h_j)` and arrives at the far end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    steps: Vec<HalfEdgeId>,
}

impl Walk {
    pub fn new(g: &Graph, steps: Vec<HalfEdgeId>) -> Result<Self> {
        if steps.is_empty() {
            return Err(ClassError::EmptyWalk);
        }
        for (j, &h) in steps.iter().enumerate() {
            if h >= g.half_edge_count() {
                return Err(GraphError::UnknownHalfEdge(format!("#{h}")).into());
            }
            let next = steps[(j + 1) % steps.len()];
            if next >= g.half_edge_count() || g.half_edge_vertex(g.opposite(h)) != g.half_edge_vertex(next) {
                return Err(ClassError::OpenWalk(j));
            }
        }
        Ok(Walk { steps })
    }

    /// Walk around a cycle given as a vertex sequence, taking the first edge
    /// between consecutive vertices that the walk has not used yet.
    pub fn through_vertices(g: &Graph, vertices: &[VertexId]) -> Result<Self> {
        let mut steps: Vec<HalfEdgeId> = Vec::new();
        for (j, &v) in vertices.iter().enumerate() {
            let w = vertices[(j + 1) % vertices.len()];
            let h = g
                .half_edges_at(v)
                .iter()
                .copied()
                .find(|&h| {
                    g.half_edge_vertex(g.opposite(h)) == w
                        && steps.iter().all(|&s| g.half_edge_edge(s) != g.half_edge_edge(h))
                })
                .ok_or(ClassError::OpenWalk(j))?;
            steps.push(h);
        }
        Walk::new(g, steps)
    }

    pub fn steps(&self) -> &[HalfEdgeId] {
        &self.steps
    }

    pub fn reversed(&self, g: &Graph) -> Walk {
        Walk { steps: self.steps.iter().rev().map(|&h| g.opposite(h)).collect() }
    }

    /// `(arrival half-edge, departure half-edge)` at every visited vertex.
    pub fn turns(&self, g: &Graph) -> Vec<(HalfEdgeId, HalfEdgeId)> {
        let n = self.steps.len();
        (0..n).map(|j| (g.opposite(self.steps[j]), self.steps[(j + 1) % n])).collect()
    }
}

/// Loop class of a closed walk: the sum over visits of `h_out - h_in`.
pub fn loop_class(cx: &Complex, walk: &Walk, field: FieldTag) -> Result<ChainVector> {
    let g = cx.graph();
    let terms: Vec<ChainTerm> = walk
        .turns(g)
        .into_iter()
        .filter(|(h_in, h_out)| h_in != h_out)
        .map(|(h_in, h_out)| ChainTerm::new(1, vec![Factor::Difference(h_out, h_in)]))
        .collect();
    let c = cx.encode_chain(&terms, field)?;
    let c = if c.is_zero() { ChainVector::zero((1, 1), field) } else { c };
    check_cycle(cx, c)
}

/// An ordered half-edge triple at one vertex, with a sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StarSpec {
    pub vertex: VertexId,
    pub halves: [HalfEdgeId; 3],
    pub sign: i8,
}

impl StarSpec {
    pub fn new(g: &Graph, halves: [HalfEdgeId; 3]) -> Result<Self> {
        let [a, b, c] = halves;
        if halves.iter().any(|&h| h >= g.half_edge_count()) || a == b || b == c || a == c {
            return Err(ClassError::BadStar);
        }
        let vertex = g.half_edge_vertex(a);
        if g.half_edge_vertex(b) != vertex || g.half_edge_vertex(c) != vertex {
            return Err(ClassError::BadStar);
        }
        Ok(StarSpec { vertex, halves, sign: 1 })
    }

    pub fn negated(self) -> Self {
        StarSpec { sign: -self.sign, ..self }
    }

    /// The star class with the first three half-edges at `v`.
    pub fn first_at(g: &Graph, v: VertexId) -> Result<Self> {
        let hs = g.half_edges_at(v);
        if hs.len() < 3 {
            return Err(GraphError::NotEssential(g.vertex_name(v).to_string()).into());
        }
        StarSpec::new(g, [hs[0], hs[1], hs[2]])
    }
}

/// `e₃(h₁-h₂) + e₂(h₃-h₁) + e₁(h₂-h₃)`, times the sign.
pub fn star_class(cx: &Complex, spec: &StarSpec, field: FieldTag) -> Result<ChainVector> {
    let c = cx.encode_chain(&star_terms(cx.graph(), spec), field)?;
    check_cycle(cx, c)
}

fn star_terms(g: &Graph, spec: &StarSpec) -> Vec<ChainTerm> {
    let [h1, h2, h3] = spec.halves;
    let e = |h| Factor::Edge(g.half_edge_edge(h), 1);
    let s = i64::from(spec.sign);
    vec![
        ChainTerm::new(s, vec![e(h3), Factor::Difference(h1, h2)]),
        ChainTerm::new(s, vec![e(h2), Factor::Difference(h3, h1)]),
        ChainTerm::new(s, vec![e(h1), Factor::Difference(h2, h3)]),
    ]
}

/// `(e₁-e₃)(h₂-h₁) - (e₁-e₂)(h₃-h₁)`, the same class written against `h₁`.
pub fn star_class_privileged_form(cx: &Complex, spec: &StarSpec, field: FieldTag) -> Result<ChainVector> {
    let g = cx.graph();
    let [h1, h2, h3] = spec.halves;
    let e = |h| Factor::Edge(g.half_edge_edge(h), 1);
    let s = i64::from(spec.sign);
    let terms = vec![
        ChainTerm::new(s, vec![e(h1), Factor::Difference(h2, h1)]),
        ChainTerm::new(-s, vec![e(h3), Factor::Difference(h2, h1)]),
        ChainTerm::new(-s, vec![e(h1), Factor::Difference(h3, h1)]),
        ChainTerm::new(s, vec![e(h2), Factor::Difference(h3, h1)]),
    ];
    Ok(cx.encode_chain(&terms, field)?)
}

/// Star factors at distinct vertices times an edge monomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusSpec {
    pub stars: Vec<StarSpec>,
    pub exponents: Vec<u32>,
}

impl TorusSpec {
    pub fn new(g: &Graph, mut stars: Vec<StarSpec>) -> Result<Self> {
        stars.sort_by_key(|s| s.vertex);
        for pair in stars.windows(2) {
            if pair[0].vertex == pair[1].vertex {
                return Err(ClassError::OverlappingStars(g.vertex_name(pair[0].vertex).to_string()));
            }
        }
        Ok(TorusSpec { stars, exponents: vec![0; g.edge_count()] })
    }

    pub fn support(&self) -> VertexSet {
        self.stars.iter().map(|s| s.vertex).collect()
    }

    pub fn bidegree(&self) -> (usize, usize) {
        let n = self.stars.len();
        (n, 2 * n + self.exponents.iter().map(|&x| x as usize).sum::<usize>())
    }
}

/// External product of two chains with disjoint supports, with the Koszul
/// sign of merging the half-edge states into vertex order.
pub fn external_product(a: &ChainVector, b: &ChainVector) -> ChainVector {
    let (i1, k1) = a.bidegree();
    let (i2, k2) = b.bidegree();
    let mut out = ChainVector::zero((i1 + i2, k1 + k2), a.field());
    for (x, cx) in a.terms() {
        for (y, cy) in b.terms() {
            let mut states = x.states.clone();
            let mut clash = false;
            for (v, s) in y.states.iter().enumerate() {
                if *s != VertexState::Empty {
                    clash |= states[v] != VertexState::Empty;
                    states[v] = *s;
                }
            }
            assert!(!clash, "external product of overlapping supports");
            let halves = |e: &BasisElement| -> Vec<usize> {
                e.states.iter().enumerate().filter(|(_, s)| matches!(s, VertexState::Half(_))).map(|(v, _)| v).collect()
            };
            let (hx, hy) = (halves(x), halves(y));
            let swaps = hy.iter().map(|u| hx.iter().filter(|w| *w > u).count()).sum::<usize>();
            let exponents = x.exponents.iter().zip(&y.exponents).map(|(p, q)| p + q).collect();
            let sign = if swaps % 2 == 0 { BigRational::one() } else { -BigRational::one() };
            out.add_term(BasisElement { states, exponents }, cx * cy * sign);
        }
    }
    out
}

/// Product of the star representatives in vertex order, times the monomial.
pub fn torus_class(cx: &Complex, spec: &TorusSpec, field: FieldTag) -> Result<ChainVector> {
    let mut acc = ChainVector::basis_element(BasisElement::unit(cx.graph()), field);
    for star in &spec.stars {
        acc = external_product(&acc, &star_class(cx, star, field)?);
    }
    check_cycle(cx, cx.multiply_edges(&acc, &spec.exponents))
}

fn check_cycle(cx: &Complex, c: ChainVector) -> Result<ChainVector> {
    if cx.boundary(&c).is_zero() {
        Ok(c)
    } else {
        Err(ClassError::NotACycle)
    }
}

/// A family `A_W` of rigid tori: at each `w` two fixed half-edges in distinct
/// components of `Γ_W`, and one star per remaining half-edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AWFamily {
    pub vertices: VertexSet,
    /// `(w, fixed₁, fixed₂)` in vertex order
    pub choices: Vec<(VertexId, HalfEdgeId, HalfEdgeId)>,
    pub members: Vec<TorusSpec>,
    /// Vertices where both fixed edges are tails although another choice
    /// would have avoided it.
    pub warnings: Vec<String>,
}

impl AWFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn require_well_separating(g: &Graph, w: &VertexSet) -> Result<EdgePartition> {
    if !g.is_well_separating(w)? {
        return Err(ClassError::NotWellSeparating(w.names(g).into_iter().map(String::from).collect()));
    }
    Ok(g.component_partition(w))
}

/// Builds `A_W`. `overrides` fixes the pair of half-edges at some vertices;
/// elsewhere the lowest-ordered pair in distinct blocks is used, preferring
/// pairs whose edges are not both tails.
pub fn a_w_family(g: &Graph, w: &VertexSet, overrides: &[(HalfEdgeId, HalfEdgeId)]) -> Result<AWFamily> {
    let partition = require_well_separating(g, w)?;
    let block = |h: HalfEdgeId| partition.block_of(g.half_edge_edge(h));
    let both_tails = |a: HalfEdgeId, b: HalfEdgeId| g.is_tail(g.half_edge_edge(a)) && g.is_tail(g.half_edge_edge(b));
    let mut choices = Vec::new();
    let mut warnings = Vec::new();
    for v in w.iter() {
        let hs = g.half_edges_at(v);
        let pairs: Vec<(HalfEdgeId, HalfEdgeId)> = hs
            .iter()
            .enumerate()
            .flat_map(|(j, &a)| hs[j + 1..].iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| block(a) != block(b))
            .collect();
        let forced = overrides.iter().find(|(a, _)| *a < g.half_edge_count() && g.half_edge_vertex(*a) == v);
        let (a, b) = match forced {
            Some(&(a, b)) => {
                if b >= g.half_edge_count() || g.half_edge_vertex(b) != v || a == b {
                    return Err(ClassError::BadStar);
                }
                if block(a) == block(b) {
                    return Err(ClassError::SameBlock(g.vertex_name(v).to_string()));
                }
                (a, b)
            }
            None => pairs.iter().copied().find(|&(a, b)| !both_tails(a, b)).unwrap_or(pairs[0]),
        };
        if both_tails(a, b) && pairs.iter().any(|&(x, y)| !both_tails(x, y)) {
            warnings.push(format!("both fixed edges at {} are tails", g.vertex_name(v)));
        }
        choices.push((v, a, b));
    }
    let mut members = vec![Vec::new()];
    for &(v, a, b) in &choices {
        let extras: Vec<HalfEdgeId> = g.half_edges_at(v).iter().copied().filter(|&h| h != a && h != b).collect();
        let mut next = Vec::new();
        for stars in &members {
            for &x in &extras {
                let mut s: Vec<StarSpec> = stars.clone();
                s.push(StarSpec::new(g, [a, b, x])?);
                next.push(s);
            }
        }
        members = next;
    }
    let members = members.into_iter().map(|s| TorusSpec::new(g, s)).collect::<Result<_>>()?;
    Ok(AWFamily { vertices: w.clone(), choices, members, warnings })
}

/// Rigidity by the combinatorial criterion: each star factor uses edges
/// from at least two components of `Γ_W`.
pub fn is_rigid(g: &Graph, spec: &TorusSpec) -> Result<bool> {
    let partition = require_well_separating(g, &spec.support())?;
    Ok(spec.stars.iter().all(|s| {
        let blocks: std::collections::BTreeSet<usize> =
            s.halves.iter().map(|&h| partition.block_of(g.half_edge_edge(h))).collect();
        blocks.len() >= 2
    }))
}

/// Image of a degree-`|W|` chain in the top row of the filtration by `W`:
/// terms with a half-edge state at every vertex of `W`, with edges replaced
/// by their blocks in `π₀(Γ_W)`. Keys are (states on `W`, block exponents).
pub fn top_row_image(g: &Graph, w: &VertexSet, c: &ChainVector) -> BTreeMap<(Vec<VertexState>, Vec<u32>), BigRational> {
    let partition = g.component_partition(w);
    let mut out: BTreeMap<(Vec<VertexState>, Vec<u32>), BigRational> = BTreeMap::new();
    for (el, x) in c.terms() {
        let states: Vec<VertexState> = w.iter().map(|v| el.states[v]).collect();
        if states.iter().any(|s| !matches!(s, VertexState::Half(_))) {
            continue;
        }
        let mut blocks = vec![0u32; partition.block_count()];
        for (e, &p) in el.exponents.iter().enumerate() {
            blocks[partition.block_of(e)] += p;
        }
        let slot = out.entry((states, blocks)).or_insert_with(BigRational::zero);
        *slot = c.field().reduce(&(&*slot + x)).expect("field coefficient");
    }
    out.retain(|_, x| !x.is_zero());
    out
}

/// Rigidity by nonvanishing in the top row of the filtration.
pub fn is_rigid_by_filtration(cx: &Complex, spec: &TorusSpec, field: FieldTag) -> Result<bool> {
    let w = spec.support();
    require_well_separating(cx.graph(), &w)?;
    let c = torus_class(cx, spec, field)?;
    Ok(!top_row_image(cx.graph(), &w, &c).is_empty())
}

/// `C(k - 2|W| + Δ^W - 1, Δ^W - 1) · ∏(d(w) - 2)`, the predicted dimension
/// of the weight-`k` part of the module generated by the family.
pub fn torus_module_dimension(g: &Graph, fam: &AWFamily, k: usize) -> BigUint {
    let n = fam.vertices.len();
    if k < 2 * n {
        return BigUint::zero();
    }
    let delta = g.delta(&fam.vertices);
    let product: BigUint = fam.vertices.iter().map(|w| BigUint::from(g.degree(w) - 2)).product();
    partition_dimension(delta, k - 2 * n) * product
}

/// Observed against predicted rank of the family's module in one weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreenessReport {
    pub k: usize,
    pub generators: usize,
    pub observed: usize,
    pub expected: BigUint,
}

impl FreenessReport {
    pub fn passed(&self) -> bool {
        BigUint::from(self.observed) == self.expected
    }
}

/// Rank in `H_{|W|}(B_k)` of all products of a block monomial (one
/// representative edge per block of `π₀(Γ_W)`) with a family member.
pub fn verify_aw_freeness(cx: &Complex, fam: &AWFamily, field: FieldTag, k: usize) -> Result<FreenessReport> {
    let g = cx.graph();
    let n = fam.vertices.len();
    let expected = torus_module_dimension(g, fam, k);
    if k < 2 * n {
        return Ok(FreenessReport { k, generators: 0, observed: 0, expected });
    }
    let partition = g.component_partition(&fam.vertices);
    let representatives: Vec<EdgeId> = partition.blocks().iter().map(|b| b[0]).collect();
    let members = fam.members.iter().map(|m| torus_class(cx, m, field)).collect::<Result<Vec<_>>>()?;
    let mut products = Vec::new();
    for monomial in monomials(representatives.len(), k - 2 * n) {
        let mut exps = vec![0u32; g.edge_count()];
        for (e, p) in representatives.iter().zip(&monomial) {
            exps[*e] = *p;
        }
        for m in &members {
            products.push(cx.multiply_edges(m, &exps));
        }
    }
    let observed = homology::class_rank(cx, field, (n, k), &products)?;
    Ok(FreenessReport { k, generators: products.len(), observed, expected })
}

fn monomials(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    if vars == 0 {
        return if degree == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials(vars - 1, degree - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// The relations certified by [`verify_relation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `(e - e')γ = α` at a vertex `w` where a closed walk leaves and
    /// returns: `γ` is the walk's loop class, `α` the star on
    /// `(stick, h_out, h_in)`, `e` the stick's edge and `e'` the edge the
    /// walk leaves `w` along.
    Q { stick: HalfEdgeId, walk: Walk },
    /// `α - α' = 0` for the two trivalent vertices of a theta graph whose
    /// strands are listed left, middle, right.
    Theta { top: VertexId, bottom: VertexId, strands: [EdgeId; 3] },
    /// `α₁₂₃ - α₁₂₄ + α₁₃₄ - α₂₃₄ = 0`
    UnstableX([HalfEdgeId; 4]),
    /// `e₄α₁₂₃ - e₃α₁₂₄ + e₂α₁₃₄ - e₁α₂₃₄ = 0`
    StableX([HalfEdgeId; 4]),
    /// `(e₄-e₁)α₁₂₃ - (e₃-e₁)α₁₂₄ + (e₂-e₁)α₁₃₄ = 0`
    CombinedX([HalfEdgeId; 4]),
    /// Whether a single star class bounds; a negative control.
    StarBounds(StarSpec),
}

impl Relation {
    pub fn kind(&self) -> &'static str {
        match self {
            Relation::Q { .. } => "Q",
            Relation::Theta { .. } => "theta",
            Relation::UnstableX(_) => "unstableX",
            Relation::StableX(_) => "stableX",
            Relation::CombinedX(_) => "combinedX",
            Relation::StarBounds(_) => "star",
        }
    }

    fn parameters(&self, g: &Graph) -> BTreeMap<String, String> {
        let h = |h: HalfEdgeId| g.half_edge_name(h);
        let list = |hs: &[HalfEdgeId]| hs.iter().map(|&x| h(x)).collect::<Vec<_>>().join(",");
        let mut p = BTreeMap::new();
        match self {
            Relation::Q { stick, walk } => {
                p.insert("stick".into(), h(*stick));
                p.insert("walk".into(), list(walk.steps()));
            }
            Relation::Theta { top, bottom, strands } => {
                p.insert("top".into(), g.vertex_name(*top).into());
                p.insert("bottom".into(), g.vertex_name(*bottom).into());
                p.insert("strands".into(), strands.iter().map(|&e| g.edge_name(e)).collect::<Vec<_>>().join(","));
            }
            Relation::UnstableX(hs) | Relation::StableX(hs) | Relation::CombinedX(hs) => {
                p.insert("half_edges".into(), list(hs));
            }
            Relation::StarBounds(s) => {
                p.insert("half_edges".into(), list(&s.halves));
            }
        }
        p
    }

    /// The Q configuration at the first self-loop, with the stick being the
    /// first other half-edge at its vertex.
    pub fn default_q(g: &Graph) -> Result<Relation> {
        for e in g.edges() {
            let [a, b] = g.edge_ends(e);
            if a != b {
                continue;
            }
            let stick = g.half_edges_at(a).iter().copied().find(|&h| g.half_edge_edge(h) != e);
            if let Some(stick) = stick {
                return Ok(Relation::Q { stick, walk: Walk::new(g, vec![2 * e])? });
            }
        }
        Err(ClassError::MissingConfiguration("a self-loop at a vertex with another edge".into()))
    }

    /// The theta configuration on the first two trivalent vertices joined by
    /// three edges.
    pub fn default_theta(g: &Graph) -> Result<Relation> {
        let cubic: Vec<VertexId> = g.vertices().filter(|&v| g.degree(v) == 3).collect();
        for (j, &top) in cubic.iter().enumerate() {
            for &bottom in &cubic[j + 1..] {
                let strands: Vec<EdgeId> = g
                    .edges()
                    .filter(|&e| {
                        let [a, b] = g.edge_ends(e);
                        (a, b) == (top, bottom) || (a, b) == (bottom, top)
                    })
                    .collect();
                if let [x, y, z] = strands[..] {
                    return Ok(Relation::Theta { top, bottom, strands: [x, y, z] });
                }
            }
        }
        Err(ClassError::MissingConfiguration("two trivalent vertices joined by three edges".into()))
    }

    /// The first four half-edges at the first vertex of degree at least four.
    pub fn default_x_halves(g: &Graph) -> Result<[HalfEdgeId; 4]> {
        let v = g
            .vertices()
            .find(|&v| g.degree(v) >= 4)
            .ok_or_else(|| ClassError::MissingConfiguration("a vertex of degree at least four".into()))?;
        let hs = g.half_edges_at(v);
        Ok([hs[0], hs[1], hs[2], hs[3]])
    }
}

/// Outcome of [`verify_relation`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationReport {
    pub kind: String,
    pub parameters: BTreeMap<String, String>,
    pub bidegree: (usize, usize),
    pub is_boundary: bool,
    /// A bounding chain was produced and its boundary re-checked.
    pub witness_found: bool,
}

/// The chain whose vanishing in homology the relation asserts.
pub fn relation_chain(cx: &Complex, relation: &Relation, field: FieldTag) -> Result<ChainVector> {
    let g = cx.graph();
    let star = |hs: [HalfEdgeId; 3]| -> Result<ChainVector> { star_class(cx, &StarSpec::new(g, hs)?, field) };
    let edge = |h: HalfEdgeId| g.half_edge_edge(h);
    let int = |n: i64| BigRational::from_integer(n.into());
    let chain = match relation {
        Relation::Q { stick, walk } => {
            let w = g.half_edge_vertex(*stick);
            let (h_in, h_out) = walk
                .turns(g)
                .into_iter()
                .find(|&(h_in, _)| g.half_edge_vertex(h_in) == w)
                .ok_or_else(|| ClassError::MissingConfiguration("walk through the stick's vertex".into()))?;
            if [h_in, h_out].contains(stick) || h_in == h_out {
                return Err(ClassError::MissingConfiguration("stick distinct from the walk's half-edges".into()));
            }
            let gamma = loop_class(cx, walk, field)?;
            let alpha = star([*stick, h_out, h_in])?;
            let moved = cx.multiply_linear(&gamma, &[(edge(*stick), 1), (edge(h_out), -1)]);
            &moved - &alpha
        }
        Relation::Theta { top, bottom, strands } => {
            let at = |v: VertexId, e: EdgeId| -> Result<HalfEdgeId> {
                g.half_edges_at(v)
                    .iter()
                    .copied()
                    .find(|&h| edge(h) == e)
                    .ok_or_else(|| ClassError::MissingConfiguration("strand between the theta vertices".into()))
            };
            let [x, y, z] = *strands;
            let alpha = star([at(*top, z)?, at(*top, y)?, at(*top, x)?])?;
            let alpha_bottom = star([at(*bottom, y)?, at(*bottom, z)?, at(*bottom, x)?])?;
            &alpha - &alpha_bottom
        }
        Relation::UnstableX([h1, h2, h3, h4]) => {
            let mut c = star([*h1, *h2, *h3])?;
            c = &c - &star([*h1, *h2, *h4])?;
            c = &c + &star([*h1, *h3, *h4])?;
            &c - &star([*h2, *h3, *h4])?
        }
        Relation::StableX([h1, h2, h3, h4]) => {
            let terms = [
                (edge(*h4), [*h1, *h2, *h3], 1),
                (edge(*h3), [*h1, *h2, *h4], -1),
                (edge(*h2), [*h1, *h3, *h4], 1),
                (edge(*h1), [*h2, *h3, *h4], -1),
            ];
            let mut c = ChainVector::zero((1, 3), field);
            for (e, hs, s) in terms {
                c = &c + &cx.multiply_linear(&star(hs)?, &[(e, s)]);
            }
            c
        }
        Relation::CombinedX([h1, h2, h3, h4]) => {
            let terms = [(edge(*h4), [*h1, *h2, *h3], 1), (edge(*h3), [*h1, *h2, *h4], -1), (edge(*h2), [*h1, *h3, *h4], 1)];
            let mut c = ChainVector::zero((1, 3), field);
            for (e, hs, s) in terms {
                let a = star(hs)?;
                c = &c + &cx.multiply_linear(&a, &[(e, 1), (edge(*h1), -1)]).scaled(&int(s));
            }
            c
        }
        Relation::StarBounds(spec) => star_class(cx, spec, field)?,
    };
    check_cycle(cx, chain)
}

/// Builds the relation's chain and asks whether it bounds.
pub fn verify_relation(cx: &Complex, relation: &Relation, field: FieldTag) -> Result<RelationReport> {
    let chain = relation_chain(cx, relation, field)?;
    let witness = homology::boundary_witness(cx, &chain)?;
    let witness_found = witness.as_ref().is_some_and(|b| cx.boundary(b) == chain);
    Ok(RelationReport {
        kind: relation.kind().to_string(),
        parameters: relation.parameters(cx.graph()),
        bidegree: chain.bidegree(),
        is_boundary: witness.is_some(),
        witness_found,
    })
}

/// `∏_{w ∈ W} (d(w) - 2)`.
pub fn degree_product(g: &Graph, w: &VertexSet) -> usize {
    w.iter().map(|v| g.degree(v) - 2).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::library::*;

    const Q: FieldTag = FieldTag::Rationals;

    fn hid(g: &Graph, name: &str) -> HalfEdgeId {
        g.half_edge_id(name).unwrap()
    }

    #[test]
    fn lollipop_loop_is_single_difference() {
        let g = lollipop();
        let cx = Complex::reduced(&g);
        let walk = Walk::new(&g, vec![hid(&g, "f.0")]).unwrap();
        let c = loop_class(&cx, &walk, Q).unwrap();
        let want = cx.half_edge_difference(hid(&g, "f.0"), hid(&g, "f.1"), Q).unwrap();
        assert_eq!(c, want);
        assert_eq!(loop_class(&cx, &walk.reversed(&g), Q).unwrap(), -&c);
    }

    #[test]
    fn triangle_loop() {
        let g = triangle();
        let cx = Complex::reduced(&g);
        let walk = Walk::through_vertices(&g, &[0, 1, 2]).unwrap();
        let c = loop_class(&cx, &walk, Q).unwrap();
        assert_eq!(c.bidegree(), (1, 1));
        assert!(!homology::is_boundary(&cx, &c).unwrap());
        assert!(matches!(Walk::new(&g, vec![0, 0]), Err(ClassError::OpenWalk(_))));
    }

    #[test]
    fn star_forms_agree() {
        for g in [star(3), star(4), h_tree()] {
            let cx = Complex::reduced(&g);
            let spec = StarSpec::first_at(&g, 0).unwrap();
            assert_eq!(star_class(&cx, &spec, Q).unwrap(), star_class_privileged_form(&cx, &spec, Q).unwrap());
        }
    }

    #[test]
    fn star_antisymmetry() {
        let g = star(3);
        let cx = Complex::reduced(&g);
        let a = star_class(&cx, &StarSpec::new(&g, [0, 2, 4]).unwrap(), Q).unwrap();
        let b = star_class(&cx, &StarSpec::new(&g, [2, 0, 4]).unwrap(), Q).unwrap();
        assert_eq!(a, -&b);
        let c = star_class(&cx, &StarSpec::new(&g, [2, 4, 0]).unwrap(), Q).unwrap();
        assert_eq!(a, c);
        assert!(!homology::is_boundary(&cx, &a).unwrap());
    }

    #[test]
    fn star_in_full_complex_matches_inclusion() {
        let g = star(3);
        let spec = StarSpec::first_at(&g, 0).unwrap();
        let reduced = Complex::reduced(&g);
        let full = Complex::full(&g);
        let a = star_class(&reduced, &spec, Q).unwrap();
        assert_eq!(reduced.include_into_full(&a), star_class(&full, &spec, Q).unwrap());
    }

    #[test]
    fn torus_cases() {
        let g = h_tree();
        let cx = Complex::reduced(&g);
        let u = StarSpec::first_at(&g, 0).unwrap();
        let w = StarSpec::first_at(&g, 1).unwrap();
        let single = TorusSpec::new(&g, vec![u]).unwrap();
        assert_eq!(torus_class(&cx, &single, Q).unwrap(), star_class(&cx, &u, Q).unwrap());
        let both = TorusSpec::new(&g, vec![w, u]).unwrap();
        let t = torus_class(&cx, &both, Q).unwrap();
        assert_eq!(t.bidegree(), (2, 4));
        assert!(matches!(TorusSpec::new(&g, vec![u, u]), Err(ClassError::OverlappingStars(_))));

        let mut stabilized = both.clone();
        stabilized.exponents[2] = 1;
        let via_spec = torus_class(&cx, &stabilized, Q).unwrap();
        let m = cx.stabilization_matrix(2, 2, 4, Q).unwrap();
        let src = cx.enumerate_basis(2, 4);
        let dst = cx.enumerate_basis(2, 5);
        let image = m.mul_vec(&t.to_vector(&src).unwrap()).unwrap();
        assert_eq!(via_spec.to_vector(&dst).unwrap(), image);
    }

    #[test]
    fn family_sizes() {
        let s3 = star(3);
        assert_eq!(a_w_family(&s3, &s3.vertex_set(["c"]).unwrap(), &[]).unwrap().len(), 1);
        let s5 = star(5);
        assert_eq!(a_w_family(&s5, &s5.vertex_set(["c"]).unwrap(), &[]).unwrap().len(), 3);
        let h = h_tree();
        let fam = a_w_family(&h, &h.vertex_set(["u", "w"]).unwrap(), &[]).unwrap();
        assert_eq!(fam.len(), 1);
        // the shared edge m is the only non-tail at each vertex
        for &(_, a, b) in &fam.choices {
            assert!(!(h.is_tail(h.half_edge_edge(a)) && h.is_tail(h.half_edge_edge(b))));
        }
        let th = theta();
        assert!(matches!(
            a_w_family(&th, &th.vertex_set(["t"]).unwrap(), &[]),
            Err(ClassError::NotWellSeparating(_))
        ));
    }

    #[test]
    fn rigidity_criteria_agree() {
        let g = partition_example();
        let w = g.vertex_set(["C", "D"]).unwrap();
        let fam = a_w_family(&g, &w, &[]).unwrap();
        let cx = Complex::reduced(&g);
        for m in &fam.members {
            assert!(is_rigid(&g, m).unwrap());
            assert!(is_rigid_by_filtration(&cx, m, Q).unwrap());
        }
        let d = StarSpec::first_at(&g, g.vertex_id("D").unwrap()).unwrap();
        let c = StarSpec::first_at(&g, g.vertex_id("C").unwrap()).unwrap();
        let spec = TorusSpec::new(&g, vec![c, d]).unwrap();
        assert!(is_rigid(&g, &spec).unwrap());
        let th = theta();
        let t = TorusSpec::new(&th, vec![StarSpec::first_at(&th, 0).unwrap()]).unwrap();
        assert!(matches!(is_rigid(&th, &t), Err(ClassError::NotWellSeparating(_))));
    }

    #[test]
    fn non_rigid_star_vanishes_in_top_row() {
        // w meets the cycle a-b-c three times and a tail once
        let g = Graph::new(
            ["w", "a", "b", "c", "l"].map(String::from),
            [("wa", "w", "a"), ("wb", "w", "b"), ("wc", "w", "c"), ("ab", "a", "b"), ("bc", "b", "c"), ("wl", "w", "l")]
                .map(|(e, x, y)| (e.to_string(), x.to_string(), y.to_string())),
        )
        .unwrap();
        let cx = Complex::reduced(&g);
        let hs = g.half_edges_at(0);
        let flat = TorusSpec::new(&g, vec![StarSpec::new(&g, [hs[0], hs[1], hs[2]]).unwrap()]).unwrap();
        assert!(!is_rigid(&g, &flat).unwrap());
        assert!(!is_rigid_by_filtration(&cx, &flat, Q).unwrap());
        let split = TorusSpec::new(&g, vec![StarSpec::new(&g, [hs[0], hs[1], hs[3]]).unwrap()]).unwrap();
        assert!(is_rigid(&g, &split).unwrap());
        assert!(is_rigid_by_filtration(&cx, &split, Q).unwrap());
    }

    #[test]
    fn module_dimension_formula() {
        let g = star(3);
        let fam = a_w_family(&g, &g.vertex_set(["c"]).unwrap(), &[]).unwrap();
        assert_eq!(torus_module_dimension(&g, &fam, 2), BigUint::from(1u32));
        assert_eq!(torus_module_dimension(&g, &fam, 4), BigUint::from(6u32));
        assert_eq!(torus_module_dimension(&g, &fam, 1), BigUint::zero());
    }

    #[test]
    fn freeness_on_star() {
        let g = star(3);
        let cx = Complex::reduced(&g);
        let fam = a_w_family(&g, &g.vertex_set(["c"]).unwrap(), &[]).unwrap();
        let ranks: Vec<usize> = (2..=5).map(|k| verify_aw_freeness(&cx, &fam, Q, k).unwrap().observed).collect();
        assert_eq!(ranks, vec![1, 3, 6, 10]);
    }

    #[test]
    fn torus_annihilation() {
        let g = partition_example();
        let cx = Complex::reduced(&g);
        let w = g.vertex_set(["C", "D"]).unwrap();
        let fam = a_w_family(&g, &w, &[]).unwrap();
        let t = torus_class(&cx, &fam.members[0], Q).unwrap();
        let (df, fg) = (g.edge_id("DF").unwrap(), g.edge_id("FG").unwrap());
        let moved = cx.multiply_linear(&t, &[(df, 1), (fg, -1)]);
        assert!(homology::is_boundary(&cx, &moved).unwrap());
        let (ac, bc) = (g.edge_id("AC").unwrap(), g.edge_id("BC").unwrap());
        let split = cx.multiply_linear(&t, &[(ac, 1), (bc, -1)]);
        assert!(!homology::is_boundary(&cx, &split).unwrap());
    }

    #[test]
    fn relations_on_small_graphs() {
        let lp = lollipop();
        let q = Relation::default_q(&lp).unwrap();
        assert!(verify_relation(&Complex::reduced(&lp), &q, Q).unwrap().is_boundary);

        let th = theta();
        let rel = Relation::default_theta(&th).unwrap();
        let report = verify_relation(&Complex::reduced(&th), &rel, Q).unwrap();
        assert!(report.is_boundary && report.witness_found);

        let s4 = star(4);
        let hs = Relation::default_x_halves(&s4).unwrap();
        let cx = Complex::reduced(&s4);
        for rel in [Relation::UnstableX(hs), Relation::StableX(hs), Relation::CombinedX(hs)] {
            assert!(verify_relation(&cx, &rel, Q).unwrap().is_boundary, "{}", rel.kind());
        }

        let s3 = star(3);
        let neg = Relation::StarBounds(StarSpec::first_at(&s3, 0).unwrap());
        let report = verify_relation(&Complex::reduced(&s3), &neg, Q).unwrap();
        assert!(!report.is_boundary && !report.witness_found);
    }

    #[test]
    fn theta_with_opposite_orientation_fails() {
        let th = theta();
        let cx = Complex::reduced(&th);
        let Relation::Theta { top, bottom, strands: [x, y, z] } = Relation::default_theta(&th).unwrap() else { panic!() };
        let at = |v: VertexId, e: EdgeId| th.half_edges_at(v).iter().copied().find(|&h| th.half_edge_edge(h) == e).unwrap();
        let a = star_class(&cx, &StarSpec::new(&th, [at(top, z), at(top, y), at(top, x)]).unwrap(), Q).unwrap();
        let b = star_class(&cx, &StarSpec::new(&th, [at(bottom, y), at(bottom, z), at(bottom, x)]).unwrap(), Q).unwrap();
        assert!(!homology::is_boundary(&cx, &(&a + &b)).unwrap());
    }

    #[test]
    fn q_on_subdivided_lollipop() {
        let lp = lollipop();
        let sub = lp.subdivide(lp.edge_id("f").unwrap()).unwrap().graph;
        let a = sub.vertex_id("a").unwrap();
        let m = sub.vertex_id("f_m").unwrap();
        let walk = Walk::through_vertices(&sub, &[a, m]).unwrap();
        let stick = hid(&sub, "e.0");
        let cx = Complex::reduced(&sub);
        let rel = Relation::Q { stick, walk: walk.clone() };
        let report = verify_relation(&cx, &rel, Q).unwrap();
        assert!(report.is_boundary);
        assert_eq!(report.bidegree, (1, 2));
        assert!(!relation_chain(&cx, &rel, Q).unwrap().is_zero());
        assert!(verify_relation(&cx, &Relation::Q { stick, walk: walk.reversed(&sub) }, Q).unwrap().is_boundary);
    }
}
