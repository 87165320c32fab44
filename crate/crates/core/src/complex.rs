//! Bigraded bases and matrices of the full and reduced Świątkowski complexes.
//!
//! A basis element is a monomial: one state per vertex plus an exponent per
//! edge. In the full complex a vertex is empty, occupied, or carries one of
//! its half-edges `h`. In the reduced complex a vertex is empty or carries a
//! difference `h - h₁(v)` against its privileged half-edge, stored as
//! [`VertexState::Half`]`(h)` with `h ≠ h₁(v)`.
//!
//! Homological degree is the number of half-edge states; weight is the sum
//! of exponents plus the number of occupied and half-edge states. Half-edge
//! generators anticommute, ordered by vertex: the differential acting at a
//! vertex picks up `(-1)^(number of earlier half-edge states)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::graph::{EdgeId, Graph, GraphError, HalfEdgeId, VertexId};
use crate::linalg::{Entry, FieldTag, LinalgError, SparseMatrix, Vector};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("privileged half-edge {half_edge} does not sit at vertex `{vertex}`")]
    BadPrivileged { vertex: String, half_edge: String },
    #[error("terms have mixed bidegrees {0:?} and {1:?}")]
    MixedBidegree((usize, usize), (usize, usize)),
    #[error("chain has bidegree {found:?}, expected {expected:?}")]
    WrongBidegree { expected: (usize, usize), found: (usize, usize) },
    #[error("{0} is not a generator of the {1} complex")]
    NotInVariant(String, &'static str),
    #[error("two factors sit at vertex `{0}`")]
    VertexConflict(String),
    #[error("half-edges {0} and {1} sit at different vertices")]
    SplitDifference(String, String),
    #[error("cannot parse chain term `{0}`")]
    Syntax(String),
}

pub type Result<T> = std::result::Result<T, ComplexError>;

/// Which complex to build.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComplexVariant {
    Full,
    /// `privileged[v]` is the half-edge `h₁(v)` of the difference basis.
    Reduced { privileged: Vec<HalfEdgeId> },
}

impl ComplexVariant {
    /// Reduced variant privileging the first half-edge at each vertex.
    pub fn reduced(g: &Graph) -> Self {
        ComplexVariant::Reduced { privileged: g.vertices().map(|v| g.half_edges_at(v)[0]).collect() }
    }

    /// Reduced variant with per-vertex overrides of the privileged half-edge.
    pub fn reduced_with(g: &Graph, overrides: &[HalfEdgeId]) -> Result<Self> {
        let ComplexVariant::Reduced { mut privileged } = Self::reduced(g) else { unreachable!() };
        for &h in overrides {
            if h >= g.half_edge_count() {
                return Err(GraphError::UnknownHalfEdge(format!("#{h}")).into());
            }
            privileged[g.half_edge_vertex(h)] = h;
        }
        Ok(ComplexVariant::Reduced { privileged })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComplexVariant::Full => "full",
            ComplexVariant::Reduced { .. } => "reduced",
        }
    }
}

/// State of one vertex in a monomial, ordered empty < occupied < half-edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexState {
    Empty,
    Occupied,
    Half(HalfEdgeId),
}

/// A monomial of the complex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisElement {
    pub states: Vec<VertexState>,
    pub exponents: Vec<u32>,
}

impl BasisElement {
    /// The empty monomial `∅`.
    pub fn unit(g: &Graph) -> Self {
        BasisElement { states: vec![VertexState::Empty; g.vertex_count()], exponents: vec![0; g.edge_count()] }
    }

    pub fn degree(&self) -> usize {
        self.states.iter().filter(|s| matches!(s, VertexState::Half(_))).count()
    }

    pub fn weight(&self) -> usize {
        let occupied = self.states.iter().filter(|s| !matches!(s, VertexState::Empty)).count();
        self.exponents.iter().map(|&x| x as usize).sum::<usize>() + occupied
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.degree(), self.weight())
    }

    /// Human-readable form, e.g. `e1^2*(c:e2.0)` with `v:h` marking a
    /// half-edge state and `@v` an occupied vertex.
    pub fn render(&self, g: &Graph) -> String {
        let mut parts = Vec::new();
        for (e, &x) in self.exponents.iter().enumerate() {
            match x {
                0 => {}
                1 => parts.push(g.edge_name(e).to_string()),
                _ => parts.push(format!("{}^{x}", g.edge_name(e))),
            }
        }
        for (v, s) in self.states.iter().enumerate() {
            match s {
                VertexState::Empty => {}
                VertexState::Occupied => parts.push(format!("@{}", g.vertex_name(v))),
                VertexState::Half(h) => parts.push(format!("[{}]", g.half_edge_name(*h))),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

/// Ordered basis of one bidegree with a reverse index.
#[derive(Clone, Debug)]
pub struct Basis {
    bidegree: (usize, usize),
    elements: Vec<BasisElement>,
    index: HashMap<BasisElement, usize>,
}

impl Basis {
    fn new(bidegree: (usize, usize), elements: Vec<BasisElement>) -> Self {
        let index = elements.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        Basis { bidegree, elements, index }
    }

    pub fn bidegree(&self) -> (usize, usize) {
        self.bidegree
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn position(&self, e: &BasisElement) -> Option<usize> {
        self.index.get(e).copied()
    }
}

/// A sparse chain of one bidegree. Coefficients are kept reduced into the
/// field: exact rationals, residues mod `p`, or integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainVector {
    bidegree: (usize, usize),
    field: FieldTag,
    terms: BTreeMap<BasisElement, BigRational>,
}

impl ChainVector {
    pub fn zero(bidegree: (usize, usize), field: FieldTag) -> Self {
        ChainVector { bidegree, field, terms: BTreeMap::new() }
    }

    pub fn basis_element(e: BasisElement, field: FieldTag) -> Self {
        let mut c = ChainVector::zero(e.bidegree(), field);
        c.add_term(e, BigRational::one());
        c
    }

    pub fn bidegree(&self) -> (usize, usize) {
        self.bidegree
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn terms(&self) -> &BTreeMap<BasisElement, BigRational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &BasisElement) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Adds `coeff · e`; panics if `e` has another bidegree.
    pub fn add_term(&mut self, e: BasisElement, coeff: BigRational) {
        if self.terms.is_empty() {
            self.bidegree = e.bidegree();
        }
        assert_eq!(e.bidegree(), self.bidegree, "chain term of the wrong bidegree");
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot = self.field.reduce(&(&*slot + coeff)).expect("coefficient defined in the field");
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn scaled(&self, c: &BigRational) -> Self {
        let mut out = ChainVector::zero(self.bidegree, self.field);
        for (e, x) in &self.terms {
            out.add_term(e.clone(), x * c);
        }
        out
    }

    /// Dense coordinates in `basis`.
    pub fn to_vector(&self, basis: &Basis) -> Result<Vector> {
        if !self.is_zero() && self.bidegree != basis.bidegree() {
            return Err(ComplexError::WrongBidegree { expected: basis.bidegree(), found: self.bidegree });
        }
        let mut v = vec![BigRational::zero(); basis.len()];
        for (e, c) in &self.terms {
            let i = basis.position(e).ok_or_else(|| ComplexError::NotInVariant(format!("{e:?}"), "given"))?;
            v[i] = c.clone();
        }
        Ok(v)
    }

    pub fn from_vector(basis: &Basis, v: &[BigRational], field: FieldTag) -> Self {
        let mut c = ChainVector::zero(basis.bidegree(), field);
        for (e, x) in basis.elements().iter().zip(v) {
            if !x.is_zero() {
                c.add_term(e.clone(), x.clone());
            }
        }
        c
    }

    pub fn render(&self, g: &Graph) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else if i > 0 { "+" } else { "" };
            let mag = c.abs();
            let sep = if i > 0 { " " } else { "" };
            if mag.is_one() {
                out.push_str(&format!("{sep}{sign}{}", e.render(g)));
            } else {
                out.push_str(&format!("{sep}{sign}{mag}*{}", e.render(g)));
            }
        }
        out
    }
}

impl<'a> Add<&'a ChainVector> for &'a ChainVector {
    type Output = ChainVector;

    fn add(self, rhs: &ChainVector) -> ChainVector {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a ChainVector> for &'a ChainVector {
    type Output = ChainVector;

    fn sub(self, rhs: &ChainVector) -> ChainVector {
        self + &(-rhs)
    }
}

impl Neg for &ChainVector {
    type Output = ChainVector;

    fn neg(self) -> ChainVector {
        self.scaled(&-BigRational::one())
    }
}

/// One factor of a human-readable chain term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    Edge(EdgeId, u32),
    Occupied(VertexId),
    Half(HalfEdgeId),
    /// `h - h'` for half-edges at a common vertex.
    Difference(HalfEdgeId, HalfEdgeId),
}

/// A coefficient times a product of factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainTerm {
    pub coefficient: BigRational,
    pub factors: Vec<Factor>,
}

impl ChainTerm {
    pub fn new(coefficient: i64, factors: Vec<Factor>) -> Self {
        ChainTerm { coefficient: BigRational::from_integer(coefficient.into()), factors }
    }
}

/// Parses terms such as `e3*(c.0 - e1.0) + 2*e2^2*@v - 1/2*e1.1`.
///
/// Factors are joined by `*`: an edge name with optional `^n`, `@vertex` for
/// an occupied vertex, a half-edge `edge.end`, or a parenthesized difference
/// of two half-edges. A leading integer or fraction is the coefficient.
pub fn parse_chain_terms(g: &Graph, text: &str) -> Result<Vec<ChainTerm>> {
    let mut terms = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    let mut sign = 1i64;
    let bytes: Vec<char> = text.chars().collect();
    let mut chunks = Vec::new();
    for (i, &ch) in bytes.iter().enumerate() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | '-' if depth == 0 => {
                let chunk: String = bytes[start..i].iter().collect();
                if !chunk.trim().is_empty() {
                    chunks.push((sign, chunk));
                }
                sign = if ch == '-' { -1 } else { 1 };
                start = i + 1;
            }
            _ => {}
        }
    }
    let tail: String = bytes[start..].iter().collect();
    if !tail.trim().is_empty() {
        chunks.push((sign, tail));
    } else if (!chunks.is_empty() || text.trim().starts_with(['+', '-'])) && text.trim().ends_with(['+', '-']) {
        return Err(ComplexError::Syntax(text.to_string()));
    }
    for (sign, chunk) in chunks {
        let mut coefficient = BigRational::from_integer(BigInt::from(sign));
        let mut factors = Vec::new();
        for raw in chunk.split('*') {
            let f = raw.trim();
            let bad = || ComplexError::Syntax(f.to_string());
            if f.is_empty() {
                return Err(bad());
            }
            if let Ok(c) = f.parse::<BigRational>() {
                coefficient *= c;
            } else if let Some(inner) = f.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                let (a, b) = inner.split_once('-').ok_or_else(bad)?;
                factors.push(Factor::Difference(g.half_edge_id(a.trim())?, g.half_edge_id(b.trim())?));
            } else if let Some(v) = f.strip_prefix('@') {
                factors.push(Factor::Occupied(g.vertex_id(v)?));
            } else if f.contains('.') {
                factors.push(Factor::Half(g.half_edge_id(f)?));
            } else {
                let (name, pow) = match f.split_once('^') {
                    Some((n, p)) => (n, p.trim().parse::<u32>().map_err(|_| bad())?),
                    None => (f, 1),
                };
                factors.push(Factor::Edge(g.edge_id(name.trim())?, pow));
            }
        }
        terms.push(ChainTerm { coefficient, factors });
    }
    Ok(terms)
}

/// A graph together with a choice of complex.
#[derive(Clone, Debug)]
pub struct Complex<'g> {
    graph: &'g Graph,
    variant: ComplexVariant,
}

impl<'g> Complex<'g> {
    pub fn new(graph: &'g Graph, variant: ComplexVariant) -> Result<Self> {
        if let ComplexVariant::Reduced { privileged } = &variant {
            for v in graph.vertices() {
                let h = privileged.get(v).copied().unwrap_or(usize::MAX);
                if h >= graph.half_edge_count() || graph.half_edge_vertex(h) != v {
                    return Err(ComplexError::BadPrivileged {
                        vertex: graph.vertex_name(v).to_string(),
                        half_edge: if h < graph.half_edge_count() { graph.half_edge_name(h) } else { format!("#{h}") },
                    });
                }
            }
        }
        Ok(Complex { graph, variant })
    }

    pub fn full(graph: &'g Graph) -> Self {
        Complex { graph, variant: ComplexVariant::Full }
    }

    pub fn reduced(graph: &'g Graph) -> Self {
        Complex { graph, variant: ComplexVariant::reduced(graph) }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn variant(&self) -> &ComplexVariant {
        &self.variant
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.variant, ComplexVariant::Reduced { .. })
    }

    /// `h₁(v)` in the reduced variant.
    pub fn privileged(&self, v: VertexId) -> Option<HalfEdgeId> {
        match &self.variant {
            ComplexVariant::Full => None,
            ComplexVariant::Reduced { privileged } => Some(privileged[v]),
        }
    }

    /// Admissible states at `v`, in state order.
    pub fn states_at(&self, v: VertexId) -> Vec<VertexState> {
        let hs = self.graph.half_edges_at(v).iter().copied();
        match &self.variant {
            ComplexVariant::Full => {
                [VertexState::Empty, VertexState::Occupied].into_iter().chain(hs.map(VertexState::Half)).collect()
            }
            ComplexVariant::Reduced { privileged } => std::iter::once(VertexState::Empty)
                .chain(hs.filter(|&h| h != privileged[v]).map(VertexState::Half))
                .collect(),
        }
    }

    /// All monomials of bidegree `(i, k)` in basis order.
    pub fn enumerate_basis(&self, i: usize, k: usize) -> Basis {
        let g = self.graph;
        let options: Vec<Vec<VertexState>> = g.vertices().map(|v| self.states_at(v)).collect();
        // most half-edge states still reachable from vertex v onwards
        let mut reach = vec![0; g.vertex_count() + 1];
        for v in (0..g.vertex_count()).rev() {
            let has_half = options[v].iter().any(|s| matches!(s, VertexState::Half(_)));
            reach[v] = reach[v + 1] + usize::from(has_half);
        }
        let mut out = Vec::new();
        let mut states = Vec::with_capacity(g.vertex_count());
        self.enumerate_states(&options, &reach, i, k, 0, 0, &mut states, &mut out);
        out.sort_unstable();
        Basis::new((i, k), out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_states(
        &self,
        options: &[Vec<VertexState>],
        reach: &[usize],
        i: usize,
        k: usize,
        halves: usize,
        weight: usize,
        states: &mut Vec<VertexState>,
        out: &mut Vec<BasisElement>,
    ) {
        let v = states.len();
        if halves + reach[v] < i {
            return;
        }
        if v == options.len() {
            if halves == i {
                let mut exps = vec![0u32; self.graph.edge_count()];
                compositions(k - weight, 0, &mut exps, &mut |e| {
                    out.push(BasisElement { states: states.clone(), exponents: e.to_vec() })
                });
            }
            return;
        }
        for &s in &options[v] {
            let (dh, dw) = match s {
                VertexState::Empty => (0, 0),
                VertexState::Occupied => (0, 1),
                VertexState::Half(_) => (1, 1),
            };
            if halves + dh > i || weight + dw > k {
                continue;
            }
            states.push(s);
            self.enumerate_states(options, reach, i, k, halves + dh, weight + dw, states, out);
            states.pop();
        }
    }

    /// `dim C_{i,k}` by coefficient extraction from the per-vertex generating
    /// polynomials and the edge monomial count; independent of enumeration.
    pub fn basis_count(&self, i: usize, k: usize) -> u128 {
        let g = self.graph;
        // poly[deg][weight]
        let mut poly = vec![vec![0u128; k + 1]; i + 1];
        poly[0][0] = 1;
        for v in g.vertices() {
            let d = g.degree(v) as u128;
            let local: Vec<(usize, usize, u128)> = match self.variant {
                ComplexVariant::Full => vec![(0, 0, 1), (0, 1, 1), (1, 1, d)],
                ComplexVariant::Reduced { .. } => vec![(0, 0, 1), (1, 1, d - 1)],
            };
            let mut next = vec![vec![0u128; k + 1]; i + 1];
            for a in 0..=i {
                for w in 0..=k {
                    if poly[a][w] == 0 {
                        continue;
                    }
                    for &(da, dw, c) in &local {
                        if a + da <= i && w + dw <= k && c > 0 {
                            next[a + da][w + dw] = next[a + da][w + dw].saturating_add(poly[a][w].saturating_mul(c));
                        }
                    }
                }
            }
            poly = next;
        }
        let edges = g.edge_count();
        (0..=k)
            .map(|w| poly[i][w].saturating_mul(multiset_count(edges, k - w)))
            .fold(0u128, u128::saturating_add)
    }

    /// Terms of `∂(e)` with integer coefficients (not yet combined).
    pub fn boundary_terms(&self, e: &BasisElement) -> Vec<(BasisElement, i64)> {
        let g = self.graph;
        let mut out = Vec::new();
        let mut sign = 1i64;
        for (w, s) in e.states.iter().enumerate() {
            let VertexState::Half(h) = *s else { continue };
            let mut base = e.clone();
            base.states[w] = VertexState::Empty;
            let mut first = base.clone();
            first.exponents[g.half_edge_edge(h)] += 1;
            out.push((first, sign));
            match &self.variant {
                ComplexVariant::Full => {
                    let mut second = base;
                    second.states[w] = VertexState::Occupied;
                    out.push((second, -sign));
                }
                ComplexVariant::Reduced { privileged } => {
                    let mut second = base;
                    second.exponents[g.half_edge_edge(privileged[w])] += 1;
                    out.push((second, -sign));
                }
            }
            sign = -sign;
        }
        out
    }

    /// Matrix of `∂ : C_{i,k} → C_{i-1,k}`; for `i = 0` the zero map to `0`.
    pub fn differential_matrix(&self, i: usize, k: usize, field: FieldTag) -> Result<SparseMatrix> {
        let src = self.enumerate_basis(i, k);
        if i == 0 {
            return Ok(SparseMatrix::zeros(0, src.len(), field));
        }
        let dst = self.enumerate_basis(i - 1, k);
        self.differential_between(&src, &dst, field)
    }

    /// Differential between two already enumerated bases.
    pub fn differential_between(&self, src: &Basis, dst: &Basis, field: FieldTag) -> Result<SparseMatrix> {
        let columns = src
            .elements()
            .iter()
            .map(|e| {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for (t, c) in self.boundary_terms(e) {
                    let r = dst.position(&t).expect("boundary stays in the target basis");
                    *acc.entry(r).or_default() += c;
                }
                integer_column(acc, field)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseMatrix::from_columns(dst.len(), field, columns))
    }

    /// Matrix of multiplication by the edge `e`: `C_{i,k} → C_{i,k+1}`.
    pub fn stabilization_matrix(&self, e: EdgeId, i: usize, k: usize, field: FieldTag) -> Result<SparseMatrix> {
        if e >= self.graph.edge_count() {
            return Err(GraphError::UnknownEdge(format!("#{e}")).into());
        }
        let src = self.enumerate_basis(i, k);
        let dst = self.enumerate_basis(i, k + 1);
        let columns = src
            .elements()
            .iter()
            .map(|el| {
                let mut t = el.clone();
                t.exponents[e] += 1;
                let r = dst.position(&t).expect("stabilization stays in the target basis");
                integer_column(BTreeMap::from([(r, 1)]), field)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseMatrix::from_columns(dst.len(), field, columns))
    }

    /// Chain-level `∂`.
    pub fn boundary(&self, c: &ChainVector) -> ChainVector {
        let (i, k) = c.bidegree();
        let mut out = ChainVector::zero((i.saturating_sub(1), k), c.field());
        for (e, x) in c.terms() {
            for (t, s) in self.boundary_terms(e) {
                out.add_term(t, x * BigRational::from_integer(s.into()));
            }
        }
        out
    }

    /// Chain-level multiplication by a monomial in the edges.
    pub fn multiply_edges(&self, c: &ChainVector, exponents: &[u32]) -> ChainVector {
        let add: u32 = exponents.iter().sum();
        let (i, k) = c.bidegree();
        let mut out = ChainVector::zero((i, k + add as usize), c.field());
        for (e, x) in c.terms() {
            let mut t = e.clone();
            for (slot, a) in t.exponents.iter_mut().zip(exponents) {
                *slot += a;
            }
            out.add_term(t, x.clone());
        }
        out
    }

    /// Multiplication by a linear combination `Σ c_e·e` of edges.
    pub fn multiply_linear(&self, c: &ChainVector, combo: &[(EdgeId, i64)]) -> ChainVector {
        let (i, k) = c.bidegree();
        let mut out = ChainVector::zero((i, k + 1), c.field());
        for &(e, coeff) in combo {
            let mut exps = vec![0; self.graph.edge_count()];
            exps[e] = 1;
            out = &out + &self.multiply_edges(c, &exps).scaled(&BigRational::from_integer(coeff.into()));
        }
        out
    }

    /// The generator `h - h'` at a single vertex, written in this variant.
    pub fn half_edge_difference(&self, h: HalfEdgeId, h2: HalfEdgeId, field: FieldTag) -> Result<ChainVector> {
        self.encode_chain(&[ChainTerm::new(1, vec![Factor::Difference(h, h2)])], field)
    }

    /// Canonical chain for a list of terms.
    pub fn encode_chain(&self, terms: &[ChainTerm], field: FieldTag) -> Result<ChainVector> {
        let g = self.graph;
        let mut bidegree = None;
        let mut out = ChainVector::zero((0, 0), field);
        for term in terms {
            // each vertex factor expands to a short signed list of states
            let mut exps = vec![0u32; g.edge_count()];
            let mut slots: Vec<(VertexId, Vec<(VertexState, i64)>)> = Vec::new();
            let mut degree = 0;
            let mut weight = 0;
            for f in &term.factors {
                match *f {
                    Factor::Edge(e, p) => {
                        exps[e] += p;
                        weight += p as usize;
                    }
                    Factor::Occupied(v) => {
                        if self.is_reduced() {
                            return Err(ComplexError::NotInVariant(format!("@{}", g.vertex_name(v)), "reduced"));
                        }
                        slots.push((v, vec![(VertexState::Occupied, 1)]));
                        weight += 1;
                    }
                    Factor::Half(h) => {
                        if self.is_reduced() {
                            return Err(ComplexError::NotInVariant(g.half_edge_name(h), "reduced"));
                        }
                        slots.push((g.half_edge_vertex(h), vec![(VertexState::Half(h), 1)]));
                        degree += 1;
                        weight += 1;
                    }
                    Factor::Difference(a, b) => {
                        let v = g.half_edge_vertex(a);
                        if g.half_edge_vertex(b) != v {
                            return Err(ComplexError::SplitDifference(g.half_edge_name(a), g.half_edge_name(b)));
                        }
                        let mut expansion = Vec::new();
                        for (h, s) in [(a, 1), (b, -1)] {
                            if self.privileged(v) != Some(h) {
                                expansion.push((VertexState::Half(h), s));
                            }
                        }
                        slots.push((v, expansion));
                        degree += 1;
                        weight += 1;
                    }
                }
            }
            let bd = (degree, weight);
            match bidegree {
                None => bidegree = Some(bd),
                Some(prev) if prev != bd => return Err(ComplexError::MixedBidegree(prev, bd)),
                _ => {}
            }
            let mut seen = vec![false; g.vertex_count()];
            for (v, _) in &slots {
                if std::mem::replace(&mut seen[*v], true) {
                    return Err(ComplexError::VertexConflict(g.vertex_name(*v).to_string()));
                }
            }
            // sign of sorting the degree-one factors into vertex order
            let odd: Vec<VertexId> = slots
                .iter()
                .filter(|(_, ex)| matches!(ex.first(), Some((VertexState::Half(_), _))) || ex.is_empty())
                .map(|(v, _)| *v)
                .collect();
            let inversions = (0..odd.len()).flat_map(|a| (a + 1..odd.len()).map(move |b| (a, b))).filter(|&(a, b)| odd[a] > odd[b]).count();
            let koszul = if inversions % 2 == 0 { 1 } else { -1 };
            let mut partial: Vec<(BasisElement, i64)> =
                vec![(BasisElement { states: vec![VertexState::Empty; g.vertex_count()], exponents: exps }, koszul)];
            for (v, expansion) in &slots {
                let mut next = Vec::new();
                for (el, s) in &partial {
                    for (state, s2) in expansion {
                        let mut e2 = el.clone();
                        e2.states[*v] = *state;
                        next.push((e2, s * s2));
                    }
                }
                partial = next;
            }
            for (el, s) in partial {
                out.add_term(el, &term.coefficient * BigRational::from_integer(s.into()));
            }
        }
        if let Some(bd) = bidegree {
            if out.is_zero() {
                out = ChainVector::zero(bd, field);
            }
        }
        Ok(out)
    }

    /// Image of a reduced chain under the inclusion into the full complex,
    /// `h - h₁ ↦ h - h₁`.
    pub fn include_into_full(&self, c: &ChainVector) -> ChainVector {
        let ComplexVariant::Reduced { privileged } = &self.variant else { return c.clone() };
        let mut out = ChainVector::zero(c.bidegree(), c.field());
        for (e, x) in c.terms() {
            let mut partial = vec![(e.clone(), 1i64)];
            for (v, s) in e.states.iter().enumerate() {
                let VertexState::Half(_) = s else { continue };
                let mut next = Vec::new();
                for (el, sign) in partial {
                    let mut alt = el.clone();
                    alt.states[v] = VertexState::Half(privileged[v]);
                    next.push((el, sign));
                    next.push((alt, -sign));
                }
                partial = next;
            }
            for (el, s) in partial {
                out.add_term(el, x * BigRational::from_integer(s.into()));
            }
        }
        out
    }
}

impl fmt::Display for Complex<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} complex of {}", self.variant.name(), self.graph.hash())
    }
}

fn integer_column(acc: BTreeMap<usize, i64>, field: FieldTag) -> Result<Vec<(usize, Entry)>> {
    let mut col = Vec::with_capacity(acc.len());
    for (r, v) in acc {
        let v = match field {
            FieldTag::Prime(p) => v.rem_euclid(p as i64),
            _ => v,
        };
        if v != 0 {
            col.push((r, Entry::from_integer(v)));
        }
    }
    Ok(col)
}

/// Number of monomials of degree `m` in `n` variables.
fn multiset_count(n: usize, m: usize) -> u128 {
    if n == 0 {
        return u128::from(m == 0);
    }
    // C(m + n - 1, n - 1)
    let mut acc: u128 = 1;
    let r = (n - 1).min(m);
    let top = m + n - 1;
    for j in 0..r {
        acc = acc.saturating_mul((top - j) as u128) / (j as u128 + 1);
    }
    acc
}

/// Visits every vector of `exps[pos..]` summing to `rest`, in lex order.
fn compositions(rest: usize, pos: usize, exps: &mut [u32], visit: &mut dyn FnMut(&[u32])) {
    if pos + 1 >= exps.len() {
        if pos < exps.len() {
            exps[pos] = rest as u32;
            visit(exps);
            exps[pos] = 0;
        } else if rest == 0 {
            visit(exps);
        }
        return;
    }
    for x in 0..=rest {
        exps[pos] = x as u32;
        compositions(rest - x, pos + 1, exps, visit);
    }
    exps[pos] = 0;
}
