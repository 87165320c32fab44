//! Betti numbers, integral homology, boundary membership, and the exact
//! sequence of a bivalent vertex explosion.

use std::collections::BTreeMap;
use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{Basis, BasisElement, ChainVector, Complex, ComplexError, ComplexVariant, VertexState};
use crate::graph::{EdgeId, Graph, GraphError, VertexId, VertexSet};
use crate::linalg::{self, FieldTag, LinalgError, SparseMatrix, Vector};

#[derive(Debug, thiserror::Error)]
pub enum HomologyError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cell ({i},{k}) needs a basis of {size} elements, above the cap of {cap}")]
    ResourceLimit { i: usize, k: usize, size: u128, cap: usize },
    #[error("vertex `{0}` is not bivalent")]
    NotBivalent(String),
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("{0} is not a field")]
    NotAField(FieldTag),
    #[error("cannot write table: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, HomologyError>;

/// Free rank and torsion of one integral homology group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegralHomology {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

/// Betti numbers over a rectangle of bidegrees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BettiTable {
    pub graph: String,
    pub field: FieldTag,
    pub variant: String,
    pub entries: BTreeMap<(usize, usize), usize>,
    /// Invariant factors above one, present for integral tables.
    pub torsion: Option<BTreeMap<(usize, usize), Vec<BigInt>>>,
}

#[derive(Serialize)]
struct TableRow<'a> {
    graph: &'a str,
    field: String,
    i: usize,
    k: usize,
    betti: usize,
    torsion: String,
}

impl BettiTable {
    pub fn get(&self, i: usize, k: usize) -> Option<usize> {
        self.entries.get(&(i, k)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Betti row `k ↦ b_{i,k}` in increasing `k`.
    pub fn row(&self, i: usize) -> Vec<(usize, usize)> {
        self.entries.iter().filter(|((a, _), _)| *a == i).map(|(&(_, k), &b)| (k, b)).collect()
    }

    fn rows(&self) -> Vec<TableRow<'_>> {
        self.entries
            .iter()
            .map(|(&(i, k), &betti)| {
                let torsion = self
                    .torsion
                    .as_ref()
                    .and_then(|t| t.get(&(i, k)))
                    .map(|fs| fs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                TableRow { graph: &self.graph, field: self.field.to_string(), i, k, betti, torsion }
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.entries.is_empty() {
            w.write_record(["graph", "field", "i", "k", "betti", "torsion"]).map_err(|e| HomologyError::Output(e.to_string()))?;
        }
        for row in self.rows() {
            w.serialize(row).map_err(|e| HomologyError::Output(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| HomologyError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HomologyError::Output(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "graph": self.graph,
            "field": self.field.to_string(),
            "variant": self.variant,
            "entries": self.rows().iter().map(|r| serde_json::json!({
                "i": r.i, "k": r.k, "betti": r.betti,
                "torsion": if r.torsion.is_empty() { Vec::new() } else { r.torsion.split(';').collect::<Vec<_>>() },
            })).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&doc).map_err(|e| HomologyError::Output(e.to_string()))
    }
}

/// Knobs for batch computation.
#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    /// Largest basis any cell may enumerate; `None` disables the guard.
    pub cap: Option<usize>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { cap: Some(200_000) }
    }
}

fn require_field(field: FieldTag) -> Result<()> {
    if field.is_field() {
        Ok(())
    } else {
        Err(HomologyError::NotAField(field))
    }
}

fn guard(cx: &Complex, i: usize, k: usize, cap: Option<usize>) -> Result<()> {
    if let Some(cap) = cap {
        let size = cx.basis_count(i, k);
        if size > cap as u128 {
            return Err(HomologyError::ResourceLimit { i, k, size, cap });
        }
    }
    Ok(())
}

/// Rank of `∂_{i,k}` over a field.
pub fn differential_rank(cx: &Complex, field: FieldTag, i: usize, k: usize) -> Result<usize> {
    if i == 0 {
        return Ok(0);
    }
    let d = cx.differential_matrix(i, k, field)?;
    Ok(linalg::rank(&d)?)
}

/// `dim H_i(B_k(Γ); F)`; over the integers, the free rank.
pub fn betti(cx: &Complex, field: FieldTag, i: usize, k: usize) -> Result<usize> {
    if field == FieldTag::Integers {
        return Ok(integral_homology(cx, i, k)?.free_rank);
    }
    let dim = cx.basis_count(i, k) as usize;
    Ok(dim - differential_rank(cx, field, i, k)? - differential_rank(cx, field, i + 1, k)?)
}

/// Free rank and torsion of `H_i(B_k(Γ); ℤ)` from two Smith forms.
pub fn integral_homology(cx: &Complex, i: usize, k: usize) -> Result<IntegralHomology> {
    let dim = cx.basis_count(i, k) as usize;
    let out_rank = if i == 0 { 0 } else { linalg::smith_normal_form(&cx.differential_matrix(i, k, FieldTag::Integers)?)?.rank };
    let incoming = linalg::smith_normal_form(&cx.differential_matrix(i + 1, k, FieldTag::Integers)?)?;
    Ok(IntegralHomology { free_rank: dim - out_rank - incoming.rank, torsion: incoming.torsion() })
}

/// Betti numbers for `i ∈ is`, `k ∈ ks`, computing each differential once.
/// Cells run on the current rayon pool.
pub fn betti_table(cx: &Complex, field: FieldTag, is: Range<usize>, ks: Range<usize>, opts: TableOptions) -> Result<BettiTable> {
    let mut table = BettiTable {
        graph: cx.graph().hash(),
        field,
        variant: cx.variant().name().to_string(),
        entries: BTreeMap::new(),
        torsion: (field == FieldTag::Integers).then(BTreeMap::new),
    };
    if is.is_empty() || ks.is_empty() {
        return Ok(table);
    }
    let cells: Vec<(usize, usize)> =
        (is.start.max(1)..=is.end).flat_map(|i| ks.clone().map(move |k| (i, k))).collect();
    for &(i, k) in &cells {
        guard(cx, i, k, opts.cap)?;
    }
    for k in ks.clone() {
        guard(cx, is.start, k, opts.cap)?;
    }
    // (rank, torsion of the cokernel) per differential
    let ranks: BTreeMap<(usize, usize), (usize, Vec<BigInt>)> = cells
        .par_iter()
        .map(|&(i, k)| {
            let d = cx.differential_matrix(i, k, field)?;
            let r = if field == FieldTag::Integers {
                let snf = linalg::smith_normal_form(&d)?;
                (snf.rank, snf.torsion())
            } else {
                (linalg::rank(&d)?, Vec::new())
            };
            Ok(((i, k), r))
        })
        .collect::<Result<_>>()?;
    for i in is {
        for k in ks.clone() {
            let out = if i == 0 { 0 } else { ranks[&(i, k)].0 };
            let (inc, torsion) = &ranks[&(i + 1, k)];
            let dim = cx.basis_count(i, k) as usize;
            table.entries.insert((i, k), dim - out - inc);
            if let Some(t) = table.torsion.as_mut() {
                t.insert((i, k), torsion.clone());
            }
        }
    }
    Ok(table)
}

/// A witness `b` with `∂b = c`, or `None` if the cycle `c` is not a boundary.
pub fn boundary_witness(cx: &Complex, c: &ChainVector) -> Result<Option<ChainVector>> {
    require_field(c.field())?;
    if !cx.boundary(c).is_zero() {
        return Err(HomologyError::NotACycle);
    }
    if c.is_zero() {
        let (i, k) = c.bidegree();
        return Ok(Some(ChainVector::zero((i + 1, k), c.field())));
    }
    let (i, k) = c.bidegree();
    let src = cx.enumerate_basis(i + 1, k);
    let dst = cx.enumerate_basis(i, k);
    let d = cx.differential_between(&src, &dst, c.field())?;
    let v = c.to_vector(&dst)?;
    Ok(linalg::solve_in_image(&d, &v)?.map(|x| ChainVector::from_vector(&src, &x, c.field())))
}

/// Whether the cycle `c` bounds.
pub fn is_boundary(cx: &Complex, c: &ChainVector) -> Result<bool> {
    Ok(boundary_witness(cx, c)?.is_some())
}

/// Dimension of the span of the classes of `cycles` in `H_i(B_k)`.
pub fn class_rank(cx: &Complex, field: FieldTag, bidegree: (usize, usize), cycles: &[ChainVector]) -> Result<usize> {
    require_field(field)?;
    let (i, k) = bidegree;
    let here = cx.enumerate_basis(i, k);
    let vectors = cycles.iter().map(|c| c.to_vector(&here)).collect::<std::result::Result<Vec<_>, _>>()?;
    class_rank_vectors(cx, field, bidegree, &here, &vectors)
}

fn class_rank_vectors(cx: &Complex, field: FieldTag, (i, k): (usize, usize), here: &Basis, vectors: &[Vector]) -> Result<usize> {
    let above = cx.enumerate_basis(i + 1, k);
    let incoming = cx.differential_between(&above, here, field)?;
    let outgoing = if i == 0 {
        SparseMatrix::zeros(0, here.len(), field)
    } else {
        cx.differential_between(here, &cx.enumerate_basis(i - 1, k), field)?
    };
    Ok(linalg::quotient_rank(vectors, &incoming, &outgoing)?)
}

/// Outcome of checking the exact sequence of a bivalent vertex at one
/// bidegree. Dimensions are of homology groups over the chosen field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LesReport {
    pub vertex: String,
    pub bidegree: (usize, usize),
    /// `dim H_i(B_k(Γ))`
    pub middle: usize,
    pub image_iota: usize,
    pub image_psi: usize,
    /// `dim H_{i-1}(B_{k-1}(Γ_v))`
    pub psi_target: usize,
    /// image of `e - e'` into `H_{i-1}(B_k(Γ_v))`
    pub image_multiplication: usize,
    /// `dim H_i(B_k(Γ_v))`
    pub iota_source: usize,
    /// image of `e - e'` from `H_i(B_{k-1}(Γ_v))`
    pub image_multiplication_into_source: usize,
    pub exact_at_middle: bool,
    pub exact_at_psi_target: bool,
    pub exact_at_iota_source: bool,
}

impl LesReport {
    pub fn passed(&self) -> bool {
        self.exact_at_middle && self.exact_at_psi_target && self.exact_at_iota_source
    }
}

/// Homology data for one bidegree of one complex: its bases and a basis of
/// cycle vectors.
struct Cell {
    basis: Basis,
    cycles: Vec<Vector>,
    dim_h: usize,
}

fn cell(cx: &Complex, field: FieldTag, i: usize, k: usize) -> Result<Cell> {
    let basis = cx.enumerate_basis(i, k);
    let cycles = if i == 0 {
        (0..basis.len())
            .map(|j| (0..basis.len()).map(|r| if r == j { BigRational::from_integer(1.into()) } else { BigRational::zero() }).collect())
            .collect()
    } else {
        let below = cx.enumerate_basis(i - 1, k);
        linalg::kernel_basis(&cx.differential_between(&basis, &below, field)?)?
    };
    let dim_h = cycles.len() - differential_rank(cx, field, i + 1, k)?;
    Ok(Cell { basis, cycles, dim_h })
}

/// Applies a chain-level map to coordinate vectors.
fn push_forward(
    src: &Basis,
    dst: &Basis,
    field: FieldTag,
    vectors: &[Vector],
    map: impl Fn(&ChainVector) -> ChainVector,
) -> Result<Vec<Vector>> {
    vectors
        .iter()
        .map(|v| {
            let image = map(&ChainVector::from_vector(src, v, field));
            if image.is_zero() {
                Ok(vec![BigRational::zero(); dst.len()])
            } else {
                Ok(image.to_vector(dst)?)
            }
        })
        .collect()
}

/// Checks exactness of
/// `H_i(Γ_v)_k → H_i(Γ)_k → H_{i-1}(Γ_v)_{k-1} → H_{i-1}(Γ_v)_k` at its three
/// inner terms, together with `H_i(Γ_v)_{k-1} → H_i(Γ_v)_k` by `e - e'`
/// feeding the first map. `h'` is the first half-edge at `v`, privileged in
/// the reduced complex of `Γ`.
pub fn les_check(g: &Graph, v: VertexId, i: usize, k: usize, field: FieldTag) -> Result<LesReport> {
    require_field(field)?;
    if g.degree(v) != 2 {
        return Err(HomologyError::NotBivalent(g.vertex_name(v).to_string()));
    }
    let hs = g.half_edges_at(v);
    let (h_prime, h) = (hs[0], hs[1]);
    let (e, e_prime) = (g.half_edge_edge(h), g.half_edge_edge(h_prime));
    let cx = Complex::new(g, ComplexVariant::reduced_with(g, &[h_prime])?)?;
    let exploded = g.explode(&[v].into_iter().collect::<VertexSet>())?;
    let cv = Complex::reduced(&exploded);
    // vertex of Γ_v carrying each surviving vertex of Γ
    let survivor: Vec<Option<VertexId>> = g
        .vertices()
        .map(|u| if u == v { None } else { exploded.vertex_id(g.vertex_name(u)).ok() })
        .collect();

    let iota = |c: &ChainVector| {
        let mut out = ChainVector::zero(c.bidegree(), c.field());
        for (el, x) in c.terms() {
            let mut states = vec![VertexState::Empty; g.vertex_count()];
            for (u, s) in survivor.iter().enumerate() {
                if let Some(w) = s {
                    states[u] = el.states[*w];
                }
            }
            out.add_term(BasisElement { states, exponents: el.exponents.clone() }, x.clone());
        }
        out
    };
    let psi = |c: &ChainVector| {
        let (a, b) = c.bidegree();
        let mut out = ChainVector::zero((a.saturating_sub(1), b.saturating_sub(1)), c.field());
        for (el, x) in c.terms() {
            if el.states[v] == VertexState::Empty {
                continue;
            }
            let earlier = el.states[..v].iter().filter(|s| matches!(s, VertexState::Half(_))).count();
            let mut states = vec![VertexState::Empty; exploded.vertex_count()];
            for (u, s) in survivor.iter().enumerate() {
                if let Some(w) = s {
                    states[*w] = el.states[u];
                }
            }
            let sign = if earlier % 2 == 0 { 1 } else { -1 };
            out.add_term(BasisElement { states, exponents: el.exponents.clone() }, x * BigRational::from_integer(sign.into()));
        }
        out
    };
    let multiply = |c: &ChainVector| cv.multiply_linear(c, &edge_difference(e, e_prime));

    let middle = cell(&cx, field, i, k)?;
    let source = cell(&cv, field, i, k)?;

    let iota_images = push_forward(&source.basis, &middle.basis, field, &source.cycles, iota)?;
    let image_iota = class_rank_vectors(&cx, field, (i, k), &middle.basis, &iota_images)?;

    // multiplication into the source of ι, and its composite with ι
    let (image_multiplication_into_source, composite_into_middle) = if k == 0 {
        (0, 0)
    } else {
        let before = cell(&cv, field, i, k - 1)?;
        let mult = push_forward(&before.basis, &source.basis, field, &before.cycles, multiply)?;
        let rank = class_rank_vectors(&cv, field, (i, k), &source.basis, &mult)?;
        let through = push_forward(&before.basis, &middle.basis, field, &before.cycles, |c| iota(&multiply(c)))?;
        (rank, class_rank_vectors(&cx, field, (i, k), &middle.basis, &through)?)
    };

    let (image_psi, psi_target, image_multiplication, composite_after_psi) = if i == 0 || k == 0 {
        (0, 0, 0, 0)
    } else {
        let target = cell(&cv, field, i - 1, k - 1)?;
        let psi_images = push_forward(&middle.basis, &target.basis, field, &middle.cycles, psi)?;
        let image_psi = class_rank_vectors(&cv, field, (i - 1, k - 1), &target.basis, &psi_images)?;
        let next = cv.enumerate_basis(i - 1, k);
        let mult = push_forward(&target.basis, &next, field, &target.cycles, multiply)?;
        let image_mult = class_rank_vectors(&cv, field, (i - 1, k), &next, &mult)?;
        let after = push_forward(&middle.basis, &next, field, &middle.cycles, |c| multiply(&psi(c)))?;
        let composite = class_rank_vectors(&cv, field, (i - 1, k), &next, &after)?;
        (image_psi, target.dim_h, image_mult, composite)
    };

    // ψ∘ι vanishes on chains, so ker ψ ⊇ im ι holds and dimensions decide
    let exact_at_middle = middle.dim_h == image_iota + image_psi;
    let exact_at_psi_target = composite_after_psi == 0 && psi_target - image_multiplication == image_psi;
    let exact_at_iota_source = composite_into_middle == 0 && source.dim_h - image_iota == image_multiplication_into_source;
    Ok(LesReport {
        vertex: g.vertex_name(v).to_string(),
        bidegree: (i, k),
        middle: middle.dim_h,
        image_iota,
        image_psi,
        psi_target,
        image_multiplication,
        iota_source: source.dim_h,
        image_multiplication_into_source,
        exact_at_middle,
        exact_at_psi_target,
        exact_at_iota_source,
    })
}

fn edge_difference(e: EdgeId, e2: EdgeId) -> Vec<(EdgeId, i64)> {
    if e == e2 {
        Vec::new()
    } else {
        vec![(e, 1), (e2, -1)]
    }
}

/// Whether the Betti table of `g1 ⊔ g2` is the bigraded convolution of the
/// two tables on `i ≤ i_max`, `k ≤ k_max`.
pub fn kunneth_check(g1: &Graph, g2: &Graph, field: FieldTag, i_max: usize, k_max: usize) -> Result<bool> {
    require_field(field)?;
    let union = g1.disjoint_union(g2)?;
    let opts = TableOptions { cap: None };
    let table = |g: &Graph| betti_table(&Complex::reduced(g), field, 0..i_max + 1, 0..k_max + 1, opts);
    let (t1, t2, tu) = (table(g1)?, table(g2)?, table(&union)?);
    for i in 0..=i_max {
        for k in 0..=k_max {
            let mut expected = 0;
            for i1 in 0..=i {
                for k1 in 0..=k {
                    expected += t1.entries[&(i1, k1)] * t2.entries[&(i - i1, k - k1)];
                }
            }
            if tu.entries[&(i, k)] != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
