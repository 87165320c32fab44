//! The predicted leading coefficient of Betti-number growth and its check
//! against computed rows by finite differences.
//!
//! A difference sequence counts as stabilized when its last three or more
//! values agree. Nothing bounds where stabilization starts, so a verdict is
//! an observation about the computed range, not a proof.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::complex::Complex;
use crate::graph::{Graph, GraphError, VertexSet};
use crate::homology::{self, HomologyError, TableOptions};
use crate::linalg::FieldTag;

#[derive(Debug, thiserror::Error)]
pub enum GrowthError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("graph has no essential vertex")]
    NoEssentialVertex,
    #[error(
        "Δ^{i} = 1: homology grows at most like a constant here; this case is covered by the Ko–Park description of graph braid groups, not by the leading-coefficient formula"
    )]
    DeltaOne { i: usize },
    #[error("difference order {order} exceeds sequence length {len}")]
    OrderTooLarge { order: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, GrowthError>;

/// The predicted coefficient of `k^(Δ-1)` and where it comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeadingCoefficient {
    pub i: usize,
    pub delta: usize,
    /// Each maximizing `W` by vertex names, with `∏(d(w) - 2)`.
    pub maximizers: Vec<(Vec<String>, usize)>,
    /// `Σ_W ∏(d(w) - 2)`, the predicted stable `(Δ-1)`-th difference.
    pub numerator: BigInt,
    #[serde(serialize_with = "as_string")]
    pub coefficient: BigRational,
}

fn as_string<S: serde::Serializer, T: std::fmt::Display>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

/// `(Σ_W ∏_{w∈W}(d(w) - 2)) / (Δ^i - 1)!` over the maximizing sets `W`.
pub fn leading_coefficient(g: &Graph, i: usize) -> Result<LeadingCoefficient> {
    if g.essential_vertices().is_empty() {
        return Err(GrowthError::NoEssentialVertex);
    }
    let ramos = g.ramos_number(i)?;
    if ramos.delta <= 1 {
        return Err(GrowthError::DeltaOne { i });
    }
    let maximizers: Vec<(Vec<String>, usize)> = ramos
        .maximizers
        .iter()
        .map(|w: &VertexSet| {
            (w.names(g).into_iter().map(String::from).collect(), w.iter().map(|v| g.degree(v) - 2).product())
        })
        .collect();
    let numerator: BigInt = maximizers.iter().map(|(_, p)| BigInt::from(*p)).sum();
    let coefficient = BigRational::new(numerator.clone(), factorial(ramos.delta - 1));
    Ok(LeadingCoefficient { i, delta: ramos.delta, maximizers, numerator, coefficient })
}

/// The `order`-fold forward difference.
pub fn finite_differences(seq: &[BigInt], order: usize) -> Result<Vec<BigInt>> {
    if order > seq.len() {
        return Err(GrowthError::OrderTooLarge { order, len: seq.len() });
    }
    let mut cur = seq.to_vec();
    for _ in 0..order {
        cur = cur.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    Ok(cur)
}

/// Value and start index of the longest constant suffix, if it has at
/// least three entries.
pub fn stabilized_suffix(seq: &[BigInt]) -> Option<(BigInt, usize)> {
    let last = seq.last()?;
    let start = seq.iter().rposition(|x| x != last).map_or(0, |p| p + 1);
    (seq.len() - start >= 3).then(|| (last.clone(), start))
}

/// `C(k + b - 1, b - 1)`: monomials of degree `k` in `b` variables.
pub fn partition_dimension(blocks: usize, k: usize) -> BigUint {
    assert!(blocks >= 1, "a partition has at least one block");
    binomial(k + blocks - 1, blocks - 1)
}

fn binomial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    (0..r).fold(BigUint::one(), |acc, j| acc * BigUint::from(n - j) / BigUint::from(j + 1))
}

/// Whether the `n`-th difference of `seq` ends in a stabilized run of zeros,
/// i.e. the observed growth has degree below `n`.
pub fn smallness_check(seq: &[BigInt], n: usize) -> bool {
    finite_differences(seq, n).ok().and_then(|d| stabilized_suffix(&d)).is_some_and(|(v, _)| v.is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Confirmed,
    Refuted,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Comparison of a computed Betti row with the predicted growth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthReport {
    pub graph: String,
    pub field: String,
    pub prediction: LeadingCoefficient,
    /// `(k, b_{i,k})` for `k = 0..=k_max`
    pub betti: Vec<(usize, usize)>,
    /// The `(Δ-1)`-th differences.
    pub leading_differences: Vec<BigInt>,
    /// The `Δ`-th differences.
    pub next_differences: Vec<BigInt>,
    /// Stable value of the `(Δ-1)`-th difference, if observed.
    pub observed: Option<BigInt>,
    /// First `k` of the window over which the row agrees with a polynomial
    /// of the predicted degree.
    pub onset: Option<usize>,
    pub verdict: Verdict,
}

impl GrowthReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let p = &self.prediction;
        let mut out = String::new();
        let _ = writeln!(out, "graph {}  field {}  degree {}", self.graph, self.field, p.i);
        let _ = writeln!(out, "Ramos number {}", p.delta);
        for (w, prod) in &p.maximizers {
            let _ = writeln!(out, "  maximizer {{{}}}  product {}", w.join(","), prod);
        }
        let _ = writeln!(out, "leading coefficient {} (difference target {})", p.coefficient, p.numerator);
        let row: Vec<String> = self.betti.iter().map(|(_, b)| b.to_string()).collect();
        let _ = writeln!(out, "betti {}", row.join(" "));
        let diffs: Vec<String> = self.leading_differences.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "order {} differences {}", p.delta - 1, diffs.join(" "));
        match (&self.observed, self.onset) {
            (Some(v), Some(k)) => {
                let _ = writeln!(out, "stabilized at {v} from k = {k}");
            }
            _ => {
                let _ = writeln!(out, "no stabilized suffix");
            }
        }
        let _ = writeln!(out, "verdict {}", self.verdict);
        out
    }

    /// Columns `k, betti, d<Δ-1>, d<Δ>`; difference cells are empty past the
    /// end of their sequence.
    pub fn differences_csv(&self) -> String {
        let r = self.prediction.delta - 1;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k".to_string(), "betti".to_string(), format!("d{r}"), format!("d{}", r + 1)]).expect("in-memory write");
        for (j, (k, b)) in self.betti.iter().enumerate() {
            let cell = |s: &[BigInt]| s.get(j).map(ToString::to_string).unwrap_or_default();
            w.write_record([k.to_string(), b.to_string(), cell(&self.leading_differences), cell(&self.next_differences)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

/// Decides the verdict from the two difference sequences.
fn judge(target: &BigInt, leading: &[BigInt], next: &[BigInt]) -> (Option<BigInt>, Option<usize>, Verdict) {
    let Some((value, start)) = stabilized_suffix(leading) else {
        return (None, None, Verdict::Inconclusive);
    };
    let next_ok = match stabilized_suffix(next) {
        Some((v, _)) => v.is_zero(),
        None => false,
    };
    let verdict = if &value != target {
        Verdict::Refuted
    } else if next_ok {
        Verdict::Confirmed
    } else {
        Verdict::Inconclusive
    };
    (Some(value), Some(start), verdict)
}

/// Computes the Betti row `b_{i,0..=k_max}` and compares its finite
/// differences with the prediction.
pub fn verify_growth(g: &Graph, field: FieldTag, i: usize, k_max: usize, opts: TableOptions) -> Result<GrowthReport> {
    let prediction = leading_coefficient(g, i)?;
    let cx = Complex::reduced(g);
    let table = homology::betti_table(&cx, field, i..i + 1, 0..k_max + 1, opts)?;
    Ok(report_from_row(g, field, prediction, table.row(i)))
}

/// Same comparison for a row that was computed elsewhere.
pub fn report_from_row(g: &Graph, field: FieldTag, prediction: LeadingCoefficient, betti: Vec<(usize, usize)>) -> GrowthReport {
    let seq: Vec<BigInt> = betti.iter().map(|&(_, b)| BigInt::from(b)).collect();
    let r = prediction.delta - 1;
    let leading = finite_differences(&seq, r).unwrap_or_default();
    let next = finite_differences(&seq, r + 1).unwrap_or_default();
    let (observed, start, verdict) = judge(&prediction.numerator, &leading, &next);
    let onset = start.map(|s| betti[s].0);
    GrowthReport {
        graph: g.hash(),
        field: field.to_string(),
        prediction,
        betti,
        leading_differences: leading,
        next_differences: next,
        observed,
        onset,
        verdict,
    }
}

/// Exponents of each prime in the torsion of `H_i(B_k; ℤ)` for `k ≤ k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorsionScan {
    pub graph: String,
    pub i: usize,
    /// `Δ^i`, when defined.
    pub delta: Option<usize>,
    /// `k ↦ (p ↦ f(k))`; primes absent from a row have exponent 0.
    pub exponents: BTreeMap<usize, BTreeMap<u64, u32>>,
    /// Whether every prime's exponent grows with degree below `Δ^i - 1`;
    /// only judged when `Δ^i > 1`.
    pub growth: Option<Verdict>,
}

impl TorsionScan {
    pub fn exponent(&self, k: usize, p: u64) -> u32 {
        self.exponents.get(&k).and_then(|m| m.get(&p)).copied().unwrap_or(0)
    }

    pub fn primes(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self.exponents.values().flat_map(|m| m.keys().copied()).collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serializes")
    }
}

/// Prime factorization by trial division; the factors met here are small.
fn factor(n: &BigInt) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut m = n.abs();
    let mut p = BigInt::from(2u32);
    while &p * &p <= m {
        while m.is_multiple_of(&p) {
            m /= &p;
            *out.entry(p.to_u64().expect("small prime")).or_insert(0) += 1;
        }
        p += 1;
    }
    if m > BigInt::one() {
        *out.entry(m.to_u64().expect("torsion factor fits in a word")).or_insert(0) += 1;
    }
    out
}

/// Integral homology in degree `i` for `k = 0..=k_max`, split by prime.
pub fn torsion_growth_scan(g: &Graph, i: usize, k_max: usize, opts: TableOptions) -> Result<TorsionScan> {
    let cx = Complex::reduced(g);
    let table = homology::betti_table(&cx, FieldTag::Integers, i..i + 1, 0..k_max + 1, opts)?;
    let torsion = table.torsion.unwrap_or_default();
    let mut exponents = BTreeMap::new();
    for k in 0..=k_max {
        let mut row: BTreeMap<u64, u32> = BTreeMap::new();
        for d in torsion.get(&(i, k)).into_iter().flatten() {
            for (p, e) in factor(d) {
                *row.entry(p).or_insert(0) += e;
            }
        }
        exponents.insert(k, row);
    }
    let delta = g.ramos_number(i).ok().map(|r| r.delta);
    let mut scan = TorsionScan { graph: g.hash(), i, delta, exponents, growth: None };
    if let Some(d) = delta.filter(|&d| d > 1) {
        let mut verdict = Verdict::Confirmed;
        for p in scan.primes() {
            let seq: Vec<BigInt> = (0..=k_max).map(|k| BigInt::from(scan.exponent(k, p))).collect();
            match finite_differences(&seq, d - 1).ok().and_then(|s| stabilized_suffix(&s)) {
                Some((v, _)) if v.is_zero() => {}
                Some(_) => verdict = Verdict::Refuted,
                None => {
                    if verdict == Verdict::Confirmed {
                        verdict = Verdict::Inconclusive;
                    }
                }
            }
        }
        scan.growth = Some(verdict);
    }
    Ok(scan)
}
