//! Exact sparse linear algebra over ℚ and 𝔽_p, and Smith normal form over ℤ.
//!
//! Matrices are stored column-major with small exact entries. Elimination
//! converts them into a working [`Field`] representation: arbitrary-precision
//! rationals for ℚ, word-sized residues for 𝔽_p. No floating point is used.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Matrix entries: exact rationals with machine-word parts.
pub type Entry = Ratio<i64>;

/// Dense exact vector. Over 𝔽_p the values are residues in `[0, p)`.
pub type Vector = Vec<BigRational>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("rank and kernels need a field; use the Smith normal form for integer matrices")]
    IntegerMatrix,
    #[error("Smith normal form needs an integer-tagged matrix")]
    NotInteger,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("{0} is not a supported prime (need a prime below 2^32)")]
    BadPrime(u64),
    #[error("entry {0} is not defined in the target field")]
    Undefined(String),
    #[error("vector {0} is not a cycle")]
    NotACycle(usize),
    #[error("triplet format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Coefficient ring of a matrix or chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldTag {
    Rationals,
    Prime(u64),
    Integers,
}

impl FieldTag {
    /// Validates a prime field tag.
    pub fn prime(p: u64) -> Result<FieldTag> {
        if (2..(1 << 32)).contains(&p) && is_prime(p) {
            Ok(FieldTag::Prime(p))
        } else {
            Err(LinalgError::BadPrime(p))
        }
    }

    pub fn is_field(self) -> bool {
        !matches!(self, FieldTag::Integers)
    }

    /// Reduces an exact rational into this ring's canonical representative.
    pub fn reduce(self, x: &BigRational) -> Result<BigRational> {
        match self {
            FieldTag::Rationals => Ok(x.clone()),
            FieldTag::Integers if x.is_integer() => Ok(x.clone()),
            FieldTag::Integers => Err(LinalgError::Undefined(x.to_string())),
            FieldTag::Prime(p) => {
                let f = PrimeField::new(p)?;
                let r = f.lift_big(x)?;
                Ok(BigRational::from_integer(BigInt::from(r)))
            }
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Rationals => write!(f, "q"),
            FieldTag::Prime(p) => write!(f, "fp:{p}"),
            FieldTag::Integers => write!(f, "z"),
        }
    }
}

impl FromStr for FieldTag {
    type Err = LinalgError;

    /// Accepts `q`, `z`, and `fp:P`.
    fn from_str(s: &str) -> Result<FieldTag> {
        match s {
            "q" | "Q" => Ok(FieldTag::Rationals),
            "z" | "Z" => Ok(FieldTag::Integers),
            _ => {
                let p = s
                    .strip_prefix("fp:")
                    .and_then(|p| p.parse::<u64>().ok())
                    .ok_or_else(|| LinalgError::Format(format!("unknown field `{s}` (expected q, z, or fp:P)")))?;
                FieldTag::prime(p)
            }
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Arithmetic used by the elimination routines.
pub trait Field: Sync {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse of a nonzero element.
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn lift_entry(&self, a: &Entry) -> Result<Self::Elem>;
    fn lift_big(&self, a: &BigRational) -> Result<Self::Elem>;
    fn to_big(&self, a: &Self::Elem) -> BigRational;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
    fn lift_entry(&self, a: &Entry) -> Result<BigRational> {
        Ok(BigRational::new(BigInt::from(*a.numer()), BigInt::from(*a.denom())))
    }
    fn lift_big(&self, a: &BigRational) -> Result<BigRational> {
        Ok(a.clone())
    }
    fn to_big(&self, a: &BigRational) -> BigRational {
        a.clone()
    }
}

/// `𝔽_p` for a prime `p < 2^32`, so products fit in a `u64`.
#[derive(Clone, Copy, Debug)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        FieldTag::prime(p)?;
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % self.p;
            }
            b = b * b % self.p;
            e >>= 1;
        }
        acc
    }

    fn lift_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    fn lift_bigint(&self, a: &BigInt) -> u64 {
        a.mod_floor(&BigInt::from(self.p)).to_u64().expect("residue fits")
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a) % self.p
    }
    fn inv(&self, a: &u64) -> u64 {
        debug_assert!(*a != 0);
        self.pow(*a, self.p - 2)
    }
    fn lift_entry(&self, a: &Entry) -> Result<u64> {
        let d = self.lift_i64(*a.denom());
        if d == 0 {
            return Err(LinalgError::Undefined(a.to_string()));
        }
        Ok(self.mul(&self.lift_i64(*a.numer()), &self.inv(&d)))
    }
    fn lift_big(&self, a: &BigRational) -> Result<u64> {
        let d = self.lift_bigint(a.denom());
        if d == 0 {
            return Err(LinalgError::Undefined(a.to_string()));
        }
        Ok(self.mul(&self.lift_bigint(a.numer()), &self.inv(&d)))
    }
    fn to_big(&self, a: &u64) -> BigRational {
        BigRational::from_integer(BigInt::from(*a))
    }
}

/// Exact sparse matrix, column-major, with no stored zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    field: FieldTag,
    columns: Vec<Vec<(usize, Entry)>>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize, field: FieldTag) -> Self {
        SparseMatrix { rows, cols, field, columns: vec![Vec::new(); cols] }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and values are reduced into the field.
    pub fn from_triplets<I>(rows: usize, cols: usize, field: FieldTag, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Entry)>,
    {
        let mut acc: Vec<BTreeMap<usize, Entry>> = vec![BTreeMap::new(); cols];
        for (r, c, v) in triplets {
            if r >= rows {
                return Err(LinalgError::Dimension { expected: rows, found: r + 1 });
            }
            if c >= cols {
                return Err(LinalgError::Dimension { expected: cols, found: c + 1 });
            }
            *acc[c].entry(r).or_insert_with(Entry::zero) += v;
        }
        let mut m = SparseMatrix::zeros(rows, cols, field);
        for (c, col) in acc.into_iter().enumerate() {
            for (r, v) in col {
                let v = reduce_entry(field, v)?;
                if !v.is_zero() {
                    m.columns[c].push((r, v));
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from dense rows, for tests and small examples.
    pub fn from_rows(rows: &[Vec<i64>], field: FieldTag) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let trips = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, &v)| (r, c, Entry::from_integer(v))));
        Self::from_triplets(rows.len(), cols, field, trips)
    }

    pub fn identity(n: usize, field: FieldTag) -> Self {
        Self::from_triplets(n, n, field, (0..n).map(|i| (i, i, Entry::one()))).unwrap()
    }

    /// Builds a matrix from already-sorted, zero-free columns.
    pub(crate) fn from_columns(rows: usize, field: FieldTag, columns: Vec<Vec<(usize, Entry)>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.windows(2).all(|w| w[0].0 < w[1].0)));
        SparseMatrix { rows, cols: columns.len(), field, columns }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn column(&self, c: usize) -> &[(usize, Entry)] {
        &self.columns[c]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(Vec::is_empty)
    }

    pub fn get(&self, r: usize, c: usize) -> Entry {
        self.columns[c].iter().find(|(rr, _)| *rr == r).map_or(Entry::zero(), |(_, v)| *v)
    }

    /// All entries as `(row, col, value)`, column-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Entry)> + '_ {
        self.columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    /// Same entries, reinterpreted over another coefficient ring.
    pub fn with_field(&self, field: FieldTag) -> Result<Self> {
        Self::from_triplets(self.rows, self.cols, field, self.triplets())
    }

    pub fn transpose(&self) -> Self {
        let trips = self.triplets().map(|(r, c, v)| (c, r, v));
        Self::from_triplets(self.cols, self.rows, self.field, trips).unwrap()
    }

    /// Exact product `self · other`.
    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension { expected: self.cols, found: other.rows });
        }
        let mut trips = Vec::new();
        for (c, col) in other.columns.iter().enumerate() {
            let mut acc: BTreeMap<usize, Entry> = BTreeMap::new();
            for &(k, b) in col {
                for &(r, a) in &self.columns[k] {
                    *acc.entry(r).or_insert_with(Entry::zero) += a * b;
                }
            }
            trips.extend(acc.into_iter().map(|(r, v)| (r, c, v)));
        }
        Self::from_triplets(self.rows, other.cols, self.field, trips)
    }

    /// Exact matrix-vector product, reduced into the matrix's field.
    pub fn mul_vec(&self, x: &[BigRational]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension { expected: self.cols, found: x.len() });
        }
        let mut out = vec![BigRational::zero(); self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            if x[c].is_zero() {
                continue;
            }
            for &(r, v) in col {
                out[r] += entry_to_big(v) * &x[c];
            }
        }
        out.iter().map(|v| self.field.reduce(v)).collect()
    }

    /// Appends dense vectors as extra columns on the left.
    pub fn prepend_columns(&self, vectors: &[Vector]) -> Result<Vec<Vec<(usize, BigRational)>>> {
        let mut cols = Vec::with_capacity(vectors.len() + self.cols);
        for v in vectors {
            if v.len() != self.rows {
                return Err(LinalgError::Dimension { expected: self.rows, found: v.len() });
            }
            cols.push(v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(r, x)| (r, x.clone())).collect());
        }
        for col in &self.columns {
            cols.push(col.iter().map(|&(r, v)| (r, entry_to_big(v))).collect());
        }
        Ok(cols)
    }

    /// Coordinate triplet text: a `#` header of `key=value` pairs followed by
    /// one `row col value` line per entry, values as `n` or `n/d`.
    pub fn to_triplet_text(&self, header: &[(&str, String)]) -> String {
        let mut out = String::from("#");
        for (k, v) in header {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push_str(&format!(" field={} rows={} cols={}\n", self.field, self.rows, self.cols));
        for (r, c, v) in self.triplets() {
            out.push_str(&format!("{r} {c} {v}\n"));
        }
        out
    }

    /// Parses [`SparseMatrix::to_triplet_text`] output, returning the header.
    pub fn parse_triplet_text(text: &str) -> Result<(SparseMatrix, BTreeMap<String, String>)> {
        let mut lines = text.lines();
        let head = lines.next().and_then(|l| l.strip_prefix('#')).ok_or_else(|| LinalgError::Format("missing header".into()))?;
        let mut header = BTreeMap::new();
        for kv in head.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| LinalgError::Format(format!("bad header token `{kv}`")))?;
            header.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| header.get(k).cloned().ok_or_else(|| LinalgError::Format(format!("header lacks `{k}`")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| LinalgError::Format(format!("bad `{k}`"))) };
        let (rows, cols) = (num("rows")?, num("cols")?);
        let field: FieldTag = get("field")?.parse()?;
        let mut trips = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || LinalgError::Format(format!("bad entry line `{line}`"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let r = parts[0].parse().map_err(|_| bad())?;
            let c = parts[1].parse().map_err(|_| bad())?;
            let v: Entry = parts[2].parse().map_err(|_| bad())?;
            trips.push((r, c, v));
        }
        Ok((SparseMatrix::from_triplets(rows, cols, field, trips)?, header))
    }
}

fn reduce_entry(field: FieldTag, v: Entry) -> Result<Entry> {
    match field {
        FieldTag::Rationals => Ok(v),
        FieldTag::Integers if v.is_integer() => Ok(v),
        FieldTag::Integers => Err(LinalgError::Undefined(v.to_string())),
        FieldTag::Prime(p) => Ok(Entry::from_integer(PrimeField::new(p)?.lift_entry(&v)? as i64)),
    }
}

pub(crate) fn entry_to_big(v: Entry) -> BigRational {
    BigRational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
}

type SparseVec<E> = Vec<(usize, E)>;

/// `target - factor * pivot` on sorted sparse vectors.
fn axpy<F: Field>(f: &F, target: &SparseVec<F::Elem>, factor: &F::Elem, pivot: &SparseVec<F::Elem>) -> SparseVec<F::Elem> {
    let mut out = Vec::with_capacity(target.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < pivot.len() {
        let take_target = j == pivot.len() || (i < target.len() && target[i].0 < pivot[j].0);
        let take_pivot = i == target.len() || (j < pivot.len() && pivot[j].0 < target[i].0);
        if take_target {
            out.push(target[i].clone());
            i += 1;
        } else if take_pivot {
            out.push((pivot[j].0, f.neg(&f.mul(factor, &pivot[j].1))));
            j += 1;
        } else {
            let v = f.sub(&target[i].1, &f.mul(factor, &pivot[j].1));
            if !f.is_zero(&v) {
                out.push((target[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn convert_columns<F: Field>(f: &F, m: &SparseMatrix) -> Result<Vec<SparseVec<F::Elem>>> {
    m.columns
        .iter()
        .map(|col| {
            let mut out = Vec::with_capacity(col.len());
            for &(r, v) in col {
                let x = f.lift_entry(&v)?;
                if !f.is_zero(&x) {
                    out.push((r, x));
                }
            }
            Ok(out)
        })
        .collect()
}

/// Removes singleton rows and columns, each of which contributes one pivot
/// without touching the rest of the matrix. Returns the rank found and the
/// surviving columns restricted to surviving rows.
fn prune_singletons<E: Clone>(rows: usize, columns: Vec<SparseVec<E>>) -> (usize, Vec<SparseVec<E>>) {
    let cols = columns.len();
    let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); rows];
    for (c, col) in columns.iter().enumerate() {
        for &(r, _) in col {
            row_cols[r].push(c);
        }
    }
    let mut row_alive = vec![true; rows];
    let mut col_alive = vec![true; cols];
    let mut row_count: Vec<usize> = row_cols.iter().map(Vec::len).collect();
    let mut col_count: Vec<usize> = columns.iter().map(Vec::len).collect();
    let mut col_queue: Vec<usize> = (0..cols).filter(|&c| col_count[c] <= 1).collect();
    let mut row_queue: Vec<usize> = (0..rows).filter(|&r| row_count[r] == 1).collect();
    let mut rank = 0;

    loop {
        if let Some(c) = col_queue.pop() {
            if !col_alive[c] || col_count[c] > 1 {
                continue;
            }
            col_alive[c] = false;
            let Some(&(r, _)) = columns[c].iter().find(|(r, _)| row_alive[*r]) else { continue };
            rank += 1;
            row_alive[r] = false;
            for &c2 in &row_cols[r] {
                if col_alive[c2] {
                    col_count[c2] -= 1;
                    if col_count[c2] <= 1 {
                        col_queue.push(c2);
                    }
                }
            }
            continue;
        }
        if let Some(r) = row_queue.pop() {
            if !row_alive[r] || row_count[r] != 1 {
                continue;
            }
            let Some(&c) = row_cols[r].iter().find(|&&c| col_alive[c]) else { continue };
            rank += 1;
            row_alive[r] = false;
            col_alive[c] = false;
            for &(r2, _) in &columns[c] {
                if row_alive[r2] {
                    row_count[r2] -= 1;
                    if row_count[r2] == 1 {
                        row_queue.push(r2);
                    }
                }
            }
            continue;
        }
        break;
    }
    let survivors = columns
        .into_iter()
        .enumerate()
        .filter(|(c, _)| col_alive[*c])
        .map(|(_, col)| col.into_iter().filter(|(r, _)| row_alive[*r]).collect::<Vec<_>>())
        .filter(|col| !col.is_empty())
        .collect();
    (rank, survivors)
}

/// Column reduction keyed on the largest row index of each column.
fn reduce_rank<F: Field>(f: &F, rows: usize, mut columns: Vec<SparseVec<F::Elem>>) -> usize {
    columns.sort_by_key(Vec::len);
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; rows];
    let mut pivots: Vec<SparseVec<F::Elem>> = Vec::new();
    for mut col in columns {
        while let Some((low, val)) = col.last().cloned() {
            match pivot_of_row[low] {
                Some(p) => {
                    let piv = &pivots[p];
                    let factor = f.mul(&val, &f.inv(&piv.last().unwrap().1));
                    col = axpy(f, &col, &factor, piv);
                }
                None => {
                    pivot_of_row[low] = Some(pivots.len());
                    pivots.push(col);
                    break;
                }
            }
        }
    }
    pivots.len()
}

fn rank_in<F: Field>(f: &F, m: &SparseMatrix) -> Result<usize> {
    let cols = convert_columns(f, m)?;
    let (pruned, rest) = prune_singletons(m.rows, cols);
    Ok(pruned + reduce_rank(f, m.rows, rest))
}

/// Exact rank over the matrix's field.
pub fn rank(m: &SparseMatrix) -> Result<usize> {
    match m.field {
        FieldTag::Rationals => rank_in(&Rationals, m),
        FieldTag::Prime(p) => rank_in(&PrimeField::new(p)?, m),
        FieldTag::Integers => Err(LinalgError::IntegerMatrix),
    }
}

/// Column reduction that remembers, for every reduced column, which
/// combination of input columns produced it.
struct TrackedReduction<E> {
    pivot_of_row: Vec<Option<usize>>,
    /// (reduced column, combination of inputs)
    pivots: Vec<(SparseVec<E>, SparseVec<E>)>,
    kernel: Vec<SparseVec<E>>,
}

impl<E: Clone> TrackedReduction<E> {
    fn run<F: Field<Elem = E>>(f: &F, rows: usize, columns: Vec<SparseVec<E>>) -> Self {
        let mut red = TrackedReduction { pivot_of_row: vec![None; rows], pivots: Vec::new(), kernel: Vec::new() };
        for (c, col) in columns.into_iter().enumerate() {
            let (rest, combo) = red.reduce(f, col, vec![(c, f.one())]);
            match rest.last() {
                Some(&(low, _)) => {
                    red.pivot_of_row[low] = Some(red.pivots.len());
                    red.pivots.push((rest, combo));
                }
                None => red.kernel.push(combo),
            }
        }
        red
    }

    fn reduce<F: Field<Elem = E>>(&self, f: &F, mut col: SparseVec<E>, mut combo: SparseVec<E>) -> (SparseVec<E>, SparseVec<E>) {
        while let Some((low, val)) = col.last().cloned() {
            let Some(p) = self.pivot_of_row[low] else { break };
            let (piv, piv_combo) = &self.pivots[p];
            let factor = f.mul(&val, &f.inv(&piv.last().unwrap().1));
            col = axpy(f, &col, &factor, piv);
            combo = axpy(f, &combo, &factor, piv_combo);
        }
        (col, combo)
    }
}

fn densify<F: Field>(f: &F, len: usize, v: &SparseVec<F::Elem>) -> Vector {
    let mut out = vec![BigRational::zero(); len];
    for (i, x) in v {
        out[*i] = f.to_big(x);
    }
    out
}

fn kernel_in<F: Field>(f: &F, m: &SparseMatrix) -> Result<Vec<Vector>> {
    let red = TrackedReduction::run(f, m.rows, convert_columns(f, m)?);
    Ok(red.kernel.iter().map(|v| densify(f, m.cols, v)).collect())
}

/// Basis of the right kernel; its length is `cols - rank`.
pub fn kernel_basis(m: &SparseMatrix) -> Result<Vec<Vector>> {
    match m.field {
        FieldTag::Rationals => kernel_in(&Rationals, m),
        FieldTag::Prime(p) => kernel_in(&PrimeField::new(p)?, m),
        FieldTag::Integers => Err(LinalgError::IntegerMatrix),
    }
}

fn solve_in<F: Field>(f: &F, m: &SparseMatrix, v: &[BigRational]) -> Result<Option<Vector>> {
    let red = TrackedReduction::run(f, m.rows, convert_columns(f, m)?);
    let mut target = Vec::new();
    for (r, x) in v.iter().enumerate() {
        let y = f.lift_big(x)?;
        if !f.is_zero(&y) {
            target.push((r, y));
        }
    }
    let (rest, combo) = red.reduce(f, target, Vec::new());
    if !rest.is_empty() {
        return Ok(None);
    }
    // v - Σ combo_j m_j = 0
    let x = densify(f, m.cols, &combo.iter().map(|(i, c)| (*i, f.neg(c))).collect());
    let check = m.mul_vec(&x)?;
    let want: Vector = v.iter().map(|y| m.field.reduce(y)).collect::<Result<_>>()?;
    assert_eq!(check, want, "solve_in_image produced a wrong witness");
    Ok(Some(x))
}

/// Some `x` with `m·x = v`, or `None` when `v` is not in the column span.
/// The witness is re-multiplied and checked before it is returned.
pub fn solve_in_image(m: &SparseMatrix, v: &[BigRational]) -> Result<Option<Vector>> {
    if v.len() != m.rows {
        return Err(LinalgError::Dimension { expected: m.rows, found: v.len() });
    }
    match m.field {
        FieldTag::Rationals => solve_in(&Rationals, m, v),
        FieldTag::Prime(p) => solve_in(&PrimeField::new(p)?, m, v),
        FieldTag::Integers => Err(LinalgError::IntegerMatrix),
    }
}

fn columns_rank<F: Field>(f: &F, rows: usize, cols: &[Vec<(usize, BigRational)>]) -> Result<usize> {
    let mut conv = Vec::with_capacity(cols.len());
    for col in cols {
        let mut out = Vec::new();
        for (r, x) in col {
            let y = f.lift_big(x)?;
            if !f.is_zero(&y) {
                out.push((*r, y));
            }
        }
        conv.push(out);
    }
    let (pruned, rest) = prune_singletons(rows, conv);
    Ok(pruned + reduce_rank(f, rows, rest))
}

/// Dimension of the span of the classes of `cycles` modulo the column span
/// of `boundary`. Each cycle is first checked against `outgoing` (the
/// differential leaving the cycles' degree).
pub fn quotient_rank(cycles: &[Vector], boundary: &SparseMatrix, outgoing: &SparseMatrix) -> Result<usize> {
    if !boundary.field.is_field() {
        return Err(LinalgError::IntegerMatrix);
    }
    for (j, z) in cycles.iter().enumerate() {
        if outgoing.mul_vec(z)?.iter().any(|x| !x.is_zero()) {
            return Err(LinalgError::NotACycle(j));
        }
    }
    let all = boundary.prepend_columns(cycles)?;
    let with = match boundary.field {
        FieldTag::Rationals => columns_rank(&Rationals, boundary.rows, &all)?,
        FieldTag::Prime(p) => columns_rank(&PrimeField::new(p)?, boundary.rows, &all)?,
        FieldTag::Integers => unreachable!(),
    };
    Ok(with - rank(boundary)?)
}

/// Rank of a list of dense vectors over a field.
pub fn span_rank(vectors: &[Vector], dim: usize, field: FieldTag) -> Result<usize> {
    quotient_rank(vectors, &SparseMatrix::zeros(dim, 0, field), &SparseMatrix::zeros(0, dim, field))
}

/// Invariant factors `d₁ | d₂ | …` of an integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnfResult {
    pub invariant_factors: Vec<BigInt>,
    pub rank: usize,
}

impl SnfResult {
    /// Factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.invariant_factors.iter().filter(|d| !d.is_one()).cloned().collect()
    }
}

/// Smith normal form by sparse unit-pivot elimination followed by dense
/// elimination on the remainder with smallest-magnitude pivots.
pub fn smith_normal_form(m: &SparseMatrix) -> Result<SnfResult> {
    if m.field != FieldTag::Integers {
        return Err(LinalgError::NotInteger);
    }
    let mut work = IntSparse::new(m);
    let ones = work.eliminate_units();
    let dense = work.into_dense();
    let mut diag = dense_diagonalize(dense);
    normalize_chain(&mut diag);
    let mut invariant_factors = vec![BigInt::one(); ones];
    invariant_factors.extend(diag);
    let rank = invariant_factors.len();
    Ok(SnfResult { invariant_factors, rank })
}

/// Integer matrix under unimodular elimination on ±1 pivots.
struct IntSparse {
    cols: Vec<HashMap<usize, i64>>,
    rows: Vec<HashMap<usize, ()>>,
    col_alive: Vec<bool>,
    row_alive: Vec<bool>,
    overflowed: bool,
}

impl IntSparse {
    fn new(m: &SparseMatrix) -> Self {
        let mut cols = vec![HashMap::new(); m.cols];
        let mut rows = vec![HashMap::new(); m.rows];
        for (r, c, v) in m.triplets() {
            cols[c].insert(r, *v.numer());
            rows[r].insert(c, ());
        }
        IntSparse { cols, col_alive: vec![true; m.cols], row_alive: vec![true; m.rows], rows, overflowed: false }
    }

    /// Best unit pivot by Markowitz cost.
    fn pick_unit(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for (c, col) in self.cols.iter().enumerate() {
            if !self.col_alive[c] {
                continue;
            }
            for (&r, &v) in col {
                if v.abs() != 1 {
                    continue;
                }
                let cost = (col.len() - 1) * (self.rows[r].len() - 1);
                if best.is_none_or(|b| cost < b.0 || (cost == b.0 && (c, r) < (b.1, b.2))) {
                    best = Some((cost, c, r));
                    if cost == 0 {
                        return Some((c, r));
                    }
                }
            }
        }
        best.map(|(_, c, r)| (c, r))
    }

    fn eliminate_units(&mut self) -> usize {
        let mut count = 0;
        while !self.overflowed {
            let Some((c, r)) = self.pick_unit() else { break };
            let u = self.cols[c][&r];
            let pivot_col: Vec<(usize, i64)> = self.cols[c].iter().filter(|(rr, _)| **rr != r).map(|(a, b)| (*a, *b)).collect();
            let others: Vec<usize> = self.rows[r].keys().copied().filter(|&j| j != c).collect();
            for j in others {
                let a = self.cols[j][&r];
                // col_j -= a*u * col_c; row r of col_j vanishes
                let Some(factor) = a.checked_mul(u) else {
                    self.overflowed = true;
                    return count;
                };
                self.cols[j].remove(&r);
                for &(s, v) in &pivot_col {
                    let cur = self.cols[j].get(&s).copied().unwrap_or(0);
                    let Some(new) = factor.checked_mul(v).and_then(|fv| cur.checked_sub(fv)) else {
                        self.overflowed = true;
                        return count;
                    };
                    if new == 0 {
                        self.cols[j].remove(&s);
                        self.rows[s].remove(&j);
                    } else {
                        self.cols[j].insert(s, new);
                        self.rows[s].insert(j, ());
                    }
                }
            }
            for (s, _) in self.cols[c].drain() {
                self.rows[s].remove(&c);
            }
            self.rows[r].clear();
            self.col_alive[c] = false;
            self.row_alive[r] = false;
            count += 1;
        }
        count
    }

    fn into_dense(self) -> Vec<Vec<BigInt>> {
        let live_rows: Vec<usize> = (0..self.rows.len()).filter(|&r| self.row_alive[r] && !self.rows[r].is_empty()).collect();
        let live_cols: Vec<usize> = (0..self.cols.len()).filter(|&c| self.col_alive[c] && !self.cols[c].is_empty()).collect();
        let pos: HashMap<usize, usize> = live_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut dense = vec![vec![BigInt::zero(); live_cols.len()]; live_rows.len()];
        for (j, &c) in live_cols.iter().enumerate() {
            for (r, v) in &self.cols[c] {
                dense[pos[r]][j] = BigInt::from(*v);
            }
        }
        dense
    }
}

/// Reduces a dense integer matrix to a diagonal; returns the absolute values
/// of the nonzero diagonal entries.
fn dense_diagonalize(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry of the trailing block
        let mut best: Option<(usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(t) {
            for (j, x) in row.iter().enumerate().skip(t) {
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..cols {
                    let d = &q * &a[t][j];
                    a[i][j] -= d;
                }
                dirty |= !a[i][t].is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let d = &q * &row[t];
                    row[j] -= d;
                }
                dirty |= !a[t][j].is_zero();
            }
            if !dirty {
                break;
            }
            // a remainder survived: move the smallest entry of row/column t to the pivot
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

/// Turns any diagonal into the divisibility chain with the same cokernel.
fn normalize_chain(diag: &mut [BigInt]) {
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            let g = diag[i].gcd(&diag[j]);
            let l = diag[i].lcm(&diag[j]);
            diag[i] = g;
            diag[j] = l;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn rank_examples() {
        let z = SparseMatrix::zeros(3, 5, FieldTag::Rationals);
        assert_eq!(rank(&z).unwrap(), 0);
        assert_eq!(rank(&SparseMatrix::identity(6, FieldTag::Rationals)).unwrap(), 6);
        let m = SparseMatrix::from_rows(&[vec![1, 2], vec![2, 4]], FieldTag::Rationals).unwrap();
        assert_eq!(rank(&m).unwrap(), 1);
        let int = SparseMatrix::identity(2, FieldTag::Integers);
        assert_eq!(rank(&int), Err(LinalgError::IntegerMatrix));
    }

    #[test]
    fn rank_depends_on_characteristic() {
        let rows = [vec![2, 0], vec![0, 3]];
        let over = |f| rank(&SparseMatrix::from_rows(&rows, f).unwrap()).unwrap();
        assert_eq!(over(FieldTag::Rationals), 2);
        assert_eq!(over(FieldTag::Prime(2)), 1);
        assert_eq!(over(FieldTag::Prime(3)), 1);
        assert_eq!(over(FieldTag::Prime(5)), 2);
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&SparseMatrix::identity(4, FieldTag::Rationals)).unwrap().is_empty());
        assert_eq!(kernel_basis(&SparseMatrix::zeros(2, 3, FieldTag::Rationals)).unwrap().len(), 3);
        let m = SparseMatrix::from_rows(&[vec![1, 1]], FieldTag::Rationals).unwrap();
        let k = kernel_basis(&m).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][0], -k[0][1].clone());
        assert!(!k[0][0].is_zero());
    }

    #[test]
    fn solve_examples() {
        let m = SparseMatrix::from_rows(&[vec![1, 1], vec![0, 1]], FieldTag::Rationals).unwrap();
        assert_eq!(solve_in_image(&m, &[q(0), q(0)]).unwrap(), Some(vec![q(0), q(0)]));
        let id = SparseMatrix::identity(3, FieldTag::Rationals);
        let v = vec![q(4), q(-1), BigRational::new(2.into(), 7.into())];
        assert_eq!(solve_in_image(&id, &v).unwrap(), Some(v.clone()));
        let two = SparseMatrix::from_rows(&[vec![2]], FieldTag::Rationals).unwrap();
        assert_eq!(solve_in_image(&two, &[q(1)]).unwrap(), Some(vec![BigRational::new(1.into(), 2.into())]));
        let line = SparseMatrix::from_rows(&[vec![1], vec![1]], FieldTag::Rationals).unwrap();
        assert_eq!(solve_in_image(&line, &[q(1), q(0)]).unwrap(), None);
        assert!(matches!(solve_in_image(&line, &[q(1)]), Err(LinalgError::Dimension { .. })));
    }

    #[test]
    fn snf_examples() {
        let snf = |rows: &[Vec<i64>]| smith_normal_form(&SparseMatrix::from_rows(rows, FieldTag::Integers).unwrap()).unwrap();
        assert_eq!(snf(&[vec![1, 0], vec![0, 1]]).invariant_factors, ints(&[1, 1]));
        assert_eq!(snf(&[vec![2, 4], vec![6, 8]]).invariant_factors, ints(&[2, 4]));
        assert_eq!(snf(&[vec![0, 0], vec![0, 0]]).invariant_factors, ints(&[]));
        assert_eq!(snf(&[vec![2, 0], vec![0, 3]]).invariant_factors, ints(&[1, 6]));
        assert_eq!(snf(&[vec![1, 1], vec![1, -1]]).torsion(), ints(&[2]));
        let rat = SparseMatrix::identity(2, FieldTag::Rationals);
        assert_eq!(smith_normal_form(&rat), Err(LinalgError::NotInteger));
    }

    #[test]
    fn quotient_rank_examples() {
        // boundary spans e0; cycles live in the kernel of a zero map
        let boundary = SparseMatrix::from_rows(&[vec![1], vec![0]], FieldTag::Rationals).unwrap();
        let out = SparseMatrix::zeros(0, 2, FieldTag::Rationals);
        assert_eq!(quotient_rank(&[], &boundary, &out).unwrap(), 0);
        assert_eq!(quotient_rank(&[vec![q(3), q(0)]], &boundary, &out).unwrap(), 0);
        assert_eq!(quotient_rank(&[vec![q(1), q(1)]], &boundary, &out).unwrap(), 1);
        let out = SparseMatrix::from_rows(&[vec![0, 1]], FieldTag::Rationals).unwrap();
        assert_eq!(quotient_rank(&[vec![q(1), q(1)]], &boundary, &out), Err(LinalgError::NotACycle(0)));
    }

    #[test]
    fn triplet_text_round_trip() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            FieldTag::Rationals,
            [(0, 0, Entry::new(1, 2)), (1, 2, Entry::from_integer(-3))],
        )
        .unwrap();
        let text = m.to_triplet_text(&[("graph", "abc".into())]);
        assert_eq!(text, "# graph=abc field=q rows=2 cols=3\n0 0 1/2\n1 2 -3\n");
        let (back, header) = SparseMatrix::parse_triplet_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(header["graph"], "abc");
    }

    #[test]
    fn field_tags() {
        assert_eq!("fp:7".parse::<FieldTag>().unwrap(), FieldTag::Prime(7));
        assert!("fp:8".parse::<FieldTag>().is_err());
        assert!("fp:4294967311".parse::<FieldTag>().is_err());
        assert_eq!("q".parse::<FieldTag>().unwrap().to_string(), "q");
        assert_eq!(FieldTag::Prime(3).reduce(&q(-1)).unwrap(), q(2));
    }

    fn dense_rank_oracle(rows: &[Vec<i64>]) -> usize {
        // plain fraction Gaussian elimination, row by row, first nonzero pivot
        let mut a: Vec<Vec<BigRational>> = rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        let cols = a.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else { continue };
            a.swap(rank, p);
            for r in 0..a.len() {
                if r != rank && !a[r][c].is_zero() {
                    let f = &a[r][c] / &a[rank][c];
                    for j in 0..cols {
                        let d = &f * &a[rank][j];
                        a[r][j] -= d;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..7, 1usize..7).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-3i64..4, c), r))
    }

    proptest! {
        #[test]
        fn rank_agrees_with_dense_oracle(rows in small_matrix()) {
            let m = SparseMatrix::from_rows(&rows, FieldTag::Rationals).unwrap();
            prop_assert_eq!(rank(&m).unwrap(), dense_rank_oracle(&rows));
            prop_assert_eq!(rank(&m.transpose()).unwrap(), dense_rank_oracle(&rows));
        }

        #[test]
        fn snf_rank_matches_field_ranks(rows in small_matrix()) {
            let z = SparseMatrix::from_rows(&rows, FieldTag::Integers).unwrap();
            let snf = smith_normal_form(&z).unwrap();
            for w in snf.invariant_factors.windows(2) {
                prop_assert!((&w[1] % &w[0]).is_zero());
            }
            prop_assert_eq!(snf.rank, rank(&z.with_field(FieldTag::Rationals).unwrap()).unwrap());
            for p in [2u64, 3, 5] {
                let rp = rank(&z.with_field(FieldTag::Prime(p)).unwrap()).unwrap();
                let divisible = snf.invariant_factors.iter().filter(|d| (*d % BigInt::from(p)).is_zero()).count();
                prop_assert_eq!(rp, snf.rank - divisible);
            }
        }

        #[test]
        fn kernel_and_solve_are_exact(rows in small_matrix(), seed in prop::collection::vec(-3i64..4, 7)) {
            let m = SparseMatrix::from_rows(&rows, FieldTag::Rationals).unwrap();
            let k = kernel_basis(&m).unwrap();
            prop_assert_eq!(k.len(), m.cols() - rank(&m).unwrap());
            for v in &k {
                prop_assert!(m.mul_vec(v).unwrap().iter().all(|x| x.is_zero()));
            }
            let x: Vector = seed.iter().take(m.cols()).map(|&s| q(s)).collect();
            let b = m.mul_vec(&x).unwrap();
            let sol = solve_in_image(&m, &b).unwrap().expect("image vector must be solvable");
            prop_assert_eq!(m.mul_vec(&sol).unwrap(), b);
        }
    }
}
