//! Exact homology of unordered configuration spaces of graphs, computed from
//! the Świątkowski chain complex and its reduced form.

pub mod asymptotics;
pub mod classes;
pub mod complex;
pub mod graph;
pub mod homology;
pub mod linalg;

pub use complex::{Basis, BasisElement, ChainVector, Complex, ComplexVariant, VertexState};
pub use graph::{parse_graph, Graph, GraphError, VertexSet};
pub use homology::{BettiTable, TableOptions};
pub use linalg::{FieldTag, SparseMatrix};
