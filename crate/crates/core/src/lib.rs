//! Ranked enumeration of full conjunctive queries and their unions.
//!
//! The pipeline is: load a [`Database`], parse a [`UnionQuery`], pick a
//! [`TreeDecomposition`] per disjunct, then [`engine::prepare`] each disjunct
//! and pull results through a [`RankedCursor`] (or a [`UnionCursor`] for
//! several disjuncts). Results come out in nondecreasing score order, ties
//! broken by the output tuple in head-variable order.

pub mod analysis;
pub mod decomp;
pub mod engine;
pub mod error;
pub mod heap;
pub mod job;
pub mod oracle;
pub mod query;
pub mod ranking;
pub mod relation;
pub mod union;

pub use decomp::{DecompNode, TreeDecomposition};
pub use engine::{OutputTuple, PreparedQuery, PullStats, RankedCursor};
pub use error::Error;
pub use query::{Atom, ConjunctiveQuery, QueryHypergraph, UnionQuery, VarId};
pub use ranking::{MonoidOp, RankingFunction, Score, ScoreValue};
pub use relation::{ConstantId, Database, DatabaseBuilder, Dictionary, RawValue, Relation, Tuple};
pub use union::UnionCursor;
