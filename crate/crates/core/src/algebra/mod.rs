//! Cayley-table ingestion, tuple and permutation arithmetic, structural
//! probes, isotopies, and the table catalog.

pub mod catalog;
mod probe;
mod table;
mod tuple;

pub use probe::{apply_isotopy, structure_probe, Isotopy, StructureProbe};
pub use table::{parse_cayley, CayleyTable, TableSummary};
pub use tuple::{
    all_permutations, coordinate_action, encode_digits, eval_iterated, multiply_tuples, pi_product,
    symbol_action, Permutation, TupleCode,
};
