//! Exact arithmetic substrate: finite fields, truncated Laurent series and
//! 2x2 matrices over them.

pub mod field;
pub mod matrix;
pub mod series;

pub use field::{fq_arith, fq_frobenius, FieldCtx, FieldElem, FieldSpec, FqOp};
pub use matrix::Mat2;
pub use series::{ser_arith, ser_frobsub, ser_valuation, SerOp, Series, SeriesRecord, Valuation};
