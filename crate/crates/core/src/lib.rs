#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod cayley;
pub mod error;
pub mod gff;
pub mod group;
pub mod isoperimetry;
pub mod kernel;
pub mod linalg;
pub mod perco;
pub mod rng;
