// `!(x > 0.0)` is how bounds checks here reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod dgp;
pub mod encoders;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod matrix;
pub mod numstats;
pub mod oracles;
pub mod probes;
pub mod properties;
pub mod rng;
