//! Experiment orchestration for the `sparselab` command-line tool: the
//! error-rate study over growing (n, p) and the sup-norm-vs-Dantzig objective
//! comparison on a spiky-residual family.

pub mod experiments;
