//! Parsing and evaluation of UCCA graphs with implicit arguments.

pub mod cli;
pub mod codec;
pub mod graph;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod transitions;
