//! Merge operators: temporal (per-position adjacent-frame fusion) and
//! spatial (static-prioritized bipartite soft matching).

pub mod spatial;
pub mod temporal;
