//! Sample programs, all first-order functions between positive types.

use crate::ops::OpRegistry;
use crate::surface::{parse, ParseError, SourceFile};

/// `(file name, source)` for every corpus file.
pub const FILES: &[(&str, &str)] = &[
    ("arith.dfpc", include_str!("../corpus/arith.dfpc")),
    ("lists.dfpc", include_str!("../corpus/lists.dfpc")),
    ("loops.dfpc", include_str!("../corpus/loops.dfpc")),
    ("relu.dfpc", include_str!("../corpus/relu.dfpc")),
    ("sums.dfpc", include_str!("../corpus/sums.dfpc")),
    ("taylor.dfpc", include_str!("../corpus/taylor.dfpc")),
];

pub fn source(file: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == file).map(|(_, s)| *s)
}

/// Parses every corpus file.
pub fn load(ops: &OpRegistry) -> Result<Vec<(&'static str, SourceFile)>, (&'static str, ParseError)> {
    FILES
        .iter()
        .map(|(n, s)| parse(s, ops).map(|f| (*n, f)).map_err(|e| (*n, e)))
        .collect()
}
