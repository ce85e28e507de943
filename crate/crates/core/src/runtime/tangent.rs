//! Tangent vectors: `R^1` for forward mode, sparse `R^∞` for reverse mode.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Which vector space the `tangent` type denotes during one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Backend {
    /// `R^1`: forward mode.
    K1,
    /// `R^∞` with finitely many nonzero coordinates: reverse mode.
    KInf,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::K1 => "k1",
            Backend::KInf => "kinf",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tangent {
    Scalar(f64),
    /// Coordinates indexed from 1. Never stores a zero.
    Sparse(BTreeMap<u32, f64>),
}

impl Tangent {
    pub fn backend(&self) -> Backend {
        match self {
            Tangent::Scalar(_) => Backend::K1,
            Tangent::Sparse(_) => Backend::KInf,
        }
    }

    /// Coordinate `i` (from 1).
    pub fn coord(&self, i: u32) -> f64 {
        match self {
            Tangent::Scalar(x) => {
                if i == 1 {
                    *x
                } else {
                    0.0
                }
            }
            Tangent::Sparse(m) => m.get(&i).copied().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Tangent::Scalar(x) => *x == 0.0,
            Tangent::Sparse(m) => m.is_empty(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Tangent::Scalar(x) => x.is_finite(),
            Tangent::Sparse(m) => m.values().all(|x| x.is_finite()),
        }
    }

    /// Builds a sparse vector from coordinates, dropping zeros.
    pub fn sparse(coords: impl IntoIterator<Item = (u32, f64)>) -> Tangent {
        let mut m = BTreeMap::new();
        for (i, x) in coords {
            assert!(i >= 1, "tangent coordinates are indexed from 1");
            if x != 0.0 {
                m.insert(i, x);
            }
        }
        Tangent::Sparse(m)
    }
}

impl fmt::Display for Tangent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tangent::Scalar(x) => write!(f, "{x:?}"),
            Tangent::Sparse(m) if m.is_empty() => f.write_str("{}"),
            Tangent::Sparse(m) => {
                let parts: Vec<String> = m.iter().map(|(i, x)| format!("{i}: {x:?}")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

pub fn tan_zero(backend: Backend) -> Tangent {
    match backend {
        Backend::K1 => Tangent::Scalar(0.0),
        Backend::KInf => Tangent::Sparse(BTreeMap::new()),
    }
}

/// The `i`-th basis vector, or zero when `i` exceeds the dimension.
pub fn tan_basis(i: u32, backend: Backend) -> Tangent {
    assert!(i >= 1, "basis indices start at 1");
    match backend {
        Backend::K1 => Tangent::Scalar(if i == 1 { 1.0 } else { 0.0 }),
        Backend::KInf => Tangent::Sparse(BTreeMap::from([(i, 1.0)])),
    }
}

/// # Panics
/// If the operands come from different backends.
pub fn tan_add(a: &Tangent, b: &Tangent) -> Tangent {
    match (a, b) {
        (Tangent::Scalar(x), Tangent::Scalar(y)) => Tangent::Scalar(x + y),
        (Tangent::Sparse(x), Tangent::Sparse(y)) => {
            let (big, small) = if x.len() >= y.len() { (x, y) } else { (y, x) };
            let mut out = big.clone();
            for (i, v) in small {
                let e = out.entry(*i).or_insert(0.0);
                *e += v;
                if *e == 0.0 {
                    out.remove(i);
                }
            }
            Tangent::Sparse(out)
        }
        _ => panic!("tangent backends mixed in one evaluation: {a} + {b}"),
    }
}

pub fn tan_scale(a: &Tangent, s: f64) -> Tangent {
    match a {
        Tangent::Scalar(x) => Tangent::Scalar(x * s),
        Tangent::Sparse(m) => Tangent::sparse(m.iter().map(|(i, x)| (*i, x * s))),
    }
}

/// The first `i` coordinates. For `R^1` this pads with zeros.
pub fn tan_proj(i: u32, a: &Tangent) -> Vec<f64> {
    (1..=i).map(|j| a.coord(j)).collect()
}
