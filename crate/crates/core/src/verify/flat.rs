//! Values of positive types as a shape plus a vector of reals.
//!
//! A value of a positive type is determined by which summand it inhabits at
//! every level (its shape) and by the reals in its slots, read left to right.
//! Fixing the shape, the values of that shape form `R^n`, where `n` is the
//! number of slots.

use std::fmt;

use rand::Rng;

use super::VerifyError;
use crate::ast::Type;
use crate::runtime::{Tangent, Value};

/// A value with every real replaced by a hole.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Hole,
    Unit,
    Inl(Box<Shape>),
    Inr(Box<Shape>),
    Pair(Box<Shape>, Box<Shape>),
    Roll(Box<Shape>),
}

impl Shape {
    pub fn holes(&self) -> usize {
        match self {
            Shape::Hole => 1,
            Shape::Unit => 0,
            Shape::Inl(s) | Shape::Inr(s) | Shape::Roll(s) => s.holes(),
            Shape::Pair(a, b) => a.holes() + b.holes(),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(s: &Shape) -> String {
            match s {
                Shape::Inl(_) | Shape::Inr(_) | Shape::Roll(_) => format!("({s})"),
                _ => s.to_string(),
            }
        }
        match self {
            Shape::Hole => f.write_str("_"),
            Shape::Unit => f.write_str("()"),
            Shape::Inl(s) => write!(f, "inl {}", atom(s)),
            Shape::Inr(s) => write!(f, "inr {}", atom(s)),
            Shape::Pair(a, b) => write!(f, "({a}, {b})"),
            Shape::Roll(s) => write!(f, "roll {}", atom(s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatValue {
    pub shape: Shape,
    pub slots: Vec<f64>,
}

impl FlatValue {
    /// Same shape, different slot contents.
    pub fn with_slots(&self, slots: Vec<f64>) -> FlatValue {
        FlatValue {
            shape: self.shape.clone(),
            slots,
        }
    }
}

fn mismatch(v: &Value, ty: &Type) -> VerifyError {
    VerifyError::ValueMismatch {
        value: v.to_string(),
        ty: ty.to_string(),
    }
}

/// Walks `v` along the positive type `ty`. At every `real` position,
/// `leaf` receives the value found there and returns nothing on mismatch.
fn walk(v: &Value, ty: &Type, leaf: &mut dyn FnMut(&Value) -> bool) -> Result<Shape, VerifyError> {
    Ok(match (ty, v) {
        (Type::Real, _) => {
            if !leaf(v) {
                return Err(mismatch(v, ty));
            }
            Shape::Hole
        }
        (Type::Unit, Value::Unit) => Shape::Unit,
        (Type::Sum(a, _), Value::Inl(w)) => Shape::Inl(Box::new(walk(w, a, leaf)?)),
        (Type::Sum(_, b), Value::Inr(w)) => Shape::Inr(Box::new(walk(w, b, leaf)?)),
        (Type::Prod(a, b), Value::Pair(x, y)) => Shape::Pair(Box::new(walk(x, a, leaf)?), Box::new(walk(y, b, leaf)?)),
        (Type::Mu(..), Value::Roll(w)) => Shape::Roll(Box::new(walk(w, &ty.unfold().expect("mu type"), leaf)?)),
        (Type::Arrow(..) | Type::Tangent | Type::Var(_) | Type::Hole, _) => {
            return Err(VerifyError::NotPositive(ty.to_string()))
        }
        _ => return Err(mismatch(v, ty)),
    })
}

/// Splits a value of positive type `ty` into shape and slots.
pub fn flatten_value(v: &Value, ty: &Type) -> Result<FlatValue, VerifyError> {
    let mut slots = Vec::new();
    let shape = walk(v, ty, &mut |leaf| match leaf {
        Value::Real(x) => {
            slots.push(*x);
            true
        }
        _ => false,
    })?;
    Ok(FlatValue { shape, slots })
}

/// Splits a value of type `D(ty)` into the flattened primal value and the
/// tangent at each slot.
pub fn flatten_dual(v: &Value, ty: &Type) -> Result<(FlatValue, Vec<Tangent>), VerifyError> {
    let mut slots = Vec::new();
    let mut tangents = Vec::new();
    let shape = walk(v, ty, &mut |leaf| match leaf {
        Value::Pair(x, t) => match (&**x, &**t) {
            (Value::Real(x), Value::Tan(t)) => {
                slots.push(*x);
                tangents.push(t.clone());
                true
            }
            _ => false,
        },
        _ => false,
    })?;
    Ok((FlatValue { shape, slots }, tangents))
}

fn rebuild(shape: &Shape, leaf: &mut dyn FnMut() -> Value) -> Value {
    match shape {
        Shape::Hole => leaf(),
        Shape::Unit => Value::Unit,
        Shape::Inl(s) => Value::inl(rebuild(s, leaf)),
        Shape::Inr(s) => Value::inr(rebuild(s, leaf)),
        Shape::Pair(a, b) => {
            let x = rebuild(a, leaf);
            Value::pair(x, rebuild(b, leaf))
        }
        Shape::Roll(s) => Value::roll(rebuild(s, leaf)),
    }
}

fn check_count(expected: usize, found: usize) -> Result<(), VerifyError> {
    if expected == found {
        Ok(())
    } else {
        Err(VerifyError::LengthMismatch { expected, found })
    }
}

pub fn unflatten_value(f: &FlatValue) -> Result<Value, VerifyError> {
    check_count(f.shape.holes(), f.slots.len())?;
    let mut it = f.slots.iter();
    Ok(rebuild(&f.shape, &mut || Value::Real(*it.next().expect("counted"))))
}

/// The dual value with the same shape whose `j`-th slot is the pair of the
/// `j`-th real and `seeds[j]`.
pub fn dual_embed(f: &FlatValue, seeds: &[Tangent]) -> Result<Value, VerifyError> {
    check_count(f.shape.holes(), f.slots.len())?;
    check_count(f.slots.len(), seeds.len())?;
    let mut it = f.slots.iter().zip(seeds);
    Ok(rebuild(&f.shape, &mut || {
        let (x, t) = it.next().expect("counted");
        Value::pair(Value::Real(*x), Value::Tan(t.clone()))
    }))
}

/// Whether the positive type has any values (recursion read as a least
/// fixed point).
pub fn inhabited(ty: &Type) -> bool {
    match ty {
        Type::Real | Type::Unit => true,
        Type::Void | Type::Var(_) => false,
        Type::Sum(a, b) => inhabited(a) || inhabited(b),
        Type::Prod(a, b) => inhabited(a) && inhabited(b),
        Type::Mu(_, body) => inhabited(body),
        Type::Arrow(..) | Type::Tangent | Type::Hole => false,
    }
}

fn mentions_mu(ty: &Type) -> bool {
    match ty {
        Type::Mu(..) => true,
        Type::Sum(a, b) | Type::Prod(a, b) | Type::Arrow(a, b) => mentions_mu(a) || mentions_mu(b),
        _ => false,
    }
}

/// A random value of a closed positive type. Reals are uniform on
/// `[lo, hi]`. After `max_depth` nested unfoldings, summands that need no
/// further unfolding are preferred, so generation terminates.
pub fn random_value<R: Rng>(
    ty: &Type,
    rng: &mut R,
    max_depth: usize,
    (lo, hi): (f64, f64),
) -> Result<Value, VerifyError> {
    fn go<R: Rng>(ty: &Type, rng: &mut R, depth: usize, max: usize, range: (f64, f64)) -> Result<Value, VerifyError> {
        if depth > 4 * max + 8 {
            return Err(VerifyError::Uninhabited(ty.to_string()));
        }
        Ok(match ty {
            Type::Real => Value::Real(rng.gen_range(range.0..=range.1)),
            Type::Unit => Value::Unit,
            Type::Prod(a, b) => {
                let x = go(a, rng, depth, max, range)?;
                Value::pair(x, go(b, rng, depth, max, range)?)
            }
            Type::Sum(a, b) => {
                let mut sides: Vec<bool> = [(true, &**a), (false, &**b)]
                    .into_iter()
                    .filter(|(_, t)| inhabited(t))
                    .map(|(left, _)| left)
                    .collect();
                if depth >= max {
                    let pick = |left: bool| if left { &**a } else { &**b };
                    let shallow: Vec<bool> = sides.iter().copied().filter(|l| !mentions_mu(pick(*l))).collect();
                    if !shallow.is_empty() {
                        sides = shallow;
                    }
                }
                match sides.len() {
                    0 => return Err(VerifyError::Uninhabited(ty.to_string())),
                    1 if sides[0] => Value::inl(go(a, rng, depth, max, range)?),
                    1 => Value::inr(go(b, rng, depth, max, range)?),
                    _ if rng.gen_bool(0.5) => Value::inl(go(a, rng, depth, max, range)?),
                    _ => Value::inr(go(b, rng, depth, max, range)?),
                }
            }
            Type::Mu(..) => {
                if !inhabited(ty) {
                    return Err(VerifyError::Uninhabited(ty.to_string()));
                }
                Value::roll(go(&ty.unfold().expect("mu type"), rng, depth + 1, max, range)?)
            }
            Type::Void => return Err(VerifyError::Uninhabited(ty.to_string())),
            Type::Arrow(..) | Type::Tangent | Type::Var(_) | Type::Hole => {
                return Err(VerifyError::NotPositive(ty.to_string()))
            }
        })
    }
    go(ty, rng, 0, max_depth, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::{tan_basis, Backend};
    use crate::surface::parse_type;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn list() -> Type {
        parse_type("mu a. unit + real * a").unwrap()
    }

    #[test]
    fn list_flattens_to_its_elements() {
        let v = Value::real_list(&[1.5, 2.5]);
        let f = flatten_value(&v, &list()).unwrap();
        assert_eq!(f.slots, vec![1.5, 2.5]);
        let nil = Shape::Roll(Box::new(Shape::Inl(Box::new(Shape::Unit))));
        let cons = |tail: Shape| {
            Shape::Roll(Box::new(Shape::Inr(Box::new(Shape::Pair(
                Box::new(Shape::Hole),
                Box::new(tail),
            )))))
        };
        assert_eq!(f.shape, cons(cons(nil)));
        assert_eq!(unflatten_value(&f).unwrap(), v);
    }

    #[test]
    fn small_cases() {
        let f = flatten_value(&Value::Unit, &Type::Unit).unwrap();
        assert_eq!((f.shape.clone(), f.slots.len()), (Shape::Unit, 0));
        assert_eq!(unflatten_value(&f).unwrap(), Value::Unit);
        let ty = Type::sum(Type::Real, Type::Unit);
        let f = flatten_value(&Value::inl(Value::Real(7.0)), &ty).unwrap();
        assert_eq!(f.shape, Shape::Inl(Box::new(Shape::Hole)));
        assert_eq!(f.slots, vec![7.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            flatten_value(&Value::Unit, &parse_type("real -> real").unwrap()),
            Err(VerifyError::NotPositive(_))
        ));
        assert!(matches!(
            flatten_value(&Value::Unit, &Type::Real),
            Err(VerifyError::ValueMismatch { .. })
        ));
        let f = FlatValue {
            shape: Shape::Hole,
            slots: vec![],
        };
        assert!(unflatten_value(&f).is_err());
    }

    #[test]
    fn embedding_pairs_slots_with_seeds() {
        let f = flatten_value(
            &Value::pair(Value::Real(1.0), Value::Real(2.0)),
            &parse_type("real * real").unwrap(),
        )
        .unwrap();
        let seeds = [tan_basis(1, Backend::KInf), tan_basis(2, Backend::KInf)];
        let d = dual_embed(&f, &seeds).unwrap();
        let dual_ty = parse_type("real * real").unwrap();
        let (primal, tans) = flatten_dual(&d, &dual_ty).unwrap();
        assert_eq!(primal, f);
        assert_eq!(tans, seeds.to_vec());
        assert!(dual_embed(&f, &seeds[..1]).is_err());
    }

    #[test]
    fn random_values_flatten_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rose = parse_type("mu t. real * (mu l. unit + t * l)").unwrap();
        for ty in [list(), rose, parse_type("(real + unit) * (void + real)").unwrap()] {
            for _ in 0..50 {
                let v = random_value(&ty, &mut rng, 6, (-1.0, 1.0)).unwrap();
                let f = flatten_value(&v, &ty).unwrap();
                assert_eq!(unflatten_value(&f).unwrap(), v);
            }
        }
        assert!(random_value(&Type::Void, &mut rng, 6, (0.0, 1.0)).is_err());
        assert!(random_value(&parse_type("mu a. a").unwrap(), &mut rng, 6, (0.0, 1.0)).is_err());
    }

    #[test]
    fn shapes_print() {
        let f = flatten_value(&Value::real_list(&[1.0]), &list()).unwrap();
        assert_eq!(f.shape.to_string(), "roll (inr (_, roll (inl ())))");
    }
}
