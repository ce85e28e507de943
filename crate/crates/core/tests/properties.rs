use std::collections::BTreeSet;
use std::rc::Rc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dualfpc::ad::ad_term;
use dualfpc::ast::{self, subst_term, AlphaEq, Term, Type};
use dualfpc::ops::OpRegistry;
use dualfpc::runtime::{tan_add, tan_scale, Backend, Env, Machine, Outcome, Tangent, Value};
use dualfpc::surface::{parse_term, parse_type, pretty_term, pretty_type};
use dualfpc::verify::{flatten_value, random_value, unflatten_value};

const NAMES: [&str; 4] = ["x", "y", "z", "w"];

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(&NAMES[..]).prop_map(String::from)
}

fn closed_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![Just(Type::Real), Just(Type::Unit), Just(Type::Void)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::sum(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::prod(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::arrow(a, b)),
            inner
                .clone()
                .prop_map(|a| Type::mu("a", Type::sum(Type::Unit, Type::prod(a, Type::var("a"))))),
        ]
    })
}

fn constant() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(|n| n as f64 / 8.0),
        -1e6f64..1e6,
        Just(1e-12),
        Just(-2.5e20)
    ]
}

fn term() -> impl Strategy<Value = Term> {
    let ops = OpRegistry::standard();
    let symbols: Vec<(String, usize)> = ops.iter().map(|o| (o.sig.symbol.to_string(), o.sig.arity)).collect();
    let leaf = prop_oneof![
        name().prop_map(Term::Var),
        constant().prop_map(Term::Const),
        Just(Term::Unit),
        Just(Term::ZeroTan),
        (1u32..4).prop_map(Term::Basis),
    ];
    leaf.prop_recursive(4, 40, 3, move |t| {
        let symbols = symbols.clone();
        prop_oneof![
            (name(), t.clone(), t.clone()).prop_map(|(x, a, b)| ast::let_in(&x, a, b)),
            (prop::sample::select(symbols), prop::collection::vec(t.clone(), 2))
                .prop_map(|((s, n), args)| { ast::op(&s, args.into_iter().take(n).collect()) }),
            t.clone().prop_map(|a| Term::Sign(Rc::new(a))),
            t.clone().prop_map(|a| Term::Inl(Rc::new(a))),
            t.clone().prop_map(|a| Term::Inr(Rc::new(a))),
            (t.clone(), name(), t.clone(), name(), t.clone()).prop_map(|(s, x, a, y, b)| ast::case(s, &x, a, &y, b)),
            (t.clone(), t.clone()).prop_map(|(a, b)| ast::pair(a, b)),
            (t.clone(), name(), name(), t.clone()).prop_map(|(s, x, y, b)| ast::pair_match(s, &x, &y, b)),
            (name(), t.clone()).prop_map(|(x, b)| ast::lam(&x, b)),
            (t.clone(), t.clone()).prop_map(|(f, a)| ast::app(f, a)),
            (t.clone(), closed_type()).prop_map(|(a, ty)| ast::roll(a, Type::mu("m", Type::sum(ty, Type::var("m"))))),
            (t.clone(), name(), t.clone()).prop_map(|(s, x, b)| ast::unroll(s, &x, b)),
            t.clone().prop_map(|a| Term::VoidMatch(Rc::new(a))),
            (t.clone(), t.clone()).prop_map(|(a, b)| Term::AddTan(Rc::new(a), Rc::new(b))),
            (t.clone(), t.clone()).prop_map(|(a, b)| Term::ScaleTan(Rc::new(a), Rc::new(b))),
            (1u32..4, t.clone()).prop_map(|(i, a)| Term::Proj(i, Rc::new(a))),
        ]
    })
}

/// Real-valued source expressions over the reals `x` and `y`.
fn real_expr() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(&["x", "y"][..]).prop_map(ast::var),
        (-20i32..20).prop_map(|n| Term::Const(n as f64 / 4.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |t| {
        prop_oneof![
            (prop::sample::select(&["+", "-", "*", "/"][..]), t.clone(), t.clone())
                .prop_map(|(s, a, b)| ast::op(s, vec![a, b])),
            (
                prop::sample::select(&["sin", "exp", "log", "sqrt", "tanh", "sigmoid", "neg"][..]),
                t.clone()
            )
                .prop_map(|(s, a)| ast::op(s, vec![a])),
            (t.clone(), t.clone(), t.clone())
                .prop_map(|(c, a, b)| { ast::case(Term::Sign(Rc::new(c)), "l", a, "r", b) }),
            (t.clone(), t.clone()).prop_map(|(a, b)| ast::let_in("x", a, b)),
        ]
    })
}

fn tangent(backend: Backend) -> BoxedStrategy<Tangent> {
    match backend {
        Backend::K1 => (-9i32..=9).prop_map(|n| Tangent::Scalar(n as f64)).boxed(),
        Backend::KInf => prop::collection::vec((1u32..6, -9i32..=9), 0..5)
            .prop_map(|v| Tangent::sparse(v.into_iter().map(|(i, c)| (i, c as f64))))
            .boxed(),
    }
}

fn tangent_eq(a: &Tangent, b: &Tangent) -> bool {
    (1..8).all(|i| a.coord(i) == b.coord(i))
}

fn dual_of(x: f64, dx: f64) -> Value {
    Value::pair(Value::Real(x), Value::Tan(Tangent::Scalar(dx)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pretty_then_parse_is_identity(t in term()) {
        let ops = OpRegistry::standard();
        let text = pretty_term(&t);
        let back = parse_term(&text, &ops).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert!(back.alpha_eq(&t), "{} reparsed as {}", text, pretty_term(&back));
    }

    #[test]
    fn types_print_and_parse_back(ty in closed_type()) {
        let text = pretty_type(&ty);
        prop_assert_eq!(parse_type(&text).unwrap(), ty);
    }

    #[test]
    fn substituting_a_variable_for_itself(t in term(), x in name()) {
        prop_assert!(subst_term(&t, &x, &Term::Var(x.clone())).alpha_eq(&t));
    }

    #[test]
    fn substitution_for_an_absent_variable(t in term()) {
        prop_assert!(subst_term(&t, "absent", &Term::Const(1.0)).alpha_eq(&t));
    }

    #[test]
    fn substitution_free_variables(t in term(), x in name(), v in term()) {
        let s = subst_term(&t, &x, &v);
        let mut bound: BTreeSet<String> = t.free_vars();
        bound.remove(&x);
        if t.free_vars().contains(&x) {
            bound.extend(v.free_vars());
        }
        prop_assert_eq!(s.free_vars(), bound);
    }

    #[test]
    fn renaming_a_binder_is_alpha_equivalent(b in term(), x in name()) {
        let body = subst_term(&b, &x, &Term::Var("fresh".into()));
        prop_assert!(ast::lam(&x, b.clone()).alpha_eq(&ast::lam("fresh", body)));
    }

    #[test]
    fn flatten_round_trip(ty in closed_type(), seed in any::<u64>()) {
        prop_assume!(!has_arrow(&ty));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Ok(v) = random_value(&ty, &mut rng, 4, (-3.0, 3.0)) {
            let f = flatten_value(&v, &ty).unwrap();
            prop_assert_eq!(unflatten_value(&f).unwrap(), v);
        }
    }

    #[test]
    fn sparse_tangents_form_a_vector_space(
        a in tangent(Backend::KInf), b in tangent(Backend::KInf), c in tangent(Backend::KInf),
        s in -9i32..=9, t in -9i32..=9,
    ) {
        let (s, t) = (s as f64, t as f64);
        prop_assert!(tangent_eq(&tan_add(&tan_add(&a, &b), &c), &tan_add(&a, &tan_add(&b, &c))));
        prop_assert!(tangent_eq(&tan_add(&a, &b), &tan_add(&b, &a)));
        prop_assert!(tangent_eq(&tan_scale(&tan_add(&a, &b), s), &tan_add(&tan_scale(&a, s), &tan_scale(&b, s))));
        prop_assert!(tangent_eq(&tan_scale(&a, s + t), &tan_add(&tan_scale(&a, s), &tan_scale(&a, t))));
        if let Tangent::Sparse(m) = tan_add(&a, &tan_scale(&a, -1.0)) {
            prop_assert!(m.is_empty());
        }
    }

    #[test]
    fn scalar_tangents_form_a_vector_space(a in tangent(Backend::K1), b in tangent(Backend::K1), s in -9i32..=9) {
        let s = s as f64;
        prop_assert!(tangent_eq(&tan_scale(&tan_add(&a, &b), s), &tan_add(&tan_scale(&a, s), &tan_scale(&b, s))));
    }

    /// The primal part of `D(e)` is `e`, bitwise, and both are undefined
    /// together. The tangent part is linear in the seeds.
    #[test]
    fn transformed_expressions(e in real_expr(), x in -3.0f64..3.0, y in -3.0f64..3.0, a in -2i32..=2, b in -2i32..=2) {
        let ops = OpRegistry::standard();
        let de = ad_term(&e, &ops).unwrap();
        let m = Machine::new(&ops, Backend::K1);
        let direct = m.eval(&Env::new().bind("x", Value::Real(x)).bind("y", Value::Real(y)), &e).unwrap();
        let run = |dx: f64, dy: f64| m.eval(&Env::new().bind("x", dual_of(x, dx)).bind("y", dual_of(y, dy)), &de).unwrap();
        let split = |o: &Outcome| match o {
            Outcome::Converged(Value::Pair(v, t)) => match (&**v, &**t) {
                (Value::Real(v), Value::Tan(t)) => Some((*v, t.coord(1))),
                _ => None,
            },
            _ => None,
        };
        let (e1, e2, mixed) = (run(1.0, 0.0), run(0.0, 1.0), run(a as f64, b as f64));
        prop_assert_eq!(direct.is_bottom(), e1.is_bottom());
        prop_assert_eq!(direct.is_bottom(), mixed.is_bottom());
        if let (Outcome::Converged(Value::Real(v)), Some((v1, t1)), Some((_, t2)), Some((vm, tm))) =
            (&direct, split(&e1), split(&e2), split(&mixed))
        {
            prop_assert_eq!(v.to_bits(), v1.to_bits());
            prop_assert_eq!(v.to_bits(), vm.to_bits());
            let expected = a as f64 * t1 + b as f64 * t2;
            prop_assert!((tm - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{} vs {}", tm, expected);
        }
    }
}

fn has_arrow(ty: &Type) -> bool {
    match ty {
        Type::Arrow(..) => true,
        Type::Sum(a, b) | Type::Prod(a, b) => has_arrow(a) || has_arrow(b),
        Type::Mu(_, a) => has_arrow(a),
        _ => false,
    }
}
