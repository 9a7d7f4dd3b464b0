use proptest::prelude::*;

use semilinear::diagnostics::{green_tight_norm, kato_modulus};
use semilinear::expr::{Expr, Role};
use semilinear::Domain;

/// Independent expression tree with a recursive reference evaluator.
#[derive(Debug, Clone)]
enum T {
    Num(f64),
    X(usize),
    U,
    R,
    Neg(Box<T>),
    Bin(char, Box<T>, Box<T>),
    Call(&'static str, Vec<T>),
}

impl T {
    fn render(&self) -> String {
        match self {
            T::Num(v) => format!("{v}"),
            T::X(i) => format!("x{}", i + 1),
            T::U => "u".into(),
            T::R => "r".into(),
            T::Neg(a) => format!("(-{})", a.render()),
            T::Bin(op, a, b) => format!("({} {op} {})", a.render(), b.render()),
            T::Call(f, args) => {
                format!("{f}({})", args.iter().map(T::render).collect::<Vec<_>>().join(", "))
            }
        }
    }

    /// `None` where the expression leaves its domain.
    fn eval(&self, x: &[f64], u: f64) -> Option<f64> {
        Some(match self {
            T::Num(v) => *v,
            T::X(i) => x[*i],
            T::U => u,
            T::R => x.iter().map(|c| c * c).sum::<f64>().sqrt(),
            T::Neg(a) => -a.eval(x, u)?,
            T::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, u)?, b.eval(x, u)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' if b == 0.0 => return None,
                    '/' => a / b,
                    _ => {
                        let v = a.powf(b);
                        if v.is_nan() && !a.is_nan() && !b.is_nan() {
                            return None;
                        }
                        v
                    }
                }
            }
            T::Call(f, args) => {
                let v: Vec<f64> = args.iter().map(|a| a.eval(x, u)).collect::<Option<_>>()?;
                match *f {
                    "sin" => v[0].sin(),
                    "cos" => v[0].cos(),
                    "exp" => v[0].exp(),
                    "abs" => v[0].abs(),
                    "step" => f64::from(v[0] > 0.0),
                    "log" if v[0] <= 0.0 || v[0].is_nan() => return None,
                    "log" => v[0].ln(),
                    "sqrt" if v[0] < 0.0 || v[0].is_nan() => return None,
                    "sqrt" => v[0].sqrt(),
                    "min" => v[0].min(v[1]),
                    _ => v[0].max(v[1]),
                }
            }
        })
    }
}

fn tree() -> impl Strategy<Value = T> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|n| T::Num(n as f64 / 8.0)),
        (0usize..3).prop_map(T::X),
        Just(T::U),
        Just(T::R),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| T::Neg(Box::new(a))),
            (
                prop::sample::select(vec!['+', '-', '*', '/', '^']),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| T::Bin(op, Box::new(a), Box::new(b))),
            (
                prop::sample::select(vec!["sin", "cos", "exp", "abs", "step", "log", "sqrt"]),
                inner.clone()
            )
                .prop_map(|(f, a)| T::Call(f, vec![a])),
            (prop::sample::select(vec!["min", "max"]), inner.clone(), inner)
                .prop_map(|(f, a, b)| T::Call(f, vec![a, b])),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn printing_round_trips(t in tree()) {
        let e = Expr::parse(&t.render(), Role::F, 3).unwrap();
        let again = Expr::parse(&e.to_string(), Role::F, 3).unwrap();
        prop_assert_eq!(e.root(), again.root());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn evaluation_matches_reference(
        t in tree(),
        x in prop::array::uniform3(-2.0f64..2.0),
        u in -2.0f64..2.0,
    ) {
        let e = Expr::parse(&t.render(), Role::F, 3).unwrap();
        match (e.eval_at(&x, Some(u)), t.eval(&x, u)) {
            (Ok(a), Some(b)) => prop_assert!(same(a, b), "{} at {:?}, u = {}: {} vs {}", t.render(), x, u, a, b),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "{} at {:?}, u = {}: {:?} vs {:?}", t.render(), x, u, a, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_tight_norm_is_monotone_in_w(
        a in 0.0f64..2.0,
        b in 0.0f64..2.0,
        c in 0.0f64..1.0,
        x in prop::array::uniform3(-0.5f64..0.5),
    ) {
        let d = Domain::unit_ball(3).unwrap();
        let w1 = |y: &[f64]| Ok(a + b * y[0] * y[0]);
        let w2 = |y: &[f64]| Ok(a + b * y[0] * y[0] + c * y[1].abs());
        let samples = vec![x.to_vec(), vec![0.0; 3]];
        let n1 = green_tight_norm(&d, &w1, 0.1, &samples).unwrap().value;
        let n2 = green_tight_norm(&d, &w2, 0.1, &samples).unwrap().value;
        prop_assert!(n1 <= n2 + 1e-12, "{} > {}", n1, n2);
    }

    #[test]
    fn kato_modulus_is_monotone_in_alpha(
        a in 0.05f64..0.5,
        f in 1.01f64..2.0,
        x in prop::array::uniform3(-0.5f64..0.5),
    ) {
        let d = Domain::unit_ball(3).unwrap();
        let w = |y: &[f64]| Ok(1.0 + y[2] * y[2]);
        let samples = vec![x.to_vec()];
        let h = 0.02;
        let small = kato_modulus(&d, &w, a, h, &samples).unwrap().value;
        let large = kato_modulus(&d, &w, a * f, h, &samples).unwrap().value;
        prop_assert!(small <= large + 1e-12, "{} > {}", small, large);
    }
}
