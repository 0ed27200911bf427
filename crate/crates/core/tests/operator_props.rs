use inclusion_core::convex::{ConvexFunction, ConvexSet};
use inclusion_core::linalg::{matrix_from_rows, point};
use inclusion_core::operators::MonotoneOperator;
use inclusion_core::Point;
use proptest::prelude::*;

fn operators() -> Vec<MonotoneOperator> {
    let ball = ConvexSet::Ball {
        center: point(&[0.0, 0.0]),
        radius: 1.0,
    };
    vec![
        MonotoneOperator::Zero { dim: 2 },
        MonotoneOperator::Subdifferential(ConvexFunction::L1 { dim: 2, weight: 1.0 }),
        MonotoneOperator::NormalCone(ball.clone()),
        MonotoneOperator::Linear(matrix_from_rows(&[vec![1.0, -2.0], vec![2.0, 0.5]]).unwrap()),
        MonotoneOperator::ScaledSum(vec![
            (1.0, MonotoneOperator::Subdifferential(ConvexFunction::L1 { dim: 2, weight: 0.5 })),
            (2.0, MonotoneOperator::NormalCone(ConvexSet::unit_box(2))),
        ]),
    ]
}

fn pt() -> impl Strategy<Value = Point> {
    (-2.5..2.5f64, -2.5..2.5f64).prop_map(|(a, b)| point(&[a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resolvent_is_firmly_nonexpansive(x in pt(), y in pt(), lambda in 0.05..2.0f64) {
        for op in operators() {
            let jx = op.resolvent(lambda, &x).unwrap();
            let jy = op.resolvent(lambda, &y).unwrap();
            let d = &jx - &jy;
            prop_assert!(d.norm_squared() <= d.dot(&(&x - &y)) + 1e-8, "{op:?}");
        }
    }

    #[test]
    fn resolvent_identity(x in pt(), lambda in 0.05..2.0f64, mu in 0.05..2.0f64) {
        for op in operators() {
            let jx = op.resolvent(lambda, &x).unwrap();
            let inner = &x * (mu / lambda) + &jx * (1.0 - mu / lambda);
            let rhs = op.resolvent(mu, &inner).unwrap();
            prop_assert!((&jx - rhs).norm() <= 1e-7 * (1.0 + mu / lambda), "{op:?}");
        }
    }

    /// `A_λ` is monotone and `1/λ`-Lipschitz.
    #[test]
    fn yosida_is_monotone_and_lipschitz(x in pt(), y in pt(), lambda in 0.05..2.0f64) {
        for op in operators() {
            let ax = op.yosida(lambda, &x).unwrap();
            let ay = op.yosida(lambda, &y).unwrap();
            prop_assert!((&ax - &ay).dot(&(&x - &y)) >= -1e-8);
            prop_assert!((&ax - &ay).norm() <= (&x - &y).norm() / lambda + 1e-7);
        }
    }

    /// `A_λ(x) ∈ A(J_λ x)`.
    #[test]
    fn yosida_lies_in_the_graph(x in pt(), lambda in 0.05..2.0f64) {
        for op in operators() {
            let j = op.resolvent(lambda, &x).unwrap();
            let a = op.yosida(lambda, &x).unwrap();
            let proj = match op.project_value_set(&j, &a) {
                Ok(p) => p,
                Err(inclusion_core::Error::Unsupported(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            prop_assert!((proj - &a).norm() <= 1e-6 * (1.0 + a.norm()), "{op:?}");
        }
    }
}

#[test]
fn yosida_tends_to_the_minimal_norm_section() {
    let op = MonotoneOperator::Subdifferential(ConvexFunction::L1 { dim: 2, weight: 1.0 });
    for x in [point(&[0.0, 0.7]), point(&[1.0, -1.0]), point(&[0.0, 0.0])] {
        let m = op.min_norm_section(&x).unwrap();
        let a = op.yosida(1e-8, &x).unwrap();
        assert!((a - &m).norm() <= 1e-6);
    }
    let m = op.min_norm_section(&point(&[0.0, 0.7])).unwrap();
    assert_eq!(m, point(&[0.0, 1.0]));
}

#[test]
fn normal_cone_resolvent_is_projection() {
    let c = ConvexSet::unit_box(2);
    let op = MonotoneOperator::NormalCone(c.clone());
    for x in [point(&[2.0, -0.5]), point(&[0.3, 0.4])] {
        assert_eq!(op.resolvent(0.7, &x).unwrap(), c.project(&x));
    }
}

#[test]
fn value_set_outside_domain_is_empty() {
    let op = MonotoneOperator::NormalCone(ConvexSet::unit_box(2));
    assert!(op.min_norm_section(&point(&[2.0, 0.0])).is_err());
}
