use cayperc::cayley::build_ball;
use cayperc::group::{standard_generators, GroupModel};
use cayperc::kernel::{heat_kernel, Arithmetic};
use num_bigint::BigInt;
use num_rational::BigRational;

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[test]
fn integer_line_matches_binomial() {
    let m = GroupModel::free_abelian(1).unwrap();
    let ball = build_ball(&m, &standard_generators(&m), 20).unwrap();
    let row = heat_kernel(&ball, 0, 20, Arithmetic::Exact).unwrap();
    for v in 0..ball.len() {
        let cayperc::group::Element::Vector(x) = ball.element(v) else {
            panic!()
        };
        let k = x[0];
        let expect = if (20 + k) % 2 == 0 {
            binomial(20, ((20 + k) / 2) as u64)
        } else {
            0
        };
        let want = BigRational::new(BigInt::from(expect), BigInt::from(1u128 << 20));
        assert_eq!(row.ratio(v).unwrap(), want, "k={k}");
    }
}

#[test]
fn mass_and_symmetry_on_several_graphs() {
    for m in [
        GroupModel::free_abelian(3).unwrap(),
        GroupModel::heisenberg(),
        GroupModel::free_group(2).unwrap(),
    ] {
        let s = standard_generators(&m);
        let ball = build_ball(&m, &s, 7).unwrap();
        for n in 0..=7 {
            let exact = heat_kernel(&ball, 0, n, Arithmetic::Exact).unwrap();
            let float = heat_kernel(&ball, 0, n, Arithmetic::Float).unwrap();
            assert!(exact.conserves_mass() && float.conserves_mass());
            for v in 0..ball.len() {
                assert!((exact.prob(v) - float.prob(v)).abs() < 1e-14);
                // p_n(o, y) = p_n(o, y^{-1}) for symmetric generators
                let inv = m.inverse(ball.element(v)).unwrap();
                let w = ball.index_of(&inv).unwrap();
                assert_eq!(exact.count(v), exact.count(w));
            }
        }
    }
}

#[test]
fn kernel_is_translation_invariant() {
    let m = GroupModel::heisenberg();
    let s = standard_generators(&m);
    let ball = build_ball(&m, &s, 6).unwrap();
    let x = (0..ball.len()).find(|&v| ball.dist(v) == 2).unwrap();
    let from_x = heat_kernel(&ball, x, 4, Arithmetic::Exact).unwrap();
    let from_o = heat_kernel(&ball, 0, 4, Arithmetic::Exact).unwrap();
    let xe = ball.element(x).clone();
    for v in (0..ball.len()).filter(|&v| ball.dist(v) <= 4) {
        let y = m.multiply(&xe, ball.element(v)).unwrap();
        assert_eq!(from_o.count(v), from_x.count(ball.index_of(&y).unwrap()));
    }
}
