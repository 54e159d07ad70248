use std::sync::Arc;

use cayperc::cayley::build_ball;
use cayperc::gff::{condition_on_value, field_stack, sample_field, sample_truncated_gff};
use cayperc::group::{standard_generators, Element, GroupModel};
use cayperc::rng::stream;

const DRAWS: u64 = 20_000;

#[test]
fn scale_one_moments_match_covariance() {
    let m = GroupModel::free_abelian(2).unwrap();
    let ball = Arc::new(build_ball(&m, &standard_generators(&m), 4).unwrap());
    let stack = field_stack(&ball, 2).unwrap();
    let f1 = stack.field(1);
    let g = &f1.block.matrix;
    let o = 0;
    let e1 = ball.index_of(&Element::Vector(vec![1, 0])).unwrap();
    let far = ball.index_of(&Element::Vector(vec![3, 0])).unwrap();
    assert_eq!(g[(o, o)], 1.0);
    assert_eq!(g[(o, far)], 0.0);

    let (mut s_oo, mut s_oe, mut s_of, mut s4) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..DRAWS {
        let phi = sample_field(f1, &mut stream(21, "mc", i));
        s_oo += phi[o] * phi[o];
        s_oe += phi[o] * phi[e1];
        s_of += phi[o] * phi[far];
        s4 += phi[o].powi(4);
    }
    let n = DRAWS as f64;
    let (var, cov, cov_far, m4) = (s_oo / n, s_oe / n, s_of / n, s4 / n);
    // Var(X²) = 2σ⁴; Var(XY) = σ_x²σ_y² + c²; Var(X⁴) = 96σ⁸
    let se_var = (2.0f64 / n).sqrt();
    let se_cov = ((1.0 + g[(o, e1)].powi(2)) / n).sqrt();
    let se_far = (1.0 / n).sqrt();
    let se_m4 = (96.0f64 / n).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se_var, "var {var}");
    assert!(
        (cov - g[(o, e1)]).abs() < 3.0 * se_cov,
        "cov {cov} vs {}",
        g[(o, e1)]
    );
    assert!(cov_far.abs() < 3.0 * se_far, "far {cov_far}");
    // Gaussian fourth moment 3σ⁴
    assert!((m4 - 3.0).abs() < 3.0 * se_m4, "m4 {m4}");
}

#[test]
fn scales_are_independent_and_sum_variance_adds() {
    let m = GroupModel::free_abelian(3).unwrap();
    let ball = Arc::new(build_ball(&m, &standard_generators(&m), 3).unwrap());
    let stack = field_stack(&ball, 2).unwrap();
    let diag = stack.diag();
    let (mut s12, mut ss) = (0.0, 0.0);
    for i in 0..DRAWS {
        let f = sample_truncated_gff(&stack, &mut stream(22, "mc", i));
        s12 += f.scale(1)[0] * f.scale(2)[0];
        ss += f.sum[0] * f.sum[0];
    }
    let n = DRAWS as f64;
    let total = diag[0] + diag[1];
    assert!((s12 / n).abs() < 3.0 * (diag[0] * diag[1] / n).sqrt());
    assert!((ss / n - total).abs() < 3.0 * total * (2.0 / n).sqrt());
}

#[test]
fn conditioned_field_has_conditional_mean() {
    let m = GroupModel::free_abelian(2).unwrap();
    let ball = Arc::new(build_ball(&m, &standard_generators(&m), 4).unwrap());
    let stack = field_stack(&ball, 1).unwrap();
    let f1 = stack.field(1);
    let g = &f1.block.matrix;
    let x = 0;
    let y = ball.index_of(&Element::Vector(vec![0, 1])).unwrap();
    let lambda = 0.8;
    let mut sum = 0.0;
    for i in 0..DRAWS {
        let phi = sample_field(f1, &mut stream(23, "mc", i));
        let c = condition_on_value(&phi, &f1.block, x, lambda).unwrap();
        assert_eq!(c[x], lambda);
        sum += c[y];
    }
    let mean = sum / DRAWS as f64;
    let expect = lambda * g[(x, y)] / g[(x, x)];
    let cond_var = g[(y, y)] - g[(x, y)].powi(2) / g[(x, x)];
    assert!(
        (mean - expect).abs() < 3.0 * (cond_var / DRAWS as f64).sqrt(),
        "{mean} vs {expect}"
    );
}
