use cayperc::cayley::{build_ball, growth_sequence, RadiusFunctions};
use cayperc::group::{standard_generators, GroupModel};

/// Lattice points of `ℤ^d` with `|x|_1 <= n`, by dynamic programming over
/// coordinates.
fn l1_ball_size(d: usize, n: usize) -> u64 {
    let mut f = vec![1u64; n + 1];
    for _ in 0..d {
        let prev = f.clone();
        for r in 0..=n {
            f[r] = (0..=r)
                .map(|j| if j == 0 { prev[r] } else { 2 * prev[r - j] })
                .sum();
        }
    }
    f[n]
}

#[test]
fn free_abelian_balls_match_lattice_counts() {
    for d in 1..=4 {
        let m = GroupModel::free_abelian(d).unwrap();
        let ball = build_ball(&m, &standard_generators(&m), 6).unwrap();
        for n in 0..=6u32 {
            assert_eq!(
                ball.count_within(n) as u64,
                l1_ball_size(d, n as usize),
                "d={d} n={n}"
            );
        }
    }
}

#[test]
fn free_group_balls() {
    for k in 1..=3usize {
        let m = GroupModel::free_group(k).unwrap();
        let seq = growth_sequence(&m, &standard_generators(&m), 6, u64::MAX);
        for (n, &b) in seq.iter().enumerate() {
            let expect = if k == 1 {
                2 * n as u64 + 1
            } else {
                let q = 2 * k as u64 - 1;
                1 + 2 * k as u64 * (q.pow(n as u32) - 1) / (q - 1)
            };
            assert_eq!(b, expect, "k={k} n={n}");
        }
    }
}

#[test]
fn heisenberg_ball_sizes() {
    let m = GroupModel::heisenberg();
    let ball = build_ball(&m, &standard_generators(&m), 4).unwrap();
    // spheres 1, 4, 12, 36, 82
    let sizes: Vec<usize> = (0..=4).map(|n| ball.count_within(n)).collect();
    assert_eq!(sizes, vec![1, 5, 17, 53, 135]);
}

#[test]
fn minimal_growth_never_exceeds_growth() {
    for m in [
        GroupModel::free_abelian(2).unwrap(),
        GroupModel::free_abelian(3).unwrap(),
        GroupModel::heisenberg(),
        GroupModel::free_group(2).unwrap(),
    ] {
        let rf = RadiusFunctions::compute(&m, &standard_generators(&m), 6, 1 << 16).unwrap();
        assert!(rf.sub_min.iter().zip(&rf.full).all(|(a, b)| a <= b));
        for u in 1..200 {
            assert!(rf.r_bar(u).unwrap() >= rf.r(u).unwrap());
        }
    }
}

#[test]
fn shell_and_adjacency_agree_with_distances() {
    let m = GroupModel::heisenberg();
    let ball = build_ball(&m, &standard_generators(&m), 4).unwrap();
    for v in 0..ball.len() {
        for g in 0..ball.degree() {
            match ball.neighbor(v, g) {
                Some(w) => assert!(ball.dist(v).abs_diff(ball.dist(w)) <= 1),
                None => assert!(ball.is_shell(v)),
            }
        }
    }
}
