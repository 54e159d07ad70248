//! Balls, boundaries and growth of Cayley graphs.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::CayleyError;
use crate::group::{encode_into, Element, GeneratorSet, GroupModel, Minimality};

/// Marker for a neighbour outside the ball.
pub const STUB: u32 = u32::MAX;

pub const DEFAULT_VERTEX_BUDGET: usize = 20_000_000;

/// The ball `B(o, R)` with vertices in breadth-first discovery order
/// (generator order breaks ties). Vertex 0 is the identity.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    model: GroupModel,
    generators: GeneratorSet,
    radius: u32,
    elements: Vec<Element>,
    index: FxHashMap<Box<[u8]>, u32>,
    /// `adjacency[v * D + g]` is the index of `v * g`, or [`STUB`].
    adjacency: Vec<u32>,
    dist: Vec<u32>,
    /// `cumulative[r] = |B(o, r)|`.
    cumulative: Vec<usize>,
}

pub fn build_ball(
    model: &GroupModel,
    generators: &GeneratorSet,
    radius: u32,
) -> Result<CayleyBall, CayleyError> {
    build_ball_with_budget(model, generators, radius, DEFAULT_VERTEX_BUDGET)
}

pub fn build_ball_with_budget(
    model: &GroupModel,
    generators: &GeneratorSet,
    radius: u32,
    budget: usize,
) -> Result<CayleyBall, CayleyError> {
    for g in generators.elements() {
        model.canonical_code(g)?;
    }
    let degree = generators.degree();
    let id = model.identity();
    let mut code = Vec::new();
    encode_into(&id, &mut code);
    let mut index: FxHashMap<Box<[u8]>, u32> = FxHashMap::default();
    index.insert(code.clone().into_boxed_slice(), 0);
    let mut elements = vec![id];
    let mut dist = vec![0u32];
    let mut adjacency: Vec<u32> = Vec::new();

    let mut v = 0;
    while v < elements.len() {
        let d = dist[v];
        for g in generators.elements() {
            let next = model.mul_unchecked(&elements[v], g);
            code.clear();
            encode_into(&next, &mut code);
            let slot = match index.get(&code[..]) {
                Some(&i) => i,
                None if d < radius => {
                    if elements.len() >= budget {
                        return Err(CayleyError::TooLarge {
                            radius: d + 1,
                            budget,
                        });
                    }
                    let i = elements.len() as u32;
                    index.insert(code.clone().into_boxed_slice(), i);
                    elements.push(next);
                    dist.push(d + 1);
                    i
                }
                None => STUB,
            };
            adjacency.push(slot);
        }
        v += 1;
    }
    debug_assert_eq!(adjacency.len(), elements.len() * degree);

    let mut cumulative = vec![0usize; radius as usize + 1];
    for &d in &dist {
        cumulative[d as usize] += 1;
    }
    for r in 1..cumulative.len() {
        cumulative[r] += cumulative[r - 1];
    }
    Ok(CayleyBall {
        model: model.clone(),
        generators: generators.clone(),
        radius,
        elements,
        index,
        adjacency,
        dist,
        cumulative,
    })
}

impl CayleyBall {
    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.generators.degree()
    }

    pub fn dist(&self, v: usize) -> u32 {
        self.dist[v]
    }

    pub fn distances(&self) -> &[u32] {
        &self.dist
    }

    pub fn element(&self, v: usize) -> &Element {
        &self.elements[v]
    }

    pub fn code(&self, v: usize) -> Vec<u8> {
        let mut buf = Vec::new();
        encode_into(&self.elements[v], &mut buf);
        buf
    }

    pub fn index_of(&self, g: &Element) -> Option<usize> {
        let mut buf = Vec::new();
        encode_into(g, &mut buf);
        self.index_of_code(&buf)
    }

    pub fn index_of_code(&self, code: &[u8]) -> Option<usize> {
        self.index.get(code).map(|&i| i as usize)
    }

    /// Neighbour `v * g` when it lies in the ball.
    pub fn neighbor(&self, v: usize, g: usize) -> Option<usize> {
        let slot = self.adjacency[v * self.degree() + g];
        (slot != STUB).then_some(slot as usize)
    }

    /// Raw neighbour slots of `v`, one per generator, [`STUB`] outside the ball.
    pub fn neighbor_slots(&self, v: usize) -> &[u32] {
        let d = self.degree();
        &self.adjacency[v * d..(v + 1) * d]
    }

    /// `|B(o, r)|` for `r = 0..=R`.
    pub fn sizes(&self) -> &[usize] {
        &self.cumulative
    }

    /// Number of vertices at distance `<= r`; these are the first indices.
    pub fn count_within(&self, r: u32) -> usize {
        self.cumulative[r.min(self.radius) as usize]
    }

    pub fn is_shell(&self, v: usize) -> bool {
        self.dist[v] == self.radius
    }

    /// True when the group and generators make every ball geodesically convex,
    /// so distances inside the ball agree with distances in the whole graph:
    /// `Z^d` with `±e_i` (l1 balls) and free groups with their letters (trees).
    pub fn is_geodesically_convex(&self) -> bool {
        use crate::group::{standard_generators, GroupFamily};
        match self.model.family() {
            GroupFamily::FreeAbelian { .. } | GroupFamily::FreeGroup { .. } => {
                self.same_generators(&self.model, &standard_generators(&self.model))
            }
            _ => false,
        }
    }

    fn same_generators(&self, model: &GroupModel, other: &GeneratorSet) -> bool {
        let codes = |s: &GeneratorSet| {
            let mut v: Vec<Vec<u8>> = s
                .elements()
                .iter()
                .map(|g| model.canonical_code(g).expect("member"))
                .collect();
            v.sort();
            v
        };
        codes(&self.generators) == codes(other)
    }

    /// Whether `other` is a ball of the same Cayley graph.
    pub fn same_graph(&self, other: &CayleyBall) -> bool {
        self.model == other.model && self.generators == other.generators
    }

    /// Hex canonical code; used in exports.
    pub fn code_hex(&self, v: usize) -> String {
        hex::encode(self.code(v))
    }

    pub fn write_vertices_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "code", "dist"])?;
        for v in 0..self.len() {
            w.write_record([v.to_string(), self.code_hex(v), self.dist[v].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Undirected edges inside the ball, each once as `(u, v, g)` with
    /// `u < v` and `v = u * g`.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "v", "generator"])?;
        for u in 0..self.len() {
            for g in 0..self.degree() {
                if let Some(v) = self.neighbor(u, g) {
                    if u < v {
                        w.write_record([
                            u.to_string(),
                            v.to_string(),
                            self.generators.elements()[g].to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Boundaries {
    /// `|∂_V K|`: vertices of `K` with a neighbour outside `K`.
    pub vertex: usize,
    /// `|∂_E K|`: undirected edges with exactly one endpoint in `K`.
    pub edge: usize,
}

/// Exact boundary sizes of `set`; every vertex must be off the outer shell so
/// that all its neighbours are known.
pub fn boundaries(ball: &CayleyBall, set: &[usize]) -> Result<Boundaries, CayleyError> {
    let mut inside = FxHashSet::default();
    for &v in set {
        if v >= ball.len() {
            return Err(CayleyError::NoSuchVertex(v));
        }
        if ball.is_shell(v) {
            return Err(CayleyError::TouchesShell {
                vertex: v,
                dist: ball.dist(v),
            });
        }
        inside.insert(v as u32);
    }
    let mut vertex = 0;
    let mut edge = 0;
    for &v in &inside {
        let out = ball
            .neighbor_slots(v as usize)
            .iter()
            .filter(|n| !inside.contains(*n))
            .count();
        edge += out;
        if out > 0 {
            vertex += 1;
        }
    }
    Ok(Boundaries { vertex, edge })
}

/// Sizes `|B(o, n)|` for `n = 0..` until `horizon` or until the size reaches
/// `stop_at`, by layered breadth-first search keeping three spheres.
pub fn growth_sequence(
    model: &GroupModel,
    generators: &GeneratorSet,
    horizon: u32,
    stop_at: u64,
) -> Vec<u64> {
    let id = model.identity();
    let mut prev: FxHashSet<Box<[u8]>> = FxHashSet::default();
    let mut cur: FxHashSet<Box<[u8]>> = FxHashSet::default();
    let mut buf = Vec::new();
    encode_into(&id, &mut buf);
    cur.insert(buf.clone().into_boxed_slice());
    let mut frontier = vec![id];
    let mut sizes = vec![1u64];
    let mut total = 1u64;
    for _ in 0..horizon {
        if total >= stop_at {
            break;
        }
        let mut next_set: FxHashSet<Box<[u8]>> = FxHashSet::default();
        let mut next = Vec::new();
        for x in &frontier {
            for g in generators.elements() {
                let y = model.mul_unchecked(x, g);
                buf.clear();
                encode_into(&y, &mut buf);
                if prev.contains(&buf[..]) || cur.contains(&buf[..]) || next_set.contains(&buf[..])
                {
                    continue;
                }
                next_set.insert(buf.clone().into_boxed_slice());
                next.push(y);
            }
        }
        total += next.len() as u64;
        sizes.push(total);
        prev = std::mem::replace(&mut cur, next_set);
        frontier = next;
    }
    sizes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Radius {
    Finite(u32),
    /// Not reached within the search horizon.
    Infinite,
}

impl Radius {
    pub fn finite(self) -> Option<u32> {
        match self {
            Radius::Finite(r) => Some(r),
            Radius::Infinite => None,
        }
    }
}

pub const SUBSET_DEGREE_CAP: usize = 16;

/// Growth of the full generating set and the minimal growth
/// `𝓑(n) = min |B_H(o, n)|` over symmetric `S' ⊆ S` with `|S'| >= |S|/2`,
/// valid for volume queries up to `bound`.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusFunctions {
    pub horizon: u32,
    pub bound: u64,
    pub full: Vec<u64>,
    pub sub_min: Vec<u64>,
}

impl RadiusFunctions {
    pub fn compute(
        model: &GroupModel,
        generators: &GeneratorSet,
        horizon: u32,
        bound: u64,
    ) -> Result<Self, CayleyError> {
        if horizon == 0 {
            return Err(CayleyError::ZeroHorizon);
        }
        let degree = generators.degree();
        if degree > SUBSET_DEGREE_CAP {
            return Err(CayleyError::DegreeCap {
                degree,
                cap: SUBSET_DEGREE_CAP,
            });
        }
        let pad = |mut s: Vec<u64>| {
            let last = *s.last().expect("nonempty");
            s.resize(horizon as usize + 1, last);
            s
        };
        let full = pad(growth_sequence(model, generators, horizon, bound));
        let classes = generators.classes();
        let mut sub_min: Vec<u64> = full.clone();
        for mask in 1u32..(1u32 << classes.len()) {
            let keep: Vec<usize> = classes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .flat_map(|(_, c)| c.iter().copied())
                .collect();
            if 2 * keep.len() < degree {
                continue;
            }
            let mut keep = keep;
            keep.sort_unstable();
            let sub = generators.subset(model, &keep)?;
            let seq = pad(growth_sequence(model, &sub, horizon, bound));
            for (m, s) in sub_min.iter_mut().zip(seq) {
                *m = (*m).min(s);
            }
        }
        Ok(RadiusFunctions {
            horizon,
            bound,
            full,
            sub_min,
        })
    }

    fn first_reaching(seq: &[u64], m: u64) -> Radius {
        (1..seq.len())
            .find(|&n| seq[n] >= m)
            .map_or(Radius::Infinite, |n| Radius::Finite(n as u32))
    }

    fn check(&self, m: u64) -> Result<(), CayleyError> {
        if m == 0 {
            return Err(CayleyError::ZeroVolume);
        }
        if m > self.bound {
            return Err(CayleyError::VolumeOutOfRange {
                m,
                bound: self.bound,
            });
        }
        Ok(())
    }

    /// `R(m) = min { n >= 1 : |B(o, n)| >= m }`.
    pub fn r(&self, m: u64) -> Result<Radius, CayleyError> {
        self.check(m)?;
        Ok(Self::first_reaching(&self.full, m))
    }

    /// `R̄(m) = min { n >= 1 : 𝓑(n) >= m }`.
    pub fn r_bar(&self, m: u64) -> Result<Radius, CayleyError> {
        self.check(m)?;
        Ok(Self::first_reaching(&self.sub_min, m))
    }
}

pub fn radius_functions(
    model: &GroupModel,
    generators: &GeneratorSet,
    m: u64,
    horizon: u32,
) -> Result<(Radius, Radius), CayleyError> {
    let rf = RadiusFunctions::compute(model, generators, horizon, m.max(1))?;
    Ok((rf.r(m)?, rf.r_bar(m)?))
}

/// `t_n` with `t_1 = 1`, `t_{n+1} = t_n / (4n + 4)`, and
/// `c_n = min(t_n, (4n)^{-n})`, for `n = 1..=n_max`.
pub fn growth_constants(n_max: u32) -> Vec<(BigRational, BigRational)> {
    let mut out = Vec::with_capacity(n_max as usize);
    let mut t = BigRational::one();
    for n in 1..=n_max {
        if n > 1 {
            t /= BigRational::from_integer(BigInt::from(4 * (n - 1) + 4));
        }
        let other = BigRational::new(BigInt::one(), BigInt::from(4 * n).pow(n));
        let c = if t < other { t.clone() } else { other };
        out.push((t.clone(), c));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthVerdict {
    pub n: u32,
    pub size: u64,
    /// `c_n D^n` as a float, for reporting.
    pub bound: f64,
    pub c_n: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub degree: usize,
    pub sizes: Vec<u64>,
    pub verdicts: Vec<GrowthVerdict>,
}

impl GrowthReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

/// Compares `|B(o, n)|` against `c_n D^n` exactly, for `n = 0..=n_max`
/// (`n = 0` is a vacuous pass). Refuses unless `minimality` certifies `S`.
pub fn check_growth_lower(
    ball: &CayleyBall,
    minimality: &Minimality,
    n_max: u32,
) -> Result<GrowthReport, CayleyError> {
    if !minimality.is_certified() {
        return Err(CayleyError::NotCertifiedMinimal(format!("{minimality:?}")));
    }
    if n_max > ball.radius() {
        return Err(CayleyError::RadiusTooSmall {
            need: n_max,
            have: ball.radius(),
        });
    }
    let degree = ball.degree();
    let sizes: Vec<u64> = ball.sizes()[..=n_max as usize]
        .iter()
        .map(|&s| s as u64)
        .collect();
    let mut verdicts = vec![GrowthVerdict {
        n: 0,
        size: 1,
        bound: 0.0,
        c_n: 0.0,
        holds: true,
    }];
    for (i, (_, c)) in growth_constants(n_max).into_iter().enumerate() {
        let n = i as u32 + 1;
        let bound = &c * BigRational::from_integer(BigInt::from(degree).pow(n));
        let size = sizes[n as usize];
        verdicts.push(GrowthVerdict {
            n,
            size,
            bound: bound.to_f64().unwrap_or(f64::NAN),
            c_n: c.to_f64().unwrap_or(f64::NAN),
            holds: BigRational::from_integer(BigInt::from(size)) >= bound,
        });
    }
    Ok(GrowthReport {
        degree,
        sizes,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{check_minimality, standard_generators, symmetrize};

    fn z(d: usize) -> (GroupModel, GeneratorSet) {
        let m = GroupModel::free_abelian(d).unwrap();
        let s = standard_generators(&m);
        (m, s)
    }

    #[test]
    fn small_balls() {
        let (m, s) = z(2);
        assert_eq!(build_ball(&m, &s, 1).unwrap().len(), 5);
        assert_eq!(build_ball(&m, &s, 2).unwrap().len(), 13);
        let f2 = GroupModel::free_group(2).unwrap();
        let b = build_ball(&f2, &standard_generators(&f2), 2).unwrap();
        assert_eq!(b.len(), 17);
        assert_eq!(b.sizes(), &[1, 5, 17]);
    }

    #[test]
    fn budget_error_names_radius() {
        let (m, s) = z(2);
        let err = build_ball_with_budget(&m, &s, 5, 10).unwrap_err();
        assert_eq!(
            err,
            CayleyError::TooLarge {
                radius: 2,
                budget: 10
            }
        );
    }

    #[test]
    fn ball_structure_invariants() {
        let h = GroupModel::heisenberg();
        let ball = build_ball(&h, &standard_generators(&h), 5).unwrap();
        assert_eq!(ball.dist(0), 0);
        for v in 0..ball.len() {
            let d = ball.dist(v);
            let mut has_parent = d == 0;
            for g in 0..ball.degree() {
                if let Some(u) = ball.neighbor(v, g) {
                    assert!(ball.dist(u).abs_diff(d) <= 1);
                    if ball.dist(u) + 1 == d {
                        has_parent = true;
                    }
                    assert_eq!(
                        ball.neighbor(u, ball.generators().inverse_index(g)),
                        Some(v)
                    );
                } else {
                    assert!(ball.is_shell(v));
                }
            }
            assert!(has_parent);
        }
        assert!(ball.sizes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn boundary_examples() {
        let (m, s) = z(2);
        let ball = build_ball(&m, &s, 3).unwrap();
        assert_eq!(
            boundaries(&ball, &[0]).unwrap(),
            Boundaries { vertex: 1, edge: 4 }
        );
        let b1: Vec<usize> = (0..ball.count_within(1)).collect();
        assert_eq!(
            boundaries(&ball, &b1).unwrap(),
            Boundaries {
                vertex: 4,
                edge: 12
            }
        );
        let shell = ball.len() - 1;
        assert!(matches!(
            boundaries(&ball, &[0, shell]),
            Err(CayleyError::TouchesShell { .. })
        ));
    }

    #[test]
    fn radius_function_examples() {
        let (m, s) = z(2);
        let rf = RadiusFunctions::compute(&m, &s, 20, 64).unwrap();
        assert_eq!(rf.r(2).unwrap(), Radius::Finite(1));
        assert_eq!(rf.r(13).unwrap(), Radius::Finite(2));
        assert_eq!(rf.r(8).unwrap(), Radius::Finite(2));
        assert_eq!(rf.r_bar(10).unwrap(), Radius::Finite(5));
        assert_eq!(rf.r_bar(8).unwrap(), Radius::Finite(4));
        assert_eq!(rf.r(1).unwrap(), Radius::Finite(1));
        assert_eq!(rf.r_bar(1).unwrap(), Radius::Finite(1));
        assert!(rf.r(65).is_err());
        assert_eq!(
            radius_functions(&m, &s, 10, 3).unwrap(),
            (Radius::Finite(2), Radius::Infinite)
        );
        assert_eq!(
            radius_functions(&m, &s, 10, 0).unwrap_err(),
            CayleyError::ZeroHorizon
        );
        for n in 0..=20 {
            assert!(rf.sub_min[n] <= rf.full[n]);
        }
    }

    #[test]
    fn growth_constants_recursion() {
        let c = growth_constants(3);
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(c[0], (r(1, 1), r(1, 4)));
        assert_eq!(c[1], (r(1, 8), r(1, 64)));
        assert_eq!(c[2], (r(1, 96), r(1, 1728)));
    }

    #[test]
    fn growth_lower_examples() {
        let (m, s) = z(2);
        let ball = build_ball(&m, &s, 3).unwrap();
        let cert = check_minimality(&m, &s, 3);
        let report = check_growth_lower(&ball, &cert, 3).unwrap();
        assert!(report.all_hold());
        assert_eq!(report.verdicts[1].bound, 1.0);

        let f2 = GroupModel::free_group(2).unwrap();
        let s2 = standard_generators(&f2);
        let ball = build_ball(&f2, &s2, 2).unwrap();
        let report = check_growth_lower(&ball, &check_minimality(&f2, &s2, 2), 2).unwrap();
        assert_eq!(report.verdicts[2].size, 17);
        assert_eq!(report.verdicts[2].bound, 0.25);

        let redundant = symmetrize(
            &m,
            &[
                Element::Vector(vec![1, 0]),
                Element::Vector(vec![0, 1]),
                Element::Vector(vec![1, 1]),
            ],
        )
        .unwrap();
        let ball = build_ball(&m, &redundant, 2).unwrap();
        let verdict = check_minimality(&m, &redundant, 2);
        assert!(check_growth_lower(&ball, &verdict, 2).is_err());
    }

    #[test]
    fn exports_have_headers() {
        let (m, s) = z(1);
        let ball = build_ball(&m, &s, 1).unwrap();
        let mut buf = Vec::new();
        ball.write_vertices_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,code,dist\n0,0000000000000000,0\n"));
        let mut buf = Vec::new();
        ball.write_edges_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
