//! Exhaustive expansion profiles, the two isoperimetric inequalities and the
//! heat-kernel horizon.
//!
//! Connected sets containing the origin are enumerated with Redelmeier's
//! algorithm. The top-level branches (one per neighbour of the origin) run
//! in parallel and their results are merged with a total order, so output
//! does not depend on scheduling.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{CayleyBall, Radius, RadiusFunctions};
use crate::error::{IsopError, KernelError};
use crate::kernel::{Arithmetic, Walk};

/// Largest set size enumerated exhaustively without the heuristic flag.
pub const EXHAUSTIVE_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SetStats {
    pub size: usize,
    pub edge_boundary: usize,
    pub vertex_boundary: usize,
}

struct Enumerator<'a> {
    ball: &'a CayleyBall,
    s_max: usize,
    budget: Option<u64>,
    visited: u64,
    seen: Vec<bool>,
    inside: Vec<bool>,
    set: Vec<u32>,
    internal: usize,
}

impl<'a> Enumerator<'a> {
    fn new(ball: &'a CayleyBall, s_max: usize, budget: Option<u64>) -> Self {
        Enumerator {
            ball,
            s_max,
            budget,
            visited: 0,
            seen: vec![false; ball.len()],
            inside: vec![false; ball.len()],
            set: Vec::with_capacity(s_max),
            internal: 0,
        }
    }

    fn exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.visited >= b)
    }

    fn stats(&self) -> SetStats {
        let d = self.ball.degree();
        let vertex_boundary = self
            .set
            .iter()
            .filter(|&&v| {
                self.ball
                    .neighbor_slots(v as usize)
                    .iter()
                    .any(|&w| !self.inside[w as usize])
            })
            .count();
        SetStats {
            size: self.set.len(),
            edge_boundary: d * self.set.len() - 2 * self.internal,
            vertex_boundary,
        }
    }

    fn push(&mut self, v: u32) {
        let links = self
            .ball
            .neighbor_slots(v as usize)
            .iter()
            .filter(|&&w| self.inside[w as usize])
            .count();
        self.internal += links;
        self.inside[v as usize] = true;
        self.set.push(v);
    }

    fn pop(&mut self) {
        let v = self.set.pop().expect("nonempty");
        self.inside[v as usize] = false;
        let links = self
            .ball
            .neighbor_slots(v as usize)
            .iter()
            .filter(|&&w| self.inside[w as usize])
            .count();
        self.internal -= links;
    }

    /// Adds `v`, reports the set, and extends it from `untried`.
    fn extend(&mut self, v: u32, mut untried: Vec<u32>, visit: &mut dyn FnMut(&[u32], SetStats)) {
        self.push(v);
        self.visited += 1;
        let stats = self.stats();
        visit(&self.set, stats);
        if self.set.len() < self.s_max {
            let mut added = Vec::new();
            for &w in self.ball.neighbor_slots(v as usize) {
                if !self.seen[w as usize] {
                    self.seen[w as usize] = true;
                    added.push(w);
                    untried.push(w);
                }
            }
            while let Some(u) = untried.pop() {
                if self.exhausted() {
                    break;
                }
                self.extend(u, untried.clone(), visit);
            }
            for w in added {
                self.seen[w as usize] = false;
            }
        }
        self.pop();
    }
}

/// Visits every connected vertex set containing the origin of size at most
/// `s_max`. Branches are folded into `A` and merged in branch order.
fn enumerate<A: Send>(
    ball: &CayleyBall,
    s_max: usize,
    budget: Option<u64>,
    init: impl Fn() -> A + Sync,
    visit: impl Fn(&mut A, &[u32], SetStats) + Sync,
    merge: impl Fn(A, A) -> A + Sync,
) -> (A, u64) {
    let mut root = Enumerator::new(ball, s_max, budget);
    let mut acc = init();
    root.push(0);
    root.visited = 1;
    visit(&mut acc, &root.set, root.stats());
    if s_max <= 1 {
        return (acc, 1);
    }
    root.seen[0] = true;
    let mut first: Vec<u32> = Vec::new();
    for &w in ball.neighbor_slots(0) {
        if !root.seen[w as usize] {
            root.seen[w as usize] = true;
            first.push(w);
        }
    }
    // Branch i picks first[len-1-i] with first[..len-1-i] still untried.
    let branches: Vec<(u32, Vec<u32>)> = (0..first.len())
        .rev()
        .map(|j| (first[j], first[..j].to_vec()))
        .collect();
    let run = |(v, untried): &(u32, Vec<u32>), per_branch: Option<u64>| {
        let mut e = Enumerator::new(ball, s_max, per_branch);
        e.seen.clone_from(&root.seen);
        e.push(0);
        let mut a = init();
        e.extend(*v, untried.clone(), &mut |set, stats| {
            visit(&mut a, set, stats)
        });
        (a, e.visited)
    };
    let results: Vec<(A, u64)> = match budget {
        None => branches.par_iter().map(|b| run(b, None)).collect(),
        Some(total) => {
            // Sequential so the cap cuts the enumeration at a fixed point.
            let mut out = Vec::new();
            let mut left = total.saturating_sub(1);
            for b in &branches {
                if left == 0 {
                    break;
                }
                let (a, n) = run(b, Some(left));
                left = left.saturating_sub(n);
                out.push((a, n));
            }
            out
        }
    };
    let mut visited = 1;
    for (a, n) in results {
        acc = merge(acc, a);
        visited += n;
    }
    (acc, visited)
}

/// `boundary / (D * size)` compared exactly.
fn ratio_less(a: (usize, usize), b: (usize, usize)) -> std::cmp::Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

#[derive(Clone, Debug)]
struct Best {
    boundary: usize,
    size: usize,
    set: Vec<u32>,
}

impl Best {
    /// Order: smaller ratio, then smaller size, then smaller sorted set.
    fn beats(&self, boundary: usize, size: usize, set: &[u32]) -> bool {
        match ratio_less((self.boundary, self.size), (boundary, size)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => (self.size, sorted(&self.set)) <= (size, sorted(set)),
        }
    }

    fn better(self, other: Best) -> Best {
        if self.beats(other.boundary, other.size, &other.set) {
            self
        } else {
            other
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileEntry {
    pub u: usize,
    /// `Φ(u)` as `boundary / (D * size)` of the witness.
    pub phi: f64,
    pub witness_boundary: usize,
    pub witness: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionProfileTable {
    pub degree: usize,
    pub entries: Vec<ProfileEntry>,
    /// False when the heuristic budget cut the enumeration short.
    pub exhaustive: bool,
    pub sets_enumerated: u64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProfileOptions {
    /// Allow sizes above [`EXHAUSTIVE_CAP`], visiting at most this many sets.
    pub heuristic_budget: Option<u64>,
}

fn check_sizes(ball: &CayleyBall, s_max: usize, opts: ProfileOptions) -> Result<(), IsopError> {
    if s_max > EXHAUSTIVE_CAP && opts.heuristic_budget.is_none() {
        return Err(IsopError::EnumerationCap {
            requested: s_max,
            cap: EXHAUSTIVE_CAP,
        });
    }
    // A connected set of size s through o reaches distance s - 1 and must
    // stay off the shell.
    if (ball.radius() as usize) < s_max {
        return Err(IsopError::BallTooSmall {
            radius: ball.radius(),
            size: s_max,
            required: s_max as u32,
        });
    }
    Ok(())
}

/// `Φ(u) = min { |∂_E K| / (D |K|) : |K| <= u }` for `u = 1..=s_max`, over
/// connected sets containing the origin.
pub fn expansion_profile(
    ball: &CayleyBall,
    s_max: usize,
    opts: ProfileOptions,
) -> Result<ExpansionProfileTable, IsopError> {
    check_sizes(ball, s_max, opts)?;
    let merge = |a: Vec<Option<Best>>, b: Vec<Option<Best>>| {
        a.into_iter()
            .zip(b)
            .map(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => Some(x.better(y)),
                (x, y) => x.or(y),
            })
            .collect::<Vec<_>>()
    };
    let (per_size, visited) = enumerate(
        ball,
        s_max,
        opts.heuristic_budget,
        || vec![None; s_max + 1],
        |acc: &mut Vec<Option<Best>>, set, stats| {
            let slot = &mut acc[stats.size];
            if slot
                .as_ref()
                .is_some_and(|b| b.beats(stats.edge_boundary, stats.size, set))
            {
                return;
            }
            *slot = Some(Best {
                boundary: stats.edge_boundary,
                size: stats.size,
                set: set.to_vec(),
            });
        },
        merge,
    );
    let degree = ball.degree();
    let mut entries = Vec::with_capacity(s_max);
    let mut running: Option<Best> = None;
    for best in per_size.into_iter().skip(1) {
        if let Some(b) = best {
            running = Some(match running {
                Some(r) => r.better(b),
                None => b,
            });
        }
        let r = running.as_ref().expect("size 1 is always enumerated");
        let mut witness: Vec<usize> = r.set.iter().map(|&v| v as usize).collect();
        witness.sort_unstable();
        entries.push(ProfileEntry {
            u: entries.len() + 1,
            phi: r.boundary as f64 / (degree * r.size) as f64,
            witness_boundary: r.boundary,
            witness,
        });
    }
    let exhaustive = opts.heuristic_budget.is_none_or(|b| visited < b);
    Ok(ExpansionProfileTable {
        degree,
        entries,
        exhaustive,
        sets_enumerated: visited,
    })
}

impl ExpansionProfileTable {
    pub fn write_csv<W: Write>(&self, ball: &CayleyBall, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "phi", "witness_size", "witness_codes"])?;
        for e in &self.entries {
            let codes: Vec<String> = e.witness.iter().map(|&v| ball.code_hex(v)).collect();
            w.write_record([
                e.u.to_string(),
                format!("{:.17e}", e.phi),
                e.witness.len().to_string(),
                codes.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Slack {
    pub slack: f64,
    pub ratio: f64,
    pub bound: f64,
    pub set: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub checked: u64,
    /// Sets whose radius function is infinite within the horizon (bound 0).
    pub vacuous: u64,
    pub failures: u64,
    pub worst: Option<Slack>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsopReport {
    pub s_max: usize,
    pub degree: usize,
    pub sets: u64,
    /// `|∂_E K| / (D|K|) >= 1 / (16 R̄(2|K|))`.
    pub edge: InequalityReport,
    /// `|∂_V K| / |K| >= 1 / (2 R(2|K|))`.
    pub vertex: InequalityReport,
    pub pass: bool,
}

/// `lhs - bound` as an exact fraction `(num, den)` with `den > 0`.
fn slack_of(lhs: (usize, usize), bound: (usize, usize)) -> (i128, i128) {
    let num = lhs.0 as i128 * bound.1 as i128 - bound.0 as i128 * lhs.1 as i128;
    (num, lhs.1 as i128 * bound.1 as i128)
}

fn slack_cmp(a: (i128, i128), b: (i128, i128)) -> std::cmp::Ordering {
    (a.0 * b.1).cmp(&(b.0 * a.1))
}

#[derive(Clone, Debug)]
struct Worst {
    slack: (i128, i128),
    set: Vec<u32>,
    lhs: (usize, usize),
    bound: (usize, usize),
}

#[derive(Clone, Debug, Default)]
struct Tally {
    checked: u64,
    vacuous: u64,
    failures: u64,
    worst: Option<Worst>,
}

impl Tally {
    fn record(&mut self, set: &[u32], lhs: (usize, usize), bound: Option<(usize, usize)>) {
        let Some(bound) = bound else {
            self.vacuous += 1;
            return;
        };
        self.checked += 1;
        let slack = slack_of(lhs, bound);
        if slack.0 < 0 {
            self.failures += 1;
        }
        let replace = match &self.worst {
            None => true,
            Some(w) => match slack_cmp(slack, w.slack) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => sorted(set) < sorted(&w.set),
            },
        };
        if replace {
            self.worst = Some(Worst {
                slack,
                set: set.to_vec(),
                lhs,
                bound,
            });
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.vacuous += other.vacuous;
        self.failures += other.failures;
        if let Some(w) = other.worst {
            let replace = match &self.worst {
                None => true,
                Some(cur) => match slack_cmp(w.slack, cur.slack) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => sorted(&w.set) < sorted(&cur.set),
                },
            };
            if replace {
                self.worst = Some(w);
            }
        }
        self
    }

    fn report(self) -> InequalityReport {
        InequalityReport {
            checked: self.checked,
            vacuous: self.vacuous,
            failures: self.failures,
            worst: self.worst.map(|w| Slack {
                slack: w.slack.0 as f64 / w.slack.1 as f64,
                ratio: w.lhs.0 as f64 / w.lhs.1 as f64,
                bound: w.bound.0 as f64 / w.bound.1 as f64,
                set: sorted(&w.set).into_iter().map(|v| v as usize).collect(),
            }),
        }
    }
}

fn sorted(v: &[u32]) -> Vec<u32> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Checks both isoperimetric inequalities on every connected set of size at
/// most `s_max` containing the origin, exactly by cross-multiplication.
pub fn check_isop_inequalities(
    ball: &CayleyBall,
    s_max: usize,
    radii: &RadiusFunctions,
) -> Result<IsopReport, IsopError> {
    check_sizes(ball, s_max, ProfileOptions::default())?;
    let degree = ball.degree();
    let mut r_of = vec![Radius::Infinite; s_max + 1];
    let mut rbar_of = vec![Radius::Infinite; s_max + 1];
    for s in 1..=s_max {
        r_of[s] = radii.r(2 * s as u64)?;
        rbar_of[s] = radii.r_bar(2 * s as u64)?;
    }
    let ((edge, vertex), sets) = enumerate(
        ball,
        s_max,
        None,
        || (Tally::default(), Tally::default()),
        |(edge, vertex): &mut (Tally, Tally), set, st| {
            let s = st.size;
            edge.record(
                set,
                (st.edge_boundary, degree * s),
                rbar_of[s].finite().map(|r| (1, 16 * r as usize)),
            );
            vertex.record(
                set,
                (st.vertex_boundary, s),
                r_of[s].finite().map(|r| (1, 2 * r as usize)),
            );
        },
        |(e1, v1), (e2, v2)| (e1.merge(e2), v1.merge(v2)),
    );
    let edge = edge.report();
    let vertex = vertex.report();
    let pass = edge.failures == 0 && vertex.failures == 0;
    Ok(IsopReport {
        s_max,
        degree,
        sets,
        edge,
        vertex,
        pass,
    })
}

const SIMPSON_TOLERANCE: f64 = 1e-10;

fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[derive(Clone, Debug, Serialize)]
pub struct Horizon {
    pub epsilon: f64,
    pub integral: f64,
    pub n_star: u64,
}

/// `n* = ceil(1 + ∫_1^{4/ε} 16 du / (u φ(u)^2))`, integrated in `s = ln u`
/// piecewise between the breakpoints of `φ` (points where it may jump).
pub fn heat_bound_horizon(
    phi: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    epsilon: f64,
) -> Result<Horizon, IsopError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(IsopError::BadEpsilon(epsilon));
    }
    let top = 4.0 / epsilon;
    let mut cuts: Vec<f64> = vec![0.0];
    for &b in breakpoints {
        if b > 1.0 && b < top {
            cuts.push(b.ln());
        }
    }
    cuts.push(top.ln().max(0.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) * 1e-12;
        let mut bad = None;
        let f = |s: f64| {
            let u = s.clamp(a + h, b - h).exp();
            let p = phi(u);
            if !(p > 0.0) {
                return f64::NAN;
            }
            16.0 / (p * p)
        };
        // Probe for a vanishing profile before integrating.
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let s = a + t * (b - a);
            if !(phi(s.clamp(a + h, b - h).exp()) > 0.0) {
                bad = Some(s.exp());
            }
        }
        if let Some(u) = bad {
            return Err(IsopError::InfiniteHorizon(u));
        }
        let piece = adaptive_simpson(&f, a, b, SIMPSON_TOLERANCE * (b - a));
        if !piece.is_finite() {
            return Err(IsopError::InfiniteHorizon(b.exp()));
        }
        integral += piece;
    }
    Ok(Horizon {
        epsilon,
        integral,
        n_star: (1.0 + integral).ceil() as u64,
    })
}

/// The lower bound `φ(u) = 1/(16 R̄(2u))` as a step function, with its
/// breakpoints `𝓑(n)/2`.
pub fn lemma_profile(radii: &RadiusFunctions) -> (impl Fn(f64) -> f64 + '_, Vec<f64>) {
    let phi = move |u: f64| {
        let m = (2.0 * u).ceil().max(1.0) as u64;
        if m > radii.bound {
            return 0.0;
        }
        match radii.r_bar(m) {
            Ok(Radius::Finite(r)) => 1.0 / (16.0 * r as f64),
            _ => 0.0,
        }
    };
    let breaks = radii.sub_min.iter().map(|&b| b as f64 / 2.0).collect();
    (phi, breaks)
}

#[derive(Clone, Debug, Serialize)]
pub struct PnRow {
    pub epsilon: f64,
    pub n_star: u64,
    pub integral: f64,
    /// Exact `max_y p_{n*}(o, y)` when the ball contains the walk.
    pub direct_max: Option<f64>,
    /// Smallest even `2m <= n*` with `p_{2m}(o, o) <= ε`; since
    /// `max_y p_n(o, y) <= p_{2m}(o, o)` for all `n >= 2m`, this certifies
    /// the bound at `n*`.
    pub certificate_steps: Option<u32>,
    pub certificate_value: Option<String>,
    pub holds: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PnReport {
    pub rows: Vec<PnRow>,
    /// `max_y p_j(o, y)` for `j = 0..=R`, exact.
    pub decay: Vec<f64>,
    pub pass: bool,
}

/// Checks `max_y p_{n*}(o, y) <= ε` with `n*` from the lemma-derived profile.
pub fn check_theorem_pn(
    ball: &CayleyBall,
    radii: &RadiusFunctions,
    epsilons: &[f64],
) -> Result<PnReport, IsopError> {
    let d = ball.degree() as u128;
    // counts of p_j(o, ·) and returns p_{2j}(o,o) = Σ_y p_j(o,y)^2.
    let mut walk = Walk::new(ball, 0, Arithmetic::Exact)?;
    let mut decay = Vec::new();
    let mut returns: Vec<Option<(u32, BigRational)>> = Vec::new();
    let mut rows_max: Vec<BigRational> = Vec::new();
    loop {
        let row = walk.row();
        let j = walk.steps();
        let crate::kernel::KernelValues::Exact(c) = &row.values else {
            unreachable!()
        };
        let den = BigInt::from(d).pow(j);
        let max = c.iter().copied().max().unwrap_or(0);
        let max_r = BigRational::new(BigInt::from(max), den.clone());
        decay.push(max_r.to_f64().unwrap_or(f64::NAN));
        rows_max.push(max_r);
        let sq: BigInt = c.iter().map(|&v| BigInt::from(v) * BigInt::from(v)).sum();
        returns.push(Some((2 * j, BigRational::new(sq, &den * &den))));
        if j == walk.horizon() {
            break;
        }
        match walk.step() {
            Ok(()) => {}
            Err(KernelError::Overflow { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    let (phi, breaks) = lemma_profile(radii);
    let mut rows = Vec::new();
    for &eps in epsilons {
        let h = heat_bound_horizon(&phi, &breaks, eps)?;
        let eps_r = BigRational::from_f64(eps).ok_or(IsopError::BadEpsilon(eps))?;
        let direct = usize::try_from(h.n_star)
            .ok()
            .filter(|&n| n < rows_max.len());
        let direct_max = direct.map(|n| decay[n]);
        let direct_ok = direct.map(|n| rows_max[n] <= eps_r);
        let cert = returns
            .iter()
            .flatten()
            .find(|(steps, v)| u64::from(*steps) <= h.n_star && *v <= eps_r)
            .cloned();
        let holds = direct_ok.unwrap_or(false) || cert.is_some();
        let note = (!holds).then(|| {
            format!(
                "no exact certificate within radius {}; need a larger ball or n* = {} steps",
                ball.radius(),
                h.n_star
            )
        });
        rows.push(PnRow {
            epsilon: eps,
            n_star: h.n_star,
            integral: h.integral,
            direct_max,
            certificate_steps: cert.as_ref().map(|c| c.0),
            certificate_value: cert.as_ref().map(|c| c.1.to_string()),
            holds,
            note,
        });
    }
    let pass = rows.iter().all(|r| r.holds);
    Ok(PnReport { rows, decay, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{boundaries, build_ball};
    use crate::group::{standard_generators, GroupModel};

    fn ball(model: GroupModel, r: u32) -> CayleyBall {
        let s = standard_generators(&model);
        build_ball(&model, &s, r).unwrap()
    }

    /// Fixed polyominoes by size, each counted once per cell placed at o.
    const FIXED_POLYOMINOES: [u64; 8] = [1, 2, 6, 19, 63, 216, 760, 2725];

    #[test]
    fn counts_match_polyomino_oracle() {
        let b = ball(GroupModel::free_abelian(2).unwrap(), 8);
        for s in 1..=8 {
            let (counts, _) = enumerate(
                &b,
                s,
                None,
                || vec![0u64; s + 1],
                |acc: &mut Vec<u64>, _, st| acc[st.size] += 1,
                |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            );
            assert_eq!(counts[s], FIXED_POLYOMINOES[s - 1] * s as u64, "size {s}");
        }
    }

    #[test]
    fn tree_subtree_counts() {
        // Subtrees of the 4-regular tree containing the root: 1, 4, 18, 88.
        let b = ball(GroupModel::free_group(2).unwrap(), 4);
        let (counts, _) = enumerate(
            &b,
            4,
            None,
            || vec![0u64; 5],
            |acc: &mut Vec<u64>, _, st| acc[st.size] += 1,
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
        assert_eq!(&counts[1..], &[1, 4, 18, 88]);
    }

    #[test]
    fn profile_examples() {
        let b = ball(GroupModel::free_abelian(2).unwrap(), 6);
        let t = expansion_profile(&b, 5, ProfileOptions::default()).unwrap();
        assert_eq!(t.entries[0].phi, 1.0);
        assert_eq!(t.entries[4].phi, 0.5);
        assert_eq!(t.entries[4].witness.len(), 4);
        assert_eq!(t.entries[4].witness_boundary, 8);
        assert!(t.entries.windows(2).all(|w| w[1].phi <= w[0].phi));
        for e in &t.entries {
            let bd = boundaries(&b, &e.witness).unwrap();
            assert_eq!(bd.edge, e.witness_boundary);
            assert!(e.witness.len() <= e.u);
        }
        assert!(t.exhaustive);
    }

    #[test]
    fn cap_and_ball_size_errors() {
        let b = ball(GroupModel::free_abelian(2).unwrap(), 4);
        assert!(matches!(
            expansion_profile(&b, 13, ProfileOptions::default()),
            Err(IsopError::EnumerationCap {
                requested: 13,
                cap: 12
            })
        ));
        assert!(matches!(
            expansion_profile(&b, 5, ProfileOptions::default()),
            Err(IsopError::BallTooSmall { required: 5, .. })
        ));
        let capped = expansion_profile(
            &b,
            4,
            ProfileOptions {
                heuristic_budget: Some(10),
            },
        )
        .unwrap();
        assert!(!capped.exhaustive);
    }

    /// Brute force over every subset of the ball interior.
    fn full_profile(b: &CayleyBall, u_max: usize) -> Vec<(usize, usize)> {
        let interior: Vec<usize> = (0..b.len()).filter(|&v| !b.is_shell(v)).collect();
        assert!(interior.len() <= 14);
        let mut best = vec![(usize::MAX, 1usize); u_max + 1];
        for mask in 1u32..(1 << interior.len()) {
            let set: Vec<usize> = (0..interior.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| interior[i])
                .collect();
            if set.len() > u_max {
                continue;
            }
            let e = boundaries(b, &set).unwrap().edge;
            for u in set.len()..=u_max {
                if best[u].0 == usize::MAX || e * best[u].1 < best[u].0 * set.len() {
                    best[u] = (e, set.len());
                }
            }
        }
        best
    }

    #[test]
    fn restriction_to_connected_sets_loses_nothing() {
        for (model, r, u) in [
            (GroupModel::free_abelian(2).unwrap(), 3, 3),
            (GroupModel::free_group(2).unwrap(), 2, 2),
            (GroupModel::free_abelian(1).unwrap(), 7, 7),
        ] {
            let b = ball(model, r);
            let full = full_profile(&b, u);
            let t = expansion_profile(&b, u, ProfileOptions::default()).unwrap();
            for e in &t.entries {
                let (num, den) = full[e.u];
                assert_eq!(e.witness_boundary * den, num * e.witness.len());
            }
        }
    }

    #[test]
    fn isop_examples() {
        let m = GroupModel::free_abelian(2).unwrap();
        let s = standard_generators(&m);
        let b = build_ball(&m, &s, 5).unwrap();
        let rf = RadiusFunctions::compute(&m, &s, 64, 16).unwrap();
        assert_eq!(rf.r_bar(8).unwrap(), Radius::Finite(4));
        assert_eq!(rf.r(8).unwrap(), Radius::Finite(2));
        let rep = check_isop_inequalities(&b, 4, &rf).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.edge.vacuous, 0);
        assert_eq!(rep.sets, 1 + 4 + 18 + 76);
    }

    #[test]
    fn horizon_closed_form() {
        let phi0 = 0.3;
        let c = |_: f64| phi0;
        for eps in [0.5, 0.1, 0.01] {
            let h = heat_bound_horizon(&c, &[], eps).unwrap();
            let exact = 16.0 / (phi0 * phi0) * (4.0 / eps).ln();
            assert!((h.integral - exact).abs() <= 1e-6 * exact);
            assert_eq!(h.n_star, (1.0 + exact).ceil() as u64);
        }
        assert_eq!(heat_bound_horizon(&c, &[], 4.0).unwrap().n_star, 1);
        assert!(matches!(
            heat_bound_horizon(&c, &[], 0.0),
            Err(IsopError::BadEpsilon(_))
        ));
        let vanish = |u: f64| if u > 2.0 { 0.0 } else { 1.0 };
        assert!(matches!(
            heat_bound_horizon(&vanish, &[2.0], 0.5),
            Err(IsopError::InfiniteHorizon(_))
        ));
    }

    #[test]
    fn horizon_step_profile_matches_piecewise_sum() {
        let m = GroupModel::free_abelian(2).unwrap();
        let s = standard_generators(&m);
        let rf = RadiusFunctions::compute(&m, &s, 64, 64).unwrap();
        let (phi, breaks) = lemma_profile(&rf);
        let h = heat_bound_horizon(&phi, &breaks, 1.0).unwrap();
        // R̄(2u) = ceil((2u - 1) / 2) for B(n) = 2n + 1; pieces on (1, 4].
        let pieces = [
            (1.0f64, 1.5f64, 1.0f64),
            (1.5, 2.5, 2.0),
            (2.5, 3.5, 3.0),
            (3.5, 4.0, 4.0),
        ];
        let exact: f64 = pieces
            .iter()
            .map(|(a, b, r)| 4096.0 * r * r * (b / a).ln())
            .sum();
        assert!((h.integral - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn pn_check_examples() {
        let m = GroupModel::free_abelian(2).unwrap();
        let s = standard_generators(&m);
        let b = build_ball(&m, &s, 6).unwrap();
        let rf = RadiusFunctions::compute(&m, &s, 128, 64).unwrap();
        let rep = check_theorem_pn(&b, &rf, &[1.0, 0.5]).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.rows[0].certificate_steps, Some(0));
        assert_eq!(rep.rows[1].certificate_steps, Some(2));
        assert_eq!(rep.decay[1], 0.25);
        assert!(rep.decay.iter().all(|&p| p <= 1.0));
    }
}
