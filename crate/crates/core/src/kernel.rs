//! Heat kernels of the simple random walk, the dyadic Green blocks `g_n`
//! and their verification.
//!
//! Walks are propagated by pulling mass over the ball's adjacency. Starting
//! from a vertex `x`, after `k` steps the support lies in `B(o, dist(x) + k)`,
//! which is a prefix of the breadth-first vertex order, so each step only
//! touches that prefix.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::cayley::{CayleyBall, STUB};
use crate::error::KernelError;
use crate::group::Minimality;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    /// Integer walk counts; `p_n(x, y) = count / D^n`.
    Exact,
    Float,
}

#[derive(Clone, Debug)]
pub enum KernelValues {
    Exact(Vec<u128>),
    Float(Vec<f64>),
}

/// `p_n(x, ·)` over the vertices of a ball.
#[derive(Clone, Debug)]
pub struct KernelRow {
    pub base: usize,
    pub steps: u32,
    pub degree: usize,
    pub values: KernelValues,
}

impl KernelRow {
    pub fn is_exact(&self) -> bool {
        matches!(self.values, KernelValues::Exact(_))
    }

    pub fn len(&self) -> usize {
        match &self.values {
            KernelValues::Exact(v) => v.len(),
            KernelValues::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `D^n`, when it fits.
    pub fn denominator(&self) -> Option<u128> {
        (self.degree as u128).checked_pow(self.steps)
    }

    pub fn count(&self, y: usize) -> Option<u128> {
        match &self.values {
            KernelValues::Exact(v) => Some(v[y]),
            KernelValues::Float(_) => None,
        }
    }

    pub fn prob(&self, y: usize) -> f64 {
        match &self.values {
            KernelValues::Exact(v) => v[y] as f64 / (self.degree as f64).powi(self.steps as i32),
            KernelValues::Float(v) => v[y],
        }
    }

    /// Exact value; `None` in float mode.
    pub fn ratio(&self, y: usize) -> Option<BigRational> {
        let c = self.count(y)?;
        let den = BigInt::from(self.degree).pow(self.steps);
        Some(BigRational::new(BigInt::from(c), den))
    }

    /// Vertex maximising `p_n(x, ·)` (first in vertex order on ties).
    pub fn argmax(&self) -> usize {
        match &self.values {
            KernelValues::Exact(v) => {
                let mut best = 0;
                for (i, &c) in v.iter().enumerate() {
                    if c > v[best] {
                        best = i;
                    }
                }
                best
            }
            KernelValues::Float(v) => {
                let mut best = 0;
                for (i, &c) in v.iter().enumerate() {
                    if c > v[best] {
                        best = i;
                    }
                }
                best
            }
        }
    }

    /// Exact mass test in exact mode, `|Σ - 1| <= 1e-12` otherwise.
    pub fn conserves_mass(&self) -> bool {
        match &self.values {
            KernelValues::Exact(v) => {
                let total = v.iter().try_fold(0u128, |a, &c| a.checked_add(c));
                total.is_some() && total == self.denominator()
            }
            KernelValues::Float(v) => (v.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
        }
    }
}

/// Simple random walk from a fixed base vertex, one step at a time.
pub struct Walk<'a> {
    ball: &'a CayleyBall,
    base: usize,
    steps: u32,
    cur: KernelValues,
    next: KernelValues,
}

impl<'a> Walk<'a> {
    pub fn new(
        ball: &'a CayleyBall,
        base: usize,
        arithmetic: Arithmetic,
    ) -> Result<Self, KernelError> {
        if base >= ball.len() {
            return Err(crate::error::CayleyError::NoSuchVertex(base).into());
        }
        let n = ball.len();
        let (mut cur, next) = match arithmetic {
            Arithmetic::Exact => (
                KernelValues::Exact(vec![0; n]),
                KernelValues::Exact(vec![0; n]),
            ),
            Arithmetic::Float => (
                KernelValues::Float(vec![0.0; n]),
                KernelValues::Float(vec![0.0; n]),
            ),
        };
        match &mut cur {
            KernelValues::Exact(v) => v[base] = 1,
            KernelValues::Float(v) => v[base] = 1.0,
        }
        Ok(Walk {
            ball,
            base,
            steps: 0,
            cur,
            next,
        })
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn values(&self) -> &KernelValues {
        &self.cur
    }

    /// Largest step count the ball keeps exact.
    pub fn horizon(&self) -> u32 {
        self.ball.radius() - self.ball.dist(self.base)
    }

    fn prefix(&self, steps: u32) -> usize {
        self.ball
            .count_within(self.ball.dist(self.base).saturating_add(steps))
    }

    pub fn step(&mut self) -> Result<(), KernelError> {
        let dist = self.ball.dist(self.base);
        if self.steps + 1 > self.horizon() {
            return Err(KernelError::NotContained {
                steps: self.steps + 1,
                dist,
                radius: self.ball.radius(),
                required: dist + self.steps + 1,
            });
        }
        let limit = self.prefix(self.steps + 1);
        let ball = self.ball;
        match (&self.cur, &mut self.next) {
            (KernelValues::Exact(cur), KernelValues::Exact(next)) => {
                let overflow = next[..limit]
                    .par_iter_mut()
                    .enumerate()
                    .map(|(w, out)| {
                        let mut acc = 0u128;
                        for &s in ball.neighbor_slots(w) {
                            if s != STUB {
                                match acc.checked_add(cur[s as usize]) {
                                    Some(a) => acc = a,
                                    None => return true,
                                }
                            }
                        }
                        *out = acc;
                        false
                    })
                    .reduce(|| false, |a, b| a || b);
                if overflow {
                    return Err(KernelError::Overflow {
                        steps: self.steps + 1,
                    });
                }
            }
            (KernelValues::Float(cur), KernelValues::Float(next)) => {
                let inv = 1.0 / ball.degree() as f64;
                next[..limit]
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(w, out)| {
                        let mut acc = 0.0;
                        for &s in ball.neighbor_slots(w) {
                            if s != STUB {
                                acc += cur[s as usize];
                            }
                        }
                        *out = acc * inv;
                    });
            }
            _ => unreachable!("walk buffers share one arithmetic"),
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.steps += 1;
        Ok(())
    }

    pub fn row(&self) -> KernelRow {
        KernelRow {
            base: self.base,
            steps: self.steps,
            degree: self.ball.degree(),
            values: self.cur.clone(),
        }
    }
}

/// `p_n(x, ·)`, refusing unless `B(x, n)` lies inside the ball.
pub fn heat_kernel(
    ball: &CayleyBall,
    x: usize,
    n: u32,
    arithmetic: Arithmetic,
) -> Result<KernelRow, KernelError> {
    let mut walk = Walk::new(ball, x, arithmetic)?;
    if n > walk.horizon() {
        return Err(KernelError::NotContained {
            steps: n,
            dist: ball.dist(x),
            radius: ball.radius(),
            required: ball.dist(x) + n,
        });
    }
    for _ in 0..n {
        walk.step()?;
    }
    Ok(walk.row())
}

/// `L_n = 2^{n+1} - 3`: the largest walk length in block `n`.
pub fn block_last_step(n: u32) -> u32 {
    (1u32 << (n + 1)) - 3
}

/// First walk length in block `n`, `2^n - 2`.
pub fn block_first_step(n: u32) -> u32 {
    (1u32 << n) - 2
}

/// Declared range `2^{n+1} - 2` beyond which `g_n` vanishes.
pub fn declared_range(n: u32) -> u32 {
    (1u32 << (n + 1)) - 2
}

/// Block index of walk length `k`.
pub fn block_of_step(k: u32) -> u32 {
    31 - (k + 2).leading_zeros()
}

/// `G_n(z) = g_n(o, z) = Σ_{2^n-2 <= k < 2^{n+1}-2} p_k(o, z)` for
/// `n = 1..=N` on a ball about `o`. By translation invariance
/// `g_n(x, y) = G_n(x^{-1} y)`.
#[derive(Clone, Debug)]
pub struct GreenSeries {
    ball: Arc<CayleyBall>,
    scales: Vec<Vec<f64>>,
}

pub fn green_series(ball: Arc<CayleyBall>, n_max: u32) -> Result<GreenSeries, KernelError> {
    if n_max == 0 {
        return Err(KernelError::ZeroScale);
    }
    let need = block_last_step(n_max);
    if ball.radius() < need {
        return Err(KernelError::ScaleOutOfRange {
            scale: n_max,
            have: ball.radius(),
            need,
        });
    }
    let mut scales = vec![vec![0.0; ball.len()]; n_max as usize];
    let mut walk = Walk::new(&ball, 0, Arithmetic::Float)?;
    for k in 0..=need {
        if k > 0 {
            walk.step()?;
        }
        let KernelValues::Float(p) = walk.values() else {
            unreachable!()
        };
        let acc = &mut scales[block_of_step(k) as usize - 1];
        let limit = ball.count_within(k);
        acc[..limit]
            .par_iter_mut()
            .zip(&p[..limit])
            .for_each(|(a, v)| *a += v);
    }
    drop(walk);
    Ok(GreenSeries { ball, scales })
}

impl GreenSeries {
    pub fn ball(&self) -> &Arc<CayleyBall> {
        &self.ball
    }

    pub fn max_scale(&self) -> u32 {
        self.scales.len() as u32
    }

    /// `G_n` over the series ball.
    pub fn scale(&self, n: u32) -> &[f64] {
        &self.scales[n as usize - 1]
    }

    /// `g_n(o, o)`.
    pub fn diag(&self, n: u32) -> f64 {
        self.scale(n)[0]
    }

    fn check_scale(&self, n: u32) -> Result<(), KernelError> {
        if n == 0 {
            return Err(KernelError::ZeroScale);
        }
        if n > self.max_scale() {
            return Err(KernelError::ScaleOutOfRange {
                scale: n,
                have: self.ball.radius(),
                need: block_last_step(n),
            });
        }
        Ok(())
    }
}

/// `g_n` restricted to a window.
#[derive(Clone, Debug)]
pub struct CovarianceBlock {
    pub scale: u32,
    pub declared_range: u32,
    pub window: Arc<CayleyBall>,
    pub matrix: DMatrix<f64>,
}

struct Marks {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<(u32, u32, u32)>,
}

impl Marks {
    fn new(n: usize) -> Self {
        Marks {
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.epoch += 1;
        self.queue.clear();
    }

    fn seen(&self, v: usize) -> bool {
        self.stamp[v] == self.epoch
    }

    fn mark(&mut self, v: usize) {
        self.stamp[v] = self.epoch;
    }
}

/// Visits `(y, z = x^{-1} y, d)` for window vertices `y` within `depth` steps
/// of `x` along paths inside the window, tracking `z` in `kernel` when given.
fn window_bfs(
    window: &CayleyBall,
    kernel: Option<&CayleyBall>,
    x: usize,
    depth: u32,
    marks: &mut Marks,
    mut visit: impl FnMut(usize, u32, u32),
) {
    marks.reset();
    marks.mark(x);
    marks.queue.push((x as u32, 0, 0));
    let mut head = 0;
    while head < marks.queue.len() {
        let (y, z, d) = marks.queue[head];
        head += 1;
        visit(y as usize, z, d);
        if d == depth {
            continue;
        }
        for (g, &slot) in window.neighbor_slots(y as usize).iter().enumerate() {
            if slot == STUB || marks.seen(slot as usize) {
                continue;
            }
            marks.mark(slot as usize);
            let z2 = match kernel {
                Some(k) => {
                    k.neighbor(z as usize, g)
                        .expect("kernel ball covers the search depth") as u32
                }
                None => 0,
            };
            marks.queue.push((slot, z2, d + 1));
        }
    }
}

/// Assembles `g_n` on `window` from the translation-invariant series.
pub fn green_block(
    window: &Arc<CayleyBall>,
    series: &GreenSeries,
    n: u32,
) -> Result<CovarianceBlock, KernelError> {
    series.check_scale(n)?;
    if !window.same_graph(series.ball()) {
        return Err(KernelError::IncompatibleBalls);
    }
    let kernel = series.ball().as_ref();
    let values = series.scale(n);
    let depth = block_last_step(n);
    let size = window.len();
    let convex = window.is_geodesically_convex();
    let model = window.model();
    let mut matrix = DMatrix::<f64>::zeros(size, size);
    matrix
        .as_mut_slice()
        .par_chunks_mut(size.max(1))
        .enumerate()
        .for_each_init(
            || Marks::new(size),
            |marks, (x, col)| {
                window_bfs(window, Some(kernel), x, depth, marks, |y, z, _| {
                    col[y] = values[z as usize];
                });
                if !convex {
                    let x_inv = model.inv_unchecked(window.element(x));
                    for (y, entry) in col.iter_mut().enumerate() {
                        if !marks.seen(y) {
                            let z = model.mul_unchecked(&x_inv, window.element(y));
                            if let Some(zi) = kernel.index_of(&z) {
                                *entry = values[zi];
                            }
                        }
                    }
                }
            },
        );
    Ok(CovarianceBlock {
        scale: n,
        declared_range: declared_range(n),
        window: window.clone(),
        matrix,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdMethod {
    /// Smallest eigenvalue from a dense symmetric eigensolver.
    Eigenvalues,
    /// Cholesky succeeds on `g + τ I`, certifying `λ_min > -τ`.
    ShiftedCholesky,
}

/// Windows above this size use the shifted Cholesky certificate.
pub const DENSE_EIGEN_LIMIT: usize = 4000;

pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub scale: u32,
    pub size: usize,
    pub norm: f64,
    pub psd_method: PsdMethod,
    /// Smallest eigenvalue, or `-τ` when certified by Cholesky.
    pub min_eig: f64,
    pub psd_pass: bool,
    pub min_entry: f64,
    pub nonneg_pass: bool,
    /// Largest `|g_n(x, y)|` with `d(x, y) > 2^{n+1} - 2`.
    pub range_violation: f64,
    pub range_pass: bool,
    pub max_asymmetry: f64,
    pub symmetric_pass: bool,
    pub pass: bool,
}

impl CovarianceBlock {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Checks symmetry, nonnegativity and range, then positive
    /// semi-definiteness on a copy.
    pub fn verify(&self, series: &GreenSeries) -> BlockReport {
        let mut report = self.entry_checks(series);
        let mut work = self.matrix.clone();
        psd_check(&mut work, &mut report);
        report
    }

    /// As [`verify`](Self::verify) but factorises in place, dropping the
    /// matrix; for windows too large to copy.
    pub fn into_report(self, series: &GreenSeries) -> BlockReport {
        let mut report = self.entry_checks(series);
        let CovarianceBlock { mut matrix, .. } = self;
        psd_check(&mut matrix, &mut report);
        report
    }

    fn entry_checks(&self, series: &GreenSeries) -> BlockReport {
        let m = &self.matrix;
        let size = self.size();
        let norm = linalg::max_abs(m);
        let min_entry = m.iter().copied().fold(f64::INFINITY, f64::min);
        let min_entry = if size == 0 { 0.0 } else { min_entry };
        let max_asymmetry = (0..size)
            .into_par_iter()
            .map(|j| (0..j).fold(0.0f64, |a, i| a.max((m[(i, j)] - m[(j, i)]).abs())))
            .reduce(|| 0.0, f64::max);
        let range_violation = self.range_violation(series);
        BlockReport {
            scale: self.scale,
            size,
            norm,
            psd_method: PsdMethod::Eigenvalues,
            min_eig: f64::NAN,
            psd_pass: false,
            min_entry,
            nonneg_pass: min_entry >= 0.0,
            range_violation,
            range_pass: range_violation == 0.0,
            max_asymmetry,
            symmetric_pass: max_asymmetry <= 1e-12 * norm.max(f64::MIN_POSITIVE),
            pass: false,
        }
    }

    /// Distances come from breadth-first search inside the window; entries
    /// at larger window distance fall back to group arithmetic unless the
    /// window is geodesically convex.
    fn range_violation(&self, series: &GreenSeries) -> f64 {
        let window = self.window.as_ref();
        let size = self.size();
        let range = self.declared_range;
        let convex = window.is_geodesically_convex();
        let model = window.model();
        let kernel = series.ball();
        let data = self.matrix.as_slice();
        data.par_chunks(size.max(1))
            .enumerate()
            .map_init(
                || Marks::new(size),
                |marks, (x, col)| {
                    window_bfs(window, None, x, range, marks, |_, _, _| {});
                    let x_inv = model.inv_unchecked(window.element(x));
                    let mut worst = 0.0f64;
                    for (y, &v) in col.iter().enumerate() {
                        if v == 0.0 || marks.seen(y) {
                            continue;
                        }
                        let near = !convex && {
                            let z = model.mul_unchecked(&x_inv, window.element(y));
                            kernel
                                .index_of(&z)
                                .is_some_and(|zi| kernel.dist(zi) <= range)
                        };
                        if !near {
                            worst = worst.max(v.abs());
                        }
                    }
                    worst
                },
            )
            .reduce(|| 0.0, f64::max)
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "value"])?;
        let m = &self.matrix;
        for j in 0..self.size() {
            for i in 0..self.size() {
                let v = m[(i, j)];
                if v != 0.0 {
                    w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn psd_check(work: &mut DMatrix<f64>, report: &mut BlockReport) {
    let tau = PSD_RELATIVE_TOLERANCE * report.norm;
    if work.nrows() <= DENSE_EIGEN_LIMIT {
        report.psd_method = PsdMethod::Eigenvalues;
        match linalg::eigenvalues_in_place(work) {
            Ok(w) => {
                report.min_eig = w.first().copied().unwrap_or(0.0);
                report.psd_pass = report.min_eig >= -tau;
            }
            Err(_) => report.psd_pass = false,
        }
    } else {
        report.psd_method = PsdMethod::ShiftedCholesky;
        for i in 0..work.nrows() {
            work[(i, i)] += tau;
        }
        report.psd_pass = linalg::cholesky_in_place(work).is_ok();
        report.min_eig = if report.psd_pass { -tau } else { f64::NAN };
    }
    report.pass =
        report.psd_pass && report.nonneg_pass && report.range_pass && report.symmetric_pass;
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScaleOutcome {
    Verified(BlockReport),
    Skipped {
        scale: u32,
        required_radius: u32,
        reason: String,
    },
}

impl ScaleOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ScaleOutcome::Verified(r) if r.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub outcomes: Vec<ScaleOutcome>,
    pub pass: bool,
}

/// Verifies already assembled blocks.
pub fn verify_blocks(blocks: &[CovarianceBlock], series: &GreenSeries) -> VerificationReport {
    let outcomes: Vec<ScaleOutcome> = blocks
        .iter()
        .map(|b| ScaleOutcome::Verified(b.verify(series)))
        .collect();
    let pass = outcomes.iter().all(ScaleOutcome::passed);
    VerificationReport { outcomes, pass }
}

/// Assembles and verifies scales one at a time, keeping at most one block in
/// memory. Scales beyond the series are skipped; nothing is verified then.
pub fn verify_scales(
    window: &Arc<CayleyBall>,
    series: &GreenSeries,
    scales: impl IntoIterator<Item = u32>,
) -> Result<VerificationReport, KernelError> {
    let mut outcomes = Vec::new();
    for n in scales {
        match green_block(window, series, n) {
            Ok(block) => outcomes.push(ScaleOutcome::Verified(block.into_report(series))),
            Err(KernelError::ScaleOutOfRange { scale, have, need }) => {
                outcomes.push(ScaleOutcome::Skipped {
                    scale,
                    required_radius: need,
                    reason: format!("kernel ball radius {have} < {need}"),
                })
            }
            Err(e) => return Err(e),
        }
    }
    let pass = !outcomes.is_empty() && outcomes.iter().all(ScaleOutcome::passed);
    Ok(VerificationReport { outcomes, pass })
}

/// Ratio `g_N(o,o) / g_{N-1}(o,o)` at or above which the partial sums are
/// flagged as not converging.
pub const RECURRENCE_RATIO: f64 = 0.85;

#[derive(Clone, Debug, Serialize)]
pub struct GreenTruncated {
    pub scales: u32,
    /// `Σ_{n <= N} g_n(o, y)` for every window vertex `y`.
    pub partial: Vec<f64>,
    /// `g_n(o, o)` for `n = 1..=N`.
    pub increments: Vec<f64>,
    pub last_increment: f64,
    pub recurrence_warning: bool,
}

pub fn green_truncated(
    window: &CayleyBall,
    series: &GreenSeries,
    n: u32,
) -> Result<GreenTruncated, KernelError> {
    series.check_scale(n)?;
    if !window.same_graph(series.ball()) {
        return Err(KernelError::IncompatibleBalls);
    }
    let kernel = series.ball();
    let partial = (0..window.len())
        .map(|y| match kernel.index_of(window.element(y)) {
            Some(z) => (1..=n).map(|k| series.scale(k)[z]).sum(),
            None => 0.0,
        })
        .collect();
    let increments: Vec<f64> = (1..=n).map(|k| series.diag(k)).collect();
    let recurrence_warning = increments
        .windows(2)
        .last()
        .is_some_and(|w| w[1] >= w[0] || w[1] / w[0] >= RECURRENCE_RATIO);
    Ok(GreenTruncated {
        scales: n,
        partial,
        last_increment: *increments.last().expect("n >= 1"),
        increments,
        recurrence_warning,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnRow {
    pub n: u32,
    pub argmax: usize,
    pub max_count: String,
    pub max_prob: f64,
    pub one_over_d: bool,
    /// `None` when `n < 4` or the generating set is not certified minimal.
    pub six_over_d2: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnReport {
    pub degree: usize,
    pub rows: Vec<ReturnRow>,
    pub six_over_d2_skipped: Option<String>,
    pub pass: bool,
}

/// Exact check of `p_n(o, y) <= 1/D` for `n >= 1` and `p_n(o, y) <= 6/D^2`
/// for `n >= 4`, comparing integer walk counts.
pub fn return_prob_checks(
    ball: &CayleyBall,
    minimality: &Minimality,
    n_max: u32,
) -> Result<ReturnReport, KernelError> {
    let d = ball.degree() as u128;
    let mut walk = Walk::new(ball, 0, Arithmetic::Exact)?;
    if n_max > walk.horizon() {
        return Err(KernelError::NotContained {
            steps: n_max,
            dist: 0,
            radius: ball.radius(),
            required: n_max,
        });
    }
    let certified = minimality.is_certified();
    let mut rows = Vec::new();
    for n in 1..=n_max {
        walk.step()?;
        let row = walk.row();
        let y = row.argmax();
        let c = row.count(y).expect("exact");
        let overflow = KernelError::Overflow { steps: n };
        let dn = d.checked_pow(n).ok_or(overflow.clone())?;
        let one_over_d = c.checked_mul(d).ok_or(overflow.clone())? <= dn;
        let six_over_d2 = (certified && n >= 4)
            .then(|| {
                let lhs = c.checked_mul(d * d)?;
                let rhs = dn.checked_mul(6)?;
                Some(lhs <= rhs)
            })
            .map(|v| v.ok_or(overflow))
            .transpose()?;
        rows.push(ReturnRow {
            n,
            argmax: y,
            max_count: c.to_string(),
            max_prob: row.prob(y),
            one_over_d,
            six_over_d2,
        });
    }
    let six_over_d2_skipped =
        (!certified).then(|| format!("generating set not certified minimal: {minimality:?}"));
    let pass = rows
        .iter()
        .all(|r| r.one_over_d && r.six_over_d2 != Some(false));
    Ok(ReturnReport {
        degree: ball.degree(),
        rows,
        six_over_d2_skipped,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::build_ball;
    use crate::group::{check_minimality, standard_generators, symmetrize, Element, GroupModel};

    fn ball(model: GroupModel, r: u32) -> CayleyBall {
        let s = standard_generators(&model);
        build_ball(&model, &s, r).unwrap()
    }

    fn z(d: usize, r: u32) -> CayleyBall {
        ball(GroupModel::free_abelian(d).unwrap(), r)
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |a, i| a * (n - i) / (i + 1))
    }

    #[test]
    fn kernel_examples() {
        let b = z(1, 6);
        let row = heat_kernel(&b, 0, 2, Arithmetic::Exact).unwrap();
        assert_eq!(row.ratio(0).unwrap(), BigRational::new(1.into(), 2.into()));
        let b2 = z(2, 4);
        let e1 = b2.index_of(&Element::Vector(vec![1, 0])).unwrap();
        assert_eq!(
            heat_kernel(&b2, 0, 1, Arithmetic::Float).unwrap().prob(e1),
            0.25
        );
        assert_eq!(
            heat_kernel(&b2, 0, 3, Arithmetic::Exact).unwrap().count(0),
            Some(0)
        );
    }

    #[test]
    fn binomial_oracle_on_z() {
        let b = z(1, 12);
        for n in 0..=12u32 {
            let row = heat_kernel(&b, 0, n, Arithmetic::Exact).unwrap();
            assert!(row.conserves_mass());
            for v in 0..b.len() {
                let Element::Vector(x) = b.element(v) else {
                    unreachable!()
                };
                let x = x[0];
                let expect = if (n as i64 + x) % 2 == 0 && x.unsigned_abs() <= n as u64 {
                    binom(n as u64, ((n as i64 + x) / 2) as u64) as u128
                } else {
                    0
                };
                assert_eq!(row.count(v), Some(expect), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn containment_is_enforced() {
        let b = z(2, 3);
        let e1 = b.index_of(&Element::Vector(vec![1, 0])).unwrap();
        assert!(heat_kernel(&b, e1, 2, Arithmetic::Exact).is_ok());
        assert_eq!(
            heat_kernel(&b, e1, 3, Arithmetic::Exact).unwrap_err(),
            KernelError::NotContained {
                steps: 3,
                dist: 1,
                radius: 3,
                required: 4
            }
        );
    }

    #[test]
    fn kernel_symmetry_between_rows() {
        let h = GroupModel::heisenberg();
        let b = ball(h, 6);
        let x = 3;
        let rx = heat_kernel(&b, x, 4, Arithmetic::Float).unwrap();
        let ro = heat_kernel(&b, 0, 4, Arithmetic::Float).unwrap();
        assert!((rx.prob(0) - ro.prob(x)).abs() < 1e-12);
        assert!(rx.conserves_mass());
    }

    #[test]
    fn block_index_bookkeeping() {
        assert_eq!(block_of_step(0), 1);
        assert_eq!(block_of_step(1), 1);
        assert_eq!(block_of_step(2), 2);
        assert_eq!(block_of_step(5), 2);
        assert_eq!(block_of_step(6), 3);
        assert_eq!(block_last_step(3), 13);
        assert_eq!(declared_range(1), 2);
    }

    #[test]
    fn green_block_examples() {
        let zb = Arc::new(z(1, block_last_step(3)));
        let series = green_series(zb.clone(), 3).unwrap();
        assert_eq!(series.diag(1), 1.0);
        assert_eq!(series.diag(2), 7.0 / 8.0);

        let window = Arc::new(z(1, 5));
        let g1 = green_block(&window, &series, 1).unwrap();
        let far = window.index_of(&Element::Vector(vec![3])).unwrap();
        assert_eq!(g1.matrix[(0, far)], 0.0);
        assert_eq!(g1.matrix[(0, 0)], 1.0);
        let one = window.index_of(&Element::Vector(vec![1])).unwrap();
        assert_eq!(g1.matrix[(0, one)], 0.5);
        let report = g1.verify(&series);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn block_consistency_with_walk_sum() {
        for model in [
            GroupModel::free_abelian(2).unwrap(),
            GroupModel::free_group(2).unwrap(),
        ] {
            let n_max = 3;
            let kb = Arc::new(ball(model, block_last_step(n_max)));
            let series = green_series(kb.clone(), n_max).unwrap();
            let mut walk = Walk::new(&kb, 0, Arithmetic::Float).unwrap();
            let mut direct = 1.0;
            for n in 1..=n_max {
                while walk.steps() < block_last_step(n) {
                    walk.step().unwrap();
                    let KernelValues::Float(p) = walk.values() else {
                        unreachable!()
                    };
                    direct += p[0];
                }
                let blocks: f64 = (1..=n).map(|k| series.diag(k)).sum();
                assert_eq!(blocks, direct);
            }
        }
    }

    #[test]
    fn corrupted_block_is_flagged() {
        let kb = Arc::new(z(2, block_last_step(2)));
        let series = green_series(kb, 2).unwrap();
        let window = Arc::new(z(2, 4));
        let mut block = green_block(&window, &series, 2).unwrap();
        assert!(block.verify(&series).pass);
        block.matrix[(0, 1)] = -block.matrix[(0, 1)];
        let r = block.verify(&series);
        assert!(!r.nonneg_pass && !r.pass);
    }

    #[test]
    fn injected_range_fault_is_flagged() {
        let kb = Arc::new(z(2, block_last_step(1)));
        let series = green_series(kb, 1).unwrap();
        let window = Arc::new(z(2, 4));
        let mut block = green_block(&window, &series, 1).unwrap();
        let far = window.index_of(&Element::Vector(vec![3, 0])).unwrap();
        block.matrix[(0, far)] = 1e-3;
        block.matrix[(far, 0)] = 1e-3;
        let r = block.verify(&series);
        assert_eq!(r.range_violation, 1e-3);
        assert!(!r.range_pass);
    }

    #[test]
    fn skipped_scale_reports_radius() {
        let kb = Arc::new(z(2, block_last_step(2)));
        let series = green_series(kb, 2).unwrap();
        let window = Arc::new(z(2, 3));
        let report = verify_scales(&window, &series, 1..=3).unwrap();
        assert!(report.outcomes[0].passed() && report.outcomes[1].passed());
        assert!(matches!(
            report.outcomes[2],
            ScaleOutcome::Skipped {
                required_radius: 13,
                ..
            }
        ));
        assert!(!report.pass);
    }

    #[test]
    fn heisenberg_blocks_match_direct_arithmetic() {
        let h = GroupModel::heisenberg();
        let kb = Arc::new(ball(h.clone(), block_last_step(2)));
        let series = green_series(kb.clone(), 2).unwrap();
        let window = Arc::new(ball(h.clone(), 3));
        let block = green_block(&window, &series, 2).unwrap();
        for x in 0..window.len() {
            for y in 0..window.len() {
                let z = h
                    .multiply(&h.inverse(window.element(x)).unwrap(), window.element(y))
                    .unwrap();
                let expect = kb.index_of(&z).map_or(0.0, |zi| series.scale(2)[zi]);
                assert_eq!(block.matrix[(y, x)], expect);
            }
        }
        assert!(block.verify(&series).pass);
    }

    #[test]
    fn green_truncated_examples() {
        let kb = Arc::new(z(2, block_last_step(4)));
        let series = green_series(kb.clone(), 4).unwrap();
        let window = z(2, 3);
        let one = green_truncated(&window, &series, 1).unwrap();
        assert_eq!(one.partial[0], 1.0);
        assert!(!one.recurrence_warning);
        let four = green_truncated(&window, &series, 4).unwrap();
        assert!(four.recurrence_warning);
        assert!(four.partial.iter().zip(&one.partial).all(|(a, b)| a >= b));
    }

    #[test]
    fn return_checks_examples() {
        let zb = z(1, 10);
        let cert = check_minimality(zb.model(), zb.generators(), 4);
        let r = return_prob_checks(&zb, &cert, 10).unwrap();
        assert!(r.pass);
        assert_eq!(r.rows[3].max_prob, 0.375);
        assert_eq!(r.rows[0].max_prob, 0.5);

        let f = ball(GroupModel::free_group(2).unwrap(), 6);
        let cert = check_minimality(f.model(), f.generators(), 4);
        let r = return_prob_checks(&f, &cert, 6).unwrap();
        let p2 = heat_kernel(&f, 0, 2, Arithmetic::Exact).unwrap();
        assert_eq!(p2.ratio(0).unwrap(), BigRational::new(1.into(), 4.into()));
        assert!(r.pass && r.rows[1].one_over_d);

        let m = GroupModel::free_abelian(2).unwrap();
        let s = symmetrize(
            &m,
            &[
                Element::Vector(vec![1, 0]),
                Element::Vector(vec![0, 1]),
                Element::Vector(vec![1, 1]),
            ],
        )
        .unwrap();
        let b = build_ball(&m, &s, 5).unwrap();
        let r = return_prob_checks(&b, &check_minimality(&m, &s, 3), 5).unwrap();
        assert!(r.six_over_d2_skipped.is_some());
        assert!(r.rows.iter().all(|row| row.six_over_d2.is_none()));
    }
}
