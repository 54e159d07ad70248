//! Finite-range Gaussian fields `φⁿ ~ N(0, g_n)`, their truncated sum, and
//! the level/clock schedules of the interpolation.

use std::f64::consts::{LN_2, PI};
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::cayley::{build_ball, CayleyBall};
use crate::error::GffError;
use crate::error::KernelError;
use crate::kernel::{
    block_last_step, declared_range, green_block, green_series, BlockReport, CovarianceBlock,
    GreenSeries, PSD_RELATIVE_TOLERANCE,
};
use crate::linalg;
use crate::perco::PercConfig;

/// `λ_1 = -1 - π²/6`, `λ_n = 1/(n-1)²` for `n >= 2`.
pub fn lambda_n(n: u32) -> f64 {
    assert!(n >= 1, "scales start at 1");
    if n == 1 {
        -1.0 - PI * PI / 6.0
    } else {
        let k = f64::from(n - 1);
        1.0 / (k * k)
    }
}

/// `Σ_{n <= N} λ_n`, which tends to `-1`.
pub fn lambda_partial_sum(n_max: u32) -> f64 {
    // Small terms first to limit rounding.
    let tail: f64 = (2..=n_max).rev().map(lambda_n).sum();
    lambda_n(1) + tail
}

/// `a = P[N(0,1) <= λ_1]`.
pub fn level_one_mass() -> f64 {
    Normal::standard().cdf(lambda_n(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum C0Mode {
    /// `C_0 = 16 / a`.
    Derived,
    Override(f64),
}

impl C0Mode {
    pub fn value(self) -> f64 {
        match self {
            C0Mode::Derived => 16.0 / level_one_mass(),
            C0Mode::Override(c) => c,
        }
    }
}

/// Density of `N(0, var)` at `x`.
pub fn rho(var: f64, x: f64) -> f64 {
    Normal::new(0.0, var.sqrt())
        .expect("positive variance")
        .pdf(x)
}

/// `ln P[N(0,1) > x]`, accurate deep in the upper tail.
pub fn ln_upper_tail(x: f64) -> f64 {
    if x < 30.0 {
        return Normal::standard().sf(x).ln();
    }
    let x2 = x * x;
    -0.5 * x2 - (x * (2.0 * PI).sqrt()).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln P[λ_lo < N(0, var) <= λ_hi]`.
fn ln_mass(var: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    let s = var.sqrt();
    let (a, b) = (lo / s, hi / s);
    if hi == f64::INFINITY {
        return ln_upper_tail(a);
    }
    // P(a < Z <= b) = Q(a) - Q(b) = Q(a)(1 - exp(lnQ(b) - lnQ(a)))
    let qa = ln_upper_tail(a);
    let qb = ln_upper_tail(b);
    qa + (-(qb - qa).exp()).ln_1p()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleTerm {
    pub n: u32,
    pub lambda_n: f64,
    pub g_n_diag: f64,
    /// `ln (C_0 (16D)^{L_n - 1} P[φⁿ_o > λ_n])`.
    pub ln_term: f64,
    pub term: f64,
    /// `ln` of `log 2` plus the terms up to `n`.
    pub ln_partial_t: f64,
    pub partial_t: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationParameters {
    pub n: u32,
    pub lambda: f64,
    pub lambda_n: f64,
    pub rho: f64,
    pub c0: f64,
    pub ln_t: f64,
    pub t: f64,
    /// Terms of `t_∞` over the scales supplied; the series is truncated there.
    pub t_infinity_terms: Vec<ScheduleTerm>,
    pub ln_t_infinity: f64,
    pub t_infinity: f64,
}

fn scale_weight_ln(c0: f64, degree: usize, n: u32) -> f64 {
    c0.ln() + f64::from(block_last_step(n) - 1) * (16.0 * degree as f64).ln()
}

/// `λ_n`, `ρⁿ(λ)`, `t(n, λ)` and the truncated `t_∞`, in log space.
///
/// `t(n, λ) = log 2 + C_0 (16D)^{L_n-1} P[λ_n < φⁿ_o <= λ]
///            + Σ_{k<n} C_0 (16D)^{L_k-1} P[φᵏ_o > λ_k]`.
pub fn interpolation_parameters(
    n: u32,
    lambda: f64,
    degree: usize,
    gn_diag: &[f64],
    c0: C0Mode,
) -> Result<InterpolationParameters, GffError> {
    if n == 0 || gn_diag.len() < n as usize {
        return Err(GffError::ScaleLayout);
    }
    let floor = lambda_n(n);
    if lambda < floor {
        return Err(GffError::BelowFloor {
            scale: n,
            lambda,
            floor,
        });
    }
    let var = gn_diag[n as usize - 1];
    if !(var > 0.0) {
        return Err(GffError::ZeroVariance(n));
    }
    let c0 = c0.value();
    let terms = schedule_terms(degree, gn_diag, C0Mode::Override(c0))?;
    let ln_prior = (n as usize)
        .checked_sub(2)
        .and_then(|i| terms.get(i))
        .map_or(LN_2.ln(), |t| t.ln_partial_t);
    let ln_current = scale_weight_ln(c0, degree, n) + ln_mass(var, floor, lambda);
    let ln_t = ln_add(ln_prior, ln_current);
    let ln_t_infinity = terms.last().map_or(LN_2.ln(), |t| t.ln_partial_t);
    Ok(InterpolationParameters {
        n,
        lambda,
        lambda_n: floor,
        rho: rho(var, lambda),
        c0,
        ln_t,
        t: ln_t.exp(),
        t_infinity_terms: terms,
        ln_t_infinity,
        t_infinity: ln_t_infinity.exp(),
    })
}

/// Per-scale terms of `t_∞ = log 2 + Σ_n C_0 (16D)^{L_n-1} P[φⁿ_o > λ_n]`.
pub fn schedule_terms(
    degree: usize,
    gn_diag: &[f64],
    c0: C0Mode,
) -> Result<Vec<ScheduleTerm>, GffError> {
    let c0 = c0.value();
    let mut ln_partial = LN_2.ln();
    let mut out = Vec::with_capacity(gn_diag.len());
    for (i, &var) in gn_diag.iter().enumerate() {
        let n = i as u32 + 1;
        if !(var > 0.0) {
            return Err(GffError::ZeroVariance(n));
        }
        let lam = lambda_n(n);
        let ln_term = scale_weight_ln(c0, degree, n) + ln_mass(var, lam, f64::INFINITY);
        ln_partial = ln_add(ln_partial, ln_term);
        out.push(ScheduleTerm {
            n,
            lambda_n: lam,
            g_n_diag: var,
            ln_term,
            term: ln_term.exp(),
            ln_partial_t: ln_partial,
            partial_t: ln_partial.exp(),
        });
    }
    Ok(out)
}

pub fn write_schedule_csv<W: Write>(terms: &[ScheduleTerm], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "lambda_n",
        "g_n_diag",
        "term",
        "partial_t",
        "ln_term",
        "ln_partial_t",
    ])?;
    for t in terms {
        w.write_record([
            t.n.to_string(),
            format!("{:.17e}", t.lambda_n),
            format!("{:.17e}", t.g_n_diag),
            format!("{:.17e}", t.term),
            format!("{:.17e}", t.partial_t),
            format!("{:.17e}", t.ln_term),
            format!("{:.17e}", t.ln_partial_t),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A verified block with its symmetric square-root factor `F`, `F Fᵀ = g_n`
/// after clamping eigenvalues in `[-τ, 0)` to zero.
#[derive(Clone, Debug)]
pub struct ScaleField {
    pub block: CovarianceBlock,
    factor: DMatrix<f64>,
    pub clamped: usize,
}

impl ScaleField {
    pub fn new(block: CovarianceBlock, report: &BlockReport) -> Result<Self, GffError> {
        if report.scale != block.scale || report.size != block.size() {
            return Err(GffError::Unverified(block.scale));
        }
        if !report.pass {
            return Err(GffError::NotPsd {
                scale: block.scale,
                min_eig: report.min_eig,
            });
        }
        let tau = PSD_RELATIVE_TOLERANCE * report.norm;
        let mut vecs = block.matrix.clone();
        let vals = linalg::eigen_in_place(&mut vecs).map_err(GffError::Lapack)?;
        if let Some(&min) = vals.first() {
            if min < -tau {
                return Err(GffError::NotPsd {
                    scale: block.scale,
                    min_eig: min,
                });
            }
        }
        let clamped = vals.iter().filter(|&&v| v < 0.0).count();
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
        let mut factor = DMatrix::zeros(block.size(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = vals[i].sqrt();
            factor.set_column(c, &(vecs.column(i) * s));
        }
        Ok(ScaleField {
            block,
            factor,
            clamped,
        })
    }

    pub fn scale(&self) -> u32 {
        self.block.scale
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn window(&self) -> &Arc<CayleyBall> {
        &self.block.window
    }

    /// `g_n(o, o)`.
    pub fn variance_at_origin(&self) -> f64 {
        self.block.matrix[(0, 0)]
    }
}

/// One draw of `φⁿ` on the window.
pub fn sample_field<R: Rng + ?Sized>(field: &ScaleField, rng: &mut R) -> Vec<f64> {
    let xi = DVector::from_iterator(
        field.rank(),
        (0..field.rank()).map(|_| rng.sample(StandardNormal)),
    );
    let v = &field.factor * xi;
    v.as_slice().to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub first_scale: u32,
    /// `φⁿ` for `n = first_scale..`.
    pub scales: Vec<Vec<f64>>,
    pub sum: Vec<f64>,
}

impl FieldSample {
    pub fn truncation(&self) -> u32 {
        self.first_scale + self.scales.len() as u32 - 1
    }

    pub fn scale(&self, n: u32) -> &[f64] {
        &self.scales[(n - self.first_scale) as usize]
    }

    pub fn scale_mut(&mut self, n: u32) -> &mut Vec<f64> {
        &mut self.scales[(n - self.first_scale) as usize]
    }

    pub fn recompute_sum(&mut self) {
        let len = self.scales.first().map_or(0, Vec::len);
        self.sum = (0..len)
            .map(|x| self.scales.iter().map(|s| s[x]).sum())
            .collect();
    }
}

/// Consecutive scale fields on one window.
#[derive(Clone, Debug)]
pub struct FieldStack {
    pub fields: Vec<ScaleField>,
}

impl FieldStack {
    pub fn new(fields: Vec<ScaleField>) -> Result<Self, GffError> {
        if fields.is_empty() {
            return Err(GffError::ScaleLayout);
        }
        let first = fields[0].scale();
        for (i, f) in fields.iter().enumerate() {
            if f.scale() != first + i as u32 || !Arc::ptr_eq(f.window(), fields[0].window()) {
                return Err(GffError::ScaleLayout);
            }
        }
        Ok(FieldStack { fields })
    }

    pub fn first_scale(&self) -> u32 {
        self.fields[0].scale()
    }

    pub fn truncation(&self) -> u32 {
        self.first_scale() + self.fields.len() as u32 - 1
    }

    pub fn window(&self) -> &Arc<CayleyBall> {
        self.fields[0].window()
    }

    pub fn field(&self, n: u32) -> &ScaleField {
        &self.fields[(n - self.first_scale()) as usize]
    }

    pub fn diag(&self) -> Vec<f64> {
        self.fields
            .iter()
            .map(ScaleField::variance_at_origin)
            .collect()
    }
}

/// Green series for scales `1..=n_max` of the window's graph, from a kernel
/// ball of radius `L_{n_max}`.
pub fn window_series(window: &Arc<CayleyBall>, n_max: u32) -> Result<GreenSeries, GffError> {
    let kernel_ball = build_ball(
        window.model(),
        window.generators(),
        block_last_step(n_max.max(1)),
    )
    .map_err(KernelError::from)?;
    Ok(green_series(Arc::new(kernel_ball), n_max)?)
}

/// Verified scale fields `1..=n_max` on `window`.
pub fn field_stack(window: &Arc<CayleyBall>, n_max: u32) -> Result<FieldStack, GffError> {
    let series = window_series(window, n_max)?;
    let fields = (1..=n_max)
        .map(|n| {
            let block = green_block(window, &series, n)?;
            let report = block.verify(&series);
            ScaleField::new(block, &report)
        })
        .collect::<Result<Vec<_>, GffError>>()?;
    FieldStack::new(fields)
}

/// Independent draws of every scale, in scale order, with the cached sum.
pub fn sample_truncated_gff<R: Rng + ?Sized>(stack: &FieldStack, rng: &mut R) -> FieldSample {
    let scales: Vec<Vec<f64>> = stack.fields.iter().map(|f| sample_field(f, rng)).collect();
    let mut s = FieldSample {
        first_scale: stack.first_scale(),
        scales,
        sum: Vec::new(),
    };
    s.recompute_sum();
    s
}

/// One sample per generator, drawing the Gaussians in the same order as
/// [`sample_truncated_gff`]; the products run as one matrix product per scale.
pub fn sample_truncated_batch<R: Rng>(stack: &FieldStack, rngs: &mut [R]) -> Vec<FieldSample> {
    let ranks: Vec<usize> = stack.fields.iter().map(ScaleField::rank).collect();
    let mut xi: Vec<DMatrix<f64>> = ranks
        .iter()
        .map(|&r| DMatrix::zeros(r, rngs.len()))
        .collect();
    for (j, rng) in rngs.iter_mut().enumerate() {
        for (m, &r) in xi.iter_mut().zip(&ranks) {
            for i in 0..r {
                m[(i, j)] = rng.sample(StandardNormal);
            }
        }
    }
    let values: Vec<DMatrix<f64>> = stack
        .fields
        .iter()
        .zip(&xi)
        .map(|(f, x)| &f.factor * x)
        .collect();
    (0..rngs.len())
        .map(|j| {
            let mut s = FieldSample {
                first_scale: stack.first_scale(),
                scales: values
                    .iter()
                    .map(|v| v.column(j).iter().copied().collect())
                    .collect(),
                sum: Vec::new(),
            };
            s.recompute_sum();
            s
        })
        .collect()
}

/// Largest scale whose declared range fits in the window radius.
pub fn default_truncation(window_radius: u32) -> u32 {
    (1..=30)
        .take_while(|&n| declared_range(n) <= window_radius)
        .last()
        .unwrap_or(1)
}

/// `{φ > h}`: open iff the value exceeds `h` strictly.
pub fn excursion(values: &[f64], h: f64) -> PercConfig {
    PercConfig::from_bits(values.iter().map(|&v| v > h).collect())
}

/// `φⁿ + (λ - φⁿ_x) g_n(x, ·) / g_n(x, x)`, a draw of `φⁿ` given `φⁿ_x = λ`.
pub fn condition_on_value(
    values: &[f64],
    block: &CovarianceBlock,
    x: usize,
    lambda: f64,
) -> Result<Vec<f64>, GffError> {
    if x >= block.size() || values.len() != block.size() {
        return Err(GffError::NoSuchVertex(x));
    }
    let gxx = block.matrix[(x, x)];
    if !(gxx > 0.0) {
        return Err(GffError::ZeroVariance(block.scale));
    }
    let shift = lambda - values[x];
    let col = block.matrix.column(x);
    let mut out: Vec<f64> = values
        .iter()
        .zip(col.iter())
        .map(|(&v, &g)| if g == 0.0 { v } else { v + shift * g / gxx })
        .collect();
    out[x] = lambda;
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub truncation: u32,
    pub lambda_sum: f64,
    pub lambda_limit: f64,
    pub vertices: usize,
    /// Vertices with `Σ_{n<=N} φⁿ_x > Σ_{n<=N} λ_n`.
    pub above: usize,
    /// Of those, vertices with no scale `n` having `φⁿ_x > λ_n`.
    pub violations: usize,
}

/// Truncated pigeonhole form of `{φ > -1} ⊂ ∪_n {φⁿ > λ_n}`.
pub fn check_union_domination(
    sample: &FieldSample,
    n_max: u32,
) -> Result<DominationReport, GffError> {
    if sample.first_scale != 1 || n_max == 0 || n_max > sample.truncation() {
        return Err(GffError::ScaleLayout);
    }
    let lambdas: Vec<f64> = (1..=n_max).map(lambda_n).collect();
    let lambda_sum: f64 = lambdas.iter().sum();
    let len = sample.scales[0].len();
    let mut above = 0;
    let mut violations = 0;
    for x in 0..len {
        let total: f64 = (1..=n_max).map(|n| sample.scale(n)[x]).sum();
        if total > lambda_sum {
            above += 1;
            if !(1..=n_max).any(|n| sample.scale(n)[x] > lambdas[n as usize - 1]) {
                violations += 1;
            }
        }
    }
    Ok(DominationReport {
        truncation: n_max,
        lambda_sum,
        lambda_limit: -1.0,
        vertices: len,
        above,
        violations,
    })
}

/// Raw little-endian `f64` dump of the per-scale vectors, row per scale.
pub fn write_field_binary<W: Write>(sample: &FieldSample, mut out: W) -> std::io::Result<()> {
    for s in &sample.scales {
        for v in s {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::build_ball;
    use crate::group::{standard_generators, Element, GroupModel};
    use crate::kernel::{green_block, green_series};
    use crate::rng::stream;

    fn stack_for(model: GroupModel, radius: u32, n_max: u32) -> FieldStack {
        let s = standard_generators(&model);
        let kb = Arc::new(build_ball(&model, &s, block_last_step(n_max)).unwrap());
        let series = green_series(kb, n_max).unwrap();
        let window = Arc::new(build_ball(&model, &s, radius).unwrap());
        let fields = (1..=n_max)
            .map(|n| {
                let b = green_block(&window, &series, n).unwrap();
                let r = b.verify(&series);
                ScaleField::new(b, &r).unwrap()
            })
            .collect();
        FieldStack::new(fields).unwrap()
    }

    #[test]
    fn batch_matches_single_draws() {
        let stack = stack_for(GroupModel::free_abelian(2).unwrap(), 4, 2);
        let mut rngs: Vec<_> = (0..5).map(|i| stream(3, "field", i)).collect();
        let batch = sample_truncated_batch(&stack, &mut rngs);
        for (i, b) in batch.iter().enumerate() {
            let single = sample_truncated_gff(&stack, &mut stream(3, "field", i as u64));
            for (x, y) in b.sum.iter().zip(&single.sum) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schedule_values() {
        assert!((lambda_n(1) + 2.644934).abs() < 1e-6);
        assert_eq!(lambda_n(3), 0.25);
        let a = level_one_mass();
        assert!((a - 4.09e-3).abs() < 5e-5, "{a}");
        let c0 = C0Mode::Derived.value();
        assert!((c0 - 3.91e3).abs() < 10.0, "{c0}");
    }

    #[test]
    fn lambda_series_tends_to_minus_one() {
        for n in [10u32, 100, 1000, 10000] {
            let tail: f64 = (n..200_000)
                .map(|k| 1.0 / (f64::from(k) * f64::from(k)))
                .sum();
            assert!((lambda_partial_sum(n) + 1.0 + tail).abs() < 1e-5 + 1.0 / 200_000.0);
        }
    }

    #[test]
    fn t_is_monotone_in_the_interpolation_order() {
        let diag = [1.0, 0.39, 0.28];
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=3u32 {
            for lam in [lambda_n(n), lambda_n(n) + 0.1, 0.5, 2.0, 50.0] {
                if lam < lambda_n(n) {
                    continue;
                }
                let p = interpolation_parameters(n, lam, 4, &diag, C0Mode::Derived).unwrap();
                assert!(p.ln_t >= prev - 1e-12, "n={n} lam={lam}");
                prev = p.ln_t;
                assert!(p.ln_t <= p.ln_t_infinity + 1e-12);
            }
        }
        let at_floor = interpolation_parameters(1, lambda_n(1), 4, &diag, C0Mode::Derived).unwrap();
        assert!((at_floor.t - LN_2).abs() < 1e-15);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            interpolation_parameters(2, 0.5, 4, &[1.0, 0.3], C0Mode::Derived),
            Err(GffError::BelowFloor { scale: 2, .. })
        ));
        assert!(matches!(
            interpolation_parameters(2, 2.0, 4, &[1.0, 0.0], C0Mode::Derived),
            Err(GffError::ZeroVariance(2))
        ));
    }

    #[test]
    fn density_integrates_to_one() {
        let var = 0.37f64;
        let h = 1e-3;
        let s: f64 = (-20_000..=20_000).map(|i| rho(var, i as f64 * h) * h).sum();
        assert!((s - 1.0).abs() < 1e-8);
        assert!(
            (ln_upper_tail(40.0) - Normal::standard().sf(40.0).ln()).abs() < 1e-6
                || Normal::standard().sf(40.0) == 0.0
        );
        assert!((ln_upper_tail(29.9) - ln_upper_tail(30.1)) > 0.0);
    }

    #[test]
    fn zero_block_gives_zero_field() {
        let stack = stack_for(GroupModel::free_abelian(1).unwrap(), 3, 1);
        let mut block = stack.fields[0].block.clone();
        block.matrix.fill(0.0);
        let kb = Arc::new(build_ball(block.window.model(), block.window.generators(), 1).unwrap());
        let series = green_series(kb, 1).unwrap();
        let report = block.verify(&series);
        let f = ScaleField::new(block, &report).unwrap();
        assert_eq!(f.rank(), 0);
        assert!(sample_field(&f, &mut stream(1, "t", 0))
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn unverified_block_is_refused() {
        let stack = stack_for(GroupModel::free_abelian(1).unwrap(), 3, 1);
        let block = stack.fields[0].block.clone();
        let mut report = block.verify(&{
            let kb =
                Arc::new(build_ball(block.window.model(), block.window.generators(), 1).unwrap());
            green_series(kb, 1).unwrap()
        });
        report.pass = false;
        assert!(ScaleField::new(block, &report).is_err());
    }

    #[test]
    fn conditioning_examples() {
        let stack = stack_for(GroupModel::free_abelian(1).unwrap(), 6, 1);
        let field = &stack.fields[0];
        let w = field.window();
        let x = 0;
        let y3 = w.index_of(&Element::Vector(vec![3])).unwrap();
        let phi = sample_field(field, &mut stream(2, "t", 0));
        let shifted = condition_on_value(&phi, &field.block, x, 0.7).unwrap();
        assert_eq!(shifted[x], 0.7);
        assert_eq!(shifted[y3], phi[y3]);
    }

    #[test]
    fn excursion_examples() {
        let v = [0.5, -1.0, 2.0];
        assert_eq!(excursion(&v, -10.0).open_count(), 3);
        assert_eq!(excursion(&v, 10.0).open_count(), 0);
        assert_eq!(excursion(&v, 0.5).open_count(), 1);
    }

    #[test]
    fn domination_on_samples() {
        let stack = stack_for(GroupModel::free_abelian(2).unwrap(), 4, 2);
        for i in 0..50 {
            let s = sample_truncated_gff(&stack, &mut stream(3, "t", i));
            let r = check_union_domination(&s, 2).unwrap();
            assert_eq!(r.violations, 0);
            let one = check_union_domination(&s, 1).unwrap();
            assert_eq!(one.violations, 0);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let stack = stack_for(GroupModel::free_abelian(2).unwrap(), 3, 2);
        let a = sample_truncated_gff(&stack, &mut stream(9, "gff", 4));
        let b = sample_truncated_gff(&stack, &mut stream(9, "gff", 4));
        assert_eq!(a, b);
        let one = FieldStack::new(vec![stack.fields[0].clone()]).unwrap();
        let c = sample_truncated_gff(&one, &mut stream(9, "gff", 4));
        assert_eq!(c.sum, c.scales[0]);
    }

    #[test]
    fn default_truncation_fits_range() {
        assert_eq!(default_truncation(2), 1);
        assert_eq!(default_truncation(6), 2);
        assert_eq!(default_truncation(13), 2);
        assert_eq!(default_truncation(14), 3);
    }
}
