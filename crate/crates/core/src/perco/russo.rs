//! Monte Carlo checks of the two derivative formulas for `E = {A ↔ Λᶜ}`:
//! `d/dt P[E] = Σ_x P[x closed pivotal]` and
//! `-d/dλ P[E] = ρⁿ(λ) Σ_x P[x closed pivotal | φⁿ_x = λ]`.
//!
//! Finite differences are coupled: both sides of the difference share the
//! uniforms and fields, so each sample contributes an indicator in `{0, 1}`.
//! Counts are integers, which keeps the reduction order-independent.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_clusters, event_holds, hybrid_config, vertex_uniforms, Clusters, Event,
    InterpolationPoint, PercWindow, FLAG_SOURCE, FLAG_TARGET,
};
use crate::error::{GffError, PercoError};
use crate::gff::{condition_on_value, rho, sample_truncated_gff, FieldSample, FieldStack};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RussoVariant {
    /// Derivative in the Bernoulli clock `t`.
    Clock,
    /// Derivative in the level `λ` of the current scale.
    Level,
}

#[derive(Clone, Debug, Serialize)]
pub struct RussoConfig {
    pub variant: RussoVariant,
    pub point: InterpolationPoint,
    pub delta: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RussoSide {
    pub delta: f64,
    pub derivative: f64,
    pub derivative_se: f64,
    pub pivotal: f64,
    pub pivotal_se: f64,
    pub pooled_se: f64,
    /// `|derivative - pivotal| / pooled_se`.
    pub z: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RussoReport {
    pub variant: RussoVariant,
    pub point: InterpolationPoint,
    pub samples: u64,
    /// Steps `δ` and `δ/2`.
    pub sides: Vec<RussoSide>,
    /// The two finite differences agree within three standard errors.
    pub richardson_consistent: bool,
    pub warning: Option<String>,
    /// Both steps agree with the pivotal sum; `false` when no assertion is made.
    pub pass: bool,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    sum: u64,
    sum_sq: u64,
}

impl Moments {
    fn push(&mut self, x: u64) {
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    /// Mean and standard error of the mean.
    fn mean_se(&self, n: u64) -> (f64, f64) {
        let nf = n as f64;
        let mean = self.sum as f64 / nf;
        let var = (self.sum_sq as f64 / nf - mean * mean).max(0.0);
        let var = if n > 1 { var * nf / (nf - 1.0) } else { var };
        (mean, (var / nf).sqrt())
    }
}

/// `x` closed in `open` and opening it realises the event. Clusters of
/// `open` must be current in `uf`.
fn closed_pivotal_at(
    window: &PercWindow,
    open: &[bool],
    event: &Event,
    uf: &mut Clusters,
    x: usize,
) -> bool {
    if open[x] {
        return false;
    }
    let mut flags = 0u8;
    if event.source[x] {
        flags |= FLAG_SOURCE;
    }
    if event.target[x] {
        flags |= FLAG_TARGET;
    }
    for &w in window.neighbors(x) {
        if open[w as usize] {
            flags |= uf.flags(w as usize);
        }
    }
    flags == FLAG_SOURCE | FLAG_TARGET
}

fn check_fields(
    window: &PercWindow,
    point: &InterpolationPoint,
    stack: &FieldStack,
) -> Result<(), PercoError> {
    match window.ball() {
        Some(b) if std::sync::Arc::ptr_eq(b, stack.window()) => {}
        _ => {
            return Err(PercoError::BadModel(
                "fields live on a different window".into(),
            ))
        }
    }
    if point.n < stack.first_scale() || point.n > stack.truncation() {
        return Err(GffError::ScaleLayout.into());
    }
    Ok(())
}

fn draw(
    window: &PercWindow,
    stack: Option<&FieldStack>,
    seed: u64,
    purpose: &str,
    i: u64,
) -> (Vec<f64>, Option<FieldSample>) {
    let mut rng = stream(seed, purpose, i);
    let u = vertex_uniforms(window.len(), &mut rng);
    let f = stack.map(|s| sample_truncated_gff(s, &mut rng));
    (u, f)
}

fn open_bits(point: &InterpolationPoint, u: &[f64], f: Option<&FieldSample>) -> Vec<bool> {
    match f {
        Some(f) => hybrid_config(point, u, f).open,
        None => {
            let p = point.bernoulli_density();
            u.iter().map(|&x| x < p).collect()
        }
    }
}

fn shifted(point: &InterpolationPoint, variant: RussoVariant, h: f64) -> InterpolationPoint {
    match variant {
        RussoVariant::Clock => InterpolationPoint {
            t: point.t + h,
            ..*point
        },
        RussoVariant::Level => InterpolationPoint {
            lambda: point.lambda + h,
            ..*point
        },
    }
}

/// Count of samples where the event holds at the larger parameter value
/// but not the smaller one (for `λ` the order is reversed).
fn finite_difference(
    window: &PercWindow,
    stack: Option<&FieldStack>,
    event: &Event,
    cfg: &RussoConfig,
    delta: f64,
    purpose: &str,
) -> Moments {
    let (lo, hi) = match cfg.variant {
        RussoVariant::Clock => (
            shifted(&cfg.point, cfg.variant, -delta),
            shifted(&cfg.point, cfg.variant, delta),
        ),
        RussoVariant::Level => (
            shifted(&cfg.point, cfg.variant, delta),
            shifted(&cfg.point, cfg.variant, -delta),
        ),
    };
    (0..cfg.samples)
        .into_par_iter()
        .map_init(
            || Clusters::new(window.len()),
            |uf, i| {
                let (u, f) = draw(window, stack, cfg.seed, purpose, i);
                let a = event_holds(window, &open_bits(&hi, &u, f.as_ref()), event, uf);
                let b = event_holds(window, &open_bits(&lo, &u, f.as_ref()), event, uf);
                let mut m = Moments::default();
                // the coupling is monotone, so `b` implies `a`
                m.push(u64::from(a && !b));
                m
            },
        )
        .reduce(Moments::default, Moments::merge)
}

/// Per-sample count of closed-pivotal vertices; for the level variant the
/// scale-`n` field is conditioned on `φⁿ_x = λ` separately for each `x`.
fn pivotal_counts(
    window: &PercWindow,
    stack: Option<&FieldStack>,
    event: &Event,
    cfg: &RussoConfig,
) -> Result<Moments, PercoError> {
    let point = cfg.point;
    (0..cfg.samples)
        .into_par_iter()
        .map_init(
            || Clusters::new(window.len()),
            |uf, i| -> Result<Moments, PercoError> {
                let (u, f) = draw(window, stack, cfg.seed, "russo-pivotal", i);
                let mut count = 0u64;
                match cfg.variant {
                    RussoVariant::Clock => {
                        let open = open_bits(&point, &u, f.as_ref());
                        build_clusters(window, &open, event, uf);
                        if !event_holds_cached(window, &open, event, uf) {
                            count = (0..window.len())
                                .filter(|&x| closed_pivotal_at(window, &open, event, uf, x))
                                .count() as u64;
                        }
                    }
                    RussoVariant::Level => {
                        let stack = stack.expect("level variant has fields");
                        let mut f = f.expect("level variant has fields");
                        let block = &stack.field(point.n).block;
                        let base = f.scale(point.n).to_vec();
                        for x in 0..window.len() {
                            *f.scale_mut(point.n) =
                                condition_on_value(&base, block, x, point.lambda)?;
                            let open = hybrid_config(&point, &u, &f).open;
                            if open[x] {
                                continue;
                            }
                            build_clusters(window, &open, event, uf);
                            if !event_holds_cached(window, &open, event, uf)
                                && closed_pivotal_at(window, &open, event, uf, x)
                            {
                                count += 1;
                            }
                        }
                    }
                }
                let mut m = Moments::default();
                m.push(count);
                Ok(m)
            },
        )
        .try_reduce(Moments::default, |a, b| Ok(a.merge(b)))
}

fn event_holds_cached(
    window: &PercWindow,
    open: &[bool],
    event: &Event,
    uf: &mut Clusters,
) -> bool {
    (0..window.len()).any(|v| open[v] && event.source[v] && uf.flags(v) & FLAG_TARGET != 0)
}

/// Both sides of the chosen formula at steps `δ` and `δ/2`.
pub fn russo_check(
    window: &PercWindow,
    stack: Option<&FieldStack>,
    event: &Event,
    cfg: &RussoConfig,
) -> Result<RussoReport, PercoError> {
    if cfg.samples < 2 {
        return Err(PercoError::NoSamples);
    }
    if !(cfg.delta > 0.0) {
        return Err(PercoError::BadModel(
            "finite-difference step must be positive".into(),
        ));
    }
    let point = InterpolationPoint::new(cfg.point.t, cfg.point.n, cfg.point.lambda)?;
    let scale_factor = match cfg.variant {
        RussoVariant::Clock => {
            if cfg.delta > point.t {
                return Err(PercoError::BadModel(format!(
                    "step {} exceeds t = {}",
                    cfg.delta, point.t
                )));
            }
            if let Some(s) = stack {
                check_fields(window, &point, s)?;
            }
            1.0
        }
        RussoVariant::Level => {
            let s = stack
                .ok_or_else(|| PercoError::BadModel("level derivative needs fields".into()))?;
            check_fields(window, &point, s)?;
            InterpolationPoint::new(point.t, point.n, point.lambda - cfg.delta)?;
            let var = s.field(point.n).variance_at_origin();
            if !(var > 0.0) {
                return Err(GffError::ZeroVariance(point.n).into());
            }
            rho(var, point.lambda)
        }
    };

    let piv = pivotal_counts(window, stack, event, cfg)?;
    let (pm, pse) = piv.mean_se(cfg.samples);
    let (pivotal, pivotal_se) = (pm * scale_factor, pse * scale_factor);

    let mut sides = Vec::new();
    let mut diffs = Vec::new();
    for (k, delta) in [cfg.delta, cfg.delta / 2.0].into_iter().enumerate() {
        let m = finite_difference(window, stack, event, cfg, delta, &format!("russo-fd-{k}"));
        let (mean, se) = m.mean_se(cfg.samples);
        let derivative = mean / (2.0 * delta);
        let derivative_se = se / (2.0 * delta);
        let pooled_se = (derivative_se.powi(2) + pivotal_se.powi(2)).sqrt();
        let gap = (derivative - pivotal).abs();
        let z = if pooled_se > 0.0 {
            gap / pooled_se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        sides.push(RussoSide {
            delta,
            derivative,
            derivative_se,
            pivotal,
            pivotal_se,
            pooled_se,
            z,
            pass: z <= 3.0,
        });
        diffs.push((derivative, derivative_se));
    }
    let (d1, s1) = diffs[0];
    let (d2, s2) = diffs[1];
    let noise = (s1 * s1 + s2 * s2).sqrt();
    let richardson_consistent = (d1 - d2).abs() <= 3.0 * noise || d1 == d2;
    let warning = (!richardson_consistent).then(|| {
        format!("finite differences at δ = {} and δ/2 disagree ({d1} vs {d2}); step too large for the bias bound", cfg.delta)
    });
    let pass = richardson_consistent && sides.iter().all(|s| s.pass);
    Ok(RussoReport {
        variant: cfg.variant,
        point,
        samples: cfg.samples,
        sides,
        richardson_consistent,
        warning,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::build_ball;
    use crate::group::{standard_generators, GroupModel};
    use std::sync::Arc;

    fn window() -> PercWindow {
        let m = GroupModel::free_abelian(2).unwrap();
        PercWindow::from_ball(Arc::new(
            build_ball(&m, &standard_generators(&m), 3).unwrap(),
        ))
    }

    #[test]
    fn sure_event_has_zero_derivative() {
        // A meets the shell and every vertex is open at this clock value.
        let w = window();
        let ev = Event::unchecked(w.shell().to_vec(), w.shell().to_vec());
        let cfg = RussoConfig {
            variant: RussoVariant::Clock,
            point: InterpolationPoint {
                t: 60.0,
                n: 1,
                lambda: 0.0,
            },
            delta: 0.05,
            samples: 200,
            seed: 3,
        };
        let r = russo_check(&w, None, &ev, &cfg).unwrap();
        for s in &r.sides {
            assert_eq!((s.derivative, s.pivotal), (0.0, 0.0));
        }
        assert!(r.pass);
    }

    #[test]
    fn clock_formula_small_run() {
        let w = window();
        let ev = Event::origin_to_shell(&w);
        let t = -(0.4f64).ln();
        let cfg = RussoConfig {
            variant: RussoVariant::Clock,
            point: InterpolationPoint {
                t,
                n: 1,
                lambda: 0.0,
            },
            delta: 0.05,
            samples: 20_000,
            seed: 11,
        };
        let r = russo_check(&w, None, &ev, &cfg).unwrap();
        assert!(r.sides.iter().all(|s| s.z < 4.0), "{r:?}");
    }
}
