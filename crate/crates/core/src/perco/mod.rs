//! Site percolation on finite windows: sampling, clusters, pivotal vertices
//! and the experiments built on them.
//!
//! Events have the form `A ↔ Λᶜ`: some open vertex of `A` is joined by an
//! open path to some open vertex of the window outside `Λ`. Since `Λ` avoids
//! the window shell, every such path is seen inside the window.

mod comparison;
mod pc;
mod russo;
mod window;

pub use comparison::{comparison_experiment, ComparisonReport, ComparisonRow};
pub use pc::{
    pc_estimate, quotient_experiment, threshold_between, threshold_sample, CurvePoint, PcEstimate,
    PcEvent, PcSize, QuotientReport, WindowFamily,
};
pub use russo::{russo_check, RussoConfig, RussoReport, RussoSide, RussoVariant};
pub use window::PercWindow;

use petgraph::unionfind::UnionFind;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GffError, PercoError};
use crate::gff::{lambda_n, sample_truncated_gff, FieldSample, FieldStack};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Closed,
    /// Opened by the Bernoulli layer `ω⁰`.
    Bernoulli,
    /// Opened by the current scale, `φⁿ > λ`.
    Scale(u32),
    /// Opened by a tail scale, `φᵏ > λ_k`.
    Tail(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PercConfig {
    pub open: Vec<bool>,
    pub provenance: Option<Vec<Provenance>>,
}

impl PercConfig {
    pub fn from_bits(open: Vec<bool>) -> Self {
        PercConfig {
            open,
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }

    /// Provenance implies the open bit, and every open vertex has a source.
    pub fn provenance_consistent(&self) -> bool {
        self.provenance.as_ref().is_none_or(|p| {
            p.iter()
                .zip(&self.open)
                .all(|(s, &o)| (*s != Provenance::Closed) == o)
        })
    }
}

/// Open clusters of a configuration, with per-cluster flags recording
/// whether the cluster meets the source set and the target set.
#[derive(Clone, Debug)]
pub struct Clusters {
    uf: UnionFind<u32>,
    flags: Vec<u8>,
}

pub const FLAG_SOURCE: u8 = 1;
pub const FLAG_TARGET: u8 = 2;

impl Clusters {
    pub fn new(n: usize) -> Self {
        Clusters {
            uf: UnionFind::new(n),
            flags: vec![0; n],
        }
    }

    pub fn root(&mut self, x: usize) -> usize {
        self.uf.find_mut(x as u32) as usize
    }

    pub fn flags(&mut self, x: usize) -> u8 {
        let r = self.root(x);
        self.flags[r]
    }
}

/// Membership masks for the event `A ↔ Λᶜ` on a window.
#[derive(Clone, Debug)]
pub struct Event {
    pub source: Vec<bool>,
    /// Window vertices outside `Λ`.
    pub target: Vec<bool>,
}

impl Event {
    /// Checks `A ⊆ Λ ⊆ interior` and builds the masks.
    pub fn new(window: &PercWindow, a: &[usize], lambda: &[usize]) -> Result<Self, PercoError> {
        let n = window.len();
        let mut in_lambda = vec![false; n];
        for &v in lambda {
            if v >= n {
                return Err(crate::error::CayleyError::NoSuchVertex(v).into());
            }
            if window.is_shell(v) {
                return Err(PercoError::RegionTouchesShell);
            }
            in_lambda[v] = true;
        }
        let mut source = vec![false; n];
        for &v in a {
            if v >= n || !in_lambda[v] {
                return Err(PercoError::SourceOutsideRegion);
            }
            source[v] = true;
        }
        Ok(Event {
            source,
            target: in_lambda.iter().map(|&b| !b).collect(),
        })
    }

    /// `A = {o}`, `Λ` = the window interior, so `Λᶜ` is the shell.
    pub fn origin_to_shell(window: &PercWindow) -> Self {
        let n = window.len();
        let mut source = vec![false; n];
        source[window.origin()] = true;
        Event {
            source,
            target: (0..n).map(|v| window.is_shell(v)).collect(),
        }
    }

    /// Same masks without the region check; `A` may meet the target.
    pub fn unchecked(source: Vec<bool>, target: Vec<bool>) -> Self {
        Event { source, target }
    }
}

/// Clusters of open vertices with source/target flags.
pub fn build_clusters(window: &PercWindow, open: &[bool], event: &Event, cl: &mut Clusters) {
    let n = window.len();
    cl.uf = UnionFind::new(n);
    cl.flags.clear();
    cl.flags.resize(n, 0);
    for v in 0..n {
        if open[v] {
            for &w in window.neighbors(v) {
                if (w as usize) < v && open[w as usize] {
                    cl.uf.union(v as u32, w);
                }
            }
        }
    }
    for v in 0..n {
        if open[v] {
            let f = (u8::from(event.source[v]) * FLAG_SOURCE)
                | (u8::from(event.target[v]) * FLAG_TARGET);
            if f != 0 {
                let r = cl.root(v);
                cl.flags[r] |= f;
            }
        }
    }
}

pub fn event_holds(window: &PercWindow, open: &[bool], event: &Event, uf: &mut Clusters) -> bool {
    build_clusters(window, open, event, uf);
    (0..window.len()).any(|v| open[v] && event.source[v] && uf.flags(v) & FLAG_TARGET != 0)
}

/// Cluster label per vertex (`u32::MAX` for closed vertices) and whether an
/// open vertex of `a` shares a cluster with an open vertex of `b`.
pub fn clusters_and_connectivity(
    window: &PercWindow,
    config: &PercConfig,
    a: &[usize],
    b: &[usize],
) -> (Vec<u32>, bool) {
    let n = window.len();
    let mut source = vec![false; n];
    let mut target = vec![false; n];
    a.iter().for_each(|&v| source[v] = true);
    b.iter().for_each(|&v| target[v] = true);
    let event = Event::unchecked(source, target);
    let mut uf = Clusters::new(n);
    let connected = event_holds(window, &config.open, &event, &mut uf);
    let labels = (0..n)
        .map(|v| {
            if config.open[v] {
                uf.root(v) as u32
            } else {
                u32::MAX
            }
        })
        .collect();
    (labels, connected)
}

/// Breadth-first connectivity, used as an independent check.
pub fn connected_bfs(window: &PercWindow, open: &[bool], a: &[usize], b: &[usize]) -> bool {
    let n = window.len();
    let mut target = vec![false; n];
    b.iter().for_each(|&v| target[v] = true);
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = a.iter().copied().filter(|&v| open[v]).collect();
    queue.iter().for_each(|&v| seen[v] = true);
    while let Some(v) = queue.pop() {
        if target[v] {
            return true;
        }
        for &w in window.neighbors(v) {
            let w = w as usize;
            if open[w] && !seen[w] {
                seen[w] = true;
                queue.push(w);
            }
        }
    }
    false
}

/// One uniform per vertex in vertex order.
pub fn vertex_uniforms<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

pub fn bernoulli_sample<R: Rng + ?Sized>(
    window: &PercWindow,
    p: f64,
    rng: &mut R,
) -> Result<PercConfig, PercoError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PercoError::BadProbability(p));
    }
    let u = vertex_uniforms(window.len(), rng);
    Ok(PercConfig::from_bits(u.iter().map(|&x| x < p).collect()))
}

/// Point `(t, n, λ)` of the interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationPoint {
    pub t: f64,
    pub n: u32,
    pub lambda: f64,
}

impl InterpolationPoint {
    pub fn new(t: f64, n: u32, lambda: f64) -> Result<Self, PercoError> {
        if !(t >= 0.0) {
            return Err(PercoError::BadModel(format!("clock t = {t} must be >= 0")));
        }
        if n == 0 {
            return Err(PercoError::BadModel("scale n must be >= 1".into()));
        }
        let floor = lambda_n(n);
        if lambda < floor {
            return Err(GffError::BelowFloor {
                scale: n,
                lambda,
                floor,
            }
            .into());
        }
        Ok(InterpolationPoint { t, n, lambda })
    }

    pub fn bernoulli_density(&self) -> f64 {
        -(-self.t).exp_m1()
    }
}

/// `ω⁰ ∪ {φⁿ > λ} ∪ ∪_{n<k<=N} {φᵏ > λ_k}` from vertex uniforms and scales.
pub fn hybrid_config(
    point: &InterpolationPoint,
    uniforms: &[f64],
    fields: &FieldSample,
) -> PercConfig {
    let p = point.bernoulli_density();
    let n = point.n;
    let top = fields.truncation();
    let mut open = vec![false; uniforms.len()];
    let mut prov = vec![Provenance::Closed; uniforms.len()];
    for x in 0..uniforms.len() {
        prov[x] = if uniforms[x] < p {
            Provenance::Bernoulli
        } else if n >= fields.first_scale && n <= top && fields.scale(n)[x] > point.lambda {
            Provenance::Scale(n)
        } else if let Some(k) = (n + 1..=top).find(|&k| fields.scale(k)[x] > lambda_n(k)) {
            Provenance::Tail(k)
        } else {
            Provenance::Closed
        };
        open[x] = prov[x] != Provenance::Closed;
    }
    PercConfig {
        open,
        provenance: Some(prov),
    }
}

/// Hybrid configuration drawing `ω⁰` from `rng`.
pub fn hybrid_sample<R: Rng + ?Sized>(
    point: &InterpolationPoint,
    fields: &FieldSample,
    rng: &mut R,
) -> Result<PercConfig, PercoError> {
    InterpolationPoint::new(point.t, point.n, point.lambda)?;
    if point.n < fields.first_scale || point.n > fields.truncation() {
        return Err(GffError::ScaleLayout.into());
    }
    let u = vertex_uniforms(fields.scale(point.n).len(), rng);
    Ok(hybrid_config(point, &u, fields))
}

#[derive(Clone, Debug, Serialize)]
pub struct Pivotals {
    pub event: bool,
    pub closed_pivotal: Vec<usize>,
    pub open_pivotal: Vec<usize>,
}

/// Closed-pivotal vertices for `A ↔ Λᶜ`: when the event fails, closed `x`
/// is pivotal iff opening it merges a source and a target cluster (or `x`
/// itself is in `A` or `Λᶜ`).
pub fn closed_pivotals(
    window: &PercWindow,
    open: &[bool],
    event: &Event,
    uf: &mut Clusters,
    out: &mut Vec<usize>,
) -> bool {
    out.clear();
    let holds = event_holds(window, open, event, uf);
    if holds {
        return true;
    }
    for x in 0..window.len() {
        if open[x] {
            continue;
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
        if flags == FLAG_SOURCE | FLAG_TARGET {
            out.push(x);
        }
    }
    false
}

/// Both pivotal sets. Open pivotals are found by closing each candidate in
/// a cluster that realises the event and recomputing.
pub fn pivotal_set(window: &PercWindow, config: &PercConfig, event: &Event) -> Pivotals {
    let mut uf = Clusters::new(window.len());
    let mut closed = Vec::new();
    let holds = closed_pivotals(window, &config.open, event, &mut uf, &mut closed);
    let mut open_piv = Vec::new();
    if holds {
        let candidates: Vec<usize> = (0..window.len())
            .filter(|&v| config.open[v] && uf.flags(v) == FLAG_SOURCE | FLAG_TARGET)
            .collect();
        let mut bits = config.open.clone();
        let mut scratch = Clusters::new(window.len());
        for x in candidates {
            bits[x] = false;
            if !event_holds(window, &bits, event, &mut scratch) {
                open_piv.push(x);
            }
            bits[x] = true;
        }
    }
    Pivotals {
        event: holds,
        closed_pivotal: closed,
        open_pivotal: open_piv,
    }
}

/// A percolation model on a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Bernoulli {
        p: f64,
    },
    /// `{Σ_{n<=N} φⁿ > h}` with the stack's truncation.
    Excursion {
        h: f64,
    },
    Hybrid {
        t: f64,
        n: u32,
        lambda: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionEstimate {
    pub model: ModelSpec,
    pub samples: u64,
    pub hits: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl ConnectionEstimate {
    pub fn from_hits(model: ModelSpec, hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        ConnectionEstimate {
            model,
            samples,
            hits,
            estimate: p,
            stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }
}

/// Configuration of sample `i` under `model`. Uniforms come from stream
/// `("omega0", i)` and fields from `("field", i)`.
pub fn model_config(
    window: &PercWindow,
    model: &ModelSpec,
    stack: Option<&FieldStack>,
    seed: u64,
    i: u64,
) -> Result<PercConfig, PercoError> {
    let n = window.len();
    match *model {
        ModelSpec::Bernoulli { p } => bernoulli_sample(window, p, &mut stream(seed, "omega0", i)),
        ModelSpec::Excursion { h } => {
            let stack =
                stack.ok_or_else(|| PercoError::BadModel("excursion needs fields".into()))?;
            check_stack(window, stack)?;
            let f = sample_truncated_gff(stack, &mut stream(seed, "field", i));
            Ok(crate::gff::excursion(&f.sum, h))
        }
        ModelSpec::Hybrid {
            t,
            n: scale,
            lambda,
        } => {
            let stack = stack.ok_or_else(|| PercoError::BadModel("hybrid needs fields".into()))?;
            check_stack(window, stack)?;
            let point = InterpolationPoint::new(t, scale, lambda)?;
            if scale < stack.first_scale() || scale > stack.truncation() {
                return Err(GffError::ScaleLayout.into());
            }
            let u = vertex_uniforms(n, &mut stream(seed, "omega0", i));
            let f = sample_truncated_gff(stack, &mut stream(seed, "field", i));
            Ok(hybrid_config(&point, &u, &f))
        }
    }
}

fn check_stack(window: &PercWindow, stack: &FieldStack) -> Result<(), PercoError> {
    match window.ball() {
        Some(b) if std::sync::Arc::ptr_eq(b, stack.window()) => Ok(()),
        _ => Err(PercoError::BadModel(
            "fields live on a different window".into(),
        )),
    }
}

/// Monte Carlo estimate of `P[A ↔ Λᶜ]`.
pub fn connection_prob(
    window: &PercWindow,
    model: &ModelSpec,
    stack: Option<&FieldStack>,
    a: &[usize],
    lambda: &[usize],
    samples: u64,
    seed: u64,
) -> Result<ConnectionEstimate, PercoError> {
    if samples == 0 {
        return Err(PercoError::NoSamples);
    }
    if let ModelSpec::Bernoulli { p } = model {
        if !(0.0..=1.0).contains(p) {
            return Err(PercoError::BadProbability(*p));
        }
    }
    let event = Event::new(window, a, lambda)?;
    let hits = (0..samples)
        .into_par_iter()
        .map_init(
            || Clusters::new(window.len()),
            |uf, i| {
                let c = model_config(window, model, stack, seed, i)?;
                Ok::<u64, PercoError>(u64::from(event_holds(window, &c.open, &event, uf)))
            },
        )
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ConnectionEstimate::from_hits(*model, hits, samples))
}
