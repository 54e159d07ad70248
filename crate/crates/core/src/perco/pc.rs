//! Finite-size surrogate for `p_c`: the retention probability at which a
//! connection event has probability 1/2.
//!
//! Each sample draws one uniform per vertex; the vertex is open at `p` iff
//! `U < p`. The sample's threshold is the smallest `p` at which the event
//! occurs, found as a minimax path value by a best-first sweep from the
//! source set. The indicator of the event at `p` is `{threshold < p}`,
//! nondecreasing in `p` for every sample.
//!
//! Two events are offered. Face crossing of a box converges to `p_c` as the
//! box grows. Origin-to-shell converges instead to the `p` with
//! `θ(p) = 1/2`, which lies well above `p_c` on `ℤ³`; it is the only choice
//! on Cayley balls without a box structure.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{vertex_uniforms, PercWindow};
use crate::cayley::{build_ball, growth_sequence};
use crate::error::PercoError;
use crate::group::{
    quotient_hom, standard_generators, GeneratorSet, GroupFamily, GroupModel, HomSpec,
};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcEvent {
    /// An open path between the faces `x_1 = -L` and `x_1 = L` of a box.
    FaceCrossing,
    OriginToShell,
}

/// Growing windows of one graph.
#[derive(Clone, Debug)]
pub enum WindowFamily {
    /// `{-L..L}^d` boxes in `ℤ^d`.
    Boxes { dim: usize, half_widths: Vec<u32> },
    /// Cayley balls of the given radii.
    Balls {
        model: GroupModel,
        generators: GeneratorSet,
        radii: Vec<u32>,
    },
}

impl WindowFamily {
    /// Boxes for `ℤ^d` with its standard generators, balls otherwise.
    pub fn for_graph(model: &GroupModel, generators: &GeneratorSet, sizes: Vec<u32>) -> Self {
        if let GroupFamily::FreeAbelian { rank } = *model.family() {
            if same_generators(model, generators, &standard_generators(model)) {
                return WindowFamily::Boxes {
                    dim: rank,
                    half_widths: sizes,
                };
            }
        }
        WindowFamily::Balls {
            model: model.clone(),
            generators: generators.clone(),
            radii: sizes,
        }
    }

    pub fn sizes(&self) -> &[u32] {
        match self {
            WindowFamily::Boxes { half_widths, .. } => half_widths,
            WindowFamily::Balls { radii, .. } => radii,
        }
    }

    fn build(&self, i: usize) -> Result<PercWindow, PercoError> {
        match self {
            WindowFamily::Boxes { dim, half_widths } => PercWindow::z_box(*dim, half_widths[i]),
            WindowFamily::Balls {
                model,
                generators,
                radii,
            } => Ok(PercWindow::from_ball(Arc::new(build_ball(
                model, generators, radii[i],
            )?))),
        }
    }

    fn label(&self, i: usize) -> String {
        match self {
            WindowFamily::Boxes { dim, half_widths } => format!("box-d{dim}-L{}", half_widths[i]),
            WindowFamily::Balls { radii, .. } => format!("ball-R{}", radii[i]),
        }
    }
}

fn same_generators(model: &GroupModel, a: &GeneratorSet, b: &GeneratorSet) -> bool {
    let codes = |s: &GeneratorSet| {
        let mut v: Vec<Vec<u8>> = s
            .elements()
            .iter()
            .filter_map(|g| model.canonical_code(g).ok())
            .collect();
        v.sort();
        v
    };
    codes(a) == codes(b)
}

/// Smallest `p` such that the origin reaches the shell through vertices
/// with `U < p`, reported as the minimax uniform along the best path.
pub fn threshold_sample(window: &PercWindow, uniforms: &[f64]) -> f64 {
    threshold_between(window, uniforms, &[window.origin()], window.shell())
}

/// Minimax uniform over paths from `sources` to `target`; 1 if none exists.
pub fn threshold_between(
    window: &PercWindow,
    uniforms: &[f64],
    sources: &[usize],
    target: &[bool],
) -> f64 {
    let mut seen = vec![false; window.len()];
    let mut heap = BinaryHeap::new();
    // uniforms are in [0, 1), so their bit patterns order like the values
    for &s in sources {
        heap.push(Reverse((uniforms[s].to_bits(), s as u32)));
        seen[s] = true;
    }
    let mut level = 0.0f64;
    while let Some(Reverse((bits, v))) = heap.pop() {
        level = level.max(f64::from_bits(bits));
        let v = v as usize;
        if target[v] {
            return level;
        }
        for &w in window.neighbors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                heap.push(Reverse((uniforms[w as usize].to_bits(), w)));
            }
        }
    }
    1.0
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PcSize {
    pub window: String,
    pub size: u32,
    pub vertices: usize,
    pub samples: u64,
    /// Sample median of the thresholds: the 1/2 crossing of the empirical curve.
    pub estimate: f64,
    /// Order statistics `n/2 ∓ 3√n/2`, a three-sigma band for the median.
    pub band: (f64, f64),
    /// Grid points bracketing the crossing.
    pub bracket: (f64, f64),
    pub curve: Vec<CurvePoint>,
}

impl PcSize {
    /// Standard error of the median implied by the band.
    pub fn sigma(&self) -> f64 {
        (self.band.1 - self.band.0) / 6.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PcEstimate {
    pub event: PcEvent,
    pub sizes: Vec<PcSize>,
    /// Crossing on the largest window.
    pub estimate: f64,
    pub band: (f64, f64),
    pub bracket: (f64, f64),
}

impl PcEstimate {
    pub fn largest(&self) -> &PcSize {
        self.sizes.last().expect("at least two sizes")
    }

    pub fn sigma(&self) -> f64 {
        self.largest().sigma()
    }

    /// `window,size,p,estimate,stderr` rows for every window and grid point.
    pub fn write_curve_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["window", "size", "p", "estimate", "stderr"])?;
        for s in &self.sizes {
            for c in &s.curve {
                w.write_record([
                    s.window.clone(),
                    s.size.to_string(),
                    format!("{}", c.p),
                    format!("{}", c.estimate),
                    format!("{}", c.stderr),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn thresholds(
    window: &PercWindow,
    event: PcEvent,
    samples: u64,
    seed: u64,
    purpose: &str,
) -> Result<Vec<f64>, PercoError> {
    let (sources, target) = match event {
        PcEvent::OriginToShell => (vec![window.origin()], window.shell().to_vec()),
        PcEvent::FaceCrossing => window
            .faces()
            .ok_or_else(|| PercoError::BadModel("face crossing needs a box window".into()))?,
    };
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let u = vertex_uniforms(window.len(), &mut stream(seed, purpose, i));
            threshold_between(window, &u, &sources, &target)
        })
        .collect())
}

fn summarize(
    label: String,
    size: u32,
    vertices: usize,
    mut th: Vec<f64>,
    grid: &[f64],
) -> Result<PcSize, PercoError> {
    let n = th.len();
    th.sort_by(f64::total_cmp);
    let curve: Vec<CurvePoint> = grid
        .iter()
        .map(|&p| {
            let hits = th.partition_point(|&t| t < p);
            let est = hits as f64 / n as f64;
            CurvePoint {
                p,
                estimate: est,
                stderr: (est * (1.0 - est) / n as f64).sqrt(),
            }
        })
        .collect();
    let (first, last) = (&curve[0], &curve[curve.len() - 1]);
    if first.estimate > 0.5 || last.estimate < 0.5 {
        return Err(PercoError::NoCrossing {
            lo: first.p,
            hi: last.p,
            p_lo: first.estimate,
            p_hi: last.estimate,
        });
    }
    let estimate = if n % 2 == 1 {
        th[n / 2]
    } else {
        0.5 * (th[n / 2 - 1] + th[n / 2])
    };
    let half = 1.5 * (n as f64).sqrt();
    let lo = ((n as f64 / 2.0 - half).floor().max(1.0) as usize).min(n) - 1;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).clamp(1, n) - 1;
    let k = curve
        .iter()
        .position(|c| c.estimate >= 0.5)
        .expect("last point crosses");
    let bracket = (curve[k.saturating_sub(1)].p, curve[k].p);
    Ok(PcSize {
        window: label,
        size,
        vertices,
        samples: n as u64,
        estimate,
        band: (th[lo], th[hi]),
        bracket,
        curve,
    })
}

/// Crossing estimates on every window of the family, smallest first.
pub fn pc_estimate(
    family: &WindowFamily,
    event: PcEvent,
    grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<PcEstimate, PercoError> {
    if family.sizes().len() < 2 {
        return Err(PercoError::TooFewWindows(2));
    }
    if samples == 0 {
        return Err(PercoError::NoSamples);
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PercoError::BadModel(
            "p grid must be nonempty and increasing".into(),
        ));
    }
    if let Some(&p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(PercoError::BadProbability(p));
    }
    let mut sizes = Vec::new();
    for i in 0..family.sizes().len() {
        let w = family.build(i)?;
        let label = family.label(i);
        let th = thresholds(&w, event, samples, seed, &format!("pc-{label}"))?;
        sizes.push(summarize(label, family.sizes()[i], w.len(), th, grid)?);
    }
    let top = sizes.last().expect("nonempty");
    let (estimate, band, bracket) = (top.estimate, top.band, top.bracket);
    Ok(PcEstimate {
        event,
        sizes,
        estimate,
        band,
        bracket,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub source: PcEstimate,
    /// `None` when the target has linear growth, where `p_c = 1`.
    pub target: Option<PcEstimate>,
    pub target_linear_growth: bool,
    /// `p̂_c(G₁) ≤ p̂_c(G₂) + 3σ`, or vacuous for a linear target.
    pub holds: bool,
    /// `(p̂_c(G₂) - p̂_c(G₁)) / σ` with `σ` the pooled median error.
    pub separation_sigma: Option<f64>,
    pub note: Option<String>,
}

impl QuotientReport {
    /// Separation of at least three pooled standard errors.
    pub fn strictly_separated(&self) -> bool {
        self.separation_sigma
            .map_or(self.target_linear_growth, |s| s >= 3.0)
    }
}

/// Sphere sizes stop growing between radius 16 and 32.
fn linear_growth(model: &GroupModel, gens: &GeneratorSet) -> bool {
    let b = growth_sequence(model, gens, 32, 1 << 20);
    if b.len() < 33 {
        return false;
    }
    let sphere = |r: usize| b[r] - b[r - 1];
    sphere(32) <= sphere(16)
}

/// `p_c` estimates on `G₁` and on its image under `hom`.
pub fn quotient_experiment(
    source: &GroupModel,
    generators: &GeneratorSet,
    hom: &HomSpec,
    sizes: &[u32],
    grid: &[f64],
    samples: u64,
    seed: u64,
) -> Result<QuotientReport, PercoError> {
    let (target, target_gens) =
        quotient_hom(source, generators, hom).map_err(crate::error::CayleyError::from)?;
    let source_family = WindowFamily::for_graph(source, generators, sizes.to_vec());
    let target_family = WindowFamily::for_graph(&target, &target_gens, sizes.to_vec());
    // one event for both sides: face crossing only when both are boxes
    let event = match (&source_family, &target_family) {
        (WindowFamily::Boxes { .. }, WindowFamily::Boxes { .. }) => PcEvent::FaceCrossing,
        _ => PcEvent::OriginToShell,
    };
    let source_est = pc_estimate(&source_family, event, grid, samples, seed)?;
    if linear_growth(&target, &target_gens) {
        return Ok(QuotientReport {
            source: source_est,
            target: None,
            target_linear_growth: true,
            holds: true,
            separation_sigma: None,
            note: Some("target has linear growth, so p_c = 1 and the inequality is vacuous".into()),
        });
    }
    let target_est = pc_estimate(&target_family, event, grid, samples, seed)?;
    let sigma = source_est.sigma().hypot(target_est.sigma());
    let gap = target_est.estimate - source_est.estimate;
    let holds = gap >= -3.0 * sigma;
    let separation_sigma = Some(if sigma > 0.0 {
        gap / sigma
    } else if gap == 0.0 {
        0.0
    } else {
        gap.signum() * f64::INFINITY
    });
    Ok(QuotientReport {
        source: source_est,
        target: Some(target_est),
        target_linear_growth: false,
        holds,
        separation_sigma,
        note: None,
    })
}
