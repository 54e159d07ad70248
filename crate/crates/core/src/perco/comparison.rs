use rayon::prelude::*;
use serde::Serialize;

use super::{
    event_holds, vertex_uniforms, Clusters, ConnectionEstimate, Event, ModelSpec, PercWindow,
};
use crate::error::PercoError;
use crate::gff::{excursion, sample_truncated_gff, FieldStack};
use crate::rng::stream;

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub epsilon: f64,
    pub bernoulli: ConnectionEstimate,
    /// `P_{1-ε}[o ↔ Λᶜ] ≥ P[o ↔_{φ>-1} Λᶜ] - 3σ` with `σ` the pooled error.
    pub holds: bool,
    /// `(bernoulli - excursion) / σ`.
    pub margin_sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub truncation: u32,
    pub excursion: ConnectionEstimate,
    /// Same fields at `h = 0`.
    pub excursion_h0: ConnectionEstimate,
    /// Samples connected at `h = 0` but not at `h = -1`; nesting forces 0.
    pub nesting_violations: u64,
    pub h_monotone: bool,
    pub rows: Vec<ComparisonRow>,
    pub smallest_epsilon_holding: Option<f64>,
}

/// `P_{1-ε}[o ↔ shell]` against `P[o ↔_{φ>-1} shell]` on the stack's window.
pub fn comparison_experiment(
    stack: &FieldStack,
    epsilons: &[f64],
    samples: u64,
    seed: u64,
) -> Result<ComparisonReport, PercoError> {
    if samples == 0 {
        return Err(PercoError::NoSamples);
    }
    if let Some(&e) = epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(PercoError::BadProbability(e));
    }
    let window = PercWindow::from_ball(stack.window().clone());
    let event = Event::origin_to_shell(&window);

    let (low, high, bad) = (0..samples)
        .into_par_iter()
        .map_init(
            || Clusters::new(window.len()),
            |uf, i| {
                let f = sample_truncated_gff(stack, &mut stream(seed, "field", i));
                let a = event_holds(&window, &excursion(&f.sum, -1.0).open, &event, uf);
                let b = event_holds(&window, &excursion(&f.sum, 0.0).open, &event, uf);
                (u64::from(a), u64::from(b), u64::from(b && !a))
            },
        )
        .reduce(|| (0, 0, 0), |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2));
    let exc = ConnectionEstimate::from_hits(ModelSpec::Excursion { h: -1.0 }, low, samples);
    let exc0 = ConnectionEstimate::from_hits(ModelSpec::Excursion { h: 0.0 }, high, samples);

    let mut rows = Vec::new();
    for &eps in epsilons {
        let p = 1.0 - eps;
        let hits: u64 = (0..samples)
            .into_par_iter()
            .map_init(
                || Clusters::new(window.len()),
                |uf, i| {
                    let u = vertex_uniforms(window.len(), &mut stream(seed, "omega0", i));
                    let open: Vec<bool> = u.iter().map(|&x| x < p).collect();
                    u64::from(event_holds(&window, &open, &event, uf))
                },
            )
            .sum();
        let bern = ConnectionEstimate::from_hits(ModelSpec::Bernoulli { p }, hits, samples);
        let sigma = bern.stderr.hypot(exc.stderr);
        let gap = bern.estimate - exc.estimate;
        let margin_sigma = if sigma > 0.0 {
            gap / sigma
        } else if gap == 0.0 {
            0.0
        } else {
            gap.signum() * f64::INFINITY
        };
        rows.push(ComparisonRow {
            epsilon: eps,
            bernoulli: bern,
            holds: gap >= -3.0 * sigma,
            margin_sigma,
        });
    }
    let smallest_epsilon_holding = rows
        .iter()
        .filter(|r| r.holds)
        .map(|r| r.epsilon)
        .min_by(f64::total_cmp);
    let h_monotone =
        bad == 0 && exc.estimate + 3.0 * exc.stderr.hypot(exc0.stderr) >= exc0.estimate;
    Ok(ComparisonReport {
        truncation: stack.truncation(),
        excursion: exc,
        excursion_h0: exc0,
        nesting_violations: bad,
        h_monotone,
        rows,
        smallest_epsilon_holding,
    })
}
