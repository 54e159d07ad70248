use std::io::Write;
use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use cayperc::cayley::{
    build_ball, check_growth_lower, growth_sequence, CayleyBall, RadiusFunctions,
};
use cayperc::gff::{
    check_union_domination, default_truncation, field_stack, lambda_n, sample_truncated_batch,
    schedule_terms, window_series, write_field_binary, write_schedule_csv, C0Mode, FieldStack,
};
use cayperc::group::{check_minimality, GeneratorSet, GroupModel, HomSpec};
use cayperc::isoperimetry::{
    check_isop_inequalities, check_theorem_pn, expansion_profile, ProfileOptions,
};
use cayperc::kernel::{
    green_truncated, heat_kernel, return_prob_checks, verify_scales, Arithmetic, ScaleOutcome,
};
use cayperc::perco::{
    comparison_experiment, connection_prob, pc_estimate, quotient_experiment, russo_check, Event,
    InterpolationPoint, ModelSpec, PcEvent, PercWindow, RussoConfig, RussoVariant, WindowFamily,
};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::Run;

pub const COMMANDS: [&str; 16] = [
    "ball",
    "growth",
    "kernel",
    "green",
    "verify-blocks",
    "profile",
    "isop-check",
    "pn-check",
    "gff-sample",
    "schedules",
    "russo",
    "percolate",
    "pc",
    "comparison",
    "quotient",
    "return-bounds",
];

fn f(x: f64) -> String {
    format!("{x}")
}

fn ball_of(model: &GroupModel, gens: &GeneratorSet, radius: u32) -> Result<Arc<CayleyBall>> {
    Ok(Arc::new(build_ball(model, gens, radius)?))
}

pub fn dispatch(command: &str, cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    match command {
        "ball" => ball(cfg, run),
        "growth" => growth(cfg, run),
        "kernel" => kernel(cfg, run),
        "green" => green(cfg, run),
        "verify-blocks" => verify_blocks(cfg, run),
        "profile" => profile(cfg, run),
        "isop-check" => isop_check(cfg, run),
        "pn-check" => pn_check(cfg, run),
        "gff-sample" => gff_sample(cfg, run),
        "schedules" => schedules(cfg, run),
        "russo" => russo(cfg, run),
        "percolate" => percolate(cfg, run),
        "pc" => pc(cfg, run),
        "comparison" => comparison(cfg, run),
        "quotient" => quotient(cfg, run),
        "return-bounds" => return_bounds(cfg, run),
        other => bail!("unknown subcommand {other:?}"),
    }
}

fn ball(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    b.write_vertices_csv(run.file("vertices.csv")?)?;
    b.write_edges_csv(run.file("edges.csv")?)?;
    let sizes: Vec<usize> = (0..=b.radius()).map(|r| b.count_within(r)).collect();
    let reference = growth_sequence(&m, &s, b.radius(), u64::MAX);
    let agree = sizes.iter().zip(&reference).all(|(a, r)| *a as u64 == *r);
    run.check("ball_sizes", agree, format!("|B(o,r)| = {sizes:?}"));
    Ok(json!({ "degree": b.degree(), "vertices": b.len(), "sizes": sizes }))
}

fn growth(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let n_max = cfg.growth.n_max;
    let b = ball_of(&m, &s, cfg.radius.unwrap_or(n_max).max(n_max))?;
    let minimality = check_minimality(&m, &s, cfg.minimality_radius);
    let mut w = csv::Writer::from_writer(run.file("growth.csv")?);
    w.write_record(["n", "ball_size"])?;
    for r in 0..=b.radius() {
        w.write_record([r.to_string(), b.count_within(r).to_string()])?;
    }
    w.flush()?;
    if !minimality.is_certified() {
        run.check(
            "growth_lower_bound",
            false,
            format!("generating set not certified minimal: {minimality:?}"),
        );
        return Ok(json!({ "minimality": minimality }));
    }
    let report = check_growth_lower(&b, &minimality, n_max)?;
    for v in report.verdicts.iter().filter(|v| v.n >= 1) {
        run.check(
            format!("growth_n{}", v.n),
            v.holds,
            format!("|B(o,{})| = {} >= c_n D^n = {:.6e}", v.n, v.size, v.bound),
        );
    }
    Ok(json!({ "minimality": minimality, "growth": report }))
}

fn kernel(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let steps = cfg.kernel.steps;
    let b = ball_of(&m, &s, cfg.radius.unwrap_or(steps).max(steps))?;
    let arith = match cfg.kernel.arithmetic.as_str() {
        "exact" => Arithmetic::Exact,
        "float" => Arithmetic::Float,
        other => bail!("kernel.arithmetic must be `exact` or `float`, got {other:?}"),
    };
    let row = heat_kernel(&b, 0, steps, arith)?;
    let mut w = csv::Writer::from_writer(run.file("kernel.csv")?);
    w.write_record(["index", "code", "dist", "count", "prob"])?;
    for v in (0..b.len()).filter(|&v| b.dist(v) <= steps) {
        let count = row.count(v).map_or(String::new(), |c| c.to_string());
        w.write_record([
            v.to_string(),
            b.code_hex(v),
            b.dist(v).to_string(),
            count,
            f(row.prob(v)),
        ])?;
    }
    w.flush()?;
    run.check(
        "mass_conserved",
        row.conserves_mass(),
        format!("Σ_y p_{steps}(o,y) = 1"),
    );
    let argmax = row.argmax();
    Ok(
        json!({ "steps": steps, "degree": b.degree(), "max_prob": row.prob(argmax), "argmax": b.code_hex(argmax) }),
    )
}

fn green(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let n = cfg.green.scales;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let series = window_series(&b, n)?;
    let g = green_truncated(&b, &series, n)?;
    let mut w = csv::Writer::from_writer(run.file("green.csv")?);
    w.write_record(["index", "code", "dist", "g_truncated"])?;
    for v in 0..b.len() {
        w.write_record([
            v.to_string(),
            b.code_hex(v),
            b.dist(v).to_string(),
            f(g.partial[v]),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(run.file("green_scales.csv")?);
    w.write_record(["n", "g_n_diag"])?;
    for (k, inc) in g.increments.iter().enumerate() {
        w.write_record([(k + 1).to_string(), f(*inc)])?;
    }
    w.flush()?;
    run.check(
        "g1_origin_is_one",
        series.diag(1) == 1.0,
        format!("g_1(o,o) = {}", series.diag(1)),
    );
    if g.recurrence_warning {
        eprintln!("warning: block increments are not decaying; the graph looks recurrent and G(o,o) may be infinite");
    }
    Ok(
        json!({ "truncated": { "scales": g.scales, "origin": g.partial[0], "increments": g.increments, "recurrence_warning": g.recurrence_warning } }),
    )
}

fn verify_blocks(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let top = cfg
        .verify_blocks
        .scales
        .iter()
        .copied()
        .max()
        .ok_or_else(|| anyhow!("verify_blocks.scales is empty"))?;
    let series = window_series(&b, top)?;
    let report = verify_scales(&b, &series, cfg.verify_blocks.scales.iter().copied())?;
    let mut w = csv::Writer::from_writer(run.file("blocks.csv")?);
    w.write_record([
        "scale",
        "size",
        "norm",
        "psd_method",
        "min_eig",
        "min_entry",
        "range_violation",
        "max_asymmetry",
        "pass",
    ])?;
    for o in &report.outcomes {
        match o {
            ScaleOutcome::Verified(r) => {
                w.write_record([
                    r.scale.to_string(),
                    r.size.to_string(),
                    f(r.norm),
                    format!("{:?}", r.psd_method),
                    f(r.min_eig),
                    f(r.min_entry),
                    f(r.range_violation),
                    f(r.max_asymmetry),
                    r.pass.to_string(),
                ])?;
                run.check(
                    format!("block_n{}", r.scale),
                    r.pass,
                    format!(
                        "min_eig {:.3e} (norm {:.3e}, {:?}), min entry {:.3e}, range violation {:.3e}, asymmetry {:.3e}",
                        r.min_eig, r.norm, r.psd_method, r.min_entry, r.range_violation, r.max_asymmetry
                    ),
                );
            }
            ScaleOutcome::Skipped { scale, reason, .. } => {
                run.check(format!("block_n{scale}"), false, reason.clone())
            }
        }
    }
    w.flush()?;
    run.check(
        "g1_origin_is_one",
        series.diag(1) == 1.0,
        format!("g_1(o,o) = {}", series.diag(1)),
    );
    Ok(serde_json::to_value(report)?)
}

fn profile(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let p = &cfg.profile;
    let b = ball_of(&m, &s, cfg.radius.unwrap_or(p.s_max as u32))?;
    let table = expansion_profile(
        &b,
        p.s_max,
        ProfileOptions {
            heuristic_budget: p.heuristic_budget,
        },
    )?;
    table.write_csv(&b, run.file("profile.csv")?)?;
    Ok(serde_json::to_value(table)?)
}

fn isop_check(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let p = &cfg.isop_check;
    let b = ball_of(&m, &s, cfg.radius.unwrap_or(p.s_max as u32))?;
    let bound = 2 * p.s_max as u64;
    let rf = RadiusFunctions::compute(&m, &s, bound as u32, bound)?;
    let rep = check_isop_inequalities(&b, p.s_max, &rf)?;
    let mut w = csv::Writer::from_writer(run.file("isop.csv")?);
    w.write_record([
        "inequality",
        "checked",
        "vacuous",
        "failures",
        "worst_ratio",
        "worst_bound",
    ])?;
    for (name, r) in [("edge", &rep.edge), ("vertex", &rep.vertex)] {
        let (ratio, bnd) = r
            .worst
            .as_ref()
            .map_or((String::new(), String::new()), |w| (f(w.ratio), f(w.bound)));
        w.write_record([
            name.to_string(),
            r.checked.to_string(),
            r.vacuous.to_string(),
            r.failures.to_string(),
            ratio,
            bnd,
        ])?;
        run.check(
            format!("isop_{name}"),
            r.failures == 0,
            format!("{} sets checked, {} failures", r.checked, r.failures),
        );
    }
    w.flush()?;
    Ok(serde_json::to_value(rep)?)
}

fn pn_check(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let eps = &cfg.pn_check.epsilons;
    let min_eps = eps.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eps > 0.0) {
        bail!("pn_check.epsilons must be positive");
    }
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let bound = (8.0 / min_eps).ceil() as u64 + 2;
    let rf = RadiusFunctions::compute(&m, &s, bound as u32, bound)?;
    let rep = check_theorem_pn(&b, &rf, eps)?;
    let mut w = csv::Writer::from_writer(run.file("pn.csv")?);
    w.write_record([
        "epsilon",
        "n_star",
        "integral",
        "certificate_steps",
        "certificate_value",
        "holds",
    ])?;
    for r in &rep.rows {
        w.write_record([
            f(r.epsilon),
            r.n_star.to_string(),
            f(r.integral),
            r.certificate_steps.map_or(String::new(), |c| c.to_string()),
            r.certificate_value.clone().unwrap_or_default(),
            r.holds.to_string(),
        ])?;
        run.check(
            format!("pn_eps_{}", r.epsilon),
            r.holds,
            format!(
                "n* = {}, p_{}(o,o) = {} <= ε",
                r.n_star,
                r.certificate_steps.map_or("-".into(), |c| c.to_string()),
                r.certificate_value.as_deref().unwrap_or("-")
            ),
        );
    }
    w.flush()?;
    Ok(serde_json::to_value(rep)?)
}

fn stack_for(cfg: &ExperimentConfig, scales: Option<u32>) -> Result<(Arc<CayleyBall>, FieldStack)> {
    let (m, s) = cfg.group()?;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let n = scales.unwrap_or_else(|| default_truncation(b.radius()));
    let stack = field_stack(&b, n)?;
    Ok((b, stack))
}

fn gff_sample(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.gff_sample;
    let (b, stack) = stack_for(cfg, p.scales)?;
    let n_dom = p.domination_scales.unwrap_or(stack.truncation());
    let seed = cfg.seed()?;
    let mut bin = run.file("fields.bin")?;
    let mut w = csv::Writer::from_writer(run.file("gff_origin.csv")?);
    let mut header = vec!["sample".to_string()];
    header.extend((1..=stack.truncation()).map(|n| format!("phi{n}")));
    header.push("sum".into());
    w.write_record(&header)?;
    let (mut above, mut violations, mut vertices) = (0usize, 0usize, 0usize);
    const BATCH: u64 = 64;
    for start in (0..p.samples).step_by(BATCH as usize) {
        let mut rngs: Vec<_> = (start..(start + BATCH).min(p.samples))
            .map(|i| cayperc::rng::stream(seed, "field", i))
            .collect();
        for (i, sample) in (start..).zip(sample_truncated_batch(&stack, &mut rngs)) {
            write_field_binary(&sample, &mut bin)?;
            let mut rec = vec![i.to_string()];
            rec.extend(sample.scales.iter().map(|s| f(s[0])));
            rec.push(f(sample.sum[0]));
            w.write_record(&rec)?;
            let d = check_union_domination(&sample, n_dom)?;
            above += d.above;
            violations += d.violations;
            vertices += d.vertices;
        }
    }
    w.flush()?;
    bin.flush()?;
    b.write_vertices_csv(run.file("vertices.csv")?)?;
    let sidecar = json!({
        "window": { "group": cfg.group, "radius": b.radius(), "vertices": b.len(), "vertex_order": "vertices.csv" },
        "scales": (1..=stack.truncation()).collect::<Vec<_>>(),
        "seed": seed,
        "samples": p.samples,
        "dtype": "f64 little-endian",
        "shape": [p.samples, stack.truncation() as u64, b.len() as u64],
    });
    serde_json::to_writer_pretty(run.file("fields.json")?, &sidecar)?;
    run.check(
        "pigeonhole_domination",
        violations == 0,
        format!("{violations} violations among {above} vertices above Σλ_n, {vertices} vertex draws, N = {n_dom}"),
    );
    Ok(json!({
        "window_vertices": b.len(),
        "truncation": stack.truncation(),
        "variance_at_origin": stack.diag(),
        "samples": p.samples,
        "domination": { "scales": n_dom, "vertex_draws": vertices, "above": above, "violations": violations },
    }))
}

fn schedules(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let p = &cfg.schedules;
    let b = ball_of(&m, &s, 0)?;
    let series = window_series(&b, p.scales)?;
    let diag: Vec<f64> = (1..=p.scales).map(|n| series.diag(n)).collect();
    let c0 = p.c0.map_or(C0Mode::Derived, C0Mode::Override);
    let terms = schedule_terms(b.degree(), &diag, c0)?;
    write_schedule_csv(&terms, run.file("schedules.csv")?)?;
    let l1 = lambda_n(1);
    run.check(
        "lambda_1",
        (l1 + 1.0 + std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-15,
        format!("λ_1 = {l1:.6}"),
    );
    Ok(json!({ "degree": b.degree(), "c0": c0.value(), "terms": terms }))
}

fn russo(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.russo;
    let t = match (p.t, p.p) {
        (Some(t), _) => t,
        (None, Some(q)) if (0.0..1.0).contains(&q) => -(1.0 - q).ln(),
        _ => bail!("russo needs `t` or `p` in [0, 1)"),
    };
    let variant = match p.variant.as_str() {
        "clock" => RussoVariant::Clock,
        "level" => RussoVariant::Level,
        other => bail!("russo.variant must be `clock` or `level`, got {other:?}"),
    };
    let (m, s) = cfg.group()?;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let stack = match variant {
        RussoVariant::Level => Some(field_stack(&b, p.n)?),
        RussoVariant::Clock => None,
    };
    let w = PercWindow::from_ball(b);
    let ev = Event::origin_to_shell(&w);
    let rc = RussoConfig {
        variant,
        point: InterpolationPoint::new(t, p.n, p.lambda)?,
        delta: p.delta,
        samples: p.samples,
        seed: cfg.seed()?,
    };
    let rep = russo_check(&w, stack.as_ref(), &ev, &rc)?;
    let mut out = csv::Writer::from_writer(run.file("russo.csv")?);
    out.write_record([
        "delta",
        "derivative",
        "derivative_se",
        "pivotal",
        "pivotal_se",
        "pooled_se",
        "z",
    ])?;
    for sd in &rep.sides {
        out.write_record([
            f(sd.delta),
            f(sd.derivative),
            f(sd.derivative_se),
            f(sd.pivotal),
            f(sd.pivotal_se),
            f(sd.pooled_se),
            f(sd.z),
        ])?;
        run.check(
            format!("russo_{}_delta_{}", p.variant, sd.delta),
            sd.pass && rep.richardson_consistent,
            format!(
                "derivative {:.5} vs pivotal {:.5}, {:.2} pooled SE",
                sd.derivative, sd.pivotal, sd.z
            ),
        );
    }
    out.flush()?;
    if let Some(wm) = &rep.warning {
        eprintln!("warning: {wm}");
    }
    Ok(serde_json::to_value(rep)?)
}

fn percolate(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.percolate;
    let seed = cfg.seed()?;
    let (m, s) = cfg.group()?;
    let b = ball_of(&m, &s, cfg.radius()?)?;
    let needs_fields = p.model != "bernoulli";
    let stack = if needs_fields {
        let n = p.scales.unwrap_or_else(|| default_truncation(b.radius()));
        Some(field_stack(&b, n)?)
    } else {
        None
    };
    let w = PercWindow::from_ball(b);
    let models: Vec<ModelSpec> = match p.model.as_str() {
        "bernoulli" => {
            p.p.as_ref()
                .ok_or_else(|| anyhow!("percolate.p is required for the bernoulli model"))?
                .values()?
                .into_iter()
                .map(|p| ModelSpec::Bernoulli { p })
                .collect()
        }
        "excursion" => {
            p.h.as_ref()
                .ok_or_else(|| anyhow!("percolate.h is required for the excursion model"))?
                .values()?
                .into_iter()
                .map(|h| ModelSpec::Excursion { h })
                .collect()
        }
        "hybrid" => vec![ModelSpec::Hybrid {
            t: p.t,
            n: p.n,
            lambda: p.lambda,
        }],
        other => bail!("percolate.model must be bernoulli, excursion or hybrid, got {other:?}"),
    };
    let mut out = csv::Writer::from_writer(run.file("percolate.csv")?);
    out.write_record([
        "model",
        "parameter",
        "samples",
        "hits",
        "estimate",
        "stderr",
    ])?;
    let mut results = Vec::new();
    for model in models {
        let est = connection_prob(
            &w,
            &model,
            stack.as_ref(),
            &[w.origin()],
            &w.interior(),
            p.samples,
            seed,
        )?;
        let (name, param) = match model {
            ModelSpec::Bernoulli { p } => ("bernoulli", f(p)),
            ModelSpec::Excursion { h } => ("excursion", f(h)),
            ModelSpec::Hybrid { t, n, lambda } => {
                ("hybrid", format!("t={t};n={n};lambda={lambda}"))
            }
        };
        out.write_record([
            name.to_string(),
            param,
            est.samples.to_string(),
            est.hits.to_string(),
            f(est.estimate),
            f(est.stderr),
        ])?;
        results.push(est);
    }
    out.flush()?;
    Ok(json!({ "event": "origin_to_shell", "estimates": results }))
}

fn pc_event(name: Option<&str>, family: &WindowFamily) -> Result<PcEvent> {
    Ok(match name {
        Some("face_crossing") => PcEvent::FaceCrossing,
        Some("origin_to_shell") => PcEvent::OriginToShell,
        Some(other) => bail!("pc.event must be face_crossing or origin_to_shell, got {other:?}"),
        None if matches!(family, WindowFamily::Boxes { .. }) => PcEvent::FaceCrossing,
        None => PcEvent::OriginToShell,
    })
}

fn pc(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.pc;
    let (m, s) = cfg.group()?;
    let family = WindowFamily::for_graph(&m, &s, p.sizes.clone());
    let event = pc_event(p.event.as_deref(), &family)?;
    let est = pc_estimate(&family, event, &p.grid.values()?, p.samples, cfg.seed()?)?;
    est.write_curve_csv(run.file("pc_curve.csv")?)?;
    let mut w = csv::Writer::from_writer(run.file("pc_sizes.csv")?);
    w.write_record([
        "window",
        "size",
        "vertices",
        "estimate",
        "band_lo",
        "band_hi",
        "bracket_lo",
        "bracket_hi",
    ])?;
    for sz in &est.sizes {
        w.write_record([
            sz.window.clone(),
            sz.size.to_string(),
            sz.vertices.to_string(),
            f(sz.estimate),
            f(sz.band.0),
            f(sz.band.1),
            f(sz.bracket.0),
            f(sz.bracket.1),
        ])?;
    }
    w.flush()?;
    if let Some([lo, hi]) = p.expect {
        run.check(
            "pc_in_interval",
            (lo..=hi).contains(&est.estimate),
            format!(
                "estimate {:.4} (band {:.4}..{:.4}) in [{lo}, {hi}]",
                est.estimate, est.band.0, est.band.1
            ),
        );
    }
    Ok(serde_json::to_value(est)?)
}

fn comparison(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.comparison;
    let (_, stack) = stack_for(cfg, p.scales)?;
    let rep = comparison_experiment(&stack, &p.epsilons, p.samples, cfg.seed()?)?;
    let mut w = csv::Writer::from_writer(run.file("comparison.csv")?);
    w.write_record([
        "epsilon",
        "bernoulli",
        "bernoulli_se",
        "excursion",
        "excursion_se",
        "holds",
        "margin_sigma",
    ])?;
    for r in &rep.rows {
        w.write_record([
            f(r.epsilon),
            f(r.bernoulli.estimate),
            f(r.bernoulli.stderr),
            f(rep.excursion.estimate),
            f(rep.excursion.stderr),
            r.holds.to_string(),
            f(r.margin_sigma),
        ])?;
    }
    w.flush()?;
    run.check(
        "h_monotone",
        rep.h_monotone,
        format!(
            "P[h=-1] = {:.4} >= P[h=0] = {:.4}; {} nesting violations",
            rep.excursion.estimate, rep.excursion_h0.estimate, rep.nesting_violations
        ),
    );
    Ok(serde_json::to_value(rep)?)
}

fn quotient(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let p = &cfg.quotient;
    let (m, s) = cfg.group()?;
    if p.matrix.is_empty() {
        bail!("quotient.matrix is required");
    }
    let hom = HomSpec::linear(&m, &s, &p.matrix)?;
    let rep = quotient_experiment(
        &m,
        &s,
        &hom,
        &p.sizes,
        &p.grid.values()?,
        p.samples,
        cfg.seed()?,
    )?;
    let mut w = csv::Writer::from_writer(run.file("quotient.csv")?);
    w.write_record(["graph", "window", "size", "estimate", "band_lo", "band_hi"])?;
    for (name, est) in [
        ("source", Some(&rep.source)),
        ("target", rep.target.as_ref()),
    ] {
        for sz in est.map(|e| e.sizes.as_slice()).unwrap_or(&[]) {
            w.write_record([
                name.to_string(),
                sz.window.clone(),
                sz.size.to_string(),
                f(sz.estimate),
                f(sz.band.0),
                f(sz.band.1),
            ])?;
        }
    }
    w.flush()?;
    let detail = match (&rep.target, rep.separation_sigma) {
        (Some(t), Some(sig)) => format!(
            "p_c(G1) ≈ {:.4} vs p_c(G2) ≈ {:.4}, separation {:.1} σ",
            rep.source.estimate, t.estimate, sig
        ),
        _ => rep.note.clone().unwrap_or_default(),
    };
    run.check("quotient_inequality", rep.holds, detail.clone());
    if p.require_separation {
        run.check("quotient_separation", rep.strictly_separated(), detail);
    }
    Ok(serde_json::to_value(rep)?)
}

fn return_bounds(cfg: &ExperimentConfig, run: &mut Run) -> Result<Value> {
    let (m, s) = cfg.group()?;
    let n_max = cfg.return_bounds.n_max;
    let b = ball_of(&m, &s, cfg.radius.unwrap_or(n_max).max(n_max))?;
    let minimality = check_minimality(&m, &s, cfg.minimality_radius);
    let rep = return_prob_checks(&b, &minimality, n_max)?;
    let mut w = csv::Writer::from_writer(run.file("return_bounds.csv")?);
    w.write_record(["n", "max_count", "max_prob", "one_over_d", "six_over_d2"])?;
    for r in &rep.rows {
        w.write_record([
            r.n.to_string(),
            r.max_count.clone(),
            f(r.max_prob),
            r.one_over_d.to_string(),
            r.six_over_d2.map_or(String::new(), |b| b.to_string()),
        ])?;
    }
    w.flush()?;
    let one = rep.rows.iter().all(|r| r.one_over_d);
    run.check(
        "one_over_d",
        one,
        format!("max_y p_n(o,y) <= 1/{} for n = 1..{n_max}", rep.degree),
    );
    match &rep.six_over_d2_skipped {
        None => {
            let six = rep.rows.iter().all(|r| r.six_over_d2 != Some(false));
            run.check(
                "six_over_d2",
                six,
                format!("max_y p_n(o,y) <= 6/{}^2 for n = 4..{n_max}", rep.degree),
            );
        }
        Some(why) => eprintln!("note: 6/D^2 check skipped: {why}"),
    }
    Ok(json!({ "minimality": minimality, "report": rep }))
}

/// Approximate ball size without building it; `exact` is false when the
/// count was cut off and extrapolated.
fn ball_estimate(m: &GroupModel, s: &GeneratorSet, radius: u32) -> (u64, bool) {
    const CUTOFF: u64 = 200_000;
    let seq = growth_sequence(m, s, radius, CUTOFF);
    let last = *seq.last().expect("nonempty");
    if seq.len() as u32 == radius + 1 {
        return (last, true);
    }
    let k = seq.len();
    let ratio = if k >= 2 {
        (seq[k - 1] - seq[k - 2]) as f64
            / (seq[k - 2] - seq.get(k.wrapping_sub(3)).copied().unwrap_or(0)).max(1) as f64
    } else {
        2.0
    };
    let mut size = last as f64;
    let mut sphere = (seq[k - 1] - if k >= 2 { seq[k - 2] } else { 0 }) as f64;
    for _ in k..=radius as usize {
        sphere *= ratio.max(1.0);
        size += sphere;
    }
    (size.min(u64::MAX as f64) as u64, false)
}

/// Resource estimate printed by `--plan`.
pub fn plan(command: &str, cfg: &ExperimentConfig) -> Result<Value> {
    if !COMMANDS.contains(&command) {
        bail!("unknown subcommand {command:?}");
    }
    let (m, s) = cfg.group()?;
    let mut balls = Vec::new();
    let mut boxes = Vec::new();
    let mut samples = 0u64;
    let mut add = |label: &str, r: u32| {
        let (v, exact) = ball_estimate(&m, &s, r);
        balls.push(json!({ "ball": label, "radius": r, "vertices": v, "exact": exact }));
        v
    };
    let r = cfg.radius.unwrap_or(0);
    let mut dense = 0u64;
    match command {
        "ball" | "profile" | "isop-check" | "pn-check" => {
            add("window", r);
        }
        "growth" => {
            add("window", r.max(cfg.growth.n_max));
        }
        "kernel" => {
            add("window", r.max(cfg.kernel.steps));
        }
        "return-bounds" => {
            add("window", r.max(cfg.return_bounds.n_max));
        }
        "green" | "verify-blocks" | "gff-sample" | "comparison" | "russo" | "percolate"
        | "schedules" => {
            let n = match command {
                "green" => cfg.green.scales,
                "verify-blocks" => cfg.verify_blocks.scales.iter().copied().max().unwrap_or(1),
                "schedules" => cfg.schedules.scales,
                "russo" => cfg.russo.n,
                "gff-sample" => cfg
                    .gff_sample
                    .scales
                    .unwrap_or_else(|| default_truncation(r)),
                "comparison" => cfg
                    .comparison
                    .scales
                    .unwrap_or_else(|| default_truncation(r)),
                _ => cfg
                    .percolate
                    .scales
                    .unwrap_or_else(|| default_truncation(r)),
            };
            let kernel_radius = cayperc::kernel::block_last_step(n.max(1));
            add("kernel", kernel_radius);
            if command != "schedules" {
                dense = add("window", r);
            }
            samples = match command {
                "gff-sample" => cfg.gff_sample.samples,
                "comparison" => cfg.comparison.samples * (1 + cfg.comparison.epsilons.len() as u64),
                "russo" => 3 * cfg.russo.samples,
                "percolate" => cfg.percolate.samples,
                _ => 0,
            };
        }
        "pc" | "quotient" => {
            let (sizes, n) = if command == "pc" {
                (&cfg.pc.sizes, cfg.pc.samples)
            } else {
                (&cfg.quotient.sizes, 2 * cfg.quotient.samples)
            };
            let family = WindowFamily::for_graph(&m, &s, sizes.clone());
            for &size in sizes {
                match &family {
                    WindowFamily::Boxes { dim, .. } => {
                        let v = (2 * size as u64 + 1).pow(*dim as u32);
                        boxes.push(json!({ "box": size, "vertices": v, "exact": true }));
                    }
                    WindowFamily::Balls { .. } => {
                        add("window", size);
                    }
                }
            }
            samples = n * sizes.len() as u64;
        }
        _ => unreachable!(),
    }
    balls.extend(boxes);
    Ok(json!({
        "command": command,
        "windows": balls,
        "dense_matrix_bytes": dense.saturating_mul(dense).saturating_mul(8),
        "monte_carlo_samples": samples,
    }))
}
