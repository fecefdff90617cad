use rayon::prelude::*;

use qgeo::adaptive::{auto_search, run_schedule, AdaptiveTrace, Noise, PeakCriterion, StepPolicy, StepSchedule};
use qgeo::control::control_qmt_matrix;
use qgeo::geometry::{gauge_factor, geometry_report, resolve_probe, winding_number, HamiltonianField, ProbeChoice};
use qgeo::models::{
    coarse_chern_canonical, coarse_chern_canonical_quadrature, max_qmt_canonical, max_qmt_ssh, CanonicalParams,
    SshParams, TptModel,
};
use qgeo::verify::{run_verification, VerifyOptions};
use qgeo::QgeoError;

use crate::config::{AdaptivePlan, ProbeSpec, Quantity, RunConfig};
use crate::error::CliError;
use crate::field::AnyField;
use crate::output::{inverse_unit, product_unit, Cell, Table};

fn probe_choice(p: &ProbeSpec) -> ProbeChoice {
    match p {
        ProbeSpec::Ground => ProbeChoice::Ground,
        ProbeSpec::Bloch(v) => ProbeChoice::Bloch(*v),
        ProbeSpec::OptimalFor(i) => ProbeChoice::OptimalFor(*i),
    }
}

fn limit_hint(field: &AnyField) -> String {
    match field {
        AnyField::Canonical(_) => {
            "the gap closes at theta = pi, r = 1; evaluate along a limit path such as theta = pi - 1e-6, r = 1 - 1e-6".into()
        }
        AnyField::Ssh(_) => "the gap closes at k = pi, v = w; evaluate along a limit path such as k = pi - 1e-6".into(),
        AnyField::Custom(_) => "the field X vanishes here; evaluate at a nearby point".into(),
    }
}

fn with_hint(field: &AnyField, e: QgeoError) -> CliError {
    match e {
        QgeoError::Degenerate(_) | QgeoError::TransitionPoint(_) => CliError::Numeric(e, Some(limit_hint(field))),
        e => CliError::Numeric(e, None),
    }
}

fn status_of(e: &QgeoError) -> &'static str {
    match e {
        QgeoError::Domain(_) => "domain",
        QgeoError::Degenerate(_) => "degenerate",
        QgeoError::TransitionPoint(_) => "transition_point",
        QgeoError::Inconsistency(_) => "inconsistent",
        QgeoError::StepTooLarge(_) => "step_too_large",
        QgeoError::Singular(_) => "singular",
        QgeoError::UndefinedCfim(_) => "undefined_cfim",
    }
}

fn param_columns(t: &mut Table, f: &AnyField) {
    for (i, n) in f.names().iter().enumerate() {
        t.column(n.clone(), f.unit(i));
    }
}

fn matrix_columns(t: &mut Table, f: &AnyField, prefix: &str, strict: bool, unit: fn(&str, &str) -> String) {
    let names = f.names();
    for i in 0..names.len() {
        for j in i..names.len() {
            if strict && i == j {
                continue;
            }
            t.column(format!("{prefix}_{}_{}", names[i], names[j]), unit(f.unit(i), f.unit(j)));
        }
    }
}

fn upper(m: &nalgebra::DMatrix<f64>, strict: bool) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if !(strict && i == j) {
                out.push(m[(i, j)]);
            }
        }
    }
    out
}

pub fn geometry(c: &RunConfig) -> Result<Table, CliError> {
    let f = &c.field;
    let n = f.dim();
    let probe = resolve_probe(f, &c.point, c.t, probe_choice(&c.probe)).map_err(|e| with_hint(f, e))?;
    let rep = geometry_report(f, &c.point, probe, c.t, c.repetitions).map_err(|e| with_hint(f, e))?;
    let mut t = Table::default();
    param_columns(&mut t, f);
    t.column("T", "1/H0");
    for a in ["probe_x", "probe_y", "probe_z"] {
        t.column(a, "1");
    }
    t.column("repetitions", "1");
    let mut row: Vec<Cell> = c.point.iter().map(|&v| Cell::Num(v)).collect();
    row.push(Cell::Num(c.t));
    row.extend(probe.to_array().map(Cell::Num));
    row.push(Cell::Int(i64::from(c.repetitions)));
    let names = f.names();
    let mats: [(&str, &nalgebra::DMatrix<f64>, fn(&str, &str) -> String); 5] = [
        ("qmt", &rep.qmt, inverse_unit),
        ("berry", &rep.berry, inverse_unit),
        ("fom", &rep.fom, |_, _| "1".to_string()),
        ("qfim", &rep.qfim, inverse_unit),
        ("qcrb", &rep.qcrb, product_unit),
    ];
    for (part, im) in [("qgt_re", false), ("qgt_im", true)] {
        for i in 0..n {
            for j in 0..n {
                t.column(format!("{part}_{}_{}", names[i], names[j]), inverse_unit(f.unit(i), f.unit(j)));
                let z = rep.qgt[(i, j)];
                row.push(Cell::Num(if im { z.im } else { z.re }));
            }
        }
    }
    for (name, m, unit) in mats {
        for i in 0..n {
            for j in 0..n {
                t.column(format!("{name}_{}_{}", names[i], names[j]), unit(f.unit(i), f.unit(j)));
                row.push(Cell::Num(m[(i, j)]));
            }
        }
    }
    t.column("singular_directions", "1");
    row.push(Cell::Int(rep.singular_directions.len() as i64));
    t.rows.push(row);
    Ok(t)
}

fn max_qmt(c: &RunConfig, p: &[f64]) -> Result<Vec<f64>, QgeoError> {
    match &c.field {
        AnyField::Canonical(f) => {
            Ok(max_qmt_canonical(&CanonicalParams { theta: p[0], phi: p[1], r: p[2], h0: f.h0 }, c.t)?.to_vec())
        }
        AnyField::Ssh(_) => Ok(max_qmt_ssh(&SshParams { v: p[0], w: p[1], k: p[2] }, c.t)?.to_vec()),
        f => (0..f.dim()).map(|l| gauge_factor(f, p, l, c.t).map(|g| 0.25 * g.magnitude * g.magnitude)).collect(),
    }
}

fn quantity(c: &RunConfig, q: Quantity, p: &[f64]) -> Result<Vec<f64>, QgeoError> {
    let f = &c.field;
    let report = || {
        let probe = resolve_probe(f, p, c.t, probe_choice(&c.probe))?;
        geometry_report(f, p, probe, c.t, c.repetitions)
    };
    match q {
        Quantity::MaxQmt => max_qmt(c, p),
        Quantity::Qmt => Ok(upper(&report()?.qmt, false)),
        Quantity::Berry => Ok(upper(&report()?.berry, true)),
        Quantity::Fom => Ok(upper(&report()?.fom, true)),
        Quantity::Qcrb => Ok(upper(&report()?.qcrb, false)),
        Quantity::CoarseChern => Ok(vec![coarse_chern_canonical(p[2])?]),
        Quantity::CoarseChernQuadrature => Ok(vec![coarse_chern_canonical_quadrature(p[2], c.scan.chern_grid)?.value]),
        Quantity::Winding => {
            let w = winding_number(p[0], p[1], c.scan.winding_nodes)?;
            Ok(vec![w.closed_form, w.quadrature])
        }
        Quantity::ControlQmt => Ok(upper(&control_qmt_matrix(f, p, c.t)?, false)),
    }
}

fn quantity_columns(t: &mut Table, f: &AnyField, q: Quantity) -> usize {
    let before = t.names.len();
    match q {
        Quantity::MaxQmt => {
            for (i, n) in f.names().iter().enumerate() {
                t.column(format!("max_qmt_{n}"), inverse_unit(f.unit(i), f.unit(i)));
            }
        }
        Quantity::Qmt => matrix_columns(t, f, "qmt", false, inverse_unit),
        Quantity::Berry => matrix_columns(t, f, "berry", true, inverse_unit),
        Quantity::Fom => matrix_columns(t, f, "fom", true, |_, _| "1".into()),
        Quantity::Qcrb => matrix_columns(t, f, "qcrb", false, product_unit),
        Quantity::CoarseChern => t.column("coarse_chern", "1"),
        Quantity::CoarseChernQuadrature => t.column("coarse_chern_quadrature", "1"),
        Quantity::Winding => {
            t.column("winding", "1");
            t.column("winding_quadrature", "1");
        }
        Quantity::ControlQmt => matrix_columns(t, f, "control_qmt", false, inverse_unit),
    }
    t.names.len() - before
}

/// Grid points in row-major order over the configured axes.
fn grid_points(c: &RunConfig) -> Vec<Vec<f64>> {
    let mut points = vec![c.point.clone()];
    for axis in &c.scan.axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q[axis.index] = v;
                    q
                })
            })
            .collect();
    }
    points
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("QGEO_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("QGEO_THREADS: expected a positive integer, got '{s}'"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn scan(c: &RunConfig) -> Result<Table, CliError> {
    let f = &c.field;
    let mut t = Table::default();
    param_columns(&mut t, f);
    t.column("T", "1/H0");
    let widths: Vec<usize> = c.scan.quantities.iter().map(|&q| quantity_columns(&mut t, f, q)).collect();
    t.column("status", "");
    let points = grid_points(c);
    let row = |p: &Vec<f64>| {
        let mut cells: Vec<Cell> = p.iter().map(|&v| Cell::Num(v)).collect();
        cells.push(Cell::Num(c.t));
        let mut status = "ok";
        for (&q, &w) in c.scan.quantities.iter().zip(&widths) {
            match quantity(c, q, p) {
                Ok(v) => cells.extend(v.into_iter().map(Cell::Num)),
                Err(e) => {
                    if status == "ok" {
                        status = status_of(&e);
                    }
                    cells.extend(std::iter::repeat_n(Cell::Num(f64::NAN), w));
                }
            }
        }
        cells.push(Cell::Text(status.into()));
        cells
    };
    t.rows = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Other(e.to_string()))?
            .install(|| points.par_iter().map(row).collect()),
        None => points.par_iter().map(row).collect(),
    };
    Ok(t)
}

fn tpt_model(c: &RunConfig) -> Result<TptModel, CliError> {
    match &c.field {
        AnyField::Canonical(f) => Ok(TptModel::Canonical { phi0: c.point[1], h0: f.h0 }),
        AnyField::Ssh(_) => Ok(TptModel::Ssh { w0: c.point[1] }),
        AnyField::Custom(_) => Err(CliError::Config("adaptive runs need model canonical or ssh".into())),
    }
}

/// Table plus whether the run reached the peak.
pub fn adaptive(c: &RunConfig) -> Result<(Table, bool), CliError> {
    let model = tpt_model(c)?;
    let initial = c.adaptive.initial.unwrap_or(match model {
        TptModel::Canonical { .. } => [c.point[0], c.point[2]],
        TptModel::Ssh { .. } => [c.point[2], c.point[0]],
    });
    let criterion = PeakCriterion::for_model(&model, c.t)
        .with_eta(c.adaptive.eta)
        .map_err(|e| CliError::Config(format!("adaptive.eta: {e}")))?;
    let noise = Noise { sigma: c.noise_sigma, seed: c.seed };
    let trace = match &c.adaptive.plan {
        AdaptivePlan::Schedule { first, second } => {
            let s = StepSchedule::new(first.clone(), second.clone())?;
            run_schedule(model, initial, &s, c.t, criterion, noise)?
        }
        AdaptivePlan::Fixed { step, max_iters } => {
            auto_search(model, initial, StepPolicy::Fixed { step: *step }, criterion, *max_iters, c.t, noise)?
        }
        AdaptivePlan::Shrinking { step, resolution, max_iters } => auto_search(
            model,
            initial,
            StepPolicy::Shrinking { initial: *step, resolution: *resolution },
            criterion,
            *max_iters,
            c.t,
            noise,
        )?,
    };
    Ok((trace_table(&trace, c.t), trace.converged))
}

fn trace_table(tr: &AdaptiveTrace, t_dur: f64) -> Table {
    let [a, b] = tr.names;
    let unit = |n: &str| match n {
        "theta" | "k" => "rad",
        "v" => "H0",
        _ => "1",
    };
    let mut t = Table::default();
    t.column("iteration", "1");
    for prefix in ["", "acc_", "est_", "dev_"] {
        t.column(format!("{prefix}{a}"), unit(a));
        t.column(format!("{prefix}{b}"), unit(b));
    }
    t.column("T", "1/H0");
    t.column("qmt", inverse_unit(unit(a), unit(a)));
    t.column("residual_norm", "H0");
    t.column("peak", "1");
    t.column("status", "");
    let last = tr.records.len() - 1;
    for (i, r) in tr.records.iter().enumerate() {
        let mut row = vec![Cell::Int(r.iteration as i64)];
        for pair in [r.params, r.accumulated, r.estimates, r.deviations] {
            row.extend(pair.map(Cell::Num));
        }
        row.push(Cell::Num(t_dur));
        row.push(Cell::Num(r.qmt));
        row.push(Cell::Num(r.residual_norm));
        row.push(Cell::Int(i64::from(r.peak)));
        let status = match (i == last, tr.converged) {
            (false, _) => "running",
            (true, true) => "converged",
            (true, false) => "not_converged",
        };
        row.push(Cell::Text(status.into()));
        t.rows.push(row);
    }
    t
}

/// Table plus the names of failed checks.
pub fn verify(c: &RunConfig) -> Result<(Table, Vec<String>), CliError> {
    let mut opts = VerifyOptions {
        points: c.verify.points,
        control_points: c.verify.control_points,
        seed: c.seed,
        t: c.t,
        control_steps: c.verify.control_steps,
        include_control: c.verify.include_control,
        fault: c.verify.fault,
        ..VerifyOptions::default()
    };
    if let Some(fd) = c.verify.fd {
        opts.fd = fd;
    }
    if opts.points == 0 {
        return Err(CliError::Config("verify.points: must be at least 1".into()));
    }
    let report = run_verification(&opts);
    let mut t = Table::default();
    t.column("check", "");
    t.column("samples", "1");
    t.column("max_deviation", "");
    t.column("tolerance", "");
    t.column("status", "");
    for ch in &report.checks {
        t.rows.push(vec![
            Cell::Text(ch.name.clone()),
            Cell::Int(ch.samples as i64),
            Cell::Num(ch.max_deviation),
            Cell::Num(ch.tolerance),
            Cell::Text(if ch.passed { "pass" } else { "fail" }.into()),
        ]);
    }
    let failed = report.failures().iter().map(|c| c.name.clone()).collect();
    Ok((t, failed))
}
