use std::collections::HashMap;
use std::path::PathBuf;

use serde::Deserialize;

use qgeo::geometry::GridSpec;
use qgeo::oracle::{FdScheme, FdSpec};
use qgeo::verify::Fault;
use qgeo::Vec3;

use crate::error::CliError;
use crate::expr;
use crate::field::{AnyField, CustomField};

/// A number or an expression string such as `"pi - 1e-6"`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Expr(String),
}

impl Num {
    fn eval(&self, key: &str) -> Result<f64, CliError> {
        match self {
            Num::Value(v) if v.is_finite() => Ok(*v),
            Num::Value(v) => Err(CliError::Config(format!("{key}: {v} is not finite"))),
            Num::Expr(s) => expr::constant(s).map_err(|e| CliError::Config(format!("{key}: {e}"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<String>,
    #[serde(rename = "T")]
    pub t: Option<Num>,
    pub h0: Option<Num>,
    pub probe: Option<String>,
    pub repetitions: Option<u32>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub noise_sigma: Option<Num>,
    #[serde(default)]
    pub params: HashMap<String, Num>,
    pub custom: Option<RawCustom>,
    pub fd: Option<RawFd>,
    pub scan: Option<RawScan>,
    pub adaptive: Option<RawAdaptive>,
    pub verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCustom {
    pub params: Vec<String>,
    pub x: String,
    pub y: String,
    pub z: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFd {
    pub step: Option<Num>,
    pub scheme: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScan {
    #[serde(default)]
    pub quantities: Vec<String>,
    #[serde(default)]
    pub axis: Vec<RawAxis>,
    pub chern_grid: Option<[usize; 2]>,
    pub winding_nodes: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAxis {
    pub name: String,
    pub from: Num,
    pub to: Num,
    pub n: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAdaptive {
    pub initial: Option<Vec<Num>>,
    pub first: Option<Vec<Num>>,
    pub second: Option<Vec<Num>>,
    pub policy: Option<String>,
    pub step: Option<Num>,
    pub resolution: Option<Num>,
    pub max_iters: Option<usize>,
    pub eta: Option<Num>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVerify {
    pub points: Option<usize>,
    pub control_points: Option<usize>,
    pub control_steps: Option<u64>,
    pub include_control: Option<bool>,
    pub fault: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub model: Option<String>,
    pub t: Option<String>,
    pub probe: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub grid: Vec<String>,
    pub noise_sigma: Option<String>,
    pub fd_step: Option<String>,
    pub seed: Option<u64>,
    pub params: Vec<String>,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeSpec {
    Ground,
    Bloch(Vec3),
    OptimalFor(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    MaxQmt,
    Qmt,
    Berry,
    Fom,
    Qcrb,
    CoarseChern,
    CoarseChernQuadrature,
    Winding,
    ControlQmt,
}

impl Quantity {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "max_qmt" => Quantity::MaxQmt,
            "qmt" => Quantity::Qmt,
            "berry" => Quantity::Berry,
            "fom" => Quantity::Fom,
            "qcrb" => Quantity::Qcrb,
            "coarse_chern" => Quantity::CoarseChern,
            "coarse_chern_quadrature" => Quantity::CoarseChernQuadrature,
            "winding" => Quantity::Winding,
            "control_qmt" => Quantity::ControlQmt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanSpec {
    pub axes: Vec<Axis>,
    pub quantities: Vec<Quantity>,
    pub chern_grid: GridSpec,
    pub winding_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdaptivePlan {
    Schedule { first: Vec<f64>, second: Vec<f64> },
    Fixed { step: f64, max_iters: usize },
    Shrinking { step: f64, resolution: f64, max_iters: usize },
}

#[derive(Debug, Clone)]
pub struct AdaptiveSpec {
    pub initial: Option<[f64; 2]>,
    pub plan: AdaptivePlan,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct VerifySpec {
    pub points: usize,
    pub control_points: usize,
    pub control_steps: u64,
    pub include_control: bool,
    pub fault: Fault,
    pub fd: Option<FdSpec>,
}

pub struct RunConfig {
    pub field: AnyField,
    pub t: f64,
    pub point: Vec<f64>,
    pub probe: ProbeSpec,
    pub repetitions: u32,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub noise_sigma: f64,
    pub scan: ScanSpec,
    pub adaptive: AdaptiveSpec,
    pub verify: VerifySpec,
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn load(path: Option<&PathBuf>, ov: &Overrides) -> Result<RunConfig, CliError> {
    let raw = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| cfg(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| cfg(format!("{}: {e}", p.display())))?
        }
        None => RawConfig::default(),
    };
    resolve(raw, ov)
}

/// `name=from:to:n` with expression endpoints.
fn parse_grid_flag(s: &str) -> Result<RawAxis, CliError> {
    let bad = || cfg(format!("--grid '{s}': expected name=from:to:n"));
    let (name, rest) = s.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let n = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(RawAxis {
        name: name.trim().to_string(),
        from: Num::Expr(parts[0].to_string()),
        to: Num::Expr(parts[1].to_string()),
        n,
    })
}

fn parse_probe(s: &str, field: &AnyField) -> Result<ProbeSpec, CliError> {
    let s = s.trim();
    if s == "ground" {
        return Ok(ProbeSpec::Ground);
    }
    if let Some(name) = s.strip_prefix("optimal:") {
        let i = field.index(name.trim()).ok_or_else(|| cfg(format!("probe: unknown parameter '{name}'")))?;
        return Ok(ProbeSpec::OptimalFor(i));
    }
    let body = s.strip_prefix("bloch:").unwrap_or(s);
    let v: Vec<f64> = body
        .split(',')
        .map(expr::constant)
        .collect::<Result<_, _>>()
        .map_err(|e| cfg(format!("probe: {e}")))?;
    if v.len() != 3 {
        return Err(cfg("probe: expected 'ground', 'optimal:<param>' or a Bloch vector 'x,y,z'"));
    }
    let r = Vec3::new(v[0], v[1], v[2]);
    if r.norm() == 0.0 {
        return Err(cfg("probe: zero Bloch vector"));
    }
    Ok(ProbeSpec::Bloch(r))
}

fn build_field(raw: &RawConfig, model: &str, h0: f64, fd: FdSpec) -> Result<AnyField, CliError> {
    match model {
        "canonical" => Ok(AnyField::canonical(h0)),
        "ssh" => Ok(AnyField::ssh()),
        "custom" => {
            let c = raw.custom.as_ref().ok_or_else(|| cfg("model = \"custom\" needs a [custom] table"))?;
            Ok(AnyField::Custom(CustomField::new(c.params.clone(), [&c.x, &c.y, &c.z], fd)?))
        }
        other => Err(cfg(format!("model: unknown model '{other}' (canonical | ssh | custom)"))),
    }
}

fn default_point(model: &str, n: usize) -> Vec<f64> {
    match model {
        "canonical" => vec![std::f64::consts::FRAC_PI_2, 0.0, 0.5],
        "ssh" => vec![0.5, 1.0, std::f64::consts::FRAC_PI_2],
        _ => vec![0.0; n],
    }
}

fn eval_list(v: &[Num], key: &str) -> Result<Vec<f64>, CliError> {
    v.iter().enumerate().map(|(i, x)| x.eval(&format!("{key}[{i}]"))).collect()
}

pub fn resolve(mut raw: RawConfig, ov: &Overrides) -> Result<RunConfig, CliError> {
    if let Some(m) = &ov.model {
        raw.model = Some(m.clone());
    }
    if let Some(t) = &ov.t {
        raw.t = Some(Num::Expr(t.clone()));
    }
    if let Some(p) = &ov.probe {
        raw.probe = Some(p.clone());
    }
    if let Some(o) = &ov.out {
        raw.out = Some(o.clone());
    }
    if let Some(f) = &ov.format {
        raw.format = Some(f.clone());
    }
    if let Some(s) = &ov.noise_sigma {
        raw.noise_sigma = Some(Num::Expr(s.clone()));
    }
    if let Some(s) = &ov.fd_step {
        raw.fd.get_or_insert_with(RawFd::default).step = Some(Num::Expr(s.clone()));
    }
    if ov.seed.is_some() {
        raw.seed = ov.seed;
    }
    if !ov.grid.is_empty() {
        let axes = ov.grid.iter().map(|g| parse_grid_flag(g)).collect::<Result<Vec<_>, _>>()?;
        raw.scan.get_or_insert_with(RawScan::default).axis = axes;
    }
    for p in &ov.params {
        let (k, v) = p.split_once('=').ok_or_else(|| cfg(format!("--param '{p}': expected name=expr")))?;
        raw.params.insert(k.trim().to_string(), Num::Expr(v.to_string()));
    }
    if let Some(f) = &ov.fault {
        raw.verify.get_or_insert_with(RawVerify::default).fault = Some(f.clone());
    }

    let fd_raw = raw.fd.take().unwrap_or_default();
    let fd_explicit = fd_raw.step.is_some() || fd_raw.scheme.is_some();
    let step = fd_raw.step.as_ref().map(|s| s.eval("fd.step")).transpose()?.unwrap_or(1e-5);
    let scheme = match fd_raw.scheme.as_deref().unwrap_or("central") {
        "central" => FdScheme::Central,
        "richardson" => FdScheme::Richardson,
        other => return Err(cfg(format!("fd.scheme: unknown scheme '{other}' (central | richardson)"))),
    };
    let fd = FdSpec::new(step, scheme).map_err(|e| cfg(format!("fd.step: {e}")))?;

    let model = raw.model.clone().unwrap_or_else(|| "canonical".into());
    let h0 = raw.h0.as_ref().map(|h| h.eval("h0")).transpose()?.unwrap_or(1.0);
    if h0 <= 0.0 {
        return Err(cfg("h0: must be positive"));
    }
    let field = build_field(&raw, &model, h0, fd)?;

    let t = raw.t.as_ref().map(|t| t.eval("T")).transpose()?.unwrap_or(10.0);
    if t <= 0.0 {
        return Err(cfg(format!("T: duration must be positive, got {t}")));
    }

    let names = field.param_names();
    let mut point = default_point(&model, names.len());
    let mut keys: Vec<&String> = raw.params.keys().collect();
    keys.sort();
    for k in keys {
        let i = field
            .index(k)
            .ok_or_else(|| cfg(format!("params.{k}: not a parameter of model '{model}' ({})", names.join(", "))))?;
        point[i] = raw.params[k].eval(&format!("params.{k}"))?;
    }

    let probe = parse_probe(raw.probe.as_deref().unwrap_or("ground"), &field)?;
    let repetitions = raw.repetitions.unwrap_or(1);
    if repetitions == 0 {
        return Err(cfg("repetitions: must be at least 1"));
    }
    let format = match raw.format.as_deref().unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(cfg(format!("format: unknown format '{other}' (csv | json)"))),
    };
    let noise_sigma = raw.noise_sigma.as_ref().map(|s| s.eval("noise_sigma")).transpose()?.unwrap_or(0.0);
    if noise_sigma < 0.0 {
        return Err(cfg("noise_sigma: must be non-negative"));
    }

    let scan_raw = raw.scan.take().unwrap_or_default();
    let mut axes = Vec::new();
    for (i, a) in scan_raw.axis.iter().enumerate() {
        let key = format!("scan.axis[{i}]");
        let index = field
            .index(&a.name)
            .ok_or_else(|| cfg(format!("{key}.name: unknown parameter '{}'", a.name)))?;
        if axes.iter().any(|x: &Axis| x.index == index) {
            return Err(cfg(format!("{key}.name: '{}' appears twice", a.name)));
        }
        let from = a.from.eval(&format!("{key}.from"))?;
        let to = a.to.eval(&format!("{key}.to"))?;
        if a.n < 2 {
            return Err(cfg(format!("{key}.n: grid count must be at least 2")));
        }
        if from == to {
            return Err(cfg(format!("{key}: empty range")));
        }
        let values = (0..a.n)
            .map(|k| if k + 1 == a.n { to } else { from + (to - from) * k as f64 / (a.n - 1) as f64 })
            .collect();
        axes.push(Axis { name: a.name.clone(), index, values });
    }
    if axes.len() > 2 {
        return Err(cfg("scan.axis: at most two axes"));
    }
    let quantities = if scan_raw.quantities.is_empty() {
        vec![Quantity::MaxQmt]
    } else {
        scan_raw
            .quantities
            .iter()
            .map(|q| Quantity::parse(q).ok_or_else(|| cfg(format!("scan.quantities: unknown quantity '{q}'"))))
            .collect::<Result<_, _>>()?
    };
    for q in &quantities {
        let ok = match q {
            Quantity::CoarseChern | Quantity::CoarseChernQuadrature => model == "canonical",
            Quantity::Winding => model == "ssh",
            _ => true,
        };
        if !ok {
            return Err(cfg(format!("scan.quantities: {q:?} is not available for model '{model}'")));
        }
    }
    let chern_grid = match scan_raw.chern_grid {
        Some([nx, ny]) => GridSpec { nx, ny },
        None => GridSpec::default(),
    };
    let winding_nodes = scan_raw.winding_nodes.unwrap_or(4096);

    let ad = raw.adaptive.take().unwrap_or_default();
    let initial = match &ad.initial {
        Some(v) => {
            let v = eval_list(v, "adaptive.initial")?;
            if v.len() != 2 {
                return Err(cfg("adaptive.initial: expected two values"));
            }
            Some([v[0], v[1]])
        }
        None => None,
    };
    let has_schedule = ad.first.is_some() || ad.second.is_some();
    let max_iters = ad.max_iters.unwrap_or(500);
    let plan = match (ad.policy.as_deref(), has_schedule) {
        (Some(_), true) => return Err(cfg("adaptive: give either a schedule (first/second) or a policy, not both")),
        (None, _) => AdaptivePlan::Schedule {
            first: eval_list(ad.first.as_deref().unwrap_or(&[]), "adaptive.first")?,
            second: eval_list(ad.second.as_deref().unwrap_or(&[]), "adaptive.second")?,
        },
        (Some(p), false) => {
            let step = ad.step.as_ref().map(|s| s.eval("adaptive.step")).transpose()?.unwrap_or(0.3);
            match p {
                "fixed" => AdaptivePlan::Fixed { step, max_iters },
                "shrinking" => AdaptivePlan::Shrinking {
                    step,
                    resolution: ad.resolution.as_ref().map(|s| s.eval("adaptive.resolution")).transpose()?.unwrap_or(1e-4),
                    max_iters,
                },
                other => return Err(cfg(format!("adaptive.policy: unknown policy '{other}' (fixed | shrinking)"))),
            }
        }
    };
    let eta = ad.eta.as_ref().map(|s| s.eval("adaptive.eta")).transpose()?.unwrap_or(1e-3);

    let vr = raw.verify.take().unwrap_or_default();
    let fault = match vr.fault.as_deref().unwrap_or("none") {
        "none" => Fault::None,
        "flip-berry-sign" => Fault::FlipBerrySign,
        other => return Err(cfg(format!("verify.fault: unknown fault '{other}' (none | flip-berry-sign)"))),
    };
    let verify = VerifySpec {
        points: vr.points.unwrap_or(100),
        control_points: vr.control_points.unwrap_or(10),
        control_steps: vr.control_steps.unwrap_or(10_000),
        include_control: vr.include_control.unwrap_or(true),
        fault,
        fd: fd_explicit.then_some(fd),
    };

    Ok(RunConfig {
        field,
        t,
        point,
        probe,
        repetitions,
        format,
        out: raw.out,
        seed: raw.seed.unwrap_or(20240611),
        noise_sigma,
        scan: ScanSpec { axes, quantities, chern_grid, winding_nodes },
        adaptive: AdaptiveSpec { initial, plan, eta },
        verify,
    })
}
