//! Adaptive estimation by driving the TPT parameters to their critical values.
//!
//! The experimenter adjusts (θ, r) or (k, v) by known steps, watches the
//! peak-parameter QMT, and once the peak is reached recovers the unknown
//! initial values as critical value minus accumulated steps.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::control::residual_hamiltonian;
use crate::error::{ensure_finite, QgeoError, Result};
use crate::models::TptModel;
use crate::su2::Vec3;

/// Ordered step lists for the two TPT parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepSchedule {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl StepSchedule {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        ensure_finite(&first, "step sizes")?;
        ensure_finite(&second, "step sizes")?;
        Ok(Self { first, second })
    }

    /// Steps applied one per iteration, alternating first/second while both
    /// lists have entries left.
    pub fn interleaved(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.first.len() + self.second.len());
        for i in 0..self.first.len().max(self.second.len()) {
            if let Some(&s) = self.first.get(i) {
                out.push((0, s));
            }
            if let Some(&s) = self.second.get(i) {
                out.push((1, s));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakCriterion {
    eta: f64,
    reference: f64,
}

impl PeakCriterion {
    pub fn new(eta: f64, reference: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(QgeoError::Domain(format!("eta {eta} outside (0, 1)")));
        }
        ensure_finite(&[reference], "peak reference")?;
        Ok(Self { eta, reference })
    }

    /// η = 1e-3 against the model's peak value at duration `t`.
    pub fn for_model(model: &TptModel, t: f64) -> Self {
        Self { eta: 1e-3, reference: model.peak_reference(t) }
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(eta, self.reference)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn fires(&self, qmt: f64) -> bool {
        qmt >= (1.0 - self.eta) * self.reference
    }
}

/// critical − accumulated, componentwise.
pub fn recover_initials(critical: [f64; 2], accumulated: [f64; 2]) -> [f64; 2] {
    [critical[0] - accumulated[0], critical[1] - accumulated[1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub params: [f64; 2],
    pub accumulated: [f64; 2],
    pub qmt: f64,
    pub residual_norm: f64,
    pub estimates: [f64; 2],
    pub deviations: [f64; 2],
    pub peak: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrace {
    pub model: TptModel,
    pub names: [&'static str; 2],
    pub records: Vec<TraceRecord>,
    pub estimates: [f64; 2],
    pub deviations: [f64; 2],
    pub converged: bool,
    pub criterion: PeakCriterion,
}

impl AdaptiveTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }
}

/// Measurement noise model: additive Gaussian with standard deviation σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Noise {
    pub sigma: f64,
    pub seed: u64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

struct Meter {
    model: TptModel,
    t: f64,
    rng: StdRng,
    normal: Option<Normal<f64>>,
}

impl Meter {
    fn new(model: TptModel, t: f64, noise: Noise) -> Result<Self> {
        ensure_finite(&[t, noise.sigma], "run settings")?;
        if t <= 0.0 {
            return Err(QgeoError::Domain(format!("duration must be positive, got {t}")));
        }
        if noise.sigma < 0.0 {
            return Err(QgeoError::Domain("noise sigma must be non-negative".into()));
        }
        let normal = if noise.sigma > 0.0 {
            Some(Normal::new(0.0, noise.sigma).map_err(|e| QgeoError::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { model, t, rng: StdRng::seed_from_u64(noise.seed), normal })
    }

    fn measure(&mut self, x: [f64; 2]) -> Result<f64> {
        let q = self.model.peak_qmt(x, self.t)?;
        Ok(match &self.normal {
            Some(n) => q + n.sample(&mut self.rng),
            None => q,
        })
    }
}

fn record(
    model: &TptModel,
    iteration: usize,
    initial: [f64; 2],
    accumulated: [f64; 2],
    critical: [f64; 2],
    qmt: f64,
    criterion: &PeakCriterion,
) -> Result<TraceRecord> {
    let params = [initial[0] + accumulated[0], initial[1] + accumulated[1]];
    let estimates = recover_initials(critical, accumulated);
    Ok(TraceRecord {
        iteration,
        params,
        accumulated,
        qmt,
        residual_norm: residual_hamiltonian(model, initial, accumulated)?.norm(),
        estimates,
        deviations: [(estimates[0] - initial[0]).abs(), (estimates[1] - initial[1]).abs()],
        peak: criterion.fires(qmt),
    })
}

/// Replays a prescribed schedule, one step per iteration.
pub fn run_schedule(
    model: TptModel,
    initial: [f64; 2],
    schedule: &StepSchedule,
    t: f64,
    criterion: PeakCriterion,
    noise: Noise,
) -> Result<AdaptiveTrace> {
    ensure_finite(&initial, "initial values")?;
    let mut meter = Meter::new(model, t, noise)?;
    let critical = model.critical();
    let mut acc = [0.0; 2];
    let mut records = vec![record(&model, 0, initial, acc, critical, meter.measure(initial)?, &criterion)?];
    for (i, (coord, step)) in schedule.interleaved().into_iter().enumerate() {
        acc[coord] += step;
        let x = [initial[0] + acc[0], initial[1] + acc[1]];
        records.push(record(&model, i + 1, initial, acc, critical, meter.measure(x)?, &criterion)?);
    }
    let last = records.last().cloned().expect("trace has an initial record");
    Ok(AdaptiveTrace {
        model,
        names: model.names(),
        estimates: last.estimates,
        deviations: last.deviations,
        converged: last.peak,
        records,
        criterion,
    })
}

/// Canonical model: true (θ₀, r₀) at fixed φ₀, H₀ = 1, first list δθ, second δr.
pub fn run_schedule_canonical(
    theta0: f64,
    phi0: f64,
    r0: f64,
    schedule: &StepSchedule,
    t: f64,
) -> Result<AdaptiveTrace> {
    let model = TptModel::Canonical { phi0, h0: 1.0 };
    run_schedule(model, [theta0, r0], schedule, t, PeakCriterion::for_model(&model, t), Noise::default())
}

/// SSH model: true (k₀, v₀) at fixed w₀, first list δk, second δv.
pub fn run_schedule_ssh(k0: f64, v0: f64, w0: f64, schedule: &StepSchedule, t: f64) -> Result<AdaptiveTrace> {
    let model = TptModel::Ssh { w0 };
    run_schedule(model, [k0, v0], schedule, t, PeakCriterion::for_model(&model, t), Noise::default())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Constant step; a coordinate stops once neither direction improves.
    Fixed { step: f64 },
    /// Step halves whenever neither direction improves; converged once every
    /// step is at or below `resolution`.
    Shrinking { initial: f64, resolution: f64 },
}

impl StepPolicy {
    pub fn shrinking(initial: f64) -> Self {
        StepPolicy::Shrinking { initial, resolution: 1e-4 }
    }
}

/// Alternating-coordinate hill climb on the measured peak-parameter QMT.
///
/// Candidates must stay inside the model's parameter box and in the
/// topological phase of the starting point, so the climb approaches the
/// transition from one side instead of drifting onto off-transition ridges.
pub fn auto_search(
    model: TptModel,
    hidden_initial: [f64; 2],
    policy: StepPolicy,
    criterion: PeakCriterion,
    max_iters: usize,
    t: f64,
    noise: Noise,
) -> Result<AdaptiveTrace> {
    ensure_finite(&hidden_initial, "initial values")?;
    if max_iters == 0 {
        return Err(QgeoError::Domain("max iterations must be at least 1".into()));
    }
    let (step, floor) = match policy {
        StepPolicy::Fixed { step } => (step, 0.0),
        StepPolicy::Shrinking { initial, resolution } => (initial, resolution),
    };
    if !(step > 0.0 && step.is_finite()) || floor < 0.0 {
        return Err(QgeoError::Domain("policy step sizes must be positive".into()));
    }
    let mut steps = [step, step];
    let mut stuck = [false, false];
    let mut meter = Meter::new(model, t, noise)?;
    let start_phase = model.phase(hidden_initial);
    let mut acc = [0.0; 2];
    let mut x = hidden_initial;
    let mut f = meter.measure(x)?;
    let mut critical = model.critical();
    let mut records = vec![record(&model, 0, hidden_initial, acc, critical, f, &criterion)?];
    let at_peak = f >= criterion.reference() * (1.0 - 1e-12);
    let mut converged = at_peak;
    let mut coord = 0;
    let mut iter = 0;
    while !converged && iter < max_iters {
        iter += 1;
        let mut moved = false;
        if !stuck[coord] {
            for dir in [1.0, -1.0] {
                let mut cand = x;
                cand[coord] += dir * steps[coord];
                if !model.in_domain(cand) || model.phase(cand).is_none() || model.phase(cand) != start_phase {
                    continue;
                }
                let fc = meter.measure(cand)?;
                if fc > f {
                    x = cand;
                    f = fc;
                    acc[coord] += dir * steps[coord];
                    moved = true;
                    break;
                }
            }
            if !moved {
                match policy {
                    StepPolicy::Fixed { .. } => stuck[coord] = true,
                    StepPolicy::Shrinking { .. } => steps[coord] *= 0.5,
                }
            }
        }
        // k approaches ±π from whichever side the climb took.
        if let TptModel::Ssh { .. } = model {
            critical[0] = std::f64::consts::PI.copysign(x[0]);
        }
        records.push(record(&model, iter, hidden_initial, acc, critical, f, &criterion)?);
        let fired = criterion.fires(f);
        converged = match policy {
            StepPolicy::Fixed { .. } => fired,
            StepPolicy::Shrinking { .. } => fired && steps.iter().all(|&s| s <= floor),
        };
        if stuck[0] && stuck[1] {
            break;
        }
        coord = 1 - coord;
    }
    let last = records.last().cloned().expect("trace has an initial record");
    Ok(AdaptiveTrace {
        model,
        names: model.names(),
        estimates: last.estimates,
        deviations: last.deviations,
        converged,
        records,
        criterion,
    })
}

/// Probe (c_x, −c_x/tanφ₀, c_z), normalized, orthogonal to the limiting
/// e_θ = (cosφ₀, sinφ₀, 0). Falls back to (−sinφ₀, cosφ₀, 0) when tanφ₀ = 0
/// or the simplified form has zero norm.
pub fn simplified_probe_canonical(phi0: f64, cx: f64, cz: f64) -> Result<Vec3> {
    ensure_finite(&[phi0, cx, cz], "probe coefficients")?;
    let tan = phi0.tan();
    if tan.abs() > 1e-12 && tan.is_finite() {
        if let Some(u) = Vec3::new(cx, -cx / tan, cz).unit() {
            return Ok(u);
        }
    }
    Ok(Vec3::new(-phi0.sin(), phi0.cos(), 0.0))
}

/// Probe (d_x, −1, d_z), normalized, as printed. Note that it is not
/// orthogonal to the limiting e_k = (0, 1, 0); peak evaluations use g^(M)_kk,
/// which assumes an orthogonal probe.
pub fn simplified_probe_ssh(dx: f64, dz: f64) -> Result<Vec3> {
    ensure_finite(&[dx, dz], "probe coefficients")?;
    Ok(Vec3::new(dx, -1.0, dz).unit().expect("non-zero by construction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn probe_fallback() {
        let p = simplified_probe_canonical(0.0, 0.3, 0.5).unwrap();
        assert!(p.max_abs_diff(Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
        let q = simplified_probe_canonical(0.7, 0.3, 0.5).unwrap();
        assert!(q.dot(Vec3::new(0.7f64.cos(), 0.7f64.sin(), 0.0)).abs() < 1e-15);
    }

    #[test]
    fn interleaving() {
        let s = StepSchedule::new(vec![1.0, 2.0, 3.0], vec![10.0]).unwrap();
        assert_eq!(s.interleaved(), vec![(0, 1.0), (1, 10.0), (0, 2.0), (0, 3.0)]);
    }

    #[test]
    fn recover_examples() {
        let e = recover_initials([PI, 1.0], [PI / 3.0 + PI / 5.0 + PI / 6.0 + PI / 15.0, 0.77]);
        assert!(((e[0] - PI / 4.0).abs() - 0.052).abs() < 1e-3);
        assert!(((e[1] - 0.2).abs() - 0.03).abs() < 1e-12);
        assert_eq!(recover_initials([PI, 1.0], [0.0, 0.0]), [PI, 1.0]);
    }

    #[test]
    fn criterion_bounds() {
        assert!(PeakCriterion::new(0.0, 1.0).is_err());
        assert!(PeakCriterion::new(1.0, 1.0).is_err());
        let c = PeakCriterion::new(1e-3, 100.0).unwrap();
        assert!(c.fires(99.9));
        assert!(!c.fires(99.89));
    }

    #[test]
    fn start_at_transition() {
        let m = TptModel::Canonical { phi0: 0.3, h0: 1.0 };
        let tr = auto_search(m, [PI, 1.0], StepPolicy::shrinking(0.3), PeakCriterion::for_model(&m, 10.0), 100, 10.0, Noise::default()).unwrap();
        assert_eq!(tr.iterations(), 0);
        assert!(tr.converged);
        assert_eq!(tr.deviations, [0.0, 0.0]);
    }
}
