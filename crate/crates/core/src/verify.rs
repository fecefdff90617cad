//! Closed form versus oracle suites shared by the command line and tests.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::control::{bell_state, control_qgt_oracle, control_qmt_matrix};
use crate::error::Result;
use crate::geometry::{geometry_report, HamiltonianField};
use crate::measurement::{encode, qfim_pure};
use crate::models::{
    canonical_field, ground_berry_matrix_canonical, ground_berry_matrix_ssh, ground_qmt_matrix_canonical,
    ground_qmt_matrix_ssh, ssh_field, CanonicalParams, SshParams,
};
use crate::oracle::{qgt_fd, FdScheme, FdSpec};
use crate::su2::{ground_state, state_from_bloch, Vec3};

/// Deliberate corruption of a closed form, used as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the canonical ground-state Berry curvature.
    FlipBerrySign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub points: usize,
    pub control_points: usize,
    pub seed: u64,
    pub t: f64,
    pub fd: FdSpec,
    pub control_steps: u64,
    pub include_control: bool,
    pub fault: Fault,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            points: 100,
            control_points: 10,
            seed: 20240611,
            t: 10.0,
            fd: FdSpec::new(1e-4, FdScheme::Richardson).expect("valid step"),
            control_steps: 10_000,
            include_control: true,
            fault: Fault::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Random canonical point off the transition (ξ ≥ 0.01), θ ∈ [0.1, π − 0.1].
pub fn sample_canonical<R: Rng>(rng: &mut R) -> CanonicalParams {
    loop {
        let theta = rng.random_range(0.1..PI - 0.1);
        let phi = rng.random_range(0.0..2.0 * PI);
        let r = rng.random_range(0.0..2.0);
        if 1.0 + r * r + 2.0 * r * theta.cos() >= 0.01 {
            return CanonicalParams { theta, phi, r, h0: 1.0 };
        }
    }
}

/// Random SSH point with v, w ∈ [0.1, 2] and ξ′ ≥ 0.01.
pub fn sample_ssh<R: Rng>(rng: &mut R) -> SshParams {
    loop {
        let v = rng.random_range(0.1..2.0);
        let w = rng.random_range(0.1..2.0);
        let k = rng.random_range(-PI..PI);
        if v * v + w * w + 2.0 * v * w * k.cos() >= 0.01 {
            return SshParams { v, w, k };
        }
    }
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

fn closed_qgt(g: &nalgebra::Matrix3<f64>, om: &nalgebra::Matrix3<f64>) -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |i, j| C64::new(g[(i, j)], -0.5 * om[(i, j)]))
}

fn max_abs(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

fn check(name: &str, devs: Vec<f64>, tolerance: f64) -> CheckResult {
    let max_deviation = devs.iter().copied().fold(0.0f64, |a, d| if a.is_nan() || d.is_nan() { f64::NAN } else { a.max(d) });
    CheckResult {
        name: name.into(),
        samples: devs.len(),
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    }
}

fn collect(devs: Vec<Result<f64>>) -> Vec<f64> {
    devs.into_iter().map(|d| d.unwrap_or(f64::NAN)).collect()
}

pub fn run_verification(opts: &VerifyOptions) -> VerificationReport {
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let canon: Vec<(CanonicalParams, Vec3)> = (0..opts.points).map(|_| (sample_canonical(&mut rng), random_unit(&mut rng))).collect();
    let ssh: Vec<(SshParams, Vec3)> = (0..opts.points).map(|_| (sample_ssh(&mut rng), random_unit(&mut rng))).collect();
    let t = opts.t;
    let cf = canonical_field(1.0);
    let sf = ssh_field();
    let fault = opts.fault;
    let mut checks = Vec::new();

    let d = canon
        .par_iter()
        .map(|(p, _)| -> Result<f64> {
            let g = ground_qmt_matrix_canonical(p, t)?;
            let mut om = ground_berry_matrix_canonical(p, t)?;
            if fault == Fault::FlipBerrySign {
                om = -om;
            }
            let probe = ground_state(cf.eval(&p.point())?)?;
            Ok(max_abs(&closed_qgt(&g, &om), &qgt_fd(&cf, &p.point(), &probe, t, opts.fd)?))
        })
        .collect();
    checks.push(check("canonical_ground_qgt_vs_oracle", collect(d), 1e-6));

    let d = ssh
        .par_iter()
        .map(|(p, _)| -> Result<f64> {
            let g = ground_qmt_matrix_ssh(p, t)?;
            let om = ground_berry_matrix_ssh(p, t)?;
            let probe = ground_state(sf.eval(&p.point())?)?;
            Ok(max_abs(&closed_qgt(&g, &om), &qgt_fd(&sf, &p.point(), &probe, t, opts.fd)?))
        })
        .collect();
    checks.push(check("ssh_ground_qgt_vs_oracle", collect(d), 1e-6));

    fn gauge_dev<F: HamiltonianField>(f: &F, point: &[f64], probe: Vec3, t: f64, fd: FdSpec) -> Result<f64> {
        let rep = geometry_report(f, point, probe, t, 1)?;
        Ok(max_abs(&rep.qgt, &qgt_fd(f, point, &state_from_bloch(probe)?, t, fd)?))
    }
    let d = canon.par_iter().map(|(p, r)| gauge_dev(&cf, &p.point(), *r, t, opts.fd)).collect();
    checks.push(check("canonical_random_probe_qgt_vs_oracle", collect(d), 1e-6));
    let d = ssh.par_iter().map(|(p, r)| gauge_dev(&sf, &p.point(), *r, t, opts.fd)).collect();
    checks.push(check("ssh_random_probe_qgt_vs_oracle", collect(d), 1e-6));

    let d = canon
        .par_iter()
        .map(|(p, _)| -> Result<f64> {
            let probe = ground_state(cf.eval(&p.point())?)?.bloch();
            let e = encode(&cf, &p.point(), probe, t, [0, 2])?;
            let f = qfim_pure(&e.state, &e.derivatives);
            let g = ground_qmt_matrix_canonical(p, t)?;
            let want = [[g[(0, 0)], g[(0, 2)]], [g[(2, 0)], g[(2, 2)]]];
            let mut m: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    m = m.max((f[(i, j)] - 4.0 * want[i][j]).abs());
                }
            }
            Ok(m)
        })
        .collect();
    checks.push(check("measurement_qfim_vs_closed_form", collect(d), 1e-8));

    if opts.include_control {
        let pts: Vec<CanonicalParams> = (0..opts.control_points).map(|_| sample_canonical(&mut rng)).collect();
        let res: Vec<Result<(f64, f64)>> = pts
            .par_iter()
            .map(|p| {
                let o = control_qgt_oracle(&cf, &p.point(), &bell_state(), t, opts.control_steps, FdSpec::default())?;
                let want = control_qmt_matrix(&cf, &p.point(), t)?;
                let scale = want.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let rel = (o.qmt() - &want).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
                let berry = o.berry().iter().fold(0.0f64, |a, v| a.max(v.abs()));
                Ok((rel, berry))
            })
            .collect();
        let (rel, berry): (Vec<f64>, Vec<f64>) =
            res.into_iter().map(|r| r.unwrap_or((f64::NAN, f64::NAN))).unzip();
        checks.push(check("control_qmt_vs_trotter_oracle", rel, 2e-4));
        checks.push(check("control_berry_vanishes", berry, 1e-8));
    }
    VerificationReport { checks }
}
