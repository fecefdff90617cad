//! Control-enhanced sensing with H_c = −H(λ̃) on an ancilla-extended probe.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, QgeoError, Result};
use crate::geometry::{check_point, HamiltonianField};
use crate::models::TptModel;
use crate::oracle::{qgt_fd_states, FdSpec};
use crate::su2::{evolve, Unitary2, Vec3};

/// Trotter step count below which the oracle reports a convergence warning.
pub const MIN_TROTTER_STEPS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSpec {
    pub estimate: Vec<f64>,
    pub control_field: Vec3,
}

impl ControlSpec {
    /// Control built from an estimate λ̃: X_c = −X(λ̃).
    pub fn from_estimate<F: HamiltonianField + ?Sized>(field: &F, estimate: &[f64]) -> Result<Self> {
        check_point(field, estimate)?;
        Ok(Self { estimate: estimate.to_vec(), control_field: -field.eval(estimate)? })
    }

    /// Composite field S = X(λ) + X_c.
    pub fn composite<F: HamiltonianField + ?Sized>(&self, field: &F, point: &[f64]) -> Result<Vec3> {
        Ok(field.eval(point)? + self.control_field)
    }
}

/// g^(c)_μν = T²/4 (∂_μX·∂_νX).
pub fn control_qmt<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    mu: usize,
    nu: usize,
    t: f64,
) -> Result<f64> {
    check_point(field, point)?;
    ensure_finite(&[t], "duration")?;
    if t <= 0.0 {
        return Err(QgeoError::Domain(format!("duration must be positive, got {t}")));
    }
    Ok(0.25 * t * t * field.partial(point, mu)?.dot(field.partial(point, nu)?))
}

pub fn control_qmt_matrix<F: HamiltonianField + ?Sized>(field: &F, point: &[f64], t: f64) -> Result<DMatrix<f64>> {
    let n = field.dim();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = control_qmt(field, point, i, j, t)?;
        }
    }
    Ok(g)
}

/// (|00⟩ + |11⟩)/√2, ordered |system, ancilla⟩.
pub fn bell_state() -> [C64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]
}

fn check_maximally_entangled(psi: &[C64; 4]) -> Result<()> {
    let n: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    // Reduced system state ρ_ab = Σ_c ψ_ac ψ*_bc must be I/2.
    let r00 = psi[0].norm_sqr() + psi[1].norm_sqr();
    let r11 = psi[2].norm_sqr() + psi[3].norm_sqr();
    let r01 = psi[0] * psi[2].conj() + psi[1] * psi[3].conj();
    if (n - 1.0).abs() > 1e-10 || (r00 - 0.5).abs() > 1e-10 || (r11 - 0.5).abs() > 1e-10 || r01.norm() > 1e-10 {
        return Err(QgeoError::Domain("probe is not a normalized maximally entangled state".into()));
    }
    Ok(())
}

fn apply_system(u: &Unitary2, psi: &[C64; 4]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 4];
    for a in 0..2 {
        for b in 0..2 {
            out[2 * a + b] = u.m[a][0] * psi[b] + u.m[a][1] * psi[2 + b];
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ControlOracle {
    pub qgt: DMatrix<C64>,
    pub steps: u64,
    /// Set when the Trotter step count is below 10⁴.
    pub warning: Option<String>,
}

impl ControlOracle {
    pub fn qmt(&self) -> DMatrix<f64> {
        self.qgt.map(|c| c.re)
    }

    pub fn berry(&self) -> DMatrix<f64> {
        self.qgt.map(|c| -2.0 * c.im)
    }
}

/// Finite-difference QGT of ((U_c U(λ))^N ⊗ I)|probe⟩ with per-step duration
/// T/N and perfect control at the evaluation point.
pub fn control_qgt_oracle<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: &[C64; 4],
    t: f64,
    steps: u64,
    spec: FdSpec,
) -> Result<ControlOracle> {
    check_point(field, point)?;
    check_maximally_entangled(probe)?;
    if steps == 0 || t <= 0.0 {
        return Err(QgeoError::Domain("need positive duration and step count".into()));
    }
    let control = ControlSpec::from_estimate(field, point)?;
    let dt = t / steps as f64;
    let uc = evolve(control.control_field, dt)?;
    let state = |p: &[f64]| -> Result<Vec<C64>> {
        let cell = uc.mul(&evolve(field.eval(p)?, dt)?);
        Ok(apply_system(&cell.pow(steps), probe))
    };
    let qgt = qgt_fd_states(&state, point, spec)?;
    let warning = (steps < MIN_TROTTER_STEPS)
        .then(|| format!("{steps} Trotter steps is below {MIN_TROTTER_STEPS}; composite may not converge"));
    Ok(ControlOracle { qgt, steps, warning })
}

/// n (canonical) or u (SSH): the model field at initial values plus
/// accumulated steps, which vanishes once the steps close the gap.
pub fn residual_hamiltonian(model: &TptModel, initial: [f64; 2], accumulated: [f64; 2]) -> Result<Vec3> {
    model.field_at([initial[0] + accumulated[0], initial[1] + accumulated[1]])
}
