//! Closed-form gauge potentials and the geometric quantities built from them.
//!
//! For U = exp(−iT X·J) the gauge potential of parameter ℓ is
//! Ã_ℓ = −Y_ℓ·J with
//!
//! Y_ℓ = −T ∂X + T³ p(b) X×(X×∂X) + T² c(b) X×∂X,  b = T|X|,
//!
//! p(b) = (sin b − b)/b³ and c(b) = (1 − cos b)/b². Working with these
//! products avoids the removable 0/0 of the normalized sin α decomposition.

mod invariants;

pub use invariants::{
    chern_number, coarse_grain, winding_number, ChernEstimate, GridSpec, Rect, WindingEstimate,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, QgeoError, Result};
use crate::su2::{ground_state, Vec3};

/// Relative |X| below which the ground state is set by round-off.
const GROUND_GAP_FLOOR: f64 = 1e-12;

/// Smooth map from a parameter point to the SU(2) coefficient vector X(λ).
pub trait HamiltonianField: Send + Sync {
    fn names(&self) -> &[String];
    fn eval(&self, point: &[f64]) -> Result<Vec3>;
    fn partial(&self, point: &[f64], index: usize) -> Result<Vec3>;

    fn dim(&self) -> usize {
        self.names().len()
    }

    fn index_of(&self, name: &str) -> Result<usize> {
        self.names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| QgeoError::Domain(format!("unknown parameter '{name}'")))
    }
}

pub(crate) fn check_point<F: HamiltonianField + ?Sized>(field: &F, point: &[f64]) -> Result<()> {
    if point.len() != field.dim() {
        return Err(QgeoError::Domain(format!(
            "expected {} parameters, got {}",
            field.dim(),
            point.len()
        )));
    }
    ensure_finite(point, "parameter point")
}

/// Largest deviation between supplied partials and central differences.
pub fn check_partials<F: HamiltonianField + ?Sized>(field: &F, point: &[f64], h: f64) -> Result<f64> {
    check_point(field, point)?;
    let mut worst: f64 = 0.0;
    let mut p = point.to_vec();
    for l in 0..field.dim() {
        p[l] = point[l] + h;
        let up = field.eval(&p)?;
        p[l] = point[l] - h;
        let down = field.eval(&p)?;
        p[l] = point[l];
        let fd = (up - down) * (0.5 / h);
        worst = worst.max(fd.max_abs_diff(field.partial(point, l)?));
    }
    Ok(worst)
}

/// (|Y_ℓ|, e_ℓ) decomposition of one gauge potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFactor {
    pub magnitude: f64,
    pub direction: Vec3,
}

impl GaugeFactor {
    /// The product |Y_ℓ| e_ℓ.
    pub fn vector(&self) -> Vec3 {
        self.direction * self.magnitude
    }
}

fn p_kernel(b: f64) -> f64 {
    if b.abs() < 1e-2 {
        let b2 = b * b;
        -1.0 / 6.0 + b2 / 120.0 - b2 * b2 / 5040.0
    } else {
        (b.sin() - b) / (b * b * b)
    }
}

fn c_kernel(b: f64) -> f64 {
    if b.abs() < 1e-2 {
        let b2 = b * b;
        0.5 - b2 / 24.0 + b2 * b2 / 720.0
    } else {
        (1.0 - b.cos()) / (b * b)
    }
}

/// |Y_ℓ| e_ℓ for coefficient vector `x`, its derivative `dx` and duration `t`.
pub fn gauge_vector(x: Vec3, dx: Vec3, t: f64) -> Vec3 {
    let b = t * x.norm();
    let xd = x.cross(dx);
    let xxd = x.cross(xd);
    dx * (-t) + xxd * (t * t * t * p_kernel(b)) + xd * (t * t * c_kernel(b))
}

pub fn gauge_factor_from(x: Vec3, dx: Vec3, t: f64) -> Result<GaugeFactor> {
    ensure_finite(&[x.x, x.y, x.z, dx.x, dx.y, dx.z, t], "field values")?;
    if t <= 0.0 {
        return Err(QgeoError::Domain(format!("duration must be positive, got {t}")));
    }
    let y = gauge_vector(x, dx, t);
    let magnitude = y.norm();
    let direction = y.unit().unwrap_or(Vec3::ZERO);
    Ok(GaugeFactor { magnitude, direction })
}

pub fn gauge_factor<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    index: usize,
    t: f64,
) -> Result<GaugeFactor> {
    check_point(field, point)?;
    if index >= field.dim() {
        return Err(QgeoError::Domain(format!("parameter index {index} out of range")));
    }
    gauge_factor_from(field.eval(point)?, field.partial(point, index)?, t)
}

fn check_probe(probe: Vec3) -> Result<()> {
    ensure_finite(&probe.to_array(), "probe")?;
    let n = probe.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(QgeoError::Domain(format!("probe Bloch vector norm {n} is not 1")));
    }
    Ok(())
}

/// χ_μν = |Y_μ||Y_ν|/4 [(e_μ·e_ν) − (e_μ·r)(e_ν·r) + i (e_μ×e_ν)·r].
pub fn qgt(mu: &GaugeFactor, nu: &GaugeFactor, probe: Vec3) -> Result<C64> {
    check_probe(probe)?;
    let a = mu.vector();
    let b = nu.vector();
    let re = a.dot(b) - a.dot(probe) * b.dot(probe);
    let im = a.cross(b).dot(probe);
    Ok(C64::new(0.25 * re, 0.25 * im))
}

pub fn qmt(mu: &GaugeFactor, nu: &GaugeFactor, probe: Vec3) -> Result<f64> {
    Ok(qgt(mu, nu, probe)?.re)
}

/// Ω_μν = −2 Im χ_μν.
pub fn berry(mu: &GaugeFactor, nu: &GaugeFactor, probe: Vec3) -> Result<f64> {
    Ok(-2.0 * qgt(mu, nu, probe)?.im)
}

/// Figure of merit |Ω|/(2√(g_μμ g_νν − g_μν²)) in [0, 1].
pub fn fom(g_mm: f64, g_nn: f64, g_mn: f64, omega: f64) -> Result<f64> {
    ensure_finite(&[g_mm, g_nn, g_mn, omega], "metric entries")?;
    let det = g_mm * g_nn - g_mn * g_mn;
    let bound = 0.25 * omega * omega;
    let slack = 1e-9 * 1f64.max(g_mm.abs() * g_nn.abs());
    if det < bound - slack {
        return Err(QgeoError::Inconsistency(format!(
            "det {det} below Ω²/4 = {bound}"
        )));
    }
    if omega.abs() < 1e-12 && det.abs() < 1e-12 {
        return Ok(0.0);
    }
    if det <= 0.0 {
        return Ok(1.0);
    }
    Ok((omega.abs() / (2.0 * det.sqrt())).min(1.0))
}

/// Probe selection used by reports and the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeChoice {
    /// Bloch vector +X̂ of the Hamiltonian at the evaluation point.
    Ground,
    Bloch(Vec3),
    /// A Bloch vector orthogonal to e_ℓ, which maximizes g_ℓℓ.
    OptimalFor(usize),
}

pub fn resolve_probe<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    t: f64,
    choice: ProbeChoice,
) -> Result<Vec3> {
    match choice {
        ProbeChoice::Ground => {
            let x = field.eval(point)?;
            let scale = (0..field.dim()).try_fold(1.0f64, |m, l| Ok::<_, QgeoError>(m.max(field.partial(point, l)?.norm())))?;
            if x.norm() <= GROUND_GAP_FLOOR * scale {
                return Err(QgeoError::Degenerate(format!("gap {:.3e} too small for a ground-state probe", x.norm())));
            }
            Ok(ground_state(x)?.bloch())
        }
        ProbeChoice::Bloch(r) => {
            check_probe(r)?;
            Ok(r * (1.0 / r.norm()))
        }
        ProbeChoice::OptimalFor(l) => {
            let e = gauge_factor(field, point, l, t)?.direction;
            let e = if e == Vec3::ZERO { Vec3::new(0.0, 0.0, 1.0) } else { e };
            let axis = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)]
                .into_iter()
                .min_by(|a, b| a.dot(e).abs().total_cmp(&b.dot(e).abs()))
                .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
            e.cross(axis)
                .unit()
                .ok_or_else(|| QgeoError::Domain("cannot build orthogonal probe".into()))
        }
    }
}

/// Bundle of the geometric and metrological quantities at one point.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub names: Vec<String>,
    pub qgt: DMatrix<C64>,
    pub qmt: DMatrix<f64>,
    pub berry: DMatrix<f64>,
    pub fom: DMatrix<f64>,
    pub qfim: DMatrix<f64>,
    pub qcrb: DMatrix<f64>,
    pub repetitions: u32,
    /// Eigenvectors of the QFIM dropped by the pseudo-inverse.
    pub singular_directions: Vec<DVector<f64>>,
}

/// Moore–Penrose inverse of a symmetric matrix with relative rank tolerance.
pub fn symmetric_pinv(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<DVector<f64>>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut inv = DMatrix::zeros(n, n);
    let mut singular = Vec::new();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k).into_owned();
        if scale == 0.0 || lam.abs() <= rel_tol * scale {
            singular.push(v);
        } else {
            inv += &v * v.transpose() * (1.0 / lam);
        }
    }
    (inv, singular)
}

pub fn geometry_report<F: HamiltonianField + ?Sized>(
    field: &F,
    point: &[f64],
    probe: Vec3,
    t: f64,
    repetitions: u32,
) -> Result<GeometryReport> {
    if repetitions == 0 {
        return Err(QgeoError::Domain("repetitions must be at least 1".into()));
    }
    check_probe(probe)?;
    let n = field.dim();
    let factors = (0..n)
        .map(|l| gauge_factor(field, point, l, t))
        .collect::<Result<Vec<_>>>()?;
    let mut chi = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            chi[(i, j)] = qgt(&factors[i], &factors[j], probe)?;
        }
    }
    let qmt = chi.map(|c| c.re);
    let berry = chi.map(|c| -2.0 * c.im);
    let mut fom_m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                fom_m[(i, j)] = fom(qmt[(i, i)], qmt[(j, j)], qmt[(i, j)], berry[(i, j)])?;
            }
        }
    }
    let qfim = &qmt * 4.0;
    let (pinv, singular_directions) = symmetric_pinv(&qfim, 1e-10);
    Ok(GeometryReport {
        names: field.names().to_vec(),
        qgt: chi,
        qmt,
        berry,
        fom: fom_m,
        qfim,
        qcrb: pinv / f64::from(repetitions),
        repetitions,
        singular_directions,
    })
}
