//! Single-qubit states and SU(2) evolutions with J = σ/2 and ħ = 1.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, QgeoError, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Real 3-vector used for coefficient fields and Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn unit(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Normalized pure qubit state. The global phase is fixed so that `amp0` is
/// real and non-negative (or `amp1` when `amp0` vanishes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    amp0: C64,
    amp1: C64,
}

impl QubitState {
    /// Builds a state from amplitudes whose norm is 1 within 1e-9.
    pub fn new(amp0: C64, amp1: C64) -> Result<Self> {
        let n2 = amp0.norm_sqr() + amp1.norm_sqr();
        if !n2.is_finite() || (n2 - 1.0).abs() > 1e-9 {
            return Err(QgeoError::Domain(format!("state norm² {n2} is not 1")));
        }
        Self::normalized(amp0, amp1)
    }

    /// Normalizes any non-zero finite amplitude pair.
    pub fn normalized(amp0: C64, amp1: C64) -> Result<Self> {
        let n = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(QgeoError::Domain("zero or non-finite amplitudes".into()));
        }
        let lead = if amp0.norm() > 0.0 { amp0 } else { amp1 };
        let phase = lead.conj() / lead.norm();
        let mut s = Self {
            amp0: amp0 * phase / n,
            amp1: amp1 * phase / n,
        };
        if amp0.norm() > 0.0 {
            s.amp0 = C64::new(s.amp0.norm(), 0.0);
        } else {
            s.amp1 = C64::new(s.amp1.norm(), 0.0);
        }
        Ok(s)
    }

    pub fn zero() -> Self {
        Self { amp0: ONE, amp1: ZERO }
    }

    pub fn amp0(&self) -> C64 {
        self.amp0
    }

    pub fn amp1(&self) -> C64 {
        self.amp1
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        [self.amp0, self.amp1]
    }

    pub fn bloch(&self) -> Vec3 {
        bloch(self)
    }
}

/// 2×2 complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        Self { m: [[ONE, ZERO], [ZERO, ONE]] }
    }

    pub fn mul(&self, o: &Unitary2) -> Unitary2 {
        let a = &self.m;
        let b = &o.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2 { m }
    }

    pub fn dagger(&self) -> Unitary2 {
        let a = &self.m;
        Unitary2 {
            m: [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]],
        }
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Unitary2 {
        let mut base = *self;
        let mut acc = Unitary2::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    pub fn max_abs_diff(&self, o: &Unitary2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - o.m[i][j]).norm());
            }
        }
        d
    }
}

/// `c0·I + v·σ` with complex coefficients.
fn pauli_combination(c0: C64, v: [C64; 3]) -> Unitary2 {
    Unitary2 {
        m: [[c0 + v[2], v[0] - I * v[1]], [v[0] + I * v[1], c0 - v[2]]],
    }
}

fn sinc(a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        a.sin() / a
    }
}

/// (a cos a − sin a)/a³, the derivative kernel of sinc.
fn sinc_prime_kernel(a: f64) -> f64 {
    if a.abs() < 1e-2 {
        let a2 = a * a;
        -1.0 / 3.0 + a2 / 30.0 - a2 * a2 / 840.0
    } else {
        (a * a.cos() - a.sin()) / (a * a * a)
    }
}

/// U = exp(−iT X·J) = cos(|X|T/2) I − i sin(|X|T/2) X̂·σ.
pub fn evolve(x: Vec3, t: f64) -> Result<Unitary2> {
    ensure_finite(&[x.x, x.y, x.z, t], "evolution input")?;
    if t < 0.0 {
        return Err(QgeoError::Domain(format!("negative duration {t}")));
    }
    let h = 0.5 * t;
    let a = x.norm() * h;
    let s = -I * (h * sinc(a));
    Ok(pauli_combination(
        C64::new(a.cos(), 0.0),
        [s * x.x, s * x.y, s * x.z],
    ))
}

/// Directional derivative of `evolve(X, T)` along `dx`.
pub fn evolve_derivative(x: Vec3, dx: Vec3, t: f64) -> Result<Unitary2> {
    ensure_finite(&[x.x, x.y, x.z, dx.x, dx.y, dx.z, t], "evolution input")?;
    let h = 0.5 * t;
    let a = x.norm() * h;
    let xd = x.dot(dx);
    let sc = sinc(a);
    let q = sinc_prime_kernel(a) * h * h * xd;
    let c0 = C64::new(-h * h * xd * sc, 0.0);
    let k = -I * h;
    let v = dx * sc + x * q;
    Ok(pauli_combination(c0, [k * v.x, k * v.y, k * v.z]))
}

/// Eigenstate of X·J with eigenvalue +|X|/2, i.e. Bloch vector +X̂.
pub fn ground_state(x: Vec3) -> Result<QubitState> {
    ensure_finite(&[x.x, x.y, x.z], "field")?;
    let u = x
        .unit()
        .ok_or_else(|| QgeoError::Degenerate("|X| = 0, eigenbasis undefined".into()))?;
    state_from_bloch(u)
}

pub fn bloch(state: &QubitState) -> Vec3 {
    let c = state.amp0.conj() * state.amp1;
    Vec3::new(
        2.0 * c.re,
        2.0 * c.im,
        state.amp0.norm_sqr() - state.amp1.norm_sqr(),
    )
}

pub fn state_from_bloch(r: Vec3) -> Result<QubitState> {
    ensure_finite(&[r.x, r.y, r.z], "Bloch vector")?;
    let n = r.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(QgeoError::Domain(format!("Bloch vector norm {n} is not 1")));
    }
    let r = r * (1.0 / n);
    // Both columns are +1 eigenvectors of r·σ; pick the well-conditioned one.
    if r.z >= 0.0 {
        QubitState::normalized(C64::new(1.0 + r.z, 0.0), C64::new(r.x, r.y))
    } else {
        QubitState::normalized(C64::new(r.x, -r.y), C64::new(1.0 - r.z, 0.0))
    }
}
