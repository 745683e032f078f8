//! Hamilton quaternions and the closed-form transition quaternion of a vertex fan.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::triangle_admissible;

/// `w + x·i + y·j + z·k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation by `angle` about the unit vector `axis`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::new(c, s * axis.x, s * axis.y, s * axis.z)
    }

    /// Rotation about the first basis vector.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::new(c, s, 0.0, 0.0)
    }

    /// Rotation about the third basis vector.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion::new(c, 0.0, 0.0, s)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn vec(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm_squared(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalize(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn dot(self, o: Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Rotates `p` by conjugation `q p q̄` (assumes a unit quaternion).
    pub fn rotate(self, p: Vector3<f64>) -> Vector3<f64> {
        let pq = Quaternion::new(0.0, p.x, p.y, p.z);
        (self * pq * self.conj()).vec()
    }

    /// Rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(self) -> Matrix3<f64> {
        let Quaternion { w, x, y, z } = self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn as_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Transition quaternion `q̂(θ, a, b, c) = q_x(θ)·q_z(arccos Q(a, b, c))` with its first and
/// second partial derivatives in the local variables `(θ, a, b, c)`.
///
/// `a` and `b` are the lengths of the two edges at the fan vertex (`a` belongs to the crossed
/// edge), `c` the length of the opposite edge.
#[derive(Debug, Clone, Copy)]
pub struct TransitionQuaternion {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Value, gradient and Hessian of a quaternion-valued function of four local variables.
#[derive(Debug, Clone, Copy)]
pub struct QuaternionJet {
    pub value: Quaternion,
    pub grad: [Quaternion; 4],
    pub hess: [[Quaternion; 4]; 4],
}

impl TransitionQuaternion {
    pub fn new(theta: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        if !triangle_admissible([a, b, c]) {
            return Err(Error::TriangleInequalityViolated(a, b, c));
        }
        Ok(TransitionQuaternion { theta, a, b, c })
    }

    /// Law-of-cosines ratio of the wedge angle.
    pub fn cosine_ratio(&self) -> f64 {
        crate::mesh::cosine_ratio(self.a, self.b, self.c)
    }

    /// Closed form `(C·P, S·P, −S·M, C·M)` with `C, S = cos, sin(θ/2)` and
    /// `P, M = √((1 ± Q)/2)`.
    pub fn value(&self) -> Quaternion {
        let q = self.cosine_ratio().clamp(-1.0, 1.0);
        let (s, c) = (0.5 * self.theta).sin_cos();
        let p = (0.5 * (1.0 + q)).sqrt();
        let m = (0.5 * (1.0 - q)).sqrt();
        Quaternion::new(c * p, s * p, -s * m, c * m)
    }

    /// Wedge angle `γ` and its gradient/Hessian in `(a, b, c)`.
    fn wedge_angle_jet(&self) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let (a, b, c) = (self.a, self.b, self.c);
        let q = self.cosine_ratio();
        // Q and its derivatives.
        let qa = 1.0 / (2.0 * b) - b / (2.0 * a * a) + c * c / (2.0 * a * a * b);
        let qb = 1.0 / (2.0 * a) - a / (2.0 * b * b) + c * c / (2.0 * a * b * b);
        let qc = -c / (a * b);
        let qaa = b / (a * a * a) - c * c / (a * a * a * b);
        let qbb = a / (b * b * b) - c * c / (a * b * b * b);
        let qcc = -1.0 / (a * b);
        let qab = -1.0 / (2.0 * b * b) - 1.0 / (2.0 * a * a) - c * c / (2.0 * a * a * b * b);
        let qac = c / (a * a * b);
        let qbc = c / (a * b * b);
        let dq = [qa, qb, qc];
        let ddq = [[qaa, qab, qac], [qab, qbb, qbc], [qac, qbc, qcc]];

        // γ = arccos Q: γ' = −Q'/s, γ'' = −Q''/s − Q·Q'Q'ᵀ/s³ with s = sin γ = √(1 − Q²).
        let area4 = crate::mesh::sixteen_area_squared(a, b, c).max(0.0).sqrt();
        let s = area4 / (2.0 * a * b);
        let gamma = area4.atan2(a * a + b * b - c * c);
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            g[i] = -dq[i] / s;
            for j in 0..3 {
                h[i][j] = -ddq[i][j] / s - q * dq[i] * dq[j] / (s * s * s);
            }
        }
        (gamma, g, h)
    }

    /// Value with first and second derivatives in `(θ, a, b, c)`.
    pub fn jet(&self) -> QuaternionJet {
        let (gamma, dg, ddg) = self.wedge_angle_jet();
        let (s, c) = (0.5 * self.theta).sin_cos();
        let (m, p) = (0.5 * gamma).sin_cos();

        // q(θ, γ) = (c·p, s·p, −s·m, c·m); partials in θ and γ.
        let q = Quaternion::new(c * p, s * p, -s * m, c * m);
        let q_t = Quaternion::new(-s * p, c * p, -c * m, -s * m) * 0.5;
        let q_g = Quaternion::new(-c * m, -s * m, -s * p, c * p) * 0.5;
        let q_tt = q * -0.25;
        let q_gg = q * -0.25;
        let q_tg = Quaternion::new(s * m, -c * m, -c * p, -s * p) * 0.25;

        let mut grad = [Quaternion::ZERO; 4];
        let mut hess = [[Quaternion::ZERO; 4]; 4];
        grad[0] = q_t;
        hess[0][0] = q_tt;
        for i in 0..3 {
            grad[i + 1] = q_g * dg[i];
            hess[0][i + 1] = q_tg * dg[i];
            hess[i + 1][0] = hess[0][i + 1];
            for j in 0..3 {
                hess[i + 1][j + 1] = q_gg * (dg[i] * dg[j]) + q_g * ddg[i][j];
            }
        }
        QuaternionJet {
            value: q,
            grad,
            hess,
        }
    }
}

/// `q̂(θ, a, b, c)`; fails when `(a, b, c)` is not a strict triangle.
pub fn transition_quaternion(theta: f64, a: f64, b: f64, c: f64) -> Result<Quaternion> {
    Ok(TransitionQuaternion::new(theta, a, b, c)?.value())
}
