//! Second-order forward-mode differentiation for small fixed-size local functions.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A value together with its gradient and Hessian with respect to `N` independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hd<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Hd<N> {
    pub fn constant(v: f64) -> Self {
        Hd {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// The `i`-th independent variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut x = Self::constant(v);
        x.g[i] = 1.0;
        x
    }

    /// All `N` variables at once.
    pub fn vars(values: [f64; N]) -> [Self; N] {
        let mut out = [Self::constant(0.0); N];
        for i in 0..N {
            out[i] = Self::var(values[i], i);
        }
        out
    }

    /// Compose with a scalar function given its value and first two derivatives at `self.v`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let mut r = Self::constant(f);
        for i in 0..N {
            r.g[i] = df * self.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                r.h[i][j] = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
            }
        }
        r
    }

    pub fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut r = *self;
        r.v *= s;
        r.g.iter_mut().for_each(|x| *x *= s);
        r.h.iter_mut().flatten().for_each(|x| *x *= s);
        r
    }
}

impl<const N: usize> Add for Hd<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for j in 0..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Hd<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Neg for Hd<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Hd<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut r = Self::constant(self.v * o.v);
        for i in 0..N {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        for i in 0..N {
            for j in 0..N {
                r.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl<const N: usize> Div for Hd<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<const N: usize> Add<f64> for Hd<N> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl<const N: usize> Sub<f64> for Hd<N> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl<const N: usize> Mul<f64> for Hd<N> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(c)
    }
}

impl<const N: usize> Div<f64> for Hd<N> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self.scale(1.0 / c)
    }
}

/// Scalar arithmetic shared by plain floats and [`Hd`], so local formulas are written once.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

impl<const N: usize> Real for Hd<N> {
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        Hd::sqrt(&self)
    }
    fn ln(self) -> Self {
        Hd::ln(&self)
    }
}
