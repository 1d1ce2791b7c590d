//! 2×2 coin matrices and split-step shift parameters.

use std::fmt;
use std::ops::{Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CoinError;

/// Two-component amplitude `(up, down)` at one lattice site.
pub type Spinor = [Complex64; 2];

/// Tolerance on ‖C*C − I‖ for a matrix to count as unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Inputs whose Pythagorean sum is off by at most this much are renormalized
/// instead of rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex 2×2 matrix, row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinMatrix(pub [[Complex64; 2]; 2]);

impl fmt::Debug for CoinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

impl CoinMatrix {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self(m)
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    pub const fn zero() -> Self {
        Self([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    /// σ₁.
    pub const fn pauli_x() -> Self {
        Self([[ZERO, ONE], [ONE, ZERO]])
    }

    /// The reflection-type coin `[[a, b], [b, −a]]`, the form required of the
    /// limit coin in limit-law mode.
    ///
    /// `a² + b²` may be off from one by up to [`RENORMALIZE_TOL`]; the pair is
    /// rescaled onto the unit circle in that case.
    pub fn reflection(a: f64, b: f64) -> Result<Self, CoinError> {
        let norm2 = a * a + b * b;
        if !norm2.is_finite() || (norm2 - 1.0).abs() > RENORMALIZE_TOL {
            return Err(CoinError::NotNormalized {
                what: "coin (a, b)",
                sum: norm2,
            });
        }
        let s = norm2.sqrt();
        let (a, b) = (a / s, b / s);
        Ok(Self::from_real([[a, b], [b, -a]]))
    }

    /// Plane rotation `[[cos θ, −sin θ], [sin θ, cos θ]]`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_real([[c, -s], [s, c]])
    }

    /// Half-angle rotation `exp(−iθσ_y/2)`, the convention of Kitagawa's
    /// split-step walk.
    pub fn half_rotation(theta: f64) -> Self {
        Self::rotation(0.5 * theta)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn row(&self, row: usize) -> Spinor {
        self.0[row]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self([[s * m[0][0], s * m[0][1]], [s * m[1][0], s * m[1][1]]])
    }

    #[inline]
    pub fn apply(&self, v: &Spinor) -> Spinor {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Spectral (operator 2-) norm.
    pub fn op_norm(&self) -> f64 {
        // Largest eigenvalue of the positive semidefinite M*M.
        let g = self.adjoint() * *self;
        let tr = g.0[0][0].re + g.0[1][1].re;
        let det = g.det().re;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (0.5 * (tr + disc)).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// ‖C*C − I‖ in the operator norm.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Self::identity()).op_norm()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARITY_TOL
    }

    pub fn ensure_unitary(self) -> Result<Self, CoinError> {
        let defect = self.unitarity_defect();
        if defect.is_finite() && defect <= UNITARITY_TOL {
            Ok(self)
        } else {
            Err(CoinError::NotUnitary { defect })
        }
    }

    /// `Some((a, b))` when the matrix is `[[a, b], [b, −a]]` with real
    /// `a, b > 0`, within `tol` entrywise.
    pub fn reflection_params(&self, tol: f64) -> Option<(f64, f64)> {
        let m = &self.0;
        let a = m[0][0].re;
        let b = m[0][1].re;
        let close = |z: Complex64, target: f64| (z - Complex64::new(target, 0.0)).norm() <= tol;
        let form = close(m[0][0], a) && close(m[0][1], b) && close(m[1][0], b) && close(m[1][1], -a);
        (form && a > 0.0 && b > 0.0).then_some((a, b))
    }
}

impl Mul for CoinMatrix {
    type Output = CoinMatrix;

    fn mul(self, rhs: CoinMatrix) -> CoinMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        CoinMatrix(out)
    }
}

impl Sub for CoinMatrix {
    type Output = CoinMatrix;

    fn sub(self, rhs: CoinMatrix) -> CoinMatrix {
        let (a, b) = (&self.0, &rhs.0);
        CoinMatrix([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

/// Parameters of the split-step shift `S = [[p, qL], [q̄L*, −p]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftParams {
    pub p: f64,
    pub q: Complex64,
}

impl ShiftParams {
    /// Validates `p² + |q|² = 1` (to [`RENORMALIZE_TOL`]) and rescales `q`
    /// so the identity holds to rounding.
    pub fn new(p: f64, q: Complex64) -> Result<Self, CoinError> {
        let sum = p * p + q.norm_sqr();
        if !sum.is_finite() || (sum - 1.0).abs() > RENORMALIZE_TOL || p.abs() > 1.0 + RENORMALIZE_TOL {
            return Err(CoinError::NotNormalized {
                what: "shift (p, q)",
                sum,
            });
        }
        let p = p.clamp(-1.0, 1.0);
        let target = (1.0 - p * p).max(0.0).sqrt();
        let q = if q.norm() > 0.0 {
            q * (target / q.norm())
        } else {
            Complex64::new(target, 0.0)
        };
        Ok(Self { p, q })
    }

    pub fn real(p: f64, q: f64) -> Result<Self, CoinError> {
        Self::new(p, Complex64::new(q, 0.0))
    }

    /// `(p, q)` as reals when `p ≥ 0` and `q` is real and positive: the shift
    /// form accepted by the limit-law machinery.
    pub fn limit_law_params(&self) -> Option<(f64, f64)> {
        (self.p >= 0.0 && self.q.im.abs() <= 1e-12 && self.q.re > 0.0).then_some((self.p, self.q.re))
    }

    /// Momentum-space shift `[[p, q e^{ik}], [q̄ e^{−ik}, −p]]`.
    pub fn symbol(&self, k: f64) -> CoinMatrix {
        let phase = Complex64::from_polar(1.0, k);
        let p = Complex64::new(self.p, 0.0);
        CoinMatrix([[p, self.q * phase], [self.q.conj() * phase.conj(), -p]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pythagorean_shift_is_accepted() {
        let s = ShiftParams::real(0.6, 0.8).unwrap();
        assert_abs_diff_eq!(s.p * s.p + s.q.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pure_hop_shift_is_accepted() {
        let s = ShiftParams::real(0.0, 1.0).unwrap();
        assert_eq!(s.p, 0.0);
        assert_eq!(s.q, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn inconsistent_shift_is_rejected() {
        assert!(matches!(
            ShiftParams::real(0.5, 0.5),
            Err(CoinError::NotNormalized { .. })
        ));
    }

    #[test]
    fn nearly_normalized_shift_is_renormalized() {
        let s = ShiftParams::real(0.6, 0.8 + 5e-10).unwrap();
        assert_abs_diff_eq!(s.q.re, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = CoinMatrix::from_real([[3.0, 0.0], [0.0, -4.0]]);
        assert_abs_diff_eq!(m.op_norm(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn reflection_coin_is_unitary_and_recognized() {
        let c = CoinMatrix::reflection(0.8, 0.6).unwrap();
        assert!(c.is_unitary());
        assert_eq!(c.reflection_params(1e-12), Some((0.8, 0.6)));
        assert_eq!(CoinMatrix::identity().reflection_params(1e-12), None);
    }

    #[test]
    fn rotation_distance_from_identity() {
        // ‖R(θ) − I‖ = 2|sin(θ/2)|
        for &theta in &[0.0, 0.1, 0.3, 1.7] {
            let d = (CoinMatrix::rotation(theta) - CoinMatrix::identity()).op_norm();
            assert_abs_diff_eq!(d, 2.0 * (0.5 * theta).sin().abs(), epsilon = 1e-14);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = CoinMatrix::from_real([[1.0, 0.1], [0.0, 1.0]]);
        assert!(m.ensure_unitary().is_err());
    }
}
