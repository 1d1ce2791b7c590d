//! Momentum-space analysis of the homogeneous evolution `U₀ = SC₀`.
//!
//! Under the Fourier convention `(FΨ)(k) = Σ_x e^{−ikx} Ψ(x)`, `U₀` acts as
//! multiplication by `Û₀(k) = [[p, q e^{ik}], [q e^{−ik}, −p]]·C₀`. For
//! `C₀ = [[a, b], [b, −a]]` the eigenvalues are `e^{±i arccos τ(k)}` with
//! `τ(k) = pa + qb cos k`, and the group velocities are
//! `v_j(k) = (−1)^{j+1} τ′(k) / √(1 − τ(k)²)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coin::{CoinMatrix, ShiftParams, Spinor};
use crate::error::SpectralError;

/// Below this value of `1 − τ²` the two bands are treated as touching.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// `Û₀(k)` for arbitrary shift and coin.
pub fn u0_hat(k: f64, shift: &ShiftParams, c0: &CoinMatrix) -> CoinMatrix {
    shift.symbol(k) * *c0
}

/// Uniform grid of `m` momenta offset by half a cell, `k = 2π(j + ½)/m`,
/// so the band-touching point k = 0 is never sampled.
pub fn momentum_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| TAU * (j as f64 + 0.5) / m as f64).collect()
}

/// Reduces `k` into `[0, 2π)`.
pub fn wrap_momentum(k: f64) -> f64 {
    let r = k.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigensystem {
    pub lambda: [Complex64; 2],
    pub vectors: [Spinor; 2],
}

/// Homogeneous split-step model in limit-law form: real `p ≥ 0`, `q > 0`
/// and `C₀ = [[a, b], [b, −a]]` with `a, b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandModel {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

impl BandModel {
    pub fn new(shift: &ShiftParams, c0: &CoinMatrix) -> Result<Self, SpectralError> {
        let (p, q) = shift
            .limit_law_params()
            .ok_or(SpectralError::NotLimitLawForm("real shift parameters with p ≥ 0, q > 0"))?;
        let (a, b) = c0
            .reflection_params(1e-12)
            .ok_or(SpectralError::NotLimitLawForm("limit coin [[a, b], [b, −a]] with a, b > 0"))?;
        Ok(Self { p, q, a, b })
    }

    pub fn shift(&self) -> ShiftParams {
        ShiftParams {
            p: self.p,
            q: Complex64::new(self.q, 0.0),
        }
    }

    pub fn coin(&self) -> CoinMatrix {
        CoinMatrix::from_real([[self.a, self.b], [self.b, -self.a]])
    }

    /// `q = b` (to 1e-12): the turning momentum is 0 and the `+` velocity
    /// branch is empty.
    pub fn is_degenerate(&self) -> bool {
        (self.q - self.b).abs() <= 1e-12
    }

    pub fn tau(&self, k: f64) -> f64 {
        self.p * self.a + self.q * self.b * k.cos()
    }

    pub fn dtau(&self, k: f64) -> f64 {
        -self.q * self.b * k.sin()
    }

    pub fn u0_hat(&self, k: f64) -> CoinMatrix {
        u0_hat(k, &self.shift(), &self.coin())
    }

    /// Support edge of the velocity distribution, `min(q, b)`.
    pub fn velocity_edge(&self) -> f64 {
        self.q.min(self.b)
    }

    /// Band arcs in phase: the continuous spectrum of `U₀` is
    /// `{e^{±iφ} : φ ∈ [lo, hi]}`.
    pub fn band_arcs(&self) -> (f64, f64) {
        let pa = self.p * self.a;
        let qb = self.q * self.b;
        ((pa + qb).clamp(-1.0, 1.0).acos(), (pa - qb).clamp(-1.0, 1.0).acos())
    }

    /// Arc-length distance from `e^{iφ}` to the band set.
    pub fn arc_distance_to_bands(&self, phase: f64) -> f64 {
        let phi = wrap_momentum(phase);
        let phi = if phi > PI { TAU - phi } else { phi };
        let (lo, hi) = self.band_arcs();
        if phi < lo {
            lo - phi
        } else if phi > hi {
            phi - hi
        } else {
            0.0
        }
    }

    /// `λ_j = exp((−1)^{j+1} i arccos τ)` and normalized eigenvectors.
    ///
    /// Each eigenvector has its largest-magnitude component real and positive
    /// (ties go to the upper component). Where the bands touch
    /// (`1 − τ² < DEGENERACY_TOL`) `Û₀ = ±I` and the standard basis is returned.
    pub fn eigensystem(&self, k: f64) -> Eigensystem {
        let tau = self.tau(k).clamp(-1.0, 1.0);
        let phi = tau.acos();
        let lambda = [Complex64::from_polar(1.0, phi), Complex64::from_polar(1.0, -phi)];
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        if 1.0 - tau * tau < DEGENERACY_TOL {
            return Eigensystem {
                lambda,
                vectors: [[one, zero], [zero, one]],
            };
        }
        let m = self.u0_hat(k);
        let vectors = lambda.map(|l| eigenvector(&m, l));
        Eigensystem { lambda, vectors }
    }

    /// `(v₁(k), v₂(k))`.
    pub fn group_velocity(&self, k: f64) -> Result<[f64; 2], SpectralError> {
        let tau = self.tau(k);
        let gap = 1.0 - tau * tau;
        if gap < DEGENERACY_TOL {
            return Err(SpectralError::Degenerate { k, gap });
        }
        let v = self.dtau(k) / gap.sqrt();
        Ok([v, -v])
    }

    /// `dv₁/dk = (paτ² − (p² + a²)τ + pa)/(1 − τ²)^{3/2}`, which is
    /// `ap(τ − a/p)(τ − p/a)/(1 − τ²)^{3/2}` when `p > 0`.
    pub fn dvdk(&self, k: f64) -> f64 {
        let (p, a) = (self.p, self.a);
        let tau = self.tau(k);
        (p * a * tau * tau - (p * p + a * a) * tau + p * a) / (1.0 - tau * tau).powf(1.5)
    }

    /// The factored form; only defined for `p > 0`.
    pub fn dvdk_factored(&self, k: f64) -> f64 {
        let (p, a) = (self.p, self.a);
        let tau = self.tau(k);
        a * p * (tau - a / p) * (tau - p / a) / (1.0 - tau * tau).powf(1.5)
    }

    /// The momentum `k* ∈ [0, π]` where `v₁` turns around: `τ(k*) =
    /// min(a/p, p/a)`. It is 0 when `p = a` (then `v₁` is monotone on
    /// `(0, 2π)`).
    pub fn turning_momentum(&self) -> f64 {
        let (p, q, a, b) = (self.p, self.q, self.a, self.b);
        let ratio = if p >= a { a * q / (b * p) } else { b * p / (a * q) };
        ratio.clamp(-1.0, 1.0).acos()
    }

    /// Dispersion data on the offset grid of `m` points.
    pub fn dispersion(&self, m: usize) -> Result<DispersionData, SpectralError> {
        let k = momentum_grid(m);
        let rows: Vec<_> = k
            .par_iter()
            .map(|&k| {
                let es = self.eigensystem(k);
                self.group_velocity(k).map(|v| (self.tau(k), es, v))
            })
            .collect::<Result<_, _>>()?;
        let mut data = DispersionData {
            k,
            tau: Vec::with_capacity(m),
            lambda: Vec::with_capacity(m),
            vectors: Vec::with_capacity(m),
            velocity: Vec::with_capacity(m),
        };
        for (tau, es, v) in rows {
            data.tau.push(tau);
            data.lambda.push(es.lambda);
            data.vectors.push(es.vectors);
            data.velocity.push(v);
        }
        Ok(data)
    }
}

/// Normalized eigenvector of a 2×2 matrix for a known eigenvalue.
fn eigenvector(m: &CoinMatrix, lambda: Complex64) -> Spinor {
    let e = &m.0;
    let from_row0 = [e[0][1], lambda - e[0][0]];
    let from_row1 = [lambda - e[1][1], e[1][0]];
    let norm = |v: &Spinor| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v = if norm(&from_row0) >= norm(&from_row1) {
        from_row0
    } else {
        from_row1
    };
    let n = norm(&v);
    let v = [v[0] / n, v[1] / n];
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = pivot.conj() / pivot.norm();
    [v[0] * phase, v[1] * phase]
}

/// Per-momentum spectral package of `Û₀` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionData {
    pub k: Vec<f64>,
    pub tau: Vec<f64>,
    pub lambda: Vec<[Complex64; 2]>,
    pub vectors: Vec<[Spinor; 2]>,
    pub velocity: Vec<[f64; 2]>,
}

impl DispersionData {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationCheck {
    /// max |finite-difference dv₁/dk − closed form| over the checked points
    pub max_residual: f64,
    /// grid points where the finite-difference sign disagrees with the
    /// expected pattern (negative outside `(k*, 2π − k*)`, positive inside)
    pub sign_mismatches: usize,
    /// zeros of the finite-difference derivative, located by bisection
    pub sign_changes: Vec<f64>,
    pub checked: usize,
}

/// Compares central differences of `v₁` (step `h`) with the closed-form
/// `dv/dk` on `ks`, skipping points within `1e-6` of a turning point or
/// where the bands nearly touch.
pub fn dvdk_factorization_check(model: &BandModel, ks: &[f64], h: f64) -> FactorizationCheck {
    let v1 = |k: f64| model.dtau(k) / (1.0 - model.tau(k).powi(2)).sqrt();
    let fd = |k: f64| (v1(k + h) - v1(k - h)) / (2.0 * h);
    let kstar = model.turning_momentum();
    let near_turn = |k: f64| (k - kstar).abs() < 1e-6 || (k - (TAU - kstar)).abs() < 1e-6;
    let safe = |k: f64| 1.0 - model.tau(k).powi(2) > 1e-8 && 1.0 - model.tau(k + h).powi(2).max(model.tau(k - h).powi(2)) > 1e-8;

    let mut max_residual = 0.0f64;
    let mut sign_mismatches = 0;
    let mut checked = 0;
    for &k in ks.iter().filter(|&&k| safe(k) && !near_turn(k)) {
        let d = fd(k);
        max_residual = max_residual.max((d - model.dvdk(k)).abs());
        let expect_positive = k > kstar && k < TAU - kstar;
        if d != 0.0 && (d > 0.0) != expect_positive {
            sign_mismatches += 1;
        }
        checked += 1;
    }

    let mut sign_changes = Vec::new();
    for w in ks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        if !safe(lo) || !safe(hi) {
            continue;
        }
        let (flo, fhi) = (fd(lo), fd(hi));
        if flo == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fd(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        sign_changes.push(0.5 * (lo + hi));
    }

    FactorizationCheck {
        max_residual,
        sign_mismatches,
        sign_changes,
        checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example() -> BandModel {
        BandModel::new(
            &ShiftParams::real(0.6, 0.8).unwrap(),
            &CoinMatrix::reflection(0.8, 0.6).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn trace_is_twice_tau() {
        let m = example();
        let u = m.u0_hat(0.0);
        assert_abs_diff_eq!(u.trace().re, 1.92, epsilon = 1e-14);
        assert_abs_diff_eq!(u.trace().im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.tau(0.0), 0.96, epsilon = 1e-15);
    }

    #[test]
    fn symbol_is_unitary_and_periodic() {
        let m = example();
        for &k in &[0.0, 0.3, 2.0, 5.5] {
            let u = m.u0_hat(k);
            assert!(u.unitarity_defect() < 1e-13);
            assert_abs_diff_eq!(u.det().norm(), 1.0, epsilon = 1e-14);
            assert!((u - m.u0_hat(k + TAU)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_at_tau_zero() {
        let m = example();
        // τ(π) = 0.48 − 0.48 = 0
        let es = m.eigensystem(PI);
        assert!((es.lambda[0] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((es.lambda[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn eigenpairs_are_consistent() {
        let m = example();
        for &k in &momentum_grid(64) {
            let es = m.eigensystem(k);
            let u = m.u0_hat(k);
            assert!((es.lambda[0] * es.lambda[1] - u.det()).norm() < 1e-12);
            for j in 0..2 {
                let v = es.vectors[j];
                let r = u.apply(&v);
                let res = ((r[0] - es.lambda[j] * v[0]).norm_sqr() + (r[1] - es.lambda[j] * v[1]).norm_sqr()).sqrt();
                assert!(res < 1e-10);
                let big = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
                assert!(big.im.abs() < 1e-15 && big.re > 0.0);
            }
            let ov = es.vectors[0][0].conj() * es.vectors[1][0] + es.vectors[0][1].conj() * es.vectors[1][1];
            assert!(ov.norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_point_uses_standard_basis() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = BandModel::new(&ShiftParams::real(s, s).unwrap(), &CoinMatrix::reflection(s, s).unwrap()).unwrap();
        let es = m.eigensystem(0.0);
        assert_eq!(es.vectors[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(es.vectors[1][1], Complex64::new(1.0, 0.0));
        assert!(matches!(m.group_velocity(0.0), Err(SpectralError::Degenerate { .. })));
    }

    #[test]
    fn velocity_values() {
        let m = example();
        assert_eq!(m.group_velocity(0.0).unwrap(), [0.0, -0.0]);
        assert_abs_diff_eq!(m.group_velocity(PI).unwrap()[0], 0.0, epsilon = 1e-15);
        let v = m.group_velocity(PI / 2.0).unwrap();
        assert_abs_diff_eq!(v[0], -0.48 / 0.7696f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], -0.547_153, epsilon = 1e-6);
        assert_eq!(v[0], -v[1]);
    }

    #[test]
    fn rejects_non_limit_law_coins() {
        let shift = ShiftParams::real(0.6, 0.8).unwrap();
        assert!(BandModel::new(&shift, &CoinMatrix::identity()).is_err());
        let complex_shift = ShiftParams::new(0.6, Complex64::new(0.0, 0.8)).unwrap();
        assert!(BandModel::new(&complex_shift, &CoinMatrix::reflection(0.8, 0.6).unwrap()).is_err());
    }

    #[test]
    fn band_arcs_bracket_spectrum() {
        let m = example();
        let (lo, hi) = m.band_arcs();
        assert_abs_diff_eq!(lo, 0.96f64.acos(), epsilon = 1e-15);
        assert_abs_diff_eq!(hi, PI / 2.0, epsilon = 1e-15);
        assert_eq!(m.arc_distance_to_bands(1.0), 0.0);
        assert_abs_diff_eq!(m.arc_distance_to_bands(-0.1), lo - 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(m.arc_distance_to_bands(PI), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn factored_and_expanded_derivatives_agree() {
        let m = example();
        for &k in &momentum_grid(32) {
            assert_abs_diff_eq!(m.dvdk(k), m.dvdk_factored(k), epsilon = 1e-12);
        }
    }
}
