//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use ssqw::field::Decay;
use ssqw::{CoinField, CoinMatrix, ShiftParams, Spinor, WalkerState, Window};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const UP: Spinor = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
pub const DOWN: Spinor = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];

pub fn delta(x: i64, s: Spinor) -> WalkerState {
    WalkerState::from_sites(Window::new(x, 1), &[(x, s)])
}

/// Haar-ish random U(2) element from Euler angles and a global phase.
pub fn random_unitary<R: Rng>(rng: &mut R) -> CoinMatrix {
    let theta = rng.random_range(0.0..PI / 2.0);
    let (a, b, g) = (
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
    );
    let e = |phi: f64| Complex64::from_polar(1.0, phi);
    let (cs, sn) = (theta.cos(), theta.sin());
    CoinMatrix::new([
        [e(g + a) * cs, e(g + b) * sn],
        [-e(g - b) * sn, e(g - a) * cs],
    ])
}

pub fn random_shift<R: Rng>(rng: &mut R) -> ShiftParams {
    let p: f64 = rng.random_range(-1.0..1.0);
    let q = Complex64::from_polar((1.0 - p * p).sqrt(), rng.random_range(-PI..PI));
    ShiftParams::new(p, q).unwrap()
}

/// Independent random coins at every site of `window` on top of a random limit.
pub fn random_field<R: Rng>(rng: &mut R, window: Window) -> CoinField {
    let limit = random_unitary(rng);
    let overrides: BTreeMap<i64, CoinMatrix> = window.sites().map(|x| (x, random_unitary(rng))).collect();
    let kappa = 3.0 * (1.0 + window.x_min.abs().max(window.x_max().abs()) as f64).powi(2);
    CoinField::custom(limit, overrides, Decay::new(kappa, 1.0).unwrap()).unwrap()
}

pub fn random_state<R: Rng>(rng: &mut R, window: Window, lo: i64, hi: i64) -> WalkerState {
    let sites: Vec<(i64, Spinor)> = (lo..=hi)
        .map(|x| {
            let mut z = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (x, [z(), z()])
        })
        .collect();
    let mut s = WalkerState::from_sites(window, &sites);
    s.scale(c(1.0 / s.norm(), 0.0));
    s
}

/// Dense `U = SC` on `window`, index `2(x − x_min) + s`, built directly from
/// `(SΦ)↑(x) = pΦ↑(x) + qΦ↓(x+1)`, `(SΦ)↓(x) = q̄Φ↑(x−1) − pΦ↓(x)` with
/// amplitudes leaving the window dropped.
pub fn dense_walk(shift: &ShiftParams, field: &CoinField, window: Window) -> Vec<Vec<Complex64>> {
    let n = 2 * window.len;
    let mut s = vec![vec![c(0.0, 0.0); n]; n];
    let mut coin = vec![vec![c(0.0, 0.0); n]; n];
    let p = c(shift.p, 0.0);
    for i in 0..window.len {
        let up = 2 * i;
        let down = up + 1;
        s[up][up] = p;
        s[down][down] = -p;
        if i + 1 < window.len {
            s[up][2 * (i + 1) + 1] = shift.q;
        }
        if i > 0 {
            s[down][2 * (i - 1)] = shift.q.conj();
        }
        let m = field.coin(window.x_min + i as i64);
        for r in 0..2 {
            for col in 0..2 {
                coin[up + r][up + col] = m.entry(r, col);
            }
        }
    }
    (0..n)
        .map(|r| {
            (0..n)
                .map(|col| (0..n).map(|k| s[r][k] * coin[k][col]).sum())
                .collect()
        })
        .collect()
}

pub fn to_vec(state: &WalkerState) -> Vec<Complex64> {
    state.amplitudes().iter().flat_map(|s| [s[0], s[1]]).collect()
}

pub fn mat_vec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
