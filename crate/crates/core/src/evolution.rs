//! Time evolution `U = SC` on a finite lattice window.
//!
//! The update is the lazy three-term recurrence
//! `Ψ'(x) = P(x+1)Ψ(x+1) + Q(x−1)Ψ(x−1) + R(x)Ψ(x)`. Windows are sized so
//! amplitudes never reach the edge; touching it is an error rather than a
//! boundary condition, so the evolution stays exactly unitary.

use num_complex::Complex64;

use crate::coin::{CoinMatrix, ShiftParams, Spinor};
use crate::error::EvolutionError;
use crate::field::CoinField;

const ZERO: Spinor = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];

/// A contiguous range of lattice sites `[x_min, x_min + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub x_min: i64,
    pub len: usize,
}

impl Window {
    pub fn new(x_min: i64, len: usize) -> Self {
        Self { x_min, len }
    }

    /// `[lo, hi]` padded by `t + 2` sites on each side, enough for `t` steps.
    pub fn for_evolution(lo: i64, hi: i64, t: usize) -> Self {
        let pad = t as i64 + 2;
        Self::new(lo - pad, (hi - lo + 1 + 2 * pad) as usize)
    }

    pub fn centered(sites: usize) -> Self {
        Self::new(-(sites as i64) / 2, sites)
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + self.len as i64 - 1
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.x_min && x <= self.x_max()
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.x_min..=self.x_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Ψ on a window, with a conservative bound on where it can be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    x_min: i64,
    amps: Vec<Spinor>,
    /// Inclusive index range outside of which every amplitude is exactly zero.
    support: Option<(usize, usize)>,
}

impl WalkerState {
    pub fn zeros(window: Window) -> Self {
        Self {
            x_min: window.x_min,
            amps: vec![ZERO; window.len],
            support: None,
        }
    }

    pub fn from_amplitudes(x_min: i64, amps: Vec<Spinor>) -> Self {
        let mut s = Self {
            x_min,
            amps,
            support: None,
        };
        s.recompute_support();
        s
    }

    /// Places the given spinors on a window; sites outside it are a caller bug.
    pub fn from_sites(window: Window, sites: &[(i64, Spinor)]) -> Self {
        let mut s = Self::zeros(window);
        for &(x, v) in sites {
            assert!(window.contains(x), "site {x} outside window {window:?}");
            let i = (x - window.x_min) as usize;
            s.amps[i][0] += v[0];
            s.amps[i][1] += v[1];
        }
        s.recompute_support();
        s
    }

    /// `δ_x ⊗ spinor` on a window padded for `t` steps.
    pub fn localized(x: i64, spinor: Spinor, t: usize) -> Self {
        Self::from_sites(Window::for_evolution(x, x, t), &[(x, spinor)])
    }

    pub fn window(&self) -> Window {
        Window::new(self.x_min, self.amps.len())
    }

    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + self.amps.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[Spinor] {
        &self.amps
    }

    pub fn amplitude(&self, x: i64) -> Spinor {
        if self.window().contains(x) {
            self.amps[(x - self.x_min) as usize]
        } else {
            ZERO
        }
    }

    /// Sites `[lo, hi]` that may carry amplitude; `None` for the zero state.
    pub fn support(&self) -> Option<(i64, i64)> {
        self.support
            .map(|(lo, hi)| (self.x_min + lo as i64, self.x_min + hi as i64))
    }

    /// Tightens the support bound to the exact nonzero range.
    pub fn recompute_support(&mut self) {
        let nz = |v: &Spinor| v[0] != Complex64::new(0.0, 0.0) || v[1] != Complex64::new(0.0, 0.0);
        let lo = self.amps.iter().position(nz);
        let hi = self.amps.iter().rposition(nz);
        self.support = lo.zip(hi);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.amps {
            v[0] *= s;
            v[1] *= s;
        }
        if s == Complex64::new(0.0, 0.0) {
            self.support = None;
        }
    }

    /// Copies the state onto a (usually larger) window. Amplitudes outside
    /// the target window are dropped, so callers pass a covering window.
    pub fn embed(&self, window: Window) -> Self {
        let mut out = Self::zeros(window);
        if let Some((lo, hi)) = self.support() {
            for x in lo.max(window.x_min)..=hi.min(window.x_max()) {
                out.amps[(x - window.x_min) as usize] = self.amplitude(x);
            }
        }
        out.recompute_support();
        out
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &WalkerState) -> Complex64 {
        let (lo, hi) = match (self.support(), other.support()) {
            (Some(a), Some(b)) => (a.0.max(b.0), a.1.min(b.1)),
            _ => return Complex64::new(0.0, 0.0),
        };
        (lo..=hi)
            .map(|x| {
                let a = self.amplitude(x);
                let b = other.amplitude(x);
                a[0].conj() * b[0] + a[1].conj() * b[1]
            })
            .sum()
    }

    /// `self += c·other`, on the window of `self`.
    pub fn axpy(&mut self, c: Complex64, other: &WalkerState) {
        if let Some((lo, hi)) = other.support() {
            let w = self.window();
            for x in lo.max(w.x_min)..=hi.min(w.x_max()) {
                let b = other.amplitude(x);
                let a = &mut self.amps[(x - self.x_min) as usize];
                a[0] += c * b[0];
                a[1] += c * b[1];
            }
            self.recompute_support();
        }
    }

    /// ‖self − other‖ over the union of both windows.
    pub fn distance(&self, other: &WalkerState) -> f64 {
        let lo = self.x_min.min(other.x_min);
        let hi = self.x_max().max(other.x_max());
        (lo..=hi)
            .map(|x| {
                let a = self.amplitude(x);
                let b = other.amplitude(x);
                (a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Zeroes every site for which `keep(x)` is false.
    pub fn restrict(&self, keep: impl Fn(i64) -> bool) -> Self {
        let mut out = self.clone();
        for (i, v) in out.amps.iter_mut().enumerate() {
            if !keep(self.x_min + i as i64) {
                *v = ZERO;
            }
        }
        out.recompute_support();
        out
    }
}

/// Per-site matrices of the three-term recurrence.
#[derive(Debug, Clone)]
pub struct LocalTransfer {
    window: Window,
    hop_left: Vec<CoinMatrix>,
    hop_right: Vec<CoinMatrix>,
    stay: Vec<CoinMatrix>,
}

impl LocalTransfer {
    /// Expands `U = SC` into `P(y)`, `Q(y)`, `R(y)`:
    /// `P(y)` carries `q·(row 2 of C(y))` in its first row,
    /// `Q(y)` carries `q̄·(row 1 of C(y))` in its second row,
    /// `R(y) = [p·(row 1); −p·(row 2)]`.
    pub fn build(shift: &ShiftParams, field: &CoinField, window: Window) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let p = Complex64::new(shift.p, 0.0);
        let q = shift.q;
        let mut hop_left = Vec::with_capacity(window.len);
        let mut hop_right = Vec::with_capacity(window.len);
        let mut stay = Vec::with_capacity(window.len);
        for x in window.sites() {
            let c = field.coin(x);
            let [r1, r2] = c.0;
            hop_left.push(CoinMatrix([[q * r2[0], q * r2[1]], [zero, zero]]));
            hop_right.push(CoinMatrix([[zero, zero], [q.conj() * r1[0], q.conj() * r1[1]]]));
            stay.push(CoinMatrix([[p * r1[0], p * r1[1]], [-p * r2[0], -p * r2[1]]]));
        }
        Self {
            window,
            hop_left,
            hop_right,
            stay,
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// `(P(x), Q(x), R(x))`.
    pub fn matrices(&self, x: i64) -> (CoinMatrix, CoinMatrix, CoinMatrix) {
        let i = (x - self.window.x_min) as usize;
        (self.hop_left[i], self.hop_right[i], self.stay[i])
    }

    fn check(&self, state: &WalkerState) -> Result<(), EvolutionError> {
        if state.window() != self.window {
            return Err(EvolutionError::WindowMismatch {
                state_min: state.x_min,
                state_len: state.amps.len(),
                transfer_min: self.window.x_min,
                transfer_len: self.window.len,
            });
        }
        Ok(())
    }

    fn grown_support(&self, state: &WalkerState, t: usize) -> Result<Option<(usize, usize)>, EvolutionError> {
        let Some((lo, hi)) = state.support else {
            return Ok(None);
        };
        let len = self.window.len;
        // keep at least one untouched site at each edge
        if lo < t + 1 || hi + t + 2 > len {
            return Err(EvolutionError::BoundaryTouch {
                x_min: self.window.x_min,
                x_max: self.window.x_max(),
                lo: self.window.x_min + lo as i64 - t as i64,
                hi: self.window.x_min + (hi + t) as i64,
            });
        }
        Ok(Some((lo - 1, hi + 1)))
    }

    fn apply_into(&self, src: &WalkerState, dst: &mut WalkerState, direction: Direction) -> Result<(), EvolutionError> {
        let new_support = self.grown_support(src, 1)?;
        dst.x_min = src.x_min;
        dst.amps.clear();
        dst.amps.resize(src.amps.len(), ZERO);
        dst.support = new_support;
        let Some((lo, hi)) = new_support else {
            return Ok(());
        };
        let psi = &src.amps;
        let out = &mut dst.amps[lo..=hi];
        match direction {
            Direction::Forward => {
                for (o, i) in out.iter_mut().zip(lo..=hi) {
                    let a = self.hop_left[i + 1].apply(&psi[i + 1]);
                    let b = self.hop_right[i - 1].apply(&psi[i - 1]);
                    let c = self.stay[i].apply(&psi[i]);
                    *o = [a[0] + b[0] + c[0], a[1] + b[1] + c[1]];
                }
            }
            Direction::Inverse => {
                // U* = Σ P(x)*·shift + Q(x)*·shift + R(x)*
                for (o, i) in out.iter_mut().zip(lo..=hi) {
                    let a = self.hop_left[i].adjoint().apply(&psi[i - 1]);
                    let b = self.hop_right[i].adjoint().apply(&psi[i + 1]);
                    let c = self.stay[i].adjoint().apply(&psi[i]);
                    *o = [a[0] + b[0] + c[0], a[1] + b[1] + c[1]];
                }
            }
        }
        Ok(())
    }

    /// One application of `U`.
    pub fn step(&self, state: &WalkerState) -> Result<WalkerState, EvolutionError> {
        self.check(state)?;
        let mut out = WalkerState::zeros(self.window);
        self.apply_into(state, &mut out, Direction::Forward)?;
        Ok(out)
    }

    /// `U^t Ψ` (forward) or `(U*)^t Ψ` (inverse).
    pub fn evolve(&self, state: &WalkerState, t: usize, direction: Direction) -> Result<WalkerState, EvolutionError> {
        self.check(state)?;
        self.grown_support(state, t)?;
        let mut cur = state.clone();
        let mut next = WalkerState::zeros(self.window);
        for _ in 0..t {
            self.apply_into(&cur, &mut next, direction)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Evolves in place, calling `observe(t, state)` after every step
    /// (and once for t = 0).
    pub fn evolve_with<F>(&self, state: &mut WalkerState, t: usize, direction: Direction, mut observe: F) -> Result<(), EvolutionError>
    where
        F: FnMut(usize, &WalkerState),
    {
        self.check(state)?;
        self.grown_support(state, t)?;
        observe(0, state);
        let mut next = WalkerState::zeros(self.window);
        for s in 1..=t {
            self.apply_into(state, &mut next, direction)?;
            std::mem::swap(state, &mut next);
            observe(s, state);
        }
        Ok(())
    }
}

pub fn build_local_transfer(shift: &ShiftParams, field: &CoinField, window: Window) -> LocalTransfer {
    LocalTransfer::build(shift, field, window)
}

pub fn step(state: &WalkerState, transfer: &LocalTransfer) -> Result<WalkerState, EvolutionError> {
    transfer.step(state)
}

pub fn evolve(
    state: &WalkerState,
    transfer: &LocalTransfer,
    t: usize,
    direction: Direction,
) -> Result<WalkerState, EvolutionError> {
    transfer.evolve(state, t, direction)
}

/// `P(X = x) = ‖Ψ(x)‖²` over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionDistribution {
    pub x_min: i64,
    pub probs: Vec<f64>,
}

impl PositionDistribution {
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.x_min + i as i64, p))
    }

    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.x_min;
        if i < 0 || i as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `E[(X/t)^m]` for each requested order.
    pub fn rescaled_moments(&self, t: usize, orders: &[u32]) -> Vec<f64> {
        assert!(t >= 1, "rescaled moments need t ≥ 1");
        let t = t as f64;
        orders
            .iter()
            .map(|&m| {
                self.iter()
                    .map(|(x, p)| p * (x as f64 / t).powi(m as i32))
                    .sum()
            })
            .collect()
    }
}

pub fn position_distribution(state: &WalkerState) -> PositionDistribution {
    PositionDistribution {
        x_min: state.x_min,
        probs: state
            .amps
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .collect(),
    }
}

pub fn rescaled_moments(dist: &PositionDistribution, t: usize, orders: &[u32]) -> Vec<f64> {
    dist.rescaled_moments(t, orders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn example() -> (ShiftParams, CoinField) {
        let shift = ShiftParams::real(0.6, 0.8).unwrap();
        let field = CoinField::homogeneous(CoinMatrix::reflection(0.8, 0.6).unwrap()).unwrap();
        (shift, field)
    }

    #[test]
    fn identity_coin_transfer_matrices() {
        let shift = ShiftParams::new(0.6, c(0.0, 0.8)).unwrap();
        let field = CoinField::homogeneous(CoinMatrix::identity()).unwrap();
        let tr = LocalTransfer::build(&shift, &field, Window::new(-2, 5));
        let (p, q, r) = tr.matrices(0);
        let z = c(0.0, 0.0);
        assert_eq!(p, CoinMatrix([[z, c(0.0, 0.8)], [z, z]]));
        assert_eq!(q, CoinMatrix([[z, z], [c(0.0, -0.8), z]]));
        assert_eq!(r, CoinMatrix([[c(0.6, 0.0), z], [z, c(-0.6, 0.0)]]));
    }

    #[test]
    fn pure_hop_has_no_lazy_term() {
        let shift = ShiftParams::real(0.0, 1.0).unwrap();
        let field = CoinField::homogeneous(CoinMatrix::identity()).unwrap();
        let tr = LocalTransfer::build(&shift, &field, Window::new(-2, 5));
        assert_eq!(tr.matrices(1).2, CoinMatrix::zero());
    }

    #[test]
    fn one_step_hand_computation() {
        let (shift, field) = example();
        let psi0 = WalkerState::localized(0, [c(1.0, 0.0), c(0.0, 0.0)], 1);
        let tr = LocalTransfer::build(&shift, &field, psi0.window());
        let psi1 = tr.step(&psi0).unwrap();
        let close = |a: Spinor, b: [f64; 2]| (a[0] - c(b[0], 0.0)).norm() < 1e-15 && (a[1] - c(b[1], 0.0)).norm() < 1e-15;
        assert!(close(psi1.amplitude(-1), [0.48, 0.0]));
        assert!(close(psi1.amplitude(0), [0.48, -0.36]));
        assert!(close(psi1.amplitude(1), [0.0, 0.64]));
        let dist = position_distribution(&psi1);
        assert_abs_diff_eq!(dist.prob(-1), 0.2304, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.prob(0), 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.prob(1), 0.4096, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-15);
        let m = dist.rescaled_moments(1, &[0, 1]);
        assert_abs_diff_eq!(m[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1], 0.1792, epsilon = 1e-15);
    }

    #[test]
    fn zero_state_stays_zero() {
        let (shift, field) = example();
        let w = Window::new(-10, 21);
        let tr = LocalTransfer::build(&shift, &field, w);
        let out = tr.evolve(&WalkerState::zeros(w), 5, Direction::Forward).unwrap();
        assert_eq!(out.norm_sqr(), 0.0);
        assert_eq!(out.support(), None);
    }

    #[test]
    fn t_zero_is_identity() {
        let (shift, field) = example();
        let psi = WalkerState::localized(3, [c(0.6, 0.0), c(0.0, 0.8)], 4);
        let tr = LocalTransfer::build(&shift, &field, psi.window());
        assert_eq!(tr.evolve(&psi, 0, Direction::Forward).unwrap(), psi);
    }

    #[test]
    fn boundary_touch_is_an_error() {
        let (shift, field) = example();
        let psi = WalkerState::from_sites(Window::new(-3, 7), &[(0, [c(1.0, 0.0), c(0.0, 0.0)])]);
        let tr = LocalTransfer::build(&shift, &field, psi.window());
        assert!(tr.evolve(&psi, 2, Direction::Forward).is_ok());
        let err = tr.evolve(&psi, 3, Direction::Forward).unwrap_err();
        assert!(matches!(err, EvolutionError::BoundaryTouch { .. }));
        let mut s = psi.clone();
        for _ in 0..2 {
            s = tr.step(&s).unwrap();
        }
        assert!(tr.step(&s).is_err());
    }

    #[test]
    fn point_mass_distribution() {
        let psi = WalkerState::localized(0, [c(0.0, 1.0), c(0.0, 0.0)], 0);
        let d = position_distribution(&psi);
        assert_eq!(d.prob(0), 1.0);
        assert_eq!(d.rescaled_moments(7, &[1, 2, 4]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn window_mismatch_is_reported() {
        let (shift, field) = example();
        let tr = LocalTransfer::build(&shift, &field, Window::new(-5, 11));
        let psi = WalkerState::localized(0, [c(1.0, 0.0), c(0.0, 0.0)], 1);
        assert!(matches!(tr.step(&psi), Err(EvolutionError::WindowMismatch { .. })));
    }
}
