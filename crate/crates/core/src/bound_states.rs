//! Point-spectrum detection by dense diagonalization of a truncated walk.
//!
//! The truncation keeps `U = SC` exactly unitary: `S` couples `(↑x, ↓x+1)`
//! pairs inside the window and acts as the identity on the two unpaired edge
//! components. Eigenpairs come from the Hermitian part `(U + U*)/2`; within
//! each near-degenerate cluster the inner-half projector isolates localized
//! vectors and `(U − U*)/2i` splits conjugate partners.

use std::f64::consts::{PI, TAU};

use faer::{c64, Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use crate::coin::{CoinMatrix, ShiftParams, Spinor};
use crate::error::ScatterError;
use crate::evolution::{WalkerState, Window};
use crate::field::CoinField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundStateOptions {
    /// diagonalization window size N
    pub sites: usize,
    /// minimal arc distance between a bound-state eigenvalue and the bands
    pub gap_tol: f64,
    /// a bound state carries at least `1 − localization_tol` of its mass in
    /// the inner half of the window
    pub localization_tol: f64,
    /// eigenvalues of `(U + U*)/2` closer than this form one cluster
    pub cluster_tol: f64,
    /// allowed change of w₀ when N doubles
    pub window_tol: f64,
    /// momenta used to sample the band set of the reference dynamics
    pub band_samples: usize,
}

impl Default for BoundStateOptions {
    fn default() -> Self {
        Self {
            sites: 256,
            gap_tol: 1e-3,
            localization_tol: 1e-6,
            cluster_tol: 1e-8,
            window_tol: 1e-3,
            band_samples: 8192,
        }
    }
}

/// Continuous spectrum of one or more homogeneous walks, sampled in momentum.
/// Stored as the complementary open gaps on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSet {
    gaps: Vec<(f64, f64)>,
}

impl BandSet {
    /// Eigenphases of `Û(k)` for every reference coin on `m` momenta. Any
    /// circular gap between sorted samples wider than four grid spacings is
    /// a spectral gap, since band phases move at most `|dφ/dk| ≤ 1`.
    pub fn sample(shift: &ShiftParams, coins: &[CoinMatrix], m: usize) -> Self {
        let mut phases = Vec::with_capacity(2 * m * coins.len());
        for c in coins {
            for j in 0..m {
                let k = TAU * j as f64 / m as f64;
                let u = shift.symbol(k) * *c;
                let tr = u.trace();
                let disc = (tr * tr - 4.0 * u.det()).sqrt();
                for l in [(tr + disc) * 0.5, (tr - disc) * 0.5] {
                    phases.push(l.arg().rem_euclid(TAU));
                }
            }
        }
        phases.sort_by(f64::total_cmp);
        let threshold = 4.0 * TAU / m as f64;
        let mut gaps = Vec::new();
        if let (Some(&first), Some(&last)) = (phases.first(), phases.last()) {
            for w in phases.windows(2) {
                if w[1] - w[0] > threshold {
                    gaps.push((w[0], w[1]));
                }
            }
            if first + TAU - last > threshold {
                gaps.push((last, first + TAU));
            }
        }
        Self { gaps }
    }

    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    /// Arc distance from `e^{iφ}` to the sampled bands.
    pub fn distance(&self, phase: f64) -> f64 {
        let phi = phase.rem_euclid(TAU);
        for &(lo, hi) in &self.gaps {
            for cand in [phi, phi + TAU] {
                if cand > lo && cand < hi {
                    return (cand - lo).min(hi - cand);
                }
            }
        }
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct BoundState {
    pub eigenvalue: Complex64,
    /// `arg λ ∈ (−π, π]`
    pub phase: f64,
    pub inner_mass: f64,
    /// `⟨φ_b, Ψ₀⟩`
    pub overlap: Complex64,
    pub state: WalkerState,
}

#[derive(Debug, Clone)]
pub struct BoundStateReport {
    pub sites: usize,
    /// `Σ_b |⟨φ_b, Ψ₀⟩|²`
    pub w0: f64,
    /// w₀ on the half-size window, when the doubling check ran
    pub w0_half_window: Option<f64>,
    pub states: Vec<BoundState>,
}

impl BoundStateReport {
    pub fn empty(sites: usize) -> Self {
        Self {
            sites,
            w0: 0.0,
            w0_half_window: None,
            states: Vec::new(),
        }
    }

    /// `Σ_b φ_b ⟨φ_b, Ψ₀⟩` embedded into `window`.
    pub fn point_component(&self, window: Window) -> WalkerState {
        let mut out = WalkerState::zeros(window);
        for b in &self.states {
            out.axpy(b.overlap, &b.state.embed(window));
        }
        out
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.states.iter().map(|b| b.eigenvalue).collect()
    }
}

/// Sparse rows of the truncated `U` on `window`, index `2(x − x_min) + s`.
#[derive(Debug, Clone)]
pub struct TruncatedWalk {
    window: Window,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl TruncatedWalk {
    pub fn build(shift: &ShiftParams, field: &CoinField, window: Window) -> Self {
        let n = window.len;
        let dim = 2 * n;
        let p = Complex64::new(shift.p, 0.0);
        let q = shift.q;
        let one = Complex64::new(1.0, 0.0);
        // S rows: (column, value)
        let mut s_rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for i in 0..n.saturating_sub(1) {
            let up = 2 * i;
            let down = 2 * (i + 1) + 1;
            s_rows[up] = vec![(up, p), (down, q)];
            s_rows[down] = vec![(up, q.conj()), (down, -p)];
        }
        if n > 0 {
            s_rows[1] = vec![(1, one)];
            s_rows[dim - 2] = vec![(dim - 2, one)];
        }
        let coins: Vec<CoinMatrix> = window.sites().map(|x| field.coin(x)).collect();
        let rows = s_rows
            .into_iter()
            .map(|srow| {
                let mut row = Vec::with_capacity(4);
                for (m, sv) in srow {
                    let site = m / 2;
                    let c = coins[site].row(m % 2);
                    row.push((2 * site, sv * c[0]));
                    row.push((2 * site + 1, sv * c[1]));
                }
                row
            })
            .collect();
        Self { window, rows }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, u)| u * v[j]).sum())
            .collect()
    }

    pub fn dense(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, u) in row {
                m[i * d + j] += u;
            }
        }
        m
    }
}

fn hermitian_eigen(dim: usize, entry: impl Fn(usize, usize) -> Complex64) -> Result<(Vec<f64>, Vec<Vec<Complex64>>), ScatterError> {
    let m = Mat::<c64>::from_fn(dim, dim, |i, j| {
        let z = entry(i, j);
        c64::new(z.re, z.im)
    });
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| ScatterError::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..dim).map(|i| s[i].re).collect();
    let vectors = (0..dim)
        .map(|j| (0..dim).map(|i| *u.get(i, j)).collect())
        .collect();
    Ok((values, vectors))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn combine(basis: &[Vec<Complex64>], coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); basis[0].len()];
    for (v, &c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

fn to_state(window: Window, v: &[Complex64]) -> WalkerState {
    let amps: Vec<Spinor> = v.chunks(2).map(|c| [c[0], c[1]]).collect();
    WalkerState::from_amplitudes(window.x_min, amps)
}

/// Bound states of the truncation on a single window of `opts.sites` sites.
pub fn detect_on_window(
    shift: &ShiftParams,
    field: &CoinField,
    psi0: &WalkerState,
    bands: &BandSet,
    opts: &BoundStateOptions,
) -> Result<BoundStateReport, ScatterError> {
    let n = opts.sites;
    let window = Window::centered(n);
    let inner = n / 4..n - n / 4;
    if let Some((lo, hi)) = psi0.support() {
        let inner_lo = window.x_min + inner.start as i64;
        let inner_hi = window.x_min + inner.end as i64 - 1;
        if lo < inner_lo || hi > inner_hi {
            return Err(ScatterError::InitialOutsideWindow { lo, hi, sites: n });
        }
    }
    let walk = TruncatedWalk::build(shift, field, window);
    let dim = walk.dim();
    let u = walk.dense();
    let (values, vectors) = hermitian_eigen(dim, |i, j| (u[i * dim + j] + u[j * dim + i].conj()) * 0.5)?;

    let inner_idx = 2 * inner.start..2 * inner.end;
    let psi_vec: Vec<Complex64> = psi0.embed(window).amplitudes().iter().flat_map(|s| [s[0], s[1]]).collect();

    let mut states = Vec::new();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] < opts.cluster_tol {
            end += 1;
        }
        let cluster = &vectors[start..end];
        let c = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        start = end;

        let phi = c.clamp(-1.0, 1.0).acos();
        if bands.distance(phi) <= opts.gap_tol && bands.distance(-phi) <= opts.gap_tol {
            continue;
        }
        // localized subspace of the cluster
        let m = cluster.len();
        let (loc_vals, loc_vecs) = hermitian_eigen(m, |a, b| dot(&cluster[a][inner_idx.clone()], &cluster[b][inner_idx.clone()]))?;
        let localized: Vec<Vec<Complex64>> = loc_vals
            .iter()
            .zip(&loc_vecs)
            .filter(|(&mass, _)| mass >= 1.0 - opts.localization_tol)
            .map(|(_, y)| combine(cluster, y))
            .collect();
        if localized.is_empty() {
            continue;
        }
        // split e^{±iφ} partners with the anti-Hermitian part
        let images: Vec<Vec<Complex64>> = localized.iter().map(|v| walk.apply(v)).collect();
        let l = localized.len();
        let proj = |a: usize, b: usize| dot(&localized[a], &images[b]);
        let (_, rot) = hermitian_eigen(l, |a, b| (proj(a, b) - proj(b, a).conj()) / Complex64::new(0.0, 2.0))?;
        for y in &rot {
            let v = combine(&localized, y);
            let uv = walk.apply(&v);
            let lambda = dot(&v, &uv);
            let phase = lambda.arg();
            if bands.distance(phase) <= opts.gap_tol {
                continue;
            }
            let inner_mass = v[inner_idx.clone()].iter().map(|z| z.norm_sqr()).sum();
            let overlap = dot(&v, &psi_vec);
            states.push(BoundState {
                eigenvalue: lambda,
                phase,
                inner_mass,
                overlap,
                state: to_state(window, &v),
            });
        }
    }
    states.sort_by(|a, b| a.phase.total_cmp(&b.phase));
    let w0 = states.iter().fold(0.0, |acc, b| acc + b.overlap.norm_sqr()).min(1.0);
    Ok(BoundStateReport {
        sites: n,
        w0,
        w0_half_window: None,
        states,
    })
}

/// Runs the detection at `N` and `2N` and returns the `2N` result, erroring
/// if w₀ moved by more than `window_tol`.
pub fn detect_bound_states(
    shift: &ShiftParams,
    field: &CoinField,
    psi0: &WalkerState,
    opts: &BoundStateOptions,
) -> Result<BoundStateReport, ScatterError> {
    let bands = BandSet::sample(shift, &field.asymptotics().coins(), opts.band_samples);
    let small = detect_on_window(shift, field, psi0, &bands, opts)?;
    let doubled = BoundStateOptions {
        sites: 2 * opts.sites,
        ..*opts
    };
    let mut large = detect_on_window(shift, field, psi0, &bands, &doubled)?;
    if (large.w0 - small.w0).abs() > opts.window_tol {
        return Err(ScatterError::WindowSensitive {
            sites: opts.sites,
            w0_small: small.w0,
            w0_large: large.w0,
        });
    }
    large.w0_half_window = Some(small.w0);
    Ok(large)
}

/// Principal phase in `(−π, π]`.
pub fn principal_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
