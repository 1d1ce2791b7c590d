//! Equivalence between the split-step walk and Kitagawa's
//! `U_ss(θ′, θ) = S₋ R(θ) S₊ R(θ′)`.
//!
//! With `p = sin(θ/2)`, `q = cos(θ/2)` and `C(x) = R(θ′)σ₁` one has
//! `U = σ₁ U_ss σ₁`, where `R(θ) = exp(−iθσ_y/2)` is the half-angle rotation.

use num_complex::Complex64;

use crate::coin::{CoinMatrix, ShiftParams, Spinor};
use crate::error::Error;
use crate::evolution::{Direction, LocalTransfer, WalkerState, Window};
use crate::field::CoinField;

/// One step of Kitagawa's walk on a dense window. Amplitudes shifted past
/// the edge are dropped; callers size the window so that never happens.
fn kitagawa_step(amps: &[Spinor], outer: &CoinMatrix, inner: &CoinMatrix) -> Vec<Spinor> {
    let n = amps.len();
    let zero = Complex64::new(0.0, 0.0);
    let rotated: Vec<Spinor> = amps.iter().map(|v| inner.apply(v)).collect();
    // S₊ = L* ⊕ 1 moves the upper component one site right.
    let mut shifted = vec![[zero, zero]; n];
    for i in 0..n {
        shifted[i][1] = rotated[i][1];
        if i > 0 {
            shifted[i][0] = rotated[i - 1][0];
        }
    }
    let rotated: Vec<Spinor> = shifted.iter().map(|v| outer.apply(v)).collect();
    // S₋ = 1 ⊕ L moves the lower component one site left.
    let mut out = vec![[zero, zero]; n];
    for i in 0..n {
        out[i][0] = rotated[i][0];
        if i + 1 < n {
            out[i][1] = rotated[i + 1][1];
        }
    }
    out
}

fn swap_components(amps: &[Spinor]) -> Vec<Spinor> {
    amps.iter().map(|v| [v[1], v[0]]).collect()
}

/// Max over localized basis states `δ_x ⊗ e_s`, x ∈ {−1, 0, 1}, of
/// `‖U^T ψ − σ₁ U_ss^T σ₁ ψ‖`.
pub fn kitagawa_equivalence_check(theta: f64, theta_prime: f64, steps: usize) -> Result<f64, Error> {
    let shift = ShiftParams::real((0.5 * theta).sin(), (0.5 * theta).cos())?;
    let coin = CoinMatrix::half_rotation(theta_prime) * CoinMatrix::pauli_x();
    let field = CoinField::homogeneous(coin)?;
    let window = Window::for_evolution(-1, 1, steps);
    let transfer = LocalTransfer::build(&shift, &field, window);
    let outer = CoinMatrix::half_rotation(theta);
    let inner = CoinMatrix::half_rotation(theta_prime);

    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for x in -1..=1 {
        for spinor in [[one, zero], [zero, one]] {
            let psi = WalkerState::from_sites(window, &[(x, spinor)]);
            let split = transfer.evolve(&psi, steps, Direction::Forward)?;

            let mut amps = swap_components(psi.amplitudes());
            for _ in 0..steps {
                amps = kitagawa_step(&amps, &outer, &inner);
            }
            let kitagawa = WalkerState::from_amplitudes(window.x_min, swap_components(&amps));
            worst = worst.max(split.distance(&kitagawa));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_free_single_step() {
        assert_eq!(kitagawa_equivalence_check(0.0, 0.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn zero_steps_is_trivial() {
        assert_eq!(kitagawa_equivalence_check(1.1, -0.4, 0).unwrap(), 0.0);
    }

    #[test]
    fn generic_angles_agree() {
        let d = kitagawa_equivalence_check(std::f64::consts::PI / 3.0, std::f64::consts::PI / 5.0, 20).unwrap();
        assert!(d <= 1e-10, "discrepancy {d:e}");
    }
}
