//! The systems used throughout the examples and tests.

use crate::ifs::{Contraction, IFSystem};

/// Middle-thirds Cantor set: `𝒯 = (ρ_{0,3}, ρ_{1,3}, ρ_{2,3})`, `A = {0, 2}`.
pub fn cantor_third() -> IFSystem {
    IFSystem::homogeneous("cantor3", 3, vec![0, 2]).expect("static system")
}

/// Quarter Cantor set with a single filler of slope 1/2:
/// `𝒯 = (ρ_{0,4}, x/2 + 1/4, ρ_{3,4})`, `A = {0, 2}`.
pub fn cantor_quarter_gap() -> IFSystem {
    IFSystem::new(
        "cantor4-gap",
        vec![
            Contraction::rho(0, 4),
            Contraction::affine(0.5, 0.25),
            Contraction::rho(3, 4),
        ],
        vec![0, 2],
    )
    .expect("static system")
}

/// Quarter Cantor set with homogeneous fillers: `(ρ_{j,4})_{j<4}`, `A = {0, 3}`.
pub fn cantor_quarter() -> IFSystem {
    IFSystem::homogeneous("cantor4", 4, vec![0, 3]).expect("static system")
}

/// The nonlinear three-branch system
/// `τ_0(x) = x²/5 + 2x/5`, `τ_1(x) = x/5 + 3/5`, `τ_2(x) = log₂(x + 1)/5 + 4/5`, `A = {0, 2}`.
pub fn nonlinear_example() -> IFSystem {
    IFSystem::new(
        "nonlinear",
        vec![
            Contraction::quadratic(0.2, 0.4, 0.0),
            Contraction::affine(0.2, 0.6),
            Contraction::log_exp(0.2, 2.0, 0.8),
        ],
        vec![0, 2],
    )
    .expect("static system")
}

/// Dyadic system without gaps (Lebesgue measure on `[0, 1]`).
pub fn haar() -> IFSystem {
    IFSystem::homogeneous("haar", 2, vec![0, 1]).expect("static system")
}
