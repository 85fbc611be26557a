//! Closed-form approximation guarantees, as fractions of the optimum (exact
//! estimation) or as absolute lower bounds on the expected cascade (ε-approximate
//! estimation). The ε variants can be negative; such a bound is vacuous and is
//! returned unclamped.

use num_traits::Float;

/// `α (1 - e^{-rate/α})`, continuous at `α = 0`.
fn damped<F: Float>(alpha: F, rate: F) -> F {
    if alpha <= F::zero() {
        return F::zero();
    }
    alpha * (F::one() - (-rate / alpha).exp())
}

fn two<F: Float>() -> F {
    F::one() + F::one()
}

/// Unit-cost guarantee `α (1 - e^{-1/α})`.
pub fn bound_uniform<F: Float>(alpha: F) -> F {
    damped(alpha, F::one())
}

/// Non-uniform guarantee `α (1 - e^{-(B - c_max) / (α B)})`.
pub fn bound_nonuniform<F: Float>(alpha: F, budget: F, c_max: F) -> F {
    damped(alpha, (budget - c_max) / budget)
}

/// Half the unit-cost guarantee.
pub fn bound_enhanced<F: Float>(alpha: F) -> F {
    bound_uniform(alpha) / two()
}

/// Lower bound on the expected cascade of the unit-cost policy when every
/// estimate is within a factor `1 ± ε`.
pub fn bound_uniform_eps<F: Float>(alpha: F, epsilon: F, n: F, f_star: F) -> F {
    let one = F::one();
    damped(alpha, one - epsilon) / (one + epsilon) * f_star
        - two::<F>() * epsilon / (one + epsilon) * n
}

/// Non-uniform counterpart of [`bound_uniform_eps`]; `c_min` must be positive.
pub fn bound_nonuniform_eps<F: Float>(
    alpha: F,
    epsilon: F,
    n: F,
    budget: F,
    c_max: F,
    c_min: F,
    f_star: F,
) -> F {
    let one = F::one();
    let rate = (one - epsilon) * (budget - c_max) / budget;
    damped(alpha, rate) / (one + epsilon) * f_star
        - two::<F>() * epsilon / (one + epsilon) * (one / c_min + one) * n * budget
}

/// Enhanced-policy bound under ε-approximate estimation.
pub fn bound_enhanced_eps<F: Float>(
    alpha: F,
    epsilon: F,
    n: F,
    budget: F,
    c_min: F,
    f_star: F,
) -> F {
    let one = F::one();
    let inner = damped(alpha, one - epsilon) / (one + epsilon) * f_star
        - two::<F>() * epsilon / (one + epsilon) * (one / c_min + one) * n * budget;
    (one - epsilon) / (one + epsilon) * inner / two()
}

pub fn is_vacuous<F: Float>(value: F) -> bool {
    value < F::zero()
}
