//! Gamma and beta functions, and the distribution function of the
//! one-dimensional translation density.

use statrs::function::{beta as sbeta, gamma as sgamma};

pub fn gamma(x: f64) -> f64 {
    sgamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    sgamma::ln_gamma(x)
}

pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    sbeta::ln_beta(a, b)
}

/// Regularized incomplete beta function `I_x(a, b)`, clamped to `[0, 1]` in `x`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        sbeta::beta_reg(a, b, x)
    }
}

/// Density `psi_k(t) = (1+t)(1-t^2)^(k-1) / B(k, 1/2)` on `(-1, 1)`, `k > 0`.
pub fn psi_density(kappa: f64, t: f64) -> f64 {
    if t <= -1.0 || t >= 1.0 {
        return 0.0;
    }
    let log_b = ln_beta(kappa, 0.5);
    ((kappa - 1.0) * ((1.0 - t) * (1.0 + t)).ln() - log_b).exp() * (1.0 + t)
}

/// Distribution function `Psi_k(u) = int_{-1}^{u} psi_k(t) dt`.
///
/// With `s = (1+t)/2` the density becomes a `Beta(k+1, k)` density, so
/// `Psi_k(u) = I_{(1+u)/2}(k+1, k)`. For `k = 0` the density degenerates to
/// a unit mass at `t = 1`.
pub fn psi_cdf(kappa: f64, u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if kappa == 0.0 {
        return 0.0;
    }
    beta_reg(kappa + 1.0, kappa, 0.5 * (1.0 + u))
}

/// `1 - Psi_k(1 - 2w)`, accurate when the tail is tiny.
pub fn psi_upper_tail(kappa: f64, w: f64) -> f64 {
    if kappa == 0.0 {
        return if w > 0.0 { 1.0 } else { 0.0 };
    }
    beta_reg(kappa, kappa + 1.0, w)
}
