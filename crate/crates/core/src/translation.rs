//! Explicit Dunkl translation for `Z_2` and its coordinate-wise extension.
//!
//! In one variable
//!
//! ```text
//! tau_x f(y) = 1/2 int f( s(t)) (1 + (x+y)/s(t)) psi_k(t) dt
//!            + 1/2 int f(-s(t)) (1 - (x+y)/s(t)) psi_k(t) dt,
//! s(t) = sqrt(x^2 + y^2 + 2xyt),
//! ```
//!
//! which is an integral of `f` against a signed measure `nu_{x,y}` carried by
//! the shell `||x|-|y|| <= |z| <= |x|+|y|`. The same measure has a density in
//! `z` built from the area of the triangle with sides `|x|, |y|, |z|`; that
//! form is kept as an independent evaluation path.

use crate::context::DunklContext;
use crate::error::{domain, DunklError, Result};
use crate::functions::{FieldFunction, Product, RealFunction};
use crate::quadrature::{jacobi_rule, DePoint, JacobiRule, TanhSinh};
use crate::special::{beta_reg, ln_beta, psi_upper_tail};

pub const DEFAULT_ORDER: usize = 64;
/// Largest dimension accepted by [`NdTranslator`].
pub const MAX_DIM: usize = 4;

/// `x^2 + y^2 + 2xyt` written so that no cancellation occurs near the
/// endpoint where it is smallest. `one_plus` and `one_minus` are `1 + t`
/// and `1 - t`.
fn shell_radius_sq(x: f64, y: f64, one_plus: f64, one_minus: f64) -> f64 {
    let b = x * y;
    if b >= 0.0 {
        (x - y) * (x - y) + 2.0 * b * one_plus
    } else {
        (x + y) * (x + y) - 2.0 * b * one_minus
    }
}

/// `[||x|-|y||, |x|+|y|]`.
pub fn support_shell(x: f64, y: f64) -> (f64, f64) {
    ((x.abs() - y.abs()).abs(), x.abs() + y.abs())
}

/// Whether `z` lies in the support of `nu_{x,y}` (both `x, y` nonzero).
pub fn support_check(x: f64, y: f64, z: f64) -> bool {
    let (lo, hi) = support_shell(x, y);
    let a = z.abs();
    a >= lo && a <= hi
}

/// The discretised measure `nu_{x,y}`: atoms at `+-s_i` with the two branch
/// weights of each Jacobi node.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationMeasure {
    pub x: f64,
    pub y: f64,
    pub kappa: f64,
    /// Radii `s_i`.
    pub radii: Vec<f64>,
    /// Weight of the atom at `+s_i`: `psi_i (1 + (x+y)/s_i) / 2`.
    pub branch_plus: Vec<f64>,
    /// Weight of the atom at `-s_i`: `psi_i (1 - (x+y)/s_i) / 2`.
    pub branch_minus: Vec<f64>,
}

impl TranslationMeasure {
    pub fn integrate<F: RealFunction + ?Sized>(&self, f: &F) -> f64 {
        let mut s = 0.0;
        for i in 0..self.radii.len() {
            let r = self.radii[i];
            s += self.branch_plus[i] * f.eval(r) + self.branch_minus[i] * f.eval(-r);
        }
        s
    }

    pub fn mass(&self) -> f64 {
        self.branch_plus.iter().chain(&self.branch_minus).sum()
    }

    pub fn variation(&self) -> f64 {
        self.branch_plus
            .iter()
            .chain(&self.branch_minus)
            .map(|w| w.abs())
            .sum()
    }

    /// Atoms lying outside the support shell by more than rounding.
    pub fn support_violations(&self) -> usize {
        let (lo, hi) = support_shell(self.x, self.y);
        let tol = 1e-12 * hi.max(1.0);
        self.radii
            .iter()
            .filter(|&&r| r < lo - tol || r > hi + tol)
            .count()
            * 2
    }
}

/// One-dimensional translation with scalar multiplicity `kappa`.
#[derive(Debug, Clone)]
pub struct Translator {
    kappa: f64,
    rule: Option<JacobiRule>,
    ln_beta: f64,
    de: TanhSinh,
}

impl Translator {
    pub fn new(kappa: f64) -> Result<Self> {
        Self::with_order(kappa, DEFAULT_ORDER)
    }

    pub fn with_order(kappa: f64, order: usize) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return domain(format!("multiplicity must be nonnegative, got {kappa}"));
        }
        if order == 0 {
            return domain("quadrature order must be at least 1");
        }
        let rule = match jacobi_rule(kappa, order) {
            Ok(r) => Some(r),
            Err(DunklError::DegenerateWeight) => None,
            Err(e) => return Err(e),
        };
        let ln_b = if kappa > 0.0 {
            ln_beta(kappa, 0.5)
        } else {
            0.0
        };
        Ok(Self {
            kappa,
            rule,
            ln_beta: ln_b,
            de: TanhSinh::default(),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn order(&self) -> usize {
        self.rule.as_ref().map_or(1, |r| r.order)
    }

    /// Discretise `nu_{x,y}`. For `k = 0` or `xy = 0` the measure is a single
    /// atom.
    pub fn measure(&self, x: f64, y: f64) -> TranslationMeasure {
        let point = |z: f64| TranslationMeasure {
            x,
            y,
            kappa: self.kappa,
            radii: vec![z.abs()],
            branch_plus: vec![if z >= 0.0 { 1.0 } else { 0.0 }],
            branch_minus: vec![if z < 0.0 { 1.0 } else { 0.0 }],
        };
        let rule = match &self.rule {
            None => return point(x + y),
            Some(_) if y == 0.0 => return point(x),
            Some(_) if x == 0.0 => return point(y),
            Some(r) => r,
        };
        let a = x + y;
        let n = rule.order;
        let mut radii = Vec::with_capacity(n);
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for (t, w) in rule.psi_nodes() {
            let s = shell_radius_sq(x, y, 1.0 + t, 1.0 - t).max(0.0).sqrt();
            // s = 0 only at an endpoint; the odd branch factor is dropped there
            let ratio = if s > 0.0 { a / s } else { 0.0 };
            radii.push(s);
            plus.push(0.5 * w * (1.0 + ratio));
            minus.push(0.5 * w * (1.0 - ratio));
        }
        TranslationMeasure {
            x,
            y,
            kappa: self.kappa,
            radii,
            branch_plus: plus,
            branch_minus: minus,
        }
    }

    /// `tau_x f(y)` by the Jacobi rule in `t`. The two branches are combined
    /// as even part plus `(x+y)` times the odd part over `s`, both smooth in
    /// `t` for smooth `f`.
    pub fn translate_1d<F: RealFunction + ?Sized>(&self, f: &F, x: f64, y: f64) -> f64 {
        let rule = match &self.rule {
            None => return f.eval(x + y),
            Some(_) if y == 0.0 => return f.eval(x),
            Some(_) if x == 0.0 => return f.eval(y),
            Some(r) => r,
        };
        let a = x + y;
        let mut sum = 0.0;
        for (t, w) in rule.psi_nodes() {
            let s = shell_radius_sq(x, y, 1.0 + t, 1.0 - t).max(0.0).sqrt();
            let (fp, fm) = (f.eval(s), f.eval(-s));
            let odd = if s > 0.0 {
                a * (fp - fm) / (2.0 * s)
            } else {
                0.0
            };
            sum += w * (0.5 * (fp + fm) + odd);
        }
        sum
    }

    /// Density of `nu_{x,y}` with respect to `dz` at the signed point `z`,
    /// given `|z|` and its exact distances to the shell ends.
    fn dz_density(&self, x: f64, y: f64, z_abs: f64, from_lo: f64, from_hi: f64, sign: f64) -> f64 {
        if from_lo <= 0.0 || from_hi <= 0.0 {
            return 0.0;
        }
        let k = self.kappa;
        let (lo, hi) = support_shell(x, y);
        let b = x * y;
        let ln_heron16 = (hi + z_abs).ln() + from_hi.ln() + from_lo.ln() + (z_abs + lo).ln();
        // z^2 - (x-y)^2
        let q = if b > 0.0 {
            from_lo * (z_abs + lo)
        } else {
            -from_hi * (hi + z_abs)
        };
        let z = sign * z_abs;
        let rho = q * (1.0 + (x + y) / z) / (4.0 * b);
        let log_mag = (k - 1.0) * (ln_heron16 - 16f64.ln())
            + (2.0 * k - 2.0) * std::f64::consts::LN_2
            - self.ln_beta
            - (2.0 * k - 1.0) * b.abs().ln()
            + z_abs.ln();
        log_mag.exp() * rho
    }

    fn z_integral(&self, x: f64, y: f64, mut g: impl FnMut(DePoint, f64, f64) -> f64) -> f64 {
        let (lo, hi) = support_shell(x, y);
        self.de.integrate(lo, hi, |p| {
            let dp = self.dz_density(x, y, p.x, p.from_lo, p.from_hi, 1.0);
            let dm = self.dz_density(x, y, p.x, p.from_lo, p.from_hi, -1.0);
            g(p, dp, dm)
        })
    }

    /// `tau_x f(y)` by integrating the `z`-density of `nu_{x,y}`.
    pub fn translate_z_form<F: RealFunction + ?Sized>(&self, f: &F, x: f64, y: f64) -> f64 {
        if self.rule.is_none() || x == 0.0 || y == 0.0 {
            return self.translate_1d(f, x, y);
        }
        self.z_integral(x, y, |p, dp, dm| dp * f.eval(p.x) + dm * f.eval(-p.x))
    }

    /// `nu_{x,y}(R)` from the `z`-density.
    pub fn measure_mass(&self, x: f64, y: f64) -> f64 {
        if self.rule.is_none() || x == 0.0 || y == 0.0 {
            return 1.0;
        }
        self.z_integral(x, y, |_, dp, dm| dp + dm)
    }

    /// `int |d nu_{x,y}| = int psi(t) max(1, |x+y|/s(t)) dt`, computed with
    /// the double-exponential rule in `t`.
    pub fn total_variation(&self, x: f64, y: f64) -> f64 {
        if self.rule.is_none() || x == 0.0 || y == 0.0 || x * y < 0.0 {
            // the branch factors are then both nonnegative
            return 1.0;
        }
        let k = self.kappa;
        let a = (x + y).abs();
        self.de.integrate(-1.0, 1.0, |p| {
            let (op, om) = (p.from_lo, p.from_hi);
            let s = shell_radius_sq(x, y, op, om).sqrt();
            let psi = ((k - 1.0) * (op * om).ln() - self.ln_beta).exp() * op;
            psi * (a / s).max(1.0)
        })
    }

    /// Count support violations of `nu_{x,y}`: discretised atoms outside the
    /// shell, plus probe points where the `z`-density is nonzero outside the
    /// shell or vanishes inside it.
    pub fn support_violations(&self, x: f64, y: f64, probes: &[f64]) -> usize {
        let mut count = self.measure(x, y).support_violations();
        if self.rule.is_none() || x == 0.0 || y == 0.0 {
            return count;
        }
        for &z in probes {
            if z == 0.0 {
                continue;
            }
            let inside = support_check(x, y, z);
            let dens = z_form_density(x, y, z, self.kappa);
            let (lo, hi) = support_shell(x, y);
            let on_edge = (z.abs() - lo).abs() < 1e-12 || (z.abs() - hi).abs() < 1e-12;
            if on_edge {
                continue;
            }
            if inside != (dens != 0.0) {
                count += 1;
            }
        }
        count
    }

    /// `tau_x(chi_{B_r})(-y)`: the `psi_k`-probability that
    /// `x^2 + y^2 - 2xyt < r^2`, in closed form through the distribution
    /// function of `psi_k`.
    pub fn ball_indicator(&self, x: f64, r: f64, y: f64) -> f64 {
        if self.rule.is_none() {
            return if (x - y).abs() < r { 1.0 } else { 0.0 };
        }
        if x == 0.0 || y == 0.0 {
            let z = if x == 0.0 { y } else { x };
            return if z.abs() < r { 1.0 } else { 0.0 };
        }
        let b = x * y;
        let (lo, hi) = support_shell(x, y);
        if hi <= r {
            return 1.0;
        }
        if lo >= r {
            return 0.0;
        }
        // u = (x^2 + y^2 - r^2) / 2|xy| and w = (1 - u)/2, formed without cancellation
        let w = (r - lo) * (r + lo) / (4.0 * b.abs());
        if b > 0.0 {
            psi_upper_tail(self.kappa, w)
        } else {
            beta_reg(self.kappa + 1.0, self.kappa, w)
        }
    }
}

/// `K_k(|x|,|y|,|z|) rho(x,y,z)`, the density of `nu_{x,y}` against
/// `|z|^{2k} dz`. Zero outside the support shell and when any argument is 0.
pub fn z_form_density(x: f64, y: f64, z: f64, kappa: f64) -> f64 {
    if x == 0.0 || y == 0.0 || z == 0.0 || kappa <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = support_shell(x, y);
    let za = z.abs();
    if za < lo || za > hi {
        return 0.0;
    }
    let heron16 = (hi + za) * (hi - za) * (za - lo) * (za + lo);
    if heron16 <= 0.0 {
        return 0.0;
    }
    let b = x * y;
    let q = z * z - (x - y) * (x - y);
    let rho = q * (1.0 + (x + y) / z) / (4.0 * b);
    let log_k = (kappa - 1.0) * (heron16 / 16.0).ln()
        + (2.0 * kappa - 2.0) * std::f64::consts::LN_2
        - ln_beta(kappa, 0.5)
        - (2.0 * kappa - 1.0) * (b.abs() * za).ln();
    log_k.exp() * rho
}

/// `sigma_{x,y,z} = (x^2 + y^2 - z^2) / 2xy`, zero when `x` or `y` is zero.
pub fn sigma(x: f64, y: f64, z: f64) -> f64 {
    if x == 0.0 || y == 0.0 {
        0.0
    } else {
        (x * x + y * y - z * z) / (2.0 * x * y)
    }
}

/// `(1 - sigma_{x,y,z} + sigma_{z,x,y} + sigma_{z,y,x}) / 2`.
pub fn rho(x: f64, y: f64, z: f64) -> f64 {
    0.5 * (1.0 - sigma(x, y, z) + sigma(z, x, y) + sigma(z, y, x))
}

/// Coordinate-wise translation on `R^d`, `d <= MAX_DIM`.
#[derive(Debug, Clone)]
pub struct NdTranslator {
    coords: Vec<Translator>,
}

impl NdTranslator {
    pub fn new(ctx: &DunklContext, order: usize) -> Result<Self> {
        if ctx.d > MAX_DIM {
            return Err(DunklError::Capacity(format!(
                "coordinate-wise translation supports d <= {MAX_DIM}, got {}",
                ctx.d
            )));
        }
        let coords = ctx
            .kappa()
            .iter()
            .map(|&k| Translator::with_order(k, order))
            .collect::<Result<_>>()?;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinate(&self, j: usize) -> &Translator {
        &self.coords[j]
    }

    /// `tau_x f(y)`: `f` integrated against the product of the coordinate
    /// measures `nu_{x_j, y_j}`.
    pub fn translate_nd<F: FieldFunction + ?Sized>(
        &self,
        f: &F,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64> {
        let d = self.dim();
        for v in [x, y] {
            if v.len() != d {
                return Err(DunklError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        let measures: Vec<TranslationMeasure> = self
            .coords
            .iter()
            .zip(x.iter().zip(y))
            .map(|(tr, (&a, &b))| tr.measure(a, b))
            .collect();
        let mut z = vec![0.0; d];
        Ok(nested_sum(f, &measures, 0, &mut z))
    }

    /// Translation of a tensor-product function, one coordinate at a time.
    pub fn translate_product(&self, f: &Product, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.dim();
        if f.factors().len() != d || x.len() != d || y.len() != d {
            return Err(DunklError::DimensionMismatch {
                expected: d,
                got: f.factors().len(),
            });
        }
        Ok(self
            .coords
            .iter()
            .zip(f.factors())
            .enumerate()
            .map(|(j, (tr, fj))| tr.translate_1d(fj.as_ref(), x[j], y[j]))
            .product())
    }
}

fn nested_sum<F: FieldFunction + ?Sized>(
    f: &F,
    m: &[TranslationMeasure],
    j: usize,
    z: &mut Vec<f64>,
) -> f64 {
    if j == m.len() {
        return f.eval(z);
    }
    let mu = &m[j];
    let mut s = 0.0;
    for i in 0..mu.radii.len() {
        for (w, sign) in [(mu.branch_plus[i], 1.0), (mu.branch_minus[i], -1.0)] {
            if w == 0.0 {
                continue;
            }
            z[j] = sign * mu.radii[i];
            s += w * nested_sum(f, m, j + 1, z);
        }
    }
    s
}

/// `int g dmu_k` over the line for a function with known support, split at
/// `0` and the supplied breakpoints.
pub(crate) fn weighted_line_integral(
    kappa: f64,
    lo: f64,
    hi: f64,
    cuts: &[f64],
    g: impl Fn(f64) -> f64,
) -> f64 {
    let mut pts = vec![lo, hi, 0.0];
    pts.extend_from_slice(cuts);
    pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let de = TanhSinh::default();
    pts.windows(2)
        .map(|w| {
            de.integrate(w[0], w[1], |p| {
                let y = p.x;
                let wt = if kappa == 0.0 {
                    1.0
                } else {
                    y.abs().powf(2.0 * kappa)
                };
                wt * g(y)
            })
        })
        .sum()
}

/// `|int tau_x f dmu - int f dmu| / int f dmu` in one variable.
pub fn mass_conservation_defect<F: RealFunction + ?Sized>(
    tr: &Translator,
    f: &F,
    x: f64,
) -> Result<f64> {
    Ok((mass_ratio(tr, f, x)? - 1.0).abs())
}

/// `int tau_x f dmu / int f dmu`.
fn mass_ratio<F: RealFunction + ?Sized>(tr: &Translator, f: &F, x: f64) -> Result<f64> {
    let (lo, hi) = f.support().ok_or_else(|| {
        DunklError::Precondition("mass conservation needs a function with bounded support".into())
    })?;
    let k = tr.kappa();
    let mut cuts = f.breakpoints();
    cuts.push(-x);
    let base = weighted_line_integral(k, lo, hi, &cuts, |y| f.eval(y));
    if base == 0.0 {
        return domain("function has zero integral");
    }
    let r = lo.abs().max(hi.abs()) + x.abs();
    let shifted: Vec<f64> = cuts
        .iter()
        .flat_map(|&c| [c - x, -c - x, c + x, -c + x])
        .collect();
    let moved = weighted_line_integral(k, -r, r, &shifted, |y| tr.translate_1d(f, x, y));
    Ok(moved / base)
}

/// Mass defect of a tensor-product function under coordinate-wise
/// translation: the product of the coordinate mass ratios against 1.
pub fn mass_conservation_defect_nd(tr: &NdTranslator, f: &Product, x: &[f64]) -> Result<f64> {
    if x.len() != tr.dim() || f.factors().len() != tr.dim() {
        return Err(DunklError::DimensionMismatch {
            expected: tr.dim(),
            got: x.len(),
        });
    }
    let mut ratio = 1.0;
    for (j, fj) in f.factors().iter().enumerate() {
        ratio *= mass_ratio(tr.coordinate(j), fj.as_ref(), x[j])?;
    }
    Ok((ratio - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Constant, Gaussian, SmoothedIndicator};
    use crate::quadrature::adaptive_gk;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tr(k: f64) -> Translator {
        Translator::new(k).unwrap()
    }

    #[test]
    fn point_masses_and_classical_shift() {
        let f = |x: f64| x.sin() + 2.0;
        assert_eq!(tr(0.7).translate_1d(&f, 1.3, 0.0), f(1.3));
        assert_eq!(tr(0.7).translate_1d(&f, 0.0, -2.1), f(-2.1));
        assert_eq!(tr(0.0).translate_1d(&|x: f64| x, 1.0, 2.0), 3.0);
        assert_eq!(tr(0.7).measure_mass(0.0, 5.0), 1.0);
        assert_eq!(tr(0.7).total_variation(0.0, 5.0), 1.0);
    }

    #[test]
    fn constants_are_preserved() {
        assert_relative_eq!(
            tr(1.0).translate_1d(&Constant(1.0), 1.0, 2.0),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(tr(0.7).measure_mass(1.0, 2.0), 1.0, max_relative = 1e-9);
        assert!(tr(0.7).total_variation(1.0, 2.0) <= 4.0);
    }

    #[test]
    fn support_examples() {
        assert!(!support_check(1.0, 2.0, 0.5));
        assert!(support_check(1.0, 2.0, 2.5));
        assert!(!support_check(1.0, 2.0, 3.5));
        assert_eq!(z_form_density(1.0, 2.0, 0.5, 0.7), 0.0);
        assert_eq!(z_form_density(1.0, 2.0, 3.5, 0.7), 0.0);
        assert!(z_form_density(1.0, 2.0, 2.5, 0.7) != 0.0);
        assert_eq!(sigma(0.0, 2.0, 1.0), 0.0);
    }

    #[test]
    fn density_matches_sigma_definition() {
        // rho from the three sigma terms against the factored form
        for &(x, y, z) in &[(1.0, 2.0, 2.5), (-1.0, 2.0, -1.5), (0.7, -0.4, 0.9)] {
            let q = z * z - (x - y) * (x - y);
            let factored = q * (1.0 + (x + y) / z) / (4.0 * x * y);
            assert_relative_eq!(rho(x, y, z), factored, max_relative = 1e-13);
        }
    }

    // At k = 1 the density is rational: (xy)^{-1} z^{-1} rho / 2 against |z|^2 dz.
    #[test]
    fn unit_multiplicity_density_integrates_to_one() {
        let (x, y) = (1.0, 2.0);
        let dens = |z: f64| z_form_density(x, y, z, 1.0) * z * z;
        let m =
            adaptive_gk(dens, 1.0, 3.0, 1e-14, 1e-13) + adaptive_gk(dens, -3.0, -1.0, 1e-14, 1e-13);
        assert_relative_eq!(m, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn t_form_and_z_form_agree() {
        let g = Gaussian::new(1.0, 0.8);
        for &k in &[0.3, 0.7, 1.0, 2.5] {
            let t = tr(k);
            for &(x, y) in &[(1.0, 2.0), (0.3, 4.0), (-2.0, 1.0), (1.5, -1.5), (0.8, 0.8)] {
                let a = t.translate_1d(&g, x, y);
                let b = t.translate_z_form(&g, x, y);
                assert!((a - b).abs() < 1e-7, "k={k} ({x},{y}) {a} {b}");
            }
        }
    }

    #[test]
    fn odd_function_translation_by_both_forms() {
        let f = |x: f64| x * (-x * x).exp();
        let t = tr(0.7);
        for &(x, y) in &[(1.0, 2.0), (-0.5, 1.2)] {
            assert!((t.translate_1d(&f, x, y) - t.translate_z_form(&f, x, y)).abs() < 1e-7);
        }
    }

    #[test]
    fn ball_indicator_closed_form_matches_z_form() {
        for &k in &[0.3, 1.0, 2.5] {
            let t = tr(k);
            for &(x, r, y) in &[
                (1.0f64, 1.5f64, 2.0f64),
                (-0.7, 1.0, 0.9),
                (2.0, 2.5, -1.0),
                (0.5, 0.3, 0.6),
            ] {
                let (lo, hi) = support_shell(x, -y);
                let cut = r.clamp(lo, hi);
                let de = TanhSinh::default();
                let z_form = de.integrate(lo, cut, |p| {
                    let from_hi = p.from_hi + (hi - cut);
                    t.dz_density(x, -y, p.x, p.from_lo, from_hi, 1.0)
                        + t.dz_density(x, -y, p.x, p.from_lo, from_hi, -1.0)
                });
                let closed = t.ball_indicator(x, r, y);
                assert!(
                    (closed - z_form).abs() < 1e-9,
                    "k={k} {x} {r} {y}: {closed} {z_form}"
                );
            }
        }
    }

    #[test]
    fn ball_indicator_extremes() {
        let t = tr(0.7);
        assert_eq!(t.ball_indicator(1.0, 3.5, 2.0), 1.0);
        assert_eq!(t.ball_indicator(1.0, 0.5, 2.0), 0.0);
        assert_eq!(tr(0.0).ball_indicator(1.0, 0.5, 1.2), 1.0);
        assert_eq!(tr(0.0).ball_indicator(1.0, 0.5, 2.0), 0.0);
    }

    #[test]
    fn antipodal_node_convention() {
        // y = -x: s vanishes only at t = 1, never a Gauss node
        let m = tr(0.6).measure(1.3, -1.3);
        assert!(m.radii.iter().all(|&r| r > 0.0));
        assert_relative_eq!(m.mass(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(tr(0.6).measure_mass(1.3, -1.3), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn mass_conservation_examples() {
        let ctx = DunklContext::one_dim(1.0).unwrap();
        let q = Gaussian::heat(&ctx, 1.0).unwrap();
        assert!(mass_conservation_defect(&tr(1.0), &q, 2.0).unwrap() < 1e-7);
        assert!(mass_conservation_defect(&tr(1.0), &q, 0.0).unwrap() < 1e-12);
        let ctx0 = DunklContext::one_dim(0.0).unwrap();
        let q0 = Gaussian::heat(&ctx0, 1.0).unwrap();
        assert!(mass_conservation_defect(&tr(0.0), &q0, 1.7).unwrap() < 1e-10);
    }

    #[test]
    fn small_multiplicity_approaches_shift() {
        let g = Gaussian::new(1.0, 1.0);
        let t = Translator::with_order(1e-4, 128).unwrap();
        let mut worst = 0.0f64;
        for i in 0..41 {
            let y = -4.0 + 0.2 * i as f64;
            worst = worst.max((t.translate_1d(&g, 0.9, y) - g.eval(0.9 + y)).abs());
        }
        assert!(worst < 2e-3, "{worst}");
    }

    #[test]
    fn nd_translation() {
        let ctx =
            DunklContext::new(2, crate::MultiplicityVector::new(vec![0.5, 1.0]).unwrap()).unwrap();
        let nt = NdTranslator::new(&ctx, 24).unwrap();
        let f = |z: &[f64]| (-(z[0] * z[0] + z[1] * z[1])).exp();
        assert_relative_eq!(
            nt.translate_nd(&f, &[0.3, -0.4], &[0.0, 0.0]).unwrap(),
            f(&[0.3, -0.4]),
            max_relative = 1e-14
        );
        let one = |_: &[f64]| 1.0;
        assert_relative_eq!(
            nt.translate_nd(&one, &[0.3, -0.4], &[1.0, 2.0]).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        let ctx0 =
            DunklContext::new(2, crate::MultiplicityVector::new(vec![0.0, 0.0]).unwrap()).unwrap();
        let nt0 = NdTranslator::new(&ctx0, 24).unwrap();
        assert_eq!(
            nt0.translate_nd(&f, &[0.3, -0.4], &[1.0, 2.0]).unwrap(),
            f(&[1.3, 1.6])
        );
        let big =
            DunklContext::new(5, crate::MultiplicityVector::uniform(5, 1.0).unwrap()).unwrap();
        assert!(matches!(
            NdTranslator::new(&big, 8),
            Err(DunklError::Capacity(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn measure_properties(
            k in prop::sample::select(vec![0.3, 0.7, 1.0, 2.5]),
            x in -3.0f64..3.0,
            y in -3.0f64..3.0,
        ) {
            let t = tr(k);
            prop_assert!((t.measure_mass(x, y) - 1.0).abs() < 1e-9);
            prop_assert!(t.total_variation(x, y) <= 4.0 + 1e-9);
            let probes: Vec<f64> = (0..60).map(|i| -6.0 + 0.2 * i as f64 + 0.0123).collect();
            prop_assert_eq!(t.support_violations(x, y, &probes), 0);
        }

        #[test]
        fn radial_positivity(
            k in prop::sample::select(vec![0.3, 0.7, 1.0, 2.5]),
            x in -3.0f64..3.0,
            y in -3.0f64..3.0,
        ) {
            let t = tr(k);
            let g = Gaussian::new(1.0, 0.5);
            let s = SmoothedIndicator { half_width: 1.0, smoothing: 0.1 };
            prop_assert!(t.translate_1d(&g, x, y) >= -1e-9);
            prop_assert!(t.translate_1d(&s, x, y) >= -1e-9);
            prop_assert!(t.ball_indicator(x, 1.0, y) >= 0.0);
        }
    }
}
