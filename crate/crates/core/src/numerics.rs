//! Numerical kernels: adaptive Gauss–Kronrod quadrature for complex integrands,
//! principal values, the Dirichlet kernel, Airy Ai and complex log-gamma.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

pub type Complex = Complex64;

/// Tolerances and subdivision budget for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, max_subdivisions: 2000 }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = Self { abs_tol, rel_tol, max_subdivisions };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::InvalidInput(format!(
                "quadrature config needs abs_tol > 0, rel_tol > 0, max_subdivisions >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Same budget with both tolerances replaced.
    pub fn with_tol(self, tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..self }
    }
}

/// Where an integration range ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalLimit {
    Finite { x: f64 },
    Cutoff { lambda: f64 },
    Regulated { eps: f64 },
}

impl IntervalLimit {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntervalLimit::Finite { x } if x.is_finite() => Ok(()),
            IntervalLimit::Cutoff { lambda } if lambda > 0.0 => Ok(()),
            IntervalLimit::Regulated { eps } if eps > 0.0 => Ok(()),
            other => Err(Error::InvalidInput(format!("bad interval limit {other:?}"))),
        }
    }
}

// Kronrod 21-point abscissae (descending, last is the centre) and weights;
// the 10-point Gauss rule sits on the odd-indexed abscissae.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452125,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex,
    error: f64,
    abs: f64,
}

fn gk21<F: Fn(f64) -> Complex>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[10];
    let mut gauss = Complex::new(0.0, 0.0);
    let mut abs = fc.norm() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        kron += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    Panel {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).norm(),
        abs: abs * half.abs(),
    }
}

/// Adaptive integral of a complex-valued function over `[x1, x2]`.
pub fn integrate_complex<F>(f: F, x1: f64, x2: f64, cfg: &QuadratureConfig) -> Result<Complex>
where
    F: Fn(f64) -> Complex,
{
    integrate_with_breaks(f, &[x1, x2], cfg)
}

/// Adaptive integral over consecutive panels `breaks[0]..breaks[1]..`.
///
/// Refinement is global: the panel with the largest error estimate is bisected
/// until the summed estimate meets the tolerance. The subdivision budget counts
/// bisections, not the initial panels.
pub fn integrate_with_breaks<F>(f: F, breaks: &[f64], cfg: &QuadratureConfig) -> Result<Complex>
where
    F: Fn(f64) -> Complex,
{
    cfg.validate()?;
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("need at least two break points".into()));
    }
    if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(format!("break points must be finite and increasing: {breaks:?}")));
    }
    let mut panels: Vec<Panel> = breaks.windows(2).map(|w| gk21(&f, w[0], w[1])).collect();
    let mut bisections = 0usize;
    loop {
        let total: Complex = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let abs: f64 = panels.iter().map(|p| p.abs).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::InvalidInput("integrand produced a non-finite value".into()));
        }
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.norm()).max(50.0 * f64::EPSILON * abs);
        if err <= tol {
            return Ok(total);
        }
        if bisections >= cfg.max_subdivisions {
            return Err(Error::NonConvergence { subdivisions: bisections, error: err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if !(p.a < mid && mid < p.b) {
            return Err(Error::NonConvergence { subdivisions: bisections, error: err });
        }
        panels[worst] = gk21(&f, p.a, mid);
        panels.push(gk21(&f, mid, p.b));
        bisections += 1;
    }
}

/// Break points for `[x1, x2]` such that no panel spans more than half a period
/// of `e^{i freq x}` once the whole range covers more than one period.
pub fn oscillation_breaks(x1: f64, x2: f64, freq: f64) -> Vec<f64> {
    let span = x2 - x1;
    let w = freq.abs();
    let n = if w * span > 2.0 * PI { (w * span / PI).ceil() as usize } else { 1 };
    (0..=n).map(|i| if i == n { x2 } else { x1 + span * i as f64 / n as f64 }).collect()
}

/// Merges extra interior break points (e.g. potential edges) into a sorted list.
pub fn merge_breaks(mut base: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = (base[0], base[base.len() - 1]);
    base.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    base.sort_by(f64::total_cmp);
    base.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    base
}

/// Integral of `f` whose dominant oscillation is `e^{i freq x}`.
pub fn integrate_oscillatory<F>(f: F, x1: f64, x2: f64, freq: f64, cfg: &QuadratureConfig) -> Result<Complex>
where
    F: Fn(f64) -> Complex,
{
    if !(x1 < x2) {
        return Err(Error::InvalidInput(format!("need x1 < x2, got [{x1}, {x2}]")));
    }
    integrate_with_breaks(f, &oscillation_breaks(x1, x2, freq), cfg)
}

/// `2 sin(dk Λ) / dk`, the finite-interval stand-in for `2π δ(dk)`.
pub fn dirichlet_kernel(dk: f64, lambda: f64) -> f64 {
    let x = dk * lambda;
    if x.abs() < 1e-8 {
        2.0 * lambda * (1.0 - x * x / 6.0)
    } else {
        2.0 * x.sin() / dk
    }
}

/// Principal value of `∫ f(x)/(x - pole) dx` over `[x1, x2]`.
pub fn principal_value<F>(f: F, pole: f64, x1: f64, x2: f64, cfg: &QuadratureConfig) -> Result<Complex>
where
    F: Fn(f64) -> Complex,
{
    if !(x1 < pole && pole < x2) {
        return Err(Error::PoleOutsideInterval { pole, x1, x2 });
    }
    let fp = f(pole);
    // Panels meet at the pole, so Kronrod nodes never land on it.
    let regular = integrate_with_breaks(|x| (f(x) - fp) / (x - pole), &[x1, pole, x2], cfg)?;
    Ok(regular + fp * ((x2 - pole) / (pole - x1)).ln())
}

/// `sin(z)/z` for complex argument, regular at the origin.
pub fn sinc(z: Complex) -> Complex {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

const AI0: f64 = 0.355_028_053_887_817_239;
const AIP0: f64 = 0.258_819_403_792_806_798;

fn airy_series(x: f64) -> f64 {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        if tf.abs() <= 1e-17 * f.abs() && tg.abs() <= 1e-17 * g.abs().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

#[cfg(test)]
fn tight() -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-300, rel_tol: 1e-14, max_subdivisions: 400 }
}

// Sum of non-adaptive Kronrod panels; the Airy integrands below are smooth
// and their oscillation count is bounded, so a fixed panel count suffices.
fn fixed_panels<F: Fn(f64) -> Complex>(f: F, a: f64, b: f64, n: usize) -> Complex {
    let w = (b - a) / n as f64;
    (0..n).map(|j| gk21(&f, a + w * j as f64, a + w * (j + 1) as f64).value).sum()
}

// Steepest-descent contour through the saddle at sqrt(x); integrand is a
// decaying Gaussian times a slow cosine.
fn airy_positive(x: f64) -> f64 {
    let s = x.sqrt();
    let zeta = 2.0 / 3.0 * x * s;
    let upper = (40.0 / s).sqrt();
    let f = |u: f64| Complex::new((-s * u * u).exp() * (u * u * u / 3.0).cos(), 0.0);
    (-zeta).exp() * fixed_panels(f, 0.0, upper, 12).re / PI
}

fn airy_decaying_asymptotic(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            let next = -term * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf * zeta);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
        }
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (-zeta).exp() * sum / (2.0 * PI.sqrt() * x.powf(0.25))
}

fn airy_negative_mid(x: f64) -> f64 {
    let rot = Complex::from_polar(1.0, FRAC_PI_6);
    let f = |r: f64| (Complex::new(-r * r * r / 3.0, 0.0) + Complex::i() * x * r * rot).exp() * rot;
    fixed_panels(f, 0.0, 7.5, 12).re / PI
}

/// `Ai(x)` from the defining integral with the path rotated by π/6.
#[cfg(test)]
pub(crate) fn airy_rotated_ray(x: f64) -> f64 {
    let rot = Complex::from_polar(1.0, FRAC_PI_6);
    let f = |r: f64| (Complex::new(-r * r * r / 3.0, 0.0) + Complex::i() * x * r * rot).exp() * rot;
    let upper = 6.0 + (x.abs() / 2.0).sqrt() * 2.0;
    integrate_with_breaks(f, &[0.0, 0.5 * upper, upper], &tight()).map(|c| c.re / PI).unwrap_or(f64::NAN)
}

fn airy_oscillatory_asymptotic(x: f64) -> f64 {
    let z = -x;
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let (mut even, mut odd) = (0.0, 0.0);
    let mut u = 1.0;
    let mut term_prev = f64::INFINITY;
    let mut pow = 1.0;
    for k in 0..80 {
        if k > 0 {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
            pow *= zeta;
        }
        let term = u / pow;
        if term > term_prev || term < 1e-18 {
            break;
        }
        term_prev = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += sign * term;
        } else {
            odd += sign * term;
        }
    }
    let phase = zeta - FRAC_PI_4;
    (phase.cos() * even + phase.sin() * odd) / (PI.sqrt() * z.powf(0.25))
}

/// Airy function `Ai(x)` for real argument.
pub fn airy_ai(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 1.0 {
        if x > 105.0 {
            0.0
        } else if x >= 8.0 {
            airy_decaying_asymptotic(x)
        } else {
            airy_positive(x)
        }
    } else if x >= -4.5 {
        airy_series(x)
    } else if x >= -8.0 {
        airy_negative_mid(x)
    } else {
        airy_oscillatory_asymptotic(x)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn wrap_phase(mut v: Complex) -> Complex {
    let two_pi = 2.0 * PI;
    v.im -= two_pi * (v.im / two_pi).round();
    if v.im <= -PI {
        v.im += two_pi;
    }
    v
}

// ln sin(w), stable when |Im w| is large enough to overflow sin itself.
fn ln_sin(w: Complex) -> Complex {
    let i = Complex::i();
    if w.im > 1.0 {
        -i * w + (Complex::new(1.0, 0.0) - (2.0 * i * w).exp()).ln() + (i / 2.0).ln()
    } else if w.im < -1.0 {
        i * w + (Complex::new(1.0, 0.0) - (-2.0 * i * w).exp()).ln() + (-i / 2.0).ln()
    } else {
        w.sin().ln()
    }
}

fn lanczos(z: Complex) -> Complex {
    let z = z - 1.0;
    let mut acc = Complex::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln Γ(z)` with the imaginary part reduced to `(-π, π]`.
pub fn log_gamma_complex(z: Complex) -> Result<Complex> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::PoleOfGamma(z.re));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("log_gamma of non-finite {z}")));
    }
    let v = if z.re < 0.5 {
        Complex::new(PI.ln(), 0.0) - ln_sin(PI * z) - lanczos(Complex::new(1.0, 0.0) - z)
    } else {
        lanczos(z)
    };
    Ok(wrap_phase(v))
}
