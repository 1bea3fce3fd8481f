//! Exactly solvable potentials: stationary scattering states and their
//! reflection/transmission amplitudes. Units have ħ = 1.
//!
//! Scattering states are incident from the left:
//! `φ(k,x) = e^{ikx} + R e^{-ikx}` on the far left and `T e^{ikx}` on the far right.

use crate::error::{Error, Result};
use crate::numerics::{airy_ai, log_gamma_complex, sinc, Complex};
use serde::{Deserialize, Serialize};

fn unit_mass() -> f64 {
    1.0
}

/// One solvable potential together with the particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free {
        #[serde(default = "unit_mass")]
        m: f64,
    },
    /// `V(x) = g δ(x)`
    Delta {
        g: f64,
        #[serde(default = "unit_mass")]
        m: f64,
    },
    /// `V(x) = V0` for `-a/2 < x <= a/2`, zero elsewhere.
    SquareWell {
        #[serde(rename = "V0")]
        v0: f64,
        a: f64,
        #[serde(default = "unit_mass")]
        m: f64,
    },
    /// `V(x) = V0 / cosh²(μx)`
    PoschlTeller {
        #[serde(rename = "V0")]
        v0: f64,
        mu: f64,
        #[serde(default = "unit_mass")]
        m: f64,
    },
    /// Uniform force, `V(z) = m g z`.
    Linear {
        g_accel: f64,
        #[serde(default = "unit_mass")]
        m: f64,
    },
}

/// Asymptotic amplitudes of a scattering state; the interior amplitudes are only
/// filled in for the square well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringCoefficients {
    #[serde(rename = "R")]
    pub r: Complex,
    #[serde(rename = "T")]
    pub t: Complex,
    #[serde(rename = "A_plus", skip_serializing_if = "Option::is_none")]
    pub a_plus: Option<Complex>,
    #[serde(rename = "A_minus", skip_serializing_if = "Option::is_none")]
    pub a_minus: Option<Complex>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<Complex>,
}

impl ScatteringCoefficients {
    fn plain(r: Complex, t: Complex) -> Self {
        Self { r, t, a_plus: None, a_minus: None, d: None }
    }

    /// `|R|² + |T|² - 1`
    pub fn unitarity_defect(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr() - 1.0
    }
}

/// Exterior and interior wavenumbers at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavenumbers {
    pub k: f64,
    pub k_hat: Complex,
}

impl PotentialSpec {
    pub fn free() -> Self {
        PotentialSpec::Free { m: 1.0 }
    }

    pub fn delta(g: f64) -> Self {
        PotentialSpec::Delta { g, m: 1.0 }
    }

    pub fn square_well(v0: f64, a: f64) -> Self {
        PotentialSpec::SquareWell { v0, a, m: 1.0 }
    }

    pub fn poschl_teller(v0: f64, mu: f64) -> Self {
        PotentialSpec::PoschlTeller { v0, mu, m: 1.0 }
    }

    /// Pöschl–Teller well parameterised by `ν`, using `ν(ν+1) = -2 m V0 / μ²`.
    pub fn poschl_teller_nu(nu: f64, mu: f64, m: f64) -> Self {
        PotentialSpec::PoschlTeller { v0: -nu * (nu + 1.0) * mu * mu / (2.0 * m), mu, m }
    }

    pub fn linear(g_accel: f64) -> Self {
        PotentialSpec::Linear { g_accel, m: 1.0 }
    }

    pub fn with_mass(self, mass: f64) -> Self {
        match self {
            PotentialSpec::Free { .. } => PotentialSpec::Free { m: mass },
            PotentialSpec::Delta { g, .. } => PotentialSpec::Delta { g, m: mass },
            PotentialSpec::SquareWell { v0, a, .. } => PotentialSpec::SquareWell { v0, a, m: mass },
            PotentialSpec::PoschlTeller { v0, mu, .. } => PotentialSpec::PoschlTeller { v0, mu, m: mass },
            PotentialSpec::Linear { g_accel, .. } => PotentialSpec::Linear { g_accel, m: mass },
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            PotentialSpec::Free { m }
            | PotentialSpec::Delta { m, .. }
            | PotentialSpec::SquareWell { m, .. }
            | PotentialSpec::PoschlTeller { m, .. }
            | PotentialSpec::Linear { m, .. } => m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Free { .. } => "free",
            PotentialSpec::Delta { .. } => "delta",
            PotentialSpec::SquareWell { .. } => "square_well",
            PotentialSpec::PoschlTeller { .. } => "poschl_teller",
            PotentialSpec::Linear { .. } => "linear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("{}: {msg}", self.name())));
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return bad("mass must be positive and finite");
        }
        match *self {
            PotentialSpec::Free { .. } => Ok(()),
            PotentialSpec::Delta { g, .. } if !g.is_finite() => bad("g must be finite"),
            PotentialSpec::SquareWell { v0, a, .. } if !(a > 0.0 && a.is_finite() && v0.is_finite()) => {
                bad("need a > 0 and finite V0")
            }
            PotentialSpec::PoschlTeller { v0, mu, .. } if !(mu > 0.0 && mu.is_finite() && v0.is_finite()) => {
                bad("need mu > 0 and finite V0")
            }
            PotentialSpec::Linear { g_accel, .. } if !(g_accel.is_finite() && g_accel != 0.0) => {
                bad("g_accel must be finite and nonzero")
            }
            _ => Ok(()),
        }
    }

    /// `E = k² / 2m`
    pub fn energy(&self, k: f64) -> f64 {
        k * k / (2.0 * self.mass())
    }

    /// Potential energy at `x`; the delta spike is reported as zero.
    pub fn potential_at(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Free { .. } | PotentialSpec::Delta { .. } => 0.0,
            PotentialSpec::SquareWell { v0, a, .. } => {
                if x > -a / 2.0 && x <= a / 2.0 {
                    v0
                } else {
                    0.0
                }
            }
            PotentialSpec::PoschlTeller { v0, mu, .. } => v0 / (mu * x).cosh().powi(2),
            PotentialSpec::Linear { g_accel, m } => m * g_accel * x,
        }
    }

    /// Points where the wavefunction has a kink or region change.
    pub fn region_edges(&self) -> Vec<f64> {
        match *self {
            PotentialSpec::Delta { .. } => vec![0.0],
            PotentialSpec::SquareWell { a, .. } => vec![-a / 2.0, a / 2.0],
            _ => Vec::new(),
        }
    }

    /// Half-width of the region where the potential acts (zero for point-like).
    pub fn support_half_width(&self) -> f64 {
        match *self {
            PotentialSpec::SquareWell { a, .. } => a / 2.0,
            PotentialSpec::PoschlTeller { mu, .. } => 20.0 / mu,
            _ => 0.0,
        }
    }

    /// Characteristic length used to size finite-difference steps in momentum.
    pub fn length_scale(&self) -> f64 {
        match *self {
            PotentialSpec::SquareWell { a, .. } => a,
            PotentialSpec::PoschlTeller { mu, .. } => 1.0 / mu,
            PotentialSpec::Delta { g, m } => 1.0 / (m * g.abs()).max(1e-3),
            _ => 1.0,
        }
    }

    /// Pöschl–Teller `ν = -1/2 + sqrt(1/4 - 2 m V0 / μ²)` (complex above the barrier threshold).
    pub fn poschl_teller_index(&self) -> Option<Complex> {
        match *self {
            PotentialSpec::PoschlTeller { v0, mu, m } => {
                Some(Complex::new(-0.5, 0.0) + Complex::new(0.25 - 2.0 * m * v0 / (mu * mu), 0.0).sqrt())
            }
            _ => None,
        }
    }
}

fn interior_k(k: Complex, v0: f64, m: f64) -> Complex {
    let kh = (k * k - 2.0 * m * v0).sqrt();
    if kh.re == 0.0 && kh.im < 0.0 {
        -kh
    } else {
        kh
    }
}

/// Exterior and interior wavenumber at exterior momentum `k`.
pub fn interior_wavenumber(spec: &PotentialSpec, k: f64) -> Wavenumbers {
    let k_hat = match *spec {
        PotentialSpec::SquareWell { v0, m, .. } => interior_k(Complex::new(k, 0.0), v0, m),
        _ => Complex::new(k, 0.0),
    };
    Wavenumbers { k, k_hat }
}

/// Reflection and transmission amplitudes at real `k > 0`.
pub fn coefficients(spec: &PotentialSpec, k: f64) -> Result<ScatteringCoefficients> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    coefficients_complex(spec, Complex::new(k, 0.0))
}

/// Amplitudes continued to complex `k` (closed forms are analytic in k).
pub fn coefficients_complex(spec: &PotentialSpec, k: Complex) -> Result<ScatteringCoefficients> {
    let i = Complex::i();
    let one = Complex::new(1.0, 0.0);
    match *spec {
        PotentialSpec::Free { .. } => Ok(ScatteringCoefficients::plain(Complex::new(0.0, 0.0), one)),
        PotentialSpec::Delta { g, m } => {
            let den = k + i * m * g;
            Ok(ScatteringCoefficients::plain(-i * m * g / den, k / den))
        }
        PotentialSpec::SquareWell { v0, a, m } => square_well(k, v0, a, m),
        PotentialSpec::PoschlTeller { mu, .. } => {
            let nu = spec.poschl_teller_index().unwrap_or_default();
            poschl_teller(k / mu, nu)
        }
        PotentialSpec::Linear { .. } => {
            Err(Error::Unsupported("a uniform force has no asymptotic R, T".into()))
        }
    }
}

// Written with D/k̂ so that k̂ → 0 stays regular and complex k is allowed.
fn square_well(k: Complex, v0: f64, a: f64, m: f64) -> Result<ScatteringCoefficients> {
    let i = Complex::i();
    let kh = interior_k(k, v0, m);
    let sa = sinc(kh * a) * a;
    let ca = (kh * a).cos();
    let d_red = (k * k + kh * kh) * sa + 2.0 * i * k * ca;
    if d_red.norm() == 0.0 {
        return Err(Error::DividesByZeroD(k.re));
    }
    let phase = (-i * k * a).exp();
    let r = phase * (k * k - kh * kh) * sa / d_red;
    let t = phase * 2.0 * i * k / d_red;
    let d = d_red * kh;
    let (a_plus, a_minus) = if kh.norm() > 0.0 {
        let ap = (-i * (k + kh) * a / 2.0).exp() * (kh + k) * i * k / d;
        let am = (-i * (k - kh) * a / 2.0).exp() * (kh - k) * i * k / d;
        (Some(ap), Some(am))
    } else {
        (None, None)
    };
    Ok(ScatteringCoefficients { r, t, a_plus, a_minus, d: Some(d) })
}

fn is_nonnegative_integer(nu: Complex) -> bool {
    nu.im.abs() < 1e-12 && nu.re > -1e-12 && (nu.re - nu.re.round()).abs() < 1e-12
}

fn poschl_teller(kappa: Complex, nu: Complex) -> Result<ScatteringCoefficients> {
    let i = Complex::i();
    let one = Complex::new(1.0, 0.0);
    let lg = log_gamma_complex;
    let common = lg(one + nu - i * kappa)? + lg(-nu - i * kappa)?;
    let t = (common - lg(-i * kappa)? - lg(one - i * kappa)?).exp();
    let r = if is_nonnegative_integer(nu) {
        // 1/Γ(-ν) vanishes: reflectionless
        Complex::new(0.0, 0.0)
    } else {
        (lg(i * kappa)? + common - lg(-i * kappa)? - lg(one + nu)? - lg(-nu)?).exp()
    };
    Ok(ScatteringCoefficients::plain(r, t))
}

/// Stationary scattering state `φ(k, x)`.
pub fn wavefunction(spec: &PotentialSpec, k: f64, x: f64) -> Result<Complex> {
    wavefunction_with_derivative(spec, k, x).map(|(v, _)| v)
}

/// `φ(k, x)` and `dφ/dx`, both from the closed forms.
pub fn wavefunction_with_derivative(spec: &PotentialSpec, k: f64, x: f64) -> Result<(Complex, Complex)> {
    let c = coefficients(spec, k)?;
    wavefunction_from(spec, &c, k, x)
}

/// Same as [`wavefunction_with_derivative`] with precomputed amplitudes.
pub fn wavefunction_from(
    spec: &PotentialSpec,
    c: &ScatteringCoefficients,
    k: f64,
    x: f64,
) -> Result<(Complex, Complex)> {
    let i = Complex::i();
    let plus = (i * k * x).exp();
    let left = || (plus + c.r / plus, i * k * (plus - c.r / plus));
    let right = || (c.t * plus, i * k * c.t * plus);
    match *spec {
        PotentialSpec::Free { .. } => Ok((plus, i * k * plus)),
        PotentialSpec::Delta { .. } => Ok(if x <= 0.0 { left() } else { right() }),
        PotentialSpec::SquareWell { v0, a, m } => {
            let half = a / 2.0;
            if x <= -half {
                Ok(left())
            } else if x >= half {
                Ok(right())
            } else {
                // continue the right-hand solution inward from x = a/2
                let kh = interior_k(Complex::new(k, 0.0), v0, m);
                let u = x - half;
                let edge = c.t * (i * k * half).exp();
                let arg = kh * u;
                let val = edge * (arg.cos() + i * k * u * sinc(arg));
                let der = edge * (-kh * kh * u * sinc(arg) + i * k * arg.cos());
                Ok((val, der))
            }
        }
        _ => Err(Error::Unsupported(format!("no closed-form wavefunction for {}", spec.name()))),
    }
}

/// Uniform-force eigenfunction `Ai((z - E/(m g)) / c)` with `c = (2 m² g)^{-1/3}`.
pub fn airy_state(spec: &PotentialSpec, energy: f64, z: f64) -> Result<f64> {
    match *spec {
        PotentialSpec::Linear { g_accel, m } => {
            let scale = (1.0 / (2.0 * m * m * g_accel)).cbrt();
            Ok(airy_ai((z - energy / (m * g_accel)) / scale))
        }
        _ => Err(Error::Unsupported("airy_state needs a linear potential".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn interior_wavenumbers() {
        let w = interior_wavenumber(&PotentialSpec::square_well(0.0, 1.0), 2.0);
        assert_eq!(w.k_hat, c(2.0, 0.0));
        let w = interior_wavenumber(&PotentialSpec::square_well(2.0, 10.0), 3.0);
        assert_relative_eq!(w.k_hat.re, 5f64.sqrt(), epsilon = 1e-15);
        let w = interior_wavenumber(&PotentialSpec::square_well(2.0, 10.0), 1.0);
        assert!(w.k_hat.re.abs() < 1e-15);
        assert_relative_eq!(w.k_hat.im, 3f64.sqrt(), epsilon = 1e-15);
        // dispersion
        for k in [0.3, 1.0, 2.5] {
            let s = PotentialSpec::square_well(2.0, 10.0);
            let kh = interior_wavenumber(&s, k).k_hat;
            assert!((kh * kh / 2.0 + 2.0 - s.energy(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_at_k_equal_g() {
        let g = 1.7;
        let co = coefficients(&PotentialSpec::delta(g), g).unwrap();
        assert!((co.r - c(-0.5, -0.5)).norm() < 1e-15);
        assert!((co.t - c(0.5, -0.5)).norm() < 1e-15);
        assert_relative_eq!(co.r.norm_sqr(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn free_is_transparent() {
        let co = coefficients(&PotentialSpec::free(), 0.8).unwrap();
        assert_eq!(co.r, c(0.0, 0.0));
        assert_eq!(co.t, c(1.0, 0.0));
        assert_eq!(wavefunction(&PotentialSpec::free(), 1.0, 0.0).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn square_well_resonances_are_reflectionless() {
        let (v0, a) = (2.0, 10.0);
        let s = PotentialSpec::square_well(v0, a);
        for n in 1..6 {
            let kh = n as f64 * PI / a;
            let k = (kh * kh + 2.0 * v0).sqrt();
            let co = coefficients(&s, k).unwrap();
            assert!(co.r.norm() < 1e-13);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * (-Complex::i() * k * a).exp();
            assert!((co.t - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn square_well_edge_value_and_density_jump() {
        let (v0, a) = (2.0, 10.0);
        let s = PotentialSpec::square_well(v0, a);
        let i = Complex::i();
        for k in [2.1, 2.3, 3.1] {
            let co = coefficients(&s, k).unwrap();
            let kh = interior_wavenumber(&s, k).k_hat;
            let d = co.d.unwrap();
            let expect = (-i * k * a / 2.0).exp() * (2.0 * k * k * (kh * a).sin() + 2.0 * i * k * kh * (kh * a).cos()) / d;
            let h = 1e-12;
            let outside = wavefunction(&s, k, -a / 2.0).unwrap();
            let inside = wavefunction(&s, k, -a / 2.0 + h).unwrap();
            assert!((outside - expect).norm() < 1e-12);
            assert!((inside - expect).norm() < 1e-10);
            let left = wavefunction(&s, k, -a / 2.0).unwrap().norm_sqr();
            let right = wavefunction(&s, k, a / 2.0).unwrap().norm_sqr();
            let jump = 4.0 * k * k / d.norm_sqr() * (k * k - kh * kh) * (kh * a).sin().powi(2);
            assert!((c(left - right, 0.0) - jump).norm() < 1e-12);
        }
    }

    #[test]
    fn interior_amplitudes_reproduce_interior_wave() {
        let s = PotentialSpec::square_well(-1.3, 4.0);
        let k = 0.9;
        let co = coefficients(&s, k).unwrap();
        let kh = interior_wavenumber(&s, k).k_hat;
        let i = Complex::i();
        for x in [-1.5, 0.0, 0.7, 1.9] {
            let v = co.a_plus.unwrap() * (i * kh * x).exp() + co.a_minus.unwrap() * (-i * kh * x).exp();
            assert!((v - wavefunction(&s, k, x).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_limit_of_thin_well() {
        let g = 1.5;
        let k = 1.1;
        let target = coefficients(&PotentialSpec::delta(g), k).unwrap();
        let mut last = f64::INFINITY;
        for a in [1e-2, 1e-3, 1e-4] {
            let co = coefficients(&PotentialSpec::square_well(g / a, a), k).unwrap();
            let err = (co.r - target.r).norm() + (co.t - target.t).norm();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn poschl_teller_reflectionless_for_integer_nu() {
        for n in 1..4 {
            let s = PotentialSpec::poschl_teller_nu(n as f64, 1.0, 1.0);
            let co = coefficients(&s, 0.7).unwrap();
            assert_eq!(co.r, c(0.0, 0.0));
            assert!((co.t.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn poschl_teller_barrier_matches_known_transmission() {
        // |T|² = sinh²(πκ) / (sinh²(πκ) + cosh²(π sqrt(2mV0/μ² - 1/4))) above the threshold
        let (v0, mu, k) = (1.0, 1.0, 1.2);
        let s = PotentialSpec::poschl_teller(v0, mu);
        let co = coefficients(&s, k).unwrap();
        let sh = (PI * k / mu).sinh().powi(2);
        let ch = (PI * (2.0 * v0 / (mu * mu) - 0.25f64).sqrt()).cosh().powi(2);
        assert_relative_eq!(co.t.norm_sqr(), sh / (sh + ch), max_relative = 1e-10);
    }

    #[test]
    fn linear_potential_states() {
        let s = PotentialSpec::linear(1.0);
        assert_relative_eq!(airy_state(&s, 0.0, 0.0).unwrap(), 0.3550280539, epsilon = 1e-10);
        assert!(airy_state(&s, 0.0, 30.0).unwrap().abs() < 1e-20);
        for d in [-2.0, 0.5, 3.0] {
            let lhs = airy_state(&s, 0.4, 1.1).unwrap();
            let rhs = airy_state(&s, 0.4 + d, 1.1 + d).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        assert!(airy_state(&PotentialSpec::free(), 0.0, 0.0).is_err());
        assert!(coefficients(&s, 1.0).is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"kind":"square_well","V0":2.0,"a":10.0,"m":1.0}"#);
        let back: PotentialSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let d: PotentialSpec = serde_json::from_str(r#"{"kind":"delta","g":3}"#).unwrap();
        assert_eq!(d, PotentialSpec::delta(3.0));
        assert!(serde_json::from_str::<PotentialSpec>(r#"{"kind":"delta","g":3,"bogus":1}"#).is_err());
        assert!(PotentialSpec::square_well(1.0, -1.0).validate().is_err());
        assert!(PotentialSpec::poschl_teller(1.0, 0.0).validate().is_err());
    }

    fn schrodinger_residual(s: &PotentialSpec, k: f64, x: f64) -> f64 {
        let h = 1e-3;
        let f = |y: f64| wavefunction(s, k, y).unwrap();
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        let m = s.mass();
        (-d2 / (2.0 * m) + (s.potential_at(x) - s.energy(k)) * f(x)).norm()
    }

    proptest! {
        #[test]
        fn unitarity_closed_forms(k in 0.05f64..50.0, v0 in -5.0f64..5.0, a in 0.1f64..20.0, g in -5.0f64..5.0) {
            for s in [PotentialSpec::free(), PotentialSpec::delta(g), PotentialSpec::square_well(v0, a)] {
                prop_assert!(coefficients(&s, k).unwrap().unitarity_defect().abs() < 1e-12);
            }
        }

        #[test]
        fn unitarity_poschl_teller(k in 0.05f64..50.0, v0 in -5.0f64..5.0, mu in 0.3f64..3.0) {
            let co = coefficients(&PotentialSpec::poschl_teller(v0, mu), k).unwrap();
            prop_assert!(co.unitarity_defect().abs() < 1e-8);
        }

        #[test]
        fn boundary_matching(v0 in -4.0f64..4.0, a in 0.5f64..12.0, k in 0.2f64..4.0) {
            let s = PotentialSpec::square_well(v0, a);
            let h = 1e-6;
            for edge in [-a / 2.0, a / 2.0] {
                let (vin, din) = wavefunction_with_derivative(&s, k, edge - 1e-13).unwrap();
                let (vout, dout) = wavefunction_with_derivative(&s, k, edge + 1e-13).unwrap();
                prop_assert!((vin - vout).norm() <= 1e-9 * (1.0 + vin.norm()));
                prop_assert!((din - dout).norm() <= 1e-9 * (1.0 + din.norm()));
                // numerical derivative on each side agrees with the analytic one
                let f = |y: f64| wavefunction(&s, k, y).unwrap();
                let left = (f(edge) - f(edge - h)) / h;
                let right = (f(edge + h) - f(edge)) / h;
                prop_assert!((left - right).norm() <= 1e-5 * (1.0 + din.norm()));
            }
        }

        #[test]
        fn schrodinger_equation_in_each_region(v0 in -3.0f64..3.0, k in 0.3f64..3.0) {
            let s = PotentialSpec::square_well(v0, 6.0);
            for x in [-9.0, -1.1, 0.4, 2.2, 7.5] {
                prop_assert!(schrodinger_residual(&s, k, x) < 1e-6);
            }
            let d = PotentialSpec::delta(v0);
            for x in [-3.0, 2.0] {
                prop_assert!(schrodinger_residual(&d, k, x) < 1e-6);
            }
        }
    }
}
