//! Overlaps `∫ φ(k2,x)* φ(k1,x) dx` of two scattering states, computed by direct
//! quadrature, by the Wronskian boundary reduction, and in closed form as
//! δ-function weights plus the pointwise non-orthogonality term Δ.
//!
//! Sign convention: for `q = k1 - k2`, `s = k1 + k2` and
//! `A = T(k2)* T(k1) + R(k2)* R(k1)`,
//!
//! ```text
//! ∫ φ2* φ1 = 2π δ(q) + π (R1 + R2*) δ(s) + Δ,
//! Δ = -i (A - 1)/q - i (R1 - R2*)/s,
//! ```
//!
//! so Δ is what remains of the cutoff integral once the δ kernels are removed
//! and the boundary phases are set to one. Δ is Hermitian: `Δ(k1,k2) = Δ(k2,k1)*`.

use crate::error::{Error, Result};
use crate::numerics::{
    airy_ai, dirichlet_kernel, integrate_oscillatory, integrate_with_breaks, merge_breaks, oscillation_breaks,
    Complex, QuadratureConfig,
};
use crate::potentials::{coefficients, wavefunction_from, PotentialSpec, ScatteringCoefficients};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// δ-function weights and the regular part of one overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapDecomposition {
    pub k1: f64,
    pub k2: f64,
    /// coefficient of δ(k1 - k2)
    pub diag_weight: Complex,
    /// coefficient of δ(k1 + k2)
    pub mirror_weight: Complex,
    /// Δ(k1, k2)
    pub delta_term: Complex,
}

/// Wronskian difference `[φ2'* φ1 - φ2* φ1']` between `x1` and `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurrent {
    pub value: Complex,
    pub x1: f64,
    pub x2: f64,
}

fn check_momenta(k1: f64, k2: f64) -> Result<()> {
    if !(k1 > 0.0 && k2 > 0.0 && k1.is_finite() && k2.is_finite()) {
        return Err(Error::InvalidInput(format!("momenta must be positive, got k1={k1}, k2={k2}")));
    }
    Ok(())
}

fn check_interval(x1: f64, x2: f64) -> Result<()> {
    if !(x1 < x2 && x1.is_finite() && x2.is_finite()) {
        return Err(Error::InvalidInput(format!("need x1 < x2, got [{x1}, {x2}]")));
    }
    Ok(())
}

// Fastest oscillation present in φ2* φ1 (exterior cross terms or interior waves).
fn product_frequency(spec: &PotentialSpec, k1: f64, k2: f64) -> f64 {
    let interior = match *spec {
        PotentialSpec::SquareWell { v0, m, .. } => {
            let w = |k: f64| (k * k - 2.0 * m * v0).abs().sqrt();
            w(k1) + w(k2)
        }
        _ => 0.0,
    };
    (k1 + k2).max(interior)
}

/// Direct quadrature of `∫_{x1}^{x2} φ(k2,x)* φ(k1,x) dx`.
pub fn direct_overlap(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    x1: f64,
    x2: f64,
    cfg: &QuadratureConfig,
) -> Result<Complex> {
    check_momenta(k1, k2)?;
    check_interval(x1, x2)?;
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    // fail early for potentials without closed-form states
    wavefunction_from(spec, &c1, k1, x1)?;
    let f = |x: f64| {
        let p1 = wavefunction_from(spec, &c1, k1, x).map(|v| v.0).unwrap_or_default();
        let p2 = wavefunction_from(spec, &c2, k2, x).map(|v| v.0).unwrap_or_default();
        p2.conj() * p1
    };
    let breaks = merge_breaks(oscillation_breaks(x1, x2, product_frequency(spec, k1, k2)), &spec.region_edges());
    integrate_with_breaks(f, &breaks, cfg)
}

fn wronskian(spec: &PotentialSpec, c1: &ScatteringCoefficients, c2: &ScatteringCoefficients, k1: f64, k2: f64, x: f64) -> Result<Complex> {
    let (p1, d1) = wavefunction_from(spec, c1, k1, x)?;
    let (p2, d2) = wavefunction_from(spec, c2, k2, x)?;
    Ok(d2.conj() * p1 - p2.conj() * d1)
}

/// Boundary current from the closed-form states and their derivatives.
pub fn boundary_j(spec: &PotentialSpec, k1: f64, k2: f64, x1: f64, x2: f64) -> Result<BoundaryCurrent> {
    check_momenta(k1, k2)?;
    check_interval(x1, x2)?;
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    let value = wronskian(spec, &c1, &c2, k1, k2, x2)? - wronskian(spec, &c1, &c2, k1, k2, x1)?;
    Ok(BoundaryCurrent { value, x1, x2 })
}

/// `|direct overlap + J / (2m (E2 - E1))|`, which vanishes for exact eigenstates.
pub fn finite_interval_identity_residual(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    x1: f64,
    x2: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let de = spec.energy(k2) - spec.energy(k1);
    if de.abs() < 1e-9 {
        return Err(Error::DegenerateEnergies(de.abs()));
    }
    let direct = direct_overlap(spec, k1, k2, x1, x2, cfg)?;
    let j = boundary_j(spec, k1, k2, x1, x2)?;
    Ok((direct + j.value / (2.0 * spec.mass() * de)).norm())
}

/// Δ from precomputed amplitudes; singular on the diagonal.
pub fn delta_from_coefficients(c1: &ScatteringCoefficients, c2: &ScatteringCoefficients, k1: f64, k2: f64) -> Complex {
    let i = Complex::i();
    let q = k1 - k2;
    let s = k1 + k2;
    let a = c2.t.conj() * c1.t + c2.r.conj() * c1.r;
    -i * (a - 1.0) / q - i * (c1.r - c2.r.conj()) / s
}

/// Δ straight from the closed form; refuses coincident momenta.
pub fn delta_term_exact(spec: &PotentialSpec, k1: f64, k2: f64) -> Result<Complex> {
    check_momenta(k1, k2)?;
    if (k1 - k2).abs() < 1e-9 {
        return Err(Error::DegenerateMomenta((k1 - k2).abs()));
    }
    Ok(delta_from_coefficients(&coefficients(spec, k1)?, &coefficients(spec, k2)?, k1, k2))
}

/// Momentum offset used by the near-diagonal stencil.
pub fn stencil_step(spec: &PotentialSpec, k_mid: f64) -> f64 {
    (1e-3 * (1.0 / spec.length_scale()).min(1.0)).min(k_mid / 4.0)
}

/// Threshold on `|k1 - k2|` below which the stencil replaces the direct formula.
pub const NEAR_DIAGONAL: f64 = 1e-4;

// Lagrange interpolation in q = k1 - k2 at fixed mid-point from q = ±h, ±2h.
fn delta_near_diagonal(spec: &PotentialSpec, k1: f64, k2: f64) -> Result<Complex> {
    let mid = 0.5 * (k1 + k2);
    let q = k1 - k2;
    let h = stencil_step(spec, mid);
    let nodes = [-2.0 * h, -h, h, 2.0 * h];
    let mut acc = Complex::new(0.0, 0.0);
    for (j, &xj) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (m, &xm) in nodes.iter().enumerate() {
            if m != j {
                w *= (q - xm) / (xj - xm);
            }
        }
        let (a, b) = (mid + 0.5 * xj, mid - 0.5 * xj);
        acc += w * delta_from_coefficients(&coefficients(spec, a)?, &coefficients(spec, b)?, a, b);
    }
    Ok(acc)
}

/// Δ(k1, k2) everywhere on k1, k2 > 0, including the diagonal limit.
pub fn delta_term(spec: &PotentialSpec, k1: f64, k2: f64) -> Result<Complex> {
    check_momenta(k1, k2)?;
    if (k1 - k2).abs() < NEAR_DIAGONAL {
        delta_near_diagonal(spec, k1, k2)
    } else {
        delta_term_exact(spec, k1, k2)
    }
}

/// δ weights and Δ for one momentum pair.
pub fn theorem2_decomposition(spec: &PotentialSpec, k1: f64, k2: f64) -> Result<OverlapDecomposition> {
    check_momenta(k1, k2)?;
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    Ok(OverlapDecomposition {
        k1,
        k2,
        diag_weight: Complex::new(2.0 * PI, 0.0),
        mirror_weight: PI * (c1.r + c2.r.conj()),
        delta_term: delta_term(spec, k1, k2)?,
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Δ sampled on a rectangular momentum grid (k1 varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub spec: PotentialSpec,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub points: Vec<OverlapDecomposition>,
}

impl DeltaGrid {
    pub const CSV_HEADER: &'static str = "k1,k2,re_delta,im_delta,abs2_delta";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 100);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let d = p.delta_term;
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", p.k1, p.k2, d.re, d.im, d.norm_sqr()));
        }
        out
    }

    /// Grid point with the largest `|Δ|²`.
    pub fn argmax_abs2(&self) -> Option<&OverlapDecomposition> {
        self.points.iter().max_by(|a, b| a.delta_term.norm_sqr().total_cmp(&b.delta_term.norm_sqr()))
    }
}

/// Evaluates Δ on `n1 × n2` points of `k1_range × k2_range` in parallel.
pub fn delta_grid(
    spec: &PotentialSpec,
    k1_range: (f64, f64),
    k2_range: (f64, f64),
    n1: usize,
    n2: usize,
) -> Result<DeltaGrid> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
    }
    if !(k1_range.0 > 0.0 && k1_range.0 < k1_range.1 && k2_range.0 > 0.0 && k2_range.0 < k2_range.1) {
        return Err(Error::InvalidInput("momentum ranges must be positive and increasing".into()));
    }
    let k1 = linspace(k1_range.0, k1_range.1, n1);
    let k2 = linspace(k2_range.0, k2_range.1, n2);
    let points = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| theorem2_decomposition(spec, k1[idx % n1], k2[idx / n1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaGrid { spec: *spec, k1, k2, points })
}

/// Exterior momentum belonging to interior momentum `k̂` of a square well.
pub fn exterior_from_interior(spec: &PotentialSpec, k_hat: f64) -> Result<f64> {
    match *spec {
        PotentialSpec::SquareWell { v0, m, .. } => {
            let k2 = k_hat * k_hat + 2.0 * m * v0;
            if k2 > 0.0 {
                Ok(k2.sqrt())
            } else {
                Err(Error::InvalidInput(format!("k_hat = {k_hat} gives no propagating exterior wave")))
            }
        }
        _ => Err(Error::Unsupported("interior momentum axis needs a square well".into())),
    }
}

/// Areas under Re Δ and Im Δ along the `a k̂1` axis at fixed `k̂2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaAreas {
    pub k2_hat: f64,
    pub axis_max: f64,
    pub area_im: f64,
    pub area_re: f64,
    /// `k̂1` where Im Δ is largest on the sampling grid
    pub im_argmax_k1_hat: f64,
}

/// Integrates Δ(k1(k̂1), k2(k̂2)) over `u = a k̂1 ∈ [0, axis_max]`.
pub fn delta_areas(spec: &PotentialSpec, k2_hat: f64, axis_max: f64, cfg: &QuadratureConfig) -> Result<DeltaAreas> {
    let a = match *spec {
        PotentialSpec::SquareWell { a, .. } => a,
        _ => return Err(Error::Unsupported("delta_areas needs a square well".into())),
    };
    let k2 = exterior_from_interior(spec, k2_hat)?;
    let f = |u: f64| {
        exterior_from_interior(spec, u / a)
            .and_then(|k1| delta_term(spec, k1, k2))
            .unwrap_or(Complex::new(f64::NAN, f64::NAN))
    };
    let breaks = merge_breaks(vec![0.0, axis_max], &[a * k2_hat]);
    let area = integrate_with_breaks(f, &breaks, cfg)?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=4000 {
        let u = axis_max * i as f64 / 4000.0;
        let v = f(u).im;
        if v > best.0 {
            best = (v, u / a);
        }
    }
    Ok(DeltaAreas { k2_hat, axis_max, area_im: area.im, area_re: area.re, im_argmax_k1_hat: best.1 })
}

/// Pieces of the `e^{-2ε|x|}`-damped overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedOverlap {
    pub eps: f64,
    /// coefficient of δ(k1 - k2) as ε → 0
    pub diag_weight: Complex,
    /// coefficient of δ(k1 + k2) as ε → 0
    pub mirror_weight: Complex,
    /// principal-value remainder as ε → 0
    pub pv_term: Complex,
    /// smooth remainder at this ε (Lorentzian-smeared principal values)
    pub remainder_at_eps: Complex,
    /// full damped integral at this ε
    pub value_at_eps: Complex,
}

/// Damped overlap `∫ e^{-2ε|x|} φ2* φ1 dx` split into δ weights and regular parts.
///
/// The exterior half-lines are done analytically; the square-well interior by quadrature.
pub fn regularized_overlap(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<RegularizedOverlap> {
    check_momenta(k1, k2)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    let b = match *spec {
        PotentialSpec::Free { .. } | PotentialSpec::Delta { .. } => 0.0,
        PotentialSpec::SquareWell { a, .. } => a / 2.0,
        _ => return Err(Error::Unsupported(format!("regularized overlap for {}", spec.name()))),
    };
    let i = Complex::i();
    let q = k1 - k2;
    let s = k1 + k2;
    let two_eps = 2.0 * eps;
    // (coefficient, wavenumber κ, side) of each exterior plane-wave product e^{iκx}
    let left = [(Complex::new(1.0, 0.0), q), (c2.r.conj() * c1.r, -q), (c1.r, -s), (c2.r.conj(), s)];
    let right = [(c2.t.conj() * c1.t, q)];
    let mut value = Complex::new(0.0, 0.0);
    let mut smooth = Complex::new(0.0, 0.0);
    let mut pv = Complex::new(0.0, 0.0);
    for (sign, terms) in [(-1.0, &left[..]), (1.0, &right[..])] {
        for &(c, kappa) in terms {
            // ∫ over the half-line beyond sign·b of e^{iκx - 2ε|x|}
            let z = Complex::new(two_eps, -sign * kappa);
            let edge = (i * kappa * sign * b).exp() * (-two_eps * b).exp();
            value += c * edge / z;
            let lor = sign * i * kappa / (two_eps * two_eps + kappa * kappa);
            smooth += c * edge * lor;
            if kappa.abs() > 0.0 {
                pv += c * (i * kappa * sign * b).exp() * (sign * i / kappa);
            }
        }
    }
    if b > 0.0 {
        let f = |x: f64| {
            let p1 = wavefunction_from(spec, &c1, k1, x).map(|v| v.0).unwrap_or_default();
            let p2 = wavefunction_from(spec, &c2, k2, x).map(|v| v.0).unwrap_or_default();
            p2.conj() * p1
        };
        let interior = integrate_oscillatory(f, -b, b, product_frequency(spec, k1, k2), cfg)?;
        let damped = integrate_oscillatory(
            |x| {
                let p1 = wavefunction_from(spec, &c1, k1, x).map(|v| v.0).unwrap_or_default();
                let p2 = wavefunction_from(spec, &c2, k2, x).map(|v| v.0).unwrap_or_default();
                p2.conj() * p1 * (-two_eps * x.abs()).exp()
            },
            -b,
            b,
            product_frequency(spec, k1, k2),
            cfg,
        )?;
        pv += interior;
        smooth += damped;
        value += damped;
    }
    Ok(RegularizedOverlap {
        eps,
        diag_weight: PI * (1.0 + c2.t.conj() * c1.t + c2.r.conj() * c1.r),
        mirror_weight: PI * (c1.r + c2.r.conj()),
        pv_term: pv,
        remainder_at_eps: smooth,
        value_at_eps: value,
    })
}

/// `∫_{x1}^{x2} e^{i(k1-k2)x} e^{-2εx} dx` in closed form.
pub fn regularized_free_interval(k1: f64, k2: f64, x1: f64, x2: f64, eps: f64) -> Complex {
    let z = Complex::new(-2.0 * eps, k1 - k2);
    if z.norm() == 0.0 {
        return Complex::new(x2 - x1, 0.0);
    }
    ((z * x2).exp() - (z * x1).exp()) / z
}

/// Boundary-identity residual for damped states `e^{-ε|x|} φ(k,x)`.
///
/// Damped states are not eigenstates, so the residual does not vanish; it shrinks with ε.
pub fn regularized_boundary_residual(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    x1: f64,
    x2: f64,
    eps: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    check_momenta(k1, k2)?;
    check_interval(x1, x2)?;
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    let damped = |c: &ScatteringCoefficients, k: f64, x: f64| -> Result<(Complex, Complex)> {
        let (p, d) = wavefunction_from(spec, c, k, x)?;
        let w = (-eps * x.abs()).exp();
        Ok((w * p, w * (d - eps * x.signum() * p)))
    };
    damped(&c1, k1, x1)?;
    let f = |x: f64| {
        let p1 = damped(&c1, k1, x).map(|v| v.0).unwrap_or_default();
        let p2 = damped(&c2, k2, x).map(|v| v.0).unwrap_or_default();
        p2.conj() * p1
    };
    let mut edges = spec.region_edges();
    edges.push(0.0);
    let breaks = merge_breaks(oscillation_breaks(x1, x2, product_frequency(spec, k1, k2)), &edges);
    let direct = integrate_with_breaks(f, &breaks, cfg)?;
    let w = |x: f64| -> Result<Complex> {
        let (p1, d1) = damped(&c1, k1, x)?;
        let (p2, d2) = damped(&c2, k2, x)?;
        Ok(d2.conj() * p1 - p2.conj() * d1)
    };
    let j = w(x2)? - w(x1)?;
    let de = spec.energy(k2) - spec.energy(k1);
    if de.abs() < 1e-9 {
        return Err(Error::DegenerateEnergies(de.abs()));
    }
    Ok((direct + j / (2.0 * spec.mass() * de)).norm())
}

/// `∫_R |2 sin(qΛ)/q|² dq`; the body is integrated up to `qΛ = 400π` and the
/// `sin²` tail added as `2/q_max` per side.
pub fn cutoff_kernel_norm2(lambda: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let q_max = 400.0 * PI / lambda;
    let body =
        integrate_oscillatory(|q| Complex::new(dirichlet_kernel(q, lambda).powi(2), 0.0), 0.0, q_max, 2.0 * lambda, cfg)?;
    Ok(2.0 * (body.re + 2.0 / q_max))
}

/// `∫_R |1/(q + 2iε)|² dq`, the squared half-line damped kernel; tail `2/q_max`.
pub fn regularized_kernel_norm2(eps: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let f = |q: f64| Complex::new(1.0 / (q * q + 4.0 * eps * eps), 0.0);
    let breaks: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 1e4]
        .iter()
        .map(|x| x * 2.0 * eps)
        .collect();
    let body = integrate_with_breaks(f, &breaks, cfg)?;
    Ok(2.0 * (body.re + 1.0 / breaks[breaks.len() - 1]))
}

/// One row of the cutoff-vs-damping comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelScaling {
    pub parameter: f64,
    pub norm2: f64,
}

/// Cutoff and damped overlaps side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    pub spec: PotentialSpec,
    pub k1: f64,
    pub k2: f64,
    /// δ(k1-k2) weight at k1 = k2 from the damped states
    pub regularized_diag_weight_on_shell: f64,
    /// δ(k1-k2) weight from the cutoff kernel, ∫ 2 sin(qΛ)/q dq
    pub cutoff_diag_weight: f64,
    pub cutoff_kernel: Vec<KernelScaling>,
    pub regularized_kernel: Vec<KernelScaling>,
    /// `∫|2 sin(qΛ)/q|² dq / Λ` at the first Λ
    pub cutoff_norm_constant: f64,
    pub cutoff_overlaps: Vec<(f64, Complex)>,
    pub regularized_overlaps: Vec<(f64, Complex)>,
    pub boundary_residuals: Vec<(f64, f64)>,
}

/// Tabulates cutoff overlaps against damped ones and the kernel scalings.
pub fn regularization_compare(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    lambdas: &[f64],
    epss: &[f64],
    cfg: &QuadratureConfig,
) -> Result<RegularizationReport> {
    if lambdas.is_empty() || epss.is_empty() {
        return Err(Error::InvalidInput("need at least one cutoff and one eps".into()));
    }
    let tight = QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 20_000 };
    let cutoff_kernel = lambdas
        .iter()
        .map(|&l| cutoff_kernel_norm2(l, &tight).map(|n| KernelScaling { parameter: l, norm2: n }))
        .collect::<Result<Vec<_>>>()?;
    let regularized_kernel = epss
        .iter()
        .map(|&e| regularized_kernel_norm2(e, &tight).map(|n| KernelScaling { parameter: e, norm2: n }))
        .collect::<Result<Vec<_>>>()?;
    let lam0 = lambdas[0];
    let cutoff_diag_weight =
        2.0 * integrate_oscillatory(|q| Complex::new(dirichlet_kernel(q, lam0), 0.0), 0.0, 400.0 * PI / lam0, lam0, &tight)?.re;
    let on_shell = regularized_overlap(spec, k1, k1, epss[0], cfg)?;
    let reach = spec.support_half_width();
    let cutoff_overlaps = lambdas
        .iter()
        .map(|&l| direct_overlap(spec, k1, k2, -(l + reach), l + reach, cfg).map(|v| (l, v)))
        .collect::<Result<Vec<_>>>()?;
    let regularized_overlaps = epss
        .iter()
        .map(|&e| regularized_overlap(spec, k1, k2, e, cfg).map(|r| (e, r.value_at_eps)))
        .collect::<Result<Vec<_>>>()?;
    let x = 30.0f64.max(3.0 * reach);
    let boundary_residuals = epss
        .iter()
        .map(|&e| regularized_boundary_residual(spec, k1, k2, -x, x, e, &tight).map(|r| (e, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularizationReport {
        spec: *spec,
        k1,
        k2,
        regularized_diag_weight_on_shell: on_shell.diag_weight.re,
        cutoff_diag_weight,
        cutoff_norm_constant: cutoff_kernel[0].norm2 / lam0,
        cutoff_kernel,
        regularized_kernel,
        cutoff_overlaps,
        regularized_overlaps,
        boundary_residuals,
    })
}

// Panels one local period long for integrands oscillating like Ai(t + shift)²,
// whose local wavenumber is 2 sqrt(-(t + shift)).
fn local_period_breaks(lo: f64, hi: f64, shift: f64) -> Vec<f64> {
    let mut out = vec![hi];
    let mut t = hi;
    while t > lo {
        let w = 2.0 * (-(t + shift)).max(1.0).sqrt();
        t = (t - 2.0 * PI / w).max(lo);
        out.push(t);
    }
    out.reverse();
    out
}

fn airy_window(t_cutoff: f64) -> Vec<f64> {
    // Ai(t) is negligible beyond t = 25
    local_period_breaks(-t_cutoff, 25.0, 0.0)
}

/// `K(x,y) = ∫_{-T}^{∞} Ai(t+x) Ai(t+y) dt`
pub fn airy_kernel(x: f64, y: f64, t_cutoff: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let f = |t: f64| Complex::new(airy_ai(t + x) * airy_ai(t + y), 0.0);
    Ok(integrate_with_breaks(f, &airy_window(t_cutoff), cfg)?.re)
}

fn gaussian(y: f64, width: f64) -> f64 {
    (-(y * y) / (2.0 * width * width)).exp() / ((2.0 * PI).sqrt() * width)
}

fn smoothed_airy_action<G>(weight: G, x: f64, t_cutoff: f64, width: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    G: Fn(f64) -> f64 + Sync,
{
    if !(t_cutoff > 0.0 && width > 0.0) {
        return Err(Error::InvalidInput("t_cutoff and width must be positive".into()));
    }
    let reach = 9.0 * width;
    let inner = |t: f64| -> Result<f64> {
        let f = |y: f64| Complex::new(weight(y) * airy_ai(t + y), 0.0);
        Ok(integrate_with_breaks(f, &local_period_breaks(-reach, reach, t), cfg)?.re)
    };
    // the first inner failure is kept so it, not the NaN it leaves behind, is reported
    let inner_error = std::sync::Mutex::new(None);
    let outer = |t: f64| {
        let v = inner(t).unwrap_or_else(|e| {
            inner_error.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        });
        Complex::new(airy_ai(t + x) * v, 0.0)
    };
    let breaks = airy_window(t_cutoff);
    // panels are independent; integrate them in parallel and add
    let parts = breaks.par_windows(2).map(|w| integrate_with_breaks(&outer, w, cfg)).collect::<Result<Vec<_>>>();
    if let Some(e) = inner_error.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(parts?.iter().map(|c| c.re).sum())
}

/// `|∫dy K(x,y) g(y) - g(x)|` for a unit-area Gaussian `g` of the given width.
pub fn airy_closure_check(t_cutoff: f64, x: f64, width: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let v = smoothed_airy_action(|y| gaussian(y, width), x, t_cutoff, width, cfg)?;
    Ok((v - gaussian(x, width)).abs())
}

/// Smoothed form of `∫dt Ai(t+x) ∂_y Ai(t+y) = ∂_y δ(x-y)`: returns
/// `|∫dy [∫dt Ai(t+x) ∂_y Ai(t+y)] g(y) + g'(x)|`, using `∫ g ∂_y Ai = -∫ g' Ai`.
pub fn airy_closure_derivative_check(t_cutoff: f64, x: f64, width: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let dg = |y: f64| -y / (width * width) * gaussian(y, width);
    let v = smoothed_airy_action(|y| -dg(y), x, t_cutoff, width, cfg)?;
    Ok((v + dg(x)).abs())
}

/// `∫_{-Λ}^{Λ} e^{-i(k2-k1)x} dx` with `k_i = π n_i / Λ + θ_i / (2Λ)`.
pub fn twisted_boundary_overlap(n1: i64, theta1: f64, n2: i64, theta2: f64, lambda: f64) -> Result<Complex> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("Λ must be positive, got {lambda}")));
    }
    if theta1 == theta2 {
        let v = if n1 == n2 { 2.0 * lambda } else { 0.0 };
        return Ok(Complex::new(v, 0.0));
    }
    // (k2 - k1) Λ = nπ + Δθ/2, so the integral is 2Λ sin(phase)/phase
    let phase = PI * (n2 - n1) as f64 + 0.5 * (theta2 - theta1);
    Ok(Complex::new(dirichlet_kernel(phase, 1.0) * lambda, 0.0))
}

/// Off-diagonal part of the cutoff overlap recovered by window averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub k1: f64,
    pub k2: f64,
    /// mean cutoff of the window
    pub centre: f64,
    pub estimate: Complex,
    /// closed-form Δ
    pub prediction: Complex,
    pub error: f64,
}

fn panel_cfg() -> QuadratureConfig {
    QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 50 }
}

/// Recovers Δ from direct cutoff overlaps `O(Λ) = ∫_{-Λ}^{Λ} φ2* φ1`.
///
/// Past the potential, `O(Λ) - 2 sin(qΛ)/q - (R1+R2*) sin(sΛ)/s` is a sum of a
/// term riding on `e^{iqΛ}` and one on `cos(sΛ)`. Each is demodulated and averaged
/// with an exponential window `e^{-(Λ-Λ0)/L}/L` whose mean is `centre`; setting the
/// phases to one gives the estimate. Leakage between the two falls off as `1/L`.
pub fn cutoff_window_estimates(
    spec: &PotentialSpec,
    k1: f64,
    k2: f64,
    centres: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<WindowEstimate>> {
    check_momenta(k1, k2)?;
    let lam0 = spec.support_half_width();
    if centres.iter().any(|&c| !(c > lam0)) {
        return Err(Error::InvalidInput(format!("window centres must exceed {lam0}")));
    }
    let c1 = coefficients(spec, k1)?;
    let c2 = coefficients(spec, k2)?;
    let q = k1 - k2;
    let s = k1 + k2;
    let i = Complex::i();
    let prediction = delta_from_coefficients(&c1, &c2, k1, k2);
    let longest = centres.iter().fold(0.0f64, |m, &c| m.max(c - lam0));
    let lam_end = lam0 + 25.0 * longest;
    let step = (0.25 / product_frequency(spec, k1, k2)).min(0.05);
    let n = (((lam_end - lam0) / step).ceil() as usize).max(2) & !1;
    let step = (lam_end - lam0) / n as f64;
    let f = |x: f64| {
        let p1 = wavefunction_from(spec, &c1, k1, x).map(|v| v.0).unwrap_or_default();
        let p2 = wavefunction_from(spec, &c2, k2, x).map(|v| v.0).unwrap_or_default();
        p2.conj() * p1
    };
    let start = if lam0 > 0.0 { direct_overlap(spec, k1, k2, -lam0, lam0, cfg)? } else { Complex::new(0.0, 0.0) };
    // cumulative O(Λ) on the grid, one Kronrod panel per side per step
    let increments = (0..n)
        .into_par_iter()
        .map(|j| {
            let a = lam0 + step * j as f64;
            let b = a + step;
            Ok(integrate_with_breaks(&f, &[a, b], &panel_cfg())? + integrate_with_breaks(&f, &[-b, -a], &panel_cfg())?)
        })
        .collect::<Result<Vec<Complex>>>()?;
    let mut overlap = Vec::with_capacity(n + 1);
    let mut acc = start;
    overlap.push(acc);
    for inc in increments {
        acc += inc;
        overlap.push(acc);
    }
    let lam = |j: usize| lam0 + step * j as f64;
    let remainder: Vec<Complex> = (0..=n)
        .map(|j| {
            let l = lam(j);
            overlap[j] - dirichlet_kernel(q, l) - (c1.r + c2.r.conj()) * (s * l).sin() / s
        })
        .collect();
    let mut out = Vec::with_capacity(centres.len());
    for &centre in centres {
        let width = centre - lam0;
        let (mut norm, mut alpha, mut beta) = (0.0, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for j in 0..=n {
            let simpson = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            let l = lam(j);
            let w = simpson * (-(l - lam0) / width).exp();
            norm += w;
            alpha += w * remainder[j] * (-i * q * l).exp();
            beta += w * remainder[j] * 2.0 * (s * l).cos();
        }
        let estimate = (alpha + beta) / norm;
        out.push(WindowEstimate { k1, k2, centre, estimate, prediction, error: (estimate - prediction).norm() });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-11, max_subdivisions: 5000 }
    }

    #[test]
    fn free_direct_overlaps() {
        let s = PotentialSpec::free();
        let v = direct_overlap(&s, 1.0, 1.0, -5.0, 5.0, &cfg()).unwrap();
        assert!((v - Complex::new(10.0, 0.0)).norm() < 1e-10);
        let v = direct_overlap(&s, 2.0, 1.0, -20.0, 20.0, &cfg()).unwrap();
        assert!((v.re - 2.0 * 20f64.sin()).abs() < 1e-10);
        assert_relative_eq!(v.re, 1.8259, epsilon = 1e-4);
    }

    #[test]
    fn free_boundary_current() {
        let s = PotentialSpec::free();
        let (k1, k2, l) = (2.0, 1.0, 7.5);
        let j = boundary_j(&s, k1, k2, -l, l).unwrap();
        let i = Complex::i();
        let expect = -i * (k1 + k2) * ((i * (k1 - k2) * l).exp() - (-i * (k1 - k2) * l).exp());
        assert!((j.value - expect).norm() < 1e-12);
        let same = boundary_j(&PotentialSpec::square_well(2.0, 10.0), 1.3, 1.3, -12.0, 9.0).unwrap();
        assert!(same.value.norm() < 1e-12);
    }

    #[test]
    fn square_well_boundary_current_three_terms() {
        // J outside the well in terms of asymptotic amplitudes
        let s = PotentialSpec::square_well(2.0, 10.0);
        let (k1, k2, x1, x2) = (1.3, 0.7, -30.0, 25.0);
        let c1 = coefficients(&s, k1).unwrap();
        let c2 = coefficients(&s, k2).unwrap();
        let i = Complex::i();
        let q = k1 - k2;
        let sm = k1 + k2;
        let right = -i * sm * c2.t.conj() * c1.t * (i * q * x2).exp();
        let left = -i * sm * ((i * q * x1).exp() - c2.r.conj() * c1.r * (-i * q * x1).exp())
            + i * q * (c1.r * (-i * sm * x1).exp() - c2.r.conj() * (i * sm * x1).exp());
        let j = boundary_j(&s, k1, k2, x1, x2).unwrap();
        assert!((j.value - (right - left)).norm() < 1e-12);
    }

    #[test]
    fn boundary_current_antisymmetry() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        let a = boundary_j(&s, 1.3, 0.7, -20.0, 17.0).unwrap().value;
        let b = boundary_j(&s, 0.7, 1.3, -20.0, 17.0).unwrap().value;
        assert!((a + b.conj()).norm() < 1e-12);
    }

    #[test]
    fn identity_examples() {
        let c = cfg();
        let r = finite_interval_identity_residual(&PotentialSpec::free(), 2.0, 1.0, -10.0, 10.0, &c).unwrap();
        assert!(r < 1e-8);
        let r = finite_interval_identity_residual(&PotentialSpec::square_well(2.0, 10.0), 1.3, 0.7, -30.0, 30.0, &c).unwrap();
        assert!(r < 1e-7);
        let r = finite_interval_identity_residual(&PotentialSpec::delta(3.0), 2.0, 1.0, -20.0, 20.0, &c).unwrap();
        assert!(r < 1e-7);
        assert!(matches!(
            finite_interval_identity_residual(&PotentialSpec::free(), 1.0, 1.0, -1.0, 1.0, &c),
            Err(Error::DegenerateEnergies(_))
        ));
    }

    #[test]
    fn delta_vanishes_for_free_and_delta() {
        for s in [PotentialSpec::free(), PotentialSpec::delta(2.5)] {
            for (k1, k2) in [(0.3, 1.7), (2.0, 1.0), (1.0, 1.0 + 1e-6)] {
                let d = theorem2_decomposition(&s, k1, k2).unwrap();
                assert!(d.delta_term.norm() < 1e-12, "{s:?} {k1} {k2}");
                assert_eq!(d.diag_weight, Complex::new(2.0 * PI, 0.0));
            }
        }
        let d = theorem2_decomposition(&PotentialSpec::free(), 0.4, 0.9).unwrap();
        assert_eq!(d.mirror_weight, Complex::new(0.0, 0.0));
    }

    #[test]
    fn degenerate_momenta_are_refused_by_exact_formula() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        assert!(matches!(delta_term_exact(&s, 2.0, 2.0), Err(Error::DegenerateMomenta(_))));
        let on = delta_term(&s, 2.2, 2.2).unwrap();
        assert!(on.im.abs() < 1e-12, "diagonal Δ should be real: {on}");
        // inside the stencil band the interpolant tracks the direct formula
        let near = delta_term(&s, 2.2 + 3e-5, 2.2 - 3e-5).unwrap();
        let exact = delta_term_exact(&s, 2.2 + 3e-5, 2.2 - 3e-5).unwrap();
        assert!((near - exact).norm() < 1e-8 * (1.0 + exact.norm()), "{near} {exact}");
    }

    #[test]
    fn delta_is_hermitian() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        for (k1, k2) in [(2.1, 2.6), (0.5, 3.0), (2.0, 2.00005)] {
            let a = delta_term(&s, k1, k2).unwrap();
            let b = delta_term(&s, k2, k1).unwrap();
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn cutoff_overlap_matches_closed_form_past_the_well() {
        // ∫_{-Λ}^{Λ} = -i(A e^{iqΛ} - e^{-iqΛ})/q - i(R1 e^{isΛ} - R2* e^{-isΛ})/s
        let s = PotentialSpec::square_well(2.0, 10.0);
        let (k1, k2, l) = (2.3, 2.05, 37.0);
        let c1 = coefficients(&s, k1).unwrap();
        let c2 = coefficients(&s, k2).unwrap();
        let i = Complex::i();
        let (q, sm) = (k1 - k2, k1 + k2);
        let a = c2.t.conj() * c1.t + c2.r.conj() * c1.r;
        let expect = -i * (a * (i * q * l).exp() - (-i * q * l).exp()) / q
            - i * (c1.r * (i * sm * l).exp() - c2.r.conj() * (-i * sm * l).exp()) / sm;
        let v = direct_overlap(&s, k1, k2, -l, l, &cfg()).unwrap();
        assert!((v - expect).norm() < 1e-9);
    }

    #[test]
    fn grid_shape_and_csv() {
        let g = delta_grid(&PotentialSpec::square_well(2.0, 10.0), (2.0, 2.5), (2.1, 2.6), 4, 3).unwrap();
        assert_eq!(g.points.len(), 12);
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], DeltaGrid::CSV_HEADER);
        assert_eq!(lines.len(), 13);
        assert!(!csv.contains('\r'));
        assert!(delta_grid(&PotentialSpec::free(), (1.0, 2.0), (1.0, 2.0), 1, 3).is_err());
    }

    #[test]
    fn regularized_delta_pv_cancels() {
        let r = regularized_overlap(&PotentialSpec::delta(2.0), 1.4, 0.6, 1e-3, &cfg()).unwrap();
        assert!(r.pv_term.norm() < 1e-12);
        let on = regularized_overlap(&PotentialSpec::delta(2.0), 1.4, 1.4, 1e-3, &cfg()).unwrap();
        assert!((on.diag_weight - Complex::new(2.0 * PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn regularized_square_well_value_matches_quadrature() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        let (k1, k2, eps) = (1.3, 0.7, 0.05);
        let r = regularized_overlap(&s, k1, k2, eps, &cfg()).unwrap();
        let c1 = coefficients(&s, k1).unwrap();
        let c2 = coefficients(&s, k2).unwrap();
        let f = |x: f64| {
            let p1 = wavefunction_from(&s, &c1, k1, x).unwrap().0;
            let p2 = wavefunction_from(&s, &c2, k2, x).unwrap().0;
            p2.conj() * p1 * (-2.0 * eps * x.abs()).exp()
        };
        let direct = integrate_oscillatory(f, -500.0, 500.0, 2.0, &cfg()).unwrap();
        assert!((direct - r.value_at_eps).norm() < 1e-8);
    }

    #[test]
    fn regularized_square_well_pv_vanishes() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        for (k1, k2) in [(1.3, 0.7), (2.4, 2.1), (0.4, 3.0)] {
            let r = regularized_overlap(&s, k1, k2, 1e-3, &cfg()).unwrap();
            assert!(r.pv_term.norm() < 1e-9, "{k1} {k2}: {}", r.pv_term);
        }
    }

    #[test]
    fn regularized_boundary_residual_shrinks() {
        let s = PotentialSpec::square_well(2.0, 10.0);
        let c = QuadratureConfig { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 5000 };
        let r1 = regularized_boundary_residual(&s, 1.3, 0.7, -30.0, 30.0, 1e-2, &c).unwrap();
        let r2 = regularized_boundary_residual(&s, 1.3, 0.7, -30.0, 30.0, 1e-3, &c).unwrap();
        assert!(r1 > r2 && r2 > 1e-8, "{r1} {r2}");
        // exact eigenstates satisfy the identity
        let r0 = finite_interval_identity_residual(&s, 1.3, 0.7, -30.0, 30.0, &c).unwrap();
        assert!(r0 < 1e-9);
    }

    #[test]
    fn kernel_norms_scale() {
        let c = QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 20_000 };
        let n1 = cutoff_kernel_norm2(5.0, &c).unwrap();
        let n2 = cutoff_kernel_norm2(10.0, &c).unwrap();
        assert_relative_eq!(n1, 4.0 * PI * 5.0, max_relative = 1e-5);
        assert_relative_eq!(n2 / n1, 2.0, max_relative = 1e-3);
        let e1 = regularized_kernel_norm2(0.1, &c).unwrap();
        let e2 = regularized_kernel_norm2(0.05, &c).unwrap();
        assert_relative_eq!(e1, PI / 0.2, max_relative = 1e-6);
        assert_relative_eq!(e2 / e1, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn airy_kernel_is_symmetric() {
        let c = QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_subdivisions: 5000 };
        let a = airy_kernel(0.3, -1.2, 20.0, &c).unwrap();
        let b = airy_kernel(-1.2, 0.3, 20.0, &c).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn twisted_examples() {
        assert_eq!(twisted_boundary_overlap(3, 0.4, 5, 0.4, 10.0).unwrap(), Complex::new(0.0, 0.0));
        assert_eq!(twisted_boundary_overlap(2, 0.4, 2, 0.4, 10.0).unwrap(), Complex::new(20.0, 0.0));
        let v = twisted_boundary_overlap(2, 0.0, 2, PI, 10.0).unwrap();
        assert_relative_eq!(v.re, 40.0 / PI, epsilon = 1e-12);
        // against the integral itself
        let lam = 3.0;
        let (n1, t1, n2, t2) = (1, 0.3, 4, 1.9);
        let dk = PI * (n2 - n1) as f64 / lam + (t2 - t1) / (2.0 * lam);
        let direct = integrate_complex(|x| (-Complex::i() * dk * x).exp(), -lam, lam, &cfg()).unwrap();
        assert!((twisted_boundary_overlap(n1, t1, n2, t2, lam).unwrap() - direct).norm() < 1e-10);
    }

    use crate::numerics::integrate_complex;

    #[test]
    fn free_regularized_interval_closed_form() {
        let (k1, k2, x1, x2, eps) = (1.7, 0.4, 0.5, 9.0, 0.03);
        let f = |x: f64| (Complex::i() * (k1 - k2) * x).exp() * (-2.0 * eps * x).exp();
        let v = integrate_complex(f, x1, x2, &cfg()).unwrap();
        assert!((v - regularized_free_interval(k1, k2, x1, x2, eps)).norm() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn three_way_agreement(k1 in 0.2f64..3.0, k2 in 0.2f64..3.0, v0 in -3.0f64..3.0, a in 0.5f64..8.0, pad in 0.5f64..15.0) {
            let s = PotentialSpec::square_well(v0, a);
            prop_assume!((s.energy(k1) - s.energy(k2)).abs() > 0.05);
            let (x1, x2) = (-a / 2.0 - pad, a / 2.0 + 0.7 * pad);
            let r = finite_interval_identity_residual(&s, k1, k2, x1, x2, &cfg()).unwrap();
            prop_assert!(r < 1e-7, "residual {}", r);
        }

        #[test]
        fn regularized_free_bulk(k1 in 0.1f64..3.0, k2 in 0.1f64..3.0, x1 in -5.0f64..5.0, len in 0.1f64..10.0, eps in 0.001f64..0.5) {
            let x2 = x1 + len;
            let f = |x: f64| (Complex::i() * (k1 - k2) * x).exp() * (-2.0 * eps * x).exp();
            let v = integrate_complex(f, x1, x2, &cfg()).unwrap();
            prop_assert!((v - regularized_free_interval(k1, k2, x1, x2, eps)).norm() < 1e-10);
        }
    }
}
