//! Gaussian superpositions of scattering states and the time dependence of
//! their norm. With `ψ(t,x) = (2π)^{-1/2} ∫dk a(k) e^{-iE(k)t} φ(k,x)` the norm is
//!
//! ```text
//! N(t) = ∫|a|² + (1/2π) ∬ a(k2)* a(k1) e^{i(E2-E1)t} Δ(k1,k2)
//! ```
//!
//! (the δ(k1+k2) term drops out because the packet lives on k > 0).
//! Momentum integrals use the trapezoid rule on a uniform grid.

use crate::error::{Error, Result};
use crate::numerics::Complex;
use crate::overlap::{delta_from_coefficients, delta_term, NEAR_DIAGONAL};
use crate::potentials::{coefficients, coefficients_complex, PotentialSpec, ScatteringCoefficients};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform momentum grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub n_points: usize,
}

/// Gaussian packet `a(k) = (σπ)^{-1/4} exp(-(k-P0)²/(2σ) - i k X0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    #[serde(rename = "P0")]
    pub p0: f64,
    #[serde(rename = "X0")]
    pub x0: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<KGrid>,
}

/// Grid half-width in units of `sqrt(σ)`; `|a|` at the edge is about 5e-11.
pub const GRID_HALF_WIDTH: f64 = 7.0;
pub const DEFAULT_POINTS: usize = 801;
/// Largest `|a(k)|` tolerated at the grid edges.
pub const EDGE_TOLERANCE: f64 = 1e-8;

impl PacketSpec {
    pub fn new(p0: f64, x0: f64, sigma: f64) -> Self {
        Self { p0, x0, sigma, k_grid: None }
    }

    pub fn with_points(mut self, n_points: usize) -> Self {
        let g = self.grid();
        self.k_grid = Some(KGrid { n_points, ..g });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.p0.is_finite() && self.x0.is_finite()) {
            return Err(Error::InvalidInput(format!("bad packet parameters {self:?}")));
        }
        let g = self.grid();
        if !(g.k_min > 0.0 && g.k_min < g.k_max && g.n_points >= 3) {
            return Err(Error::InvalidInput(format!("k grid must be positive with at least 3 points: {g:?}")));
        }
        Ok(())
    }

    pub fn normalization(&self) -> f64 {
        (self.sigma * PI).powf(-0.25)
    }

    /// Explicit grid, or `P0 ± 7 sqrt(σ)` cut at a small positive k.
    pub fn grid(&self) -> KGrid {
        self.k_grid.unwrap_or_else(|| {
            let half = GRID_HALF_WIDTH * self.sigma.sqrt();
            KGrid { k_min: (self.p0 - half).max(1e-3 * self.p0.abs().max(1e-3)), k_max: self.p0 + half, n_points: DEFAULT_POINTS }
        })
    }

    pub fn amplitude(&self, k: f64) -> Complex {
        let d = k - self.p0;
        Complex::from_polar(self.normalization() * (-d * d / (2.0 * self.sigma)).exp(), -k * self.x0)
    }

    /// Grid nodes and trapezoid weights.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let g = self.grid();
        let h = (g.k_max - g.k_min) / (g.n_points - 1) as f64;
        let k = (0..g.n_points).map(|j| g.k_min + h * j as f64).collect();
        let w = (0..g.n_points).map(|j| if j == 0 || j + 1 == g.n_points { 0.5 * h } else { h }).collect();
        (k, w)
    }

    fn check_edges(&self) -> Result<()> {
        let g = self.grid();
        let edge = self.amplitude(g.k_min).norm().max(self.amplitude(g.k_max).norm());
        if edge > EDGE_TOLERANCE {
            return Err(Error::GridTooCoarse(edge));
        }
        Ok(())
    }
}

/// The six packet-weighted momentum integrals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationAmplitudes {
    pub t: f64,
    pub i_t: Complex,
    pub k_i_t: Complex,
    pub t_t: Complex,
    pub k_t_t: Complex,
    pub r_t: Complex,
    pub k_r_t: Complex,
}

impl CorrelationAmplitudes {
    /// `dN/dt` assembled from the amplitudes (net flux through both sides).
    pub fn net_current(&self, mass: f64) -> f64 {
        let c = |z: Complex| z.conj();
        let (i, ki, tt, kt, r, kr) = (self.i_t, self.k_i_t, self.t_t, self.k_t_t, self.r_t, self.k_r_t);
        let bracket = c(tt) * kt + c(kt) * tt - c(i) * ki - c(ki) * i + c(r) * kr + c(kr) * r + c(i) * kr
            - c(ki) * r
            - c(r) * ki
            + c(kr) * i;
        -(bracket.re) / (2.0 * mass) / (2.0 * PI)
    }
}

/// How a `dN/dt` column was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Direct,
    NetCurrentFormula,
    StationaryPhase,
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormMethod::Direct => "direct",
            NormMethod::NetCurrentFormula => "net_current_formula",
            NormMethod::StationaryPhase => "stationary_phase",
        }
    }
}

/// Sampled norm and its rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTrace {
    pub times: Vec<f64>,
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    #[serde(rename = "dNdt")]
    pub dndt: Vec<f64>,
    pub method: NormMethod,
}

impl NormTrace {
    pub const CSV_HEADER: &'static str = "t,N,dNdt,method";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for ((t, n), d) in self.times.iter().zip(&self.n).zip(&self.dndt) {
            out.push_str(&format!("{t:.16e},{n:.16e},{d:.16e},{}\n", self.method.as_str()));
        }
        out
    }
}

/// Imaginary residue tolerated in quantities that must be real.
pub const REALITY_TOLERANCE: f64 = 1e-10;

fn real_part(z: Complex, what: &str) -> Result<f64> {
    if z.im.abs() > REALITY_TOLERANCE * (1.0 + z.re.abs()) {
        return Err(Error::InvalidInput(format!("{what} has imaginary residue {:e}", z.im)));
    }
    Ok(z.re)
}

/// Packet on a fixed grid with amplitudes and the Δ kernel cached.
#[derive(Debug, Clone)]
pub struct PacketBasis {
    pub spec: PotentialSpec,
    pub packet: PacketSpec,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub energy: Vec<f64>,
    pub amplitude: Vec<Complex>,
    pub coefficients: Vec<ScatteringCoefficients>,
    // kernel[i*n + j] = Δ(k_j, k_i)
    kernel: Vec<Complex>,
}

impl PacketBasis {
    pub fn new(spec: &PotentialSpec, packet: &PacketSpec) -> Result<Self> {
        spec.validate()?;
        packet.validate()?;
        packet.check_edges()?;
        let (k, weights) = packet.nodes();
        let n = k.len();
        let coefficients = k.iter().map(|&kk| coefficients(spec, kk)).collect::<Result<Vec<_>>>()?;
        let kernel = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if (k[i] - k[j]).abs() < NEAR_DIAGONAL {
                    delta_term(spec, k[j], k[i])
                } else {
                    Ok(delta_from_coefficients(&coefficients[j], &coefficients[i], k[j], k[i]))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: *spec,
            packet: *packet,
            energy: k.iter().map(|&kk| spec.energy(kk)).collect(),
            amplitude: k.iter().map(|&kk| packet.amplitude(kk)).collect(),
            k,
            weights,
            coefficients,
            kernel,
        })
    }

    fn evolved(&self, t: f64) -> Vec<Complex> {
        (0..self.k.len())
            .map(|j| self.weights[j] * self.amplitude[j] * Complex::from_polar(1.0, -self.energy[j] * t))
            .collect()
    }

    /// `∫|a|²` on the grid.
    pub fn n0(&self) -> f64 {
        self.amplitude.iter().zip(&self.weights).map(|(a, w)| w * a.norm_sqr()).sum()
    }

    fn quadratic_form(&self, t: f64, with_rate: bool) -> Complex {
        let v = self.evolved(t);
        let n = v.len();
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..n {
            let row = &self.kernel[i * n..(i + 1) * n];
            let mut s = Complex::new(0.0, 0.0);
            for j in 0..n {
                let f = if with_rate { Complex::new(0.0, self.energy[i] - self.energy[j]) } else { Complex::new(1.0, 0.0) };
                s += row[j] * v[j] * f;
            }
            acc += v[i].conj() * s;
        }
        acc / (2.0 * PI)
    }

    /// `N(t)` from the double momentum integral.
    pub fn norm(&self, t: f64) -> Result<f64> {
        Ok(self.n0() + real_part(self.quadratic_form(t, false), "N(t)")?)
    }

    /// Exact time derivative of [`norm`](Self::norm).
    pub fn norm_rate_direct(&self, t: f64) -> Result<f64> {
        real_part(self.quadratic_form(t, true), "dN/dt")
    }

    pub fn correlation_amplitudes(&self, t: f64) -> CorrelationAmplitudes {
        let v = self.evolved(t);
        let mut out = CorrelationAmplitudes {
            t,
            i_t: Complex::new(0.0, 0.0),
            k_i_t: Complex::new(0.0, 0.0),
            t_t: Complex::new(0.0, 0.0),
            k_t_t: Complex::new(0.0, 0.0),
            r_t: Complex::new(0.0, 0.0),
            k_r_t: Complex::new(0.0, 0.0),
        };
        for (j, vj) in v.iter().enumerate() {
            let (k, c) = (self.k[j], &self.coefficients[j]);
            out.i_t += vj;
            out.k_i_t += vj * k;
            out.t_t += vj * c.t;
            out.k_t_t += vj * k * c.t;
            out.r_t += vj * c.r;
            out.k_r_t += vj * k * c.r;
        }
        out
    }

    /// `dN/dt` from the six correlation amplitudes.
    pub fn norm_rate(&self, t: f64) -> f64 {
        self.correlation_amplitudes(t).net_current(self.spec.mass())
    }

    pub fn trace(&self, times: &[f64], method: NormMethod) -> Result<NormTrace> {
        let n = times.iter().map(|&t| self.norm(t)).collect::<Result<Vec<_>>>()?;
        let dndt = times
            .iter()
            .map(|&t| match method {
                NormMethod::Direct => self.norm_rate_direct(t),
                NormMethod::NetCurrentFormula => Ok(self.norm_rate(t)),
                NormMethod::StationaryPhase => stationary_phase_norm_rate(&self.spec, &self.packet, t),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NormTrace { times: times.to_vec(), n, dndt, method })
    }
}

/// `N(t)` for one time (builds the kernel; reuse [`PacketBasis`] for many times).
pub fn norm_direct(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Result<f64> {
    PacketBasis::new(spec, packet)?.norm(t)
}

/// `dN/dt` from the correlation amplitudes.
pub fn norm_rate(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Result<f64> {
    Ok(PacketBasis::new(spec, packet)?.norm_rate(t))
}

pub fn correlation_amplitudes(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Result<CorrelationAmplitudes> {
    Ok(PacketBasis::new(spec, packet)?.correlation_amplitudes(t))
}

/// Centroid momentum continued off the real axis, `k0(t) = P0 - iσ(X0 + v0 t)`.
pub fn centroid_momentum(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Complex {
    let v0 = packet.p0 / spec.mass();
    Complex::new(packet.p0, -packet.sigma * (packet.x0 + v0 * t))
}

/// Leading stationary-phase value of `∫dk a(k) e^{-iEt}`.
pub fn centroid_amplitude(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Complex {
    let v0 = packet.p0 / spec.mass();
    let y = packet.x0 + v0 * t;
    let mag = packet.normalization() * (2.0 * packet.sigma * PI).sqrt() * (-packet.sigma * y * y / 2.0).exp();
    Complex::from_polar(mag, -packet.p0 * packet.x0 - spec.energy(packet.p0) * t)
}

/// Leading-order `dN/dt` with every amplitude replaced by its centroid value.
pub fn stationary_phase_norm_rate(spec: &PotentialSpec, packet: &PacketSpec, t: f64) -> Result<f64> {
    let k0 = centroid_momentum(spec, packet, t);
    let psi2 = centroid_amplitude(spec, packet, t).norm_sqr();
    if psi2 == 0.0 {
        return Ok(0.0);
    }
    let c = coefficients_complex(spec, k0)?;
    let (r, tt) = (c.r, c.t);
    let bracket = (k0 + k0.conj()) * (tt.norm_sqr() + r.norm_sqr() - 1.0) + (k0 - k0.conj()) * (r - r.conj());
    Ok(-(psi2 * bracket.re) / (2.0 * spec.mass()) / (2.0 * PI))
}

/// s-wave S-matrix element models; each has `|s0| = 1` except tabulated input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SWaveModel {
    Unit,
    /// `s0 = e^{2iδ0}`
    ConstantPhase { delta0: f64 },
    /// `s0 = e^{-2ik r_s}`
    HardSphere { radius: f64 },
    /// Linear interpolation of `s0` between tabulated momenta.
    Tabulated { k: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

impl SWaveModel {
    pub fn s0(&self, k: f64) -> Result<Complex> {
        match self {
            SWaveModel::Unit => Ok(Complex::new(1.0, 0.0)),
            SWaveModel::ConstantPhase { delta0 } => Ok(Complex::from_polar(1.0, 2.0 * delta0)),
            SWaveModel::HardSphere { radius } => Ok(Complex::from_polar(1.0, -2.0 * k * radius)),
            SWaveModel::Tabulated { k: ks, re, im } => {
                if ks.len() < 2 || ks.len() != re.len() || ks.len() != im.len() {
                    return Err(Error::InvalidInput("tabulated s0 needs matching k, re, im of length >= 2".into()));
                }
                if ks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidInput("tabulated k must increase".into()));
                }
                if k < ks[0] || k > ks[ks.len() - 1] {
                    return Err(Error::InvalidInput(format!("k = {k} outside tabulated range")));
                }
                let j = ks.partition_point(|&x| x <= k).clamp(1, ks.len() - 1);
                let f = (k - ks[j - 1]) / (ks[j] - ks[j - 1]);
                Ok(Complex::new(re[j - 1] + f * (re[j] - re[j - 1]), im[j - 1] + f * (im[j] - im[j - 1])))
            }
        }
    }
}

/// s-wave scattering set-up: S-matrix model and the initial radius of the packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SWaveSpec {
    pub s0: SWaveModel,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(default = "one")]
    pub m: f64,
}

fn one() -> f64 {
    1.0
}

/// s-wave packet on a grid, with `T = -i s0/(2k)` and `R = i/(2k)`.
///
/// `N(t) = N0 + 4π ∬ a2* a1 e^{i(E2-E1)t} Δ3(k1,k2)` with
/// `Δ3 = i(T2*T1 - R2*R1)/(k2-k1) + i(T2*R1 - R2*T1)/(k1+k2)`.
#[derive(Debug, Clone)]
pub struct SWaveBasis {
    pub mass: f64,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub energy: Vec<f64>,
    pub amplitude: Vec<Complex>,
    pub s0: Vec<Complex>,
    step: f64,
    model: SWaveModel,
}

fn swave_delta(s1: Complex, s2: Complex, k1: f64, k2: f64) -> Complex {
    let i = Complex::i();
    let (t1, t2) = (-i * s1 / (2.0 * k1), -i * s2 / (2.0 * k2));
    let (r1, r2) = (i / (2.0 * k1), i / (2.0 * k2));
    i * (t2.conj() * t1 - r2.conj() * r1) / (k2 - k1) + i * (t2.conj() * r1 - r2.conj() * t1) / (k1 + k2)
}

// Bracket of the s-wave rate; Hermitian in (k1, k2).
fn swave_rate_kernel(s1: Complex, s2: Complex, k1: f64, k2: f64, mass: f64) -> Complex {
    let b = (s2.conj() * s1 - 1.0) * (k1 + k2) + (s1 - s2.conj()) * (k2 - k1);
    -b / (2.0 * mass * k1 * k2)
}

impl SWaveBasis {
    pub fn new(swave: &SWaveSpec, packet: &PacketSpec) -> Result<Self> {
        if !(swave.r0.is_finite() && swave.m > 0.0) {
            return Err(Error::InvalidInput(format!("bad s-wave spec {swave:?}")));
        }
        let packet = PacketSpec { x0: -swave.r0, ..*packet };
        packet.validate()?;
        packet.check_edges()?;
        let (k, weights) = packet.nodes();
        let s0 = k.iter().map(|&kk| swave.s0.s0(kk)).collect::<Result<Vec<_>>>()?;
        let step = 1e-3 * (k[1] - k[0]).min(1.0);
        Ok(Self {
            mass: swave.m,
            energy: k.iter().map(|&kk| kk * kk / (2.0 * swave.m)).collect(),
            amplitude: k.iter().map(|&kk| packet.amplitude(kk)).collect(),
            k,
            weights,
            s0,
            step,
            model: swave.s0.clone(),
        })
    }

    fn evolved(&self, t: f64) -> Vec<Complex> {
        (0..self.k.len())
            .map(|j| self.weights[j] * self.amplitude[j] * Complex::from_polar(1.0, -self.energy[j] * t))
            .collect()
    }

    fn delta_entry(&self, i: usize, j: usize) -> Result<Complex> {
        let (k1, k2) = (self.k[j], self.k[i]);
        if i != j {
            return Ok(swave_delta(self.s0[j], self.s0[i], k1, k2));
        }
        // symmetric average across the diagonal keeps the value real
        let h = self.step;
        let mut acc = Complex::new(0.0, 0.0);
        for (w, d) in [(-1.0 / 6.0, 2.0 * h), (2.0 / 3.0, h)] {
            let (a, b) = (k1 + 0.5 * d, k1 - 0.5 * d);
            let (sa, sb) = (self.model.s0(a)?, self.model.s0(b)?);
            acc += w * (swave_delta(sa, sb, a, b) + swave_delta(sb, sa, b, a));
        }
        Ok(acc)
    }

    pub fn n0(&self) -> f64 {
        self.amplitude.iter().zip(&self.weights).map(|(a, w)| w * a.norm_sqr()).sum()
    }

    pub fn norm(&self, t: f64) -> Result<f64> {
        let v = self.evolved(t);
        let n = v.len();
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += v[i].conj() * self.delta_entry(i, j)? * v[j];
            }
        }
        Ok(self.n0() + real_part(4.0 * PI * acc, "s-wave N(t)")?)
    }

    pub fn norm_rate(&self, t: f64) -> Result<f64> {
        let v = self.evolved(t);
        let n = v.len();
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..n {
            let mut row = Complex::new(0.0, 0.0);
            for j in 0..n {
                row += swave_rate_kernel(self.s0[j], self.s0[i], self.k[j], self.k[i], self.mass) * v[j];
            }
            acc += v[i].conj() * row;
        }
        real_part(PI * acc, "s-wave dN/dt")
    }
}

/// `dN/dt` for the s-wave channel; the packet starts at radius `R0`.
pub fn swave_norm_rate(swave: &SWaveSpec, packet: &PacketSpec, t: f64) -> Result<f64> {
    SWaveBasis::new(swave, packet)?.norm_rate(t)
}
