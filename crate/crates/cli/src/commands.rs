use crate::config::{parse_range, Format, PotentialArgs, RunConfig};
use crate::output::{emit, json, num, sidecar, Csv};
use crate::{Command, Failure};
use nonortho::numerics::Complex;
use nonortho::overlap::{
    airy_closure_check, airy_closure_derivative_check, airy_kernel, boundary_j, delta_areas, delta_grid,
    delta_term, direct_overlap, exterior_from_interior, finite_interval_identity_residual, regularization_compare,
    regularized_overlap, theorem2_decomposition, RegularizationReport,
};
use nonortho::potentials::{coefficients, PotentialSpec};
use nonortho::wavepacket::{
    stationary_phase_norm_rate, NormMethod, NormTrace, PacketBasis, PacketSpec, SWaveBasis, SWaveModel, SWaveSpec,
};
use nonortho::QuadratureConfig;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

pub struct Context {
    pub quad: QuadratureConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub cfg: RunConfig,
}

impl Context {
    fn emit(&self, contents: &str) -> Result<(), Failure> {
        emit(self.out.as_deref(), contents)
    }
}

pub fn dispatch(ctx: &Context, command: Command) -> Result<(), Failure> {
    match command {
        Command::Coeffs { potential, k } => coeffs(ctx, &potential, k),
        Command::Overlap { potential, k1, k2, x1, x2 } => overlap(ctx, &potential, k1, k2, x1, x2),
        Command::Figure { id, potential, k2hat_convention, n } => figure(ctx, id, &potential, k2hat_convention, n),
        Command::Packet { potential, packet: args, t, method } => packet(ctx, &potential, &args, t, method),
        Command::Verify { suite } => verify(ctx, suite),
        Command::Regcmp { potential, k1, k2, lambda, eps } => regcmp(ctx, &potential, k1, k2, lambda, eps),
    }
}

fn required(flag: Option<f64>, cfg: Option<f64>, name: &str) -> Result<f64, Failure> {
    flag.or(cfg).ok_or_else(|| Failure::config(format!("--{name} is required")))
}

fn coeffs(ctx: &Context, pot: &PotentialArgs, k: Option<String>) -> Result<(), Failure> {
    let spec = pot.resolve(ctx.cfg.potential, PotentialSpec::free())?;
    let ks = parse_range(k.as_deref().or(ctx.cfg.k.as_deref()).unwrap_or("0.1:10:100"))?;
    let rows = ks.iter().map(|&k| coefficients(&spec, k).map(|c| (k, c))).collect::<Result<Vec<_>, _>>()?;
    match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(&["k", "re_R", "im_R", "re_T", "im_T", "unitarity_defect"]);
            for (k, c) in &rows {
                csv.row(&[num(*k), num(c.r.re), num(c.r.im), num(c.t.re), num(c.t.im), num(c.unitarity_defect())]);
            }
            ctx.emit(&csv.finish())
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(k, c)| json!({"k": k, "R": c.r, "T": c.t, "unitarity_defect": c.unitarity_defect()}))
                .collect();
            ctx.emit(&json(&json!({
                "potential": spec,
                "reference": "closed-form reflection and transmission amplitudes",
                "rows": rows,
            })))
        }
    }
}

fn overlap(
    ctx: &Context,
    pot: &PotentialArgs,
    k1: Option<f64>,
    k2: Option<f64>,
    x1: Option<f64>,
    x2: Option<f64>,
) -> Result<(), Failure> {
    let spec = pot.resolve(ctx.cfg.potential, PotentialSpec::free())?;
    let k1 = required(k1, ctx.cfg.k1, "k1")?;
    let k2 = required(k2, ctx.cfg.k2, "k2")?;
    let dec = theorem2_decomposition(&spec, k1, k2)?;
    let mut rows: Vec<(&str, Complex)> =
        vec![("diag_weight", dec.diag_weight), ("mirror_weight", dec.mirror_weight), ("delta", dec.delta_term)];
    let interval = match (x1.or(ctx.cfg.x1), x2.or(ctx.cfg.x2)) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(Failure::config("--x1 and --x2 go together")),
    };
    if let Some((a, b)) = interval {
        rows.push(("direct", direct_overlap(&spec, k1, k2, a, b, &ctx.quad)?));
        rows.push(("boundary_j", boundary_j(&spec, k1, k2, a, b)?.value));
        if (spec.energy(k1) - spec.energy(k2)).abs() >= 1e-9 {
            let r = finite_interval_identity_residual(&spec, k1, k2, a, b, &ctx.quad)?;
            rows.push(("identity_residual", Complex::new(r, 0.0)));
        }
    }
    match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(&["quantity", "re", "im"]);
            for (name, v) in &rows {
                csv.row(&[name.to_string(), num(v.re), num(v.im)]);
            }
            ctx.emit(&csv.finish())
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("potential".into(), json!(spec));
            obj.insert("k1".into(), json!(k1));
            obj.insert("k2".into(), json!(k2));
            if let Some((a, b)) = interval {
                obj.insert("interval".into(), json!([a, b]));
            }
            for (name, v) in &rows {
                obj.insert(name.to_string(), json!(v));
            }
            obj.insert(
                "reference".into(),
                json!("overlap = 2π δ(k1-k2) diag + π δ(k1+k2) mirror + Δ; finite intervals by quadrature and boundary reduction"),
            );
            ctx.emit(&json(&Value::Object(obj)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum K2hatConvention {
    /// `a k̂2 = 0.314`
    Scaled,
    /// `k̂2 = 0.314`
    Absolute,
}

const FIG1_K2HAT: f64 = 0.314;
const FIG1_AXIS_MAX: f64 = 5.0;
const FIG1_TARGET: (f64, f64) = (38.54, 10.66);

fn k2hat_for(convention: K2hatConvention, a: f64) -> f64 {
    match convention {
        K2hatConvention::Scaled => FIG1_K2HAT / a,
        K2hatConvention::Absolute => FIG1_K2HAT,
    }
}

fn figure(
    ctx: &Context,
    id: u8,
    pot: &PotentialArgs,
    convention: K2hatConvention,
    n: Option<usize>,
) -> Result<(), Failure> {
    let spec = pot.resolve(ctx.cfg.potential, PotentialSpec::square_well(2.0, 10.0))?;
    let a = match spec {
        PotentialSpec::SquareWell { a, .. } => a,
        _ => return Err(Failure::config("figures are defined for the square well")),
    };
    let header = ["a_k1hat", "a_k2hat", "k1", "k2", "re_delta", "im_delta", "abs2_delta"];
    // (a k̂1, a k̂2, k1, k2, Δ)
    let (points, summary) = match id {
        1 => {
            let n = n.unwrap_or(501).max(2);
            let k2_hat = k2hat_for(convention, a);
            let k2 = exterior_from_interior(&spec, k2_hat)?;
            let points = (0..n)
                .into_par_iter()
                .map(|i| {
                    let u = FIG1_AXIS_MAX * i as f64 / (n - 1) as f64;
                    let k1 = exterior_from_interior(&spec, u / a)?;
                    Ok((u, a * k2_hat, k1, k2, delta_term(&spec, k1, k2)?))
                })
                .collect::<Result<Vec<_>, nonortho::Error>>()?;
            let mut readings = Vec::new();
            let mut closest: Option<(K2hatConvention, f64)> = None;
            let mut chosen = Value::Null;
            for conv in [K2hatConvention::Scaled, K2hatConvention::Absolute] {
                let areas = delta_areas(&spec, k2hat_for(conv, a), FIG1_AXIS_MAX, &ctx.quad)?;
                let err_im = (areas.area_im - FIG1_TARGET.0).abs() / FIG1_TARGET.0;
                let err_re = (areas.area_re - FIG1_TARGET.1).abs() / FIG1_TARGET.1;
                let worst = err_im.max(err_re);
                if closest.map_or(true, |c| worst < c.1) {
                    closest = Some((conv, worst));
                }
                let entry = json!({
                    "convention": conv,
                    "k2hat": areas.k2_hat,
                    "area_im": areas.area_im,
                    "area_re": areas.area_re,
                    "rel_err_im": err_im,
                    "rel_err_re": err_re,
                    "im_peak_k1hat": areas.im_argmax_k1_hat,
                    "within_5_percent": worst < 0.05,
                });
                if conv == convention {
                    chosen = entry.clone();
                }
                readings.push(entry);
            }
            let closest = closest.expect("two readings");
            let summary = json!({
                "figure": 1,
                "potential": spec,
                "convention": convention,
                "k2hat": chosen["k2hat"],
                "area_im": chosen["area_im"],
                "area_re": chosen["area_re"],
                "axis": "a*k1hat",
                "axis_range": [0.0, FIG1_AXIS_MAX],
                "reference_areas": {"area_im": FIG1_TARGET.0, "area_re": FIG1_TARGET.1},
                "readings": readings,
                "closest": {"convention": closest.0, "worst_rel_err": closest.1},
                "reference": "areas under Im Δ and Re Δ along a*k1hat at fixed k2hat",
            });
            (points, summary)
        }
        2..=4 => {
            let n = n.unwrap_or(121).max(2);
            let hi = 2.0 * std::f64::consts::PI;
            let axis: Vec<f64> = (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect();
            let ks = axis.iter().map(|&u| exterior_from_interior(&spec, u / a)).collect::<Result<Vec<_>, _>>()?;
            let points = (0..n * n)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx % n, idx / n);
                    Ok((axis[i], axis[j], ks[i], ks[j], delta_term(&spec, ks[i], ks[j])?))
                })
                .collect::<Result<Vec<_>, nonortho::Error>>()?;
            let (quantity, pick): (&str, fn(Complex) -> f64) = match id {
                2 => ("abs2_delta", |d| d.norm_sqr()),
                3 => ("im_delta", |d| d.im),
                _ => ("re_delta", |d| d.re),
            };
            let best = points.iter().max_by(|p, q| pick(p.4).total_cmp(&pick(q.4))).expect("non-empty grid");
            let summary = json!({
                "figure": id,
                "potential": spec,
                "quantity": quantity,
                "axis": "a*khat",
                "axis_range": [0.0, hi],
                "n": n,
                "argmax": {"a_k1hat": best.0, "a_k2hat": best.1, "value": pick(best.4)},
                "reference": "Δ over the interior-momentum plane of the square well",
            });
            (points, summary)
        }
        other => return Err(Failure::config(format!("figure {other} does not exist (choose 1-4)"))),
    };
    match ctx.format {
        Format::Csv => {
            let mut csv = Csv::new(&header);
            for (u1, u2, k1, k2, d) in &points {
                csv.row(&[num(*u1), num(*u2), num(*k1), num(*k2), num(d.re), num(d.im), num(d.norm_sqr())]);
            }
            ctx.emit(&csv.finish())?;
            match &ctx.out {
                Some(path) => crate::output::write_atomic(&sidecar(path, ".summary.json"), &json(&summary)),
                None => {
                    eprint!("{}", json(&summary));
                    Ok(())
                }
            }
        }
        Format::Json => {
            let pts: Vec<Value> = points
                .iter()
                .map(|(u1, u2, k1, k2, d)| json!({"a_k1hat": u1, "a_k2hat": u2, "k1": k1, "k2": k2, "delta": d}))
                .collect();
            ctx.emit(&json(&json!({"summary": summary, "points": pts})))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Direct,
    NetCurrentFormula,
    StationaryPhase,
    /// all three rates side by side
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Channel {
    Line,
    SWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum S0Arg {
    Unit,
    ConstantPhase,
    HardSphere,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct PacketArgs {
    #[arg(long = "P0")]
    pub p0: Option<f64>,
    #[arg(long = "X0", allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long, value_enum)]
    pub channel: Option<Channel>,
    /// s-wave S-matrix model
    #[arg(long, value_enum)]
    pub s0: Option<S0Arg>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// initial radius of the s-wave packet
    #[arg(long = "R0")]
    pub r0: Option<f64>,
}

impl PacketArgs {
    fn resolve(&self, base: Option<PacketSpec>) -> Result<PacketSpec, Failure> {
        let mut p = base.unwrap_or(PacketSpec::new(1.0, -50.0, 0.01));
        let reshaped = self.p0.is_some() || self.sigma.is_some();
        p.p0 = self.p0.unwrap_or(p.p0);
        p.x0 = self.x0.unwrap_or(p.x0);
        p.sigma = self.sigma.unwrap_or(p.sigma);
        if reshaped && self.n_points.is_none() {
            // recentre the default grid on the new packet
            p.k_grid = None;
        }
        if let Some(n) = self.n_points {
            p.k_grid = None;
            p = p.with_points(n);
        }
        p.validate()?;
        Ok(p)
    }

    fn swave(&self, base: Option<SWaveSpec>) -> Result<SWaveSpec, Failure> {
        let mut sw = base.unwrap_or(SWaveSpec { s0: SWaveModel::Unit, r0: 50.0, m: 1.0 });
        if let Some(model) = self.s0 {
            sw.s0 = match model {
                S0Arg::Unit => SWaveModel::Unit,
                S0Arg::ConstantPhase => SWaveModel::ConstantPhase { delta0: self.delta0.unwrap_or(0.5) },
                S0Arg::HardSphere => SWaveModel::HardSphere { radius: self.radius.unwrap_or(1.0) },
            };
        }
        sw.r0 = self.r0.unwrap_or(sw.r0);
        Ok(sw)
    }
}

fn packet(
    ctx: &Context,
    pot: &PotentialArgs,
    args: &PacketArgs,
    t: Option<String>,
    method: MethodArg,
) -> Result<(), Failure> {
    let times = parse_range(t.as_deref().or(ctx.cfg.t.as_deref()).unwrap_or("0:150:151"))?;
    let pk = args.resolve(ctx.cfg.packet)?;
    let s_wave = args.channel == Some(Channel::SWave) || (args.channel.is_none() && ctx.cfg.swave.is_some());
    if s_wave {
        if method != MethodArg::Direct {
            return Err(Failure::config("the s-wave channel supports --method direct only"));
        }
        let sw = args.swave(ctx.cfg.swave.clone())?;
        let basis = SWaveBasis::new(&sw, &pk)?;
        let rows = times
            .par_iter()
            .map(|&t| Ok((basis.norm(t)?, basis.norm_rate(t)?)))
            .collect::<Result<Vec<_>, nonortho::Error>>()?;
        let trace = NormTrace {
            times: times.clone(),
            n: rows.iter().map(|r| r.0).collect(),
            dndt: rows.iter().map(|r| r.1).collect(),
            method: NormMethod::Direct,
        };
        return emit_trace(ctx, &trace, json!({"swave": sw, "packet": pk}));
    }
    let spec = pot.resolve(ctx.cfg.potential, PotentialSpec::free())?;
    let basis = PacketBasis::new(&spec, &pk)?;
    let rows = times
        .par_iter()
        .map(|&t| {
            Ok((
                basis.norm(t)?,
                basis.norm_rate_direct(t)?,
                basis.norm_rate(t),
                stationary_phase_norm_rate(&spec, &pk, t)?,
            ))
        })
        .collect::<Result<Vec<_>, nonortho::Error>>()?;
    let meta = json!({"potential": spec, "packet": pk});
    let single = |m: NormMethod, pick: fn(&(f64, f64, f64, f64)) -> f64| NormTrace {
        times: times.clone(),
        n: rows.iter().map(|r| r.0).collect(),
        dndt: rows.iter().map(pick).collect(),
        method: m,
    };
    match method {
        MethodArg::Direct => emit_trace(ctx, &single(NormMethod::Direct, |r| r.1), meta),
        MethodArg::NetCurrentFormula => emit_trace(ctx, &single(NormMethod::NetCurrentFormula, |r| r.2), meta),
        MethodArg::StationaryPhase => emit_trace(ctx, &single(NormMethod::StationaryPhase, |r| r.3), meta),
        MethodArg::Compare => {
            let rel = |direct: f64, other: f64| {
                let scale = direct.abs().max(other.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (other - direct).abs() / scale
                }
            };
            match ctx.format {
                Format::Csv => {
                    let mut csv = Csv::new(&[
                        "t",
                        "N",
                        "dNdt_direct",
                        "dNdt_net_current_formula",
                        "dNdt_stationary_phase",
                        "rel_diff",
                    ]);
                    for (t, r) in times.iter().zip(&rows) {
                        csv.row(&[num(*t), num(r.0), num(r.1), num(r.2), num(r.3), num(rel(r.1, r.3))]);
                    }
                    ctx.emit(&csv.finish())
                }
                Format::Json => {
                    let mut obj = meta;
                    obj["times"] = json!(times);
                    obj["N"] = json!(rows.iter().map(|r| r.0).collect::<Vec<_>>());
                    obj["dNdt_direct"] = json!(rows.iter().map(|r| r.1).collect::<Vec<_>>());
                    obj["dNdt_net_current_formula"] = json!(rows.iter().map(|r| r.2).collect::<Vec<_>>());
                    obj["dNdt_stationary_phase"] = json!(rows.iter().map(|r| r.3).collect::<Vec<_>>());
                    obj["rel_diff"] = json!(rows.iter().map(|r| rel(r.1, r.3)).collect::<Vec<_>>());
                    obj["reference"] = json!("norm rate: double integral, correlation amplitudes, leading stationary phase");
                    ctx.emit(&json(&obj))
                }
            }
        }
    }
}

fn emit_trace(ctx: &Context, trace: &NormTrace, mut meta: Value) -> Result<(), Failure> {
    match ctx.format {
        Format::Csv => ctx.emit(&trace.to_csv()),
        Format::Json => {
            meta["trace"] = json!(trace);
            meta["reference"] = json!("time-dependent norm of a packet of continuum states");
            ctx.emit(&json(&meta))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Identities,
    Regularization,
    Airy,
    All,
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    suite: &'static str,
    name: String,
    reference: &'static str,
    pass: bool,
    value: f64,
    threshold: f64,
    /// informational rows do not affect the exit code
    gate: bool,
}

fn check(suite: &'static str, name: impl Into<String>, reference: &'static str, value: f64, threshold: f64) -> Check {
    Check { suite, name: name.into(), reference, pass: value < threshold, value, threshold, gate: true }
}

fn identity_checks(quad: &QuadratureConfig) -> Result<Vec<Check>, Failure> {
    const S: &str = "identities";
    let mut out = Vec::new();
    let well = PotentialSpec::square_well(2.0, 10.0);
    let cases = [
        (PotentialSpec::free(), 2.0, 1.0, -10.0, 10.0),
        (well, 1.3, 0.7, -30.0, 30.0),
        (PotentialSpec::delta(3.0), 2.0, 1.0, -20.0, 20.0),
        (well, 2.3, 0.4, -6.0, 25.0),
        (PotentialSpec::square_well(-1.0, 3.0), 0.9, 2.4, -2.0, 8.0),
        (PotentialSpec::delta(-2.0), 0.5, 1.7, -12.0, 3.0),
    ];
    for (spec, k1, k2, x1, x2) in cases {
        let r = finite_interval_identity_residual(&spec, k1, k2, x1, x2, quad)?;
        out.push(check(
            S,
            format!("finite_interval {} k1={k1} k2={k2} [{x1},{x2}]", spec.name()),
            "overlap on an interval equals the boundary Wronskian over 2m(E1-E2)",
            r,
            1e-7,
        ));
    }
    for spec in [PotentialSpec::free(), PotentialSpec::delta(3.0)] {
        let grid = delta_grid(&spec, (0.1, 5.0), (0.1, 5.0), 50, 50)?;
        let worst = grid.points.iter().map(|p| p.delta_term.norm()).fold(0.0, f64::max);
        out.push(check(S, format!("delta_vanishes {}", spec.name()), "Δ vanishes for free and δ potentials", worst, 1e-12));
    }
    let ks: Vec<f64> = (0..200).map(|i| 0.05 * 1000f64.powf(i as f64 / 199.0)).collect();
    for (spec, tol) in [
        (PotentialSpec::free(), 1e-12),
        (PotentialSpec::delta(3.0), 1e-12),
        (well, 1e-12),
        (PotentialSpec::poschl_teller(-1.5, 1.0), 1e-8),
        (PotentialSpec::poschl_teller(0.8, 0.7), 1e-8),
    ] {
        let worst = ks.iter().map(|&k| coefficients(&spec, k).map(|c| c.unitarity_defect())).try_fold(
            0.0f64,
            |m, d| -> Result<f64, nonortho::Error> { Ok(m.max(d?)) },
        )?;
        out.push(check(S, format!("unitarity {}", spec.name()), "|R|^2 + |T|^2 = 1", worst, tol));
    }
    let pairs = [(0.7, 1.9), (2.3, 2.05), (3.1, 0.4), (1.2, 4.4)];
    let mut herm = 0.0f64;
    let mut anti = 0.0f64;
    for (k1, k2) in pairs {
        herm = herm.max((delta_term(&well, k1, k2)? - delta_term(&well, k2, k1)?.conj()).norm());
        let j12 = boundary_j(&well, k1, k2, -20.0, 15.0)?.value;
        let j21 = boundary_j(&well, k2, k1, -20.0, 15.0)?.value;
        anti = anti.max((j21 + j12.conj()).norm() / j12.norm().max(1.0));
    }
    out.push(check(S, "delta_hermitian square_well", "Δ(k1,k2) = Δ(k2,k1)*", herm, 1e-12));
    out.push(check(S, "boundary_antisymmetry square_well", "J(k2,k1) = -J(k1,k2)*", anti, 1e-12));
    Ok(out)
}

fn regularization_checks(quad: &QuadratureConfig) -> Result<(Vec<Check>, RegularizationReport), Failure> {
    const S: &str = "regularization";
    let mut out = Vec::new();
    let well = PotentialSpec::square_well(2.0, 10.0);
    let rep = regularization_compare(&well, 2.3, 1.7, &[10.0, 20.0, 40.0], &[0.1, 0.05, 0.025], quad)?;
    for w in rep.cutoff_kernel.windows(2) {
        out.push(check(
            S,
            format!("cutoff_kernel_ratio lambda {} -> {}", w[0].parameter, w[1].parameter),
            "cutoff kernel squared norm grows linearly in the cutoff",
            (w[1].norm2 / w[0].norm2 - 2.0).abs() / 2.0,
            0.01,
        ));
    }
    for w in rep.regularized_kernel.windows(2) {
        out.push(check(
            S,
            format!("damped_kernel_ratio eps {} -> {}", w[0].parameter, w[1].parameter),
            "damped kernel squared norm grows as 1/eps",
            (w[1].norm2 / w[0].norm2 - 2.0).abs() / 2.0,
            0.01,
        ));
    }
    let res = &rep.boundary_residuals;
    let decreasing = res.windows(2).all(|w| w[0].1 > w[1].1) && res.iter().all(|r| r.1 > 0.0);
    out.push(Check {
        suite: S,
        name: format!("damped_boundary_residual {:?}", res.iter().map(|r| r.1).collect::<Vec<_>>()),
        reference: "damped square-well states do not reduce to boundary terms; the defect shrinks with eps",
        pass: decreasing,
        value: res.last().map_or(f64::NAN, |r| r.1),
        threshold: res.first().map_or(f64::NAN, |r| r.1),
        gate: true,
    });
    let delta = regularized_overlap(&PotentialSpec::delta(3.0), 2.0, 1.0, 0.01, quad)?;
    out.push(check(S, "delta_pv_cancels", "principal-value terms cancel for the δ potential", delta.pv_term.norm(), 1e-9));
    let constant = rep.cutoff_norm_constant / std::f64::consts::PI;
    out.push(Check {
        suite: S,
        name: "cutoff_norm_constant_over_pi".into(),
        reference: "squared norm of 2 sin(qΛ)/q per unit cutoff, in units of π (commonly quoted as 1)",
        pass: true,
        value: constant,
        threshold: 4.0,
        gate: false,
    });
    Ok((out, rep))
}

fn airy_checks(quad: &QuadratureConfig) -> Result<Vec<Check>, Failure> {
    const S: &str = "airy";
    let mut out = Vec::new();
    let cutoffs = [20.0, 40.0, 80.0];
    let errs = cutoffs.iter().map(|&t| airy_closure_check(t, 0.0, 1.0, quad)).collect::<Result<Vec<_>, _>>()?;
    for (t, e) in cutoffs.iter().zip(&errs) {
        out.push(Check {
            suite: S,
            name: format!("closure cutoff={t}"),
            reference: "∫ Ai(t+x) Ai(t+y) dt acts as δ(x-y) on a Gaussian of width 1",
            pass: true,
            value: *e,
            threshold: f64::NAN,
            gate: false,
        });
    }
    let decreasing = errs.windows(2).all(|w| w[0] > w[1]);
    out.push(Check {
        suite: S,
        name: "closure_decreasing".into(),
        reference: "closure error falls as the cutoff grows",
        pass: decreasing && errs[2] < 1e-2,
        value: errs[2],
        threshold: 1e-2,
        gate: true,
    });
    let derr = airy_closure_derivative_check(40.0, 0.0, 1.0, quad)?;
    out.push(check(S, "derivative_closure cutoff=40", "∫ Ai(t+x) Ai'(t+y) dt acts as ∂_y δ(x-y)", derr, 1e-6));
    let asym = (airy_kernel(0.3, -1.2, 20.0, quad)? - airy_kernel(-1.2, 0.3, 20.0, quad)?).abs();
    out.push(check(S, "kernel_symmetry", "K(x,y) = K(y,x)", asym, 1e-8));
    Ok(out)
}

fn verify(ctx: &Context, suite: Suite) -> Result<(), Failure> {
    let mut checks = Vec::new();
    let mut table = Value::Null;
    if matches!(suite, Suite::Identities | Suite::All) {
        checks.extend(identity_checks(&ctx.quad)?);
    }
    if matches!(suite, Suite::Regularization | Suite::All) {
        let (c, rep) = regularization_checks(&ctx.quad)?;
        checks.extend(c);
        table = json!(rep);
    }
    if matches!(suite, Suite::Airy | Suite::All) {
        checks.extend(airy_checks(&ctx.quad)?);
    }
    let failed: Vec<&Check> = checks.iter().filter(|c| c.gate && !c.pass).collect();
    let text = match ctx.format {
        Format::Json => json(&json!({
            "pass": failed.is_empty(),
            "checks": checks,
            "regularization_table": table,
        })),
        Format::Csv => {
            let mut csv = Csv::new(&["suite", "name", "pass", "value", "threshold", "gate", "reference"]);
            for c in &checks {
                csv.row(&[
                    c.suite.into(),
                    c.name.replace(',', ";"),
                    c.pass.to_string(),
                    num(c.value),
                    num(c.threshold),
                    c.gate.to_string(),
                    c.reference.replace(',', ";"),
                ]);
            }
            csv.finish()
        }
    };
    ctx.emit(&text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        Err(Failure::invariant(format!("failed checks: {}", names.join(", "))))
    }
}

fn regcmp(
    ctx: &Context,
    pot: &PotentialArgs,
    k1: Option<f64>,
    k2: Option<f64>,
    lambda: Option<Vec<f64>>,
    eps: Option<Vec<f64>>,
) -> Result<(), Failure> {
    let spec = pot.resolve(ctx.cfg.potential, PotentialSpec::square_well(2.0, 10.0))?;
    let k1 = k1.or(ctx.cfg.k1).unwrap_or(2.3);
    let k2 = k2.or(ctx.cfg.k2).unwrap_or(1.7);
    let lambdas = lambda.or(ctx.cfg.lambdas.clone()).unwrap_or(vec![10.0, 20.0, 40.0]);
    let epss = eps.or(ctx.cfg.eps.clone()).unwrap_or(vec![0.1, 0.05, 0.025]);
    let rep = regularization_compare(&spec, k1, k2, &lambdas, &epss, &ctx.quad)?;
    match ctx.format {
        Format::Json => {
            let mut v = json!(rep);
            v["reference"] = json!("cutoff overlaps compared with exponentially damped overlaps");
            ctx.emit(&json(&v))
        }
        Format::Csv => {
            let mut csv = Csv::new(&["kind", "parameter", "re", "im"]);
            for (l, v) in &rep.cutoff_overlaps {
                csv.row(&["cutoff_overlap".into(), num(*l), num(v.re), num(v.im)]);
            }
            for (e, v) in &rep.regularized_overlaps {
                csv.row(&["damped_overlap".into(), num(*e), num(v.re), num(v.im)]);
            }
            for s in &rep.cutoff_kernel {
                csv.row(&["cutoff_kernel_norm2".into(), num(s.parameter), num(s.norm2), num(0.0)]);
            }
            for s in &rep.regularized_kernel {
                csv.row(&["damped_kernel_norm2".into(), num(s.parameter), num(s.norm2), num(0.0)]);
            }
            for (e, r) in &rep.boundary_residuals {
                csv.row(&["damped_boundary_residual".into(), num(*e), num(*r), num(0.0)]);
            }
            ctx.emit(&csv.finish())
        }
    }
}
