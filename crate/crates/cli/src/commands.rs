use anyhow::anyhow;
use rayon::prelude::*;
use serde_json::json;

use conflow_core::evolution::{conservation_drift, integrate, random_state, stability_probe};
use conflow_core::families::{
    alternating_state, blaschke_state, ground_state, inf_norm, pair_state, tail_ratio, twisted_state,
};
use conflow_core::flow::hamiltonian;
use conflow_core::solver::{
    bifurcation_points_lowest, bifurcation_points_second, continue_branch_with, linearization_scan,
    omega_branch, BifurcationPoint, NewtonOptions,
};
use conflow_core::spectral::{fd_step_for_offset, spectral_report, SpectralOptions};
use conflow_core::{
    AmplitudeState, BaseMode, BranchId, BranchSample, BranchSpec, Error, Normalization, PairSign, SpectralReport,
    StationaryState,
};

use crate::output::{emit, Cell, RunConfig, Table};
use crate::{BranchArg, FamilyArg, Mode};

pub enum Failure {
    Usage(String),
    Numerical(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Numerical(e)
    }
}

type Res = std::result::Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn family_name(f: FamilyArg) -> &'static str {
    match f {
        FamilyArg::Ground => "ground",
        FamilyArg::Twisted => "twisted",
        FamilyArg::PairPlus => "pair+",
        FamilyArg::PairMinus => "pair-",
        FamilyArg::Blaschke => "blaschke",
        FamilyArg::Alternating => "alternating",
        FamilyArg::Random => "random",
    }
}

fn build_family(f: FamilyArg, p: f64, n: usize) -> std::result::Result<StationaryState, Failure> {
    Ok(match f {
        FamilyArg::Ground => ground_state(p, 1.0 - p * p, n)?,
        FamilyArg::Twisted => twisted_state(p, 1.0, n)?,
        FamilyArg::PairPlus => pair_state(p, 1.0, PairSign::Plus, n)?,
        FamilyArg::PairMinus => pair_state(p, 1.0, PairSign::Minus, n)?,
        FamilyArg::Blaschke => blaschke_state(p, n)?,
        FamilyArg::Alternating => alternating_state(p, 1.0, n)?,
        FamilyArg::Random => return usage("random data is not a stationary state"),
    })
}

fn base_of(mode: Mode) -> BaseMode {
    match mode {
        Mode::Lowest => BaseMode::Lowest,
        Mode::Second => BaseMode::Second,
    }
}

fn parse_floats(s: &str, parts: usize, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().or_else(
        |_| usage(format!("{what} must look like {}", ["a", "b", "count"][..parts].join(":"))),
    )?;
    if v.len() != parts || v.iter().any(|x| !x.is_finite()) {
        return usage(format!("{what} needs {parts} finite values separated by ':'"));
    }
    Ok(v)
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..count).map(|k| a + (b - a) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Residual tolerance for a profile, relative to its size.
fn residual_tol(s: &StationaryState) -> f64 {
    1e-9 * s.lambda.abs().max(1.0) * inf_norm(&s.amps).powi(2)
}

pub fn verify(cfg: &RunConfig, family: Option<FamilyArg>, p: Option<f64>) -> Res {
    let cases: Vec<(FamilyArg, f64)> = match (family, p) {
        (Some(FamilyArg::Random), _) => return usage("verify runs stationary families only"),
        (Some(f), Some(p)) => vec![(f, p)],
        (Some(f), None) => default_cases().into_iter().filter(|c| c.0 == f).collect(),
        (None, Some(p)) => [
            FamilyArg::Ground,
            FamilyArg::Twisted,
            FamilyArg::PairPlus,
            FamilyArg::PairMinus,
            FamilyArg::Blaschke,
            FamilyArg::Alternating,
        ]
        .into_iter()
        .map(|f| (f, p))
        .collect(),
        (None, None) => default_cases(),
    };
    let mut table = Table::new(vec![
        "family", "p", "residual", "tolerance", "lambda", "omega", "Q", "E", "H", "tail_ok", "pass",
    ]);
    let mut all_pass = true;
    for (f, p) in cases {
        let s = build_family(f, p, cfg.truncation)?;
        let tail_ok = tail_ratio(&s.amps) <= cfg.tail_tol;
        if !tail_ok {
            eprintln!(
                "warning: {} p={p} has tail ratio {:.3e} at N={}; raise N",
                family_name(f),
                tail_ratio(&s.amps),
                cfg.truncation
            );
        }
        let (r, tol) = (s.residual_norm(), residual_tol(&s));
        let pass = r <= tol;
        all_pass &= pass;
        table.push(vec![
            family_name(f).into(),
            p.into(),
            r.into(),
            tol.into(),
            s.lambda.into(),
            s.omega.into(),
            s.mass().into(),
            s.energy().into(),
            hamiltonian(&s.to_amplitude_state()).into(),
            (if tail_ok { "true" } else { "false" }).into(),
            (if pass { "true" } else { "false" }).into(),
        ]);
    }
    emit(&table, cfg)?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Numerical(anyhow!("residual above tolerance")))
    }
}

fn default_cases() -> Vec<(FamilyArg, f64)> {
    let mut v = Vec::new();
    for p in [0.1, 0.3, 0.6] {
        v.push((FamilyArg::Ground, p));
    }
    for p in [0.1, 0.3] {
        v.push((FamilyArg::Twisted, p));
    }
    for f in [FamilyArg::PairPlus, FamilyArg::PairMinus] {
        for p in [0.05, 0.15, 0.25] {
            v.push((f, p));
        }
    }
    v.push((FamilyArg::Blaschke, 0.3));
    v.push((FamilyArg::Alternating, 0.3));
    v
}

pub fn scan(cfg: &RunConfig, mode: Mode, range: &str, step: f64) -> Res {
    let r = parse_floats(range, 2, "--range")?;
    if !(r[0] > -1.0 && r[1] < 1.0) || !(step > 0.0) {
        return usage("--range must lie in (-1, 1) and --step must be positive");
    }
    let base = base_of(mode);
    let crossings = linearization_scan((r[0], r[1]), base, cfg.truncation, step);
    let catalog: Vec<BifurcationPoint> = match base {
        BaseMode::Lowest => bifurcation_points_lowest(cfg.truncation - 1),
        BaseMode::Second => bifurcation_points_second(cfg.truncation - 1),
    };
    let mut table = Table::new(vec!["omega", "multiplicity", "catalog_m", "catalog_omega", "double"]);
    for c in &crossings {
        let hits: Vec<&BifurcationPoint> = catalog.iter().filter(|b| (b.omega - c.omega).abs() < 1e-9).collect();
        let ms: Vec<String> = hits.iter().map(|b| b.m.to_string()).collect();
        let exact = hits.first().map(|b| format!("{}/{}", b.num, b.den));
        let double = hits.iter().any(|b| b.partner.is_some());
        table.push(vec![
            c.omega.into(),
            c.multiplicity.into(),
            ms.join(";").into(),
            exact.into(),
            (if double { "true" } else { "false" }).into(),
        ]);
    }
    emit(&table, cfg)?;
    Ok(())
}

fn branch_spec(mode: Mode, m: usize, branch: BranchArg, n: usize) -> std::result::Result<BranchSpec, Failure> {
    let id = match branch {
        BranchArg::I => BranchId::I,
        BranchArg::Ii => BranchId::II,
        BranchArg::Iii => BranchId::III,
        BranchArg::Unique => BranchId::Unique,
        BranchArg::PairPlus | BranchArg::PairMinus => return usage("pair branches are closed-form"),
    };
    BranchSpec::new(base_of(mode), m, id, n).or_else(|e| match e {
        Error::UnknownBranch { .. } => usage(e.to_string()),
        e => Err(e.into()),
    })
}

/// Converged samples up to the first failure, and the failure.
fn continue_partial(
    spec: &BranchSpec,
    schedule: &[f64],
    opts: &NewtonOptions,
) -> std::result::Result<(Vec<BranchSample>, Option<Error>), Failure> {
    match continue_branch_with(spec, schedule, opts) {
        Ok(b) => Ok((b.samples, None)),
        Err(Error::AtParameter { param, source }) => {
            let k = schedule.iter().position(|s| *s == param).unwrap_or(0);
            let samples = if k == 0 { Vec::new() } else { continue_branch_with(spec, &schedule[..k], opts)?.samples };
            Ok((samples, Some(Error::AtParameter { param, source })))
        }
        Err(Error::DomainError(msg)) => usage(msg),
        Err(e) => Err(e.into()),
    }
}

fn spectrum_row(param: f64, st: &StationaryState, r: &SpectralReport) -> Vec<Cell> {
    let ep = &r.eigs_plus;
    let em = &r.eigs_minus;
    let nonzero_minus = r.eigs_minus.iter().copied().find(|x| x.abs() > r.zero_tol_minus);
    vec![
        param.into(),
        st.omega.into(),
        ep.first().copied().into(),
        ep.get(1).copied().into(),
        em.first().copied().into(),
        nonzero_minus.into(),
        r.n_plus.into(),
        r.z_plus.into(),
        r.n_minus.into(),
        r.z_minus.into(),
        r.n_constrained.into(),
        r.d[0][0].into(),
        r.d[0][1].into(),
        r.d[1][0].into(),
        r.d[1][1].into(),
        serde_json::to_value(r.classification)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
            .into(),
        "ok".into(),
    ]
}

const SPECTRUM_HEADER: [&str; 17] = [
    "param",
    "omega",
    "eig_plus_min1",
    "eig_plus_min2",
    "eig_minus_min1",
    "eig_minus_nonzero_min",
    "n_plus",
    "z_plus",
    "n_minus",
    "z_minus",
    "n_constrained",
    "d11",
    "d12",
    "d21",
    "d22",
    "classification",
    "status",
];

fn failed_row(param: f64, e: &dyn std::fmt::Display, width: usize) -> Vec<Cell> {
    let mut row = vec![Cell::from(param)];
    row.resize_with(width - 1, || Cell::None);
    row.push(format!("failed: {e}").into());
    row
}

pub fn spectrum(cfg: &RunConfig, mode: Mode, m: usize, branch: BranchArg, sweep: &str) -> Res {
    let sw = parse_floats(sweep, 3, "--sweep")?;
    if sw[2] < 1.0 || sw[2].fract() != 0.0 {
        return usage("--sweep count must be a positive integer");
    }
    let params = linspace(sw[0], sw[1], sw[2] as usize);
    let width = SPECTRUM_HEADER.len();
    let mut opts = SpectralOptions::new(Normalization::LambdaOne);
    opts.zero_rel_tol = cfg.zero_tol;

    let rows: Vec<Vec<Cell>> = match branch {
        BranchArg::PairPlus | BranchArg::PairMinus => {
            let sign = if branch == BranchArg::PairPlus { PairSign::Plus } else { PairSign::Minus };
            let n = cfg.truncation;
            params
                .par_iter()
                .map(|&p| {
                    let run = || -> conflow_core::Result<(StationaryState, SpectralReport)> {
                        let st = pair_state(p, 1.0, sign, n)?.normalized(Normalization::LambdaOne)?;
                        let mut o = opts;
                        // Both pair branches leave e_0 at omega = 1/6.
                        o.fd_step = fd_step_for_offset(st.omega - 1.0 / 6.0);
                        let r = spectral_report(&st, omega_branch(st.clone(), Normalization::LambdaOne), &o)?;
                        Ok((st, r))
                    };
                    match run() {
                        Ok((st, r)) => spectrum_row(p, &st, &r),
                        Err(e) => failed_row(p, &e, width),
                    }
                })
                .collect()
        }
        _ => {
            let spec = branch_spec(mode, m, branch, cfg.truncation)?;
            let newton = NewtonOptions { tol: cfg.newton_tol, ..NewtonOptions::default() };
            let (samples, failure) = continue_partial(&spec, &params, &newton)?;
            opts.normalization = spec.normalization;
            let mut rows: Vec<Vec<Cell>> = samples
                .par_iter()
                .map(|s| {
                    let mut o = opts;
                    o.fd_step = fd_step_for_offset(s.omega_offset);
                    match spectral_report(&s.state, omega_branch(s.state.clone(), spec.normalization), &o) {
                        Ok(r) => spectrum_row(s.param, &s.state, &r),
                        Err(e) => failed_row(s.param, &e, width),
                    }
                })
                .collect();
            if let Some(e) = failure {
                for &p in &params[samples.len()..] {
                    rows.push(failed_row(p, &e, width));
                }
            }
            rows
        }
    };
    let failures = rows.iter().filter(|r| matches!(r.last(), Some(Cell::S(s)) if s != "ok")).count();
    let mut table = Table::new(SPECTRUM_HEADER.to_vec());
    for r in rows {
        table.push(r);
    }
    emit(&table, cfg)?;
    if failures > 0 {
        return Err(Failure::Numerical(anyhow!("{failures} of {} rows failed", params.len())));
    }
    Ok(())
}

pub fn continuation(
    cfg: &RunConfig,
    mode: Mode,
    m: usize,
    branch: BranchArg,
    eps: Option<f64>,
    mu: Option<f64>,
    steps: usize,
) -> Res {
    let spec = branch_spec(mode, m, branch, cfg.truncation)?;
    let end = match (spec.branch_id, eps, mu) {
        (BranchId::I, _, Some(mu)) => mu,
        (BranchId::I, _, None) => return usage("branch (i) is parameterized by --mu"),
        (_, Some(e), _) => e,
        (_, None, _) => return usage("this branch is parameterized by --eps"),
    };
    if steps == 0 {
        return usage("--steps must be positive");
    }
    let schedule: Vec<f64> = (1..=steps).map(|k| end * k as f64 / steps as f64).collect();
    let newton = NewtonOptions { tol: cfg.newton_tol, ..NewtonOptions::default() };
    let (samples, failure) = continue_partial(&spec, &schedule, &newton)?;
    let mut table = Table::new(vec![
        "param", "epsilon", "mu", "omega", "Omega", "lambda", "residual", "iterations", "Q", "E",
    ]);
    for s in &samples {
        table.push(vec![
            s.param.into(),
            s.epsilon.into(),
            s.mu.into(),
            s.state.omega.into(),
            s.omega_offset.into(),
            s.state.lambda.into(),
            s.residual_norm.into(),
            s.iterations.into(),
            s.state.mass().into(),
            s.state.energy().into(),
        ]);
    }
    table.extra = Some(json!({ "spec": spec, "samples": samples }));
    emit(&table, cfg)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn initial_state(cfg: &RunConfig, family: FamilyArg, p: f64) -> std::result::Result<AmplitudeState, Failure> {
    match family {
        FamilyArg::Random => Ok(random_state(cfg.truncation, 1.0, 0.3, cfg.seed)),
        f => Ok(build_family(f, p, cfg.truncation)?.to_amplitude_state()),
    }
}

pub fn evolve(cfg: &RunConfig, family: FamilyArg, p: f64, t: f64, dt: f64, stride: usize) -> Res {
    if !(dt > 0.0) || !(t >= 0.0) {
        return usage("need --dt > 0 and --T >= 0");
    }
    let init = initial_state(cfg, family, p)?;
    let traj = integrate(&init, t, dt, stride)?;
    let c0 = traj.conserved[0];
    let mut table = Table::new(vec!["t", "H", "Q", "E", "abs_Z", "dH", "dQ", "dE", "d_abs_Z"]);
    for (time, c) in traj.times.iter().zip(&traj.conserved) {
        table.push(vec![
            (*time).into(),
            c.h.into(),
            c.q.into(),
            c.e.into(),
            c.z.norm().into(),
            (c.h - c0.h).abs().into(),
            (c.q - c0.q).abs().into(),
            (c.e - c0.e).abs().into(),
            (c.z.norm() - c0.z.norm()).abs().into(),
        ]);
    }
    let drift = conservation_drift(&traj);
    table.extra = Some(json!({ "drift": drift }));
    emit(&table, cfg)?;
    eprintln!("max drift {:.3e} (H {:.3e}, Q {:.3e}, E {:.3e}, |Z| {:.3e})", drift.max(), drift.h, drift.q, drift.e, drift.z_abs);
    Ok(())
}

pub fn probe(cfg: &RunConfig, family: FamilyArg, p: f64, noise: f64, t: f64, dt: f64) -> Res {
    if !(0.0..=1e-2).contains(&noise) {
        return usage("--noise must lie in [0, 1e-2]");
    }
    if !(dt > 0.0) || !(t >= 0.0) {
        return usage("need --dt > 0 and --T >= 0");
    }
    let reference = build_family(family, p, cfg.truncation)?;
    let report = stability_probe(&reference, noise, t, dt, cfg.seed)?;
    let mut table = Table::new(vec!["t", "gauge_distance"]);
    for (time, d) in report.times.iter().zip(&report.distances) {
        table.push(vec![(*time).into(), (*d).into()]);
    }
    table.extra = Some(json!({
        "noise_amplitude": report.noise_amplitude,
        "horizon": report.horizon,
        "dt": report.dt,
        "seed": report.seed,
        "max_gauge_distance": report.max_gauge_distance,
        "growth_rate": report.growth_rate,
        "drift": report.drift,
    }));
    emit(&table, cfg)?;
    eprintln!(
        "max gauge distance {:.3e} ({:.2}x noise), growth rate {}",
        report.max_gauge_distance,
        if noise > 0.0 { report.max_gauge_distance / noise } else { 0.0 },
        report.growth_rate.map_or("n/a".to_string(), |g| format!("{g:.3e}"))
    );
    Ok(())
}
