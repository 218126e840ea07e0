use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Normalization, StationaryState};

use super::bifurcation::bifurcation_point;
use super::newton::{newton_solve, solve_at_omega, Frequency, LinearPin, NewtonOptions};
use super::{BaseMode, BranchId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    LowestSimple,
    LowestDouble,
    SecondTwo,
    SecondSimple,
    /// `omega_4 = omega_11 = 1/15`.
    SecondDouble15,
    /// `omega_5 = omega_7 = 1/12`, the image of the lowest double point.
    SecondDouble12,
}

/// Identifies one branch through a bifurcation point, plus the amplitude pins
/// for the current continuation parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub base_mode: BaseMode,
    pub m: usize,
    pub branch_id: BranchId,
    pub truncation: usize,
    pub pins: Vec<LinearPin>,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSample {
    /// Continuation parameter the pins were set from.
    pub param: f64,
    pub epsilon: f64,
    /// Zero at simple bifurcations.
    pub mu: f64,
    /// `omega - omega_m`.
    pub omega_offset: f64,
    pub state: StationaryState,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub spec: BranchSpec,
    pub samples: Vec<BranchSample>,
}

impl Branch {
    /// Largest `||A_{k+1} - A_k||_inf / |s_{k+1} - s_k|` over adjacent samples.
    pub fn max_step_ratio(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let da = w[0]
                    .state
                    .amps
                    .iter()
                    .zip(&w[1].state.amps)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                da / (w[1].param - w[0].param).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn unknown(base: BaseMode, m: usize, branch: BranchId) -> Error {
    Error::UnknownBranch { mode: base.to_string(), m, branch: branch.to_string() }
}

impl BranchSpec {
    pub fn new(base_mode: BaseMode, m: usize, branch_id: BranchId, truncation: usize) -> Result<Self> {
        use BranchId::*;
        let kind = classify(base_mode, m).ok_or_else(|| unknown(base_mode, m, branch_id))?;
        let allowed: &[BranchId] = match kind {
            Kind::LowestDouble | Kind::SecondDouble12 => &[I, II, III],
            Kind::SecondDouble15 => &[I, II],
            _ => &[Unique],
        };
        if !allowed.contains(&branch_id) {
            return Err(unknown(base_mode, m, branch_id));
        }
        let need = match kind {
            Kind::LowestSimple | Kind::SecondSimple => m + 1,
            Kind::LowestDouble => 7,
            Kind::SecondTwo => 4,
            Kind::SecondDouble15 => 12,
            Kind::SecondDouble12 => 14,
        };
        if truncation < need {
            return Err(Error::TruncationTooSmall { have: truncation, need });
        }
        Ok(Self {
            base_mode,
            m,
            branch_id,
            truncation,
            pins: Vec::new(),
            normalization: base_mode.normalization(),
        })
    }

    fn kind(&self) -> Kind {
        classify(self.base_mode, self.m).expect("validated in BranchSpec::new")
    }

    pub fn omega_star(&self) -> f64 {
        bifurcation_point(self.base_mode, self.m).omega
    }

    /// Indices of the kernel coordinates `(epsilon, mu)` at double points.
    fn double_indices(&self) -> (usize, usize) {
        match self.kind() {
            Kind::LowestDouble => (2, 3),
            Kind::SecondDouble15 => (4, 11),
            Kind::SecondDouble12 => (5, 7),
            _ => (self.m, self.m),
        }
    }

    /// The same spec with pins set for continuation parameter `s`: `mu` on
    /// branch (i), `epsilon` otherwise.
    pub fn with_param(&self, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::DomainError(format!("branch parameter must be finite, got {s}")));
        }
        let (ie, im) = self.double_indices();
        let pins = match (self.kind(), self.branch_id) {
            (Kind::LowestSimple | Kind::SecondSimple, _) => vec![LinearPin::amplitude(self.m, s)],
            (Kind::SecondTwo, _) => vec![LinearPin { terms: vec![(0, 3.0), (2, -1.0)], value: 10.0 * s }],
            (_, BranchId::I) => vec![LinearPin::amplitude(ie, 0.0), LinearPin::amplitude(im, s)],
            (_, BranchId::II) => vec![LinearPin::amplitude(ie, s), LinearPin::amplitude(im, 0.0)],
            (_, BranchId::III) => {
                if !(s < 0.0) {
                    return Err(Error::DomainError(format!("branch (iii) needs epsilon < 0, got {s}")));
                }
                vec![LinearPin::amplitude(ie, s)]
            }
            (_, BranchId::Unique) => unreachable!("rejected in BranchSpec::new"),
        };
        Ok(Self { pins, ..self.clone() })
    }

    /// Kernel coordinates `(epsilon, mu)` of a profile.
    pub fn coordinates(&self, a: &[f64]) -> (f64, f64) {
        match self.kind() {
            Kind::LowestSimple | Kind::SecondSimple => (a[self.m], 0.0),
            Kind::SecondTwo => ((3.0 * a[0] - a[2]) / 10.0, 0.0),
            _ => {
                let (ie, im) = self.double_indices();
                (a[ie], a[im])
            }
        }
    }
}

fn classify(base: BaseMode, m: usize) -> Option<Kind> {
    match (base, m) {
        (_, 0) => None,
        (BaseMode::Lowest, 2 | 3) => Some(Kind::LowestDouble),
        (BaseMode::Lowest, _) => Some(Kind::LowestSimple),
        (BaseMode::Second, 1 | 3) => None,
        (BaseMode::Second, 2) => Some(Kind::SecondTwo),
        (BaseMode::Second, 4 | 11) => Some(Kind::SecondDouble15),
        (BaseMode::Second, 5 | 7) => Some(Kind::SecondDouble12),
        (BaseMode::Second, _) => Some(Kind::SecondSimple),
    }
}

fn set(a: &mut [f64], i: usize, v: f64) {
    if let Some(x) = a.get_mut(i) {
        *x += v;
    }
}

/// Second-order predictor at a simple bifurcation of the lowest mode:
/// `A = (1 - s^2) e_0 + s e_m + b_{2m} e_{2m}` and `Omega = kappa_m s^2`.
fn lowest_simple(m: usize, s: f64, n: usize) -> (Vec<f64>, f64) {
    let mf = m as f64;
    let q = 2.0 * mf * mf - 3.0 * mf - 1.0;
    let mut a = vec![0.0; n];
    set(&mut a, 0, 1.0 - s * s);
    set(&mut a, m, s);
    set(&mut a, 2 * m, -s * s * (mf + 1.0) / q);
    let kappa = -((mf - 3.0) - 2.0 * (mf + 1.0) / q) / (mf * (mf + 1.0));
    (a, kappa * s * s)
}

/// Same for the second mode, `A = (1 - s^2) e_1 + s e_m + b_{2m-1} e_{2m-1}`.
fn second_simple(m: usize, s: f64, n: usize) -> (Vec<f64>, f64) {
    let mf = m as f64;
    let q = 2.0 * mf * mf - 10.0 * mf + 4.0;
    let mut a = vec![0.0; n];
    set(&mut a, 1, 1.0 - s * s);
    set(&mut a, m, s);
    set(&mut a, 2 * m - 1, -2.0 * s * s * (mf + 1.0) / q);
    let kappa = -((mf - 7.0) - 8.0 * (mf + 1.0) / q) / (mf * mf - 1.0);
    (a, kappa * s * s)
}

/// Expansions of the three branches through `omega_2 = omega_3 = 1/6`.
fn lowest_double(branch: BranchId, s: f64, n: usize) -> (Vec<f64>, f64) {
    let mut a = vec![0.0; n];
    let omega_offset = match branch {
        BranchId::I => {
            set(&mut a, 0, 1.0 - s * s);
            set(&mut a, 3, s);
            set(&mut a, 6, -0.5 * s * s);
            s * s / 12.0
        }
        BranchId::II => {
            set(&mut a, 0, 1.0 - s * s);
            set(&mut a, 2, s);
            set(&mut a, 4, -3.0 * s * s);
            set(&mut a, 6, 3.0 * s * s * s);
            7.0 / 6.0 * s * s
        }
        _ => {
            let d = (-s).sqrt();
            let d2 = d * d;
            let (d3, d4, d5, d6) = (d2 * d, d2 * d2, d2 * d2 * d, d2 * d2 * d2);
            set(&mut a, 0, 1.0 - d4 - 4.0 * d6);
            set(&mut a, 1, 12.0 * d5);
            set(&mut a, 2, s);
            set(&mut a, 3, 2.0 * d3);
            set(&mut a, 4, -3.0 * d4);
            set(&mut a, 5, 4.0 * d5);
            set(&mut a, 6, -5.0 * d6);
            7.0 / 6.0 * d4 + 28.0 / 3.0 * d6
        }
    };
    (a, omega_offset)
}

/// Normal-form guess for the branch at parameter `s` (`mu` on branch (i),
/// `epsilon` otherwise).
pub fn branch_predictor(spec: &BranchSpec, s: f64) -> Result<StationaryState> {
    let spec = spec.with_param(s)?;
    let n = spec.truncation;
    let omega_star = spec.omega_star();
    let (amps, omega_offset) = match spec.kind() {
        Kind::LowestSimple => lowest_simple(spec.m, s, n),
        Kind::LowestDouble => lowest_double(spec.branch_id, s, n),
        Kind::SecondSimple => second_simple(spec.m, s, n),
        Kind::SecondDouble15 => match spec.branch_id {
            BranchId::I => second_simple(11, s, n),
            _ => second_simple(4, s, n),
        },
        Kind::SecondTwo => {
            let mut a = vec![0.0; n];
            a[0] = 3.0 * s;
            a[1] = 1.0 - 4.0 * s * s;
            a[2] = -s;
            a[3] = 0.75 * s * s;
            (a, -7.0 / 3.0 * s * s)
        }
        Kind::SecondDouble12 => {
            let half = n / 2;
            let (a, w) = lowest_double(spec.branch_id, s, half);
            let low = StationaryState::new(a, 1.0, 1.0 / 6.0 + w);
            let img = half_wavelength_map_into(&low, n)?;
            (img.amps, img.omega - omega_star)
        }
    };
    let omega = omega_star + omega_offset;
    Ok(StationaryState::new(amps, spec.normalization.lambda(omega), omega))
}

/// Newton-correct `guess` onto the branch with the pins carried by `spec`.
pub fn newton_refine(guess: &StationaryState, spec: &BranchSpec) -> Result<BranchSample> {
    newton_refine_with(guess, spec, f64::NAN, &NewtonOptions::default())
}

fn newton_refine_with(
    guess: &StationaryState,
    spec: &BranchSpec,
    param: f64,
    opts: &NewtonOptions,
) -> Result<BranchSample> {
    if guess.truncation() != spec.truncation {
        return Err(Error::DomainError(format!(
            "guess has truncation {}, spec expects {}",
            guess.truncation(),
            spec.truncation
        )));
    }
    let r = newton_solve(guess, &spec.pins, spec.normalization, Frequency::Free, opts)?;
    let (epsilon, mu) = spec.coordinates(&r.state.amps);
    let param = if param.is_nan() {
        match spec.branch_id {
            BranchId::I => mu,
            _ => epsilon,
        }
    } else {
        param
    };
    Ok(BranchSample {
        param,
        epsilon,
        mu,
        omega_offset: r.state.omega - spec.omega_star(),
        residual_norm: r.residual_norm,
        iterations: r.iterations,
        state: r.state,
    })
}

fn pack(s: &StationaryState) -> Vec<f64> {
    let mut x = s.amps.clone();
    x.push(s.omega);
    x
}

fn unpack(x: &[f64], norm: Normalization) -> StationaryState {
    let n = x.len() - 1;
    StationaryState::new(x[..n].to_vec(), norm.lambda(x[n]), x[n])
}

/// Predictor-corrector over a monotone schedule of the branch parameter.
pub fn continue_branch(spec: &BranchSpec, schedule: &[f64]) -> Result<Branch> {
    continue_branch_with(spec, schedule, &NewtonOptions::default())
}

pub fn continue_branch_with(spec: &BranchSpec, schedule: &[f64], opts: &NewtonOptions) -> Result<Branch> {
    let monotone = schedule.windows(2).all(|w| w[1] > w[0]) || schedule.windows(2).all(|w| w[1] < w[0]);
    if !monotone {
        return Err(Error::DomainError("parameter schedule must be strictly monotone".into()));
    }
    let mut samples: Vec<BranchSample> = Vec::with_capacity(schedule.len());
    for (k, &s) in schedule.iter().enumerate() {
        let at = |e: Error| Error::AtParameter { param: s, source: Box::new(e) };
        // Branch (iii) is not smooth in epsilon (mu ~ |epsilon|^{3/2}), so
        // secants are poor there; keep using the shifted predictor.
        let secant = k >= 2 && spec.branch_id != BranchId::III;
        let guess = match k {
            0 => branch_predictor(spec, s).map_err(at)?,
            _ if !secant => {
                // Shift the analytic predictor by its error at the previous sample.
                let p0 = pack(&branch_predictor(spec, schedule[k - 1]).map_err(at)?);
                let p1 = pack(&branch_predictor(spec, s).map_err(at)?);
                let x0 = pack(&samples[k - 1].state);
                let x: Vec<f64> = (0..x0.len()).map(|i| p1[i] + x0[i] - p0[i]).collect();
                unpack(&x, spec.normalization)
            }
            _ => {
                let (a, b) = (&samples[k - 2], &samples[k - 1]);
                let t = (s - b.param) / (b.param - a.param);
                let (xa, xb) = (pack(&a.state), pack(&b.state));
                let x: Vec<f64> = xa.iter().zip(&xb).map(|(u, v)| v + t * (v - u)).collect();
                unpack(&x, spec.normalization)
            }
        };
        let spec_s = spec.with_param(s).map_err(at)?;
        samples.push(newton_refine_with(&guess, &spec_s, s, opts).map_err(at)?);
    }
    Ok(Branch { spec: spec.clone(), samples })
}

/// Closure `omega -> state` re-converging the normalized branch through
/// `seed` at fixed frequency; used for the `D` matrix.
pub fn omega_branch(seed: StationaryState, norm: Normalization) -> impl Fn(f64) -> Result<StationaryState> {
    move |omega| solve_at_omega(&seed, omega, norm)
}

/// Member of the two-parameter family at `lambda = 1`, `omega = 0` through
/// the second mode, pinned by `(A_0 - A_2)/2 = epsilon` and `A_3 = mu`.
pub fn two_param_family_second(epsilon: f64, mu: f64, n: usize) -> Result<StationaryState> {
    if n < 7 {
        return Err(Error::TruncationTooSmall { have: n, need: 7 });
    }
    let (e, m) = (epsilon, mu);
    let (e2, m2) = (e * e, m * m);
    let mut a = vec![0.0; n];
    a[0] = e + e * m + (e * m2 - 0.5 * e2 * e);
    a[1] = 1.0 - (e2 + m2) + e2 * m;
    a[2] = -e + e * m + (e * m2 - 0.5 * e2 * e);
    a[3] = m;
    a[4] = -2.0 * e * m + (e2 * e + e * m2);
    a[5] = m2 + e2 * m;
    a[6] = -3.0 * e * m2;
    let guess = StationaryState::new(a, 1.0, 0.0);
    let pins = [
        LinearPin { terms: vec![(0, 1.0), (2, -1.0)], value: 2.0 * e },
        LinearPin::amplitude(3, m),
    ];
    let r = newton_solve(&guess, &pins, Normalization::LambdaOne, Frequency::Fixed(0.0), &NewtonOptions::default())?;
    Ok(r.state)
}

/// `A~_{2m+1} = A_m`, `A~_{2m} = 0`, `lambda~ = lambda + omega/2`, `omega~ = omega/2`.
pub fn half_wavelength_map(state: &StationaryState) -> Result<StationaryState> {
    half_wavelength_map_into(state, 2 * state.truncation())
}

pub fn half_wavelength_map_into(state: &StationaryState, out_n: usize) -> Result<StationaryState> {
    let need = 2 * state.truncation();
    if out_n < need {
        return Err(Error::TruncationTooSmall { have: out_n, need });
    }
    let mut amps = vec![0.0; out_n];
    for (m, a) in state.amps.iter().enumerate() {
        amps[2 * m + 1] = *a;
    }
    Ok(StationaryState::new(amps, state.lambda + 0.5 * state.omega, 0.5 * state.omega))
}
