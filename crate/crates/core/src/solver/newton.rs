//! Newton refinement of the real stationary system `R(A; lambda, omega) = 0`
//! with linear amplitude pins and, optionally, `omega` as an extra unknown.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{inf_norm, stationary_residual, Normalization, StationaryState};
use crate::spectral::cubic_jacobian;

/// `sum_i c_i A_i = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPin {
    pub terms: Vec<(usize, f64)>,
    pub value: f64,
}

impl LinearPin {
    pub fn amplitude(index: usize, value: f64) -> Self {
        Self { terms: vec![(index, 1.0)], value }
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * a[i]).sum()
    }

    fn single_index(&self) -> Option<usize> {
        match self.terms.as_slice() {
            [(i, c)] if *c == 1.0 => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    /// `omega` is solved for; `lambda` follows from the normalization.
    Free,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    /// Looser target for consistent overdetermined systems.
    pub overdetermined_tol: f64,
    pub max_iter: usize,
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-12, overdetermined_tol: 1e-10, max_iter: 50, max_condition: 1e14 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub state: StationaryState,
    pub iterations: usize,
    pub residual_norm: f64,
}

struct System<'a> {
    n: usize,
    pins: &'a [LinearPin],
    norm: Normalization,
    frequency: Frequency,
}

impl System<'_> {
    fn unknowns(&self) -> usize {
        self.n + matches!(self.frequency, Frequency::Free) as usize
    }

    fn equations(&self) -> usize {
        self.n + self.pins.len()
    }

    fn omega(&self, x: &[f64]) -> f64 {
        match self.frequency {
            Frequency::Free => x[self.n],
            Frequency::Fixed(w) => w,
        }
    }

    fn lambda_of(&self, omega: f64) -> f64 {
        self.norm.lambda(omega)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let a = &x[..self.n];
        let w = self.omega(x);
        let mut r = stationary_residual(a, self.lambda_of(w), w);
        r.extend(self.pins.iter().map(|p| p.eval(a) - p.value));
        r
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let a = &x[..n];
        let w = self.omega(x);
        let lam = self.lambda_of(w);
        let shift = self.norm.shift();
        let mut j = DMatrix::zeros(self.equations(), self.unknowns());
        let g = cubic_jacobian(a);
        j.view_mut((0, 0), (n, n)).copy_from(&g);
        for i in 0..n {
            j[(i, i)] -= (i + 1) as f64 * (lam - i as f64 * w);
            if matches!(self.frequency, Frequency::Free) {
                j[(i, n)] = (i + 1) as f64 * (i as f64 - shift) * a[i];
            }
        }
        for (r, pin) in self.pins.iter().enumerate() {
            for &(i, c) in &pin.terms {
                j[(n + r, i)] += c;
            }
        }
        j
    }
}

/// Least-squares step `J dx = -F` via SVD of the column-equilibrated Jacobian.
fn newton_step(j: DMatrix<f64>, f: &[f64], max_condition: f64) -> Result<Vec<f64>> {
    let cols = j.ncols();
    let mut scale = vec![1.0; cols];
    let mut js = j;
    for c in 0..cols {
        let nrm = js.column(c).norm();
        if nrm == 0.0 {
            return Err(Error::SingularJacobian { condition: f64::INFINITY });
        }
        scale[c] = nrm.recip();
        js.column_mut(c).scale_mut(scale[c]);
    }
    let svd = js.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= max_condition) {
        return Err(Error::SingularJacobian { condition });
    }
    let rhs = DVector::from_iterator(f.len(), f.iter().map(|x| -x));
    let dx = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularJacobian { condition })?;
    Ok(dx.iter().zip(&scale).map(|(d, s)| d * s).collect())
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn newton_solve(
    guess: &StationaryState,
    pins: &[LinearPin],
    norm: Normalization,
    frequency: Frequency,
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    let n = guess.truncation();
    for p in pins {
        for &(i, _) in &p.terms {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, truncation: n });
            }
        }
    }
    let sys = System { n, pins, norm, frequency };
    if sys.equations() < sys.unknowns() {
        return Err(Error::DomainError(format!(
            "{} equations for {} unknowns",
            sys.equations(),
            sys.unknowns()
        )));
    }
    let tol = if sys.equations() > sys.unknowns() { opts.overdetermined_tol.max(opts.tol) } else { opts.tol };

    let mut x: Vec<f64> = guess.amps.clone();
    if matches!(frequency, Frequency::Free) {
        x.push(guess.omega);
    }
    let mut f = sys.residual(&x);
    let mut iterations = 0;
    while inf_norm(&f) > tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: inf_norm(&f) });
        }
        iterations += 1;
        let dx = newton_step(sys.jacobian(&x), &f, opts.max_condition)?;
        let merit = l2(&f);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + t * di).collect();
            let ft = sys.residual(&trial);
            if l2(&ft) < merit || inf_norm(&ft) <= tol {
                x = trial;
                f = ft;
                break;
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::NoConvergence { iterations, residual: inf_norm(&f) });
            }
        }
    }

    // Consistent least-squares systems stop at the looser tolerance; polish
    // while the residual keeps dropping.
    for _ in 0..3 {
        if inf_norm(&f) <= 1e-14 {
            break;
        }
        let Ok(dx) = newton_step(sys.jacobian(&x), &f, opts.max_condition) else { break };
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
        let ft = sys.residual(&trial);
        if inf_norm(&ft) >= inf_norm(&f) {
            break;
        }
        x = trial;
        f = ft;
    }

    for p in pins {
        if let Some(i) = p.single_index() {
            x[i] = p.value;
        }
    }
    let omega = sys.omega(&x);
    x.truncate(n);
    let state = StationaryState::new(x, sys.lambda_of(omega), omega);
    let residual_norm = state.residual_norm();
    Ok(NewtonResult { state, iterations, residual_norm })
}

/// Re-solve at a prescribed `omega` with every amplitude free, starting from
/// a nearby state on the same normalized branch.
pub fn solve_at_omega(seed: &StationaryState, omega: f64, norm: Normalization) -> Result<StationaryState> {
    let mut guess = seed.clone();
    guess.omega = omega;
    guess.lambda = norm.lambda(omega);
    newton_solve(&guess, &[], norm, Frequency::Fixed(omega), &NewtonOptions::default()).map(|r| r.state)
}
