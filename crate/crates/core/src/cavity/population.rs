//! Population dynamics over a degree ensemble.
//!
//! Two populations are evolved: `q_i` (messages qubit → bond) and `q_a`
//! (clause → bond). A clause update reads `k-1` random `q_i`; a qubit update
//! reads an excess-degree number of random `q_a`, the excess degree being the
//! size-biased degree minus one.
//!
//! Per core qubit, with `kβ` the mean qubit degree,
//! `F/N_c = β E[F_a] + E_d[F_i] + kβ (E[F_α] − E[F_iα] − E[F_aα])`.

use rand::Rng;

use super::messages::{clause_occupancy, edge_term, update_q, vertex_term};
use super::CavityReport;
use crate::degree::{DegreeLaw, DegreeSampler};
use crate::error::{QsatError, Result};
use crate::rng::RngSpec;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PopulationOptions {
    pub pop_size: usize,
    pub sweeps: usize,
    /// Fraction of sweeps discarded before averaging.
    pub burn_in: f64,
    /// Observable samples drawn per post-burn-in sweep; 0 means `pop_size`.
    pub samples_per_sweep: usize,
    /// Allowed change of the population means between the two halves of the
    /// averaging window.
    pub drift_tol: f64,
    pub rng: RngSpec,
}

impl Default for PopulationOptions {
    fn default() -> Self {
        Self {
            pop_size: 10_000,
            sweeps: 4000,
            burn_in: 0.75,
            samples_per_sweep: 0,
            drift_tol: 1e-2,
            rng: RngSpec::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CavityPopulation<T> {
    pub q_i: Vec<T>,
    pub q_a: Vec<T>,
    pub lambda: T,
    pub k: usize,
    pub degree_law: DegreeLaw<T>,
    sampler: DegreeSampler,
}

impl<T: Scalar> CavityPopulation<T> {
    pub fn new<R: Rng + ?Sized>(
        degree_law: DegreeLaw<T>,
        k: usize,
        lambda: T,
        size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(QsatError::InvalidParameter(format!("fugacity must be positive and finite, got {lambda}")));
        }
        if size == 0 || k < 2 {
            return Err(QsatError::InvalidParameter("population needs size > 0 and k >= 2".into()));
        }
        if !degree_law.is_normalized() {
            return Err(QsatError::InvalidParameter("degree law is not normalized".into()));
        }
        let sampler = degree_law.sampler();
        Ok(Self {
            q_i: (0..size).map(|_| T::of(rng.random::<f64>())).collect(),
            q_a: (0..size).map(|_| T::of(rng.random::<f64>())).collect(),
            lambda,
            k,
            degree_law,
            sampler,
        })
    }

    pub fn len(&self) -> usize {
        self.q_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_i.is_empty()
    }

    /// Clause density `β = E[d]/k` of the ensemble.
    pub fn beta(&self) -> T {
        self.degree_law.mean() / T::of_usize(self.k)
    }

    fn pick<R: Rng + ?Sized>(pop: &[T], rng: &mut R) -> T {
        pop[rng.random_range(0..pop.len())]
    }

    /// One sweep: `len()` random replacements in each population.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.len();
        for _ in 0..n {
            let q = update_q((1..self.k).map(|_| Self::pick(&self.q_i, rng)), self.lambda);
            let t = rng.random_range(0..n);
            self.q_a[t] = q;
        }
        for _ in 0..n {
            let ex = self.sampler.excess(rng);
            let q = update_q((0..ex).map(|_| Self::pick(&self.q_a, rng)), self.lambda);
            let t = rng.random_range(0..n);
            self.q_i[t] = q;
        }
    }

    /// One Monte-Carlo estimate of `(F/N_c, ⟨n_a⟩)`.
    fn sample_observables<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<T>) -> (T, T) {
        let beta = self.beta();
        let kf = T::of_usize(self.k);
        buf.clear();
        buf.extend((0..self.k).map(|_| Self::pick(&self.q_i, rng)));
        let f_a = vertex_term(buf);
        let n_a = clause_occupancy(buf);
        let d = self.sampler.degree(rng);
        buf.clear();
        buf.extend((0..d).map(|_| Self::pick(&self.q_a, rng)));
        let f_i = vertex_term(buf);
        let qa = Self::pick(&self.q_a, rng);
        let qi = Self::pick(&self.q_i, rng);
        // F_α − F_iα − F_aα: the three edge terms coincide under the
        // message redundancies
        let f_edges = -edge_term(qa, qi, self.lambda);
        (beta * f_a + f_i + kf * beta * f_edges, n_a)
    }

    fn means(&self) -> (f64, f64) {
        let m = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).sum::<f64>() / v.len() as f64;
        (m(&self.q_i), m(&self.q_a))
    }
}

/// Runs population dynamics and averages observables over the post-burn-in
/// window. Non-convergence (moment drift above `drift_tol`) is flagged in
/// the report.
pub fn population_dynamics<T: Scalar>(
    degree_law: &DegreeLaw<T>,
    k: usize,
    lambda: T,
    opts: &PopulationOptions,
) -> Result<CavityReport<T>> {
    if opts.sweeps == 0 || !(0.0..1.0).contains(&opts.burn_in) {
        return Err(QsatError::InvalidParameter("need sweeps > 0 and burn_in in [0, 1)".into()));
    }
    let mut rng = opts.rng.rng();
    let mut pop = CavityPopulation::new(degree_law.clone(), k, lambda, opts.pop_size, &mut rng)?;
    let start = ((opts.sweeps as f64) * opts.burn_in).floor() as usize;
    let start = start.min(opts.sweeps - 1);
    let window = opts.sweeps - start;
    let per_sweep = if opts.samples_per_sweep == 0 { opts.pop_size } else { opts.samples_per_sweep };

    let mut buf = Vec::new();
    let mut sweep_f = Vec::with_capacity(window);
    let mut sweep_n = Vec::with_capacity(window);
    let mut moments = Vec::with_capacity(window);
    for s in 0..opts.sweeps {
        pop.sweep(&mut rng);
        if s >= start {
            let mut f = 0.0;
            let mut n = 0.0;
            for _ in 0..per_sweep {
                let (fs, ns) = pop.sample_observables(&mut rng, &mut buf);
                f += fs.to_f64_lossy();
                n += ns.to_f64_lossy();
            }
            sweep_f.push(f / per_sweep as f64);
            sweep_n.push(n / per_sweep as f64);
            moments.push(pop.means());
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let f = mean(&sweep_f);
    let n_a = mean(&sweep_n);
    if !f.is_finite() {
        return Err(QsatError::NumericalDomain { term: "population free energy".into(), value: f });
    }
    // per-sweep averages are correlated; a batch estimate is more honest
    let std_err = batch_std_err(&sweep_f, 10);
    let drift = if moments.len() >= 2 {
        let h = moments.len() / 2;
        let first = moments[..h].iter().fold((0.0, 0.0), |a, m| (a.0 + m.0, a.1 + m.1));
        let second = moments[h..].iter().fold((0.0, 0.0), |a, m| (a.0 + m.0, a.1 + m.1));
        let (n1, n2) = (h as f64, (moments.len() - h) as f64);
        ((first.0 / n1 - second.0 / n2).abs()).max((first.1 / n1 - second.1 / n2).abs())
    } else {
        0.0
    };
    let mut report = CavityReport::new(T::of(f), T::of(n_a), pop.beta(), lambda);
    report.sweeps = opts.sweeps;
    report.drift = T::of(drift);
    report.converged = drift <= opts.drift_tol;
    report.std_err = T::of(std_err);
    Ok(report)
}

fn batch_std_err(xs: &[f64], batches: usize) -> f64 {
    let b = batches.min(xs.len());
    if b < 2 {
        return 0.0;
    }
    let size = xs.len() / b;
    let means: Vec<f64> = (0..b).map(|i| xs[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::regular_fixed_point;

    fn quick(pop: usize, sweeps: usize) -> PopulationOptions {
        PopulationOptions {
            pop_size: pop,
            sweeps,
            samples_per_sweep: 200,
            rng: RngSpec::new(7, 0),
            ..Default::default()
        }
    }

    #[test]
    fn regular_population_matches_closed_form() {
        let law = DegreeLaw::<f64>::Regular(3);
        let r = population_dynamics(&law, 3, 100.0, &quick(500, 200)).unwrap();
        let exact = regular_fixed_point::<f64>(3, 3, 100.0).unwrap().report;
        assert!((r.free_energy_density - exact.free_energy_density).abs() < 1e-3);
        assert!((r.occupancy - exact.occupancy).abs() < 1e-3);
        assert!(r.converged);
    }

    #[test]
    fn messages_stay_in_range() {
        let law = DegreeLaw::core(2.149f64);
        let mut rng = RngSpec::new(3, 0).rng();
        let mut pop = CavityPopulation::new(law, 3, 1e4, 300, &mut rng).unwrap();
        for _ in 0..20 {
            pop.sweep(&mut rng);
            assert!(pop.q_i.iter().chain(&pop.q_a).all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn invalid_options() {
        let law = DegreeLaw::<f64>::Regular(3);
        assert!(population_dynamics(&law, 3, -1.0, &quick(10, 10)).is_err());
        let opts = PopulationOptions { burn_in: 1.0, ..quick(10, 10) };
        assert!(population_dynamics(&law, 3, 1.0, &opts).is_err());
    }
}
