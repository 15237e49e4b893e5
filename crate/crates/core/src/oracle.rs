//! Ensemble averages under the density exp(-beta S^m): exact Gaussian
//! draws for the free theory, site-wise Metropolis otherwise, and the free
//! moment-generating function.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{ModelParams, Sink};
use crate::error::{positive, Error, Result};
use crate::kernels::{KernelKind, KernelMatrix};
use crate::linalg::CMatrix;

pub const DEFAULT_PROPOSAL_WIDTH: f64 = 0.5;
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.3, 0.6);
/// Sweeps between full recomputations of the local fields.
const REFRESH_EVERY: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    GaussianFree,
    Metropolis,
}

#[derive(Debug, Clone)]
pub struct EnsembleSampler {
    mode: SamplerMode,
    beta: f64,
    rng: ChaCha8Rng,
    chol_factor: Option<CMatrix>,
    params: Option<ModelParams>,
    proposal_width: f64,
    phi: Vec<C64>,
    // coupling * phi, kept current during sweeps
    local: Vec<C64>,
    sweeps: u64,
    proposed: u64,
    accepted: u64,
}

/// Metropolis rule with u uniform on [0, 1).
pub fn metropolis_accept(beta: f64, delta_s: f64, u: f64) -> bool {
    delta_s <= 0.0 || u < (-beta * delta_s).exp()
}

#[derive(Debug, Clone)]
pub struct MetropolisRun {
    pub samples: Vec<Vec<C64>>,
    pub acceptance_rate: f64,
    pub proposal_width: f64,
}

impl EnsembleSampler {
    /// Exact sampler for the free theory. `kernel` is D itself.
    pub fn gaussian_free(params: &ModelParams, kernel: &KernelMatrix, seed: u64) -> Result<Self> {
        if params.kappa1 != 0.0 || params.kappa2 != 0.0 {
            return Err(Error::ModeMismatch("exact Gaussian sampling needs kappa1 = kappa2 = 0"));
        }
        if !matches!(kernel.kind, KernelKind::Base(_)) {
            return Err(Error::ModeMismatch("exact Gaussian sampling needs an uninverted kernel"));
        }
        if kernel.n_sites() != params.n_sites() {
            return Err(Error::DimensionMismatch { expected: params.n_sites(), got: kernel.n_sites() });
        }
        let (report, l) = kernel.entries.scale(1.0 / params.beta).cholesky();
        let l = l.ok_or(Error::NotPositiveDefinite {
            index: report.failure_index.unwrap_or(0),
            pivot: report.min_pivot,
        })?;
        Ok(Self::empty(SamplerMode::GaussianFree, params.beta, seed, Some(l), None, 0.0, kernel.n_sites()))
    }

    pub fn metropolis(params: &ModelParams, proposal_width: f64, seed: u64) -> Result<Self> {
        positive("proposal_width", proposal_width)?;
        let n = params.n_sites();
        Ok(Self::empty(SamplerMode::Metropolis, params.beta, seed, None, Some(params.clone()), proposal_width, n))
    }

    fn empty(
        mode: SamplerMode,
        beta: f64,
        seed: u64,
        chol_factor: Option<CMatrix>,
        params: Option<ModelParams>,
        proposal_width: f64,
        n: usize,
    ) -> Self {
        let zero = C64::new(0.0, 0.0);
        EnsembleSampler {
            mode,
            beta,
            rng: ChaCha8Rng::seed_from_u64(seed),
            chol_factor,
            params,
            proposal_width,
            phi: vec![zero; n],
            local: vec![zero; n],
            sweeps: 0,
            proposed: 0,
            accepted: 0,
        }
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn chol_factor(&self) -> Option<&CMatrix> {
        self.chol_factor.as_ref()
    }

    pub fn proposal_width(&self) -> f64 {
        self.proposal_width
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// One draw with <conj(phi(y)) phi(x)> = D(y - x) / beta.
    pub fn sample_free(&mut self) -> Result<Vec<C64>> {
        let l = self
            .chol_factor
            .as_ref()
            .ok_or(Error::ModeMismatch("sample_free needs the Gaussian sampler"))?;
        let n = l.dim();
        let z: Vec<C64> = (0..n)
            .map(|_| {
                let re: f64 = self.rng.sample(StandardNormal);
                let im: f64 = self.rng.sample(StandardNormal);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        // L z has <phi_a conj(phi_b)> = D[a][b] / beta; its conjugate puts
        // the conjugated field in the first slot.
        Ok((0..n)
            .map(|i| {
                let row = l.row(i);
                row[..=i].iter().zip(&z).map(|(a, b)| a * b).sum::<C64>().conj()
            })
            .collect())
    }

    fn refresh_local(&mut self) {
        let p = self.params.as_ref().expect("metropolis sampler has params");
        p.coupling().matvec(&self.phi, &mut self.local);
    }

    /// Action change from replacing phi(x) by phi(x) + d.
    fn delta_action(&self, x: usize, d: C64) -> f64 {
        let p = self.params.as_ref().expect("metropolis sampler has params");
        let q = p.coupling();
        let old = self.phi[x].norm_sqr();
        let new = (self.phi[x] + d).norm_sqr();
        2.0 * (d.conj() * self.local[x]).re + d.norm_sqr() * q[(x, x)].re - p.kappa1 * (new - old)
            + p.kappa2 * (new * new - old * old)
    }

    fn sweep(&mut self) -> (u64, u64) {
        if self.sweeps % REFRESH_EVERY == 0 {
            self.refresh_local();
        }
        let n = self.phi.len();
        let w = self.proposal_width;
        let mut acc = 0;
        for x in 0..n {
            let d = C64::new(
                w * (2.0 * self.rng.random::<f64>() - 1.0),
                w * (2.0 * self.rng.random::<f64>() - 1.0),
            );
            let ds = self.delta_action(x, d);
            let u: f64 = self.rng.random();
            if metropolis_accept(self.beta, ds, u) {
                self.phi[x] += d;
                let q = self.params.as_ref().unwrap().coupling();
                // column x of a Hermitian matrix is the conjugated row
                for (h, qx) in self.local.iter_mut().zip(q.row(x)) {
                    *h += qx.conj() * d;
                }
                acc += 1;
            }
        }
        self.sweeps += 1;
        (n as u64, acc)
    }

    fn require_metropolis(&self) -> Result<()> {
        if self.mode == SamplerMode::Metropolis {
            Ok(())
        } else {
            Err(Error::ModeMismatch("Metropolis sweeps need the Metropolis sampler"))
        }
    }

    /// Burn-in sweeps that adapt the proposal width toward the target
    /// acceptance window. Counters are reset afterwards.
    pub fn tune(&mut self, n_sweeps: u64) -> Result<()> {
        self.require_metropolis()?;
        for _ in 0..n_sweeps {
            let (prop, acc) = self.sweep();
            let rate = acc as f64 / prop as f64;
            if rate < TARGET_ACCEPTANCE.0 {
                self.proposal_width *= 0.9;
            } else if rate > TARGET_ACCEPTANCE.1 {
                self.proposal_width *= 1.1;
            }
        }
        self.proposed = 0;
        self.accepted = 0;
        Ok(())
    }

    /// Run `n_sweeps` fixed-width sweeps, passing every `thin`-th
    /// configuration to the sinks.
    pub fn run_into(&mut self, n_sweeps: u64, thin: u64, sinks: &mut [&mut dyn Sink]) -> Result<()> {
        self.require_metropolis()?;
        if thin == 0 {
            return Err(Error::InvalidParameter { name: "thin", value: 0.0, reason: "must be at least 1" });
        }
        for k in 1..=n_sweeps {
            let (prop, acc) = self.sweep();
            self.proposed += prop;
            self.accepted += acc;
            if k % thin == 0 {
                for s in sinks.iter_mut() {
                    s.observe(&self.phi);
                }
            }
        }
        Ok(())
    }

    pub fn metropolis_chain(&mut self, n_sweeps: u64, thin: u64) -> Result<MetropolisRun> {
        struct Collect(Vec<Vec<C64>>);
        impl Sink for Collect {
            fn observe(&mut self, phi: &[C64]) {
                self.0.push(phi.to_vec());
            }
        }
        let mut c = Collect(Vec::new());
        self.run_into(n_sweeps, thin, &mut [&mut c])?;
        Ok(MetropolisRun {
            samples: c.0,
            acceptance_rate: self.acceptance_rate(),
            proposal_width: self.proposal_width,
        })
    }

    /// Current Metropolis configuration.
    pub fn state(&self) -> &[C64] {
        &self.phi
    }
}

fn check_source(j: &[C64], kernel: &KernelMatrix) -> Result<()> {
    if j.len() != kernel.n_sites() {
        return Err(Error::DimensionMismatch { expected: kernel.n_sites(), got: j.len() });
    }
    Ok(())
}

/// log Z_free[J] = (1/beta) sum_{y,x} conj(J(y)) D(x - y) J(x), the
/// orientation under which d^2 log Z / dJ(y) dconj(J)(x) = D(y - x) / beta.
pub fn log_mgf_free(j: &[C64], kernel: &KernelMatrix, beta: f64) -> Result<f64> {
    check_source(j, kernel)?;
    positive("beta", beta)?;
    let d = &kernel.entries;
    let n = j.len();
    let mut total = C64::new(0.0, 0.0);
    for (y, jy) in j.iter().enumerate() {
        if *jy == C64::new(0.0, 0.0) {
            continue;
        }
        let mut r = C64::new(0.0, 0.0);
        for x in 0..n {
            r += d[(x, y)] * j[x];
        }
        total += jy.conj() * r;
    }
    Ok(total.re / beta)
}

pub fn mgf_free(j: &[C64], kernel: &KernelMatrix, beta: f64) -> Result<f64> {
    Ok(log_mgf_free(j, kernel, beta)?.exp())
}

/// Mixed Wirtinger derivative d^2 log Z / dJ(y) dconj(J)(x) at J = 0 by
/// central differences in the real and imaginary parts of the source.
pub fn two_point_from_mgf(kernel: &KernelMatrix, beta: f64, y: usize, x: usize, h: f64) -> Result<C64> {
    let n = kernel.n_sites();
    for i in [y, x] {
        if i >= n {
            return Err(Error::SiteOutOfRange { index: i, n_sites: n });
        }
    }
    positive("h", h)?;
    let re = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    // d^2 F / da db with a shift along `ua` at y and `ub` at x
    let mixed = |ua: C64, ub: C64| -> Result<f64> {
        let mut f = 0.0;
        for (sa, sb, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let mut j = vec![C64::new(0.0, 0.0); n];
            j[y] += ua * (sa * h);
            j[x] += ub * (sb * h);
            f += w * log_mgf_free(&j, kernel, beta)?;
        }
        Ok(f / (4.0 * h * h))
    };
    // d/dJ = (d/dRe - i d/dIm)/2, d/dconj(J) = (d/dRe + i d/dIm)/2
    let rr = mixed(re, re)?;
    let ii = mixed(im, im)?;
    let ri = mixed(re, im)?;
    let ir = mixed(im, re)?;
    Ok(C64::new(rr + ii, ri - ir) * 0.25)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -z;
        xs[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Radial quadrature of the single-site density
/// exp(-beta (d |phi|^2 - kappa1 |phi|^2 + kappa2 |phi|^4)).
#[derive(Debug, Clone)]
pub struct OneSiteQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    beta: f64,
    a: f64,
    kappa2: f64,
    fmin: f64,
    r_max: f64,
    z: f64,
}

impl OneSiteQuadrature {
    pub fn new(d: f64, kappa1: f64, kappa2: f64, beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        let a = d - kappa1;
        if kappa2 < 0.0 || (kappa2 == 0.0 && a <= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", value: a, reason: "density not normalizable" });
        }
        let f = |r: f64| beta * (a * r * r + kappa2 * r.powi(4));
        // grow R until the integrand is negligible past the mode
        let fmin = (0..=4000).map(|i| f(i as f64 * 1e-3 * 10.0)).fold(f64::INFINITY, f64::min);
        let mut r_max = 1.0;
        while f(r_max) - fmin < 40.0 || f(r_max) < f(0.5 * r_max) {
            r_max *= 1.25;
        }
        let mut q = OneSiteQuadrature { nodes: Vec::new(), weights: Vec::new(), beta, a, kappa2, fmin, r_max, z: 1.0 };
        let (nodes, mut weights) = q.panel_rule(r_max);
        q.z = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= q.z);
        q.nodes = nodes;
        q.weights = weights;
        Ok(q)
    }

    /// Unnormalized radial measure r exp(-f(r)) on [0, upper], 40 panels of 40 points.
    fn panel_rule(&self, upper: f64) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(40);
        let panels = 40;
        let hp = upper / panels as f64;
        let mut nodes = Vec::with_capacity(panels * x.len());
        let mut weights = Vec::with_capacity(panels * x.len());
        for k in 0..panels {
            let lo = k as f64 * hp;
            for (xi, wi) in x.iter().zip(&w) {
                let r = lo + 0.5 * hp * (xi + 1.0);
                let f = self.beta * (self.a * r * r + self.kappa2 * r.powi(4));
                nodes.push(r);
                weights.push(0.5 * hp * wi * r * (-(f - self.fmin)).exp());
            }
        }
        (nodes, weights)
    }

    /// Expectation of g(|phi|).
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(r, w)| w * g(*r)).sum()
    }

    pub fn mean_abs2(&self) -> f64 {
        self.expect(|r| r * r)
    }

    pub fn prob_radius_below(&self, r0: f64) -> f64 {
        if r0 <= 0.0 {
            return 0.0;
        }
        let (_, w) = self.panel_rule(r0.min(self.r_max));
        w.iter().sum::<f64>() / self.z
    }
}

/// Complex standard error combining both components.
pub fn complex_se(err: (f64, f64)) -> f64 {
    err.0.hypot(err.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub y: usize,
    pub x: usize,
    pub dynamics: Option<(C64, (f64, f64))>,
    pub ensemble: (C64, (f64, f64)),
    pub exact: Option<C64>,
}

impl ComparisonRow {
    /// |dynamics - ensemble| over the combined complex standard error.
    pub fn z_dynamics_ensemble(&self) -> Option<f64> {
        let (m, e) = self.dynamics?;
        let se = complex_se(e).hypot(complex_se(self.ensemble.1));
        Some((m - self.ensemble.0).norm() / se)
    }

    pub fn z_ensemble_exact(&self) -> Option<f64> {
        Some((self.ensemble.0 - self.exact?).norm() / complex_se(self.ensemble.1))
    }

    pub fn z_dynamics_exact(&self) -> Option<f64> {
        let (m, e) = self.dynamics?;
        Some((m - self.exact?).norm() / complex_se(e))
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(
        "y,x,dyn_re,dyn_im,dyn_err_re,dyn_err_im,ens_re,ens_im,ens_err_re,ens_err_im,exact_re,exact_im,z_dyn_ens,z_ens_exact,z_dyn_exact\n",
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.10e}"));
    for r in rows {
        let dynamics = match r.dynamics {
            Some((m, e)) => format!("{:.10e},{:.10e},{:.10e},{:.10e}", m.re, m.im, e.0, e.1),
            None => "no dynamics data,no dynamics data,no dynamics data,no dynamics data".to_string(),
        };
        let (m, e) = r.ensemble;
        s.push_str(&format!(
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{},{},{}\n",
            r.y,
            r.x,
            dynamics,
            m.re,
            m.im,
            e.0,
            e.1,
            opt(r.exact.map(|z| z.re)),
            opt(r.exact.map(|z| z.im)),
            opt(r.z_dynamics_ensemble()),
            opt(r.z_ensemble_exact()),
            opt(r.z_dynamics_exact()),
        ));
    }
    s
}
