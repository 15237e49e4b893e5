//! Extended phase-space action and its time-reversible integrator.
//!
//! The field couples to a global bath (s, pi_s). The total action
//! S = s (S^x - S0) is conserved along the flow, and the integrator is the
//! generalized leapfrog for Hamiltonians of Nosé-Poincaré type.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{positive, Error, Result};
use crate::kernels::{read_f64, read_u64, KernelKind, KernelMatrix};
use crate::linalg::CMatrix;

/// Largest radius of the initial momentum distribution.
pub const INIT_MOMENTUM_RADIUS: f64 = 1.75;
/// Tolerated imaginary residue of the quadratic form.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub beta: f64,
    pub m_s: f64,
    pub n_f: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kernel_inverse: Arc<KernelMatrix>,
    /// Matrix of the quadratic form: coupling[(y, x)] multiplies conj(phi_y) phi_x.
    coupling: CMatrix,
}

impl ModelParams {
    /// Defaults m_s = N and n_f = 2N.
    pub fn new(kernel_inverse: Arc<KernelMatrix>, beta: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        positive("beta", beta)?;
        if !matches!(kernel_inverse.kind, KernelKind::InverseOf(_)) {
            return Err(Error::Format("model needs an inverted kernel".into()));
        }
        for (name, v) in [("kappa1", kappa1), ("kappa2", kappa2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v, reason: "must be finite" });
            }
        }
        let n = kernel_inverse.n_sites() as f64;
        // With this orientation <conj(phi_y) phi_x> = D(y - x) / beta.
        let coupling = kernel_inverse.entries.transpose();
        Ok(ModelParams {
            beta,
            m_s: n,
            n_f: 2.0 * n,
            kappa1,
            kappa2,
            kernel_inverse,
            coupling,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.coupling.dim()
    }

    pub fn coupling(&self) -> &CMatrix {
        &self.coupling
    }

    fn check_len(&self, v: &[C64]) -> Result<()> {
        if v.len() == self.n_sites() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n_sites(), got: v.len() })
        }
    }

    /// Action and force from a single matrix-vector product.
    fn action_and_force(&self, phi: &[C64], force: &mut [C64]) -> Result<f64> {
        self.coupling.matvec(phi, force);
        let mut quad = C64::new(0.0, 0.0);
        let mut local = 0.0;
        for (f, p) in force.iter_mut().zip(phi) {
            quad += p.conj() * *f;
            let r2 = p.norm_sqr();
            local += -self.kappa1 * r2 + self.kappa2 * r2 * r2;
            *f += p * (2.0 * self.kappa2 * r2 - self.kappa1);
        }
        if quad.im.abs() > IMAG_RESIDUE_TOL * quad.re.abs().max(1.0) {
            return Err(Error::ImaginaryResidue(quad.im));
        }
        Ok(quad.re + local)
    }
}

pub fn matter_action(phi: &[C64], p: &ModelParams) -> Result<f64> {
    p.check_len(phi)?;
    let mut scratch = vec![C64::new(0.0, 0.0); phi.len()];
    p.action_and_force(phi, &mut scratch)
}

/// dS^m / d conj(phi(x)) for every site.
pub fn matter_force(phi: &[C64], p: &ModelParams) -> Result<Vec<C64>> {
    p.check_len(phi)?;
    let mut force = vec![C64::new(0.0, 0.0); phi.len()];
    p.action_and_force(phi, &mut force)?;
    Ok(force)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    pub phi: Vec<C64>,
    pub pi_phi: Vec<C64>,
    pub s: f64,
    pub pi_s: f64,
    pub s0_action: f64,
    pub lambda: f64,
    pub step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedAction {
    pub s_x: f64,
    pub s_total: f64,
}

fn kinetic(pi: &[C64]) -> f64 {
    pi.iter().map(|z| z.norm_sqr()).sum()
}

fn s_x_from(kin: f64, s: f64, pi_s: f64, action: f64, p: &ModelParams) -> f64 {
    kin / (s * s) + pi_s * pi_s / (2.0 * p.m_s) + action + p.n_f / p.beta * s.ln()
}

/// dS_total/ds without the pi_s^2 term.
fn ds_partial(kin: f64, s: f64, action: f64, s0: f64, p: &ModelParams) -> f64 {
    -kin / (s * s) + action + p.n_f / p.beta * (1.0 + s.ln()) - s0
}

pub fn extended_action(state: &PhaseSpaceState, p: &ModelParams) -> Result<ExtendedAction> {
    if !(state.s > 0.0) {
        return Err(Error::InvalidParameter { name: "s", value: state.s, reason: "must be positive" });
    }
    let v = matter_action(&state.phi, p)?;
    let s_x = s_x_from(kinetic(&state.pi_phi), state.s, state.pi_s, v, p);
    Ok(ExtendedAction { s_x, s_total: state.s * (s_x - state.s0_action) })
}

/// phi = 0, pi = r e^{i theta} with r ~ U[0, 1.75], theta ~ U[0, 2 pi),
/// s = 1, pi_s = 0 and S0 equal to S^x of this configuration.
pub fn init_state(n_sites: usize, p: &ModelParams, seed: u64) -> Result<PhaseSpaceState> {
    if n_sites != p.n_sites() {
        return Err(Error::DimensionMismatch { expected: p.n_sites(), got: n_sites });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi_phi: Vec<C64> = (0..n_sites)
        .map(|_| {
            let r = INIT_MOMENTUM_RADIUS * rng.random::<f64>();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            C64::from_polar(r, theta)
        })
        .collect();
    let mut state = PhaseSpaceState {
        phi: vec![C64::new(0.0, 0.0); n_sites],
        pi_phi,
        s: 1.0,
        pi_s: 0.0,
        s0_action: 0.0,
        lambda: 0.0,
        step: 0,
    };
    state.s0_action = extended_action(&state, p)?.s_x;
    Ok(state)
}

/// Leapfrog stepper that reuses the force from the end of the previous step.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    dlambda: f64,
    cache_phi: Vec<C64>,
    force: Vec<C64>,
    action: f64,
    valid: bool,
}

impl Leapfrog {
    pub fn new(dlambda: f64) -> Result<Self> {
        positive("dlambda", dlambda)?;
        Ok(Leapfrog { dlambda, cache_phi: Vec::new(), force: Vec::new(), action: 0.0, valid: false })
    }

    pub fn dlambda(&self) -> f64 {
        self.dlambda
    }

    fn refresh(&mut self, phi: &[C64], p: &ModelParams) -> Result<()> {
        if self.valid && self.cache_phi == phi {
            return Ok(());
        }
        self.force.resize(phi.len(), C64::new(0.0, 0.0));
        self.action = p.action_and_force(phi, &mut self.force)?;
        self.cache_phi.clear();
        self.cache_phi.extend_from_slice(phi);
        self.valid = true;
        Ok(())
    }

    /// Matter action at the current configuration (after the last step).
    pub fn matter_action(&self) -> Option<f64> {
        self.valid.then_some(self.action)
    }

    pub fn step(&mut self, st: &mut PhaseSpaceState, p: &ModelParams) -> Result<()> {
        p.check_len(&st.phi)?;
        p.check_len(&st.pi_phi)?;
        let fail = |s: f64| Error::IntegratorFailure { step: st.step + 1, s };
        if !(st.s > 0.0) {
            return Err(fail(st.s));
        }
        self.refresh(&st.phi, p)?;
        let h = self.dlambda;
        let hh = 0.5 * h;
        let s = st.s;

        for (pi, f) in st.pi_phi.iter_mut().zip(&self.force) {
            *pi -= f * (hh * s);
        }
        let kin = kinetic(&st.pi_phi);

        // implicit half step for pi_s: quadratic in the new value
        let c = st.pi_s - hh * ds_partial(kin, s, self.action, st.s0_action, p);
        let disc = 1.0 + h * c / p.m_s;
        if !(disc >= 0.0) {
            return Err(fail(f64::NAN));
        }
        let pi_s_half = 2.0 * c / (1.0 + disc.sqrt());

        let a = h * pi_s_half / (2.0 * p.m_s);
        let s_new = s * (1.0 + a) / (1.0 - a);
        if !(s_new > 0.0) || !s_new.is_finite() {
            return Err(fail(s_new));
        }

        let w = hh * (1.0 / s + 1.0 / s_new);
        for (phi, pi) in st.phi.iter_mut().zip(&st.pi_phi) {
            *phi += pi * w;
        }
        self.valid = false;
        self.refresh(&st.phi, p)?;

        st.pi_s = pi_s_half
            - hh * (ds_partial(kin, s_new, self.action, st.s0_action, p)
                + pi_s_half * pi_s_half / (2.0 * p.m_s));
        for (pi, f) in st.pi_phi.iter_mut().zip(&self.force) {
            *pi -= f * (hh * s_new);
        }
        st.s = s_new;
        st.lambda += h;
        st.step += 1;
        Ok(())
    }

    /// Total action of `st`, reusing the cached matter action when current.
    pub fn total_action(&mut self, st: &PhaseSpaceState, p: &ModelParams) -> Result<f64> {
        self.refresh(&st.phi, p)?;
        let s_x = s_x_from(kinetic(&st.pi_phi), st.s, st.pi_s, self.action, p);
        Ok(st.s * (s_x - st.s0_action))
    }
}

pub fn leapfrog_step(state: &PhaseSpaceState, p: &ModelParams, dlambda: f64) -> Result<PhaseSpaceState> {
    let mut next = state.clone();
    Leapfrog::new(dlambda)?.step(&mut next, p)?;
    Ok(next)
}

/// Receives field configurations during production.
pub trait Sink {
    fn observe(&mut self, phi: &[C64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPlan {
    pub n_equil: u64,
    pub n_prod: u64,
    pub dlambda: f64,
    /// Feed the sinks every `thin` production steps.
    pub thin: u64,
    /// Zero disables checkpoints.
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryReport {
    pub steps: u64,
    pub samples: u64,
    /// max |S_total| over all steps.
    pub max_abs_action: f64,
    /// max |S_total| over production steps only.
    pub max_abs_action_prod: f64,
    pub sum_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

impl TrajectoryReport {
    pub fn mean_s(&self) -> Option<f64> {
        (self.steps > 0).then(|| self.sum_s / self.steps as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&self.steps.to_le_bytes());
        b.extend_from_slice(&self.samples.to_le_bytes());
        for v in [self.max_abs_action, self.max_abs_action_prod, self.sum_s, self.min_s, self.max_s] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(r: &mut impl Read) -> Result<Self> {
        Ok(TrajectoryReport {
            steps: read_u64(r)?,
            samples: read_u64(r)?,
            max_abs_action: read_f64(r)?,
            max_abs_action_prod: read_f64(r)?,
            sum_s: read_f64(r)?,
            min_s: read_f64(r)?,
            max_s: read_f64(r)?,
        })
    }
}

pub type CheckpointHook<'a> = dyn FnMut(&PhaseSpaceState, &TrajectoryReport) -> Result<()> + 'a;

pub fn run_trajectory(
    state: &mut PhaseSpaceState,
    p: &ModelParams,
    plan: &RunPlan,
    sinks: &mut [&mut dyn Sink],
    checkpoint: Option<&mut CheckpointHook<'_>>,
) -> Result<TrajectoryReport> {
    let mut report = TrajectoryReport::default();
    continue_trajectory(state, &mut report, p, plan, sinks, checkpoint)?;
    Ok(report)
}

/// Advance `state` until `plan.n_equil + plan.n_prod` total steps.
/// Picks up where a checkpoint left off when `state.step > 0`.
pub fn continue_trajectory(
    state: &mut PhaseSpaceState,
    report: &mut TrajectoryReport,
    p: &ModelParams,
    plan: &RunPlan,
    sinks: &mut [&mut dyn Sink],
    mut checkpoint: Option<&mut CheckpointHook<'_>>,
) -> Result<()> {
    if plan.thin == 0 {
        return Err(Error::InvalidParameter { name: "thin", value: 0.0, reason: "must be at least 1" });
    }
    let total = plan.n_equil + plan.n_prod;
    let mut lf = Leapfrog::new(plan.dlambda)?;
    if report.steps == 0 {
        report.min_s = f64::INFINITY;
        report.max_s = f64::NEG_INFINITY;
    }
    while state.step < total {
        lf.step(state, p)?;
        let s_total = lf.total_action(state, p)?.abs();
        report.steps += 1;
        report.max_abs_action = report.max_abs_action.max(s_total);
        report.sum_s += state.s;
        report.min_s = report.min_s.min(state.s);
        report.max_s = report.max_s.max(state.s);
        if state.step > plan.n_equil {
            report.max_abs_action_prod = report.max_abs_action_prod.max(s_total);
            if (state.step - plan.n_equil) % plan.thin == 0 {
                for sink in sinks.iter_mut() {
                    sink.observe(&state.phi);
                }
                report.samples += 1;
            }
        }
        if plan.checkpoint_every > 0 && state.step % plan.checkpoint_every == 0 {
            if let Some(hook) = checkpoint.as_mut() {
                hook(state, report)?;
            }
        }
    }
    Ok(())
}

const STATE_MAGIC: &[u8; 6] = b"MSFTS1";

impl PhaseSpaceState {
    /// Checkpoint layout: magic, u64 step, f64 lambda, s, pi_s, s0_action,
    /// u64 N, then phi and pi_phi as (re, im) pairs, little-endian.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let mut b = Vec::with_capacity(62 + 32 * self.phi.len());
        b.extend_from_slice(STATE_MAGIC);
        b.extend_from_slice(&self.step.to_le_bytes());
        for v in [self.lambda, self.s, self.pi_s, self.s0_action] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(self.phi.len() as u64).to_le_bytes());
        for z in self.phi.iter().chain(&self.pi_phi) {
            b.extend_from_slice(&z.re.to_le_bytes());
            b.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&b)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != STATE_MAGIC {
            return Err(Error::Format("not a state checkpoint".into()));
        }
        let step = read_u64(r)?;
        let lambda = read_f64(r)?;
        let s = read_f64(r)?;
        let pi_s = read_f64(r)?;
        let s0_action = read_f64(r)?;
        let n = read_u64(r)? as usize;
        let read_vec = |r: &mut dyn Read| -> Result<Vec<C64>> {
            let mut raw = vec![0u8; 16 * n];
            r.read_exact(&mut raw)?;
            Ok(raw
                .chunks_exact(16)
                .map(|c| {
                    C64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect())
        };
        let phi = read_vec(r)?;
        let pi_phi = read_vec(r)?;
        Ok(PhaseSpaceState { phi, pi_phi, s, pi_s, s0_action, lambda, step })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
