//! Regularized two-point kernels on the lattice and their inverses.
//!
//! Kernels A and B are discrete momentum sums, kernel C is the spacetime
//! form built from Bessel functions. Every kernel is a function of the
//! separation y - x and is stored as a dense Hermitian matrix with
//! `entries[(y, x)] = D(y - x)`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{positive, Error, Result};
use crate::lattice::{Boundary, FourVector, Lattice};
use crate::linalg::{CMatrix, CholeskyReport};
use crate::special::{bessel_j1, bessel_k1, bessel_y1};

/// Relative Hermiticity tolerance accepted before factorization.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentumMode {
    /// p_mu = k with unit spacing.
    Integer,
    /// p_mu = 2 pi k / extent.
    Brillouin,
}

impl MomentumMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentumMode::Integer => "integer",
            MomentumMode::Brillouin => "brillouin",
        }
    }
}

impl std::str::FromStr for MomentumMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integer" => Ok(MomentumMode::Integer),
            "brillouin" => Ok(MomentumMode::Brillouin),
            _ => Err(Error::Format(format!("unknown momentum mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseKind {
    A,
    B,
    C,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::A => "A",
            BaseKind::B => "B",
            BaseKind::C => "C",
        }
    }
}

impl std::str::FromStr for BaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(BaseKind::A),
            "B" | "b" => Ok(BaseKind::B),
            "C" | "c" => Ok(BaseKind::C),
            _ => Err(Error::Format(format!("unknown kernel kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Base(BaseKind),
    InverseOf(BaseKind),
    PauliJordan,
}

impl KernelKind {
    fn tag(self) -> u8 {
        match self {
            KernelKind::Base(BaseKind::A) => 0,
            KernelKind::Base(BaseKind::B) => 1,
            KernelKind::Base(BaseKind::C) => 2,
            KernelKind::InverseOf(BaseKind::A) => 3,
            KernelKind::InverseOf(BaseKind::B) => 4,
            KernelKind::InverseOf(BaseKind::C) => 5,
            KernelKind::PauliJordan => 6,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        Ok(match t {
            0 => KernelKind::Base(BaseKind::A),
            1 => KernelKind::Base(BaseKind::B),
            2 => KernelKind::Base(BaseKind::C),
            3 => KernelKind::InverseOf(BaseKind::A),
            4 => KernelKind::InverseOf(BaseKind::B),
            5 => KernelKind::InverseOf(BaseKind::C),
            6 => KernelKind::PauliJordan,
            _ => return Err(Error::Format(format!("unknown kernel tag {t}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub mass: f64,
    pub alpha: f64,
    pub momentum_mode: MomentumMode,
    /// Only used by kernel C; zero otherwise.
    pub pv_displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: CMatrix,
    pub kind: KernelKind,
    pub params: KernelParams,
    pub lattice: Lattice,
}

pub fn smooth_step(b: f64, alpha: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    Ok(theta(b, alpha))
}

pub fn smooth_delta(b: f64, alpha: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    Ok(delta(b, alpha))
}

fn theta(b: f64, alpha: f64) -> f64 {
    0.5 + (b / alpha).atan() / PI
}

fn delta(b: f64, alpha: f64) -> f64 {
    alpha / (PI * (alpha * alpha + b * b))
}

/// Integer mode numbers -floor((L-1)/2) ..= floor(L/2).
pub fn mode_numbers(extent: usize) -> Vec<i64> {
    let lo = -(((extent - 1) / 2) as i64);
    (0..extent as i64).map(|k| lo + k).collect()
}

/// Momentum component values and the spacing Δp for a given mode.
pub fn momenta(extent: usize, mode: MomentumMode) -> (Vec<f64>, f64) {
    let ks = mode_numbers(extent);
    match mode {
        MomentumMode::Integer => (ks.iter().map(|&k| k as f64).collect(), 1.0),
        MomentumMode::Brillouin => {
            let dp = 2.0 * PI / extent as f64;
            (ks.iter().map(|&k| dp * k as f64).collect(), dp)
        }
    }
}

/// Range of integer separation components produced by `Lattice::separation`.
fn separation_range(lat: &Lattice) -> (i64, i64) {
    let l = lat.extent() as i64;
    match lat.boundary() {
        Boundary::Periodic => {
            let h = (l - 1) / 2;
            (-h, l - 1 - h)
        }
        Boundary::Open => (-(l - 1), l - 1),
    }
}

/// Evaluate `f` once per distinct separation and fill the matrix.
fn tabulate(lat: &Lattice, f: impl Fn([i64; 4]) -> C64 + Sync) -> CMatrix {
    let (lo, hi) = separation_range(lat);
    let w = (hi - lo + 1) as usize;
    let table: Vec<C64> = (0..w.pow(4))
        .into_par_iter()
        .map(|mut i| {
            let mut d = [0i64; 4];
            for mu in (0..4).rev() {
                d[mu] = (i % w) as i64 + lo;
                i /= w;
            }
            f(d)
        })
        .collect();
    let idx = |d: [i64; 4]| {
        d.iter()
            .fold(0usize, |acc, &c| acc * w + (c - lo) as usize)
    };
    let mut m = CMatrix::from_fn(lat.n_sites(), |y, x| table[idx(lat.separation_ints(y, x))]);
    m.hermitize();
    m
}

/// norm * sum_p weight(p) e^{-i p.d} with separable phase tables.
fn momentum_sum(
    lat: &Lattice,
    mode: MomentumMode,
    weight: impl Fn([f64; 4]) -> C64,
) -> CMatrix {
    let l = lat.extent();
    let (ps, dp) = momenta(l, mode);
    let norm = dp.powi(4) / (2.0 * PI).powi(3);
    let mut weights = Vec::with_capacity(l.pow(4));
    for &p0 in &ps {
        for &p1 in &ps {
            for &p2 in &ps {
                for &p3 in &ps {
                    weights.push(weight([p0, p1, p2, p3]) * norm);
                }
            }
        }
    }
    let (lo, hi) = separation_range(lat);
    let w = (hi - lo + 1) as usize;
    // phase[mu][k][d - lo] = exp(-i eta_mu p_k d)
    let phase: Vec<Vec<Vec<C64>>> = (0..4)
        .map(|mu| {
            let sign = if mu == 0 { 1.0 } else { -1.0 };
            ps.iter()
                .map(|&p| {
                    (lo..=hi)
                        .map(|d| C64::from_polar(1.0, -sign * p * d as f64))
                        .collect()
                })
                .collect()
        })
        .collect();
    tabulate(lat, |d| {
        let j: [usize; 4] = std::array::from_fn(|mu| (d[mu] - lo) as usize);
        debug_assert!(j.iter().all(|&v| v < w));
        let mut acc = C64::new(0.0, 0.0);
        let mut n = 0;
        for k0 in 0..l {
            let e0 = phase[0][k0][j[0]];
            for k1 in 0..l {
                let e01 = e0 * phase[1][k1][j[1]];
                for k2 in 0..l {
                    let e012 = e01 * phase[2][k2][j[2]];
                    for k3 in 0..l {
                        acc += weights[n] * (e012 * phase[3][k3][j[3]]);
                        n += 1;
                    }
                }
            }
        }
        acc
    })
}

fn check_params(m: f64, alpha: f64) -> Result<()> {
    positive("mass", m)?;
    positive("alpha", alpha)
}

pub fn build_kernel_a(lat: &Lattice, m: f64, alpha: f64, mode: MomentumMode) -> Result<KernelMatrix> {
    check_params(m, alpha)?;
    let entries = momentum_sum(lat, mode, |p| {
        let pp = p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3];
        C64::new(theta(p[0], alpha) * delta(pp - m * m, alpha), 0.0)
    });
    Ok(KernelMatrix {
        entries,
        kind: KernelKind::Base(BaseKind::A),
        params: KernelParams {
            mass: m,
            alpha,
            momentum_mode: mode,
            pv_displacement: 0.0,
        },
        lattice: *lat,
    })
}

pub fn build_kernel_b(lat: &Lattice, m: f64, alpha: f64, mode: MomentumMode) -> Result<KernelMatrix> {
    check_params(m, alpha)?;
    let entries = momentum_sum(lat, mode, |p| {
        let e = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3] + m * m).sqrt();
        C64::new(delta(p[0] - e, alpha) / (2.0 * e), 0.0)
    });
    Ok(KernelMatrix {
        entries,
        kind: KernelKind::Base(BaseKind::B),
        params: KernelParams {
            mass: m,
            alpha,
            momentum_mode: mode,
            pv_displacement: 0.0,
        },
        lattice: *lat,
    })
}

/// Discrete Pauli-Jordan function with δ replaced by δ_α. Real and odd.
pub fn pauli_jordan(lat: &Lattice, m: f64, alpha: f64, mode: MomentumMode) -> Result<KernelMatrix> {
    check_params(m, alpha)?;
    let l = lat.extent();
    let (ps, dp) = momenta(l, mode);
    let norm = dp.powi(4) / (2.0 * PI).powi(3);
    let mut terms = Vec::new();
    for &p0 in &ps {
        if p0 == 0.0 {
            continue;
        }
        for &p1 in &ps {
            for &p2 in &ps {
                for &p3 in &ps {
                    let pp = p0 * p0 - p1 * p1 - p2 * p2 - p3 * p3;
                    terms.push((p0.signum() * delta(pp - m * m, alpha) * norm, [p0, p1, p2, p3]));
                }
            }
        }
    }
    let (lo, hi) = separation_range(lat);
    let w = (hi - lo + 1) as usize;
    let table: Vec<f64> = (0..w.pow(4))
        .into_par_iter()
        .map(|mut i| {
            let mut d = [0f64; 4];
            for mu in (0..4).rev() {
                d[mu] = ((i % w) as i64 + lo) as f64;
                i /= w;
            }
            // -i * sum c e^{-i p.d}; the cosine part cancels between ±p
            -terms
                .iter()
                .map(|(c, p)| c * (p[0] * d[0] - p[1] * d[1] - p[2] * d[2] - p[3] * d[3]).sin())
                .sum::<f64>()
        })
        .collect();
    let idx = |d: [i64; 4]| d.iter().fold(0usize, |acc, &c| acc * w + (c - lo) as usize);
    let entries = CMatrix::from_fn(lat.n_sites(), |y, x| {
        C64::new(table[idx(lat.separation_ints(y, x))], 0.0)
    });
    Ok(KernelMatrix {
        entries,
        kind: KernelKind::PauliJordan,
        params: KernelParams {
            mass: m,
            alpha,
            momentum_mode: mode,
            pv_displacement: 0.0,
        },
        lattice: *lat,
    })
}

/// Spacetime form of the positive-frequency function at a point off the
/// light cone. Argument is d = y - x.
fn wightman_raw(d: &FourVector, m: f64) -> C64 {
    let s = d.interval();
    if s > 0.0 {
        let r = s.sqrt();
        let c = m / (8.0 * PI * r);
        // sgn(x0 - y0) = sgn(-d0)
        let sg = if d.0[0] > 0.0 {
            -1.0
        } else if d.0[0] < 0.0 {
            1.0
        } else {
            0.0
        };
        C64::new(c * bessel_y1(m * r), sg * c * bessel_j1(m * r))
    } else {
        let r = (-s).sqrt();
        C64::new(m / (4.0 * PI * PI * r) * bessel_k1(m * r), 0.0)
    }
}

/// Kernel C value at separation d, with displacement averaging at the
/// coincident point and on the light cone.
pub fn kernel_c_value(d: &FourVector, m: f64, alpha: f64, eps: f64) -> C64 {
    if d.is_zero() {
        let mut acc = C64::new(0.0, 0.0);
        for mu in 0..4 {
            for sign in [1.0, -1.0] {
                let mut e = *d;
                e.0[mu] += sign * eps;
                acc += wightman_raw(&e, m);
            }
        }
        return acc / 8.0 + alpha;
    }
    if d.interval() == 0.0 {
        // unit normal to the cone surface through d
        let n = FourVector::new(d.0[0], -d.0[1], -d.0[2], -d.0[3]);
        let n = n.scale(1.0 / n.euclidean_norm());
        let a = wightman_raw(&d.add(&n.scale(eps)), m);
        let b = wightman_raw(&d.add(&n.scale(-eps)), m);
        return (a + b) * 0.5;
    }
    wightman_raw(d, m)
}

pub fn build_kernel_c(lat: &Lattice, m: f64, alpha: f64, pv_displacement: f64) -> Result<KernelMatrix> {
    check_params(m, alpha)?;
    positive("pv_displacement", pv_displacement)?;
    let entries = tabulate(lat, |d| {
        kernel_c_value(&FourVector(d.map(|c| c as f64)), m, alpha, pv_displacement)
    });
    Ok(KernelMatrix {
        entries,
        kind: KernelKind::Base(BaseKind::C),
        params: KernelParams {
            mass: m,
            alpha,
            momentum_mode: MomentumMode::Brillouin,
            pv_displacement,
        },
        lattice: *lat,
    })
}

pub fn build_kernel(
    lat: &Lattice,
    kind: BaseKind,
    m: f64,
    alpha: f64,
    mode: MomentumMode,
    pv_displacement: f64,
) -> Result<KernelMatrix> {
    match kind {
        BaseKind::A => build_kernel_a(lat, m, alpha, mode),
        BaseKind::B => build_kernel_b(lat, m, alpha, mode),
        BaseKind::C => build_kernel_c(lat, m, alpha, pv_displacement),
    }
}

pub fn check_positive_definite(k: &KernelMatrix) -> Result<CholeskyReport> {
    let dev = k.entries.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(k.entries.cholesky().0)
}

pub fn invert_kernel(k: &KernelMatrix) -> Result<KernelMatrix> {
    let kind = match k.kind {
        KernelKind::Base(b) => KernelKind::InverseOf(b),
        KernelKind::InverseOf(b) => KernelKind::Base(b),
        KernelKind::PauliJordan => {
            return Err(Error::Format("the Pauli-Jordan matrix is not invertible".into()))
        }
    };
    let dev = k.entries.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(KernelMatrix {
        entries: k.entries.inverse_hpd()?,
        kind,
        params: k.params,
        lattice: k.lattice,
    })
}

const MAGIC: &[u8; 6] = b"MSFTK1";

impl KernelMatrix {
    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    /// Binary container: magic, u64 n_sites, u8 kind tag, five f64 params
    /// (mass, alpha, pv_displacement, momentum mode, boundary), then the
    /// row-major entries as (re, im) pairs. Little-endian throughout.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n_sites() as u64).to_le_bytes())?;
        w.write_all(&[self.kind.tag()])?;
        let mode = match self.params.momentum_mode {
            MomentumMode::Integer => 0.0,
            MomentumMode::Brillouin => 1.0,
        };
        let boundary = match self.lattice.boundary() {
            Boundary::Periodic => 0.0,
            Boundary::Open => 1.0,
        };
        for v in [self.params.mass, self.params.alpha, self.params.pv_displacement, mode, boundary] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(16 * self.entries.as_slice().len());
        for z in self.entries.as_slice() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a kernel file".into()));
        }
        let n = read_u64(r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let kind = KernelKind::from_tag(tag[0])?;
        let mut p = [0.0; 5];
        for v in &mut p {
            *v = read_f64(r)?;
        }
        let extent = (n as f64).powf(0.25).round() as usize;
        if extent.pow(4) != n {
            return Err(Error::Format(format!("{n} sites is not a 4D hypercube")));
        }
        let boundary = if p[4] == 0.0 { Boundary::Periodic } else { Boundary::Open };
        let momentum_mode = if p[3] == 0.0 {
            MomentumMode::Integer
        } else {
            MomentumMode::Brillouin
        };
        let mut raw = vec![0u8; 16 * n * n];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(KernelMatrix {
            entries: CMatrix::from_vec(n, data)?,
            kind,
            params: KernelParams {
                mass: p[0],
                alpha: p[1],
                momentum_mode,
                pv_displacement: p[2],
            },
            lattice: Lattice::new(extent, boundary)?,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

pub(crate) fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
