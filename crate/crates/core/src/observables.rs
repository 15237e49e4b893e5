//! Trajectory averages of the two-point function with block-jackknife errors.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::Sink;
use crate::error::{Error, Result};
use crate::kernels::{read_f64, read_u64};
use crate::lattice::Lattice;
use crate::linalg::{hermitian_eigen, project_psd, CMatrix};

pub const DEFAULT_BLOCK_LEN: u64 = 1000;

pub fn smear(phi: &[C64], j: &[C64]) -> Result<C64> {
    if phi.len() != j.len() {
        return Err(Error::DimensionMismatch { expected: phi.len(), got: j.len() });
    }
    Ok(phi.iter().zip(j).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    count: u64,
    sum: Vec<C64>,
}

/// Running sums of conj(phi(y)) phi(x) for y in a row set and all x.
///
/// Block sums for jackknife errors are kept for `error_rows`, a subset of
/// the accumulated rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationAccumulator {
    n_sites: usize,
    rows: Vec<usize>,
    row_pos: Vec<Option<usize>>,
    error_rows: Vec<usize>,
    error_pos: Vec<Option<usize>>,
    block_len: u64,
    count: u64,
    sum: Vec<C64>,
    blocks: Vec<Block>,
    current: Block,
}

fn positions(n: usize, rows: &[usize]) -> Result<Vec<Option<usize>>> {
    let mut pos = vec![None; n];
    for (i, &r) in rows.iter().enumerate() {
        if r >= n {
            return Err(Error::SiteOutOfRange { index: r, n_sites: n });
        }
        if pos[r].is_some() {
            return Err(Error::Format(format!("row {r} listed twice")));
        }
        pos[r] = Some(i);
    }
    Ok(pos)
}

impl CorrelationAccumulator {
    pub fn new(n_sites: usize, rows: Vec<usize>, error_rows: Vec<usize>, block_len: u64) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::InvalidParameter { name: "block_len", value: 0.0, reason: "must be at least 1" });
        }
        let row_pos = positions(n_sites, &rows)?;
        let error_pos = positions(n_sites, &error_rows)?;
        if let Some(&r) = error_rows.iter().find(|&&r| row_pos[r].is_none()) {
            return Err(Error::EntryNotAccumulated { row: r, col: r });
        }
        let zero = C64::new(0.0, 0.0);
        Ok(CorrelationAccumulator {
            n_sites,
            sum: vec![zero; rows.len() * n_sites],
            current: Block { count: 0, sum: vec![zero; error_rows.len() * n_sites] },
            rows,
            row_pos,
            error_rows,
            error_pos,
            block_len,
            count: 0,
            blocks: Vec::new(),
        })
    }

    /// Center row plus `extra` distinct random rows, all with errors.
    pub fn center_rows(lat: &Lattice, extra: usize, seed: u64, block_len: u64) -> Result<Self> {
        let n = lat.n_sites();
        let center = lat.center_site()?;
        let mut rows = vec![center];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks = sample(&mut rng, n - 1, extra.min(n - 1));
        rows.extend(picks.iter().map(|i| if i >= center { i + 1 } else { i }));
        Self::new(n, rows.clone(), rows, block_len)
    }

    /// Every row; errors only for the center row.
    pub fn full(lat: &Lattice, block_len: u64) -> Result<Self> {
        let center = lat.center_site()?;
        Self::new(lat.n_sites(), (0..lat.n_sites()).collect(), vec![center], block_len)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn error_rows(&self) -> &[usize] {
        &self.error_rows
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn block_len(&self) -> u64 {
        self.block_len
    }

    pub fn accumulate(&mut self, phi: &[C64]) -> Result<()> {
        if phi.len() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: phi.len() });
        }
        let n = self.n_sites;
        for (i, &y) in self.rows.iter().enumerate() {
            let c = phi[y].conj();
            for (s, p) in self.sum[i * n..(i + 1) * n].iter_mut().zip(phi) {
                *s += c * p;
            }
        }
        for (i, &y) in self.error_rows.iter().enumerate() {
            let c = phi[y].conj();
            for (s, p) in self.current.sum[i * n..(i + 1) * n].iter_mut().zip(phi) {
                *s += c * p;
            }
        }
        self.count += 1;
        self.current.count += 1;
        if self.current.count == self.block_len {
            let fresh = Block { count: 0, sum: vec![C64::new(0.0, 0.0); self.current.sum.len()] };
            self.blocks.push(std::mem::replace(&mut self.current, fresh));
        }
        Ok(())
    }

    /// Combine with an accumulator over the same rows; open blocks are closed.
    pub fn merge(&mut self, other: &CorrelationAccumulator) -> Result<()> {
        if self.n_sites != other.n_sites
            || self.rows != other.rows
            || self.error_rows != other.error_rows
            || self.block_len != other.block_len
        {
            return Err(Error::Format("accumulators have different layouts".into()));
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.count += other.count;
        let zero = vec![C64::new(0.0, 0.0); self.current.sum.len()];
        let mine = std::mem::replace(&mut self.current, Block { count: 0, sum: zero });
        if mine.count > 0 {
            self.blocks.push(mine);
        }
        self.blocks.extend(other.blocks.iter().cloned());
        if other.current.count > 0 {
            self.blocks.push(other.current.clone());
        }
        Ok(())
    }

    fn all_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().chain((self.current.count > 0).then_some(&self.current))
    }

    /// Mean of conj(phi(y)) phi(x).
    pub fn mean(&self, y: usize, x: usize) -> Result<C64> {
        if self.count == 0 {
            return Err(Error::NoSamples);
        }
        let i = self.row_index(y, x)?;
        Ok(self.sum[i * self.n_sites + x] / self.count as f64)
    }

    fn row_index(&self, y: usize, x: usize) -> Result<usize> {
        if x >= self.n_sites {
            return Err(Error::SiteOutOfRange { index: x, n_sites: self.n_sites });
        }
        self.row_pos
            .get(y)
            .copied()
            .flatten()
            .ok_or(Error::EntryNotAccumulated { row: y, col: x })
    }

    /// Delete-one-block jackknife of a derived quantity. `f` maps a sum
    /// accessor over (error-row position, column) and a count to the estimate.
    fn jackknife<F>(&self, f: F) -> (f64, f64, usize)
    where
        F: Fn(&dyn Fn(usize, usize) -> C64, f64) -> C64,
    {
        let n = self.n_sites;
        let blocks: Vec<&Block> = self.all_blocks().collect();
        let g = blocks.len();
        if g < 2 {
            return (0.0, 0.0, g);
        }
        let mut total = vec![C64::new(0.0, 0.0); self.current.sum.len()];
        for b in &blocks {
            for (t, v) in total.iter_mut().zip(&b.sum) {
                *t += v;
            }
        }
        let estimates: Vec<C64> = blocks
            .iter()
            .map(|b| {
                let acc = |i: usize, x: usize| total[i * n + x] - b.sum[i * n + x];
                f(&acc, (self.count - b.count) as f64)
            })
            .collect();
        let mean: C64 = estimates.iter().sum::<C64>() / g as f64;
        let scale = (g as f64 - 1.0) / g as f64;
        let var_re: f64 = estimates.iter().map(|e| (e.re - mean.re).powi(2)).sum::<f64>() * scale;
        let var_im: f64 = estimates.iter().map(|e| (e.im - mean.im).powi(2)).sum::<f64>() * scale;
        (var_re.sqrt(), var_im.sqrt(), g)
    }

    /// Jackknife standard errors (re, im) of the mean at (y, x).
    pub fn std_error(&self, y: usize, x: usize) -> Result<(f64, f64)> {
        self.mean(y, x)?;
        let i = self.error_pos[y].ok_or(Error::EntryNotAccumulated { row: y, col: x })?;
        let (re, im, _) = self.jackknife(|s, c| s(i, x) / c);
        Ok((re, im))
    }

    /// Number of jackknife blocks, including a partially filled one.
    pub fn n_blocks(&self) -> usize {
        self.all_blocks().count()
    }

    pub fn two_point(&self) -> Result<TwoPoint> {
        if self.count == 0 {
            return Err(Error::NoSamples);
        }
        let n = self.n_sites;
        let inv = 1.0 / self.count as f64;
        let mean = self.sum.iter().map(|s| s * inv).collect();
        let mut err_re = vec![0.0; self.error_rows.len() * n];
        let mut err_im = vec![0.0; self.error_rows.len() * n];
        for (i, &y) in self.error_rows.iter().enumerate() {
            for x in 0..n {
                let (re, im) = self.std_error(y, x)?;
                err_re[i * n + x] = re;
                err_im[i * n + x] = im;
            }
        }
        Ok(TwoPoint {
            n_sites: n,
            rows: self.rows.clone(),
            error_rows: self.error_rows.clone(),
            mean,
            err_re,
            err_im,
            count: self.count,
            reliable: self.n_blocks() >= 2,
        })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let mut b = Vec::new();
        b.extend_from_slice(ACC_MAGIC);
        let push_u64 = |b: &mut Vec<u8>, v: u64| b.extend_from_slice(&v.to_le_bytes());
        let push_c = |b: &mut Vec<u8>, v: &[C64]| {
            for z in v {
                b.extend_from_slice(&z.re.to_le_bytes());
                b.extend_from_slice(&z.im.to_le_bytes());
            }
        };
        push_u64(&mut b, self.n_sites as u64);
        push_u64(&mut b, self.block_len);
        push_u64(&mut b, self.count);
        push_u64(&mut b, self.rows.len() as u64);
        self.rows.iter().for_each(|&r| push_u64(&mut b, r as u64));
        push_u64(&mut b, self.error_rows.len() as u64);
        self.error_rows.iter().for_each(|&r| push_u64(&mut b, r as u64));
        push_c(&mut b, &self.sum);
        push_u64(&mut b, self.blocks.len() as u64);
        for blk in self.blocks.iter().chain(std::iter::once(&self.current)) {
            push_u64(&mut b, blk.count);
            push_c(&mut b, &blk.sum);
        }
        w.write_all(&b)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != ACC_MAGIC {
            return Err(Error::Format("not an accumulator file".into()));
        }
        let n = read_u64(r)? as usize;
        let block_len = read_u64(r)?;
        let count = read_u64(r)?;
        let read_idx = |r: &mut dyn Read| -> Result<Vec<usize>> {
            let k = read_u64_dyn(r)? as usize;
            (0..k).map(|_| Ok(read_u64_dyn(r)? as usize)).collect()
        };
        let rows = read_idx(r)?;
        let error_rows = read_idx(r)?;
        let mut acc = Self::new(n, rows, error_rows, block_len)?;
        acc.count = count;
        read_c(r, &mut acc.sum)?;
        let nb = read_u64(r)? as usize;
        for k in 0..=nb {
            let mut blk = Block { count: read_u64(r)?, sum: vec![C64::new(0.0, 0.0); acc.current.sum.len()] };
            read_c(r, &mut blk.sum)?;
            if k < nb {
                acc.blocks.push(blk);
            } else {
                acc.current = blk;
            }
        }
        Ok(acc)
    }
}

const ACC_MAGIC: &[u8; 6] = b"MSFTA1";

fn read_u64_dyn(r: &mut dyn Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_c(r: &mut impl Read, out: &mut [C64]) -> Result<()> {
    for z in out.iter_mut() {
        let re = read_f64(r)?;
        *z = C64::new(re, read_f64(r)?);
    }
    Ok(())
}

impl Sink for CorrelationAccumulator {
    fn observe(&mut self, phi: &[C64]) {
        self.accumulate(phi).expect("field length matches accumulator");
    }
}

/// Estimated two-point matrix over the accumulated rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPoint {
    pub n_sites: usize,
    pub rows: Vec<usize>,
    pub error_rows: Vec<usize>,
    /// rows.len() x n_sites, row-major.
    pub mean: Vec<C64>,
    /// error_rows.len() x n_sites.
    pub err_re: Vec<f64>,
    pub err_im: Vec<f64>,
    pub count: u64,
    /// False with fewer than two jackknife blocks; errors are then zero.
    pub reliable: bool,
}

impl TwoPoint {
    pub fn get(&self, y: usize, x: usize) -> Option<C64> {
        let i = self.rows.iter().position(|&r| r == y)?;
        self.mean.get(i * self.n_sites + x).copied()
    }

    pub fn error(&self, y: usize, x: usize) -> Option<(f64, f64)> {
        let i = self.error_rows.iter().position(|&r| r == y)?;
        let k = i * self.n_sites + x;
        Some((*self.err_re.get(k)?, self.err_im[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Time,
    Space,
}

impl Direction {
    pub fn axis(self) -> usize {
        match self {
            Direction::Time => 0,
            Direction::Space => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Time => "t",
            Direction::Space => "x",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineCut {
    pub direction: Direction,
    pub offsets: Vec<i64>,
    pub values: Vec<C64>,
    pub err_re: Vec<f64>,
    pub err_im: Vec<f64>,
}

/// <conj(phi(x_o + n h)) phi(x_o)> / <conj(phi(x_o)) phi(x_o)> for the
/// center x_o and n spanning the extent.
pub fn line_cut(acc: &CorrelationAccumulator, lat: &Lattice, direction: Direction) -> Result<LineCut> {
    if acc.count() == 0 {
        return Err(Error::NoSamples);
    }
    let xo = lat.center_site()?;
    let pos = acc.error_pos[xo].ok_or(Error::EntryNotAccumulated { row: xo, col: xo })?;
    let h = (lat.extent() as i64 - 1) / 2;
    let offsets: Vec<i64> = (-h..=h).collect();
    let mut values = Vec::new();
    let mut err_re = Vec::new();
    let mut err_im = Vec::new();
    let self_corr = acc.mean(xo, xo)?;
    for &n in &offsets {
        let y = lat.shift(xo, direction.axis(), n).expect("center cut stays on the lattice");
        if n == 0 {
            values.push(C64::new(1.0, 0.0));
            err_re.push(0.0);
            err_im.push(0.0);
            continue;
        }
        // the estimator is exactly Hermitian, so entry (y, x_o) is the
        // conjugate of the center-row entry (x_o, y)
        values.push(acc.mean(xo, y)?.conj() / self_corr);
        let (re, im, _) = acc.jackknife(|s, _| s(pos, y).conj() / s(pos, xo));
        err_re.push(re);
        err_im.push(im);
    }
    Ok(LineCut { direction, offsets, values, err_re, err_im })
}

impl LineCut {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re,im,re_err,im_err\n");
        for i in 0..self.offsets.len() {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.offsets[i], self.values[i].re, self.values[i].im, self.err_re[i], self.err_im[i]
            ));
        }
        s
    }
}

/// sum_y sum_x conj(J(y)) <conj(phi(y)) phi(x)> K(x). J and K must be
/// supported on accumulated rows.
pub fn inner_product(acc: &CorrelationAccumulator, j: &[C64], k: &[C64]) -> Result<C64> {
    // symmetrized so that swapping J and K conjugates the result exactly
    let a = raw_inner(acc, j, k)?;
    let b = raw_inner(acc, k, j)?;
    Ok((a + b.conj()) * 0.5)
}

fn raw_inner(acc: &CorrelationAccumulator, j: &[C64], k: &[C64]) -> Result<C64> {
    let n = acc.n_sites();
    for v in [j, k] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    if acc.count() == 0 {
        return Err(Error::NoSamples);
    }
    let inv = 1.0 / acc.count() as f64;
    let mut total = C64::new(0.0, 0.0);
    for (y, jy) in j.iter().enumerate() {
        if *jy == C64::new(0.0, 0.0) {
            continue;
        }
        let i = acc.row_pos[y].ok_or(Error::EntryNotAccumulated { row: y, col: 0 })?;
        let row = &acc.sum[i * n..(i + 1) * n];
        let mut r = C64::new(0.0, 0.0);
        for (x, kx) in k.iter().enumerate() {
            if *kx == C64::new(0.0, 0.0) {
                continue;
            }
            r += row[x] * kx;
        }
        total += jy.conj() * r * inv;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct PsdGram {
    pub sites: Vec<usize>,
    pub gram: CMatrix,
    /// Max-norm change made by the projection.
    pub projection_norm: f64,
    pub min_eigenvalue: f64,
    pub rank: usize,
}

/// Hermitized, PSD-projected Gram matrix of site indicators.
pub fn psd_gram(acc: &CorrelationAccumulator, sites: &[usize]) -> Result<PsdGram> {
    let k = sites.len();
    let mut raw = CMatrix::zeros(k);
    for (a, &y) in sites.iter().enumerate() {
        for (b, &x) in sites.iter().enumerate() {
            raw[(a, b)] = acc.mean(y, x)?;
        }
    }
    raw.hermitize();
    let (vals, _) = hermitian_eigen(&raw);
    let (gram, projection_norm) = project_psd(&raw);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let rank = vals.iter().filter(|&&v| v > 1e-12 * top).count();
    Ok(PsdGram {
        sites: sites.to_vec(),
        gram,
        projection_norm,
        min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        rank,
    })
}
