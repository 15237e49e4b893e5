//! Truncated symmetric Fock space over a finite set of observables.
//!
//! Monomials are sorted multisets of generator indices stored without
//! combinatorial prefactors; inner products of equal-degree monomials are
//! permanents of the generator Gram matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{build_kernel_a, MomentumMode};
use crate::lattice::{IntervalClass, Lattice};
use crate::linalg::{hermitian_eigen, CMatrix};

pub const ALGEBRA_TOL: f64 = 1e-10;
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub labels: Vec<String>,
    /// Smearing vectors over lattice sites, when the generators are fields.
    pub smearing: Option<Vec<Vec<C64>>>,
    pub gram: CMatrix,
    pub rank: usize,
}

impl GeneratorSet {
    /// The Gram matrix must be Hermitian and positive semi-definite.
    pub fn new(labels: Vec<String>, gram: CMatrix) -> Result<Self> {
        if labels.len() != gram.dim() {
            return Err(Error::DimensionMismatch { expected: gram.dim(), got: labels.len() });
        }
        let scale = gram.max_abs().max(f64::MIN_POSITIVE);
        let dev = gram.hermitian_deviation();
        if dev > 1e-12 {
            return Err(Error::NotHermitian(dev));
        }
        let (vals, _) = hermitian_eigen(&gram);
        if let Some(&v) = vals.first() {
            if v < -1e-12 * scale {
                return Err(Error::NotPositiveDefinite { index: 0, pivot: v });
            }
        }
        let rank = vals.iter().filter(|&&v| v > 1e-12 * scale).count();
        Ok(GeneratorSet { labels, smearing: None, gram, rank })
    }

    /// Field generators phi(s_i) with Gram sum conj(s_i(y)) cov[y][x] s_j(x).
    pub fn from_covariance(labels: Vec<String>, smearing: Vec<Vec<C64>>, cov: &CMatrix) -> Result<Self> {
        let k = smearing.len();
        let n = cov.dim();
        if let Some(s) = smearing.iter().find(|s| s.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: s.len() });
        }
        let mut gram = CMatrix::from_fn(k, |i, j| {
            let mut acc = ZERO;
            for (y, sy) in smearing[i].iter().enumerate() {
                if *sy == ZERO {
                    continue;
                }
                let row = cov.row(y);
                let r: C64 = row.iter().zip(&smearing[j]).map(|(c, s)| c * s).sum();
                acc += sy.conj() * r;
            }
            acc
        });
        gram.hermitize();
        let mut g = Self::new(labels, gram)?;
        g.smearing = Some(smearing);
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.gram.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// <O, O'> for coefficient vectors over the generators.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                acc += ai.conj() * self.gram[(i, j)] * bj;
            }
        }
        acc
    }

    /// Coefficients expressing phi(J) in the generators.
    pub fn coefficients(&self, j: &[C64]) -> Result<Vec<C64>> {
        let s = self
            .smearing
            .as_ref()
            .ok_or(Error::Format("generators carry no smearing vectors".into()))?;
        let n = j.len();
        if let Some(v) = s.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: v.len(), got: n });
        }
        let a = DMatrix::from_fn(n, s.len(), |x, i| s[i][x]);
        let b = DMatrix::from_fn(n, 1, |x, _| j[x]);
        let svd = a.clone().svd(true, true);
        let c = svd
            .solve(&b, 1e-12)
            .map_err(|e| Error::Format(e.to_string()))?;
        let resid = (&a * &c - &b).norm();
        let scale = b.norm().max(f64::MIN_POSITIVE);
        if resid > 1e-10 * scale {
            return Err(Error::OutsideSpan(resid / scale));
        }
        Ok(c.iter().copied().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Overflowing components are an error.
    Strict,
    /// Overflowing components are dropped and flagged.
    Tolerant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    j_max: usize,
    comps: BTreeMap<Vec<usize>, C64>,
    /// Set when a tolerant operation dropped components.
    pub truncated: bool,
}

impl FockVector {
    pub fn zero(j_max: usize) -> Self {
        FockVector { j_max, comps: BTreeMap::new(), truncated: false }
    }

    pub fn vacuum(j_max: usize) -> Self {
        Self::monomial(j_max, Vec::new(), C64::new(1.0, 0.0)).unwrap()
    }

    pub fn monomial(j_max: usize, mut index: Vec<usize>, amp: C64) -> Result<Self> {
        if index.len() > j_max {
            return Err(Error::TruncationOverflow { degree: index.len(), j_max });
        }
        index.sort_unstable();
        let mut v = Self::zero(j_max);
        v.add_term(index, amp);
        Ok(v)
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let mut key = index.to_vec();
        key.sort_unstable();
        self.comps.get(&key).copied().unwrap_or(ZERO)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &C64)> {
        self.comps.iter()
    }

    fn add_term(&mut self, index: Vec<usize>, amp: C64) {
        *self.comps.entry(index).or_insert(ZERO) += amp;
    }

    pub fn add(&self, other: &FockVector) -> Result<FockVector> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// self + a * other
    pub fn axpy(&self, a: C64, other: &FockVector) -> Result<FockVector> {
        if self.j_max != other.j_max {
            return Err(Error::GeneratorMismatch);
        }
        let mut out = self.clone();
        for (k, v) in &other.comps {
            out.add_term(k.clone(), a * v);
        }
        out.truncated |= other.truncated;
        Ok(out)
    }

    pub fn scale(&self, a: C64) -> FockVector {
        FockVector {
            j_max: self.j_max,
            comps: self.comps.iter().map(|(k, v)| (k.clone(), a * v)).collect(),
            truncated: self.truncated,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.values().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Permanent by Ryser's formula.
pub fn permanent(a: &[Vec<C64>]) -> C64 {
    let n = a.len();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = ZERO;
    for mask in 1u64..(1 << n) {
        let mut prod = C64::new(1.0, 0.0);
        for row in a {
            let s: C64 = (0..n).filter(|c| mask >> c & 1 == 1).map(|c| row[c]).sum();
            prod *= s;
        }
        let sign = if (n - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

fn check_indices(f: &FockVector, gen: &GeneratorSet) -> Result<()> {
    if f.comps.keys().flatten().any(|&i| i >= gen.len()) {
        return Err(Error::GeneratorMismatch);
    }
    Ok(())
}

pub fn fock_inner(f: &FockVector, g: &FockVector, gen: &GeneratorSet) -> Result<C64> {
    if f.j_max != g.j_max {
        return Err(Error::GeneratorMismatch);
    }
    check_indices(f, gen)?;
    check_indices(g, gen)?;
    let mut total = ZERO;
    for (m, a) in &f.comps {
        for (n, b) in g.comps.iter().filter(|(n, _)| n.len() == m.len()) {
            let mat: Vec<Vec<C64>> = m
                .iter()
                .map(|&i| n.iter().map(|&j| gen.gram[(i, j)]).collect())
                .collect();
            total += a.conj() * b * permanent(&mat);
        }
    }
    Ok(total)
}

fn check_coeffs(o: &[C64], gen: &GeneratorSet) -> Result<()> {
    if o.len() != gen.len() {
        return Err(Error::DimensionMismatch { expected: gen.len(), got: o.len() });
    }
    Ok(())
}

/// Creation operator for the observable sum_i o[i] O_i.
pub fn create(o: &[C64], f: &FockVector, gen: &GeneratorSet, mode: Truncation) -> Result<FockVector> {
    check_coeffs(o, gen)?;
    check_indices(f, gen)?;
    let mut out = FockVector::zero(f.j_max);
    out.truncated = f.truncated;
    for (m, a) in &f.comps {
        if m.len() + 1 > f.j_max {
            match mode {
                Truncation::Strict => {
                    return Err(Error::TruncationOverflow { degree: m.len() + 1, j_max: f.j_max })
                }
                Truncation::Tolerant => {
                    out.truncated = true;
                    continue;
                }
            }
        }
        for (i, c) in o.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let mut key = m.clone();
            let at = key.partition_point(|&v| v <= i);
            key.insert(at, i);
            out.add_term(key, c * a);
        }
    }
    Ok(out)
}

/// Annihilation operator; antilinear in the observable.
pub fn annihilate(o: &[C64], f: &FockVector, gen: &GeneratorSet) -> Result<FockVector> {
    check_coeffs(o, gen)?;
    check_indices(f, gen)?;
    // <O, O_j> for every generator j
    let overlap: Vec<C64> = (0..gen.len())
        .map(|j| o.iter().enumerate().map(|(i, c)| c.conj() * gen.gram[(i, j)]).sum())
        .collect();
    let mut out = FockVector::zero(f.j_max);
    out.truncated = f.truncated;
    for (m, a) in &f.comps {
        for t in 0..m.len() {
            let w = overlap[m[t]];
            if w == ZERO {
                continue;
            }
            let mut key = m.clone();
            key.remove(t);
            out.add_term(key, w * a);
        }
    }
    Ok(out)
}

/// Sorted multisets of size `degree` over `k` generators.
pub fn monomials(k: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, degree: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == degree {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(k, degree, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, degree, 0, &mut Vec::new(), &mut out);
    out
}

fn basis(k: usize, max_degree: usize, j_max: usize) -> Vec<FockVector> {
    (0..=max_degree)
        .flat_map(|d| monomials(k, d))
        .map(|m| FockVector::monomial(j_max, m, C64::new(1.0, 0.0)).unwrap())
        .collect()
}

/// Observables to test: each generator plus a few random combinations.
fn probe_observables(k: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = (0..k)
        .map(|i| (0..k).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..3 {
        out.push((0..k).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    /// Largest deviation, absolute below unit magnitude and relative above.
    pub max_deviation: f64,
    pub checks: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.max_deviation < ALGEBRA_TOL
    }
}

/// Deviation measure of all checks: absolute for terms of magnitude up to
/// one, relative to the larger term beyond that.
fn scaled(diff: f64, magnitude: f64) -> f64 {
    diff / magnitude.max(1.0)
}

fn vec_dev(x: &FockVector, y: &FockVector) -> Result<f64> {
    Ok(scaled(x.sub(y)?.max_abs(), x.max_abs().max(y.max_abs())))
}

/// <a*(O) F | G> = <F | a(O) G> over monomial bases.
pub fn adjoint_check(gen: &GeneratorSet, j_max: usize, seed: u64) -> Result<CheckReport> {
    let k = gen.len();
    let fs = basis(k, j_max.saturating_sub(1), j_max);
    let gs = basis(k, j_max, j_max);
    let mut dev: f64 = 0.0;
    let mut checks = 0;
    for o in probe_observables(k, seed) {
        for f in &fs {
            let lhs_vec = create(&o, f, gen, Truncation::Strict)?;
            for g in &gs {
                let lhs = fock_inner(&lhs_vec, g, gen)?;
                let rhs = fock_inner(f, &annihilate(&o, g, gen)?, gen)?;
                dev = dev.max(scaled((lhs - rhs).norm(), lhs.norm().max(rhs.norm())));
                checks += 1;
            }
        }
    }
    Ok(CheckReport { name: "adjoint", max_deviation: dev, checks })
}

/// The three canonical commutation relations on monomial bases.
pub fn ccr_check(gen: &GeneratorSet, j_max: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let k = gen.len();
    let probes = probe_observables(k, seed);
    let mut aa = CheckReport { name: "[a,a]", max_deviation: 0.0, checks: 0 };
    let mut cc = CheckReport { name: "[a*,a*]", max_deviation: 0.0, checks: 0 };
    let mut ac = CheckReport { name: "[a,a*]", max_deviation: 0.0, checks: 0 };
    let s = Truncation::Strict;
    for f in basis(k, j_max.saturating_sub(1), j_max) {
        let deg = f.comps.keys().next().map_or(0, |m| m.len());
        for o1 in &probes {
            for o2 in &probes {
                let x = annihilate(o1, &annihilate(o2, &f, gen)?, gen)?;
                let y = annihilate(o2, &annihilate(o1, &f, gen)?, gen)?;
                aa.max_deviation = aa.max_deviation.max(vec_dev(&x, &y)?);
                aa.checks += 1;
                // two creations need room for two more tensor factors
                if deg + 2 <= j_max {
                    let x = create(o1, &create(o2, &f, gen, s)?, gen, s)?;
                    let y = create(o2, &create(o1, &f, gen, s)?, gen, s)?;
                    cc.max_deviation = cc.max_deviation.max(vec_dev(&x, &y)?);
                    cc.checks += 1;
                }
                let x = annihilate(o1, &create(o2, &f, gen, s)?, gen)?;
                let y = create(o2, &annihilate(o1, &f, gen)?, gen, s)?;
                let expect = f.scale(gen.inner(o1, o2));
                ac.max_deviation = ac.max_deviation.max(vec_dev(&x.sub(&y)?, &expect)?);
                ac.checks += 1;
            }
        }
    }
    Ok(vec![aa, cc, ac])
}

/// phi(J) applied as a*(phi(J)) + a(phi(J)).
pub fn field_operator_apply(j: &[C64], f: &FockVector, gen: &GeneratorSet, mode: Truncation) -> Result<FockVector> {
    let c = gen.coefficients(j)?;
    create(&c, f, gen, mode)?.add(&annihilate(&c, f, gen)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub scalar: C64,
    /// Largest deviation of [phi(J), phi(K)] F from scalar F over the basis,
    /// measured as in [`CheckReport`].
    pub max_deviation: f64,
    pub checks: usize,
}

/// 2i Im <phi(J), phi(K)>, verified as a multiple of the identity on every
/// basis monomial of degree below the truncation.
pub fn commutator_scalar(j: &[C64], k: &[C64], gen: &GeneratorSet, j_max: usize) -> Result<CommutatorReport> {
    let cj = gen.coefficients(j)?;
    let ck = gen.coefficients(k)?;
    let scalar = C64::new(0.0, 2.0 * gen.inner(&cj, &ck).im);
    let t = Truncation::Tolerant;
    let mut dev: f64 = 0.0;
    let mut checks = 0;
    let apply = |c: &[C64], f: &FockVector| -> Result<FockVector> {
        create(c, f, gen, t)?.add(&annihilate(c, f, gen)?)
    };
    for f in basis(gen.len(), j_max.saturating_sub(1), j_max) {
        let jk = apply(&cj, &apply(&ck, &f)?)?;
        let kj = apply(&ck, &apply(&cj, &f)?)?;
        dev = dev.max(vec_dev(&jk.sub(&kj)?, &f.scale(scalar))?);
        checks += 1;
    }
    Ok(CommutatorReport { scalar, max_deviation: dev, checks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityEntry {
    pub class: IntervalClass,
    pub interval: f64,
    pub abs_im: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub max_spacelike: f64,
    pub max_timelike: f64,
    /// max spacelike over max timelike
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicrocausalityReport {
    pub per_alpha: Vec<AlphaSummary>,
    pub entries: Vec<CausalityEntry>,
    /// Max spacelike |Im| strictly decreasing along the sweep.
    pub monotone: bool,
    /// Timelike max exceeds `threshold` times the spacelike max at the
    /// smallest alpha.
    pub timelike_dominant: bool,
    pub threshold: f64,
    /// Least-squares slope of log(max spacelike) against log(alpha).
    pub fit_exponent: f64,
}

impl MicrocausalityReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.timelike_dominant
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,interval,abs_im,alpha\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{:.10e},{:.10e}\n", e.class.as_str(), e.interval, e.abs_im, e.alpha));
        }
        s
    }
}

/// Classify every pair (y, x_o) through the center and tabulate
/// |Im D(y - x_o)| / beta of the free kernel A for each alpha.
pub fn microcausality_report(
    lat: &Lattice,
    mass: f64,
    alphas: &[f64],
    mode: MomentumMode,
    beta: f64,
    threshold: f64,
) -> Result<MicrocausalityReport> {
    let xo = lat.center_site()?;
    let mut entries = Vec::new();
    let mut per_alpha = Vec::new();
    for &alpha in alphas {
        let k = build_kernel_a(lat, mass, alpha, mode)?;
        let mut max_space: f64 = 0.0;
        let mut max_time: f64 = 0.0;
        for y in 0..lat.n_sites() {
            let d = lat.separation(y, xo)?;
            let class = IntervalClass::of(&d);
            let abs_im = (k.entries[(y, xo)] / beta).im.abs();
            match class {
                IntervalClass::Spacelike => max_space = max_space.max(abs_im),
                IntervalClass::Timelike => max_time = max_time.max(abs_im),
                _ => {}
            }
            entries.push(CausalityEntry { class, interval: d.interval(), abs_im, alpha });
        }
        per_alpha.push(AlphaSummary {
            alpha,
            max_spacelike: max_space,
            max_timelike: max_time,
            ratio: max_space / max_time,
        });
    }
    let monotone = per_alpha.windows(2).all(|w| w[1].max_spacelike < w[0].max_spacelike);
    let timelike_dominant = per_alpha
        .iter()
        .min_by(|a, b| a.alpha.total_cmp(&b.alpha))
        .is_some_and(|s| s.max_timelike > threshold * s.max_spacelike);
    let pts: Vec<(f64, f64)> = per_alpha
        .iter()
        .filter(|s| s.max_spacelike > 0.0)
        .map(|s| (s.alpha.ln(), s.max_spacelike.ln()))
        .collect();
    let fit_exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(MicrocausalityReport { per_alpha, entries, monotone, timelike_dominant, threshold, fit_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen_from(g: Vec<Vec<C64>>) -> GeneratorSet {
        let k = g.len();
        let m = CMatrix::from_fn(k, |i, j| g[i][j]);
        GeneratorSet::new((0..k).map(|i| format!("O{i}")).collect(), m).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn permanent_small_cases() {
        assert_eq!(permanent(&[]), c(1.0));
        assert_eq!(permanent(&[vec![c(3.0)]]), c(3.0));
        let m = vec![vec![c(1.0), c(2.0)], vec![c(3.0), c(4.0)]];
        assert_eq!(permanent(&m), c(10.0));
        let ones = vec![vec![c(1.0); 4]; 4];
        assert!((permanent(&ones) - c(24.0)).norm() < 1e-12);
    }

    #[test]
    fn vacuum_and_single_generator() {
        let g = 2.5;
        let gen = gen_from(vec![vec![c(g)]]);
        let omega = FockVector::vacuum(3);
        assert_eq!(fock_inner(&omega, &omega, &gen).unwrap(), c(1.0));
        let oo = FockVector::monomial(3, vec![0, 0], c(1.0)).unwrap();
        assert!((fock_inner(&oo, &oo, &gen).unwrap() - c(2.0 * g * g)).norm() < 1e-12);
        assert_eq!(fock_inner(&omega, &oo, &gen).unwrap(), c(0.0));
        let o = [c(1.0)];
        let one = create(&o, &omega, &gen, Truncation::Strict).unwrap();
        assert_eq!(one.get(&[0]), c(1.0));
        assert_eq!(annihilate(&o, &omega, &gen).unwrap().max_abs(), 0.0);
        let down = annihilate(&o, &oo, &gen).unwrap();
        assert_eq!(down.get(&[0]), c(2.0 * g));
        assert_eq!(annihilate(&o, &one, &gen).unwrap().get(&[]), c(g));
    }

    #[test]
    fn strict_and_tolerant_truncation() {
        let gen = gen_from(vec![vec![c(1.0)]]);
        let top = FockVector::monomial(2, vec![0, 0], c(1.0)).unwrap();
        assert!(matches!(
            create(&[c(1.0)], &top, &gen, Truncation::Strict),
            Err(Error::TruncationOverflow { degree: 3, j_max: 2 })
        ));
        let t = create(&[c(1.0)], &top, &gen, Truncation::Tolerant).unwrap();
        assert!(t.truncated && t.max_abs() == 0.0);
    }

    #[test]
    fn one_particle_overlap_is_gram() {
        let gen = gen_from(vec![vec![c(2.0), C64::new(0.5, 0.3)], vec![C64::new(0.5, -0.3), c(1.0)]]);
        let omega = FockVector::vacuum(2);
        let e = |i: usize| -> Vec<C64> { (0..2).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect() };
        let a = create(&e(0), &omega, &gen, Truncation::Strict).unwrap();
        let b = create(&e(1), &omega, &gen, Truncation::Strict).unwrap();
        assert_eq!(fock_inner(&a, &b, &gen).unwrap(), gen.gram[(0, 1)]);
    }

    #[test]
    fn degenerate_gram_is_accepted() {
        let v = [C64::new(1.0, 1.0), c(2.0)];
        let gen = gen_from((0..2).map(|i| (0..2).map(|j| v[i].conj() * v[j]).collect()).collect());
        assert_eq!(gen.rank, 1);
        assert!(adjoint_check(&gen, 3, 1).unwrap().passed());
        assert!(ccr_check(&gen, 3, 1).unwrap().iter().all(|r| r.passed()));
        let bad = CMatrix::from_fn(2, |i, j| c(if i == j { -1.0 } else { 0.0 }));
        assert!(GeneratorSet::new(vec!["a".into(), "b".into()], bad).is_err());
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(3, 4).len(), 15);
        assert_eq!(monomials(6, 2).len(), 21);
        assert_eq!(monomials(2, 0), vec![Vec::<usize>::new()]);
    }
}
