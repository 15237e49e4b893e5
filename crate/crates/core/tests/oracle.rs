use std::sync::Arc;

use msft_core::dynamics::ModelParams;
use msft_core::kernels::*;
use msft_core::lattice::{Boundary, Lattice};
use msft_core::observables::CorrelationAccumulator;
use msft_core::oracle::*;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(extent: usize, kind: BaseKind, beta: f64, k1: f64, k2: f64) -> (KernelMatrix, ModelParams) {
    let lat = Lattice::new(extent, Boundary::Periodic).unwrap();
    let k = build_kernel(&lat, kind, 1.0, 1.0 / 9.0, MomentumMode::Brillouin, 1.0 / 36.0).unwrap();
    let p = ModelParams::new(Arc::new(invert_kernel(&k).unwrap()), beta, k1, k2).unwrap();
    (k, p)
}

#[test]
fn cholesky_factor_reproduces_covariance() {
    let (k, p) = setup(3, BaseKind::B, 2.0, 0.0, 0.0);
    let s = EnsembleSampler::gaussian_free(&p, &k, 1).unwrap();
    let l = s.chol_factor().unwrap();
    let cov = l.matmul(&l.adjoint());
    assert!(cov.max_abs_diff(&k.entries.scale(0.5)) < 1e-10);
    let (_, interacting) = setup(3, BaseKind::B, 1.0, 1.0, 0.0);
    assert!(matches!(
        EnsembleSampler::gaussian_free(&interacting, &k, 1),
        Err(msft_core::Error::ModeMismatch(_))
    ));
    let mut m = EnsembleSampler::metropolis(&p, 0.5, 1).unwrap();
    assert!(m.sample_free().is_err());
}

#[test]
fn free_draws_match_kernel() {
    let (k, p) = setup(3, BaseKind::B, 1.0, 0.0, 0.0);
    let lat = Lattice::new(3, Boundary::Periodic).unwrap();
    let xo = lat.center_site().unwrap();
    let mut s = EnsembleSampler::gaussian_free(&p, &k, 7).unwrap();
    let mut acc = CorrelationAccumulator::new(81, vec![xo], vec![xo], 100).unwrap();
    let draws = 100_000;
    let mut mean = vec![C64::new(0.0, 0.0); 81];
    let mut pair = vec![C64::new(0.0, 0.0); 81];
    let mut pair2 = vec![0.0; 81];
    for _ in 0..draws {
        let phi = s.sample_free().unwrap();
        acc.accumulate(&phi).unwrap();
        for x in 0..81 {
            mean[x] += phi[x];
            let q = phi[xo] * phi[x];
            pair[x] += q;
            pair2[x] += q.norm_sqr();
        }
    }
    let n = draws as f64;
    let mut bad = 0;
    for x in 0..81 {
        let exact = k.entries[(xo, x)];
        let est = acc.mean(xo, x).unwrap();
        let se = complex_se(acc.std_error(xo, x).unwrap());
        if (est - exact).norm() > 3.0 * se {
            bad += 1;
        }
        // zero mean: each component has variance D(0)/(2 beta)
        let m = mean[x] / n;
        assert!(m.norm() < 4.0 * (k.entries[(x, x)].re / n).sqrt());
        // <phi phi> vanishes
        let pm = pair[x] / n;
        assert!(pm.norm() < 4.0 * (pair2[x] / n / n).sqrt(), "site {x}: {pm}");
    }
    // about 1% of entries are expected beyond 3 sigma
    assert!(bad <= 4, "{bad} entries beyond 3 sigma");
}

#[test]
fn metropolis_free_chain_matches_gaussian() {
    let (k, p) = setup(2, BaseKind::C, 1.0, 0.0, 0.0);
    let n = 16;
    let rows: Vec<usize> = (0..n).collect();
    let mut chain = EnsembleSampler::metropolis(&p, DEFAULT_PROPOSAL_WIDTH, 3).unwrap();
    chain.tune(2000).unwrap();
    let mut acc_m = CorrelationAccumulator::new(n, rows.clone(), rows.clone(), 2000).unwrap();
    chain.run_into(200_000, 1, &mut [&mut acc_m]).unwrap();
    let rate = chain.acceptance_rate();
    assert!((0.25..=0.65).contains(&rate), "acceptance {rate}");

    let mut g = EnsembleSampler::gaussian_free(&p, &k, 4).unwrap();
    let mut acc_g = CorrelationAccumulator::new(n, rows.clone(), rows.clone(), 100).unwrap();
    for _ in 0..50_000 {
        acc_g.accumulate(&g.sample_free().unwrap()).unwrap();
    }
    let mut bad = 0;
    for y in 0..n {
        for x in 0..n {
            let d = acc_m.mean(y, x).unwrap() - acc_g.mean(y, x).unwrap();
            let se = complex_se(acc_m.std_error(y, x).unwrap())
                .hypot(complex_se(acc_g.std_error(y, x).unwrap()));
            if d.norm() > 3.0 * se {
                bad += 1;
            }
        }
    }
    assert!(bad <= 8, "{bad} of 256 entries beyond 3 sigma");
}

#[test]
fn quartic_term_lowers_self_correlation() {
    let (_, free) = setup(2, BaseKind::C, 1.0, 0.0, 0.0);
    let (_, quartic) = setup(2, BaseKind::C, 1.0, 0.0, 1.0);
    let self_corr = |p: &ModelParams| {
        let mut s = EnsembleSampler::metropolis(p, DEFAULT_PROPOSAL_WIDTH, 5).unwrap();
        s.tune(1000).unwrap();
        let mut acc = CorrelationAccumulator::new(16, vec![0], vec![0], 1000).unwrap();
        s.run_into(50_000, 1, &mut [&mut acc]).unwrap();
        (acc.mean(0, 0).unwrap().re, acc.std_error(0, 0).unwrap().0)
    };
    let (f, fe) = self_corr(&free);
    let (q, qe) = self_corr(&quartic);
    assert!(q + 3.0 * qe < f - 3.0 * fe, "free {f}±{fe}, quartic {q}±{qe}");
}

#[test]
fn one_site_chain_matches_quadrature() {
    // single-site lattice: the coupling is the 1x1 inverse kernel
    let lat = Lattice::new(1, Boundary::Periodic).unwrap();
    let k = build_kernel_c(&lat, 1.0, 1.0 / 9.0, 1.0 / 36.0).unwrap();
    let inv = invert_kernel(&k).unwrap();
    let d = inv.entries[(0, 0)].re;
    for (k1, k2) in [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        // beta chosen so the free width is of order one
        let beta = 1.0 / d;
        let p = ModelParams::new(Arc::new(inv.clone()), beta, k1, k2).unwrap();
        let quad = OneSiteQuadrature::new(d, k1, k2, beta).unwrap();
        let mut s = EnsembleSampler::metropolis(&p, DEFAULT_PROPOSAL_WIDTH, 11).unwrap();
        s.tune(5000).unwrap();
        let edges: Vec<f64> = (1..8).map(|i| i as f64 * 0.25).collect();
        let mut hits = vec![0u64; edges.len()];
        let mut abs2 = 0.0;
        let n = 16_000_000u64;
        struct Hist<'a>(&'a [f64], &'a mut [u64], &'a mut f64);
        impl msft_core::dynamics::Sink for Hist<'_> {
            fn observe(&mut self, phi: &[C64]) {
                let r = phi[0].norm();
                *self.2 += r * r;
                for (e, h) in self.0.iter().zip(self.1.iter_mut()) {
                    if r < *e {
                        *h += 1;
                    }
                }
            }
        }
        s.run_into(n, 1, &mut [&mut Hist(&edges, &mut hits, &mut abs2)]).unwrap();
        for (e, h) in edges.iter().zip(&hits) {
            let emp = *h as f64 / n as f64;
            let exact = quad.prob_radius_below(*e);
            assert!((emp - exact).abs() < 1e-3, "kappa=({k1},{k2}) r<{e}: {emp} vs {exact}");
        }
        let m = abs2 / n as f64;
        assert!((m - quad.mean_abs2()).abs() < 1e-2 * quad.mean_abs2());
    }
}

#[test]
fn mgf_identities() {
    let (k, _) = setup(3, BaseKind::A, 1.0, 0.0, 0.0);
    let zero = vec![C64::new(0.0, 0.0); 81];
    assert_eq!(mgf_free(&zero, &k, 1.0).unwrap(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let j: Vec<C64> = (0..81).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let j2: Vec<C64> = j.iter().map(|z| z * 2.0).collect();
    let a = log_mgf_free(&j, &k, 1.0).unwrap();
    assert!((log_mgf_free(&j2, &k, 1.0).unwrap() - 4.0 * a).abs() < 1e-12 * a.abs());
    assert!(a > 0.0);
    assert!(log_mgf_free(&zero[..3], &k, 1.0).is_err());

    for (y, x) in [(40, 40), (40, 13), (3, 77), (77, 3)] {
        let exact = k.entries[(y, x)];
        for beta in [1.0, 2.0] {
            let v = two_point_from_mgf(&k, beta, y, x, 1e-4).unwrap();
            assert!((v - exact / beta).norm() < 1e-6 * (exact / beta).norm(), "({y},{x}) {v} vs {exact}");
        }
    }
}
