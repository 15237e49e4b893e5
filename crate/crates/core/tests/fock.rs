use msft_core::fock::*;
use msft_core::kernels::{build_kernel_a, MomentumMode};
use msft_core::lattice::{Boundary, IntervalClass, Lattice};
use msft_core::linalg::CMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_psd(k: usize, rank: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Vec<C64>> = (0..rank)
        .map(|_| (0..k).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
        .collect();
    let mut g = CMatrix::from_fn(k, |i, j| v.iter().map(|r| r[i].conj() * r[j]).sum());
    g.hermitize();
    g
}

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("O{i}")).collect()
}

#[test]
fn algebra_random_gram_k3_jmax4() {
    for seed in 0..4 {
        let gen = GeneratorSet::new(labels(3), random_psd(3, 3, seed)).unwrap();
        let adj = adjoint_check(&gen, 4, seed).unwrap();
        assert!(adj.passed(), "{adj:?}");
        let ccr = ccr_check(&gen, 4, seed).unwrap();
        assert_eq!(ccr.len(), 3);
        for r in &ccr {
            assert!(r.passed() && r.checks > 0, "{r:?}");
        }
    }
}

#[test]
fn monomial_gram_is_hermitian_psd() {
    for (k, j_max) in [(1, 3), (2, 3), (3, 2), (3, 3)] {
        let gen = GeneratorSet::new(labels(k), random_psd(k, k, 7 + k as u64)).unwrap();
        let basis: Vec<FockVector> = (0..=j_max)
            .flat_map(|d| monomials(k, d))
            .map(|m| FockVector::monomial(j_max, m, C64::new(1.0, 0.0)).unwrap())
            .collect();
        let n = basis.len();
        let g = CMatrix::from_fn(n, |i, j| fock_inner(&basis[i], &basis[j], &gen).unwrap());
        assert!(g.hermitian_deviation() < 1e-14);
        let (report, _) = g.cholesky();
        assert!(report.succeeded, "k={k} j_max={j_max}: {report:?}");
    }
}

#[test]
fn identity_gram_gives_ladder_operators() {
    let gen = GeneratorSet::new(labels(1), CMatrix::identity(1)).unwrap();
    let o = [C64::new(1.0, 0.0)];
    let mut f = FockVector::vacuum(4);
    for n in 1..=4 {
        f = create(&o, &f, &gen, Truncation::Strict).unwrap();
        let norm = fock_inner(&f, &f, &gen).unwrap().re;
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        assert!((norm - fact).abs() < 1e-12);
    }
}

#[test]
fn create_is_linear_and_annihilate_antilinear() {
    let gen = GeneratorSet::new(labels(2), random_psd(2, 2, 3)).unwrap();
    let f = FockVector::monomial(3, vec![0, 1], C64::new(0.3, -0.2))
        .unwrap()
        .add(&FockVector::monomial(3, vec![1], C64::new(1.0, 0.5)).unwrap())
        .unwrap();
    let o = [C64::new(0.4, 0.1), C64::new(-0.2, 0.7)];
    let z = C64::new(0.6, -1.3);
    let zo: Vec<C64> = o.iter().map(|c| c * z).collect();
    let s = Truncation::Strict;
    let lhs = create(&zo, &f, &gen, s).unwrap();
    let rhs = create(&o, &f, &gen, s).unwrap().scale(z);
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    let lhs = annihilate(&zo, &f, &gen).unwrap();
    let rhs = annihilate(&o, &f, &gen).unwrap().scale(z.conj());
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
    let g = f.scale(z);
    let lhs = create(&o, &f.add(&g).unwrap(), &gen, s).unwrap();
    let rhs = create(&o, &f, &gen, s).unwrap().add(&create(&o, &g, &gen, s).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-14);
}

fn unit(n: usize, i: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[i] = C64::new(1.0, 0.0);
    v
}

#[test]
fn field_operators_on_vacuum() {
    let cov = random_psd(4, 4, 11);
    let smearing = vec![unit(4, 0), unit(4, 2), vec![C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]];
    let gen = GeneratorSet::from_covariance(labels(3), smearing, &cov).unwrap();
    assert_eq!(gen.gram[(0, 1)], cov[(0, 2)]);
    let j = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0)];
    let omega = FockVector::vacuum(3);
    let one = field_operator_apply(&j, &omega, &gen, Truncation::Strict).unwrap();
    assert_eq!(one.get(&[]), C64::new(0.0, 0.0));
    assert!((one.get(&[0]) - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!((one.get(&[1]) - C64::new(2.0, 0.0)).norm() < 1e-12);
    let two = field_operator_apply(&j, &one, &gen, Truncation::Strict).unwrap();
    let c = gen.coefficients(&j).unwrap();
    let expect = gen.inner(&c, &c);
    assert!((two.get(&[]) - expect).norm() < 1e-12 * expect.norm());
    // a site outside the smearing span
    assert!(gen.coefficients(&unit(4, 1)).is_err());
}

#[test]
fn field_operator_is_symmetric_for_real_combinations() {
    let cov = random_psd(3, 3, 5);
    let gen = GeneratorSet::from_covariance(labels(3), (0..3).map(|i| unit(3, i)).collect(), &cov).unwrap();
    let j = vec![C64::new(0.7, 0.0), C64::new(-1.1, 0.0), C64::new(0.2, 0.0)];
    let t = Truncation::Tolerant;
    let basis: Vec<FockVector> = (0..=2)
        .flat_map(|d| monomials(3, d))
        .map(|m| FockVector::monomial(3, m, C64::new(1.0, 0.0)).unwrap())
        .collect();
    for f in &basis {
        for g in &basis {
            let lhs = fock_inner(&field_operator_apply(&j, f, &gen, t).unwrap(), g, &gen).unwrap();
            let rhs = fock_inner(f, &field_operator_apply(&j, g, &gen, t).unwrap(), &gen).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}

#[test]
fn commutator_scalars() {
    let cov = random_psd(3, 3, 21);
    let gen = GeneratorSet::from_covariance(labels(3), (0..3).map(|i| unit(3, i)).collect(), &cov).unwrap();
    let f = vec![C64::new(0.3, 0.0), C64::new(1.0, 0.0), C64::new(-0.4, 0.0)];
    let g = vec![C64::new(-0.8, 0.0), C64::new(0.1, 0.0), C64::new(0.9, 0.0)];
    let same = commutator_scalar(&f, &f, &gen, 4).unwrap();
    assert!(same.scalar.norm() < 1e-15 && same.max_deviation < 1e-10);
    let r = commutator_scalar(&f, &g, &gen, 4).unwrap();
    assert!(r.max_deviation < 1e-10 && r.checks > 1, "{r:?}");
    // real smearings: 2i sum f(y) g(x) Im cov[y][x]
    let mut direct = 0.0;
    for y in 0..3 {
        for x in 0..3 {
            direct += f[y].re * g[x].re * gen.gram[(y, x)].im;
        }
    }
    assert!((r.scalar - C64::new(0.0, 2.0 * direct)).norm() < 1e-14);
    assert!(r.scalar.norm() > 1e-3);

    let real = CMatrix::from_fn(3, |i, j| C64::new(cov[(i, j)].re, 0.0));
    let rgen = GeneratorSet::from_covariance(labels(3), (0..3).map(|i| unit(3, i)).collect(), &real).unwrap();
    assert_eq!(commutator_scalar(&f, &g, &rgen, 3).unwrap().scalar, C64::new(0.0, 0.0));
}

#[test]
fn free_gram_commutator_matches_kernel_entry() {
    let lat = Lattice::new(5, Boundary::Periodic).unwrap();
    let k = build_kernel_a(&lat, 1.0, 1.0 / 9.0, MomentumMode::Brillouin).unwrap();
    let beta = 2.0;
    let cov = k.entries.scale(1.0 / beta);
    let xo = lat.center_site().unwrap();
    let y = lat.site([3, 2, 2, 2]).unwrap();
    assert_eq!(IntervalClass::of(&lat.separation(y, xo).unwrap()), IntervalClass::Timelike);
    let n = lat.n_sites();
    let gen = GeneratorSet::from_covariance(vec!["y".into(), "xo".into()], vec![unit(n, y), unit(n, xo)], &cov).unwrap();
    let r = commutator_scalar(&unit(n, y), &unit(n, xo), &gen, 4).unwrap();
    let expect = C64::new(0.0, 2.0 * k.entries[(y, xo)].im / beta);
    assert!(expect.norm() > 1e-4);
    assert!((r.scalar - expect).norm() < 1e-14, "{} vs {}", r.scalar, expect);
    assert!(r.max_deviation < 1e-10);
    assert!(adjoint_check(&gen, 4, 1).unwrap().passed());
    assert!(ccr_check(&gen, 4, 1).unwrap().iter().all(|c| c.passed()));
}

#[test]
fn microcausality_report_extent5() {
    let lat = Lattice::new(5, Boundary::Periodic).unwrap();
    let alphas = [1.0 / 9.0, 1.0 / 27.0, 1.0 / 81.0];
    let r = microcausality_report(&lat, 1.0, &alphas, MomentumMode::Brillouin, 1.0, 10.0).unwrap();
    assert_eq!(r.per_alpha.len(), 3);
    assert_eq!(r.entries.len(), 3 * lat.n_sites());
    for e in r.entries.iter().filter(|e| e.class == IntervalClass::Coincident) {
        assert!(e.abs_im < 1e-14);
    }
    assert!(r.monotone, "{:?}", r.per_alpha);
    for a in &r.per_alpha {
        assert!(a.max_timelike > 1e-3, "{a:?}");
    }
    assert!(r.fit_exponent > 0.0);
    let csv = r.to_csv();
    assert!(csv.starts_with("class,interval,abs_im,alpha\n"));
    assert_eq!(csv.lines().count(), 1 + r.entries.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fock_inner_is_hermitian(seed in 0u64..10_000, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let gen = GeneratorSet::new(labels(2), random_psd(2, 2, seed)).unwrap();
        let f = FockVector::monomial(3, vec![0, 1], C64::new(a, b)).unwrap()
            .add(&FockVector::monomial(3, vec![1, 1, 0], C64::new(b, 1.0)).unwrap()).unwrap();
        let g = FockVector::monomial(3, vec![1, 0], C64::new(1.0, -a)).unwrap()
            .add(&FockVector::vacuum(3)).unwrap();
        let fg = fock_inner(&f, &g, &gen).unwrap();
        let gf = fock_inner(&g, &f, &gen).unwrap();
        prop_assert!((fg - gf.conj()).norm() < 1e-12);
        prop_assert!(fock_inner(&f, &f, &gen).unwrap().re >= -1e-12);
    }
}
