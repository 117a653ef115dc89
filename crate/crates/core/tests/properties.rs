use num_complex::Complex64;
use proptest::prelude::*;

use pulsecomp::complex_gaussian::{random_unitary, ComplexGaussianLaw};
use pulsecomp::linalg::{max_abs_diff, CMatrix, ComplexVector, HermitianMatrix};
use pulsecomp::pulse_codes::{dft, idft, PulseCode};
use pulsecomp::rng::RngStream;
use pulsecomp::scatter_model::{
    lag_profile, marginal_covariance, quad_form_constant, signal_covariance, PartitionOfUnity, Temperature, VarianceField,
    WindowNormalization,
};
use pulsecomp::wishart::{scalar_skewness, scalar_variance, InverseWishartParams};

fn complex_vec(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn code(max_len: usize) -> impl Strategy<Value = PulseCode> {
    complex_vec(max_len)
        .prop_filter("non-zero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| PulseCode::normalized("p", v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(x in complex_vec(40)) {
        let lhs: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let rhs: f64 = dft(&x).iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs));
        let back = idft(&dft(&x));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn circulant_matches_fft_convolution(c in code(24), seed in any::<u64>()) {
        let d = c.d();
        let mu: Vec<Complex64> = (0..d).map(|k| Complex64::new((k as f64 + seed as f64 % 7.0).sin(), (k as f64).cos())).collect();
        let direct = c.circulant_operator() * nalgebra::DVector::from_column_slice(&mu);
        let fast = c.convolve(&mu).unwrap();
        for (a, b) in direct.iter().zip(&fast) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn aa_adjoint_is_diagonalized_by_the_dft(c in code(16)) {
        let d = c.d();
        let a = c.circulant_operator();
        let aa = &a * a.adjoint();
        let moduli = c.spectrum().moduli;
        // F (AA') F^{-1} = diag(|ε̂|²) with F the unnormalized DFT matrix
        let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI / d as f64);
        let f = CMatrix::from_fn(d, d, |k, t| w.powu((k * t) as u32));
        let finv = f.adjoint().unscale(d as f64);
        let diag = &f * aa * finv;
        for k in 0..d {
            for j in 0..d {
                let expect = if k == j { moduli[k] * moduli[k] } else { 0.0 };
                prop_assert!((diag[(k, j)] - Complex64::new(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn twins_share_covariance(c in code(16), seed in any::<u64>(), s0 in 0.01f64..5.0, t in 0.0f64..2.0) {
        let twin = c.random_phase_twin(&mut RngStream::new(seed, 3).generator());
        prop_assert!(c.spectrum().max_modulus_gap(&twin.spectrum()) < 1e-12);
        prop_assert!((twin.norm() - 1.0).abs() < 1e-12);
        let field = VarianceField::constant(s0).unwrap();
        let t = Temperature::new(t).unwrap();
        let gap = signal_covariance(&c, &field, t).unwrap().max_abs_diff(&signal_covariance(&twin, &field, t).unwrap());
        prop_assert!(gap < 1e-10);
    }

    #[test]
    fn lag_profile_equals_covariance(c in code(12), values in prop::collection::vec(0.0f64..3.0, 12), t in 0.0f64..1.0) {
        let d = c.d();
        let t = Temperature::new(t).unwrap();
        let field = VarianceField::pointwise(values[..d].to_vec()).unwrap();
        let gap = lag_profile(&c, &field, t).unwrap().max_abs_diff(&signal_covariance(&c, &field, t).unwrap());
        prop_assert!(gap < 1e-10);
    }

    #[test]
    fn partition_lag_profile_equals_covariance(width in 1usize..4, n in 1usize..5, sigma in prop::collection::vec(0.0f64..3.0, 4)) {
        let d = 4 * n * 2;
        let c = PulseCode::boxcar(d, width).unwrap();
        let part = PartitionOfUnity::smooth(d, n).unwrap();
        let field = VarianceField::partitioned(sigma[..n].to_vec(), part).unwrap();
        let t = Temperature::new(0.3).unwrap();
        let gap = lag_profile(&c, &field, t).unwrap().max_abs_diff(&signal_covariance(&c, &field, t).unwrap());
        prop_assert!(gap < 1e-10);
    }

    #[test]
    fn quad_form_is_phi_sigma_phi(c in code(12), phi in complex_vec(12), s0 in 0.0f64..4.0, t in 0.0f64..2.0) {
        let d = c.d();
        let mut p = phi.clone();
        p.resize(d, Complex64::new(0.5, -0.25));
        let phi = ComplexVector::new(p[..d].to_vec()).unwrap();
        let t = Temperature::new(t).unwrap();
        let q = quad_form_constant(&c, &phi, s0, t).unwrap();
        let sigma = if s0 > 0.0 {
            signal_covariance(&c, &VarianceField::constant(s0).unwrap(), t).unwrap()
        } else {
            HermitianMatrix::scaled_identity(d, t.value()).unwrap()
        };
        let direct = (phi.as_dvector().adjoint() * sigma.as_matrix() * phi.as_dvector())[(0, 0)];
        prop_assert!((q - direct.re).abs() < 1e-10 * (1.0 + q.abs()));
        prop_assert!(direct.im.abs() < 1e-10 * (1.0 + q.abs()));
    }

    #[test]
    fn smooth_partition_sums_to_one(n in 1usize..9, mult in 2usize..12) {
        let d = n * mult;
        let p = PartitionOfUnity::smooth(d, n).unwrap();
        for s in p.sum_of_squares() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        let u = PartitionOfUnity::smooth_with(d, n, WindowNormalization::UnitNorm).unwrap();
        for w in u.windows() {
            prop_assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_covariance_with_delta_windows_is_sigma(c in code(10), values in prop::collection::vec(0.0f64..3.0, 10), t in 0.0f64..1.0) {
        let d = c.d();
        let t = Temperature::new(t).unwrap();
        let basis: Vec<ComplexVector> = (0..d).map(|i| ComplexVector::basis(d, i).unwrap()).collect();
        let m = marginal_covariance(&c, &PartitionOfUnity::delta(d).unwrap(), &values[..d], t, &basis).unwrap();
        let s = signal_covariance(&c, &VarianceField::pointwise(values[..d].to_vec()).unwrap(), t).unwrap();
        prop_assert!(m.max_abs_diff(&s) < 1e-10);
    }

    #[test]
    fn density_is_unitarily_invariant(dim in 1usize..5, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).generator();
        let u = random_unitary(dim, &mut rng);
        let law = ComplexGaussianLaw::white_noise(dim).unwrap();
        let rotated = law.affine_push(&ComplexVector::zeros(dim).unwrap(), &u).unwrap();
        prop_assert!(max_abs_diff(rotated.covariance().as_matrix(), &CMatrix::identity(dim, dim)) < 1e-12);
        let z = ComplexVector::new((0..dim).map(|k| Complex64::new(k as f64 * 0.3, 1.0 - k as f64)).collect()).unwrap();
        let uz = ComplexVector::from_dvector(&u * z.as_dvector()).unwrap();
        prop_assert!((law.log_density(&z).unwrap() - law.log_density(&uz).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn inverse_wishart_moments(psi in 0.1f64..10.0, nu in 6.01f64..80.0) {
        let v = scalar_variance(psi, nu).unwrap();
        prop_assert!(v > 0.0);
        prop_assert!(scalar_skewness(nu).unwrap() > 0.0);
        // more degrees of freedom at fixed scale-per-dof tightens the law
        prop_assert!(scalar_variance(psi * (nu + 1.0) / nu, nu + 1.0).unwrap() < v * 1.0001);
    }

    #[test]
    fn conjugate_update_adds_energy(psi in 0.1f64..10.0, nu in 0.5f64..10.0, obs in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let prior = InverseWishartParams::scalar(psi, nu).unwrap();
        let xs: Vec<_> = obs.iter().map(|&x| nalgebra::DVector::from_element(1, x)).collect();
        let post = prior.conjugate_update(&xs).unwrap();
        let energy: f64 = obs.iter().map(|x| x * x).sum();
        prop_assert!((post.scalar_scale().unwrap() - psi - energy).abs() < 1e-12);
        prop_assert_eq!(post.dof(), nu + obs.len() as f64);
    }
}
