use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schur_core::kernels::{
    choi_spectrum, cp_kolmogorov, cp_positivity_check, debranges_kernel, debranges_kernel_fn,
    identity_representation, kolmogorov, modulemap_reduction_check, positivity_check,
    representation_residual, szego, szego_disk, CpKernelSample, KernelSample, Setting,
};
use schur_core::matops::{c64, identity, kron, op_norm, Matrix, DEFAULT_TOL};
use schur_core::random::{gaussian_matrix, random_ball_point, random_disk_point, random_unitary};
use schur_core::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn szego_kernel_is_positive(seed in any::<u64>(), d in 1usize..4, n in 1usize..10) {
        let mut g = rng(seed);
        let setting = if d == 1 { Setting::Disk } else { Setting::Ball { d } };
        let pts: Vec<Vec<_>> = (0..n).map(|_| random_ball_point(&mut g, d, 0.95)).collect();
        let k = KernelSample::from_fn(setting, pts, 1, |z, w| {
            Ok(Matrix::from_element(1, 1, szego(setting, z, w)?))
        }).unwrap();
        prop_assert!(k.hermitian_defect() <= 1e-14);
        prop_assert!(positivity_check(&k, DEFAULT_TOL).unwrap().is_psd);
    }

    #[test]
    fn kolmogorov_reconstructs(seed in any::<u64>(), n in 1usize..8, b in 1usize..3) {
        let mut g = rng(seed);
        let pts: Vec<Vec<_>> = (0..n).map(|_| vec![random_disk_point(&mut g, 0.9)]).collect();
        let m = gaussian_matrix(&mut g, b, b);
        let dmat = &m * c64(0.9 / op_norm(&m), 0.0);
        // A constant contraction has the positive kernel (I - DD*)·k_Szegő.
        let same: Vec<Matrix> = vec![dmat; n];
        let k = debranges_kernel(Setting::Disk, &pts, &same).unwrap();
        let f = kolmogorov(&k, DEFAULT_TOL).unwrap();
        prop_assert!(f.relative_residual(&k) <= 1e-10);
        prop_assert!(f.dim() <= n * b);
    }

    #[test]
    fn cp_kernels_from_maps_are_reconstructed(seed in any::<u64>(), k in 1usize..4, m in 1usize..4, n in 1usize..4) {
        let mut g = rng(seed);
        let r = g.random_range(1..=2);
        let hs: Vec<Matrix> = (0..n).map(|_| gaussian_matrix(&mut g, m, k * r)).collect();
        let labels = (0..n).map(|i| i.to_string()).collect();
        let kern = CpKernelSample::from_map(labels, k, m, |i, j, a| &hs[i] * kron(a, &identity(r)) * hs[j].adjoint()).unwrap();
        prop_assert!(cp_positivity_check(&kern, DEFAULT_TOL).unwrap().is_psd);
        let dec = cp_kolmogorov(&kern, DEFAULT_TOL).unwrap();
        prop_assert!(dec.reconstruction_residual(&kern) <= 1e-9);
        prop_assert!(dec.homomorphism_residual() <= 1e-9);
    }

    #[test]
    fn unitary_conjugation_is_cp(seed in any::<u64>(), k in 1usize..5) {
        let u = random_unitary(&mut rng(seed), k);
        let kern = CpKernelSample::from_map(vec!["a".into()], k, k, |_, _, a| &u * a * u.adjoint()).unwrap();
        let spec = choi_spectrum(&kern).unwrap();
        prop_assert!(spec.iter().rev().skip(1).all(|x| x.abs() <= 1e-12));
        prop_assert!((spec[spec.len() - 1] - k as f64).abs() <= 1e-12);
    }

    #[test]
    fn module_map_verdicts_agree(seed in any::<u64>(), k in 1usize..4, s in 1usize..3, n in 1usize..4) {
        let mut g = rng(seed);
        let h = gaussian_matrix(&mut g, n * s, n * s);
        let x = &h * h.adjoint() - identity(n * s) * c64(g.random::<f64>() * op_norm(&h).powi(2) * 0.5, 0.0);
        let labels = (0..n).map(|i| i.to_string()).collect();
        let kern = CpKernelSample::from_map(labels, k, k * s, |i, j, a| {
            kron(a, &x.view((i * s, j * s), (s, s)).into_owned())
        }).unwrap();
        let pi: Vec<Matrix> = identity_representation(k).iter().map(|e| kron(e, &identity(s))).collect();
        let rep = modulemap_reduction_check(&kern, &pi, 1e-10).unwrap();
        prop_assert!(rep.holds);
        prop_assert_eq!(rep.verdicts_agree(), Some(true));
    }
}

#[test]
fn szego_values() {
    assert_eq!(
        szego_disk(c64(0.5, 0.0), c64(0.5, 0.0)).unwrap(),
        c64(4.0 / 3.0, 0.0)
    );
    assert!(matches!(
        szego_disk(c64(1.0, 0.0), c64(0.0, 0.0)),
        Err(Error::Domain(_))
    ));
    assert!(szego(
        Setting::Ball { d: 2 },
        &[c64(0.8, 0.0), c64(0.8, 0.0)],
        &[c64(0.0, 0.0); 2]
    )
    .is_err());
}

#[test]
fn blaschke_kernel_has_rank_one() {
    let a = c64(0.3, 0.2);
    let pts: Vec<Vec<_>> = [0.1, -0.4, 0.6, 0.0]
        .iter()
        .map(|&x| vec![c64(x, 0.5 * x)])
        .collect();
    let k = debranges_kernel_fn(Setting::Disk, &pts, |z| {
        let b = (z[0] - a) / (c64(1.0, 0.0) - a.conj() * z[0]);
        Ok(Matrix::from_element(1, 1, b))
    })
    .unwrap();
    let f = kolmogorov(&k, DEFAULT_TOL).unwrap();
    assert_eq!(f.dim(), 1);
    assert!(f.relative_residual(&k) < 1e-12);
}

#[test]
fn non_contractive_values_give_indefinite_kernels() {
    let pts = vec![vec![c64(0.0, 0.0)], vec![c64(0.5, 0.0)]];
    let v = vec![Matrix::from_element(1, 1, c64(1.5, 0.0)); 2];
    let k = debranges_kernel(Setting::Disk, &pts, &v).unwrap();
    assert!(!positivity_check(&k, DEFAULT_TOL).unwrap().is_psd);
    assert!(matches!(
        kolmogorov(&k, DEFAULT_TOL),
        Err(Error::NotPsd { .. })
    ));
}

#[test]
fn transpose_map_is_rejected() {
    let kern = CpKernelSample::from_map(vec!["a".into()], 2, 2, |_, _, a| a.transpose()).unwrap();
    assert!(!cp_positivity_check(&kern, DEFAULT_TOL).unwrap().is_psd);
    assert!(matches!(
        cp_kolmogorov(&kern, DEFAULT_TOL),
        Err(Error::NotPsd { .. })
    ));
    let spec = choi_spectrum(&kern).unwrap();
    assert!((spec[0] + 1.0).abs() < 1e-12);
}

#[test]
fn identity_representation_is_a_homomorphism() {
    for k in 1..=4 {
        assert!(representation_residual(&identity_representation(k), k) < 1e-15);
    }
}

#[test]
fn broken_module_map_is_reported() {
    let kern = CpKernelSample::from_map(vec!["a".into()], 2, 2, |_, _, a| a.transpose()).unwrap();
    let rep = modulemap_reduction_check(&kern, &identity_representation(2), 1e-10).unwrap();
    assert!(!rep.holds);
    assert_eq!(rep.verdicts_agree(), None);
}
