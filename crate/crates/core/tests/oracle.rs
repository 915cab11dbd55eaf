//! Dense oracles: every matrix-free quantity on grids small enough to
//! realize densely is compared against an independent nalgebra computation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use semires_core::dense::DenseMatrix;
use semires_core::gluing::{GluingMode, GluingOptions, GluingSystem, Piece};
use semires_core::grid::make_grid;
use semires_core::layout::SupportLayout;
use semires_core::linmap::{power_iteration, LinearMap, PowerOptions};
use semires_core::operator::commutator_with_cutoff;
use semires_core::potential::PotentialFamily;
use semires_core::resolvent::{resolvent_norm, Cutoff};
use semires_core::scalar::cplx;
use semires_core::scene::{Realization, Scene};
use semires_core::{factor::factorize_shifted, Discretization64};

const TIGHT: PowerOptions<f64> = PowerOptions { tol: 1e-12, max_iter: 2000, seed: 11, block: 4 };

fn families() -> [PotentialFamily<f64>; 3] {
    [
        PotentialFamily::Zero,
        PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 },
        PotentialFamily::BarrierTop { amplitude: 1.0, width: 1.0 },
    ]
}

/// Grids with every layout radius on a node: `N - 1` divisible by 26.
fn dense_discretizations() -> Vec<Discretization64> {
    let mut out = Vec::new();
    for (n, h) in [(157usize, 0.8), (313, 0.5)] {
        for v in families() {
            let scene = Scene::new(SupportLayout::default(), v, 1.0).unwrap();
            let g = make_grid(13.0, 26.0 / (n - 1) as f64).unwrap();
            assert_eq!(g.len(), n);
            let d = scene.discretize_on(g, h).unwrap();
            d.check_layout().unwrap();
            out.push(d);
        }
    }
    out
}

fn to_nalgebra(m: &DenseMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn svd_max(m: &DenseMatrix<f64>) -> f64 {
    to_nalgebra(m).singular_values().max()
}

#[test]
fn cutoff_norms_match_dense_svd() {
    let lambdas = [cplx(1.0, 0.0), cplx(1.0, -0.1), cplx(0.97, 0.05)];
    let realizations = [Realization::Outgoing, Realization::Cap, Realization::FreeCap, Realization::FreeOutgoing];
    let mut worst = 0.0_f64;
    let mut count = 0;
    for d in dense_discretizations() {
        assert!(d.dim() <= 400);
        let chi = DenseMatrix::diagonal(&d.profiles.chi.values);
        for which in realizations {
            let op = d.operator(which).unwrap();
            let dense_op = op.band.to_dense();
            for lambda in lambdas {
                let shifted = to_nalgebra(&dense_op) - DMatrix::identity(d.dim(), d.dim()) * lambda;
                let inv = shifted.try_inverse().expect("shifted operator invertible");
                let cri = to_nalgebra(&chi) * inv * to_nalgebra(&chi);
                let oracle = cri.singular_values().max();
                let est = resolvent_norm(&d, which, lambda, Cutoff::Chi, &TIGHT).unwrap();
                assert!(est.converged);
                worst = worst.max((est.value - oracle).abs() / oracle);
                count += 1;
            }
        }
    }
    assert_eq!(count, 72);
    assert!(worst <= 1e-8, "worst relative deviation {worst:e}");
}

#[test]
fn gluing_pieces_match_dense_svd() {
    let g = make_grid(13.0, 1.0 / 12.0).unwrap();
    for v in families() {
        let scene = Scene::new(SupportLayout::default(), v, 1.0).unwrap();
        for mode in [GluingMode::ToCap, GluingMode::FromCap] {
            let sys = GluingSystem::build_on(&scene, g.clone(), 0.5, mode, cplx(1.0, 0.0), &GluingOptions::default()).unwrap();
            for piece in [Piece::F, Piece::AK, Piece::AInf] {
                let m = sys.map(piece);
                let oracle = svd_max(&m.to_dense());
                let est = power_iteration(&m, &TIGHT);
                assert!((est.value - oracle).abs() <= 1e-8 * oracle, "{mode} {piece:?}: {} vs {oracle}", est.value);
            }
        }
    }
}

#[test]
fn commutators_match_dense_products_exactly() {
    for d in dense_discretizations() {
        for which in [Realization::Bare, Realization::Cap, Realization::FreeOutgoing] {
            let op = d.operator(which).unwrap();
            let a = op.band.to_dense();
            for profile in [&d.profiles.chi, &d.profiles.chi_k, &d.profiles.chi_inf, &d.profiles.barrier] {
                let c = DenseMatrix::diagonal(&profile.values);
                let oracle = a.matmul(&c).sub(&c.matmul(&a));
                let comm = commutator_with_cutoff(&op, profile).unwrap().band.to_dense();
                assert_eq!(comm, oracle);
            }
        }
    }
}

#[test]
fn band_solve_matches_dense_inverse() {
    let d = &dense_discretizations()[4];
    for which in [Realization::Cap, Realization::Outgoing] {
        let op = d.operator(which).unwrap();
        let lambda = cplx(1.0, -0.05);
        let fact = factorize_shifted(&op, lambda).unwrap();
        let inv = (to_nalgebra(&op.band.to_dense()) - DMatrix::identity(d.dim(), d.dim()) * lambda)
            .try_inverse()
            .unwrap();
        let scale = inv.norm();
        for j in [0, 17, d.dim() / 2, d.dim() - 1] {
            let mut e = vec![cplx(0.0, 0.0); d.dim()];
            e[j] = cplx(1.0, 0.0);
            let x = fact.solve(&e);
            let y = fact.solve_adjoint(&e);
            for i in 0..d.dim() {
                assert!((x[i] - inv[(i, j)]).norm() <= 1e-11 * scale);
                assert!((y[i] - inv[(j, i)].conj()).norm() <= 1e-11 * scale);
            }
        }
    }
}

#[test]
fn identity_cutoff_norm_matches_dense_svd() {
    let d = &dense_discretizations()[1];
    let op = d.operator(Realization::Cap).unwrap();
    let lambda = cplx(1.0, 0.0);
    let inv = (to_nalgebra(&op.band.to_dense()) - DMatrix::identity(d.dim(), d.dim()) * lambda).try_inverse().unwrap();
    let oracle = inv.singular_values().max();
    let est = resolvent_norm(d, Realization::Cap, lambda, Cutoff::Identity, &TIGHT).unwrap();
    assert!((est.value - oracle).abs() <= 1e-8 * oracle);
}
