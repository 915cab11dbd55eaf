use semires_core::continuation::{neumann_resolvent, real_axis_jump, NeumannOptions};
use semires_core::factor::factorize_shifted;
use semires_core::layout::SupportLayout;
use semires_core::linmap::{random_unit_vector, PowerOptions};
use semires_core::potential::PotentialFamily;
use semires_core::resolvent::{epsilon_ladder, outgoing_cutoff_norm, resolvent_norm, Cutoff, NormOptions};
use semires_core::scalar::{cplx, norm2};
use semires_core::scene::{Realization, Scene};
use semires_core::{Error, Scene32};

fn scene(v: PotentialFamily<f64>) -> Scene<f64> {
    Scene::new(SupportLayout::default(), v, 1.0).unwrap()
}

#[test]
fn neumann_matches_direct_solve_at_half_radius() {
    let d = scene(PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }).discretize(0.1).unwrap();
    let op = d.operator(Realization::Cap).unwrap();
    let at_e = factorize_shifted(&op, cplx(1.0, 0.0)).unwrap();
    let p = PowerOptions { tol: 1e-10, ..Default::default() };
    let norm = resolvent_norm(&d, Realization::Cap, cplx(1.0, 0.0), Cutoff::Identity, &p).unwrap().value;
    let v = random_unit_vector::<f64>(d.dim(), 5);
    for angle in [0.0_f64, 1.3, 3.1, 4.4] {
        let lambda = cplx(1.0, 0.0) + cplx(angle.cos(), angle.sin()) * (0.5 / norm);
        let series = neumann_resolvent(&at_e, norm, lambda, &v, &NeumannOptions::default()).unwrap();
        let direct = factorize_shifted(&op, lambda).unwrap().solve(&v);
        let diff: Vec<_> = series.value.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!(norm2(&diff) <= 1e-8 * norm2(&direct), "angle {angle}");
        assert!(series.observed_ratio <= 0.5 + 1e-6);
    }
    let far = cplx(1.0, -2.0 / norm);
    assert!(matches!(neumann_resolvent(&at_e, norm, far, &v, &NeumannOptions::default()), Err(Error::Divergent { .. })));
}

#[test]
fn underestimated_norm_is_caught_by_term_growth() {
    let d = scene(PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }).discretize(0.1).unwrap();
    let op = d.operator(Realization::Cap).unwrap();
    let at_e = factorize_shifted(&op, cplx(1.0, 0.0)).unwrap();
    let norm = resolvent_norm(&d, Realization::Cap, cplx(1.0, 0.0), Cutoff::Identity, &PowerOptions::default()).unwrap().value;
    // claim a norm ten times too small: the precondition passes, the terms grow
    let lambda = cplx(1.0 + 3.0 / norm, 0.0);
    let v = random_unit_vector::<f64>(d.dim(), 8);
    let r = neumann_resolvent(&at_e, norm / 10.0, lambda, &v, &NeumannOptions::default());
    assert!(matches!(r, Err(Error::Divergent { .. }) | Err(Error::NoConvergence { .. })), "{r:?}");
}

#[test]
fn cutoff_norm_is_continuous_across_real_axis() {
    for v in [PotentialFamily::Zero, PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }] {
        let j = real_axis_jump(&scene(v), 0.1, 1.0, &[1e-3, 1e-4, 1e-5], &NormOptions::default()).unwrap();
        // the jump itself is O(δ); continuity is its vanishing limit
        assert!(j.limit < 0.01, "{v:?}: {j:?}");
        assert!(j.jumps[2] < 0.01);
    }
}

#[test]
fn epsilon_ladder_agrees_with_outgoing_realization() {
    let s = scene(PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 });
    let p = PowerOptions { tol: 1e-8, ..Default::default() };
    let (rungs, limit) = epsilon_ladder(&s, 0.1, &[0.002, 0.001, 0.0005], 10.0, &p).unwrap();
    assert!(rungs.windows(2).all(|w| w[1].half_length >= w[0].half_length));
    let outgoing = outgoing_cutoff_norm(&s, 0.1, cplx(1.0, 0.0), &NormOptions { power: p, ..Default::default() }).unwrap().value();
    assert!((limit - outgoing).abs() / outgoing < 0.02, "ladder {limit} vs outgoing {outgoing}");
}

#[test]
fn single_precision_pipeline_runs() {
    let s = Scene32::new(SupportLayout::default(), PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }, 1.0).unwrap();
    let d = s.discretize(0.1).unwrap();
    d.check_layout().unwrap();
    let p = PowerOptions { tol: 1e-4, ..Default::default() };
    let n32 = resolvent_norm(&d, Realization::Outgoing, cplx(1.0, 0.0), Cutoff::Chi, &p).unwrap().value;
    let d64 = scene(PotentialFamily::NontrapBump { amplitude: 0.5, width: 1.0 }).discretize(0.1).unwrap();
    let n64 = resolvent_norm(&d64, Realization::Outgoing, cplx(1.0, 0.0), Cutoff::Chi, &PowerOptions::default()).unwrap().value;
    assert!(((n32 as f64) - n64).abs() / n64 < 1e-3, "{n32} vs {n64}");
}
