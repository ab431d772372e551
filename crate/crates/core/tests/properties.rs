use dqlab_core::dressed::{
    build_frame_n1, closure_norm, compile_gate_with_amplitude, compose, gate_infidelity, pauli, DressedFrame, Mat2,
    PulseSegment,
};
use dqlab_core::hamiltonians::{build_dominant, build_total, constrained_dipolar};
use dqlab_core::pairing::{solve_bcs, PairingModel};
use dqlab_core::spin::basis::sector_dimension;
use dqlab_core::spin::ops::total_pair_expr;
use dqlab_core::spin::spec::normalize_profile;
use dqlab_core::spin::{propagate, Basis, KetState, LinearOp, SpinBathSpec, Zeeman};
use dqlab_core::C64;
use nalgebra::{DMatrix, DVector, Matrix2};
use proptest::prelude::*;

fn profile(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..1.0, k)
}

fn spec_strategy(k_max: usize) -> impl Strategy<Value = SpinBathSpec<f64>> {
    (2..=k_max, 1u8..=2)
        .prop_flat_map(|(k, two_i)| {
            (
                Just(two_i),
                profile(k),
                0.3f64..1.5,
                0.0f64..1.0,
                prop::collection::vec(-0.02f64..0.02, k * k),
            )
        })
        .prop_map(|(two_i, raw, a, b_field, bvals)| {
            let k = raw.len();
            let b = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { bvals[i.min(j) * k + i.max(j)] });
            let z = Zeeman {
                g_star: 1.0,
                mu_b: 1.0,
                g_n: 0.05,
                mu_n: 0.1,
                b: b_field,
            };
            SpinBathSpec::new(two_i, normalize_profile(&raw).unwrap(), a, z, b).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sectors_partition_the_full_space(k in 2usize..6, two_i in 1u8..4) {
        let s = SpinBathSpec::<f64>::uniform(k, two_i).unwrap();
        let total: u128 = (0..=s.max_pairs()).map(|n| sector_dimension(k, two_i, n)).sum();
        prop_assert_eq!(total as usize, Basis::full(&s).dim());
        for n in 0..=s.max_pairs() {
            prop_assert_eq!(Basis::sector(&s, n).unwrap().dim() as u128, sector_dimension(k, two_i, n));
        }
    }

    #[test]
    fn total_hamiltonian_conserves_pair_number(s in spec_strategy(4)) {
        let full = Basis::full(&s);
        let h = build_total(&s, &full).unwrap();
        let n = LinearOp::hermitian_from_expr(&total_pair_expr(&s), &full).unwrap();
        prop_assert!(h.commutator(&n).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn n1_frame_is_closed_and_orthonormal(s in spec_strategy(7), f in -2.0f64..2.0) {
        let frame = build_frame_n1(&s).unwrap();
        prop_assert!((frame.h_m() - 1.0).abs() < 1e-12);
        prop_assert!(frame.orthonormality_defect() < 1e-12);
        let hd = build_dominant(&s, f, frame.basis()).unwrap();
        prop_assert!(closure_norm(&frame, &hd).unwrap() < 1e-10);
    }

    #[test]
    fn frame_text_round_trip(s in spec_strategy(5)) {
        let frame = build_frame_n1(&s).unwrap();
        let back = DressedFrame::from_text(&frame.to_text(), &s).unwrap();
        prop_assert!((back.ket1().fidelity(frame.ket1()).unwrap() - 1.0).abs() < 1e-14);
        prop_assert_eq!(back.h_m(), frame.h_m());
    }

    #[test]
    fn evolution_is_unitary(s in spec_strategy(4), t in 0.0f64..5.0, seed in any::<u64>()) {
        let basis = Basis::sector(&s, 1).unwrap();
        let h = build_total(&s, &basis).unwrap();
        let mut x = seed;
        let amps = DVector::from_fn(basis.dim(), |_, _| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            C64::new((x >> 33) as f64 / 2f64.powi(31) - 1.0, 0.3)
        });
        let psi = KetState::new(basis, amps).unwrap().normalized().unwrap();
        prop_assert!((propagate(&h, &psi, t).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pulse_angles_round_trip(phi in 0.0f64..6.0, theta in 0.01f64..3.13, amp in 0.1f64..3.0) {
        let seg = PulseSegment::from_angles(phi, theta, amp).unwrap();
        prop_assert!((seg.phi() - phi).abs() < 1e-12 * (1.0 + phi));
        prop_assert!((seg.theta() - theta).abs() < 1e-12);
    }

    #[test]
    fn compiled_gates_hit_their_targets(q in prop::array::uniform4(-1.0f64..1.0), phase in -3.0f64..3.0, amp in prop_oneof![0.2f64..2.0, -2.0f64..-0.2]) {
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let i = C64::new(0.0, 1.0);
        let u: Mat2<f64> = (Matrix2::identity() * C64::from(q[0] / n)
            - (pauli::<f64>('X') * C64::from(q[1] / n) + pauli('Y') * C64::from(q[2] / n) + pauli('Z') * C64::from(q[3] / n)) * i)
            * C64::from_polar(1.0, phase);
        let segs = compile_gate_with_amplitude(&u, amp).unwrap();
        prop_assert!(gate_infidelity(&compose(&segs), &u) < 1e-8);
        prop_assert!(segs.iter().all(|s| s.duration >= 0.0));
    }

    #[test]
    fn uniform_bcs_matches_closed_form(k in 2usize..24, frac in 0.0f64..1.0, a in 0.2f64..2.0, f in 0.3f64..3.0, b in 0.0f64..0.05) {
        let n = 1 + ((k - 1) as f64 * frac) as usize % (k - 1);
        let m = PairingModel::uniform(k, a, f, b, n as f64).unwrap();
        let sol = solve_bcs(&m, 1e-12, 100_000).unwrap();
        let expect = (a * a / (4.0 * f * k as f64) + b) * ((n * (k - n)) as f64).sqrt();
        prop_assert!(sol.delta.iter().all(|d| (d - expect).abs() < 1e-8 * (1.0 + expect)));
        prop_assert!(sol.u.iter().zip(&sol.v).all(|(u, v)| (u * u + v * v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bcs_number_equation_holds(raw in profile(6), eps in prop::collection::vec(-0.5f64..0.5, 6), n in 0.5f64..5.5) {
        let alpha = normalize_profile(&raw).unwrap();
        let g = DMatrix::from_fn(6, 6, |i, j| 0.3 * alpha[i] * alpha[j]);
        let m = PairingModel::new(eps, g, DMatrix::zeros(6, 6), n).unwrap();
        let sol = solve_bcs(&m, 1e-11, 200_000).unwrap();
        let count: f64 = sol.v.iter().map(|v| v * v).sum();
        prop_assert!((count - n).abs() < 1e-9);
        prop_assert!(sol.delta.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn constrained_dipolar_meets_constraints(raw in profile(6), b_bar in -0.05f64..0.05) {
        let alpha = normalize_profile(&raw).unwrap();
        let c = constrained_dipolar(&alpha, b_bar).unwrap();
        for i in 0..6 {
            prop_assert_eq!(c.b[(i, i)], 0.0);
            let row: f64 = (0..6).map(|j| c.b[(i, j)]).sum();
            prop_assert!((row - b_bar).abs() < 1e-8);
            let ba: f64 = (0..6).map(|j| c.b[(i, j)] * alpha[j]).sum();
            prop_assert!((ba - b_bar * alpha[i]).abs() < 1e-8);
            for j in 0..6 {
                prop_assert_eq!(c.b[(i, j)], c.b[(j, i)]);
            }
        }
    }
}
