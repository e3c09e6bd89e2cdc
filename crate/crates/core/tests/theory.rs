use lrdsc::theory::{distortion_product_prediction, shifted_box_identity};
use lrdsc::{
    lemma3_oracle, r_md, r_rc, shape_lemma_probe, thm2_predictions, CodecSpec, IntMatrix, Lattice, NestedPair,
    PredictionInputs,
};
use proptest::prelude::*;

fn grid_pair(n: usize, index_scale: i64) -> NestedPair {
    NestedPair::from_basis(
        Lattice::integer_grid(n, 1.0).unwrap(),
        IntMatrix::scalar(n, index_scale),
    )
    .unwrap()
}

/// `Σ‖λ‖²` over the representatives of `Zⁿ / mZⁿ`, ties rounding down:
/// each coordinate ranges over `−⌈m/2⌉+1 ..= ⌊m/2⌋`.
fn grid_representative_energy(n: u32, m: i64) -> f64 {
    let lo = -((m + 1) / 2) + 1;
    let hi = m / 2;
    let per: i64 = (lo..=hi).map(|k| k * k).sum();
    n as f64 * per as f64 * (m as f64).powi(n as i32 - 1)
}

#[test]
fn lemma3_matches_direct_sums_on_grids() {
    for (n, m) in [(1, 2), (1, 7), (1, 64), (2, 2), (2, 4), (2, 8)] {
        let res = lemma3_oracle(&grid_pair(n, m), 2).unwrap();
        let direct = grid_representative_energy(n as u32, m);
        assert!((res.lhs - direct).abs() < 1e-9 * direct.max(1.0), "n {n} m {m}");
        let gap = (res.lhs - res.rhs).abs() / res.lhs.abs().max(1e-300);
        assert!(gap <= 1e-3, "n {n} m {m}: {res:?}");
    }
}

#[test]
fn lemma3_on_a_hexagonal_pair() {
    let pair = NestedPair::from_basis(Lattice::hexagonal(1.0).unwrap(), IntMatrix::scalar(2, 3)).unwrap();
    let res = lemma3_oracle(&pair, 24).unwrap();
    // the grid does not follow hexagonal cells, so only a loose match
    assert!((res.lhs - res.rhs).abs() <= 2e-2 * res.lhs, "{res:?}");
}

#[test]
fn shape_probe_on_even_grids_has_closed_form() {
    for n in [1, 2] {
        let pts = shape_lemma_probe(&grid_pair(n, 2), &[4, 8, 16], 2).unwrap();
        for p in &pts {
            let m = 2.0 * p.ratio as f64;
            let exact = 1.0 / 12.0 + 1.0 / (4.0 * m * m);
            assert!((p.g_region - exact).abs() < 1e-12, "n {n} {p:?}");
            assert!((p.gap - 1.0 / (4.0 * m * m)).abs() < 1e-12);
        }
        assert!(pts.windows(2).all(|w| w[1].gap < w[0].gap));
    }
}

#[test]
fn prediction_matches_hand_computation() {
    let cfg = CodecSpec {
        central: Lattice::hexagonal(0.1).unwrap(),
        sublattice: IntMatrix::scalar(2, 4),
        mu: 12,
        r0: None,
        c: None,
        allow_small_mu: false,
    }
    .validate()
    .unwrap();
    let p = PredictionInputs::from_config(&cfg, 2.0, 2.0, 1.5, 0.0);
    let pred = thm2_predictions(&p);
    let g_hex = 5.0 / (36.0 * 3f64.sqrt());
    let cell = 3f64.sqrt() / 2.0;
    let nu_c = 0.01 * cell;
    let nu_s = (0.1f64 * 4.0 * 12.0).powi(2) * cell;
    assert!((pred.d_side_pred - 0.25 * g_hex * 144.0 * nu_s).abs() < 1e-12 * pred.d_side_pred);
    assert!((pred.d_central_pred_low - g_hex * nu_c).abs() < 1e-15);
    assert_eq!(pred.d_central_pred_low, pred.d_central_pred_high);
    // h₁ + h₂ − (2/n)log₂(ν_s/√K) + H(U₂|U₁)/n
    let rate = 4.0 - (nu_s / 4.0).log2() + 0.75;
    assert!((pred.rate_pred - rate).abs() < 1e-12);
    let product = distortion_product_prediction(&p);
    assert!((product - pred.d_side_pred * pred.d_central_pred_low).abs() < 1e-12 * product);
}

proptest! {
    #[test]
    fn rate_gap_is_half_a_bit(h in -20.0f64..20.0, ls in -30.0f64..5.0, lc in -30.0f64..5.0) {
        let (ds, dc) = (2f64.powf(ls), 2f64.powf(lc));
        let (rc, md) = (r_rc(h, ds, dc), r_md(h, ds, dc));
        // exact unless the two rates sit in different binades, then a few ulps
        let slack = 4.0 * f64::EPSILON * rc.abs().max(md.abs()).max(1.0);
        prop_assert!((rc - md - 0.5).abs() <= slack, "{rc} - {md}");
    }

    #[test]
    fn md_rate_matches_its_definition(h in -5.0f64..5.0, ls in -20.0f64..0.0, lc in -20.0f64..0.0) {
        let (ds, dc) = (2f64.powf(ls), 2f64.powf(lc));
        let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        let direct = 2.0 * h - 0.5 * (4.0 * two_pi_e * two_pi_e * ds * dc).log2();
        prop_assert!((r_md(h, ds, dc) - direct).abs() < 1e-11);
    }

    #[test]
    fn conditional_bound_never_exceeds_log_k(
        r0_frac in 0.01f64..3.0, tail in 0.0f64..1.0, k_exp in 0u32..10,
    ) {
        let p = PredictionInputs {
            n: 2, mu: 12, k: 1 << k_exp, m: 144,
            g_fractional: 0.08, g_central: 0.08, nu_side: 1.0, nu_central: 0.01,
            rbar_side: 1.0, r_central: 0.05, r0: r0_frac * 0.05,
            h1: 1.0, h2: 1.0, h_cond_u: 0.0, tail_probability: tail,
        };
        let pred = thm2_predictions(&p);
        prop_assert!(pred.hu_cond_bound <= k_exp as f64 + 1e-12);
        prop_assert!(pred.d_central_pred_high >= pred.d_central_pred_low);
    }

    #[test]
    fn shifted_box_moment(
        lo in prop::collection::vec(-5.0f64..0.0, 3),
        w in prop::collection::vec(0.1f64..4.0, 3),
        u in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a + b).collect();
        let (lhs, rhs) = shifted_box_identity(&lo, &hi, &u);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }
}
