use std::collections::HashSet;

use lrdsc::{Branch, CodecSpec, Encoder, IntMatrix, Lattice, LrdscConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(central: Lattice, k_scale: i64, mu: i64) -> LrdscConfig {
    let n = central.dim();
    CodecSpec {
        central,
        sublattice: IntMatrix::scalar(n, k_scale),
        mu,
        r0: None,
        c: None,
        allow_small_mu: false,
    }
    .validate()
    .unwrap()
}

fn line(mu: i64) -> LrdscConfig {
    config(Lattice::integer_grid(1, 1.0).unwrap(), 8, mu)
}

fn square() -> LrdscConfig {
    config(Lattice::integer_grid(2, 1.0).unwrap(), 4, 12)
}

fn hex() -> LrdscConfig {
    config(Lattice::hexagonal(1.0).unwrap(), 4, 12)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Uniform point in the ball of radius `r`.
fn in_ball(rng: &mut impl Rng, n: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s: f64 = v.iter().map(|x| x * x).sum();
        if s < 1.0 && s > 0.0 {
            return v.iter().map(|x| x * r).collect();
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar hand trace for Λ_c = Z, Λ_in = 8Z, μ = 8.

fn round_half_down(v: f64) -> f64 {
    (v - 0.5).ceil()
}

struct Hand {
    central: i64,
    intermediate: i64,
    residual: i64,
    side: [i64; 2],
    boundary: bool,
    tau: i64,
}

fn hand_trace(x: f64) -> Hand {
    let lc = round_half_down(x);
    let lin = 8.0 * round_half_down(lc / 8.0);
    let half = 32.0 * round_half_down(lin / 32.0);
    let side = 64.0 * round_half_down(half / 64.0);
    let tau = half - side;
    let u = lin - side;
    let b1 = 8.0 * (u - tau) + side;
    let b2 = 2.0 * tau - 8.0 * (u - tau) + side;
    // γ = 1 − 3·4/16
    let gamma = 0.25;
    let boundary = round_half_down((lin - half) / gamma / 32.0) != 0.0;
    Hand {
        central: lc as i64,
        intermediate: (lin / 8.0) as i64,
        residual: (lc - lin) as i64,
        side: [(b1 / 8.0) as i64, (b2 / 8.0) as i64],
        boundary,
        tau: (tau / 8.0) as i64,
    }
}

#[test]
fn encoder_matches_scalar_hand_trace() {
    let cfg = line(8);
    assert_eq!(cfg.gamma(), 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut xs: Vec<f64> = (0..20_000).map(|_| rng.random_range(-700.0..700.0)).collect();
    // exact ties at every level of the chain
    xs.extend((-300..300).map(|k| k as f64 * 4.0 + 0.5));
    xs.extend((-40..40).map(|k| k as f64 * 16.0));
    let mut boundary_seen = [false; 2];
    for x in xs {
        let hand = hand_trace(x);
        for (i, which) in [Encoder::First, Encoder::Second].into_iter().enumerate() {
            let t = cfg.encode_trace(which, &[x]).unwrap();
            assert_eq!(t.central, vec![hand.central], "x = {x}");
            assert_eq!(t.intermediate, vec![hand.intermediate], "x = {x}");
            let d = &t.description;
            assert_eq!(d.residual, vec![hand.residual], "x = {x}");
            assert_eq!(d.side_point, vec![hand.side[i]], "x = {x}");
            assert_eq!(d.boundary, hand.boundary, "x = {x}");
            assert_eq!(d.tau, hand.boundary.then(|| vec![hand.tau]), "x = {x}");
            boundary_seen[hand.boundary as usize] = true;
        }
    }
    assert_eq!(boundary_seen, [true, true]);
}

// ---------------------------------------------------------------------------
// Exact recovery.

/// Every pair of central points closer than `r_in`, up to a common side
/// shift: the intermediate part of the first ranges over `𝒰`, the residuals
/// over all coset representatives.
fn lattice_level_recovery(cfg: &LrdscConfig) -> (u64, HashSet<Branch>) {
    let ctx = cfg.labeling();
    let lat = cfg.intermediate();
    let r_in = cfg.intermediate_geometry().inscribed_radius;
    let limit = 3.0 * cfg.intermediate_geometry().covering_radius;
    let steps = lat.points_within(limit);
    let mut checked = 0;
    let mut branches = HashSet::new();
    for l1 in ctx.u_set().unwrap() {
        for d in &steps {
            let l2 = add(l1, d);
            for u1 in cfg.inner_reps() {
                let c1 = add(&cfg.intermediate_to_central(l1), u1);
                let p1 = cfg.central_point(&c1);
                for u2 in cfg.inner_reps() {
                    let c2 = add(&cfg.intermediate_to_central(&l2), u2);
                    let p2 = cfg.central_point(&c2);
                    // strictly inside; pairs at exactly r_in tie in Q_in(u₁ − u₂)
                    if dist(&p1, &p2) >= r_in * (1.0 - 1e-9) {
                        continue;
                    }
                    let t1 = cfg.encode_trace(Encoder::First, &p1).unwrap();
                    let t2 = cfg.encode_trace(Encoder::Second, &p2).unwrap();
                    assert_eq!((&t1.central, &t2.central), (&c1, &c2));
                    assert_eq!((&t1.intermediate, &t2.intermediate), (l1, &l2));
                    let out = cfg.central_decode(&t1.description, &t2.description).unwrap();
                    assert_eq!((&out.first, &out.second), (&c1, &c2), "λ₁ {l1:?} λ₂ {l2:?}");
                    assert!(out.tau_consistent);
                    branches.insert(out.branch);
                    checked += 1;
                }
            }
        }
    }
    (checked, branches)
}

#[test]
fn exhaustive_recovery_line() {
    for mu in [8, 16, 32] {
        let (checked, branches) = lattice_level_recovery(&line(mu));
        assert!(checked > 0);
        assert!(!branches.contains(&Branch::SideFallback));
        assert!(branches.contains(&Branch::Case3), "μ = {mu}: {branches:?}");
    }
}

#[test]
fn exhaustive_recovery_square() {
    let (checked, branches) = lattice_level_recovery(&square());
    assert!(checked > 0);
    assert!(branches.contains(&Branch::Case1) && branches.contains(&Branch::Case3));
}

#[test]
fn exhaustive_recovery_hexagonal() {
    let cfg = hex();
    assert_eq!(cfg.k(), 16);
    let (checked, branches) = lattice_level_recovery(&cfg);
    assert!(checked > 0);
    assert!(!branches.contains(&Branch::SideFallback));
    assert!(branches.contains(&Branch::Case1) && branches.contains(&Branch::Case3));
}

fn sampled_recovery(cfg: &LrdscConfig, count: usize, seed: u64) {
    let n = cfg.dim();
    let r0 = cfg.r0();
    let r_in = cfg.intermediate_geometry().inscribed_radius;
    let rbar_in = cfg.intermediate_geometry().covering_radius;
    let spread = 40.0 * cfg.side_geometry().covering_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let step = in_ball(&mut rng, n, r0);
        let x2: Vec<f64> = x1.iter().zip(&step).map(|(a, b)| a + b).collect();
        let t1 = cfg.encode_trace(Encoder::First, &x1).unwrap();
        let t2 = cfg.encode_trace(Encoder::Second, &x2).unwrap();
        // bounds used to justify the decoder
        let qc1 = cfg.central_point(&t1.central);
        let qc2 = cfg.central_point(&t2.central);
        assert!(dist(&qc1, &qc2) < r_in);
        let l1 = cfg.intermediate().point(&t1.intermediate);
        let l2 = cfg.intermediate().point(&t2.intermediate);
        assert!(dist(&l1, &l2) < 3.0 * rbar_in);
        let out = cfg.central_decode(&t1.description, &t2.description).unwrap();
        assert_eq!(out.first, t1.central);
        assert_eq!(out.second, t2.central);
    }
}

#[test]
fn sampled_recovery_and_closeness_bounds() {
    sampled_recovery(&line(8), 20_000, 1);
    sampled_recovery(&line(16), 20_000, 2);
    sampled_recovery(&square(), 20_000, 3);
    sampled_recovery(&hex(), 20_000, 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn recovery_for_scaled_hexagonal_codecs(
        scale in 0.05f64..20.0,
        mu_half in 4i64..9,
        seed in any::<u64>(),
    ) {
        let cfg = config(Lattice::hexagonal(scale).unwrap(), 4, 2 * mu_half);
        sampled_recovery(&cfg, 200, seed);
    }
}

// ---------------------------------------------------------------------------
// Worst-case error.

#[test]
fn worst_case_error_over_all_branches() {
    for cfg in [line(8), square(), hex()] {
        let n = cfg.dim();
        let bound = cfg.worst_case_error();
        let rbar_s = cfg.side_geometry().covering_radius;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut branches = HashSet::new();
        let radii = [cfg.r0(), 2.0 * cfg.r0(), rbar_s, 10.0 * rbar_s, 100.0 * rbar_s];
        for i in 0..40_000 {
            let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
            let step = in_ball(&mut rng, n, radii[i % radii.len()]);
            let x2: Vec<f64> = x1.iter().zip(&step).map(|(a, b)| a + b).collect();
            let d1 = cfg.encode(Encoder::First, &x1).unwrap();
            let d2 = cfg.encode(Encoder::Second, &x2).unwrap();
            let out = cfg.central_decode(&d1, &d2).unwrap();
            branches.insert(out.branch);
            assert!(dist(&x1, &cfg.central_point(&out.first)) <= bound);
            assert!(dist(&x2, &cfg.central_point(&out.second)) <= bound);
        }
        assert_eq!(branches.len(), 4, "dim {n}: {branches:?}");
    }
}

#[test]
fn side_reconstruction_is_within_worst_case() {
    let cfg = hex();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bound = (4.0 + cfg.mu() as f64 / 2.0) * cfg.side_geometry().covering_radius
        + cfg.intermediate_geometry().covering_radius
        + cfg.central_geometry().covering_radius;
    for _ in 0..20_000 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-500.0..500.0)).collect();
        for which in [Encoder::First, Encoder::Second] {
            let d = cfg.encode(which, &x).unwrap();
            assert!(dist(&x, &cfg.side_decode(&d)) <= bound * (1.0 + 1e-12));
        }
    }
}

// ---------------------------------------------------------------------------
// Collision audit.

#[test]
fn boundary_data_resolves_every_label_collision() {
    for mu in [8, 12] {
        for cfg in [line(mu), config(Lattice::hexagonal(1.0).unwrap(), 4, mu)] {
            let audit = cfg.recovery_audit().unwrap();
            assert!(audit.pairs > 0);
            assert!(!audit.labels_alone_injective(), "μ = {mu}");
            assert!(audit.injective_with_boundary_data(), "μ = {mu}: {audit:?}");
        }
    }
    // the square lattice at μ = 8 has γ < 0 and only validates in unsafe mode
    for mu in [8, 12] {
        let cfg = CodecSpec {
            central: Lattice::integer_grid(2, 1.0).unwrap(),
            sublattice: IntMatrix::scalar(2, 4),
            mu,
            r0: None,
            c: None,
            allow_small_mu: true,
        }
        .validate()
        .unwrap();
        assert!(cfg.recovery_audit().unwrap().injective_with_boundary_data());
    }
}
