use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpcone_core::action::{self, FiniteAction};
use warpcone_core::expansion;
use warpcone_core::families;
use warpcone_core::io::{self, ActionDoc, KernelDoc};
use warpcone_core::markov::{self, MarkovKernel};
use warpcone_core::operator;
use warpcone_core::subset;
use warpcone_core::warped::{self, FiniteMetric};
use warpcone_core::FiniteMeasureSpace;

fn kernel(seed: u64, n: usize) -> MarkovKernel {
    families::random_reversible_kernel(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap()
}

fn weighted_action(seed: u64, n: usize, pairs: usize) -> FiniteAction {
    families::random_weighted_action(&mut ChaCha8Rng::seed_from_u64(seed), n, pairs).unwrap()
}

fn all(a: &FiniteAction) -> Vec<usize> {
    (0..a.len()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_kernels_are_reversible(seed: u64, n in 1usize..12) {
        let k = kernel(seed, n);
        let m = k.require_reversing_measure().unwrap();
        prop_assert!(markov::detailed_balance_residual(&k, m).0 < 1e-10);
        let mu = markov::SymmetricEdgeMeasure::new(&k, m).unwrap();
        for (a, b) in mu.marginal().iter().zip(m) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cheeger_sandwich_holds(seed: u64, n in 2usize..11) {
        let k = kernel(seed, n);
        let r = markov::verify_cheeger_sandwich(&k, k.require_reversing_measure().unwrap()).unwrap();
        prop_assert!(r.lower <= r.spectral_gap + 1e-9, "{r:?}");
        prop_assert!(r.spectral_gap <= r.upper + 1e-9, "{r:?}");
        let sweep = markov::cheeger_sweep(&k, k.require_reversing_measure().unwrap()).unwrap();
        prop_assert!(sweep.kappa >= r.kappa - 1e-12);
    }

    #[test]
    fn boundary_matches_indicator_energy(seed: u64, n in 2usize..9, mask: u64, p in 1.0f64..4.0) {
        let k = kernel(seed, n);
        let m = k.require_reversing_measure().unwrap();
        let a = subset::members(mask & ((1 << n) - 1));
        let b = markov::boundary_size(&k, m, &a).unwrap();
        let c = markov::boundary_size(&k, m, &subset::complement(n, &a)).unwrap();
        prop_assert!((b - c).abs() < 1e-12);
        let chi: Vec<f64> = (0..n).map(|x| if a.contains(&x) { 1.0 } else { 0.0 }).collect();
        prop_assert!((markov::dirichlet_energy_real(&k, m, &chi, p).unwrap() - b).abs() < 1e-12);
    }

    #[test]
    fn duality_of_markov_operators(seed: u64, n in 1usize..10, f in prop::collection::vec(-1.0f64..1.0, 10), nu in prop::collection::vec(0.0f64..1.0, 10)) {
        let k = kernel(seed, n);
        let pf = markov::markov_apply(&k, &f[..n]).unwrap();
        let dn = markov::dual_apply(&k, &nu[..n]).unwrap();
        let lhs: f64 = pf.iter().zip(&nu).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(&dn).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn action_kernel_reversible_with_measure_bounds(seed: u64, n in 1usize..9, pairs in 1usize..3, ymask: u64) {
        let a = weighted_action(seed, n, pairs);
        let mut y = subset::members(ymask & ((1 << n) - 1));
        if y.is_empty() {
            y = all(&a);
        }
        let gens = a.gens().all();
        let ak = expansion::build_action_kernel(&a, &y, &gens).unwrap();
        prop_assert!(markov::detailed_balance_residual(ak.kernel(), ak.tilde_nu()).0 < 1e-10);
        let nu_y = a.space().mass_of(&y);
        for mask in 1u64..(1 << y.len()) {
            let idx = subset::members(mask);
            let nu_a: f64 = idx.iter().map(|&i| a.space().weight(y[i])).sum();
            let tilde: f64 = idx.iter().map(|&i| ak.tilde_nu()[i]).sum();
            prop_assert!(nu_a <= tilde * (1.0 + 1e-12));
            prop_assert!(tilde <= gens.len() as f64 * (nu_a * nu_y).sqrt() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn expansion_transfer_constants(seed: u64, n in 2usize..9, pairs in 1usize..3) {
        let a = weighted_action(seed, n, pairs);
        let y = all(&a);
        let gens = a.gens().all();
        let ak = expansion::build_action_kernel(&a, &y, &gens).unwrap();
        let c = expansion::vertex_expansion_constant(&a, &y, &gens).unwrap().c;
        let kappa = expansion::markov_expansion_constant(&ak).unwrap().kappa;
        let s = gens.len() as f64;
        let theta = ak.theta();
        prop_assert!(kappa >= c / (s * theta) - 1e-9);
        prop_assert!(c >= kappa / (s * theta.sqrt() + kappa) - 1e-9);
        prop_assert_eq!(c > 1e-12, kappa > 1e-12);
    }

    #[test]
    fn ball_images_compose(seed: u64, n in 1usize..10, mask: u64, k in 0u64..4, l in 0u64..4) {
        let a = weighted_action(seed, n, 2);
        let set = subset::members(mask & ((1 << n) - 1));
        let lhs = action::ball_image(&a, &action::ball_image(&a, &set, k).unwrap(), l).unwrap();
        let rhs = action::ball_image(&a, &set, k + l).unwrap();
        prop_assert!(lhs.iter().all(|x| rhs.contains(x)));
        prop_assert!(set.iter().all(|x| rhs.contains(x)));
    }

    #[test]
    fn warped_levels_satisfy_constraints(seed: u64, n in 2usize..10, t in 1.0f64..100.0) {
        let a = weighted_action(seed, n, 2);
        let metric = FiniteMetric::cycle_chord(a.space().clone()).unwrap();
        let level = warped::warp(&metric, &a, t).unwrap();
        prop_assert!(level.check().holds, "{:?}", level.check());
        let finer = warped::warp(&metric, &a, 2.0 * t).unwrap();
        for x in 0..n {
            for y in 0..n {
                prop_assert!(level.distance(x, y) <= finer.distance(x, y) * (1.0 + 1e-12));
                prop_assert!(level.distance(x, y) <= t * metric.dist()[(x, y)] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cut_norm_of_averaging_projection(weights in prop::collection::vec(0.01f64..1.0, 1..9), am: u64, cm: u64) {
        let n = weights.len();
        let space = FiniteMeasureSpace::indexed(weights).unwrap();
        let p = operator::averaging_projection(&space, &(0..n).collect::<Vec<_>>()).unwrap().operator();
        let a = subset::members(am & ((1 << n) - 1));
        let c = subset::members(cm & ((1 << n) - 1));
        let formula = (space.mass_of(&a) * space.mass_of(&c)).sqrt() / space.total_mass();
        prop_assert!((operator::cut_norm(&p, &a, &c).unwrap() - formula).abs() < 1e-10);
    }

    #[test]
    fn rank_one_profile_matches_general(seed: u64, n in 1usize..8) {
        let a = weighted_action(seed, n, 1);
        let p = operator::averaging_projection(a.space(), &all(&a)).unwrap();
        let ks = [0, 1, 2, 3];
        let fast = operator::rho_quasi_locality_rank_one(&p, &a, &ks).unwrap();
        let slow = operator::rho_quasi_locality_profile(&p.operator(), &a, &ks).unwrap();
        for (x, y) in fast.eps.iter().zip(&slow.eps) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!(slow.is_nonincreasing());
    }

    #[test]
    fn markov_powers_converge_at_rate(seed: u64, n in 2usize..9) {
        let k = kernel(seed, n);
        let r = operator::markov_power_projection_kernel(&k, k.require_reversing_measure().unwrap(), 20).unwrap();
        if r.has_gap {
            for s in &r.steps {
                prop_assert!(s.norm <= r.lambda_hat.powi(s.n as i32) + 1e-10);
            }
        }
    }

    #[test]
    fn ad_identity(seed: u64, n in 1usize..9, pairs in 1usize..3) {
        let a = weighted_action(seed, n, pairs);
        let ak = expansion::build_action_kernel(&a, &all(&a), &a.gens().all()).unwrap();
        prop_assert!(operator::ad_embedding_projection(&ak, 0).unwrap().deviation < 1e-10);
    }

    #[test]
    fn documents_round_trip(seed: u64, n in 1usize..8) {
        let k = kernel(seed, n);
        let text = io::to_json(&KernelDoc::from_kernel(&k));
        prop_assert_eq!(io::parse_kernel(&text).unwrap(), k);
        let a = weighted_action(seed, n, 2);
        let metric = families::default_metric(&a).unwrap();
        let text = io::to_json(&ActionDoc::from_action(&a, Some(&metric)));
        let (back, m) = io::parse_action(&text).unwrap();
        prop_assert_eq!(back, a);
        prop_assert_eq!(m.unwrap(), metric);
    }

    #[test]
    fn formatted_reals_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = io::format_real(v);
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
