mod common;

use again_core::alp::{compute_alp, HistoryDb, RewardSpan};
use again_core::curriculum::CurriculumTrace;
use again_core::gmm::{select_best_k, EmConfig, WeightedGaussian};
use again_core::rng;
use again_core::space::{TaskParams, TaskSpace};
use again_core::stats::welch_t_test;
use again_core::student::{ResetMode, Student, StudentProfile, SurrogateStudent};
use again_core::teacher::{ExpertConfig, ExpertStepper, InVariant};
use again_core::curriculum::FilteredCurriculum;
use again_core::gmm::GmmSnapshot;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn unit_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..=1.0f64, dim)
}

fn curriculum(thresholds: Vec<f64>) -> FilteredCurriculum {
    let snapshots = (0..thresholds.len())
        .map(|i| GmmSnapshot {
            components: vec![WeightedGaussian::new(vec![0.5, 0.5, 0.2], common::identity_cov(3, 0.01), 1.0)],
            fit_episode: 250 * (i as u64 + 1),
        })
        .collect();
    FilteredCurriculum { snapshots, thresholds }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clip_is_idempotent(p in proptest::collection::vec(-10.0..10.0f64, 2)) {
        let space = TaskSpace::stump_tracks();
        let once = space.clip(&TaskParams(p)).unwrap();
        prop_assert!(space.contains(&once));
        prop_assert_eq!(space.clip(&once).unwrap(), once);
    }

    #[test]
    fn alp_is_bounded_and_symmetric(
        old in -1000.0..1000.0f64,
        new in -1000.0..1000.0f64,
        p in unit_point(3),
        q in unit_point(3),
    ) {
        let span = RewardSpan::default();
        let mut a = HistoryDb::new(3);
        a.push(q.clone(), old).unwrap();
        let mut b = HistoryDb::new(3);
        b.push(q, new).unwrap();
        let forward = compute_alp(&p, new, &a, &span).unwrap();
        let backward = compute_alp(&p, old, &b, &span).unwrap();
        prop_assert!((0.0..=1.0).contains(&forward));
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn fitted_mixtures_are_valid(seed in 0u64..1000, n in 20usize..120, dim in 1usize..4) {
        let mut r = rng::stream(seed, 9);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..dim).map(|_| {
                let base = if i % 2 == 0 { 0.25 } else { 0.75 };
                base + 0.1 * rand::Rng::random::<f64>(&mut r)
            }).collect())
            .collect();
        let config = EmConfig::default();
        let sel = select_best_k(&points, 5, &config, &mut rng::stream(seed, 10)).unwrap();
        let again = select_best_k(&points, 5, &config, &mut rng::stream(seed, 10)).unwrap();
        prop_assert_eq!(&sel.best.components, &again.best.components);
        for fit in &sel.fits {
            let total: f64 = fit.components.iter().map(|c| c.mixture_weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            for c in &fit.components {
                let m = DMatrix::from_row_slice(dim, dim, &c.covariance);
                prop_assert_eq!(&m, &m.transpose());
                let lowest = m.symmetric_eigenvalues().min();
                prop_assert!(lowest >= config.reg_covar * (1.0 - 1e-6), "eigenvalue {}", lowest);
            }
        }
    }

    #[test]
    fn filter_preserves_order_and_is_idempotent(seed in 0u64..10_000, delta in 0.0..0.3f64) {
        let trace = common::random_trace(&mut rng::stream(seed, 11));
        let f = trace.filter(delta);
        let episodes: Vec<u64> = f.snapshots.iter().map(|s| s.fit_episode).collect();
        prop_assert!(episodes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(f.snapshots.iter().all(|s| !s.components.is_empty()));
        let lifted: CurriculumTrace = f.clone().into_trace(trace.meta.clone());
        prop_assert_eq!(lifted.filter(delta), f);
    }

    #[test]
    fn expert_index_is_monotone_and_bounded(
        len in 1usize..6,
        rewards in proptest::collection::vec(-200.0..400.0f64, 0..400),
        thresholds in proptest::collection::vec(-100.0..300.0f64, 6),
        variant in prop_oneof![Just(InVariant::Time), Just(InVariant::Reward), Just(InVariant::Pool)],
        period in 1usize..80,
        memory in 1usize..60,
    ) {
        let mut s = ExpertStepper::new(
            curriculum(thresholds[..len].to_vec()),
            ExpertConfig { variant, period, reward_memory: memory },
        ).unwrap();
        let mut last = s.index();
        for r in rewards {
            s.observe(r);
            prop_assert!(s.index() >= last);
            prop_assert!(s.index() < len);
            last = s.index();
        }
        if variant == InVariant::Pool {
            prop_assert_eq!(last, 0);
        }
    }

    #[test]
    fn reward_rule_with_unreachable_floor_is_time_rule(
        len in 1usize..8,
        rewards in proptest::collection::vec(-200.0..400.0f64, 0..600),
    ) {
        let mut reward = ExpertStepper::new(
            curriculum(vec![f64::NEG_INFINITY; len]),
            ExpertConfig { variant: InVariant::Reward, period: 250, reward_memory: 50 },
        ).unwrap();
        let mut time = ExpertStepper::new(
            curriculum(vec![f64::NEG_INFINITY; len]),
            ExpertConfig { variant: InVariant::Time, period: 50, reward_memory: 50 },
        ).unwrap();
        for r in rewards {
            reward.observe(r);
            time.observe(r);
            prop_assert_eq!(reward.index(), time.index());
        }
    }

    #[test]
    fn welch_is_antisymmetric(
        a in proptest::collection::vec(-50.0..50.0f64, 2..20),
        b in proptest::collection::vec(-50.0..50.0f64, 2..20),
    ) {
        if let (Ok(x), Ok(y)) = (welch_t_test(&a, &b), welch_t_test(&b, &a)) {
            prop_assert!((x.t + y.t).abs() <= 1e-12 * x.t.abs().max(1.0));
            prop_assert!((x.p - y.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x.p));
        }
    }

    #[test]
    fn surrogate_competence_never_decreases(
        seed in 0u64..1000,
        tasks in proptest::collection::vec(unit_point(2), 1..300),
        strong in any::<bool>(),
    ) {
        let profile = if strong { StudentProfile::Strong } else { StudentProfile::Weak };
        let space = TaskSpace::stump_tracks();
        let mut s = SurrogateStudent::with_profile(space.clone(), profile, seed).unwrap();
        let mut before = s.competence().to_vec();
        for t in tasks {
            let raw = space.denormalize(&TaskParams(t)).unwrap();
            s.train_on(&raw).unwrap();
            let after = s.competence().to_vec();
            prop_assert!(after.iter().zip(&before).all(|(a, b)| a >= b && (0.0..=1.0).contains(a)));
            before = after;
        }
        let snapshot = s.competence().to_vec();
        s.reset(ResetMode::FineTune).unwrap();
        prop_assert_eq!(s.competence(), &snapshot[..]);
    }

    #[test]
    fn surrogate_rewards_repeat_for_equal_histories(
        seed in 0u64..1000,
        tasks in proptest::collection::vec(unit_point(2), 1..100),
    ) {
        let space = TaskSpace::stump_tracks();
        let run = || {
            let mut s = SurrogateStudent::with_profile(space.clone(), StudentProfile::Weak, seed).unwrap();
            tasks
                .iter()
                .map(|t| s.train_on(&space.denormalize(&TaskParams(t.clone())).unwrap()).unwrap())
                .collect::<Vec<f64>>()
        };
        prop_assert_eq!(run(), run());
    }
}
