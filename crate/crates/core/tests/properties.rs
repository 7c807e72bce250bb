use std::path::Path;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resflow::activation::{catalog, ActivationConfig, ActivationKind};
use resflow::bounds::{ClampMode, Convention};
use resflow::io::config::{parse_config, render_config, BoundsParams, CommandParams, RunConfig};
use resflow::rademacher::{rademacher_exact, EvaluatedClass, SoftThresholdClassSpec};
use resflow::resnet::{discrete_forward, permute_params, DiscreteParams, Dims};

#[test]
fn shipped_configs_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse_config(&render_config(&cfg).unwrap()).unwrap(), cfg, "{}", path.display());
        count += 1;
    }
    assert_eq!(count, 10);
}

fn activation_strategy() -> impl Strategy<Value = ActivationConfig> {
    (0..ActivationKind::ALL.len()).prop_map(|i| {
        let k = ActivationKind::ALL[i];
        ActivationConfig { name: k.name().to_string(), params: k.default_params() }
    })
}

proptest! {
    #[test]
    fn example33_config_round_trip(
        eta in 0.01f64..10.0, gamma in 0.5f64..10.0, frac_a in 0.0f64..0.99, frac_b in 0.01f64..0.99,
        s in 1usize..60, seed in any::<u64>(),
    ) {
        let spec = SoftThresholdClassSpec { eta, gamma, alpha: (gamma * frac_a).max(1e-3), beta: gamma * frac_b, s };
        let cfg = RunConfig { seed, output_dir: "out/x".into(), params: CommandParams::Example33(spec) };
        prop_assert_eq!(parse_config(&render_config(&cfg).unwrap()).unwrap(), cfg);
    }

    #[test]
    fn bounds_config_round_trip(
        n in 1usize..20, n_d in 1usize..1000, horizon in 0.01f64..5.0, layers in 1usize..64,
        s in 1usize..100_000, delta in 0.001f64..0.999, b_theta in 0.01f64..3.0, b_in in 0.01f64..3.0,
        act in activation_strategy(), slack in prop::option::of(0.0f64..1.0), printed in any::<bool>(),
    ) {
        let params = BoundsParams {
            n, n_d, horizon, layers, s, delta, b_theta, b_in, activation: act,
            loss: None, b_kappa: Some(1.5), b_ell: Some(0.5),
            c_slack: slack.into_iter().collect(), c_continuous: slack,
            convention: if printed { Convention::AsPrinted } else { Convention::MatchDiscrete },
            clamp: ClampMode::Clamp,
        };
        let cfg = RunConfig { seed: 1, output_dir: "o".into(), params: CommandParams::Bounds(params) };
        prop_assert_eq!(parse_config(&render_config(&cfg).unwrap()).unwrap(), cfg);
    }

    #[test]
    fn activations_are_lipschitz_and_vanish_at_zero(i in 0..ActivationKind::ALL.len(), x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let k = ActivationKind::ALL[i];
        let a = catalog(k.name(), &k.default_params()).unwrap();
        prop_assert_eq!(a.eval(0.0), 0.0);
        prop_assert!((a.eval(x) - a.eval(y)).abs() <= a.lip() * (x - y).abs() + 1e-12);
    }

    #[test]
    fn permutation_equivariance(seed in any::<u64>(), i1 in 0usize..4, i2 in 0usize..4, layers in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = DiscreteParams::random(Dims::new(3, 4, 5).unwrap(), layers, 1.0, 1.0, &mut rng).unwrap();
        let act = catalog("TReLU", &[0.5]).unwrap();
        let d = DVector::from_vec(vec![0.3, -0.2, 0.9]);
        let a = discrete_forward(&params, &act, &d).unwrap();
        let b = discrete_forward(&permute_params(&params, i1, i2).unwrap(), &act, &d).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let mut x = x.clone();
            x.swap_rows(i1, i2);
            prop_assert!((x - y).amax() <= 1e-12);
        }
    }

    #[test]
    fn rademacher_scaling_and_union(
        values in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 1..5),
        extra in prop::collection::vec(-3.0f64..3.0, 6),
        c in 0.1f64..4.0,
    ) {
        let base = EvaluatedClass::new(values.clone()).unwrap();
        let r = rademacher_exact(&base).unwrap().value;
        let scaled = EvaluatedClass::new(values.iter().map(|f| f.iter().map(|v| c * v).collect()).collect()).unwrap();
        prop_assert!((rademacher_exact(&scaled).unwrap().value - c * r).abs() <= 1e-12 * (1.0 + c * r.abs()));
        let bigger = base.union(&EvaluatedClass::new(vec![extra]).unwrap()).unwrap();
        prop_assert!(rademacher_exact(&bigger).unwrap().value >= r - 1e-12);
        prop_assert!(r >= -1e-12);
    }
}
