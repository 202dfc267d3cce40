//! Randomized invariants.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symlearn::abstraction::{build_full, lazy_update, SymbolicModel, TransitionTable, UpdateLog};
use symlearn::config::ConfigFile;
use symlearn::explore::setup;
use symlearn::gp::{Dataset, GpModel, GpPosterior, IntervalCache, Kernel, SeKernel};
use symlearn::plant::{step, InputSet};
use symlearn::synthesis::{pre, safety_game, PlainPre};
use symlearn::tsys::{IndexBox, Lattice, StateSet};

proptest! {
    #[test]
    fn nearest_round_trips_and_snaps_within_half_eta(
        eta in prop::sample::select(vec![0.1, 0.25, 0.5, 1.0]),
        lo in -5i32..0, span in 1i32..6, frac in 0.0f64..1.0,
    ) {
        let lower = [lo as f64, lo as f64 - 1.0];
        let upper = [(lo + span) as f64, (lo + span) as f64];
        let l = Lattice::new(eta, &lower, &upper).unwrap();
        for id in [0, l.len() / 2, l.len() - 1] {
            let p = l.point_of(id);
            prop_assert_eq!(l.id_of(&l.nearest(&p).unwrap()), Some(id));
        }
        let x: Vec<f64> = lower.iter().zip(&upper).map(|(a, b)| a + frac * (b - a)).collect();
        let q = l.point(&l.nearest(&x).unwrap());
        for (xi, qi) in x.iter().zip(&q) {
            prop_assert!((xi - qi).abs() <= eta / 2.0 + 1e-9);
        }
    }

    #[test]
    fn state_set_algebra_matches_btreeset(
        a in prop::collection::btree_set(0usize..200, 0..80),
        b in prop::collection::btree_set(0usize..200, 0..80),
    ) {
        let sa = StateSet::from_ids(200, a.iter().copied());
        let sb = StateSet::from_ids(200, b.iter().copied());
        let collect = |s: StateSet| s.iter().collect::<BTreeSet<_>>();
        prop_assert_eq!(collect(sa.union(&sb)), a.union(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(collect(sa.intersection(&sb)), a.intersection(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(collect(sa.difference(&sb)), a.difference(&b).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        prop_assert_eq!(sa.count(), a.len());
    }

    #[test]
    fn interval_refinement_is_nested(shrinks in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..10)) {
        let mut cache = IntervalCache::new(1, &[2.0]);
        let mut prev = cache.get(0, 0);
        for (a, b) in shrinks {
            let (lo, hi) = prev;
            let p = lo + a * (hi - lo);
            let q = p + b * (hi - p);
            let got = cache.refine(0, 0, (p - 0.5, q + 0.5)).unwrap();
            prop_assert!(got.0 >= prev.0 && got.1 <= prev.1);
            let (c, r) = cache.center_radius(0, 0);
            prop_assert!((c - r - got.0).abs() < 1e-12 && (c + r - got.1).abs() < 1e-12);
            prev = got;
        }
    }

    #[test]
    fn pre_matches_naive_definition(seed in any::<u64>(), n in 3usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, n);
        let q = StateSet::from_ids(n, (0..n).filter(|_| rng.gen_bool(0.7)));
        let naive: BTreeSet<usize> = q
            .iter()
            .filter(|&s| {
                (0..model.n_inputs()).any(|u| {
                    model.get(s, u).is_some_and(|b| (b.lo[0]..=b.hi[0]).all(|t| q.contains(t as usize)))
                })
            })
            .collect();
        prop_assert_eq!(pre(&model, &q).iter().collect::<BTreeSet<_>>(), naive);
    }

    #[test]
    fn posterior_matches_dense_inverse(seed in any::<u64>(), t in 1usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = SeKernel::new(rng.gen_range(0.2..2.0), vec![rng.gen_range(0.3..2.0), rng.gen_range(0.3..2.0)]).unwrap();
        let noise = rng.gen_range(0.05f64..0.3).powi(2);
        let xs: Vec<Vec<f64>> = (0..t).map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect();
        let ys: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = GpPosterior::fit(Arc::new(k.clone()), noise, &xs, &ys).unwrap();
        let km = DMatrix::from_fn(t, t, |i, j| k.eval(&xs[i], &xs[j]) + if i == j { noise } else { 0.0 });
        let inv = km.try_inverse().unwrap();
        let y = DVector::from_vec(ys.clone());
        let x = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let ks = DVector::from_fn(t, |i, _| k.eval(&xs[i], &x));
        let mu = (ks.transpose() * &inv * &y)[0];
        let var = (k.eval(&x, &x) - (ks.transpose() * &inv * &ks)[0]).max(0.0);
        let (gm, gv) = g.predict(&x).unwrap();
        let scale = k.eval(&x, &x);
        prop_assert!((gm - mu).abs() <= 1e-8 * (1.0 + mu.abs()), "{} vs {}", gm, mu);
        prop_assert!((gv - var).abs() <= 1e-8 * scale, "{} vs {}", gv, var);
        let quad = (y.transpose() * &inv * &y)[0];
        prop_assert!((g.quad_form() - quad).abs() <= 1e-8 * (1.0 + quad.abs()));
    }
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> SymbolicModel {
    let sl = Lattice::new(1.0, &[0.0], &[(n - 1) as f64]).unwrap();
    let m = rng.gen_range(1..=3usize);
    let il = Lattice::new(1.0, &[0.0], &[(m - 1) as f64]).unwrap();
    let mut table = TransitionTable::disabled(n, m, 1);
    for s in 0..n {
        for u in 0..m {
            if rng.gen_bool(0.7) {
                let lo = rng.gen_range(0..n as i64);
                let hi = (lo + rng.gen_range(0..3)).min(n as i64 - 1);
                table.set(s, u, Some(&IndexBox::new(&[lo], &[hi])));
            }
        }
    }
    SymbolicModel { state_lattice: sl, input_lattice: il, eps: 1.0, safe_states: StateSet::full(n), table, initial: None }
}

fn toy1d() -> ConfigFile {
    ConfigFile::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy1d.toml")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lazy_winning_set_is_within_full(seed in any::<u64>(), t in 1usize..40, rho in prop::sample::select(vec![0.0, 0.001, 0.01, 0.05, 1.0])) {
        let cfg = toy1d().resolve().unwrap();
        let s = setup(&cfg).unwrap();
        let ctx = &s.ctx;
        let states = ctx.state_lattice.len();
        let mut cache = IntervalCache::new(states, &s.global_bounds);
        let prior: Vec<f64> = (0..states).map(|id| cfg.kernels[0].eval(&ctx.state_lattice.point_of(id), &ctx.state_lattice.point_of(id))).collect();
        let model0 = build_full(ctx, &cache);
        let mut log = UpdateLog::new(0, prior, 1);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = InputSet { lower: cfg.inputs.lower.clone(), upper: cfg.inputs.upper.clone() };
        let mut data = Dataset::new(1);
        for _ in 0..t {
            let x = [rng.gen_range(-2.5..2.5)];
            let u = [rng.gen_range(-0.5..0.5)];
            let xn = step(cfg.plant.as_ref(), &inputs, &cfg.noise, &x, &u, &mut rng).unwrap();
            let f = cfg.plant.nominal(&x, &u);
            data.push(&x, &[xn[0] - f[0]]);
        }
        let g = GpModel::fit(&cfg.kernels, &cfg.noise.sigma_v, &cfg.bound, &data).unwrap();
        let fresh = cache.refresh(&ctx.state_lattice, &g).unwrap();
        let full = build_full(ctx, &cache);
        let (lazy, _) = lazy_update(ctx, &model0, &mut log, &cache, &fresh, rho, 1);
        for st in 0..states {
            for u in 0..full.n_inputs() {
                if let Some(b) = lazy.get(st, u) {
                    let f = full.get(st, u);
                    prop_assert!(f.is_some_and(|f| f.is_subset_of(&b)), "state {} input {}", st, u);
                }
            }
        }
        let (wl, _) = safety_game(&lazy, &s.q0, &PlainPre, None).unwrap();
        let (wf, _) = safety_game(&full, &s.q0, &PlainPre, None).unwrap();
        prop_assert!(wl.winning.is_subset(&wf.winning));
    }
}
