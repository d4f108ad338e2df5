use cotmarkov::chain::{
    argmax_map, check_local_global_consistency, chi_square, compose, pseudo_spectral_gap, stationary, tv_distance,
    Distribution, Instance, InstanceFile, Kernel,
};
use cotmarkov::estimators::{
    estimate_cot_heterogeneous, estimate_cot_homogeneous, estimate_direct, evaluate_with_policy, UndefinedPolicy,
};
use cotmarkov::sampling::{
    count, sample_cot, sample_dataset, ContextDataset, CotDataset, DatasetMeta, DirectDataset, EndpointPair, Mode,
};
use proptest::prelude::*;

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn dist(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(normalize)
}

fn kernel_rows(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(dist(k), k)
}

fn kernel(k: usize) -> impl Strategy<Value = Kernel<f64>> {
    kernel_rows(k).prop_map(|rows| Kernel::new(rows).unwrap())
}

/// `(k, T, mu, kernels)` with strictly positive entries.
fn instance() -> impl Strategy<Value = Instance<f64>> {
    (2usize..=5, 1usize..=4).prop_flat_map(|(k, t)| {
        (dist(k), prop::collection::vec(kernel(k), t))
            .prop_map(|(mu, ks)| Instance::new(Distribution::new(mu).unwrap(), ks).unwrap())
    })
}

/// Instances whose kernels are near-permutations, so consistency varies.
fn peaked_instance() -> impl Strategy<Value = Instance<f64>> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(k, t)| {
        let step = (Just((0..k).collect::<Vec<usize>>()).prop_shuffle(), 0.3f64..0.9, kernel_rows(k));
        prop::collection::vec(step, t).prop_map(move |steps| {
            let ks = steps
                .into_iter()
                .map(|(perm, w, noise)| {
                    let rows = (0..k)
                        .map(|i| (0..k).map(|j| (1.0 - w) * noise[i][j] + if perm[i] == j { w } else { 0.0 }).collect())
                        .collect();
                    Kernel::new(rows).unwrap()
                })
                .collect();
            Instance::new(Distribution::uniform(k), ks).unwrap()
        })
    })
}

fn brute_product(kernels: &[Kernel<f64>]) -> Vec<Vec<f64>> {
    let k = kernels[0].k();
    let mut acc: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for p in kernels {
        acc = (0..k)
            .map(|i| (0..k).map(|j| (0..k).map(|l| acc[i][l] * p.get(l, j)).sum()).collect())
            .collect();
    }
    acc
}

fn first_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = j;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn composition_is_stochastic(inst in instance()) {
        let q = compose(inst.kernels()).unwrap();
        let brute = brute_product(inst.kernels());
        for i in 0..inst.k() {
            let row = q.row(i);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..inst.k() {
                prop_assert!((row[j] - brute[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_law_is_fixed(p in (2usize..=6).prop_flat_map(kernel)) {
        let pi = stationary(&p).unwrap();
        let moved = p.push_forward(&pi).unwrap();
        for (a, b) in pi.weights().iter().zip(moved.weights()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((pi.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_is_dominated_by_chi_square((mu, pi) in (2usize..=6).prop_flat_map(|k| (dist(k), dist(k)))) {
        let mu = Distribution::new(mu).unwrap();
        let pi = Distribution::new(pi).unwrap();
        let chi2 = chi_square(&mu, &pi).unwrap();
        let tv = tv_distance(&mu, &pi).unwrap();
        prop_assert!(chi2 >= 0.0);
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!(tv <= 0.5 * chi2.sqrt() + 1e-12);
    }

    #[test]
    fn tv_to_stationarity_never_increases(p in (2usize..=5).prop_flat_map(kernel), mu in dist(5)) {
        let k = p.k();
        let mu = Distribution::new(normalize(mu[..k].to_vec())).unwrap();
        let pi = stationary(&p).unwrap();
        let mut law = mu;
        let mut prev = tv_distance(&law, &pi).unwrap();
        for _ in 0..10 {
            law = p.push_forward(&law).unwrap();
            let next = tv_distance(&law, &pi).unwrap();
            prop_assert!(next <= prev + 1e-12);
            prev = next;
        }
    }

    #[test]
    fn two_state_gap_matches_closed_form(a in 0.02f64..0.98, b in 0.02f64..0.98) {
        let p = Kernel::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        let lambda: f64 = 1.0 - a - b;
        let gap = pseudo_spectral_gap(&p, 25).unwrap();
        prop_assert!((gap.pseudo_gap - (1.0 - lambda * lambda)).abs() < 1e-9);
        prop_assert_eq!(gap.achieving_m, 1);
        let pi = gap.stationary.weights();
        prop_assert!((pi[0] - b / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn consistency_agrees_with_brute_force(inst in peaked_instance()) {
        let report = check_local_global_consistency(&inst);
        let q = brute_product(inst.kernels());
        let k = inst.k();
        let composed: Vec<usize> = (0..k)
            .map(|i| inst.kernels().iter().fold(i, |x, p| first_argmax(p.row(x))))
            .collect();
        let global: Vec<usize> = (0..k).map(|i| first_argmax(&q[i])).collect();
        prop_assert_eq!(&report.composed_map, &composed);
        prop_assert_eq!(report.consistent, composed == global);
    }

    #[test]
    fn argmax_ignores_positive_row_scale(counts in prop::collection::vec(0u64..20, 9), scale in 1u64..5) {
        // Replicating every record `scale` times rescales each count row.
        let mut pairs = Vec::new();
        for (idx, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                pairs.push((idx / 3, idx % 3));
            }
        }
        let build = |s: u64| {
            let records = pairs
                .iter()
                .flat_map(|&(x0, xt)| std::iter::repeat_n(EndpointPair { x0, xt }, s as usize))
                .collect();
            let meta = DatasetMeta { instance_digest: String::new(), seed: 0, k: 3, horizon: 1 };
            DirectDataset::from_records(meta, records).unwrap()
        };
        prop_assert_eq!(estimate_direct(&build(1)), estimate_direct(&build(scale)));
    }

    #[test]
    fn instance_file_round_trips(inst in instance()) {
        let file = InstanceFile::from_instance(&inst);
        let back = InstanceFile::from_toml(&file.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_instance().unwrap().digest(), inst.digest());
    }

    #[test]
    fn counts_are_conserved(inst in instance(), n in 1usize..60, seed in any::<u64>()) {
        let data = sample_cot(&inst, n, seed).unwrap();
        let counts = count(&ContextDataset::Cot(data.clone()));
        let (k, t) = (inst.k(), inst.horizon());
        prop_assert_eq!(counts.n(), n as u64);
        prop_assert_eq!(counts.initial_counts().iter().sum::<u64>(), n as u64);
        prop_assert_eq!(counts.terminal_pairs().iter().sum::<u64>(), n as u64);
        let steps = counts.per_step_counts().unwrap();
        let visits = counts.visit_counts().unwrap();
        prop_assert_eq!(steps.len(), t);
        prop_assert_eq!(visits.len(), t + 1);
        for (s, step) in steps.iter().enumerate() {
            prop_assert_eq!(step.iter().sum::<u64>(), n as u64);
            for i in 0..k {
                let out: u64 = step[i * k..(i + 1) * k].iter().sum();
                prop_assert_eq!(out, visits[s][i]);
                let into: u64 = (0..k).map(|l| step[l * k + i]).sum();
                prop_assert_eq!(into, visits[s + 1][i]);
            }
        }
        prop_assert_eq!(counts.pooled_transitions().unwrap().iter().sum::<u64>(), (n * t) as u64);
        prop_assert_eq!(&visits[0][..], counts.initial_counts());
    }

    #[test]
    fn sampling_is_seed_deterministic(inst in instance(), n in 1usize..40, seed in any::<u64>()) {
        for mode in [Mode::Direct, Mode::Cot] {
            prop_assert_eq!(sample_dataset(&inst, n, mode, seed).unwrap(), sample_dataset(&inst, n, mode, seed).unwrap());
        }
        let cot = sample_cot(&inst, n, seed).unwrap();
        prop_assert!(cot.records().iter().all(|r| r.states().len() == inst.horizon() + 1));
    }

    #[test]
    fn query_accuracy_two_ways(inst in peaked_instance(), n in 1usize..30, seed in any::<u64>(), uniform in any::<bool>()) {
        let policy = if uniform { UndefinedPolicy::UniformGuess } else { UndefinedPolicy::Incorrect };
        let cot: CotDataset = sample_cot(&inst, n, seed).unwrap();
        let truth = argmax_map(&inst.end_to_end()).map;
        let k = inst.k();
        let mut preds = vec![estimate_direct(&cot.to_direct()), estimate_cot_heterogeneous(&cot).unwrap()];
        if cot.is_homogeneous() {
            preds.push(estimate_cot_homogeneous(&cot).unwrap());
        }
        for pred in preds {
            let eval = evaluate_with_policy(&pred, &inst, policy).unwrap();
            let by_hand: f64 = (0..k)
                .map(|i| {
                    let w = inst.mu().weights()[i];
                    match pred.predicted[i] {
                        Some(j) if j == truth[i] => w,
                        None if uniform => w / k as f64,
                        _ => 0.0,
                    }
                })
                .sum();
            prop_assert!((eval.query_accuracy - by_hand).abs() < 1e-12);
            let all = (0..k).all(|i| pred.predicted[i] == Some(truth[i]));
            prop_assert_eq!(eval.all_rows_correct, all);
        }
    }
}

#[test]
fn empirical_marginals_match_push_forward() {
    let p = Kernel::new(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3], vec![0.25, 0.25, 0.5]]).unwrap();
    let mu = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
    let inst = Instance::homogeneous(mu, p, 3).unwrap();
    let n = 40_000;
    let data = sample_cot(&inst, n, 17).unwrap();
    let marginals = inst.marginals();
    for (t, law) in marginals.iter().enumerate() {
        for (s, &w) in law.weights().iter().enumerate() {
            let freq = data.records().iter().filter(|r| r.states()[t] == s).count() as f64 / n as f64;
            let sd = (w * (1.0 - w) / n as f64).sqrt();
            assert!((freq - w).abs() < 5.0 * sd, "t = {t}, state {s}: {freq} vs {w}");
        }
    }
}
