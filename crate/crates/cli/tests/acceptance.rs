//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see
//! the details; the test fails if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use xmeter_core::attribution::{attribute, integrated_gradients, Method};
use xmeter_core::bench::{
    clustered_benchmark, fit_decision_tree, synth_tabular, token_benchmark_with, ParkFunction,
    SynthConfig, TokenConfig, PARK_POINT,
};
use xmeter_core::examples::{
    distance_matrix, evaluate_selector, kmedoids_cost, mmd2, mmd_greedy, pam, rbf_gram, Distance,
    ExampleConfig, KernelConfig, Selector,
};
use xmeter_core::metrics::{
    attribution_report, complexity, effective_complexity, non_sensitivity, perturbation_test,
    ExpectationConfig,
};
use xmeter_core::mi::{estimate_mi, extractor_study, StudyConfig, Variable};
use xmeter_core::stats::spearman;
use xmeter_core::{FeatureDistribution, LossFunction};

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn park_cfg(seed: u64) -> ExpectationConfig {
    ExpectationConfig::new(
        FeatureDistribution::uniform(6, 0.0, 1.0).unwrap(),
        LossFunction::SquaredError,
        seed,
    )
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let cfg = park_cfg(0);
    let mut cells = Vec::new();
    for m in Method::ALL {
        let a = attribute(&ParkFunction, &PARK_POINT, m, 0).unwrap();
        let ns = non_sensitivity(&a, &ParkFunction, &cfg).unwrap();
        cells.push((m, complexity(&a), ns));
    }
    let elapsed = start.elapsed();
    let exact = cells.iter().all(|&(m, c, ns)| match m {
        Method::Random => (c, ns) == (6, 2),
        _ => (c, ns) == (4, 0),
    });
    let detail = cells
        .iter()
        .map(|(m, c, ns)| format!("{} C={c} NS={ns}", m.label()))
        .collect::<Vec<_>>()
        .join(", ");
    (
        exact && elapsed < Duration::from_secs(10),
        format!("{detail}; {:.2} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Verdict {
    let mut ordered = 0;
    let mut ec_ok = 0;
    let mut ec_random = Vec::new();
    for seed in 0..10 {
        let cfg = park_cfg(seed);
        let reps: Vec<_> = Method::ALL
            .iter()
            .map(|&m| {
                let a = attribute(&ParkFunction, &PARK_POINT, m, seed).unwrap();
                attribution_report(&a, &ParkFunction, 0.01, &cfg).unwrap()
            })
            .collect();
        let m: Vec<f64> = reps.iter().map(|r| r.monotonicity).collect();
        if m[0] > m[1] && m[1] > m[2] && m[2] > m[3] {
            ordered += 1;
        }
        let ec: Vec<usize> = reps.iter().map(|r| r.effective_complexity).collect();
        ec_random.push(ec[3]);
        if ec == [3, 3, 4, 6] {
            ec_ok += 1;
        }
    }
    (
        ordered >= 8 && ec_ok >= 8,
        format!(
            "M ordering {ordered}/10 seeds; EC = (3,3,4,6) {ec_ok}/10 seeds; EC(Random) per seed {ec_random:?}"
        ),
    )
}

fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut r);
            let z2: f64 = StandardNormal.sample(&mut r);
            (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
        })
        .unzip()
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, rho) in [0.3, 0.6, 0.9, 0.0].into_iter().enumerate() {
        let (a, b) = gaussian_pair(5000, rho, 100 + i as u64);
        let est = estimate_mi(
            &Variable::continuous_1d(&a),
            &Variable::continuous_1d(&b),
            3,
            0,
        )
        .unwrap()
        .value;
        let truth = -0.5 * (1.0 - rho * rho).ln();
        let tol = if rho == 0.0 { 0.02 } else { 0.05 };
        ok &= (est - truth).abs() <= tol;
        detail.push(format!("rho={rho}: {est:.4} vs {truth:.4}"));
    }
    let elapsed = start.elapsed();
    (
        ok && elapsed < Duration::from_secs(30),
        format!("{}; {:.2} s", detail.join(", "), elapsed.as_secs_f64()),
    )
}

fn criterion_4() -> Verdict {
    let data = synth_tabular(&SynthConfig::default(), 7).unwrap();
    let tree = fit_decision_tree(&data, 4).unwrap();
    let cfg = StudyConfig {
        runs: 50,
        ..StudyConfig::default()
    };
    let rows = extractor_study(&data, &tree, &cfg, 0).unwrap();
    let (id, ood, ent) = (&rows[0], &rows[1], &rows[2]);
    let ordering = id.mi_xz > ood.mi_xz && ood.mi_xz > ent.mi_xz;
    let fidelity = (ood.mi_zy - id.mi_zy).abs() <= 0.1;
    let dpi = rows.iter().all(|r| r.mi_zy <= r.mi_xy + 0.05);
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "{} I(X,Z)={:.3} I(Z,Y)={:.3} I(X,Y)={:.3}",
                r.extractor, r.mi_xz, r.mi_zy, r.mi_xy
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (ordering && fidelity && dpi, detail)
}

fn criterion_5() -> Verdict {
    let b = clustered_benchmark(0).unwrap();
    let cfg = ExampleConfig::default();
    let at = |n: usize| -> Vec<(f64, f64)> {
        Selector::ALL
            .iter()
            .map(|&s| {
                let sc = evaluate_selector(&b.data, &b.model, s, n, &cfg).unwrap();
                (sc.non_representativeness, sc.diversity)
            })
            .collect()
    };
    let six = at(6);
    let nr_order = six[0].0 < six[1].0 && six[1].0 < six[2].0;
    let d_order = six[2].1 > six[1].1 && six[1].1 > six[0].1;
    let class_size = (0..b.data.n_classes())
        .map(|c| b.data.class_indices(c).len())
        .min()
        .unwrap();
    let full = at(class_size);
    let converge = full.iter().all(|v| v.1 == full[0].1);
    let one = at(1);
    let zero = one.iter().all(|v| v.1 == 0.0);
    (
        nr_order && d_order && converge && zero,
        format!(
            "n=6 (NR, D): kmedoids {:.3}/{:.2}, mmd {:.3}/{:.2}, protodash {:.3}/{:.2}; \
             D at n={class_size}: {:?}; D at n=1: {:?}",
            six[0].0,
            six[0].1,
            six[1].0,
            six[1].1,
            six[2].0,
            six[2].1,
            full.iter().map(|v| v.1).collect::<Vec<_>>(),
            one.iter().map(|v| v.1).collect::<Vec<_>>()
        ),
    )
}

fn criterion_6() -> Verdict {
    let b = token_benchmark_with(&TokenConfig::default(), 0).unwrap();
    // first held-out document
    let x = b.data.row(b.data.n_samples() * 4 / 5).to_vec();
    let mut cfg = ExpectationConfig::new(
        FeatureDistribution::empirical(&b.data).unwrap(),
        LossFunction::ZeroOne,
        0,
    );
    cfg.n_mc_samples = 5000;
    let mut ecs = Vec::new();
    let mut pts = Vec::new();
    for m in [Method::Saliency, Method::InpXGrad, Method::IntGrad] {
        let a = attribute(&b.model, &x, m, 0).unwrap();
        let k = effective_complexity(&a, &b.model, 0.25, &cfg).unwrap().k;
        let pt = (0..5)
            .map(|s| perturbation_test(&a, &b.model, k, &b.data, 500, s).unwrap())
            .sum::<f64>()
            / 5.0;
        ecs.push(k);
        pts.push(pt);
    }
    let spread = |v: &[f64]| {
        v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
    };
    let ec_spread = ecs.iter().max().unwrap() - ecs.iter().min().unwrap();
    let pt_spread = spread(&pts);
    (
        pt_spread <= 0.05 && ec_spread >= 4,
        format!("EC {ecs:?} (spread {ec_spread}); PT {pts:.3?} (spread {pt_spread:.3})"),
    )
}

fn brute_force_kmedoids(dist: &xmeter_core::examples::PairMatrix, n: usize) -> f64 {
    let size = dist.len();
    let mut best = f64::INFINITY;
    for i in 0..size {
        if n == 1 {
            best = best.min(kmedoids_cost(dist, &[i]));
            continue;
        }
        for j in i + 1..size {
            best = best.min(kmedoids_cost(dist, &[i, j]));
        }
    }
    best
}

const SPEARMAN_CASES: [(&[f64], &[f64], f64); 20] = [
    (&[1., 2., 3.], &[10., 20., 30.], 1.0),
    (&[3., 2., 1.], &[10., 20., 30.], -1.0),
    (
        &[1., 2., 3., 4., 5.],
        &[5., 6., 7., 8., 7.],
        0.8207826816681233,
    ),
    (&[1., 2., 3., 4.], &[1., 3., 2., 4.], 0.8),
    (&[1., 2., 3., 4., 5.], &[2., 1., 4., 3., 5.], 0.8),
    (
        &[10., 20., 30., 40., 50., 60.],
        &[6., 5., 4., 3., 2., 1.],
        -1.0,
    ),
    (&[1., 1., 2., 3.], &[1., 2., 3., 4.], 0.9486832980505139),
    (&[1., 2., 2., 3.], &[3., 2., 2., 1.], -1.0),
    (&[0., 0., 1., 1.], &[0., 1., 0., 1.], 0.0),
    (
        &[1., 2., 3., 4., 5., 6.],
        &[1., 1., 1., 2., 2., 2.],
        0.87831006565368,
    ),
    (
        &[3., 1., 4., 1., 5., 9., 2., 6.],
        &[2., 7., 1., 8., 2., 8., 1., 8.],
        0.19885368120992467,
    ),
    (&[0.5, 0.25, 0.125, 0.], &[4., 3., 2., 1.], 1.0),
    (&[1., 2., 3., 4., 5.], &[1., 4., 9., 16., 25.], 1.0),
    (&[-3., -1., 0., 2., 5.], &[5., 2., 0., -1., -3.], -1.0),
    (
        &[1., 2., 3., 4., 5., 6., 7.],
        &[7., 1., 6., 2., 5., 3., 4.],
        -0.21428571428571433,
    ),
    (
        &[2., 2., 2., 1., 3.],
        &[1., 2., 3., 4., 5.],
        0.22360679774997896,
    ),
    (
        &[1.3696, 1.3696, 0.1612, 0.5312, 0., 0.],
        &[0.5169, 0.1775, 0.00238, 0.0918, 0., 0.],
        0.985184366143778,
    ),
    (
        &[5., 4., 3., 2., 1., 0.],
        &[0., 0., 1., 1., 2., 2.],
        -0.956182887467515,
    ),
    (
        &[1., 2., 3., 4., 5., 6., 7., 8.],
        &[2., 1., 4., 3., 6., 5., 8., 7.],
        0.9047619047619048,
    ),
    (
        &[1., 3., 2., 5., 4.],
        &[1., 1., 2., 2., 3.],
        0.5797509043642028,
    ),
];

fn criterion_7() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    let mut kmedoids_misses = Vec::new();
    for trial in 0..10 {
        let size = r.random_range(5..=50);
        let rows: Vec<Vec<f64>> = (0..size)
            .map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let dist = distance_matrix(&refs, Distance::Euclidean);
        for n in 1..=2 {
            let got = kmedoids_cost(&dist, &pam(&dist, n).unwrap());
            let best = brute_force_kmedoids(&dist, n);
            if (got - best).abs() > 1e-9 * best.max(1.0) {
                kmedoids_misses.push(format!(
                    "trial {trial} n={n} cost {got:.4} vs optimum {best:.4}"
                ));
            }
        }
    }
    if !kmedoids_misses.is_empty() {
        failures.push(format!(
            "k-medoids {}/20 above brute force ({})",
            kmedoids_misses.len(),
            kmedoids_misses.join(", ")
        ));
    }

    let mut mmd_misses = 0;
    for _ in 0..10 {
        let size = r.random_range(8..=30);
        let rows: Vec<Vec<f64>> = (0..size)
            .map(|_| (0..2).map(|_| r.random_range(0.0..4.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let gram = rbf_gram(
            &refs,
            KernelConfig::median_heuristic().resolve(&refs).unwrap(),
        );
        let (chosen, trace) = mmd_greedy(&gram, 6).unwrap();
        for step in 0..chosen.len() {
            let prefix = &chosen[..step];
            let (best, value) = (0..size)
                .filter(|c| !prefix.contains(c))
                .map(|c| {
                    let mut set = prefix.to_vec();
                    set.push(c);
                    (c, mmd2(&gram, &set))
                })
                .fold((usize::MAX, f64::INFINITY), |acc, v| {
                    if v.1 < acc.1 {
                        v
                    } else {
                        acc
                    }
                });
            if best != chosen[step] || (value.max(0.0) - trace[step]).abs() > 1e-9 {
                mmd_misses += 1;
            }
        }
    }
    if mmd_misses > 0 {
        failures.push(format!(
            "MMD {mmd_misses}/60 steps differ from exhaustive argmin"
        ));
    }

    let mut worst_ig: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..6).map(|_| r.random_range(0.0..1.0)).collect();
        let base: Vec<f64> = (0..6).map(|_| r.random_range(0.0..1.0)).collect();
        let a = integrated_gradients(&ParkFunction, &x, &base, 256).unwrap();
        let gap =
            a.values.iter().sum::<f64>() - (ParkFunction::eval(&x) - ParkFunction::eval(&base));
        worst_ig = worst_ig.max(gap.abs());
    }
    if worst_ig >= 1e-3 {
        failures.push(format!("IntGrad completeness gap {worst_ig:e}"));
    }

    let mut spearman_misses = 0;
    for (a, b, want) in SPEARMAN_CASES {
        if (spearman(a, b).unwrap() - want).abs() > 1e-12 {
            spearman_misses += 1;
        }
    }
    if spearman_misses > 0 {
        failures.push(format!("Spearman {spearman_misses}/20 cases differ"));
    }

    let summary = format!(
        "k-medoids {}/20 exact, MMD {}/60 steps exact, IntGrad max gap {worst_ig:.1e}, Spearman {}/20 exact",
        20 - kmedoids_misses.len(),
        60 - mmd_misses,
        20 - spearman_misses
    );
    if failures.is_empty() {
        (true, summary)
    } else {
        (false, format!("{summary}; {}", failures.join("; ")))
    }
}

fn run_twice(args: &[&str], json: &str) -> bool {
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = Command::new(env!("CARGO_BIN_EXE_xmeter"))
                .args(args)
                .arg("--out-dir")
                .arg(dir.path())
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            std::fs::read(dir.path().join(json)).unwrap()
        })
        .collect();
    outputs[0] == outputs[1]
}

fn criterion_8() -> Verdict {
    let attr = run_twice(
        &[
            "attr-eval",
            "--model",
            "park",
            "--point",
            "0.24,0.48,0.56,0.99,0.68,0.86",
            "--seed",
            "5",
        ],
        "attr_eval.json",
    );
    let ex = run_twice(
        &["example-eval", "--builtin", "clustered", "--sweep", "3"],
        "example_eval.json",
    );
    let mi = run_twice(
        &["mi", "--builtin", "synth", "--runs", "2", "--seed", "9"],
        "mi.json",
    );
    (
        attr && ex && mi,
        format!("attr-eval identical: {attr}, example-eval identical: {ex}, mi identical: {mi}"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        (
            "exact complexity and non-sensitivity cells on Park",
            criterion_1,
        ),
        (
            "monotonicity ordering and effective complexity over 10 seeds",
            criterion_2,
        ),
        ("MI estimator calibration on Gaussians", criterion_3),
        ("feature-extractor MI orderings over 50 runs", criterion_4),
        (
            "prototype selector NR/D orderings and D convergence",
            criterion_5,
        ),
        (
            "perturbation test agreement on the token benchmark",
            criterion_6,
        ),
        ("oracle equivalences", criterion_7),
        ("CLI determinism", criterion_8),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check();
        println!(
            "{} criterion {}: {name} ({:.1} s) | {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
