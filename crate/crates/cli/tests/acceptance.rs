#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::{brute_oracle, fraction, full_projector, jacobi_eigen, small_instance, TruncatedView};
use nalgebra::DMatrix;
use ppd_core::noise_spectrum::ks_distance;
use ppd_core::{
    decompose, estimate_epsilon1, estimate_epsilon1_naive, generate, joint_basis, noise_law,
    principal_spectrum, run_benchmark, sample_noise_spectrum, subspace_distance, theorem2_bounds,
    true_epsilons, truth_oracle, BootstrapConfig, DecomposeOptions, OrthonormalBasis, RankMode,
    RankSpec, SimConfig,
};

const MASTER_SEED: u64 = 2024;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn true_rank_views(cfg: &SimConfig) -> (Vec<TruncatedView>, ppd_core::SimTruth) {
    let (views, truth) = generate(cfg).unwrap();
    let tv = views
        .iter()
        .zip(cfg.true_ranks())
        .map(|(v, r)| TruncatedView::new(v, r))
        .collect();
    (tv, truth)
}

fn bases(tv: &[TruncatedView]) -> Vec<OrthonormalBasis> {
    tv.iter().map(|v| v.truncation.basis.clone()).collect()
}

fn check_cells(cells: &[(SimConfig, f64, f64)]) -> Outcome {
    let configs: Vec<SimConfig> = cells.iter().map(|c| c.0.clone()).collect();
    let results = run_benchmark(&configs, 50, MASTER_SEED, &BootstrapConfig::default()).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (result, (cfg, expected, tol)) in results.iter().zip(cells) {
        let ok = result.failures == 0 && (result.mean_f_x10 - expected).abs() <= *tol;
        passed &= ok;
        parts.push(format!(
            "{}/snr{}/{}°: {:.2} vs {expected}±{tol}{}",
            cfg.rank_mode,
            cfg.snr,
            cfg.angle_deg,
            result.mean_f_x10,
            if ok { "" } else { " x" }
        ));
    }
    outcome(passed, parts.join("; "))
}

fn two_view_benchmark() -> Outcome {
    let cell =
        |mode, snr, angle, expected, tol| (SimConfig::two_view(angle, snr, mode, 0), expected, tol);
    check_cells(&[
        cell(RankMode::Estimated, 2.0, 90.0, 9.91, 0.4),
        cell(RankMode::Estimated, 2.0, 30.0, 9.75, 0.4),
        cell(RankMode::Over, 2.0, 90.0, 9.19, 0.4),
        cell(RankMode::Over, 2.0, 30.0, 8.01, 0.4),
        cell(RankMode::Under, 2.0, 90.0, 8.44, 0.4),
        cell(RankMode::Under, 2.0, 30.0, 7.86, 0.4),
        cell(RankMode::Under, 0.5, 90.0, 5.12, 0.6),
        cell(RankMode::Under, 0.5, 30.0, 4.61, 0.6),
        cell(RankMode::Over, 0.5, 90.0, 5.07, 0.6),
        cell(RankMode::Over, 0.5, 30.0, 4.67, 0.6),
        cell(RankMode::Estimated, 0.5, 90.0, 3.86, 0.6),
        cell(RankMode::Estimated, 0.5, 30.0, 3.67, 0.6),
    ])
}

fn three_view_benchmark() -> Outcome {
    let cell = |angle, expected| {
        (
            SimConfig::three_view(angle, 2.0, RankMode::Estimated, 0),
            expected,
            0.4,
        )
    };
    check_cells(&[cell(90.0, 9.83), cell(30.0, 9.75)])
}

fn grid_config(seed: u64) -> SimConfig {
    let angle = [30.0, 50.0, 90.0][seed as usize % 3];
    let snr = [0.5, 2.0, 22.0][(seed as usize / 3) % 3];
    SimConfig::two_view(angle, snr, RankMode::True, 3000 + seed)
}

fn cluster_containment() -> Outcome {
    let mut inside = 0;
    for seed in 0..200 {
        let (tv, truth) = true_rank_views(&grid_config(seed));
        let est = bases(&tv);
        let spectrum = principal_spectrum(&est[0], &est[1]).unwrap();
        let oracle = truth_oracle(&truth, &est).unwrap();
        if oracle.cluster_intervals.contains(&spectrum, 1e-10) {
            inside += 1;
        }
    }
    outcome(
        inside == 200,
        format!("{inside}/200 seeds inside all three intervals"),
    )
}

fn bound_domination() -> Outcome {
    let (mut eligible, mut dominated) = (0, 0);
    for seed in 0..200 {
        let (tv, truth) = true_rank_views(&grid_config(seed));
        let est = bases(&tv);
        let joint = joint_basis(&est[0], &est[1], truth.joint.rank()).unwrap();
        let b = theorem2_bounds(&truth, &est, &joint).unwrap();
        if b.hypothesis_holds {
            eligible += 1;
            if b.dominated(1e-10) {
                dominated += 1;
            }
        }
    }
    outcome(
        eligible > 0 && dominated == eligible,
        format!("{dominated}/{eligible} seeds satisfying the hypothesis are dominated (200 drawn)"),
    )
}

fn noiseless_exactness() -> Outcome {
    let mut exact = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let angle = [30.0, 45.0, 60.0, 75.0, 90.0][seed as usize % 5];
        let cfg = SimConfig::two_view(angle, f64::INFINITY, RankMode::True, 4000 + seed);
        let (views, truth) = generate(&cfg).unwrap();
        let options = DecomposeOptions {
            ranks: RankSpec::Explicit(cfg.true_ranks()),
            bootstrap: BootstrapConfig::with_seed(seed),
            pairwise_average: false,
        };
        let result = decompose(&views[0], &views[1], &options).unwrap();
        let mut distance = subspace_distance(&result.joint, &truth.joint).unwrap_or(1.0);
        for k in 0..2 {
            distance = distance.max(
                subspace_distance(&result.individuals[k], &truth.individuals[k]).unwrap_or(1.0),
            );
        }
        worst = worst.max(distance);
        if result.joint_rank == truth.joint.rank() && distance <= 1e-8 {
            exact += 1;
        }
    }
    outcome(
        exact == 50,
        format!("{exact}/50 exact, largest distance {worst:.2e}"),
    )
}

fn noise_law_fit() -> Outcome {
    let n = 200;
    let mut passed = true;
    let mut parts = Vec::new();
    for (q1, q2) in [(0.1, 0.1), (0.2, 0.3), (0.4, 0.4)] {
        let (r1, r2) = (
            (q1 * n as f64).round() as usize,
            (q2 * n as f64).round() as usize,
        );
        let law = noise_law(q1, q2).unwrap();
        let (mut below, mut ks) = (0, 0.0);
        for seed in 0..200u64 {
            let sample = sample_noise_spectrum(n, r1, r2, 5000 + seed).unwrap();
            if sample[0] <= law.lambda_plus + 0.05 {
                below += 1;
            }
            let continuous: Vec<f64> = sample
                .into_iter()
                .filter(|&v| v > 1e-10 && v < 1.0 - 1e-10)
                .collect();
            ks += ks_distance(&continuous, |x| law.continuous_cdf(x));
        }
        let ks = ks / 200.0;
        let ok = fraction(below, 200) >= 0.95 && ks <= 0.12;
        passed &= ok;
        parts.push(format!("({q1},{q2}): edge {below}/200, mean KS {ks:.3}"));
    }
    outcome(passed, parts.join("; "))
}

fn bootstrap_ablation() -> Outcome {
    let mut wins = 0;
    for seed in 0..20u64 {
        let cfg = SimConfig {
            n: 100,
            dims: vec![160, 200],
            ..SimConfig::two_view(60.0, 0.5, RankMode::True, 6000 + seed)
        };
        let (tv, _) = true_rank_views(&cfg);
        let b = BootstrapConfig {
            replicates: 50,
            seed: 7000 + seed,
            ..BootstrapConfig::default()
        };
        let rot = estimate_epsilon1(tv[0].bootstrap(), tv[1].bootstrap(), &b).unwrap();
        let naive = estimate_epsilon1_naive(tv[0].bootstrap(), tv[1].bootstrap(), &b).unwrap();
        if rot.epsilon1_hat >= naive.epsilon1_hat {
            wins += 1;
        }
    }
    outcome(
        fraction(wins, 20) >= 0.8,
        format!("rotational ≥ naive in {wins}/20 paired runs"),
    )
}

fn brute_spectrum(a: &OrthonormalBasis, b: &OrthonormalBasis) -> Vec<f64> {
    let m = full_projector(a) * full_projector(b);
    let n = m.nrows();
    let augmented = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => m[(i, j - n)],
        (false, true) => m[(j, i - n)],
        _ => 0.0,
    });
    let (values, _) = jacobi_eigen(&augmented);
    values.into_iter().take(n).map(|v| v.max(0.0)).collect()
}

fn oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (truth, est, joint) = small_instance(seed);
        let brute = brute_oracle(&truth, &est, &joint);
        let u1 = truth.signal_basis(0).unwrap();
        let u2 = truth.signal_basis(1).unwrap();
        let (e1, e2) = true_epsilons(&u1, &u2, &est[0], &est[1]).unwrap();
        let b = theorem2_bounds(&truth, &est, &joint).unwrap();
        let mut diffs = vec![
            (e1 - brute.epsilon1).abs(),
            (e2 - brute.epsilon2).abs(),
            (b.joint_bound - brute.joint_bound).abs(),
            (b.joint_distance - brute.joint_distance).abs(),
        ];
        for k in 0..2 {
            diffs.push((b.individual_bounds[k] - brute.individual_bounds[k]).abs());
            diffs.push((b.individual_distances[k] - brute.individual_distances[k]).abs());
        }
        let fast = principal_spectrum(&est[0], &est[1]).unwrap();
        let slow = brute_spectrum(&est[0], &est[1]);
        for (i, v) in slow.iter().enumerate() {
            diffs.push((fast.get(i).copied().unwrap_or(0.0) - v).abs());
        }
        let diff = diffs.into_iter().fold(0.0, f64::max);
        worst = worst.max(diff);
        if diff <= TOL && b.hypothesis_holds == brute.hypothesis_holds {
            agree += 1;
        }
    }
    outcome(
        agree == 20,
        format!("{agree}/20 instances agree, largest difference {worst:.2e}"),
    )
}

fn ppd(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_ppd"))
        .args(args)
        .status()
        .unwrap()
        .success()
}

fn snapshot(paths: &[PathBuf]) -> Vec<Vec<u8>> {
    paths
        .iter()
        .map(|p| std::fs::read(p).unwrap_or_default())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("grid.conf");
    std::fs::write(
        &config,
        "n = 50\np = 80, 100\njoint_rank = 4\nindividual_ranks = 5, 4\nangles = 60\nsnrs = 2\n\
         rank_modes = estimated, over\nreps = 2\nseed = 9\nbootstrap_reps = 10\n",
    )
    .unwrap();
    let views = d.join("views");
    let table = d.join("table.csv");
    let law = d.join("law.json");
    let sample = d.join("sample.json");
    let result = d.join("result.json");
    let plot = d.join("plot.svg");
    let report = d.join("report.json");
    let diag_svg = d.join("diag.svg");
    let diag_json = d.join("diag.json");
    let v1 = views.join("grid_cell0_view1.csv");
    let v2 = views.join("grid_cell0_view2.csv");
    let truth = views.join("grid_cell0_truth.json");

    let steps: Vec<(&str, Vec<&str>, Vec<PathBuf>)> = vec![
        (
            "simulate",
            vec![
                "simulate",
                "--config",
                s(&config),
                "--out",
                s(&table),
                "--emit-views",
                s(&views),
            ],
            vec![
                table.clone(),
                d.join("table.seeds.csv"),
                v1.clone(),
                v2.clone(),
                truth.clone(),
            ],
        ),
        (
            "noise-spectrum",
            vec![
                "noise-spectrum",
                "--q1",
                "0.2",
                "--q2",
                "0.3",
                "--out",
                s(&law),
            ],
            vec![law.clone()],
        ),
        (
            "noise-spectrum sampler",
            vec![
                "noise-spectrum",
                "--n",
                "100",
                "--r1",
                "30",
                "--r2",
                "40",
                "--seed",
                "7",
                "--out",
                s(&sample),
            ],
            vec![sample.clone()],
        ),
        (
            "decompose",
            vec![
                "decompose",
                "--view",
                s(&v1),
                "--view",
                s(&v2),
                "--bootstrap-reps",
                "20",
                "--seed",
                "5",
                "--out",
                s(&result),
                "--diagnostic",
                s(&plot),
                "--diagnostic-json",
                s(&report),
                "--truth",
                s(&truth),
            ],
            vec![result.clone(), plot.clone(), report.clone()],
        ),
        (
            "diagnose",
            vec![
                "diagnose",
                "--result",
                s(&result),
                "--truth",
                s(&truth),
                "--svg",
                s(&diag_svg),
                "--json",
                s(&diag_json),
            ],
            vec![diag_svg.clone(), diag_json.clone()],
        ),
    ];

    let mut failed = Vec::new();
    for (name, args, outputs) in &steps {
        let ok = ppd(args);
        let first = snapshot(outputs);
        let ok = ok && ppd(args) && first.iter().all(|b| !b.is_empty());
        if !ok || snapshot(outputs) != first {
            failed.push(*name);
        }
    }
    let detail = if failed.is_empty() {
        format!("{} invocations byte-identical on rerun", steps.len())
    } else {
        format!("differing or failing: {}", failed.join(", "))
    };
    outcome(failed.is_empty(), detail)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("two-view benchmark mean F-scores", two_view_benchmark),
        ("three-view benchmark mean F-scores", three_view_benchmark),
        ("cluster interval containment", cluster_containment),
        ("subspace bound domination", bound_domination),
        ("noiseless exactness", noiseless_exactness),
        ("noise law edge and KS fit", noise_law_fit),
        ("rotational vs naive bootstrap", bootstrap_ablation),
        ("oracle vs brute force", oracle_equivalence),
        ("CLI determinism", cli_determinism),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    let mut run = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let o = check();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.passed {
            failures += 1;
        }
    }
    println!("{} of {run} criteria passed", run - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
