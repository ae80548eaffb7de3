//! Acceptance suite. Prints one line per criterion and exits nonzero when
//! any of them fails. MovieLens-100K is read from `MOVIELENS_PATH` or
//! `data/ml-100k/u.data`.

mod common;

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{max_abs_diff, movielens_path, random_expertise, random_graph, rng, toy_graph, Dense};
use diffrec::experiment::{reproduction_config, run_experiment, sweep_table, CellReport, SweepRow};
use diffrec::expertise::{self, ExpertiseMethod, GiniMode};
use diffrec::kernels::{md_scores, KernelSpec, RecommendationList, Scorer, ShareNormalization};
use diffrec::metrics::{
    coverage, f1_score, hamming_diversity, hamming_diversity_sampled, intra_diversity, pair_hamming,
};
use diffrec::reference::{self, ReferenceCell};
use rand::seq::index::sample;
use rand::Rng;

const REDUCTION_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-9;
const F1_ARITHMETIC_TOL: f64 = 0.001;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const BASELINE_BUDGET: Duration = Duration::from_secs(60);

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// The shared five-seed MovieLens run: MD plus every expert method over the λ grid.
fn movielens_rows() -> &'static Result<Vec<SweepRow>, String> {
    static ROWS: OnceLock<Result<Vec<SweepRow>, String>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let path = movielens_path();
        if !path.exists() {
            return Err(format!("dataset not found at {}", path.display()));
        }
        let mut config = reproduction_config(&path, SEEDS.to_vec());
        config.parallel_cells = true;
        let reports: Vec<CellReport> = run_experiment(&config).map_err(|e| e.to_string())?;
        Ok(sweep_table(&reports))
    })
}

fn row(rows: &[SweepRow], expertise: Option<ExpertiseMethod>, lambda: Option<f64>) -> &SweepRow {
    let label = match expertise {
        None => "MD".to_string(),
        Some(e) => format!("MD{}", e.name()),
    };
    rows.iter()
        .find(|r| {
            r.method == label
                && match (r.lambda, lambda) {
                    (Some(a), Some(b)) => (a - b).abs() < 1e-9,
                    (None, None) => true,
                    _ => false,
                }
        })
        .unwrap_or_else(|| panic!("no row for {label} {lambda:?}"))
}

fn check_cell(rows: &[SweepRow], cell: ReferenceCell) -> (bool, String) {
    let r = row(rows, cell.expertise, cell.lambda);
    let pass = cell.f1_ok(r.f1.0) && cell.coverage_ok(r.coverage.0);
    let lambda = cell.lambda.map(|l| format!(" λ={l}")).unwrap_or_default();
    let detail = format!(
        "{}{lambda}: F1 {:.4} (ref {:.3}) cov {:.1} (ref {})",
        r.method, r.f1.0, cell.f1, r.coverage.0, cell.coverage
    );
    (pass, detail)
}

fn with_rows(f: impl FnOnce(&[SweepRow]) -> Outcome) -> Outcome {
    match movielens_rows() {
        Ok(rows) => f(rows),
        Err(e) => outcome(false, e.clone()),
    }
}

fn fig1_exactness() -> Outcome {
    let s = md_scores(&toy_graph(), 2);
    let got = [s.get(1), s.get(2), s.get(4)];
    let want = [5.0 / 18.0, 5.0 / 18.0, 1.0 / 6.0];
    let rounded: Vec<f64> = got.iter().map(|v| (v * 100.0).round() / 100.0).collect();
    let pass = max_abs_diff(&got, &want) <= f64::EPSILON && rounded == [0.28, 0.28, 0.17];
    outcome(pass, format!("(i2,i3,i5) = {got:?}"))
}

fn reductions() -> Outcome {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = random_graph(&mut r, 50, 50);
        let uniform = expertise::compute(&g, ExpertiseMethod::Uniform, GiniMode::Standard);
        let md = Scorer::new(&g, KernelSpec::md(), None).unwrap();
        let hc = Scorer::new(&g, KernelSpec::hc(), None).unwrap();
        let extra = KernelSpec::extra(
            ExpertiseMethod::Uniform,
            1.0,
            ShareNormalization::UserDegree,
        );
        let pairs = [
            (Scorer::new(&g, extra, Some(&uniform)).unwrap(), &md),
            (Scorer::new(&g, KernelSpec::hhp(1.0), None).unwrap(), &md),
            (Scorer::new(&g, KernelSpec::hhp(0.0), None).unwrap(), &hc),
            (Scorer::new(&g, KernelSpec::bhc(1.0), None).unwrap(), &hc),
        ];
        for t in 0..g.user_count() as u32 {
            for (a, b) in &pairs {
                worst = worst.max(max_abs_diff(&a.scores(t).values, &b.scores(t).values));
            }
        }
    }
    outcome(
        worst <= REDUCTION_TOL,
        format!("max diff {worst:.2e} over 200 graphs"),
    )
}

fn dense_oracle() -> Outcome {
    let mut r = rng(77);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = random_graph(&mut r, 50, 50);
        let dense = Dense::from_graph(&g);
        let e = random_expertise(&mut r, g.user_count());
        let lambda = [0.0, 0.3, 0.7, 1.0][r.gen_range(0..4)];
        let mut specs = vec![
            KernelSpec::md(),
            KernelSpec::hc(),
            KernelSpec::hhp(lambda),
            KernelSpec::bhc(lambda),
        ];
        for mode in [
            ShareNormalization::UserDegree,
            ShareNormalization::LiteralEq3,
            ShareNormalization::Receiver,
        ] {
            specs.push(KernelSpec::extra(ExpertiseMethod::Uniform, lambda, mode));
        }
        for spec in specs {
            let scorer = Scorer::new(&g, spec, Some(&e)).unwrap();
            let expected = dense.scores(&spec, Some(&e.values));
            for t in 0..g.user_count() as u32 {
                let s = scorer.scores(t);
                if !s.is_cold() {
                    worst = worst.max(max_abs_diff(&s.values, &expected[t as usize]));
                }
            }
        }
    }
    outcome(
        worst <= ORACLE_TOL,
        format!("max diff {worst:.2e} over 100 graphs"),
    )
}

fn baseline() -> Outcome {
    let path = movielens_path();
    if !path.exists() {
        return outcome(false, format!("dataset not found at {}", path.display()));
    }
    let start = Instant::now();
    let mut config = reproduction_config(&path, SEEDS.to_vec());
    config.methods.truncate(1);
    let reports = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let rows = sweep_table(&reports);
    let (pass, detail) = check_cell(&rows, reference::MD_BASELINE);
    outcome(
        pass && elapsed < BASELINE_BUDGET,
        format!("{detail}, {:.1}s for 5 seeds", elapsed.as_secs_f64()),
    )
}

fn expert_cells() -> Outcome {
    with_rows(|rows| {
        let cells = [
            (ExpertiseMethod::El, 0.7),
            (ExpertiseMethod::Sim2, 0.7),
            (ExpertiseMethod::Sim2, 0.9),
            (ExpertiseMethod::Activity, 0.9),
        ];
        let mut pass = true;
        let mut details = Vec::new();
        for (m, l) in cells {
            let (ok, d) = check_cell(rows, reference::lookup(m, l).unwrap());
            pass &= ok;
            details.push(d);
        }
        outcome(pass, details.join("; "))
    })
}

fn trends() -> Outcome {
    with_rows(|rows| {
        let mut pass = true;
        let mut details = Vec::new();
        for m in reference::METHODS {
            let covs: Vec<f64> = reference::LAMBDAS
                .iter()
                .map(|&l| row(rows, Some(m), Some(l)).coverage.0)
                .collect();
            let increasing = covs.windows(2).all(|w| w[1] > w[0]);
            pass &= increasing;
            if !increasing {
                details.push(format!("MD{} not increasing {covs:?}", m.name()));
            }
        }
        let order = [
            Some(ExpertiseMethod::Sim2),
            Some(ExpertiseMethod::El),
            Some(ExpertiseMethod::Sim),
            Some(ExpertiseMethod::Gini),
            Some(ExpertiseMethod::Activity),
            None,
        ];
        let covs: Vec<(String, f64)> = order
            .iter()
            .map(|&m| {
                let r = row(rows, m, m.map(|_| 0.7));
                (r.method.clone(), r.coverage.0)
            })
            .collect();
        for w in covs.windows(2) {
            if w[0].1 <= w[1].1 {
                pass = false;
                details.push(format!(
                    "{} {:.1} <= {} {:.1}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                ));
            }
        }
        let listing: Vec<String> = covs.iter().map(|(m, c)| format!("{m} {c:.1}")).collect();
        details.push(format!("λ=0.7 coverage: {}", listing.join(" > ")));
        outcome(pass, details.join("; "))
    })
}

fn sweep_endpoints() -> Outcome {
    with_rows(|rows| {
        let targets = [
            ReferenceCell {
                expertise: Some(ExpertiseMethod::El),
                lambda: Some(0.9),
                f1: 0.231,
                coverage: 716,
            },
            ReferenceCell {
                expertise: Some(ExpertiseMethod::El),
                lambda: Some(0.7),
                f1: 0.277,
                coverage: 464,
            },
        ];
        let mut pass = true;
        let mut details = Vec::new();
        for cell in targets {
            let (ok, d) = check_cell(rows, cell);
            pass &= ok;
            details.push(d);
        }
        outcome(pass, details.join("; "))
    })
}

fn f1_arithmetic() -> Outcome {
    let triples = [
        (0.140, 0.269, 0.184),
        (0.161, 0.299, 0.209),
        (0.156, 0.293, 0.203),
        (0.360, 0.197, 0.254),
        (0.369, 0.202, 0.261),
        (0.362, 0.202, 0.259),
    ];
    let worst = triples
        .iter()
        .map(|&(p, r, f)| (f1_score(p, r) - f).abs())
        .fold(0.0, f64::max);
    outcome(worst <= F1_ARITHMETIC_TOL, format!("max |ΔF1| {worst:.4}"))
}

fn random_lists(seed: u64, users: usize, items: usize, k: usize) -> Vec<RecommendationList> {
    let mut r = rng(seed);
    (0..users as u32)
        .map(|u| RecommendationList {
            target: u,
            items: sample(&mut r, items, k)
                .into_iter()
                .map(|i| (i as u32, 1.0))
                .collect(),
        })
        .collect()
}

fn metric_properties() -> Outcome {
    let mut failures = Vec::new();

    // HD symmetry, bounds and accumulation against the double loop
    for seed in 0..20 {
        let k = 1 + seed as usize % 20;
        let lists = random_lists(seed, 2 + (seed as usize * 5) % 99, 60, k);
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for a in 0..lists.len() {
            for b in 0..lists.len() {
                let d = pair_hamming(&lists[a], &lists[b], k);
                if d != pair_hamming(&lists[b], &lists[a], k) || !(0.0..=1.0).contains(&d) {
                    failures.push(format!("HD pair seed {seed}"));
                }
                if a < b {
                    sum += d;
                    pairs += 1;
                }
            }
        }
        let acc = hamming_diversity(&lists, k).unwrap();
        if (acc - sum / pairs as f64).abs() > 1e-12 {
            failures.push(format!("HD accumulation seed {seed}"));
        }
    }

    // coverage monotone in K on identical rankings
    for seed in 0..20 {
        let lists = random_lists(1000 + seed, 20, 200, 40);
        if (1..40).any(|k| coverage(&lists, k) > coverage(&lists, k + 1)) {
            failures.push(format!("coverage seed {seed}"));
        }
    }

    // intraD within [0, 1] on real MD rankings
    let mut r = rng(9);
    for _ in 0..20 {
        let g = random_graph(&mut r, 40, 40);
        let users: Vec<u32> = (0..g.user_count() as u32)
            .filter(|&u| g.user_degree(u) > 0)
            .collect();
        let lists = Scorer::new(&g, KernelSpec::md(), None)
            .unwrap()
            .recommend_all(&users, 5);
        if let Ok(d) = intra_diversity(&lists, &g, 5) {
            if !(-1e-12..=1.0 + 1e-12).contains(&d) {
                failures.push(format!("intraD {d}"));
            }
        }
    }

    // sampled HD within three standard errors of the exact value
    for seed in 0..10 {
        let lists = random_lists(500 + seed, 200, 80, 20);
        let exact = hamming_diversity(&lists, 20).unwrap();
        let (est, se) = hamming_diversity_sampled(&lists, 20, 5_000, seed).unwrap();
        if (est - exact).abs() > 3.0 * se {
            failures.push(format!(
                "sampled HD seed {seed}: {est} vs {exact} (se {se})"
            ));
        }
    }

    let pass = failures.is_empty();
    let detail = if pass {
        "HD, coverage, intraD, sampled HD".to_string()
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn similarity_oracle() -> Outcome {
    let mut r = rng(60);
    let mut mismatches = 0;
    for _ in 0..50 {
        let g = random_graph(&mut r, 60, 40);
        let dense = Dense::from_graph(&g);
        let sim = dense.user_pair_sum(|a, b| 1.0 / ((a * b) as f64).sqrt());
        let sim2 = dense.user_pair_sum(|a, b| 1.0 / ((a * b) as f64).powi(2));
        mismatches +=
            usize::from(expertise::sim(&g) != sim) + usize::from(expertise::sim2(&g) != sim2);
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatching vectors over 50 graphs"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("1 toy graph MD exactness", fig1_exactness),
        ("2 reduction identities", reductions),
        ("3 dense oracle equivalence", dense_oracle),
        ("4 MovieLens MD baseline", baseline),
        ("5 MovieLens expert cells", expert_cells),
        ("6 coverage trends and ordering", trends),
        ("7 MDEL sweep endpoints", sweep_endpoints),
        ("8 F1 convention", f1_arithmetic),
        ("9 metric properties", metric_properties),
        ("10 similarity expertise oracle", similarity_oracle),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "[{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
