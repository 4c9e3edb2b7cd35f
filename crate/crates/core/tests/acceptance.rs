//! One test per acceptance criterion. Each prints a single PASS/FAIL line.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use kabe::abe::{
    estimate_mean, rank_neighbors, AnalogySet, KabeIndex, Neighbor, SelectionSource, TrainingFold,
};
use kabe::adjust::{adjust_ga, adjust_nn, adjust_similarity, ResidualModel};
use kabe::baselines::{fit_ols_with, TransformPolicy};
use kabe::cluster::{bisect, kmedoids_split, leaf_of, PointSpace};
use kabe::corpus::{
    fit_normalizer, generate_synthetic, load_dataset, Coord, LoadOptions, SyntheticModel,
};
use kabe::eval::{
    fss_search, loocv, mre, wilcoxon_approx, wilcoxon_exact, win_tie_loss, Measure, Method,
    SearchMode,
};
use kabe::seed::{self, streams};
use kabe::{
    BkConfig, ClusterNode, Dataset, EvaluationSummary, FeatureMask, FoldResult, MethodSpec,
};
use rand::seq::SliceRandom;
use rand::Rng;

const PUBLIC: [&str; 8] = [
    "albrecht",
    "kemerer",
    "cocomo",
    "desharnais",
    "maxwell",
    "china",
    "nasa",
    "telecom",
];

fn report(id: u32, title: &str, pass: bool, detail: &str, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} criterion {id:>2}: {title} ({detail}; {:.3}s)",
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

/// Bundled copy first, then `$KABE_DATA_DIR/<name>.csv`.
fn public_dataset(name: &str) -> Option<Dataset> {
    if let Some(r) = kabe::corpus::bundled(name) {
        return Some(r.unwrap().0);
    }
    let dir = PathBuf::from(std::env::var_os("KABE_DATA_DIR")?);
    let path = dir.join(format!("{name}.csv"));
    path.exists()
        .then(|| load_dataset(&path, &LoadOptions::default()).unwrap().0)
}

#[test]
fn criterion_01_dataset_statistics() {
    let start = Instant::now();
    let mut problems = Vec::new();
    match public_dataset("albrecht") {
        Some(d) => {
            let s = d.describe().unwrap();
            // Reference min, max and median are given in whole months.
            let checks = [
                ("size", s.size == 24, s.size as f64),
                ("min", s.effort_min.round() == 1.0, s.effort_min),
                ("max", s.effort_max.round() == 105.0, s.effort_max),
                ("mean", (s.effort_mean - 22.0).abs() <= 0.5, s.effort_mean),
                ("median", s.effort_median.round() == 12.0, s.effort_median),
                (
                    "skew",
                    (s.effort_skewness - 2.2).abs() <= 0.5,
                    s.effort_skewness,
                ),
            ];
            for (what, ok, got) in checks {
                if !ok {
                    problems.push(format!("albrecht {what} is {got:.3}"));
                }
            }
        }
        None => problems.push("albrecht missing".into()),
    }
    for (name, size) in [
        ("kemerer", 15),
        ("nasa", 18),
        ("telecom", 18),
        ("desharnais", 77),
    ] {
        match public_dataset(name) {
            Some(d) if d.len() == size => {}
            Some(d) => problems.push(format!("{name} has {} projects, want {size}", d.len())),
            None => problems.push(format!("{name} missing")),
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && elapsed < Duration::from_secs(1);
    let detail = if problems.is_empty() {
        "all sizes and albrecht stats match".to_string()
    } else {
        problems.join("; ")
    };
    report(1, "reference dataset statistics", pass, &detail, elapsed);
}

#[test]
fn criterion_02_ols_on_raw_fp() {
    let start = Instant::now();
    let d = public_dataset("albrecht").unwrap();
    let fp = d
        .schema
        .iter()
        .position(|f| f.name.eq_ignore_ascii_case("RawFP"))
        .unwrap();
    let train: Vec<_> = d.projects.iter().collect();
    let mask = FeatureMask::new(vec![fp], d.feature_count()).unwrap();
    let m = fit_ols_with(
        &train,
        &d.schema,
        &mask,
        TransformPolicy::None,
        &d.effort_column,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = (m.r_squared - 0.90).abs() <= 0.05 && elapsed < Duration::from_secs(1);
    report(
        2,
        "OLS R² of Effort on RawFP",
        pass,
        &format!("R² = {:.3}, {}", m.r_squared, m.equation()),
        elapsed,
    );
}

#[test]
fn criterion_03_metric_oracles() {
    let start = Instant::now();
    let mut rng = seed::rng(3);
    let mut mismatches = 0;
    for v in 0..1000 {
        let n = rng.random_range(1..=60);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0.5..2000.0), rng.random_range(0.0..3000.0)))
            .collect();
        let folds = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, p))| FoldResult {
                project_id: i.to_string(),
                actual: a,
                predicted: p,
                residual: (a - p).abs(),
                mre: mre(a, p).unwrap(),
                analogy_size: None,
                flag: Default::default(),
            })
            .collect();
        let s = EvaluationSummary::from_folds("m", format!("v{v}"), folds).unwrap();

        let mut sum = 0.0;
        let mut hits = 0usize;
        let mut all = Vec::with_capacity(n);
        for &(a, p) in &pairs {
            let r = (a - p).abs() / a;
            sum += r;
            if r <= 0.25 {
                hits += 1;
            }
            all.push(r);
        }
        all.sort_by(f64::total_cmp);
        let med = if n % 2 == 1 {
            all[n / 2]
        } else {
            (all[n / 2 - 1] + all[n / 2]) / 2.0
        };
        let pred = 100.0 * hits as f64 / n as f64;
        if s.mmre != sum / n as f64 || s.mdmre != med || s.pred25 != pred {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(5);
    report(
        3,
        "MMRE/MdMRE/pred(0.25) oracle",
        pass,
        &format!("{mismatches} of 1000 vectors differ"),
        elapsed,
    );
}

/// Two-sided p by enumerating every split of the pooled sample.
fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let rank = |v: f64| {
        let below = pooled.iter().filter(|&&x| x < v).count() as f64;
        let equal = pooled.iter().filter(|&&x| x == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = pooled.iter().map(|&v| rank(v)).collect();
    let n1 = a.len();
    let observed: f64 = ranks[..n1].iter().sum();
    let mean = n1 as f64 * (n as f64 + 1.0) / 2.0;
    let dev = (observed - mean).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for bits in 0u32..(1 << n) {
        if bits.count_ones() as usize != n1 {
            continue;
        }
        let s: f64 = (0..n)
            .filter(|i| bits >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        total += 1;
        if (s - mean).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

#[test]
fn criterion_04_wilcoxon() {
    let start = Instant::now();
    let mut rng = seed::rng(4);
    let mut worst_exact: f64 = 0.0;
    for _ in 0..200 {
        let total = rng.random_range(6..=12);
        let n1 = rng.random_range(3..=total - 3);
        // Small integer range so ties are common.
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, k| {
            (0..k)
                .map(|_| f64::from(rng.random_range(0..8u8)))
                .collect::<Vec<_>>()
        };
        let a = draw(&mut rng, n1);
        let b = draw(&mut rng, total - n1);
        let got = wilcoxon_exact(&a, &b).unwrap().p_value;
        worst_exact = worst_exact.max((got - enumerate_p(&a, &b)).abs());
    }
    let mut worst_approx: f64 = 0.0;
    for n in 12..=16 {
        for _ in 0..20 {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let shift = rng.random_range(0.0..0.5);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) + shift).collect();
            let e = wilcoxon_exact(&a, &b).unwrap().p_value;
            let z = wilcoxon_approx(&a, &b).unwrap().p_value;
            worst_approx = worst_approx.max((e - z).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_exact < 1e-9 && worst_approx <= 0.02;
    report(
        4,
        "Wilcoxon exact and approximate branches",
        pass,
        &format!("max exact gap {worst_exact:.2e}, max approx gap {worst_approx:.4}"),
        elapsed,
    );
}

fn splits_ok(node: &ClusterNode) -> bool {
    match node.children.as_slice() {
        [] => true,
        [a, b] => a.variance.max(b.variance) < node.variance && splits_ok(a) && splits_ok(b),
        _ => false,
    }
}

fn best_two_medoid_cost(space: &PointSpace) -> f64 {
    let n = space.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let cost: f64 = (0..n)
                .map(|p| space.distance(p, i).min(space.distance(p, j)))
                .sum();
            best = best.min(cost);
        }
    }
    best
}

fn random_space(rng: &mut rand_chacha::ChaCha8Rng, n: usize, m: usize) -> PointSpace {
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| ((0..m).map(|_| rng.random_range(0.0..100.0)).collect(), 1.0))
        .collect();
    let d = common::numeric_dataset(&rows);
    let nm = fit_normalizer(d.projects.iter(), &d.schema, &d.full_mask()).unwrap();
    let v: Vec<Vec<Coord>> = d.projects.iter().map(|p| nm.normalize(p)).collect();
    PointSpace::from_vectors(&v).unwrap()
}

#[test]
fn criterion_05_bisecting_kmedoids() {
    let start = Instant::now();
    let mut rng = seed::rng(5);
    let mut failures = Vec::new();
    for t in 0..100 {
        let n = rng.random_range(1..=60);
        let m = rng.random_range(1..=10);
        let space = random_space(&mut rng, n, m);
        let all: Vec<usize> = (0..n).collect();
        let cfg = BkConfig::with_seed(t);
        let tree = bisect(&all, &space, &cfg).unwrap();
        let mut seen: Vec<usize> = tree
            .leaves()
            .iter()
            .flat_map(|l| l.members.clone())
            .collect();
        seen.sort_unstable();
        if seen != all {
            failures.push(format!("dataset {t}: leaves do not partition"));
        }
        if !splits_ok(&tree.root) {
            failures.push(format!("dataset {t}: split without variance reduction"));
        }
        if bisect(&all, &space, &cfg).unwrap() != tree {
            failures.push(format!("dataset {t}: nondeterministic"));
        }
    }
    let mut optimal = 0;
    for t in 0..100 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..=4);
        let space = random_space(&mut rng, n, m);
        let all: Vec<usize> = (0..n).collect();
        let (a, b) = kmedoids_split(&all, &space, &BkConfig::with_seed(t)).unwrap();
        let cost: f64 = [&a, &b]
            .iter()
            .map(|c| {
                c.members
                    .iter()
                    .map(|&p| space.distance(p, c.medoid))
                    .sum::<f64>()
            })
            .sum();
        if cost <= best_two_medoid_cost(&space) + 1e-12 {
            optimal += 1;
        }
    }
    if optimal < 90 {
        failures.push(format!("only {optimal}/100 splits optimal"));
    }
    let detail = if failures.is_empty() {
        format!("100 datasets valid, {optimal}/100 splits optimal")
    } else {
        failures.join("; ")
    };
    report(
        5,
        "bisecting k-medoids invariants",
        failures.is_empty(),
        &detail,
        start.elapsed(),
    );
}

#[test]
fn criterion_06_kabe_structure() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut folds = 0;
    for name in kabe::corpus::bundled_names() {
        let d = public_dataset(name).unwrap();
        for i in 0..d.len() {
            let train = common::fold(&d, i);
            let f = TrainingFold::new(train, &d.schema, &d.full_mask()).unwrap();
            let cfg = BkConfig::with_seed(seed::derive(42, streams::FOLD, i as u64));
            let index = KabeIndex::build(&f, &cfg).unwrap();
            let x = &d.projects[i];
            let nearest = rank_neighbors(x, &f).unwrap()[0].index;
            let set = index.select(&f.normalize(x), &f, None).unwrap();
            let leaf = leaf_of(index.tree(), nearest).unwrap();
            if set.is_empty()
                || !set.indices().any(|j| j == nearest)
                || !set.indices().all(|j| leaf.contains(j))
            {
                failures.push(format!("{name} fold {i}"));
            }
            folds += 1;
        }
    }
    let blob = generate_synthetic(42, 40, 2, SyntheticModel::TwoBlob).unwrap();
    let s = loocv(&blob, &Method::new(MethodSpec::Kabe), &blob.full_mask(), 42).unwrap();
    let mut sizes = s.analogy_sizes();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        failures.push(format!("two-blob sizes constant: {sizes:?}"));
    }
    let detail = if failures.is_empty() {
        format!("{folds} folds valid, two-blob sizes {sizes:?}")
    } else {
        failures.join("; ")
    };
    report(
        6,
        "k-ABE analogy-set structure",
        failures.is_empty(),
        &detail,
        start.elapsed(),
    );
}

struct Zero;

impl ResidualModel for Zero {
    fn correction(&self, _: &[f64]) -> f64 {
        0.0
    }
}

#[test]
fn criterion_07_adjustment_identities() {
    let start = Instant::now();
    let mut rng = seed::rng(7);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.random_range(3..=25);
        let m = rng.random_range(1..=6);
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| {
                (
                    (0..m).map(|_| rng.random_range(0.0..50.0)).collect(),
                    rng.random_range(1.0..1000.0),
                )
            })
            .collect();
        let d = common::numeric_dataset(&rows);
        let f = TrainingFold::new(common::fold(&d, 0), &d.schema, &d.full_mask()).unwrap();
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.shuffle(&mut rng);
        let k = rng.random_range(1..=f.len());
        let set = AnalogySet {
            members: order[..k]
                .iter()
                .map(|&index| {
                    let similarity = rng.random_range(0.0..=1.0);
                    Neighbor {
                        index,
                        distance: 1.0 - similarity,
                        similarity,
                    }
                })
                .collect(),
            source: SelectionSource::Kabe,
        };
        let q = f.normalize(&d.projects[0]);
        let mean = estimate_mean(&set, &f).unwrap();
        let ga = adjust_ga(&q, &set, &f, &vec![0.0; m]).unwrap().value;
        let nn = adjust_nn(&q, &set, &f, &Zero).unwrap().value;
        let sm = adjust_similarity(&set, &f).unwrap().value;
        let efforts: Vec<f64> = set.indices().map(|i| f.effort(i)).collect();
        let lo = efforts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = efforts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if ga.to_bits() != mean.to_bits() || nn.to_bits() != mean.to_bits() || sm < lo || sm > hi {
            failures += 1;
        }
    }
    report(
        7,
        "adjustment identities and similarity hull",
        failures == 0,
        &format!("{failures} of 1000 analogy sets violate"),
        start.elapsed(),
    );
}

#[test]
fn criterion_08_kabe_versus_fixed_k() {
    let start = Instant::now();
    let mut wins = 0;
    let mut lines = Vec::new();
    for name in PUBLIC {
        let Some(d) = public_dataset(name) else {
            lines.push(format!("{name}: unavailable"));
            continue;
        };
        let mask = d.full_mask();
        let kabe = loocv(&d, &Method::new(MethodSpec::Kabe), &mask, 42)
            .unwrap()
            .mmre;
        let best = (1..=5)
            .map(|k| {
                loocv(&d, &Method::new(MethodSpec::AbeK(k)), &mask, 42)
                    .unwrap()
                    .mmre
            })
            .fold(f64::INFINITY, f64::min);
        if kabe <= best {
            wins += 1;
        }
        lines.push(format!("{name}: k-ABE {kabe:.3} vs best ABE {best:.3}"));
    }
    let elapsed = start.elapsed();
    let pass = wins >= 5 && elapsed < Duration::from_secs(600);
    report(
        8,
        "k-ABE MMRE vs best of ABE1-ABE5",
        pass,
        &format!("{wins}/8 datasets; {}", lines.join(", ")),
        elapsed,
    );
}

#[test]
fn criterion_09_tournament_bookkeeping() {
    let start = Instant::now();
    let methods = [
        MethodSpec::Kabe,
        MethodSpec::AbeK(1),
        MethodSpec::AbeK(2),
        MethodSpec::AbeK(3),
    ];
    let mut summaries = Vec::new();
    for t in 0..9u64 {
        let model = [
            SyntheticModel::Linear,
            SyntheticModel::TwoBlob,
            SyntheticModel::Noise,
        ][t as usize % 3];
        let mut d = generate_synthetic(t, 12, 2, model).unwrap();
        d.name = format!("synthetic-{t}");
        for m in methods {
            summaries.push(loocv(&d, &Method::new(m), &d.full_mask(), 42).unwrap());
        }
    }
    let out = win_tie_loss(&summaries, &Measure::ALL).unwrap();
    let totals: Vec<usize> = out.tallies.values().map(|t| t.total()).collect();
    let pass = totals.len() == 4 && totals.iter().all(|&t| t == 81);
    report(
        9,
        "win-tie-loss bookkeeping",
        pass,
        &format!("per-method totals {totals:?}"),
        start.elapsed(),
    );
}

#[test]
fn criterion_10_fss_noise_fixture() {
    let start = Instant::now();
    let mut rng = seed::rng(10);
    let mut csv = String::from("a,b,noise,Effort\n");
    for i in 0..24 {
        let a = (i % 6) as f64;
        let b = (i / 6) as f64;
        let noise: f64 = rng.random_range(0.0..10.0);
        csv.push_str(&format!(
            "{a},{b},{noise:.3},{}\n",
            10.0 + 20.0 * a + 5.0 * b
        ));
    }
    let d = kabe::corpus::parse_csv(csv.as_bytes(), &LoadOptions::default())
        .unwrap()
        .0;
    let r = fss_search(&d, &Method::new(MethodSpec::Kabe), 42).unwrap();
    let pass =
        r.mode == SearchMode::Exhaustive && !r.best_mask.contains(2) && r.best_mmre <= r.full_mmre;
    report(
        10,
        "FSS drops the noise feature",
        pass,
        &format!(
            "mask {:?}, MMRE {:.3} vs full {:.3}",
            r.best_mask.indices(),
            r.best_mmre,
            r.full_mmre
        ),
        start.elapsed(),
    );
}
