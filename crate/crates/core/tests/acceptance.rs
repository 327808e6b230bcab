//! Acceptance suite: one PASS / FAIL / SKIP line per criterion.
//!
//! Criteria 5 to 9 need the published eye-tracking dataset. Point
//! `CINEGAZE_DATASET` at its manifest to run them; they are skipped
//! otherwise. Exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use cinegaze::config::RunConfig;
use cinegaze::ioc::{loo_window_ioc, IocConfig};
use cinegaze::metrics::{self, AucBorjiParams, Metric};
use cinegaze::pipeline::{run_full, Dataset, RunSummary};
use cinegaze::saliency::{blur_fixations, make_kernel};
use cinegaze::stats;
use cinegaze_fixtures::{generate_scanpaths, oracle, random, write_dataset, DatasetFixture, ScanpathFixture};
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn c1_metric_oracles() -> Verdict {
    let start = Instant::now();
    let mut rng = random::rng(1);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut aucb_mismatch = 0usize;
    let mut undefined_mismatch = 0usize;
    for i in 0..200u64 {
        let s = random::heatmap(&mut rng, 16, 16);
        let q = random::heatmap(&mut rng, 16, 16);
        let k = rng.gen_range(1..12);
        let f = random::fixations(&mut rng, 16, 16, k);
        let pairs: [(&str, cinegaze::Result<f64>, cinegaze_fixtures::OracleResult<f64>); 5] = [
            ("CC", metrics::cc(&s, &q), oracle::cc(&s, &q)),
            ("SIM", metrics::sim(&s, &q), oracle::sim(&s, &q)),
            ("NSS", metrics::nss(&s, &f), oracle::nss(&s, &f)),
            ("AUC_J", metrics::auc_judd(&s, &f), oracle::auc_judd(&s, &f)),
            ("KLD", metrics::kld(&s, &q), oracle::kld(&s, &q, metrics::KLD_EPSILON)),
        ];
        for (name, got, want) in pairs {
            match (got, want) {
                (Ok(a), Ok(b)) => {
                    let w = worst.entry(name).or_default();
                    *w = w.max((a - b).abs());
                }
                (Err(_), Err(_)) => {}
                _ => undefined_mismatch += 1,
            }
        }
        let seed = 1000 + i;
        match (
            metrics::auc_borji(&s, &f, AucBorjiParams::with_seed(seed)),
            oracle::auc_borji(&s, &f, seed, 100, 1),
        ) {
            (Ok(a), Ok(b)) if a.to_bits() == b.to_bits() => {}
            _ => aucb_mismatch += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let max = worst.values().fold(0.0f64, |a, b| a.max(*b));
    let detail = format!(
        "200 instances x 6 metrics on 16x16; max |diff| {max:.2e} ({}); AUC_B bit mismatches {aucb_mismatch}; \
         definedness mismatches {undefined_mismatch}; {secs:.2} s",
        worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join(", ")
    );
    verdict(max <= 1e-6 && aucb_mismatch == 0 && undefined_mismatch == 0 && secs < 10.0, detail)
}

fn c2_convolution() -> Verdict {
    let mut rng = random::rng(2);
    let (sigma, trunc) = (4.0, 3.0);
    let kernel = make_kernel::<f64>(sigma, trunc).unwrap();
    let radius = kernel.radius() as u32;
    let mut worst = 0.0f64;
    let mut worst_mass = 0.0f64;
    for _ in 0..50 {
        let k = rng.gen_range(1..30);
        let f = random::fixations(&mut rng, 64, 64, k);
        let fast = blur_fixations(&f, &kernel);
        let direct = oracle::direct_blur_map(&f, sigma, trunc).unwrap();
        for (a, b) in fast.values().iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
        let inner = random::interior_fixations(&mut rng, 64, 64, radius, k);
        let mass = blur_fixations(&inner, &kernel).sum();
        worst_mass = worst_mass.max((mass - inner.len() as f64).abs());
    }
    verdict(
        worst <= 1e-6 && worst_mass <= 1e-6,
        format!("50 random 64x64 maps, sigma {sigma}: max |diff| {worst:.2e}; interior mass error {worst_mass:.2e}"),
    )
}

fn c3_ioc_fast_path() -> Verdict {
    let mut worst = 0.0f64;
    let mut presence = 0usize;
    let mut windows = 0usize;
    for seed in 0..8u64 {
        let fx = ScanpathFixture {
            seed,
            observers: 2 + seed as usize % 7,
            frames: 30 + 20 * (seed as u32 % 2),
            width: 32,
            height: 24,
            congruency: seed as f64 / 7.0,
            cluster_sigma: 2.0,
            cuts: vec![12, 25],
            reconvergence_lag: 2,
            dropout: 0.2,
            samples_per_frame: 1 + seed as usize % 3,
            jitter_sigma: 1.0,
        };
        let fix = generate_scanpaths(&fx);
        let n = [1usize, 5, 20][seed as usize % 3];
        let sigma = 2.5;
        let fast = loo_window_ioc(&fix, &IocConfig::new(n, sigma)).unwrap();
        let naive = oracle::window_ioc(&fix, n, sigma, 3.0).unwrap();
        if fast.values.len() != naive.len() {
            return Fail(format!("fixture {seed}: {} vs {} windows", fast.values.len(), naive.len()));
        }
        for ((ta, a), (tb, b)) in fast.values.iter().zip(&naive) {
            windows += 1;
            match (a, b) {
                (Some(a), Some(b)) if ta == tb => worst = worst.max((a - b).abs()),
                (None, None) if ta == tb => {}
                _ => presence += 1,
            }
        }
    }
    verdict(
        worst <= 1e-6 && presence == 0,
        format!("8 fixtures (N 2..8, <= 50 frames), {windows} windows: max |diff| {worst:.2e}; presence mismatches {presence}"),
    )
}

fn c4_statistics() -> Verdict {
    let mut rng = random::rng(4);
    let mut worst_ft = 0.0f64;
    for _ in 0..100 {
        let na = rng.gen_range(2..20);
        let nb = rng.gen_range(2..20);
        let shift = rng.gen_range(-2.0..2.0);
        let a: Vec<f64> = (0..na).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(-5.0..5.0) + shift).collect();
        let f = stats::one_way_anova(&[a.clone(), b.clone()]).unwrap().f;
        let t = stats::pooled_t_test(&a, &b).unwrap().t;
        worst_ft = worst_ft.max((f - t * t).abs() / f.max(1.0));
    }
    let mut worst_tail = 0.0f64;
    let t_points = [(0.5, 3.0), (1.0, 1.0), (1.7, 8.0), (2.1, 12.0), (2.6, 25.0), (3.2, 4.0), (4.0, 30.0), (0.1, 60.0), (5.5, 2.0), (2.0, 100.0)];
    for (t, df) in t_points {
        worst_tail = worst_tail.max((stats::t_two_sided_p(t, df) - oracle::t_two_sided_numeric(t, df)).abs());
    }
    let f_points = [(0.5, 1.0, 5.0), (1.0, 2.0, 2.0), (2.3, 3.0, 20.0), (3.9, 1.0, 30.0), (1.4, 8.0, 12.0), (6.0, 4.0, 9.0), (0.2, 10.0, 40.0), (4.5, 2.0, 100.0), (9.0, 5.0, 6.0), (1.1, 20.0, 20.0)];
    for (f, d1, d2) in f_points {
        worst_tail = worst_tail.max((stats::f_upper_p(f, d1, d2) - oracle::f_upper_numeric(f, d1, d2)).abs());
    }
    let x: Vec<f64> = (0..25).map(|i| i as f64 * 0.37 - 3.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 2.5 * v + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -0.7 * v + 4.0).collect();
    let (r_up, r_down) = (stats::pearson(&x, &up).unwrap().r, stats::pearson(&x, &down).unwrap().r);
    verdict(
        worst_ft <= 1e-9 && worst_tail <= 1e-8 && r_up == 1.0 && r_down == -1.0,
        format!(
            "100 two-group F vs t^2: max rel diff {worst_ft:.2e}; 20 tail points: max |diff| {worst_tail:.2e}; \
             pearson on lines: {r_up}, {r_down}"
        ),
    )
}

struct DatasetRun {
    summary: RunSummary,
    shining: Option<String>,
    armageddon: Option<String>,
}

fn dataset_run() -> Option<Result<DatasetRun, String>> {
    let manifest = std::env::var_os("CINEGAZE_DATASET")?;
    let run = || -> Result<DatasetRun, String> {
        let ds = Dataset::load(Path::new(&manifest)).map_err(|e| e.to_string())?;
        let find = |needle: &str| {
            ds.clips
                .iter()
                .map(|c| c.meta.clip_id.clone())
                .find(|id| id.to_ascii_lowercase().replace(['_', '-', ' '], "").contains(needle))
        };
        let (shining, armageddon) = (find("shining"), find("armageddon"));
        let mut cfg = match std::env::var_os("CINEGAZE_CONFIG") {
            Some(p) => RunConfig::from_toml(&fs::read_to_string(p).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            None => RunConfig::default(),
        };
        cfg.correlation_exclude.extend(shining.clone());
        let out = std::env::temp_dir().join("cinegaze-acceptance");
        let summary = run_full(&ds, &cfg, &out).map_err(|e| e.to_string())?;
        Ok(DatasetRun {
            summary,
            shining,
            armageddon,
        })
    };
    Some(run())
}

fn dataset_criteria(run: &Option<Result<DatasetRun, String>>) -> Vec<Verdict> {
    let run = match run {
        None => return (5..=9).map(|_| Skip("CINEGAZE_DATASET not set".into())).collect(),
        Some(Err(e)) => return (5..=9).map(|_| Fail(format!("dataset run failed: {e}"))).collect(),
        Some(Ok(r)) => r,
    };
    let s = &run.summary;
    let mut out = Vec::new();

    let targets = [
        (Metric::Cc, 0.398),
        (Metric::Sim, 0.302),
        (Metric::AucJudd, 0.859),
        (Metric::AucBorji, 0.771),
        (Metric::Nss, 1.762),
        (Metric::Kld, 2.490),
    ];
    out.push(match s.model_means.get("center_prior") {
        None => Fail("no center prior scores".into()),
        Some(m) => {
            let parts: Vec<(Metric, f64, Option<f64>)> = targets.iter().map(|(k, t)| (*k, *t, m.get(k).copied())).collect();
            let ok = parts.iter().all(|(_, t, v)| v.is_some_and(|v| (v - t).abs() <= 0.05));
            verdict(
                ok,
                parts
                    .iter()
                    .map(|(k, t, v)| format!("{} {} (target {t})", k.name(), v.map_or("-".into(), |v| format!("{v:.3}"))))
                    .collect::<Vec<_>>()
                    .join(", "),
            )
        }
    });

    let by_mean = |pick_max: bool| {
        s.ioc_clip_means
            .iter()
            .max_by(|a, b| if pick_max { a.1.total_cmp(b.1) } else { b.1.total_cmp(a.1) })
            .map(|(k, v)| (k.clone(), *v))
    };
    out.push(match (s.ioc_dataset_mean, by_mean(true), by_mean(false)) {
        (Some(mean), Some(hi), Some(lo)) => verdict(
            (mean - 4.1).abs() <= 0.4 && Some(&hi.0) == run.shining.as_ref() && Some(&lo.0) == run.armageddon.as_ref(),
            format!("dataset mean {mean:.3} (4.1 +/- 0.4); max {} {:.3}; min {} {:.3}", hi.0, hi.1, lo.0, lo.1),
        ),
        _ => Fail("no IOC scores".into()),
    });

    out.push(match &s.correlation {
        Some(c) => verdict(
            (c.r - 0.35).abs() <= 0.1 && (c.p - 0.19).abs() <= 0.1,
            format!("r {:.3}, p {:.3}, n {} (excluding {:?})", c.r, c.p, c.n, run.shining),
        ),
        None => Fail("correlation undefined".into()),
    });

    let mut clips = 0usize;
    let mut dropping = 0usize;
    for drops in s.cut_drops.values() {
        let pre: Vec<f64> = drops.iter().filter_map(|d| d.pre_mean).collect();
        let post: Vec<f64> = drops.iter().filter_map(|d| d.post_mean).collect();
        if pre.is_empty() || post.is_empty() {
            continue;
        }
        clips += 1;
        if stats::mean(&post) < stats::mean(&pre) {
            dropping += 1;
        }
    }
    out.push(verdict(
        clips > 0 && dropping * 5 >= clips * 4,
        format!("{dropping} of {clips} clips have post-cut mean below pre-cut mean (need >= 80%)"),
    ));

    let p_of = |kind: &str| {
        s.anova
            .iter()
            .find(|t| t.kind.to_string() == kind)
            .and_then(|t| t.anova.as_ref().map(|a| a.p))
    };
    let pair = |kind: &str, a: &str, b: &str| {
        s.anova.iter().find(|t| t.kind.to_string() == kind).and_then(|t| {
            t.pairwise
                .iter()
                .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
                .map(|p| p.test.p)
        })
    };
    let anova: Vec<Option<f64>> = ["motion", "angle", "size"].iter().map(|k| p_of(k)).collect();
    let static_dolly = pair("motion", "Static", "Dolly");
    let xcu_est = pair("size", "XCU", "EST");
    out.push(verdict(
        anova.iter().all(|p| p.is_some_and(|p| p < 1e-5))
            && static_dolly.is_some_and(|p| (0.005..=0.1).contains(&p))
            && xcu_est.is_some_and(|p| (0.05..=0.5).contains(&p)),
        format!("ANOVA p motion/angle/size {anova:?}; Static vs Dolly {static_dolly:?}; XCU vs EST {xcu_est:?}"),
    ));
    out
}

fn c10_monotonicity() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [5usize, 20] {
        for seed in 0..4u64 {
            let mean_at = |c: f64| {
                let fix = generate_scanpaths(&ScanpathFixture {
                    seed,
                    observers: 10,
                    frames: 80,
                    width: 192,
                    height: 80,
                    congruency: c,
                    cluster_sigma: 4.0,
                    cuts: vec![40],
                    reconvergence_lag: 3,
                    dropout: 0.1,
                    ..Default::default()
                });
                stats::mean(&loo_window_ioc(&fix, &IocConfig::new(n, 8.0)).unwrap().present())
            };
            let (hi, lo) = (mean_at(0.9), mean_at(0.1));
            ok &= hi > lo;
            lines.push(format!("n={n} seed={seed}: {hi:.2} > {lo:.2}"));
        }
    }
    verdict(ok, lines.join("; "))
}

fn c11_performance() -> Verdict {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let clips = 20u32;
    let frames = 4_700u32;
    let cfg = IocConfig::new(20, 45.0);
    let mut ioc_secs = 0.0;
    let start = Instant::now();
    for c in 0..clips {
        let fix = generate_scanpaths(&ScanpathFixture {
            seed: 500 + c as u64,
            observers: 14,
            frames,
            width: 1920,
            height: 800,
            congruency: 0.6,
            cluster_sigma: 40.0,
            cuts: (1..40).map(|k| k * 117).collect(),
            reconvergence_lag: 6,
            dropout: 0.05,
            samples_per_frame: 4,
            jitter_sigma: 6.0,
        });
        let t = Instant::now();
        let s = loo_window_ioc(&fix, &cfg).unwrap();
        ioc_secs += t.elapsed().as_secs_f64();
        if s.values.len() != (frames - 19) as usize {
            return Fail(format!("clip {c}: {} windows", s.values.len()));
        }
    }
    let total = start.elapsed().as_secs_f64();
    verdict(
        total < 600.0,
        format!(
            "{} frames x 14 observers at 1920x800, n=20, sigma 45: IOC {ioc_secs:.1} s, with generation {total:.1} s, \
             on {cores} core(s)",
            clips * frames
        ),
    )
}

fn c12_determinism() -> Verdict {
    let run = || -> cinegaze::Result<(tempfile::TempDir, Vec<(String, Vec<u8>)>)> {
        let dir = tempfile::tempdir().expect("temp dir");
        let manifest = write_dataset(dir.path(), &DatasetFixture::default())?;
        let ds = Dataset::load(&manifest)?;
        let cfg = RunConfig {
            sigma_px: 4.0,
            aucb_seed: 12,
            ..RunConfig::default()
        };
        let out = dir.path().join("out");
        run_full(&ds, &cfg, &out)?;
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .expect("output dir")
            .map(|e| {
                let e = e.expect("dir entry");
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("report file"))
            })
            .collect();
        files.sort();
        Ok((dir, files))
    };
    match (run(), run()) {
        (Ok((_a, fa)), Ok((_b, fb))) => {
            let differing: Vec<&str> = fa
                .iter()
                .zip(&fb)
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.as_str())
                .collect();
            verdict(
                fa.len() == fb.len() && differing.is_empty() && !fa.is_empty(),
                format!("{} report files compared; differing: {differing:?}", fa.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => Fail(format!("pipeline run failed: {e}")),
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "metric oracle equivalence", c1_metric_oracles()),
        (2, "convolution equivalence", c2_convolution()),
        (3, "IOC fast-path equivalence", c3_ioc_fast_path()),
        (4, "statistics oracles", c4_statistics()),
    ];
    let names = [
        "center-prior benchmark row",
        "leave-one-out IOC levels and extremes",
        "IOC vs shot length correlation",
        "post-cut congruency drop",
        "label ANOVA and pairwise tests",
    ];
    let run = dataset_run();
    for (i, v) in dataset_criteria(&run).into_iter().enumerate() {
        results.push((5 + i as u32, names[i], v));
    }
    results.push((10, "synthetic monotonicity", c10_monotonicity()));
    results.push((11, "full-scale IOC performance", c11_performance()));
    results.push((12, "pipeline determinism", c12_determinism()));

    let mut failed = 0;
    for (n, name, v) in &results {
        let (tag, detail) = match v {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} criterion {n:>2} ({name}): {detail}");
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
