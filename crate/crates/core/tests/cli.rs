use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cinegaze::ingest::CleanedFixations;
use cinegaze::model::ClipMeta;
use cinegaze_fixtures::dataset::{annotation_for, meta_toml, raw_gaze_csv};
use cinegaze_fixtures::{generate_scanpaths, write_dataset, DatasetFixture, ScanpathFixture};

fn cinegaze(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cinegaze")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = cinegaze(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

struct Clip {
    dir: tempfile::TempDir,
    fix: CleanedFixations,
}

impl Clip {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let meta = ClipMeta::letterboxed("walk", 40, (64, 40), (80, 60)).unwrap();
        let mut fix = generate_scanpaths(&ScanpathFixture {
            seed: 8,
            observers: 4,
            frames: 40,
            width: 64,
            height: 40,
            congruency: 0.7,
            cluster_sigma: 2.0,
            cuts: vec![15, 28],
            dropout: 0.1,
            ..Default::default()
        });
        fix.clip_id = "walk".into();
        fs::write(dir.path().join("meta.toml"), meta_toml(&meta)).unwrap();
        fs::write(dir.path().join("raw.csv"), raw_gaze_csv(&fix, &meta)).unwrap();
        let mut ann = annotation_for("walk", 40, 64, 40, 3, 1);
        ann.shots[0].end = 15;
        ann.shots[1].start = 15;
        ann.shots[1].end = 28;
        ann.shots[2].start = 28;
        fs::write(dir.path().join("ann.toml"), ann.to_document()).unwrap();
        Clip { dir, fix }
    }

    fn path(&self, name: &str) -> String {
        p(&self.dir.path().join(name)).to_string()
    }

    fn ingest(&self) {
        ok(&[
            "ingest",
            "--input",
            &self.path("raw.csv"),
            "--meta",
            &self.path("meta.toml"),
            "--output",
            &self.path("fix.csv"),
            "--report",
            &self.path("ingest.toml"),
        ]);
    }
}

#[test]
fn ingest_recovers_the_generated_fixations() {
    let c = Clip::new();
    c.ingest();
    let meta = ClipMeta::letterboxed("walk", 40, (64, 40), (80, 60)).unwrap();
    let back = CleanedFixations::read_csv(fs::File::open(c.path("fix.csv")).unwrap(), &meta).unwrap();
    assert_eq!(back, c.fix);
    assert!(fs::read_to_string(c.path("ingest.toml")).unwrap().contains("kept_points"));
}

#[test]
fn ioc_writes_series_hull_and_cut_drop() {
    let c = Clip::new();
    c.ingest();
    ok(&[
        "ioc",
        "--fixations",
        &c.path("fix.csv"),
        "--meta",
        &c.path("meta.toml"),
        "--annotations",
        &c.path("ann.toml"),
        "--window",
        "5",
        "--sigma-px",
        "3",
        "--output",
        &c.path("ioc.csv"),
        "--hull",
        &c.path("hull.csv"),
        "--cut-drop",
        &c.path("cuts.csv"),
    ]);
    let text = fs::read_to_string(c.path("ioc.csv")).unwrap();
    assert!(text.contains("# window=5"));
    assert!(text.contains("# sigma_px=3"));
    assert_eq!(data_rows(Path::new(&c.path("ioc.csv"))).len(), 36);
    assert_eq!(data_rows(Path::new(&c.path("hull.csv"))).len(), 40);
    assert_eq!(data_rows(Path::new(&c.path("cuts.csv"))).len(), 2);
}

#[test]
fn window_flag_rejects_zero() {
    let c = Clip::new();
    let out = cinegaze(&[
        "ioc",
        "--fixations",
        &c.path("fix.csv"),
        "--meta",
        &c.path("meta.toml"),
        "--window",
        "0",
        "--output",
        &c.path("ioc.csv"),
    ]);
    assert!(!out.status.success());
    assert!(!c.dir.path().join("ioc.csv").exists());
}

#[test]
fn missing_input_reports_the_path() {
    let out = cinegaze(&["ingest", "--input", "/nonexistent/raw.csv", "--meta", "/nonexistent/m.toml", "--output", "/tmp/x.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("cinegaze: "), "{err}");
    assert!(err.contains("/nonexistent/m.toml"));
}

#[test]
fn saliency_maps_average_and_bias() {
    let c = Clip::new();
    c.ingest();
    ok(&[
        "saliency",
        "--fixations",
        &c.path("fix.csv"),
        "--meta",
        &c.path("meta.toml"),
        "--annotations",
        &c.path("ann.toml"),
        "--sigma-px",
        "3",
        "--skip-first",
        "10",
        "--output-dir",
        &c.path("maps"),
        "--format",
        "pgm",
        "--average",
        &c.path("avg.f32"),
        "--bias",
        &c.path("bias.csv"),
    ]);
    let names: Vec<String> = fs::read_dir(c.path("maps"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".pgm")).count(), 40);
    assert_eq!(names.iter().filter(|n| n.ends_with(".scale.toml")).count(), 40);
    let first: cinegaze::SaliencyMap = cinegaze::mapio::load_map(&Path::new(&c.path("maps")).join("000003.pgm")).unwrap();
    assert_eq!(first.dims(), (64, 40));
    let avg: cinegaze::SaliencyMap = cinegaze::mapio::load_map(Path::new(&c.path("avg.f32"))).unwrap();
    assert_eq!(avg.dims(), (640, 400));
    assert!(fs::read_to_string(c.path("bias.csv")).unwrap().contains("# skip_first=10"));
}

#[test]
fn bench_center_prior_then_aggregate() {
    let c = Clip::new();
    c.ingest();
    ok(&[
        "bench",
        "--fixations",
        &c.path("fix.csv"),
        "--meta",
        &c.path("meta.toml"),
        "--annotations",
        &c.path("ann.toml"),
        "--center-prior",
        "--metrics",
        "CC,NSS,AUC_B",
        "--frames",
        "0",
        "20",
        "--sigma-px",
        "3",
        "--aucb-seed",
        "17",
        "--output",
        &c.path("scores.csv"),
        "--means",
        &c.path("means.toml"),
    ]);
    let scores = fs::read_to_string(c.path("scores.csv")).unwrap();
    assert!(scores.contains("# aucb_seed=17"));
    let rows = data_rows(Path::new(&c.path("scores.csv")));
    assert!(!rows.is_empty() && rows.len() <= 60 && rows.len() % 3 == 0);
    assert!(fs::read_to_string(c.path("means.toml")).unwrap().contains("[meta]"));

    ok(&["report", "--scores", &c.path("scores.csv"), "--kind", "size", "--output", &c.path("by_size.csv")]);
    let agg = data_rows(Path::new(&c.path("by_size.csv")));
    assert_eq!(agg.len(), 9);
}

#[test]
fn stats_over_a_series() {
    let c = Clip::new();
    c.ingest();
    ok(&[
        "ioc",
        "--fixations",
        &c.path("fix.csv"),
        "--meta",
        &c.path("meta.toml"),
        "--window",
        "5",
        "--sigma-px",
        "3",
        "--output",
        &c.path("ioc.csv"),
    ]);
    ok(&[
        "stats",
        "--ioc",
        &c.path("ioc.csv"),
        "--annotations",
        &c.path("ann.toml"),
        "--kind",
        "size",
        "--output",
        &c.path("anova.csv"),
        "--pairwise",
        &c.path("pairs.csv"),
    ]);
    let rows = data_rows(Path::new(&c.path("anova.csv")));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("size,"));
    assert_eq!(data_rows(Path::new(&c.path("pairs.csv"))).len(), 3);
}

#[test]
fn config_file_is_echoed_and_overridden_by_flags() {
    let c = Clip::new();
    c.ingest();
    fs::write(c.path("run.toml"), "window = 5\nsigma_px = 3.0\naucb_seed = 99\n").unwrap();
    let args = |seed: &str, out: &str| {
        vec![
            "bench".to_string(),
            "--config".into(),
            c.path("run.toml"),
            "--fixations".into(),
            c.path("fix.csv"),
            "--meta".into(),
            c.path("meta.toml"),
            "--center-prior".into(),
            "--metrics".into(),
            "AUC_B".into(),
            "--aucb-seed".into(),
            seed.into(),
            "--output".into(),
            c.path(out),
        ]
    };
    let run = |a: Vec<String>| ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    run(args("5", "a.csv"));
    run(args("5", "b.csv"));
    run(args("6", "c.csv"));
    let a = fs::read_to_string(c.path("a.csv")).unwrap();
    assert!(a.contains("# aucb_seed=5") && a.contains("# window=5") && a.contains("# config_hash="));
    assert_eq!(a, fs::read_to_string(c.path("b.csv")).unwrap());
    assert_ne!(data_rows(Path::new(&c.path("a.csv"))), data_rows(Path::new(&c.path("c.csv"))));
}

#[test]
fn full_report_over_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(dir.path(), &DatasetFixture::default()).unwrap();
    let out = dir.path().join("out");
    let res = ok(&["report", "--dataset", p(&manifest), "--output-dir", p(&out), "--sigma-px", "3", "--window", "5"]);
    let listed = String::from_utf8_lossy(&res.stdout);
    for name in ["ioc_n5.csv", "anova.csv", "cut_drop.csv", "average_map.f32", "scores_toy.csv", "scores_center_prior.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
        assert!(listed.contains(name));
    }
}
