//! Command line front end: one subcommand per pipeline stage.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cinegaze::annotations::{cuts_of, shot_stats, LabelKind};
use cinegaze::bench::{
    aggregate_by_annotation, benchmark_model, bias_report, emit_report, BenchConfig, CenterPriorSource,
    DirectorySource, PredictionSource, Report, ScoreTable,
};
use cinegaze::config::RunConfig;
use cinegaze::ingest::{clean_and_bin, filter_observers, parse_gaze_samples, ColumnMapping};
use cinegaze::ioc::{cut_drop_analysis, hull_area_series, IocSeries};
use cinegaze::mapio::{frame_file_name, save_map, MapFormat};
use cinegaze::metrics::Metric;
use cinegaze::model::{ClipMeta, Fps};
use cinegaze::pipeline::{
    dataset_average_map, ioc_all, ioc_groups, ioc_vs_shot_length, label_tests, load_clips, read_annotation,
    read_fixations, run_full, skip_lead_in, Dataset, LoadedClip,
};
use cinegaze::saliency::{blur_fixations, center_prior, make_kernel};
use cinegaze::{Error, Result, SaliencyMap};

#[derive(Parser, Debug)]
#[command(name = "cinegaze", version, about = "Eye-tracking analysis for cinematic video")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

/// Parameters shared by every stage; flags override the config file.
#[derive(Args, Debug)]
struct RunArgs {
    /// Run configuration (TOML); echoed into every report header
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gaussian kernel sigma in frame pixels
    #[arg(long, global = true)]
    sigma_px: Option<f64>,
    /// IOC window length in frames
    #[arg(long, global = true, value_parser = parse_window)]
    window: Option<usize>,
    /// Frames skipped at the start of each clip for the average map
    #[arg(long, global = true)]
    skip_first: Option<usize>,
    /// Seed of the AUC-Borji negative sampler
    #[arg(long, global = true)]
    aucb_seed: Option<u64>,
}

fn parse_window(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("window must be a positive frame count, got {s:?}")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean raw gaze samples into per-frame fixation points
    Ingest {
        /// Raw gaze export (delimited text)
        #[arg(long)]
        input: PathBuf,
        /// Clip metadata (TOML)
        #[arg(long)]
        meta: PathBuf,
        /// Column mapping for the gaze export (TOML)
        #[arg(long)]
        columns: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Rejection counters (TOML)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write ground-truth saliency maps, or the dataset average map
    Saliency {
        #[command(flatten)]
        clip: ClipInput,
        /// Directory for per-frame maps of one clip
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::F32)]
        format: FormatArg,
        /// Average map over the input clips, on the reference grid
        #[arg(long)]
        average: Option<PathBuf>,
        /// Center-bias report for the average map
        #[arg(long)]
        bias: Option<PathBuf>,
    },
    /// Leave-one-out inter-observer congruency
    Ioc {
        #[command(flatten)]
        clip: ClipInput,
        #[arg(long)]
        output: PathBuf,
        /// Per-frame convex hull areas
        #[arg(long)]
        hull: Option<PathBuf>,
        /// Per-cut congruency drop (needs annotations)
        #[arg(long)]
        cut_drop: Option<PathBuf>,
    },
    /// Score a saliency model against the ground truth
    Bench {
        #[command(flatten)]
        clip: ClipInput,
        /// Prediction maps: zero-padded frame files, or one subdirectory
        /// per clip with --dataset
        #[arg(long, conflicts_with = "center_prior")]
        predictions: Option<PathBuf>,
        /// Use the centered Gaussian baseline as the model
        #[arg(long)]
        center_prior: bool,
        /// Comma-separated metrics (default: all)
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<Metric>,
        /// Only evaluate frames in [start, end)
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        frames: Option<Vec<u32>>,
        #[arg(long)]
        output: PathBuf,
        /// Per-clip and dataset means
        #[arg(long)]
        means: Option<PathBuf>,
    },
    /// ANOVA, pairwise Welch tests and shot-length correlation on IOC
    Stats {
        /// IOC series file
        #[arg(long)]
        ioc: PathBuf,
        /// Annotation documents of the clips in the series
        #[arg(long, num_args = 1.., required = true)]
        annotations: Vec<PathBuf>,
        /// Partition kind; all kinds when omitted
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Frame rate for shot lengths, e.g. 24 or 24000/1001
        #[arg(long, default_value = "24")]
        fps: Fps,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        pairwise: Option<PathBuf>,
        /// IOC versus average shot length
        #[arg(long)]
        correlation: Option<PathBuf>,
        /// Clips left out of the correlation
        #[arg(long)]
        exclude: Vec<String>,
    },
    /// Full report set for a dataset, or label aggregates of a score table
    Report {
        #[arg(long, conflicts_with = "scores", requires = "output_dir")]
        dataset: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Score table written by `bench`
        #[arg(long, requires = "output")]
        scores: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = KindArg::Motion)]
        kind: KindArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Either one clip (fixations + metadata) or a dataset manifest.
#[derive(Args, Debug)]
struct ClipInput {
    #[arg(long, conflicts_with_all = ["fixations", "meta"])]
    dataset: Option<PathBuf>,
    /// Fixation file written by `ingest`
    #[arg(long, requires = "meta")]
    fixations: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Pgm,
    F32,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KindArg {
    Motion,
    Angle,
    Size,
}

impl From<KindArg> for LabelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Motion => LabelKind::Motion,
            KindArg::Angle => LabelKind::Angle,
            KindArg::Size => LabelKind::Size,
        }
    }
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_toml(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.sigma_px {
        cfg.sigma_px = s;
    }
    if let Some(w) = args.window {
        cfg.window = w;
    }
    if let Some(s) = args.skip_first {
        cfg.skip_first = s;
    }
    if let Some(s) = args.aucb_seed {
        cfg.aucb_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read_meta(path: &Path) -> Result<ClipMeta> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let meta: ClipMeta =
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    meta.validate()?;
    Ok(meta)
}

impl ClipInput {
    fn load(&self) -> Result<(Option<Dataset>, Vec<LoadedClip>)> {
        if let Some(d) = &self.dataset {
            let ds = Dataset::load(d)?;
            let clips = load_clips(&ds)?;
            return Ok((Some(ds), clips));
        }
        let (Some(fix), Some(meta)) = (&self.fixations, &self.meta) else {
            return Err(Error::Input("give --dataset, or --fixations with --meta".into()));
        };
        let meta = read_meta(meta)?;
        let fixations = read_fixations(fix, &meta)?;
        let annotation = self.annotations.as_deref().map(read_annotation).transpose()?;
        Ok((
            None,
            vec![LoadedClip {
                meta,
                fixations,
                annotation,
            }],
        ))
    }
}

fn series_report(header: &[(String, String)], series: &[IocSeries]) -> Report {
    let mut r = Report::new(header.to_vec(), &["clip_id", "window_start", "n", "score"]);
    for s in series {
        for (t, v) in &s.values {
            r.push(vec![
                s.clip_id.clone(),
                t.to_string(),
                s.window.to_string(),
                v.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }
    r
}

fn run(cli: Cli) -> Result<()> {
    let cfg = run_config(&cli.run)?;
    let header = cfg.header();
    match cli.command {
        Command::Ingest {
            input,
            meta,
            columns,
            output,
            report,
        } => {
            let meta = read_meta(&meta)?;
            let mapping = match &columns {
                Some(p) => ColumnMapping::from_toml(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
                None => ColumnMapping::default(),
            };
            let file = File::open(&input).map_err(|e| io_err(&input, e))?;
            let (records, mut rep) = parse_gaze_samples(BufReader::new(file), &mapping)?;
            let records: Vec<_> = records.into_iter().filter(|r| r.clip_id == meta.clip_id).collect();
            if records.is_empty() {
                return Err(Error::Input(format!("no samples for clip {}", meta.clip_id)));
            }
            let (kept, rejected) = filter_observers(records, cfg.min_valid_rate);
            rep.rejected_observers.extend(rejected.iter().map(|r| r.observer_id.clone()));
            let cleaned = clean_and_bin(&kept, &meta, &mut rep)?;
            let out = File::create(&output).map_err(|e| io_err(&output, e))?;
            cleaned.write_csv(BufWriter::new(out))?;
            let text = rep.to_toml();
            match report {
                Some(p) => fs::write(&p, text).map_err(|e| io_err(&p, e))?,
                None => eprint!("{text}"),
            }
        }
        Command::Saliency {
            clip,
            output_dir,
            format,
            average,
            bias,
        } => {
            let (_, clips) = clip.load()?;
            let kernel = make_kernel::<f64>(cfg.sigma_px, cfg.truncation)?;
            if let Some(dir) = output_dir {
                let [c] = clips.as_slice() else {
                    return Err(Error::Input("--output-dir writes maps of a single clip".into()));
                };
                fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                let fmt = match format {
                    FormatArg::Pgm => MapFormat::Pgm,
                    FormatArg::F32 => MapFormat::Raw,
                };
                for f in 0..c.fixations.frame_count {
                    let map: SaliencyMap = blur_fixations(&c.fixations.frame_map(f)?, &kernel);
                    save_map(&map, &dir.join(frame_file_name(f, fmt)))?;
                }
            }
            if average.is_some() || bias.is_some() {
                let grid = (cfg.reference_width, cfg.reference_height);
                let (avg, frames) = dataset_average_map(&clips, &kernel, grid, skip_lead_in(cfg.skip_first))?;
                if let Some(p) = &average {
                    save_map(&avg, p)?;
                }
                if let Some(p) = &bias {
                    let prior = center_prior(grid.0, grid.1, cfg.prior_sigma_fraction)?;
                    let b = bias_report(&avg, &prior)?;
                    let mut r = Report::new(
                        header,
                        &["subset", "frames", "cc_with_prior", "peak_offset_x", "peak_offset_y"],
                    );
                    r.push(vec![
                        "ALL".into(),
                        frames.to_string(),
                        format!("{:.6}", b.cc_with_prior),
                        b.peak_offset_x.to_string(),
                        b.peak_offset_y.to_string(),
                    ]);
                    emit_report(&r, p, None)?;
                }
            }
        }
        Command::Ioc {
            clip,
            output,
            hull,
            cut_drop,
        } => {
            let (_, clips) = clip.load()?;
            let series = ioc_all(&clips, &cfg.ioc(cfg.window))?;
            emit_report(&series_report(&header, &series), &output, None)?;
            if let Some(p) = hull {
                let mut r = Report::new(header.clone(), &["clip_id", "frame_index", "hull_area_px2"]);
                for c in &clips {
                    for (f, a) in hull_area_series(&c.fixations).iter().enumerate() {
                        r.push(vec![c.meta.clip_id.clone(), f.to_string(), a.to_string()]);
                    }
                }
                emit_report(&r, &p, None)?;
            }
            if let Some(p) = cut_drop {
                let mut r = Report::new(
                    header.clone(),
                    &["clip_id", "cut", "pre_mean", "post_mean", "drop", "overlaps"],
                );
                let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
                for (c, s) in clips.iter().zip(&series) {
                    let Some(a) = &c.annotation else { continue };
                    for d in cut_drop_analysis(s, &cuts_of(a), cfg.cut_pre_frames, cfg.cut_post_frames) {
                        r.push(vec![
                            c.meta.clip_id.clone(),
                            d.cut.to_string(),
                            opt(d.pre_mean),
                            opt(d.post_mean),
                            opt(d.drop),
                            d.overlaps.to_string(),
                        ]);
                    }
                }
                emit_report(&r, &p, None)?;
            }
        }
        Command::Bench {
            clip,
            predictions,
            center_prior: use_prior,
            metrics,
            frames,
            output,
            means,
        } => {
            let (ds, clips) = clip.load()?;
            if predictions.is_none() && !use_prior {
                return Err(Error::Input("give --predictions or --center-prior".into()));
            }
            let bcfg = BenchConfig {
                kernel: make_kernel(cfg.sigma_px, cfg.truncation)?,
                metrics: if metrics.is_empty() { Metric::ALL.to_vec() } else { metrics },
                aucb: cfg.aucb(),
                kld_epsilon: cfg.kld_epsilon,
                frames: frames.map(|f| (f[0]..f[1]).collect()),
            };
            let mut tables = Vec::new();
            for c in &clips {
                let source: Box<dyn PredictionSource> = match &predictions {
                    _ if use_prior => Box::new(CenterPriorSource::new(
                        c.fixations.width,
                        c.fixations.height,
                        cfg.prior_sigma_fraction,
                    )?),
                    Some(dir) if ds.is_some() => Box::new(DirectorySource {
                        dir: dir.join(&c.meta.clip_id),
                    }),
                    Some(dir) => Box::new(DirectorySource { dir: dir.clone() }),
                    None => unreachable!(),
                };
                tables.push(benchmark_model(&c.fixations, c.annotation.as_ref(), source.as_ref(), &bcfg)?);
            }
            let table = ScoreTable::merge(tables)?;
            for e in &table.errors {
                eprintln!("frame {} of {}: {}", e.frame_index, e.clip_id, e.message);
            }
            if !table.missing_frames.is_empty() {
                eprintln!("{} frames without a prediction were skipped", table.missing_frames.len());
            }
            emit_report(&Report::from_scores(header.clone(), &table), &output, None)?;
            if let Some(p) = means {
                emit_report(&Report::from_means(header, &table), &p, None)?;
            }
        }
        Command::Stats {
            ioc,
            annotations,
            kind,
            fps,
            output,
            pairwise,
            correlation,
            exclude,
        } => {
            let file = File::open(&ioc).map_err(|e| io_err(&ioc, e))?;
            let series = IocSeries::read_csv(BufReader::new(file))?;
            let anns = annotations
                .iter()
                .map(|p| read_annotation(p))
                .collect::<Result<Vec<_>>>()?;
            let pairs: Vec<_> = series
                .iter()
                .filter_map(|s| anns.iter().find(|a| a.clip_id == s.clip_id).map(|a| (s, a)))
                .collect();
            if pairs.is_empty() {
                return Err(Error::Input("no IOC series matches an annotation clip id".into()));
            }
            let kinds: Vec<LabelKind> = match kind {
                Some(k) => vec![k.into()],
                None => vec![LabelKind::Motion, LabelKind::Angle, LabelKind::Size],
            };
            let mut anova = Report::new(header.clone(), &["kind", "f", "df_between", "df_within", "p", "groups"]);
            let mut pw = Report::new(header.clone(), &["kind", "a", "b", "n_a", "n_b", "t", "df", "p"]);
            for k in kinds {
                let tests = label_tests(k, &ioc_groups(pairs.iter().copied(), k))?;
                if let Some(a) = &tests.anova {
                    anova.push(vec![
                        k.to_string(),
                        format!("{:.6}", a.f),
                        a.df_between.to_string(),
                        a.df_within.to_string(),
                        format!("{:e}", a.p),
                        a.group_names
                            .iter()
                            .zip(&a.group_sizes)
                            .map(|(g, n)| format!("{g}:{n}"))
                            .collect::<Vec<_>>()
                            .join(" "),
                    ]);
                }
                for p in &tests.pairwise {
                    pw.push(vec![
                        k.to_string(),
                        p.a.clone(),
                        p.b.clone(),
                        p.n_a.to_string(),
                        p.n_b.to_string(),
                        format!("{:.6}", p.test.t),
                        format!("{:.6}", p.test.df),
                        format!("{:e}", p.test.p),
                    ]);
                }
            }
            emit_report(&anova, &output, None)?;
            if let Some(p) = pairwise {
                emit_report(&pw, &p, None)?;
            }
            if let Some(p) = correlation {
                let means = series
                    .iter()
                    .filter_map(|s| {
                        let v = s.present();
                        (!v.is_empty()).then(|| (s.clip_id.clone(), v.iter().sum::<f64>() / v.len() as f64))
                    })
                    .collect();
                let stats: Vec<_> = anns.iter().map(|a| shot_stats(a, fps)).collect();
                let mut excl = cfg.correlation_exclude.clone();
                excl.extend(exclude);
                let (_, corr) = ioc_vs_shot_length(&means, &stats, &excl)?;
                let mut r = Report::new(header, &["r", "p", "n"]);
                r.push(vec![format!("{:.6}", corr.r), format!("{:.6}", corr.p), corr.n.to_string()]);
                emit_report(&r, &p, None)?;
            }
        }
        Command::Report {
            dataset,
            output_dir,
            scores,
            kind,
            output,
        } => match (dataset, scores) {
            (Some(d), None) => {
                let dir = output_dir.expect("clap enforces --output-dir");
                let ds = Dataset::load(&d)?;
                let summary = run_full(&ds, &cfg, &dir)?;
                for f in &summary.files {
                    println!("{}", f.display());
                }
            }
            (None, Some(s)) => {
                let file = File::open(&s).map_err(|e| io_err(&s, e))?;
                let table = ScoreTable::read_csv(BufReader::new(file))?;
                let agg = aggregate_by_annotation(&table, kind.into());
                let out = output.expect("clap enforces --output");
                emit_report(&Report::from_aggregate(header, &agg), &out, None)?;
            }
            _ => return Err(Error::Input("give --dataset or --scores".into())),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cinegaze: {e}");
            ExitCode::FAILURE
        }
    }
}

