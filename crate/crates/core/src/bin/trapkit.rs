use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use trapkit::cocoeval::{evaluate, load_detections, save_detections, write_pr_curves_svg, write_report_csv, EvalConfig, IouKind};
use trapkit::fusenet::{load_model, predict_instances, save_model, train, FuseNet, ModelConfig};
use trapkit::imaging::{read_pgm_intensity, write_pgm_depth};
use trapkit::motion::{DiffConfig, GmmConfig, MotionDetector, RoiMask};
use trapkit::solar::{mode_at, solar_events, GeoLocation};
use trapkit::stereo::{block_match, disparity_to_depth, RectifiedPair, StereoConfig};
use trapkit::synthgen::{read_dataset, render_split, write_dataset, write_manifest, AnnotationFile, DatasetManifest, Range, SceneRanges};
use trapkit::trapd::{run_pipeline, DirectorySource, TrapConfig};

#[derive(Parser)]
#[command(name = "trapkit", version, about = "RGB-D camera-trap toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Box,
    Mask,
}

#[derive(Subcommand)]
enum Command {
    /// Sunrise, sunset and trap mode for a location
    Solar {
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long)]
        date: NaiveDate,
        /// RFC 3339 instant to classify as day or night
        #[arg(long)]
        at: Option<DateTime<Utc>>,
    },
    /// Runs the image motion detector over a frame directory (index.csv)
    Motion {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        roi: Option<PathBuf>,
    },
    /// Block matching on a rectified PGM pair
    Stereo {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        baseline: f64,
        #[arg(long)]
        focal: f64,
        #[arg(long, default_value_t = 64)]
        max_disparity: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Renders a train/test dataset
    Synthgen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        train: usize,
        #[arg(long, default_value_t = 100)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        camouflage: f64,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 48)]
        height: usize,
    },
    /// Trains a segmentation model on the train split
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        depth: Switch,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predicts instances for one split
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// COCO-style AP of predictions against annotations
    Eval {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value = "mask")]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the trap pipeline from a JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> trapkit::Result<()> {
    match cli.command {
        Command::Solar { lat, lon, date, at } => {
            let loc = GeoLocation::new(lat, lon)?;
            println!("{}", serde_json::to_string_pretty(&solar_events(&loc, date))?);
            if let Some(t) = at {
                println!("{t}: {:?}", mode_at(&loc, t));
            }
        }
        Command::Motion { frames, roi } => {
            let mut detector: Option<(MotionDetector, RoiMask)> = None;
            for frame in DirectorySource::open(&frames)? {
                let frame = frame?;
                let (w, h) = frame.intensity.dims();
                if detector.is_none() {
                    let mask = match &roi {
                        Some(p) => RoiMask::new(trapkit::imaging::BinaryMask::new(
                            w,
                            h,
                            read_pgm_intensity(p)?.pixels().iter().map(|&v| v > 0).collect(),
                        )?),
                        None => RoiMask::full(w, h),
                    };
                    detector = Some((MotionDetector::new(w, h, DiffConfig::default(), GmmConfig::default())?, mask));
                }
                let (det, mask) = detector.as_mut().unwrap();
                if let Some(event) = det.step(&frame.intensity, frame.timestamp, mask)? {
                    println!("{}", serde_json::to_string(&event)?);
                }
            }
        }
        Command::Stereo {
            left,
            right,
            baseline,
            focal,
            max_disparity,
            out,
        } => {
            let pair = RectifiedPair::new(read_pgm_intensity(&left)?, read_pgm_intensity(&right)?, baseline, focal)?;
            let cfg = StereoConfig {
                max_disparity,
                ..StereoConfig::default()
            };
            let disparity = block_match(&pair, &cfg)?;
            write_pgm_depth(&out, &disparity_to_depth(&disparity, baseline, focal))?;
            let (w, h) = disparity.dims();
            println!("{} of {} pixels valid", disparity.valid_count(), w * h);
        }
        Command::Synthgen {
            out,
            train,
            test,
            seed,
            camouflage,
            width,
            height,
        } => {
            let ranges = SceneRanges {
                image: (width, height),
                camouflage: Range::point(camouflage),
                min_gap_px: Some(2),
                ..SceneRanges::default()
            };
            let train_split = write_dataset(&render_split(seed, train, &ranges)?, "train", &out)?;
            let test_split = write_dataset(&render_split(seed + 1_000_000, test, &ranges)?, "test", &out)?;
            let manifest = DatasetManifest {
                splits: vec![train_split, test_split],
            };
            write_manifest(&out, &manifest)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Train {
            dataset,
            depth,
            seed,
            epochs,
            lr,
            out,
        } => {
            let defaults = ModelConfig::default();
            let mut model = FuseNet::new(ModelConfig {
                seed,
                depth_enabled: matches!(depth, Switch::On),
                epochs: epochs.unwrap_or(defaults.epochs),
                learning_rate: lr.unwrap_or(defaults.learning_rate),
                ..defaults
            })?;
            let samples = read_dataset(&dataset, "train")?;
            let report = train(&mut model, &samples)?;
            save_model(&model, &out)?;
            println!("epoch losses: {:?}", report.epoch_losses);
        }
        Command::Infer {
            model,
            dataset,
            split,
            out,
        } => {
            let model = load_model(&model)?;
            let mut preds = Vec::new();
            for s in read_dataset(&dataset, &split)? {
                for mut d in predict_instances(&model, &s.intensity, Some(&s.depth))? {
                    d.image_id = s.image_id;
                    preds.push(d);
                }
            }
            save_detections(&out, &preds)?;
            println!("{} detections", preds.len());
        }
        Command::Eval { preds, gt, kind, out } => {
            let kind = match kind {
                Kind::Box => IouKind::Box,
                Kind::Mask => IouKind::Mask,
            };
            let gts = AnnotationFile::load(&gt)?.instances()?;
            let report = evaluate(&load_detections(&preds)?, &gts, &EvalConfig::with_kind(kind))?;
            write_report_csv(&report, &out)?;
            let dir = out.parent().map(|p| p.to_path_buf()).unwrap_or_default();
            write_pr_curves_svg(&report, &dir)?;
            println!(
                "{} AP {:.4}  AP50 {:.4}  AP75 {:.4}",
                kind.name(),
                report.ap_mean,
                report.ap50,
                report.ap75
            );
        }
        Command::Run { config } => {
            let cfg = TrapConfig::load(&config)?;
            let summary = run_pipeline(&cfg)?;
            println!(
                "{} frames ({} day, {} night), {} events, {} sequences",
                summary.frames,
                summary.daytime_frames,
                summary.nighttime_frames,
                summary.events.len(),
                summary.sequences.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAPKIT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
