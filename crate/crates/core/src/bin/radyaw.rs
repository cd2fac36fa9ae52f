//! Command-line front end: rasterize clouds, estimate headings, run the
//! synthetic toycase, evaluate pair manifests and time the pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use radyaw::bench::bench;
use radyaw::eval::{evaluate_pairs, load_mask, EvalConfig, PairManifest};
use radyaw::pipeline::Pipeline;
use radyaw::toycase::{run_toycase, synthetic_scene, SceneConfig, ToycaseGrid};
use radyaw::{
    load_pointcloud, BevImage, CloudFormat, Error, GridSpec, GroundSlab, Normalization, PipelineConfig, RadonSpec,
    Real, Result,
};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "radyaw", version, about = "Global heading estimation between gravity-aligned point clouds")]
struct Cli {
    #[command(flatten)]
    opts: CommonOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// BEV width and height in pixels.
    #[arg(long, global = true, default_value_t = 400)]
    grid_size: usize,

    /// Meters per BEV pixel.
    #[arg(long, global = true, default_value_t = 0.5)]
    resolution_m: f64,

    /// Number of projection angles over the full turn.
    #[arg(long, global = true, default_value_t = 360)]
    n_angles: usize,

    /// Points at or below this height are treated as ground.
    #[arg(long, global = true, default_value_t = radyaw::cloud::DEFAULT_Z_MIN, allow_hyphen_values = true)]
    z_min: f64,

    /// Points at or above this height are dropped.
    #[arg(long, global = true, default_value_t = radyaw::cloud::DEFAULT_Z_MAX, allow_hyphen_values = true)]
    z_max: f64,

    /// Report the correlation peak bin without sub-bin refinement.
    #[arg(long, global = true)]
    no_refine: bool,

    /// Scale descriptors to unit Frobenius norm before correlating.
    #[arg(long, global = true)]
    normalize_rows: bool,

    /// Correlate raw sinogram rows instead of their magnitude spectra.
    #[arg(long, global = true)]
    ablation_raw_sinogram: bool,

    /// Seed of the synthetic scene used by `toycase` and `bench`.
    #[arg(long, global = true, default_value_t = SceneConfig::default().seed)]
    seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Floating-point precision of the numeric core.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F32)]
    precision: Precision,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a point cloud into a PGM occupancy image.
    Bev {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Estimate the heading of REFERENCE relative to QUERY and print JSON.
    Estimate {
        /// Query cloud (.bin, .csv) or BEV (.pgm).
        query: PathBuf,
        /// Reference cloud (.bin, .csv) or BEV (.pgm).
        reference: PathBuf,
        /// NPY float32 [S, S] weights applied to the query BEV.
        #[arg(long)]
        mask_q: Option<PathBuf>,
        /// NPY float32 [S, S] weights applied to the reference BEV.
        #[arg(long)]
        mask_p: Option<PathBuf>,
        /// Writes the correlation scores as NPY float32 [N_theta].
        #[arg(long)]
        scores_out: Option<PathBuf>,
        /// Writes sinograms (NPY and PGM) and descriptors (NPY) of both inputs here.
        #[arg(long)]
        export_dir: Option<PathBuf>,
    },
    /// Rotate and translate a synthetic scene over a grid and score every estimate.
    Toycase {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Spacing of the rotation angles.
        #[arg(long, default_value_t = 15.0)]
        angle_step_deg: f64,
    },
    /// Evaluate every pair of a manifest CSV.
    Eval {
        manifest: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Pairs whose ground-truth translation exceeds this are reported as failures.
        #[arg(long, default_value_t = EvalConfig::default().retrieval_radius_m)]
        retrieval_radius_m: f64,
    },
    /// Time the pipeline stages on a synthetic pair.
    Bench {
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 20)]
        warmup: usize,
    },
}

#[derive(Serialize)]
struct EstimateJson {
    angle_deg: f64,
    confidence: Option<f64>,
    ambiguity_pair: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    scores_path: Option<String>,
}

#[derive(Serialize)]
struct ToycaseSummary {
    cells: usize,
    within_1deg: usize,
    max_error_deg: f64,
    median_error_deg: f64,
    runtime_s: f64,
    csv_path: String,
    heatmap_path: String,
}

impl CommonOpts {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let grid = GridSpec::new(self.grid_size, self.resolution_m)?;
        let mut config = PipelineConfig::with_grid(grid);
        config.slab = GroundSlab::new(self.z_min, self.z_max)?;
        config.estimator.radon = RadonSpec::new(self.n_angles, self.grid_size, RadonSpec::for_grid(self.grid_size).sample_step_px())?;
        config.estimator.refine = !self.no_refine;
        config.estimator.ablation_raw_sinogram = self.ablation_raw_sinogram;
        if self.normalize_rows {
            config.estimator.descriptor.normalization = Normalization::L2;
        }
        Ok(config)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<S: Serialize>(value: &S) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn load_bev<T: Real>(path: &Path, pipeline: &Pipeline<T>) -> Result<BevImage> {
    let grid = pipeline.config().grid;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        let image = BevImage::read_pgm(path, grid.meters_per_px(), grid.center())?;
        if image.size() != grid.size_px() {
            return Err(Error::ShapeMismatch(format!(
                "{} is {1}x{1} but --grid-size is {2}",
                path.display(),
                image.size(),
                grid.size_px()
            )));
        }
        Ok(image)
    } else {
        Ok(pipeline.bev(&load_pointcloud(path, CloudFormat::from_path(path))?))
    }
}

fn run<T: Real>(opts: &CommonOpts, command: &Command) -> Result<()> {
    let pipeline = Pipeline::<T>::new(opts.pipeline_config()?)?;
    let size = pipeline.config().grid.size_px();
    match command {
        Command::Bev { input, output } => {
            let bev = pipeline.bev(&load_pointcloud(input, CloudFormat::from_path(input))?);
            bev.write_pgm(output)?;
            println!("{}", to_json(&serde_json::json!({ "occupied": bev.count(), "path": output.display().to_string() })));
        }
        Command::Estimate {
            query,
            reference,
            mask_q,
            mask_p,
            scores_out,
            export_dir,
        } => {
            let bq = load_bev(query, &pipeline)?;
            let bp = load_bev(reference, &pipeline)?;
            let weigh = |image: &BevImage, mask: &Option<PathBuf>| match mask {
                Some(path) => image.masked(&load_mask::<T>(path, size)?),
                None => Ok(image.to_raster()),
            };
            let (rq, rp) = (weigh(&bq, mask_q)?, weigh(&bp, mask_p)?);
            let estimator = pipeline.estimator();
            let estimate = estimator.estimate_rasters(&rq, &rp)?;
            if let Some(dir) = export_dir {
                create_dir(dir)?;
                for (tag, raster) in [("q", &rq), ("p", &rp)] {
                    let features = estimator.features(raster)?;
                    features.sinogram.write_npy(dir.join(format!("sinogram_{tag}.npy")))?;
                    features.sinogram.write_pgm(dir.join(format!("sinogram_{tag}.pgm")))?;
                    features.descriptor.write_npy(dir.join(format!("descriptor_{tag}.npy")))?;
                }
            }
            if let Some(path) = scores_out {
                let scores: Vec<f32> = estimate.correlation.scores.iter().map(|s| s.to_f64_lossy() as f32).collect();
                radyaw::npy::write_npy_f32(path, &[scores.len()], &scores)?;
            }
            let json = EstimateJson {
                angle_deg: estimate.angle_deg,
                confidence: Some(estimate.confidence).filter(|c| c.is_finite()),
                ambiguity_pair: estimate.correlation.ambiguity_pair,
                scores_path: scores_out.as_ref().map(|p| p.display().to_string()),
            };
            println!("{}", to_json(&json));
        }
        Command::Toycase { out_dir, angle_step_deg } => {
            if !(*angle_step_deg > 0.0 && *angle_step_deg <= 360.0) {
                return Err(Error::InvalidArgument(format!("angle step {angle_step_deg} must lie in (0, 360]")));
            }
            let standard = ToycaseGrid::standard();
            let angles: Vec<f64> = (0..)
                .map(|k| k as f64 * angle_step_deg)
                .take_while(|&a| a < 360.0 - 1e-9)
                .collect();
            let grid = ToycaseGrid::new(angles, standard.translations_m)?;
            let scene = synthetic_scene(&SceneConfig {
                seed: opts.seed,
                ..SceneConfig::default()
            });
            let start = Instant::now();
            let result = run_toycase(&scene, &grid, &pipeline)?;
            let runtime_s = start.elapsed().as_secs_f64();
            create_dir(out_dir)?;
            let csv_path = out_dir.join("toycase.csv");
            let heatmap_path = out_dir.join("toycase_heatmap.pgm");
            write_text(&csv_path, &result.to_csv())?;
            result.write_heatmap(&heatmap_path, 5.0)?;
            let errors: Vec<f64> = result.all_errors().collect();
            let summary = ToycaseSummary {
                cells: errors.len(),
                within_1deg: errors.iter().filter(|&&e| e <= 1.0).count(),
                max_error_deg: result.max_error(),
                median_error_deg: radyaw::stats::median(&errors),
                runtime_s,
                csv_path: csv_path.display().to_string(),
                heatmap_path: heatmap_path.display().to_string(),
            };
            println!("{}", to_json(&summary));
        }
        Command::Eval {
            manifest,
            out_dir,
            retrieval_radius_m,
        } => {
            let pairs = PairManifest::load(manifest)?;
            let config = EvalConfig {
                retrieval_radius_m: *retrieval_radius_m,
            };
            let report = evaluate_pairs(&pairs, &pipeline, &config)?;
            create_dir(out_dir)?;
            write_text(&out_dir.join("pairs.csv"), &report.to_csv(&pairs))?;
            let stats = serde_json::json!({ "stats": report.stats, "n_failed": report.n_failed });
            write_text(&out_dir.join("stats.json"), &to_json(&stats))?;
            println!("{}", to_json(&stats));
        }
        Command::Bench { iters, warmup } => {
            let scene = SceneConfig {
                seed: opts.seed,
                ..SceneConfig::default()
            };
            print!("{}", bench(&pipeline, &scene, *iters, *warmup)?.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.opts.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("radyaw: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.opts.precision {
        Precision::F32 => run::<f32>(&cli.opts, &cli.command),
        Precision::F64 => run::<f64>(&cli.opts, &cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("radyaw: {e}");
            ExitCode::from(if e.is_degenerate_scene() { 3 } else { 2 })
        }
    }
}
