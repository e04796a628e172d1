//! The `relumesh` command line tool.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand};
use relumesh::mc::{marching_cubes, GridSpec};
use relumesh::mesh::{load_obj, save_obj};
use relumesh::metrics::{
    format_table, reference_from_metadata, sample_surface, soft_precision, soft_precision_polyline, soft_recall,
    triangle_quality, MetricReport, ProjectionConfig, DEFAULT_SAMPLES,
};
use relumesh::tessellate::{tessellate, Strategy};
use relumesh::{extract, Aabb, EngineConfig, Error, Network, PolyMesh, Result, TraversalStats};

#[derive(Debug, Parser)]
#[command(name = "relumesh", version, about = "Exact zero level sets of ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the exact zero level set as a polygon mesh.
    Extract(ExtractArgs),
    /// Marching Cubes baseline on a regular grid.
    Mc(McArgs),
    /// Accuracy and triangle quality of a mesh against a network.
    Metrics(MetricsArgs),
    /// Triangulate the polygon faces of a mesh.
    Tessellate(TessellateArgs),
    /// Print the network shape and parameter count.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Triangulate faces before writing; polygons are written otherwise.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Disable range-based cell pruning.
    #[arg(long)]
    no_prune: bool,
    /// Cells processed per parallel step.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    batch: u64,
    /// Write traversal statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Knots per period when replacing a positional encoding by ReLU layers.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(2..))]
    knots: u64,
    /// Override the domain box: `lo_1,..,lo_d,hi_1,..,hi_d`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    domain: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long)]
    net: PathBuf,
    /// Cubes per axis.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    res: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
enum RefSource {
    Mc(usize),
    Fixture,
}

fn parse_ref_source(s: &str) -> std::result::Result<RefSource, String> {
    if s == "fixture" {
        return Ok(RefSource::Fixture);
    }
    match s.strip_prefix("mc:").map(str::parse::<usize>) {
        Some(Ok(r)) if r >= 2 => Ok(RefSource::Mc(r)),
        _ => Err(format!("expected `fixture` or `mc:R` with R >= 2, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    /// Reference points for soft recall: `mc:R` samples a resolution-R
    /// Marching Cubes mesh, `fixture` uses the shape in the network metadata.
    #[arg(long, value_parser = parse_ref_source)]
    ref_source: Option<RefSource>,
    #[arg(long)]
    out: PathBuf,
    /// Surface samples for soft precision.
    #[arg(long, default_value_t = DEFAULT_SAMPLES, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    samples: usize,
    /// Reference points for soft recall.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    ref_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-triangle quality as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Traversal statistics of the run that produced the mesh; its total
    /// time is reported as the runtime.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Row label in the printed table.
    #[arg(long, default_value = "mesh")]
    label: String,
}

#[derive(Debug, Args)]
struct TessellateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    strategy: Strategy,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(long)]
    net: PathBuf,
}

/// Runs the tool on `args` (program name first) and returns the exit code:
/// 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Tessellate(a) => cmd_tessellate(a),
        Command::Info(a) => cmd_info(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let mut net = Network::load(&a.net)?;
    if let Some(d) = &a.domain {
        let dim = net.input_dim();
        if d.len() != 2 * dim {
            return Err(Error::InvalidArgument(format!("--domain needs {} numbers, got {}", 2 * dim, d.len())));
        }
        net.set_domain(Aabb::new(&d[..dim], &d[dim..]))?;
    }
    if net.encoding().is_some() {
        log::info!("replacing the positional encoding with {} knots per period", a.knots);
        net = net.with_pwl_surrogate(a.knots as usize)?;
    }
    let cfg = EngineConfig {
        batch_size: a.batch as usize,
        disable_pruning: a.no_prune,
        ..Default::default()
    };
    let ex = extract(&net, &cfg)?;
    let mesh = ex.weld(&cfg.tolerances);
    if mesh.is_empty() {
        log::warn!("no surface in domain");
    }
    let mesh = match a.strategy {
        Some(s) if !mesh.is_polyline() => tessellate(&mesh, s)?.to_poly(),
        _ => mesh,
    };
    save_obj(&mesh, &a.out)?;
    if let Some(path) = &a.stats {
        write_file(path, &serde_json::to_string_pretty(&ex.stats).expect("stats serialize"))?;
    }
    log::info!(
        "{} vertices, {} faces, {} cells created, {:.3}s",
        mesh.vertices.len(),
        mesh.faces.len(),
        ex.stats.cells_created,
        ex.stats.wall_time.total
    );
    Ok(())
}

fn cmd_mc(a: McArgs) -> Result<()> {
    let net = Network::load(&a.net)?;
    let mesh = marching_cubes(&net, &GridSpec::new(a.res as usize, *net.domain())?)?;
    if mesh.is_empty() {
        log::warn!("no surface in domain");
    }
    save_obj(&mesh.to_poly(), &a.out)
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let net = Network::load(&a.net)?;
    let mesh = load_obj(&a.mesh)?;
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let runtime_s = match &a.stats {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let stats: TraversalStats = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            Some(stats.wall_time.total)
        }
        None => None,
    };
    let report = if mesh.is_polyline() {
        polyline_report(&net, &mesh, &a)?
    } else {
        surface_report(&net, &mesh, &a)?
    };
    let report = MetricReport { runtime_s, ..report };
    write_file(&a.out, &report.to_json())?;
    print!("{}", format_table(&[(a.label.clone(), &report)]));
    Ok(())
}

fn polyline_report(net: &Network, mesh: &PolyMesh, a: &MetricsArgs) -> Result<MetricReport> {
    if a.ref_source.is_some() {
        log::warn!("soft recall is only defined for surfaces; skipped");
    }
    if a.csv.is_some() {
        log::warn!("triangle quality is only defined for surfaces; no CSV written");
    }
    let sp = soft_precision_polyline(net, mesh, a.samples, a.seed)?;
    Ok(MetricReport {
        soft_precision: sp,
        soft_precision_e6: sp * 1e6,
        soft_recall: None,
        soft_recall_e6: None,
        recall_dropped: 0,
        tri_quality: None,
        histograms: None,
        triangle_count: 0,
        runtime_s: None,
        n_samples: a.samples,
        seed: a.seed,
    })
}

fn surface_report(net: &Network, mesh: &PolyMesh, a: &MetricsArgs) -> Result<MetricReport> {
    let tri = tessellate(mesh, Strategy::Fan0)?;
    let t = Instant::now();
    let sp = soft_precision(net, &tri, a.samples, a.seed)?;
    log::info!("soft precision in {:.2}s", t.elapsed().as_secs_f64());
    let recall = match &a.ref_source {
        None => None,
        Some(src) => {
            let reference = match src {
                RefSource::Fixture => {
                    let meta = net
                        .metadata()
                        .ok_or_else(|| Error::InvalidArgument("network has no shape metadata".into()))?;
                    reference_from_metadata(meta, a.ref_points, a.seed)?
                }
                RefSource::Mc(r) => {
                    let mc = marching_cubes(net, &GridSpec::new(*r, *net.domain())?)?;
                    sample_surface(&mc, a.ref_points, a.seed)?
                }
            };
            Some(soft_recall(net, &tri, &reference, &ProjectionConfig::default())?)
        }
    };
    let quality = triangle_quality(&tri)?;
    if let Some(path) = &a.csv {
        write_file(path, &quality.to_csv())?;
    }
    Ok(MetricReport {
        soft_precision: sp,
        soft_precision_e6: sp * 1e6,
        soft_recall: recall.as_ref().map(|r| r.value),
        soft_recall_e6: recall.as_ref().map(|r| r.value * 1e6),
        recall_dropped: recall.as_ref().map_or(0, |r| r.dropped),
        tri_quality: Some((&quality).into()),
        histograms: Some(quality.histograms.clone()),
        triangle_count: tri.triangles.len(),
        runtime_s: None,
        n_samples: a.samples,
        seed: a.seed,
    })
}

fn cmd_tessellate(a: TessellateArgs) -> Result<()> {
    let mesh = load_obj(&a.input)?;
    save_obj(&tessellate(&mesh, a.strategy)?.to_poly(), &a.out)
}

fn cmd_info(a: InfoArgs) -> Result<()> {
    let net = Network::load(&a.net)?;
    let widths: Vec<String> = net.layers().iter().map(|l| l.rows().to_string()).collect();
    println!(
        "input_dim {}, layers [{}], params {}",
        net.input_dim(),
        widths.join("→"),
        net.param_count()
    );
    let d = net.domain();
    println!("domain {:?} to {:?}", d.lo(), d.hi());
    if let Some(enc) = net.encoding() {
        println!("positional encoding, frequencies {:?}", enc.freqs);
    }
    Ok(())
}
