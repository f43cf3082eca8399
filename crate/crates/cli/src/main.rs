use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bulkgrow::config::{Config, GeometryConfig, GeometryKind, OneOrMany};
use bulkgrow::coupled::{approximate_geometry, SimState};
use bulkgrow::experiments::{
    run_converge, run_regularization, run_simulate, run_stability, write_converge, write_regularization, write_stability,
};
use bulkgrow::mesh::{load_mesh, save_mesh};
use bulkgrow::output::write_vtk;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Evolving bulk-surface finite element simulations of a free-boundary
/// tumour growth model.
#[derive(Parser)]
#[command(name = "bulkgrow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled stepper and write snapshots and diagnostics.
    Simulate(RunArgs),
    /// Run an h x tau grid against the radial exact solution.
    Converge(RunArgs),
    /// Sweep discrete stability ratios over mesh refinements.
    Stability(RunArgs),
    /// Compare runs over a set of regularization parameters.
    Regularization(RunArgs),
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    config: PathBuf,
    /// Output directory; overrides `run.outputs`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a mesh of an analytic shape and save it.
    Gen(GenArgs),
    /// Print statistics of a saved mesh as JSON.
    Info { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Disk,
    Ball,
    Ellipsoid,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Shape,
    /// One radius for disks and balls, three for ellipsoids.
    #[arg(long, num_args = 1..=3, value_delimiter = ',', default_value = "1")]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    h: f64,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Random node displacement relative to the shortest incident edge.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mesh file to write.
    #[arg(short, long)]
    out: PathBuf,
    /// Also write VTK files with this stem next to the mesh.
    #[arg(long)]
    vtk: Option<String>,
}

/// Marks failures to read or validate the configuration.
#[derive(Debug)]
struct BadConfig(PathBuf);

impl std::fmt::Display for BadConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config {}", self.0.display())
    }
}

fn load_config(path: &Path) -> Result<Config> {
    Config::load(path).map_err(|e| anyhow::Error::new(e).context(BadConfig(path.to_path_buf())))
}

fn out_dir(args: &RunArgs, config: &Config) -> PathBuf {
    args.out.clone().unwrap_or_else(|| config.run.outputs.clone())
}

fn simulate(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let out = out_dir(args, &config);
    let result = run_simulate(&config, &out).with_context(|| format!("simulation writing to {}", out.display()))?;
    println!("{} steps, {} files in {}", result.steps, result.outputs.len(), out.display());
    Ok(())
}

fn converge(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let out = out_dir(args, &config);
    let result = run_converge(&config)?;
    write_converge(&config, &result, &out)?;
    print!("{}", result.eoc.to_csv());
    Ok(())
}

fn stability(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let out = out_dir(args, &config);
    let tables = run_stability(&config)?;
    write_stability(&config, &tables, &out)?;
    for (mode, table) in &tables {
        println!("{mode:?}");
        print!("{}", table.to_csv());
    }
    Ok(())
}

fn regularization(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let out = out_dir(args, &config);
    let result = run_regularization(&config)?;
    write_regularization(&config, &result, &out)?;
    print!("{}", result.table.to_csv());
    Ok(())
}

fn mesh_gen(args: &GenArgs) -> Result<()> {
    let geometry = GeometryConfig {
        kind: match args.kind {
            Shape::Disk => GeometryKind::Disk,
            Shape::Ball => GeometryKind::Ball,
            Shape::Ellipsoid => GeometryKind::Ellipsoid,
        },
        radii: args.radii.clone(),
        h: OneOrMany::One(args.h),
        jitter: args.jitter,
        path: None,
    };
    let mesh = geometry.mesh(args.h, args.degree, args.seed)?;
    save_mesh(&mesh, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(stem) = &args.vtk {
        let (normals, curvature) = approximate_geometry(&mesh)?;
        let (n, nb) = (mesh.n_nodes(), mesh.n_boundary());
        let state = SimState {
            time: 0.0,
            positions: mesh.positions().to_vec(),
            pressure: vec![0.0; n],
            normals,
            curvature,
            velocity: vec![[0.0; 3]; n],
            normal_speed: vec![0.0; nb],
        };
        let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        write_vtk(&state, &mesh, dir, stem)?;
    }
    println!("{}", serde_json::to_string_pretty(&mesh.stats())?);
    Ok(())
}

fn mesh_info(path: &Path) -> Result<()> {
    let mesh = load_mesh(path).with_context(|| format!("reading {}", path.display()))?;
    println!("{}", serde_json::to_string_pretty(&mesh.stats())?);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<BadConfig>().is_some() {
        return EXIT_CONFIG;
    }
    match err.downcast_ref::<bulkgrow::Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        Some(bulkgrow::Error::Io(_)) => EXIT_FAILURE,
        Some(_) => EXIT_CONFIG,
        None => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Converge(a) => converge(a),
        Command::Stability(a) => stability(a),
        Command::Regularization(a) => regularization(a),
        Command::Mesh(MeshCommand::Gen(a)) => mesh_gen(a),
        Command::Mesh(MeshCommand::Info { path }) => mesh_info(path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
