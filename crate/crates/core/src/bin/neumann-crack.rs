use clap::{Args, Parser, Subcommand};
use neumann_crack::harness::{
    export_mesh, parse_epsilons, run_closeness, run_converge, run_spectrum, run_verify_lemmas, HarnessError, Overrides, StudyConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "neumann-crack", version, about = "Neumann Laplacian spectra of cracked planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated, strictly descending list of crack sizes.
    #[arg(long, global = true)]
    epsilons: Option<String>,
    /// Spectral truncation level.
    #[arg(long = "lambda-max", global = true)]
    lambda_max: Option<f64>,
    /// Number of eigenpairs requested.
    #[arg(long, global = true)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// First k eigenvalues of the uncracked and cracked problems.
    Spectrum,
    /// The ε-sweep with spectral distances, closeness constants and rates.
    Converge,
    /// Closeness reports with measured lemma constants.
    Closeness,
    /// Numerical checks of the auxiliary inequalities.
    VerifyLemmas,
    /// Writes the cracked mesh of the first ε as JSON.
    MeshExport,
}

fn config(common: &Common) -> Result<StudyConfig, HarnessError> {
    let base = match &common.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default(),
    };
    let overrides = Overrides {
        seed: common.seed,
        epsilons: common.epsilons.as_deref().map(parse_epsilons).transpose()?,
        lambda: common.lambda_max,
        k: common.k,
    };
    base.with_overrides(&overrides)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = config(&cli.common)?;
    let out = |default: &str| cli.common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match cli.command {
        Command::Spectrum => {
            let path = out("spectrum.csv");
            let rows = run_spectrum(&cfg, &path)?;
            println!("{} eigenvalue rows written to {}", rows.len(), path.display());
        }
        Command::Converge => {
            let path = out("converge.csv");
            let s = run_converge(&cfg, &path)?;
            let show = |name: &str, f: &Option<neumann_crack::spectral::RateFit>| match f {
                Some(f) => println!("{name}: exponent {:.4} (r^2 = {:.4})", f.exponent, f.r_squared),
                None => println!("{name}: no fit (fewer than three positive points)"),
            };
            show("dbar", &s.fits.dbar);
            show("delta6", &s.fits.delta6);
            show("delta7", &s.fits.delta7);
            println!("study written to {}", path.display());
        }
        Command::Closeness => {
            let path = out("closeness.json");
            let reports = run_closeness(&cfg, &path)?;
            println!("{} closeness reports written to {}", reports.len(), path.display());
        }
        Command::VerifyLemmas => {
            let path = out("lemmas.json");
            let report = run_verify_lemmas(&cfg, &path);
            print_checks(&path, report.as_ref().ok());
            report?;
        }
        Command::MeshExport => {
            let path = out("mesh.json");
            let inst = export_mesh(&cfg, &path)?;
            println!(
                "mesh with {} vertices ({} duplicated) and {} triangles written to {}",
                inst.cracked.n_vertices(),
                inst.cracked.crack_pairs.len(),
                inst.cracked.triangles.len(),
                path.display()
            );
        }
    }
    Ok(())
}

fn print_checks(path: &Path, report: Option<&neumann_crack::harness::LemmaReport>) {
    let report = match report {
        Some(r) => r.clone(),
        None => match std::fs::read_to_string(path).ok().and_then(|t| serde_json::from_str(&t).ok()) {
            Some(r) => r,
            None => return,
        },
    };
    for c in &report.checks {
        println!("{:<12} {}  {}", c.lemma, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
