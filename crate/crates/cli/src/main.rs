//! Command-line driver: compute invariants, compare them, reconstruct
//! distances, certify alignments, run the optimizer, and reproduce the
//! three-cloud case study.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use distop::align::{align, AdamParams, AlignConfig};
use distop::casestudy::{run_case_study, CaseStudyConfig, CIRCLE, DATASET_NAMES, DISC, NOISY};
use distop::distributed::{
    closure_completion, compute_distributed, cover_probability_lower_bound, required_sample_count,
    sample_subsets, InvariantKind,
};
use distop::filtration::{cech_filtration, rips_filtration};
use distop::geometry::{mean_pairwise_distortion, pairwise_distances, shapes, Bijection};
use distop::io;
use distop::persistence::{compute_persistence, euler_curve};
use distop::reconstruction::{certify_alignment, distances_from_pair_curves, euler_reconstruct_pairs};
use distop::{Error, PointCloudF64, Result};

#[derive(Parser)]
#[command(
    name = "distop",
    about = "Distributed topological invariants of labeled point clouds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the invariant of one cloud: a persistence diagram (rp,
    /// cp) or an Euler curve (re, ce) of its m-skeleton filtration.
    Persist {
        /// Point-cloud CSV: one point per row, optional header.
        #[arg(long)]
        input: PathBuf,
        /// Invariant kind: rp, cp, re, or ce.
        #[arg(long)]
        kind: String,
        /// Skeleton truncation dimension.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Output JSON path.
        #[arg(long)]
        output: PathBuf,
    },
    /// Compute the distributed invariant over sampled size-k subsets.
    Distribute {
        #[arg(long)]
        input: PathBuf,
        /// Invariant kind: rp, cp, re, or ce.
        #[arg(long)]
        kind: String,
        /// Subset size.
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Number of uniform subset draws.
        #[arg(long)]
        subsets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Close the sampled collection downward (adds all subsets of
        /// sizes k-1 ..= k-m-1 of every member), as the reconstruction
        /// theorems require.
        #[arg(long)]
        closure: bool,
        #[arg(long)]
        output: PathBuf,
    },
    /// Reproduce the circle / disc / noisy-circle comparison: clouds,
    /// full degree-1 diagrams, averaged subset-diagram images, and the
    /// two distance tables.
    Casestudy {
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
        /// Run at desk scale (200 points, 300 subsets) instead of full
        /// scale (500 points, 1000 subsets).
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recover the exact distance matrix from a distributed Euler
    /// invariant (kind re or ce) whose collection covers all pairs.
    Reconstruct {
        /// DistributedInvariant JSON.
        #[arg(long)]
        input: PathBuf,
        /// Output distance-matrix CSV.
        #[arg(long)]
        output: PathBuf,
    },
    /// Certify a labeled alignment: sample a collection, close it,
    /// measure the worst per-subset diagram discrepancy, and report it
    /// with the implied quasi-isometry bound and the true distortion.
    Certify {
        /// Reference cloud X.
        #[arg(long)]
        input: PathBuf,
        /// Comparison cloud Y (same size).
        #[arg(long)]
        target: PathBuf,
        /// Bijection CSV (row i holds phi(i)); identity when omitted.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Diagram flavor: rp or cp.
        #[arg(long, default_value = "rp")]
        flavor: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Number of uniform subset draws before closure completion.
        #[arg(long)]
        subsets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output report JSON.
        #[arg(long)]
        output: PathBuf,
    },
    /// Align a noisy copy of the input cloud back to it by stochastic
    /// gradient descent on subset diagram losses; writes the snapshot
    /// trajectory and loss history.
    Align {
        /// Reference cloud X; Y starts as X plus coordinatewise
        /// Gaussian noise.
        #[arg(long)]
        input: PathBuf,
        /// Noise standard deviation as a fraction of the diameter of X.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Points sampled per iteration.
        #[arg(long, default_value_t = 25)]
        k: usize,
        #[arg(long, default_value_t = 20000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Snapshot cadence in iterations (0: endpoints only).
        #[arg(long, default_value_t = 0)]
        snapshot_every: usize,
        /// Output trajectory directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the covering probability lower bound for M draws and/or
    /// the draw count sufficient for a target probability.
    Coverage {
        /// Ground-set size.
        #[arg(long)]
        n: usize,
        /// Subset size per draw.
        #[arg(long)]
        k: usize,
        /// Covered-tuple size (pairs: 2).
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Number of draws M to bound.
        #[arg(long)]
        subsets: Option<usize>,
        /// Target coverage probability in (0,1).
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Generate a reference cloud CSV.
    Generate {
        /// Shape: circle, disc, noisy-circle, or torus (torus needs a
        /// square point count; 16x16 grid with radii (2,1) at n=256).
        #[arg(long)]
        shape: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    match configure_threads().and_then(|()| run(Cli::parse())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::CoverClosure(report) = &err {
                for pair in &report.missing_pairs {
                    eprintln!("missing pair: {pair:?}");
                }
                for subset in &report.missing_closures {
                    eprintln!("missing closure subset: {subset:?}");
                }
            }
            ExitCode::FAILURE
        }
    }
}

/// DISTOP_THREADS caps the worker pool; unset means the rayon default.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DISTOP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .map_err(|_| Error::Domain(format!("DISTOP_THREADS must be a positive integer, got {raw:?}")))?;
    if threads == 0 {
        return Err(Error::Domain("DISTOP_THREADS must be a positive integer, got 0".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Persist { input, kind, m, output } => {
            let cloud: PointCloudF64 = io::read_point_cloud(&input)?;
            let kind = InvariantKind::from_code(&kind)?;
            let complex = if kind.is_cech() {
                cech_filtration(&cloud, m)?
            } else {
                rips_filtration(&pairwise_distances(&cloud), m)?
            };
            let value = if kind.is_persistence() {
                let (diagram, _) = compute_persistence(&complex)?;
                io::diagram_to_json(&diagram)?
            } else {
                io::curve_to_json(&euler_curve(&complex)?)?
            };
            io::write_json(&output, &value)?;
            println!(
                "{} invariant of {} points (m={m}) written to {}",
                kind.code(),
                cloud.len(),
                output.display()
            );
            Ok(())
        }
        Command::Distribute { input, kind, k, m, subsets, seed, closure, output } => {
            let cloud: PointCloudF64 = io::read_point_cloud(&input)?;
            let kind = InvariantKind::from_code(&kind)?;
            let mut collection = sample_subsets(cloud.len(), k, subsets, seed)?;
            if closure {
                collection = closure_completion(&collection, k, m);
            }
            let inv = compute_distributed(&cloud, &collection, kind, m)?;
            io::write_json(&output, &io::distributed_to_json(&inv)?)?;
            println!(
                "{} distributed invariant: {} subsets (k={k}, m={m}, seed={seed}) written to {}",
                kind.code(),
                inv.len(),
                output.display()
            );
            Ok(())
        }
        Command::Casestudy { output, desk, seed } => {
            let mut cfg = if desk {
                CaseStudyConfig::desk_scale()
            } else {
                CaseStudyConfig::full_scale()
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let study = run_case_study::<f64>(&cfg)?;
            fs::create_dir_all(&output)?;
            for (i, name) in DATASET_NAMES.iter().enumerate() {
                io::write_point_cloud(output.join(format!("{name}-cloud.csv")), &study.clouds[i])?;
                io::write_json(
                    output.join(format!("{name}-diagram.json")),
                    &io::diagram_to_json(&study.full_diagrams[i])?,
                )?;
                io::write_image_csv(
                    output.join(format!("{name}-image.csv")),
                    &study.averaged_images[i],
                    true,
                )?;
            }
            fs::write(output.join("bottleneck-table.csv"), study.bottleneck_table_csv())?;
            fs::write(output.join("image-l2-table.csv"), study.image_l2_table_csv())?;
            let b = &study.bottleneck_table;
            let l = &study.image_l2_table;
            println!(
                "full diagrams:  d_B(noisy, disc) = {:.6} {} d_B(noisy, circle) = {:.6}",
                b[NOISY][DISC],
                if study.diagram_ordering_holds() { "<" } else { ">=" },
                b[NOISY][CIRCLE]
            );
            println!(
                "averaged images: L2(noisy, circle) = {:.6} {} L2(noisy, disc) = {:.6}",
                l[NOISY][CIRCLE],
                if study.image_ordering_holds() { "<" } else { ">=" },
                l[NOISY][DISC]
            );
            println!("artifacts written to {}", output.display());
            Ok(())
        }
        Command::Reconstruct { input, output } => {
            let inv = io::distributed_from_json::<f64>(&io::read_json(&input)?)?;
            let pairs = euler_reconstruct_pairs(&inv)?;
            let d = distances_from_pair_curves(&pairs)?;
            io::write_distance_matrix(&output, &d)?;
            println!("{}x{} distance matrix written to {}", d.len(), d.len(), output.display());
            Ok(())
        }
        Command::Certify { input, target, phi, flavor, k, m, subsets, seed, output } => {
            let x: PointCloudF64 = io::read_point_cloud(&input)?;
            let y: PointCloudF64 = io::read_point_cloud(&target)?;
            let phi = match phi {
                Some(path) => io::read_bijection(path)?,
                None => Bijection::identity(x.len()),
            };
            let kind = InvariantKind::from_code(&flavor)?;
            if !kind.is_persistence() {
                return Err(Error::Domain(format!(
                    "certification flavor must be rp or cp, got {}",
                    kind.code()
                )));
            }
            let collection = closure_completion(&sample_subsets(x.len(), k, subsets, seed)?, k, m);
            let report = certify_alignment(&x, &y, &phi, &collection, kind, m)?;
            let mut value = io::certify_report_to_json(&report)?;
            value["cover_probability_lower_bound"] =
                serde_json::json!(cover_probability_lower_bound(x.len(), k, 2, subsets));
            io::write_json(&output, &value)?;
            println!(
                "eps_obs = {:.6e}, quasi-isometry bound = {:.6e}, measured distortion = {:.6e}",
                report.eps_obs, report.bound, report.distortion
            );
            println!("report written to {}", output.display());
            Ok(())
        }
        Command::Align { input, sigma, k, iterations, seed, snapshot_every, output } => {
            let x: PointCloudF64 = io::read_point_cloud(&input)?;
            if !(sigma >= 0.0) {
                return Err(Error::Domain(format!("sigma must be >= 0, got {sigma}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y0 = shapes::gaussian_perturb(&x, sigma * x.diameter(), &mut rng);
            let cfg = AlignConfig { k, iterations, seed, snapshot_every, adam: AdamParams::default() };
            let result = align(&x, &y0, &cfg)?;
            io::write_trajectory(&output, &result)?;
            let dx = pairwise_distances(&x);
            let before = mean_pairwise_distortion(&dx, &pairwise_distances(&y0))?;
            let after = mean_pairwise_distortion(&dx, &pairwise_distances(&result.final_cloud))?;
            println!(
                "mean pairwise distortion {before:.6} -> {after:.6} over {iterations} iterations \
                 (k={k}, sigma={sigma} x diameter, seed={seed})"
            );
            println!("trajectory written to {}", output.display());
            Ok(())
        }
        Command::Coverage { n, k, p, subsets, eps } => {
            if !(1 <= p && p <= k && k <= n) {
                return Err(Error::Domain(format!("need 1 <= p <= k <= n, got n={n} k={k} p={p}")));
            }
            if subsets.is_none() && eps.is_none() {
                return Err(Error::Domain("coverage needs --subsets and/or --eps".into()));
            }
            if let Some(m_draws) = subsets {
                println!(
                    "cover_probability_lower_bound(n={n}, k={k}, p={p}, M={m_draws}) = {}",
                    cover_probability_lower_bound(n, k, p, m_draws)
                );
            }
            if let Some(eps) = eps {
                let m_needed = required_sample_count(n, k, p, eps)?;
                println!("required_sample_count(n={n}, k={k}, p={p}, eps={eps}) = {m_needed}");
                println!(
                    "plug-back bound at M={m_needed}: {}",
                    cover_probability_lower_bound(n, k, p, m_needed as usize)
                );
            }
            Ok(())
        }
        Command::Generate { shape, n, radius, seed, output } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cloud: PointCloudF64 = match shape.as_str() {
                "circle" => shapes::circle(n, radius),
                "disc" => shapes::disc_uniform(n, radius, &mut rng),
                "noisy-circle" => {
                    let ring = n * 9 / 10;
                    shapes::noisy_circle(ring, n - ring, radius, &mut rng)
                }
                "torus" => {
                    let side = (n as f64).sqrt().round() as usize;
                    if side * side != n {
                        return Err(Error::Domain(format!(
                            "torus grid needs a square point count, got n={n}"
                        )));
                    }
                    shapes::torus_grid(side, side, 2.0, 1.0)
                }
                other => {
                    return Err(Error::Domain(format!(
                        "unknown shape {other:?} (expected circle, disc, noisy-circle, or torus)"
                    )))
                }
            };
            io::write_point_cloud(&output, &cloud)?;
            println!("{} {shape} points written to {}", cloud.len(), output.display());
            Ok(())
        }
    }
}
