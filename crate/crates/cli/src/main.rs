use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rtdepth::bench::{run_bench_cell, table_k, BenchConfig};
use rtdepth::calibration::{
    expected_covariance_determinant, run_calibration, run_covariance_determinant_study,
    CalibrationConfig, DEFAULT_KMAX,
};
use rtdepth::depth::{exact_tukey_depth_2d, mahalanobis_depth_all, random_tukey_depth_against};
use rtdepth::estimators::{EllipticalFit, LocationKind, ScatterKind};
use rtdepth::functional::{loocv_summary, ClassifierSpec, CurveSample, Method};
use rtdepth::homogeneity::{
    center_sample, kruskal_wallis_scale_test_with, run_scale_power_study, wilcoxon_scale_test_with,
    CenterMethod, DepthBackend, PValueMethod, ScaleScenario, ScaleTestOptions, TiePolicy,
};
use rtdepth::io::{read_curves_path, read_matrix_path};
use rtdepth::parallel::with_threads;
use rtdepth::report::{
    from_jsonl, render_report, to_jsonl, ClassifyConfig, CovDetConfig, DepthConfig, DepthRow,
    PowerConfig, Record,
};
use rtdepth::rng::sample_sphere;
use rtdepth::{Dataset, Distribution, Seed};

#[derive(Parser)]
#[command(name = "rtdepth", version, about = "Random Tukey depth toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Base seed; every random quantity is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Output::Table)]
    output: Output,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Table,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Random,
    Average,
    Min,
    Max,
}

impl From<Ties> for TiePolicy {
    fn from(t: Ties) -> Self {
        match t {
            Ties::Random => TiePolicy::Random,
            Ties::Average => TiePolicy::Average,
            Ties::Min => TiePolicy::Min,
            Ties::Max => TiePolicy::Max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Random,
    Dense1000,
}

impl Backend {
    fn resolve(self, k: usize) -> DepthBackend {
        match self {
            Backend::Random => DepthBackend::RandomTukey { k },
            Backend::Dense1000 => DepthBackend::DENSE_1000,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimators {
    /// Sample mean and covariance.
    MeanCov,
    /// Coordinate-wise median and sample covariance.
    MedianCov,
    /// Coordinate-wise median and robust scatter.
    Robust,
}

impl Estimators {
    fn kinds(self) -> (LocationKind, ScatterKind) {
        match self {
            Estimators::MeanCov => (LocationKind::Mean, ScatterKind::SampleCovariance),
            Estimators::MedianCov => (LocationKind::CoordinateMedian, ScatterKind::SampleCovariance),
            Estimators::Robust => (LocationKind::CoordinateMedian, ScatterKind::RobustM),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Estimators::MeanCov => "mean-cov",
            Estimators::MedianCov => "median-cov",
            Estimators::Robust => "robust",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Center {
    None,
    Mean,
    Median,
}

#[derive(Subcommand)]
enum Command {
    /// Depth of every row of a CSV matrix (or of query points) within it.
    Depth {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Also report the Mahalanobis depth with these estimators.
        #[arg(long, value_enum)]
        mahalanobis: Option<Estimators>,
        /// Also report the exact Tukey depth (two columns only).
        #[arg(long)]
        exact: bool,
        /// Query points: a CSV file, or one point written as `x,y,...`.
        #[arg(long)]
        query: Option<String>,
    },
    /// Mean and 95% percentile of the selected number of directions.
    CalibrateK {
        #[arg(long, value_delimiter = ',', default_value = "gaussian")]
        dist: Vec<Distribution>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
        /// Ranking of tied depths in the resemblance correlation.
        #[arg(long, value_enum, default_value_t = Ties::Average)]
        ties: Ties,
    },
    /// Mean determinant of Gaussian sample covariance matrices.
    CovDet {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Depth-rank scale test: two files give the one-sided Wilcoxon test
    /// (is the second sample wider?), more give Kruskal-Wallis.
    TestScale {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Backend::Random)]
        backend: Backend,
        #[arg(long, value_enum, default_value_t = Ties::Random)]
        ties: Ties,
        /// Centre each sample before pooling.
        #[arg(long, value_enum, default_value_t = Center::None)]
        center: Center,
    },
    /// Monte Carlo rejection rates of the scale tests.
    SimulatePower {
        #[arg(long, value_delimiter = ',', default_value = "gaussian")]
        dist: Vec<Distribution>,
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Scale factors r_1..r_{K-1}; one factor gives the two-sample test.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Backend::Random)]
        backend: Backend,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Ties::Random)]
        ties: Ties,
    },
    /// Leave-one-out error of a depth-based curve classifier. Give two curve
    /// files, or one file with a label column holding two groups.
    Classify {
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "AM")]
        method: Method,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Trim of both groups for method M.
        #[arg(long, default_value_t = 0.2)]
        trim: f64,
        /// Trim of the second group, if different.
        #[arg(long)]
        trim_y: Option<f64>,
        /// Curves per group for TAM (default: the smaller group size).
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
    /// Timing of the random Tukey and Mahalanobis depths.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,25,50")]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
        n: Vec<usize>,
        /// Directions for every cell (default: the tabulated value).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
    /// Renders a JSON-lines file written with `--output jsonl`.
    Report { input: PathBuf },
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn load_matrix(path: &Path) -> Result<Dataset> {
    read_matrix_path(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_point(text: &str) -> Option<Vec<f64>> {
    text.split(',').map(|c| c.trim().parse::<f64>().ok()).collect()
}

fn cmd_depth(
    input: &Path,
    k: usize,
    mahalanobis: Option<Estimators>,
    exact: bool,
    query: Option<&str>,
    seed: Seed,
) -> Result<Vec<Record>> {
    let data = load_matrix(input)?;
    let queries = match query {
        None => data.clone(),
        Some(q) => match parse_point(q) {
            Some(point) => Dataset::from_rows(&[point]).context("query point")?,
            None => load_matrix(Path::new(q))?,
        },
    };
    if queries.dim() != data.dim() {
        bail!(
            "query has {} columns but the data has {}",
            queries.dim(),
            data.dim()
        );
    }
    if exact && data.dim() != 2 {
        bail!("--exact needs two-column data, found {}", data.dim());
    }
    let dirs = sample_sphere(data.dim(), k, seed)?;
    let rt = random_tukey_depth_against(&queries, &data, &dirs)?;
    let mut errors = Vec::new();
    let maha = match mahalanobis {
        None => None,
        Some(est) => {
            let (loc, scatter) = est.kinds();
            match EllipticalFit::estimate(&data, loc, scatter)
                .and_then(|fit| mahalanobis_depth_all(&queries, &fit))
            {
                Ok(v) => Some(v.values),
                Err(e) => {
                    errors.push(format!("mahalanobis: {e}"));
                    None
                }
            }
        }
    };
    let mut rows = Vec::with_capacity(queries.n());
    for (i, x) in queries.rows().enumerate() {
        rows.push(DepthRow {
            row: i + 1,
            random_tukey: rt.values[i],
            mahalanobis: maha.as_ref().map(|m| m[i]),
            exact_tukey: if exact {
                Some(exact_tukey_depth_2d(x, &data)?)
            } else {
                None
            },
        });
    }
    Ok(vec![Record::Depth {
        config: DepthConfig {
            input: display(input),
            k,
            seed,
            mahalanobis: mahalanobis.map(|e| e.name().to_string()),
            exact,
            query: query.map(str::to_string),
        },
        rows,
        errors,
    }])
}

fn load_two_groups(inputs: &[PathBuf]) -> Result<(CurveSample, CurveSample, String, String)> {
    let read = |p: &PathBuf| read_curves_path(p).with_context(|| format!("reading {}", p.display()));
    if inputs.len() == 2 {
        let x = read(&inputs[0])?.sample(Some(display(&inputs[0])))?;
        let y = read(&inputs[1])?.sample(Some(display(&inputs[1])))?;
        if x.grid() != y.grid() {
            bail!("the two curve files use different grids");
        }
        return Ok((x, y, display(&inputs[0]), display(&inputs[1])));
    }
    let file = read(&inputs[0])?;
    if file.labels.is_none() {
        bail!("a single curve file needs a label column");
    }
    let mut groups = file.groups()?;
    if groups.len() != 2 {
        bail!("expected two labelled groups, found {}", groups.len());
    }
    let y = groups.pop().expect("two groups");
    let x = groups.pop().expect("two groups");
    let name = |s: &CurveSample| format!("{}:{}", display(&inputs[0]), s.label.as_deref().unwrap_or(""));
    let (nx, ny) = (name(&x), name(&y));
    Ok((x, y, nx, ny))
}

fn run(cli: &Cli) -> Result<Vec<Record>> {
    let seed = Seed(cli.global.seed);
    let records = match &cli.command {
        Command::Depth {
            input,
            k,
            mahalanobis,
            exact,
            query,
        } => cmd_depth(input, *k, *mahalanobis, *exact, query.as_deref(), seed)?,
        Command::CalibrateK {
            dist,
            p,
            n,
            reps,
            kmax,
            ties,
        } => {
            let mut records = Vec::new();
            for &pp in p {
                for &d in dist {
                    for &nn in n {
                        let mut config = CalibrationConfig::new(d, pp, nn, *reps, seed);
                        config.kmax = *kmax;
                        config.ties = (*ties).into();
                        let summary = run_calibration(&config)
                            .with_context(|| format!("calibration {d} p={pp} n={nn}"))?;
                        records.push(Record::Calibration { config, summary });
                    }
                }
            }
            records
        }
        Command::CovDet { p, n, reps } => {
            let mut records = Vec::new();
            for &pp in p {
                for &nn in n {
                    let summary = run_covariance_determinant_study(pp, nn, *reps, seed)?;
                    records.push(Record::CovDet {
                        config: CovDetConfig {
                            p: pp,
                            n: nn,
                            replications: *reps,
                            seed,
                        },
                        summary,
                        expected: expected_covariance_determinant(pp, nn),
                    });
                }
            }
            records
        }
        Command::TestScale {
            inputs,
            k,
            alpha,
            backend,
            ties,
            center,
        } => {
            let mut samples = Vec::new();
            for path in inputs {
                let d = load_matrix(path)?;
                samples.push(match center {
                    Center::None => d,
                    Center::Mean => center_sample(&d, CenterMethod::Mean),
                    Center::Median => center_sample(&d, CenterMethod::CoordinateMedian),
                });
            }
            let options = ScaleTestOptions {
                alpha: *alpha,
                tie_policy: (*ties).into(),
                p_value: PValueMethod::Auto,
            };
            let backend = backend.resolve(*k);
            let report = if samples.len() == 2 {
                wilcoxon_scale_test_with(&samples[0], &samples[1], backend, &options, seed)?
            } else {
                kruskal_wallis_scale_test_with(&samples, backend, &options, seed)?
            };
            vec![Record::ScaleTest {
                input: inputs.iter().map(|p| display(p)).collect(),
                report,
            }]
        }
        Command::SimulatePower {
            dist,
            n,
            r,
            k,
            backend,
            reps,
            alpha,
            ties,
        } => {
            let mut records = Vec::new();
            for &d in dist {
                let config = PowerConfig {
                    scenario: ScaleScenario::new(d, *n, r.clone()),
                    backend: backend.resolve(*k),
                    options: ScaleTestOptions {
                        alpha: *alpha,
                        tie_policy: (*ties).into(),
                        p_value: PValueMethod::Auto,
                    },
                    replications: *reps,
                    seed,
                };
                let summary = run_scale_power_study(
                    &config.scenario,
                    config.backend,
                    &config.options,
                    *reps,
                    seed,
                )?;
                records.push(Record::Power { config, summary });
            }
            records
        }
        Command::Classify {
            inputs,
            method,
            k,
            trim,
            trim_y,
            l,
            reps,
        } => {
            let (x, y, nx, ny) = load_two_groups(inputs)?;
            let spec = ClassifierSpec {
                method: *method,
                alpha: *trim,
                beta: trim_y.unwrap_or(*trim),
                l: *l,
                k: *k,
                seed,
            };
            if let Some(l) = l {
                if *l > x.n().min(y.n()) {
                    bail!("l = {l} exceeds the smaller group size {}", x.n().min(y.n()));
                }
            }
            let summary = loocv_summary(&x, &y, &spec, *reps, seed)?;
            vec![Record::Classify {
                config: ClassifyConfig {
                    group_x: nx,
                    group_y: ny,
                    spec,
                    replications: *reps,
                    seed,
                },
                summary,
            }]
        }
        Command::Bench { p, n, k, reps } => {
            let mut records = Vec::new();
            for &pp in p {
                for &nn in n {
                    let kk = match k.or_else(|| table_k(pp, nn)) {
                        Some(kk) => kk,
                        None => bail!("no tabulated k for p={pp}, n={nn}; pass --k"),
                    };
                    let config = BenchConfig {
                        p: pp,
                        n: nn,
                        k: kk,
                        repetitions: *reps,
                        seed,
                    };
                    let cell = run_bench_cell(&config)?;
                    records.push(Record::Bench { config, cell });
                }
            }
            records
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            from_jsonl(&text).with_context(|| format!("parsing {}", input.display()))?
        }
    };
    Ok(records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_threads(cli.global.threads, || run(&cli)) {
        Ok(records) => {
            let text = match cli.global.output {
                Output::Table => render_report(&records),
                Output::Jsonl => to_jsonl(&records),
            };
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
