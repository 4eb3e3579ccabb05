//! `fexp`: lattice spectra, cepstral predictors, least-squares autoregression
//! and the Monte Carlo benchmark from the command line.
//!
//! Exit status is 0 on success, 2 for invalid input or configuration and 3
//! for numerical failures (singular systems, spectral poles, overflow).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fexp::ar::{ls_fit, order_select, ARWindow, Criterion};
use fexp::cepstrum::{
    ar_coeffs, cepstral_coeffs_with, innovation_variance, ma_coeffs, transfer_grid, ARField,
    CepstrumSum,
};
use fexp::ingest::{grid_points, sequential_predict, FitSource, GridSpec, SequentialOptions};
use fexp::io;
use fexp::lattice::{GridDims, HalfPlaneOrder, HalfPlaneWindow, Index2, Lattice2D};
use fexp::mc::{run_experiment, simulate_field, stream, table_csv, InnovationDist, MCConfig};
use fexp::pipeline::trimmed_for_bandwidth;
use fexp::spectral::{smoothed_spectrum, Demean, SpectrumOptions};

#[derive(Parser)]
#[command(
    name = "fexp",
    version,
    about = "Nonparametric prediction on 2-D lattices"
)]
struct Cli {
    /// Seed for simulation and benchmarking.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Log level filter for stderr (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Row,
    Col,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum SumArg {
    FullBox,
    HalfPlane,
}

impl From<SumArg> for CepstrumSum {
    fn from(s: SumArg) -> Self {
        match s {
            SumArg::FullBox => CepstrumSum::FullBox,
            SumArg::HalfPlane => CepstrumSum::HalfPlane,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DemeanArg {
    None,
    Plain,
    TaperWeighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Cepstrum,
    Ar,
    Ma,
}

#[derive(Subcommand)]
enum Cmd {
    /// Average point records into a lattice (row 1 south, column 1 east).
    Grid {
        #[arg(long)]
        points: PathBuf,
        /// lat_min,lat_max,lon_min,lon_max
        #[arg(long, allow_hyphen_values = true)]
        bbox: String,
        /// rows,cols
        #[arg(long)]
        shape: String,
    },
    /// Smoothed tapered periodogram on the coarse grid.
    Spectrum {
        #[arg(long)]
        lattice: PathBuf,
        /// m1,m2
        #[arg(long)]
        bandwidth: String,
        #[arg(long, value_enum, default_value_t = DemeanArg::Plain)]
        demean: DemeanArg,
    },
    /// Cepstral coefficients, or the AR / MA factor derived from them.
    Cepstrum {
        /// Lattice CSV; needs --bandwidth.
        #[arg(long, conflicts_with = "spectrum")]
        lattice: Option<PathBuf>,
        #[arg(long)]
        bandwidth: Option<String>,
        /// Spectral grid CSV as written by `spectrum`.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OrderArg::Row)]
        order: OrderArg,
        #[arg(long, value_enum, default_value_t = SumArg::FullBox)]
        sum: SumArg,
        #[arg(long, value_enum, default_value_t = Emit::Cepstrum)]
        emit: Emit,
    },
    /// Predict one or more cells, feeding each prediction into the next.
    Predict {
        #[arg(long)]
        lattice: PathBuf,
        /// Cepstrum or AR coefficient CSV.
        #[arg(long, conflicts_with_all = ["bandwidth", "window"])]
        coeffs: Option<PathBuf>,
        /// Fit the exponential model with bandwidth m1,m2.
        #[arg(long, conflicts_with = "window")]
        bandwidth: Option<String>,
        /// Fit a least-squares autoregression pL1,pU1,pL2,pU2.
        #[arg(long)]
        window: Option<String>,
        /// r,c; repeat for a sequence.
        #[arg(long, required = true)]
        target: Vec<String>,
        #[arg(long, value_enum, default_value_t = OrderArg::Auto)]
        order: OrderArg,
        /// r1,c1,r2,c2 corners of the fitting sublattice.
        #[arg(long)]
        fit_region: Option<String>,
        /// Remove the observed mean first and add it back to predictions.
        #[arg(long)]
        demean: bool,
        #[arg(long, value_enum, default_value_t = SumArg::FullBox)]
        sum: SumArg,
    },
    /// Least-squares half-plane autoregression.
    ArFit {
        #[arg(long)]
        lattice: PathBuf,
        /// pL1,pU1,pL2,pU2
        #[arg(long)]
        window: String,
        #[arg(long, value_enum, default_value_t = OrderArg::Row)]
        order: OrderArg,
    },
    /// Choose an AR window by BIC or FPE from a candidate list.
    OrderSelect {
        #[arg(long)]
        lattice: PathBuf,
        /// One pL1,pU1,pL2,pU2 per line.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, default_value = "bic")]
        criterion: String,
        #[arg(long, value_enum, default_value_t = OrderArg::Row)]
        order: OrderArg,
    },
    /// Monte Carlo RMSE table from a JSON config (one object or an array).
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Override the replication count of every config.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Simulate the moving-average field.
    Simulate {
        #[arg(long)]
        tau: f64,
        /// rows,cols
        #[arg(long)]
        shape: String,
        #[arg(long, default_value = "normal")]
        dist: String,
    },
}

/// Validation failures map to 2, numerical ones to 3.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<fexp::Error>() {
        Some(fe) if fe.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn lattice(path: &Path) -> anyhow::Result<Lattice2D<f64>> {
    Ok(io::lattice_from_csv(&read(path)?)?)
}

fn ints<const N: usize>(s: &str, what: &str) -> anyhow::Result<[i64; N]> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("{what}: expected {N} comma-separated integers, got {s:?}"))?;
    v.try_into()
        .map_err(|_| anyhow!("{what}: expected {N} comma-separated integers, got {s:?}"))
}

fn sizes<const N: usize>(s: &str, what: &str) -> anyhow::Result<[usize; N]> {
    let v = ints::<N>(s, what)?;
    if v.iter().any(|&x| x < 0) {
        bail!("{what}: negative value in {s:?}");
    }
    Ok(v.map(|x| x as usize))
}

fn fixed_order(o: OrderArg) -> anyhow::Result<HalfPlaneOrder> {
    match o {
        OrderArg::Row => Ok(HalfPlaneOrder::RowLex),
        OrderArg::Col => Ok(HalfPlaneOrder::ColLex),
        OrderArg::Auto => bail!("--order auto is only meaningful for predict"),
    }
}

struct Out<'a> {
    path: Option<&'a Path>,
}

impl Out<'_> {
    fn write(&self, text: &str) -> anyhow::Result<()> {
        match self.path {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())?;
                Ok(so.flush()?)
            }
        }
    }

    fn json<S: Serialize>(&self, v: &S) -> anyhow::Result<()> {
        self.write(&(serde_json::to_string_pretty(v)? + "\n"))
    }
}

fn lattice_json(x: &Lattice2D<f64>) -> serde_json::Value {
    let d = x.dims();
    let rows: Vec<Vec<Option<f64>>> = (1..=d.n1 as i64)
        .map(|r| (1..=d.n2 as i64).map(|c| x.get((r, c))).collect())
        .collect();
    json!({ "rows": d.n1, "cols": d.n2, "values": rows })
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let out = Out {
        path: cli.output.as_deref(),
    };
    let json_out = cli.format == Format::Json;
    match &cli.cmd {
        Cmd::Grid {
            points,
            bbox,
            shape,
        } => {
            let b: Vec<f64> = bbox
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| anyhow!("--bbox: expected lat_min,lat_max,lon_min,lon_max"))?;
            if b.len() != 4 {
                bail!("--bbox: expected 4 values, got {}", b.len());
            }
            let [rows, cols] = sizes::<2>(shape, "--shape")?;
            let spec = GridSpec {
                lat_min: b[0],
                lat_max: b[1],
                lon_min: b[2],
                lon_max: b[3],
                rows,
                cols,
            };
            let x = grid_points(&io::points_from_csv(&read(points)?)?, &spec)?;
            log::info!("{} of {} cells empty", x.missing_count(), x.dims().cells());
            if json_out {
                out.json(&lattice_json(&x))
            } else {
                out.write(&io::lattice_to_csv(&x))
            }
        }
        Cmd::Spectrum {
            lattice: lp,
            bandwidth,
            demean,
        } => {
            let [m1, m2] = sizes::<2>(bandwidth, "--bandwidth")?;
            let (x, bw) = trimmed_for_bandwidth(&lattice(lp)?, m1, m2)?;
            for note in bw.advisories() {
                log::warn!("{note}");
            }
            let demean = match demean {
                DemeanArg::None => Demean::None,
                DemeanArg::Plain => Demean::Plain,
                DemeanArg::TaperWeighted => Demean::TaperWeighted,
            };
            let g = smoothed_spectrum(
                &x,
                &bw,
                &SpectrumOptions {
                    demean,
                    ..Default::default()
                },
            )?;
            if json_out {
                let (mm1, mm2) = g.coarse();
                let entries: Vec<_> = g.entries().map(|(k, v)| json!([k.0, k.1, v])).collect();
                out.json(&json!({ "m1": m1, "m2": m2, "M1": mm1, "M2": mm2, "n1": bw.dims.n1, "n2": bw.dims.n2, "values": entries }))
            } else {
                out.write(&io::spectral_grid_to_csv(&g))
            }
        }
        Cmd::Cepstrum {
            lattice: lp,
            bandwidth,
            spectrum,
            order,
            sum,
            emit,
        } => {
            let g = match (lp, spectrum) {
                (Some(lp), None) => {
                    let bw = bandwidth
                        .as_deref()
                        .ok_or_else(|| anyhow!("--lattice needs --bandwidth"))?;
                    let [m1, m2] = sizes::<2>(bw, "--bandwidth")?;
                    let (x, bw) = trimmed_for_bandwidth(&lattice(lp)?, m1, m2)?;
                    smoothed_spectrum(&x, &bw, &SpectrumOptions::default())?
                }
                (None, Some(sp)) => {
                    io::spectral_grid_from_csv(&read(sp)?, fexp::spectral::DEFAULT_FLOOR)?
                }
                _ => bail!("give exactly one of --lattice or --spectrum"),
            };
            let (mm1, mm2) = g.coarse();
            let w = HalfPlaneWindow::new(mm1, mm2, fixed_order(*order)?)?;
            let c = cepstral_coeffs_with(&g, &w, (*sum).into())?;
            let sigma2 = innovation_variance(&c);
            log::info!("innovation variance {sigma2}");
            match (emit, json_out) {
                (Emit::Cepstrum, false) => out.write(&io::cepstrum_to_csv(&c)),
                (Emit::Ar, false) => {
                    out.write(&io::ar_field_to_csv(&ar_coeffs(&transfer_grid(&c)?)?))
                }
                (Emit::Ma, false) => out.write(&io::ma_field_to_csv(&ma_coeffs(&c)?)),
                (e, true) => {
                    let coeffs: Vec<_> = match e {
                        Emit::Cepstrum => c.iter().collect(),
                        Emit::Ar => ar_coeffs(&transfer_grid(&c)?)?.iter().collect(),
                        Emit::Ma => ma_coeffs(&c)?.iter().collect(),
                    };
                    let lags: Vec<_> = coeffs.iter().map(|((a, b), v)| json!([a, b, v])).collect();
                    out.json(&json!({
                        "M1": mm1, "M2": mm2, "order": w.order, "alpha0": c.alpha0(),
                        "innovation_variance": sigma2, "coefficients": lags,
                    }))
                }
            }
        }
        Cmd::Predict {
            lattice: lp,
            coeffs,
            bandwidth,
            window,
            target,
            order,
            fit_region,
            demean,
            sum,
        } => {
            let x = lattice(lp)?;
            let cells: Vec<Index2> = target
                .iter()
                .map(|t| ints::<2>(t, "--target").map(|[a, b]| (a, b)))
                .collect::<anyhow::Result<_>>()?;
            let source = match (coeffs, bandwidth, window) {
                (Some(cp), None, None) => {
                    let text = read(cp)?;
                    let a: ARField<f64> = match io::cepstrum_from_csv(&text) {
                        Ok(c) => ar_coeffs(&transfer_grid(&c)?)?,
                        Err(_) => io::ar_field_from_csv(&text)?,
                    };
                    let o = a.window().order;
                    if !matches!(order, OrderArg::Auto) && fixed_order(*order)? != o {
                        bail!(
                            "coefficients use {} order but --order {} was requested",
                            o.name(),
                            fixed_order(*order)?.name()
                        );
                    }
                    FitSource::Given(a)
                }
                (None, Some(b), None) => {
                    let [m1, m2] = sizes::<2>(b, "--bandwidth")?;
                    FitSource::Fexp {
                        m1,
                        m2,
                        sum: (*sum).into(),
                    }
                }
                (None, None, Some(w)) => FitSource::Ar {
                    window: ARWindow::parse(w)?,
                },
                _ => bail!("give one of --coeffs, --bandwidth or --window"),
            };
            let fit_region = fit_region
                .as_deref()
                .map(|r| sizes::<4>(r, "--fit-region").map(|[a, b, c, d]| ((a, b), (c, d))))
                .transpose()?;
            let opts = SequentialOptions {
                fit_region,
                order: match order {
                    OrderArg::Auto => None,
                    o => Some(fixed_order(*o)?),
                },
                zero_mean: !demean,
            };
            let preds = sequential_predict(&x, &source, &cells, opts)?;
            let mean = if *demean { x.observed_mean() } else { None };
            out.json(&json!({ "mean": mean, "predictions": preds }))
        }
        Cmd::ArFit {
            lattice: lp,
            window,
            order,
        } => {
            let w = ARWindow::parse(window)?.with_order(fixed_order(*order)?);
            let fit = ls_fit(&lattice(lp)?, &w)?;
            out.json(&fit)
        }
        Cmd::OrderSelect {
            lattice: lp,
            candidates,
            criterion,
            order,
        } => {
            let crit = Criterion::parse(criterion)
                .ok_or_else(|| anyhow!("--criterion must be bic or fpe"))?;
            let o = fixed_order(*order)?;
            let text = read(candidates)?;
            let cands: Vec<ARWindow> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| ARWindow::parse(l).map(|w| w.with_order(o)))
                .collect::<Result<_, _>>()?;
            let sel = order_select(&lattice(lp)?, &cands, crit)?;
            if json_out {
                out.json(&sel)
            } else {
                let mut s = String::from("window,h,n_p,sigma2,value,chosen\n");
                for (i, r) in sel.table.iter().enumerate() {
                    s += &format!(
                        "\"{}\",{},{},{},{},{}\n",
                        r.window,
                        r.h,
                        r.n_p,
                        r.sigma2,
                        r.value,
                        i == sel.chosen_index
                    );
                }
                out.write(&s)
            }
        }
        Cmd::Benchmark { config, reps } => {
            let mut v: serde_json::Value =
                serde_json::from_str(&read(config)?).context("parsing benchmark config")?;
            if !v.is_array() {
                v = serde_json::Value::Array(vec![v]);
            }
            let items = v.as_array_mut().expect("array");
            if items.is_empty() {
                bail!("benchmark config lists no experiments");
            }
            for item in items.iter_mut() {
                let obj = item
                    .as_object_mut()
                    .ok_or_else(|| anyhow!("each benchmark config must be an object"))?;
                if let Some(seed) = cli.seed {
                    obj.insert("master_seed".into(), json!(seed));
                }
                if let Some(r) = reps {
                    obj.insert("reps".into(), json!(r));
                }
            }
            let cfgs: Vec<MCConfig> = serde_json::from_value(v).context("benchmark config")?;
            let reports = cfgs
                .iter()
                .map(run_experiment)
                .collect::<Result<Vec<_>, _>>()?;
            let provenance = json!({
                "seed": cfgs.iter().map(|c| c.master_seed).collect::<Vec<_>>(),
                "reps": cfgs.iter().map(|c| c.reps).collect::<Vec<_>>(),
                "failures": reports.iter().map(|r| r.total_failures()).sum::<usize>(),
                "experiments": reports.iter().map(|r| json!({
                    "tau": r.config.tau,
                    "nstar": r.config.nstar,
                    "dist": r.config.dist,
                    "fixed_target": r.config.fixed_target,
                    "cepstrum_sum": r.config.cepstrum_sum,
                    "target_value": r.target_value,
                    "failures": r.total_failures(),
                })).collect::<Vec<_>>(),
            });
            if json_out {
                return out.json(&json!({ "provenance": provenance, "reports": reports }));
            }
            let table = table_csv(&reports);
            let prov = serde_json::to_string_pretty(&provenance)? + "\n";
            match &cli.output {
                Some(p) => {
                    out.write(&table)?;
                    let side = PathBuf::from(format!("{}.provenance.json", p.display()));
                    fs::write(&side, prov).with_context(|| format!("writing {}", side.display()))
                }
                None => out.write(&format!("{table}\n{prov}")),
            }
        }
        Cmd::Simulate { tau, shape, dist } => {
            let [n1, n2] = sizes::<2>(shape, "--shape")?;
            let dist = InnovationDist::parse(dist).ok_or_else(|| {
                anyhow!(
                    "--dist must be one of {}",
                    InnovationDist::ALL.map(|d| d.name()).join(", ")
                )
            })?;
            let mut rng = stream(cli.seed.unwrap_or(0), 0);
            let x: Lattice2D<f64> = simulate_field(*tau, GridDims::new(n1, n2)?, dist, &mut rng)?;
            if json_out {
                out.json(&lattice_json(&x))
            } else {
                out.write(&io::lattice_to_csv(&x))
            }
        }
    }
}
