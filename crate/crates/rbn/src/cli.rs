//! The `rbn` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rbn_core::community::{correlation_level, er_baseline, CommunitySpec, Matrix, Variant};
use rbn_core::data::DataSet;
use rbn_core::graph::{BuildOptions, LikelihoodGraph};
use rbn_core::learn::{forward_sample, FitConfig};
use serde_json::json;

use crate::experiments::{learn, link_relations, run_community, significance, subsample_experiment, GAIN_RESTARTS};
use crate::io::{load_dataset, read_text, save_dataset, write_text};
use crate::report::{matrix_csv, matrix_rows, trace_csv, FitJson, Manifest};
use crate::{load_model, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "rbn", version, about = "Relational Bayesian networks with learnable numeric relations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit parameters and learnable numeric relations of a model.
    Learn {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw independent samples of the probabilistic relations.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Domain and input relations.
        #[arg(long)]
        data: PathBuf,
        /// Number of samples.
        #[arg(long, short = 'n')]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parameter value as NAME=VALUE; every parameter needs one.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a latent community model to the link relations of a network.
    Community {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Skip the likelihood gains of the communities.
        #[arg(long)]
        no_gains: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Likelihood gain of each column of a centrality matrix.
    Gain {
        #[arg(long)]
        data: PathBuf,
        /// Centrality CSV as written by `community`.
        #[arg(long)]
        u: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a community model on false-link sub-samples of the data.
    Subsample {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Percentages of false links kept.
        #[arg(long, value_delimiter = ',', default_value = "100,50,20,10,5")]
        q_list: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Size of the likelihood graph as JSON.
    Stats {
        #[command(flatten)]
        graph: GraphArgs,
        /// Also write the graph in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Hold a parameter at a value, as NAME=VALUE.
    #[arg(long = "fix", value_name = "NAME=VALUE")]
    fix: Vec<String>,
    /// Take a learnable numeric relation's values from the data.
    #[arg(long = "freeze", value_name = "RELATION")]
    freeze: Vec<String>,
    /// Keep constant subformulas as nodes.
    #[arg(long)]
    no_fold: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Random restarts [default: 20; 10 for gain]
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Relative log-likelihood gain below which a step counts as stalled.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    InnerProduct,
    Distance,
    MultiRelational,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2)]
    communities: usize,
    /// Default: inner-product for one relation, multi-relational otherwise.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    distance_sign: f64,
}

impl FitArgs {
    fn config(&self, default_restarts: usize) -> FitConfig {
        FitConfig {
            restarts: self.restarts.unwrap_or(default_restarts),
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            ..FitConfig::default()
        }
    }

    fn record(&self, cfg: &FitConfig, m: &mut Manifest) {
        m.seed = cfg.seed;
        for (k, v) in [
            ("restarts", cfg.restarts.to_string()),
            ("max_iter", cfg.max_iter.to_string()),
            ("tol", cfg.tol.to_string()),
            ("patience", cfg.patience.to_string()),
            ("step", cfg.step.to_string()),
            ("grow", cfg.grow.to_string()),
            ("shrink", cfg.shrink.to_string()),
        ] {
            m.overrides.insert(k.into(), v);
        }
    }
}

fn key_values(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Usage(format!("expected NAME=VALUE, found `{s}`")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Usage(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

impl GraphArgs {
    fn options(&self) -> Result<BuildOptions> {
        Ok(BuildOptions {
            fixed_params: key_values(&self.fix)?,
            frozen_relations: self.freeze.iter().cloned().collect::<BTreeSet<_>>(),
            disable_folding: self.no_fold,
            keep_unreferenced_unknowns: false,
        })
    }

    fn record(&self, m: &mut Manifest) {
        m.model = Some(self.model.display().to_string());
        m.data = Some(self.data.display().to_string());
        m.overrides.insert("fix".into(), self.fix.join(","));
        m.overrides.insert("freeze".into(), self.freeze.join(","));
        m.overrides.insert("no_fold".into(), self.no_fold.to_string());
    }
}

impl SpecArgs {
    fn spec(&self, data: &DataSet) -> Result<CommunitySpec> {
        let relations = link_relations(data);
        if relations.is_empty() {
            return Err(Error::Usage(format!("{} has no binary probabilistic relations", self.data.display())));
        }
        let variant = match self.variant {
            Some(VariantArg::InnerProduct) => Variant::InnerProduct,
            Some(VariantArg::Distance) => Variant::Distance,
            Some(VariantArg::MultiRelational) => Variant::MultiRelational,
            None if relations.len() == 1 => Variant::InnerProduct,
            None => Variant::MultiRelational,
        };
        let spec = CommunitySpec { communities: self.communities, relations, variant, distance_sign: self.distance_sign };
        spec.validate()?;
        Ok(spec)
    }

    fn record(&self, spec: &CommunitySpec, m: &mut Manifest) {
        m.data = Some(self.data.display().to_string());
        m.overrides.insert("communities".into(), spec.communities.to_string());
        m.overrides.insert("variant".into(), spec.variant.name().into());
        m.overrides.insert("distance_sign".into(), spec.distance_sign.to_string());
    }
}

/// Phase timer that records into a manifest.
struct Phases {
    last: Instant,
}

impl Phases {
    fn new() -> Phases {
        Phases { last: Instant::now() }
    }

    fn lap(&mut self, m: &mut Manifest, phase: &str) {
        let now = Instant::now();
        *m.timings.entry(phase.into()).or_insert(0.0) += (now - self.last).as_secs_f64();
        self.last = now;
    }
}

fn create_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|source| {
        Error::Io(crate::io::IoError::File { path: out.display().to_string(), source })
    })
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    Ok(write_text(&out.join(name), text)?)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn node_labels(data: &DataSet) -> Vec<String> {
    data.labels().to_vec()
}

fn community_labels(c: usize) -> Vec<String> {
    (0..c).map(CommunitySpec::community_label).collect()
}

/// Reads a matrix CSV with a header row and a label column.
fn read_matrix(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let text = read_text(path)?;
    let bad = |line: usize, msg: String| Error::Usage(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let cols = header.split(',').count() - 1;
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut f = line.split(',');
        labels.push(f.next().unwrap_or_default().trim().to_string());
        let row = f.map(|x| x.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|e| bad(i + 2, e.to_string()))?;
        if row.len() != cols {
            return Err(bad(i + 2, format!("{} values for {cols} columns", row.len())));
        }
        data.extend(row);
    }
    Ok((labels.clone(), Matrix { rows: labels.len(), cols, data }))
}

pub fn run(cli: Cli) -> Result<()> {
    let mut m = Manifest::default();
    let mut ph = Phases::new();
    match cli.command {
        Command::Learn { graph, fit, out } => {
            m.command = "learn".into();
            let cfg = fit.config(20);
            fit.record(&cfg, &mut m);
            graph.record(&mut m);
            m.out = out.display().to_string();
            let model = load_model(&graph.model)?;
            let data = load_dataset(&graph.data)?;
            let opts = graph.options()?;
            ph.lap(&mut m, "load");
            let l = learn(&model, &data, &opts, &cfg)?;
            m.timings.insert("build".into(), l.build_seconds);
            m.timings.insert("fit".into(), l.fit.restart_seconds.iter().sum());
            m.timings.insert("seconds_per_restart".into(), l.fit.mean_restart_seconds());
            ph.lap(&mut m, "build_and_fit");
            create_dir(&out)?;
            write(&out, "fit.json", &FitJson::new(&l.graph, &data, &l.fit.result).to_json())?;
            write(&out, "trace.csv", &trace_csv(&l.fit.result.trace))?;
            ph.lap(&mut m, "write");
            write(&out, "manifest.json", &m.to_json())?;
            println!("best log-likelihood {}", l.fit.result.best_ll);
        }
        Command::Sample { model, data, samples, seed, params, out } => {
            m.command = "sample".into();
            m.model = Some(model.display().to_string());
            m.data = Some(data.display().to_string());
            m.seed = seed;
            m.out = out.display().to_string();
            m.overrides.insert("samples".into(), samples.to_string());
            m.overrides.insert("params".into(), params.join(","));
            let params = key_values(&params)?;
            let model = load_model(&model)?;
            let data = load_dataset(&data)?;
            ph.lap(&mut m, "load");
            let sampled = forward_sample(&model, &data, &params, samples, seed)?;
            ph.lap(&mut m, "sample");
            create_dir(&out)?;
            save_dataset(&out.join("samples.json"), &sampled)?;
            ph.lap(&mut m, "write");
            write(&out, "manifest.json", &m.to_json())?;
        }
        Command::Community { spec: sa, fit, no_gains, out } => {
            m.command = "community".into();
            let cfg = fit.config(20);
            fit.record(&cfg, &mut m);
            m.out = out.display().to_string();
            let data = load_dataset(&sa.data)?;
            let spec = sa.spec(&data)?;
            sa.record(&spec, &mut m);
            ph.lap(&mut m, "load");
            let run = run_community(&data, &spec, &cfg)?;
            m.timings.insert("build".into(), run.build_seconds);
            m.timings.insert("seconds_per_restart".into(), run.fit.mean_restart_seconds());
            ph.lap(&mut m, "build_and_fit");
            let er = er_baseline(&data, &spec.relations)?;
            let sig = if no_gains {
                None
            } else {
                let gcfg = FitConfig { restarts: GAIN_RESTARTS, ..cfg.clone() };
                Some(significance(&data, &spec.relations, &run.result.u, &gcfg)?)
            };
            ph.lap(&mut m, "gains");
            create_dir(&out)?;
            let r = &run.result;
            let alphas: BTreeMap<String, f64> =
                (0..spec.relations.len()).map(|i| (spec.alpha_name(i), r.alphas[i])).collect();
            let doc = json!({
                "variant": spec.variant.name(),
                "communities": spec.communities,
                "relations": spec.relations,
                "nodes": node_labels(&data),
                "ll": r.ll,
                "er_ll": er.ll,
                "alphas": alphas,
                "u": matrix_rows(&r.u),
                "t": r.t.as_ref().map(matrix_rows),
                "restart_lls": run.fit.result.restart_lls,
                "graph": {"nodes": run.stats.nodes, "edges": run.stats.edges, "atoms": run.atoms},
            });
            write(&out, "community.json", &pretty(&doc))?;
            let cols = community_labels(spec.communities);
            write(&out, "u.csv", &matrix_csv("node", &node_labels(&data), &cols, &r.u))?;
            if let Some(t) = &r.t {
                write(&out, "t.csv", &matrix_csv("relation", &spec.relations, &cols, t))?;
            }
            if let Some(sig) = &sig {
                write(&out, "significance.json", &pretty(&json!({"er_ll": sig.er_ll, "gains": sig.gains})))?;
            }
            ph.lap(&mut m, "write");
            write(&out, "manifest.json", &m.to_json())?;
            println!("best log-likelihood {} (independent links {})", r.ll, er.ll);
            if let Some(sig) = sig {
                println!("likelihood gains {:?}", sig.gains);
            }
        }
        Command::Gain { data, u, fit, out } => {
            m.command = "gain".into();
            let cfg = fit.config(GAIN_RESTARTS);
            fit.record(&cfg, &mut m);
            m.data = Some(data.display().to_string());
            m.overrides.insert("u".into(), u.display().to_string());
            m.out = out.display().to_string();
            let d = load_dataset(&data)?;
            let (labels, um) = read_matrix(&u)?;
            if labels != d.labels() {
                return Err(Error::Usage(format!("{}: node labels differ from the data", u.display())));
            }
            ph.lap(&mut m, "load");
            let sig = significance(&d, &link_relations(&d), &um, &cfg)?;
            ph.lap(&mut m, "gains");
            create_dir(&out)?;
            write(&out, "significance.json", &pretty(&json!({"er_ll": sig.er_ll, "gains": sig.gains})))?;
            write(&out, "manifest.json", &m.to_json())?;
            println!("likelihood gains {:?}", sig.gains);
        }
        Command::Subsample { spec: sa, fit, q_list, out } => {
            m.command = "subsample".into();
            let cfg = fit.config(20);
            fit.record(&cfg, &mut m);
            m.out = out.display().to_string();
            m.overrides.insert("q_list".into(), q_list.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
            let data = load_dataset(&sa.data)?;
            let spec = sa.spec(&data)?;
            sa.record(&spec, &mut m);
            ph.lap(&mut m, "load");
            let runs = subsample_experiment(&data, &spec, &q_list, &cfg, cfg.seed)?;
            ph.lap(&mut m, "experiment");
            create_dir(&out)?;
            let cols = community_labels(spec.communities);
            let mut levels = Vec::new();
            for r in &runs {
                write(&out, &format!("u_q{}.csv", r.q), &matrix_csv("node", &node_labels(&data), &cols, &r.result.u))?;
                levels.push(json!({
                    "q": r.q,
                    "atoms": r.atoms,
                    "seconds_per_restart": r.seconds_per_restart,
                    "ll": r.ll,
                    "refit_alphas": r.refit_alphas,
                    "refit_ll": r.refit_ll,
                    "permutation": r.permutation,
                    "matched_correlations": r.matched,
                    "correlation_levels": r.matched.iter().map(|&c| correlation_level(c)).collect::<Vec<_>>(),
                    "correlations": r.correlations,
                }));
            }
            let mut csv = String::from("q,atoms,seconds_per_restart,ll,refit_ll\n");
            for r in &runs {
                csv.push_str(&format!("{},{},{},{},{}\n", r.q, r.atoms, r.seconds_per_restart, r.ll, r.refit_ll));
            }
            write(&out, "subsample.csv", &csv)?;
            write(&out, "subsample.json", &pretty(&json!({"levels": levels})))?;
            ph.lap(&mut m, "write");
            write(&out, "manifest.json", &m.to_json())?;
        }
        Command::Stats { graph, dot } => {
            let model = load_model(&graph.model)?;
            let data = load_dataset(&graph.data)?;
            let g = LikelihoodGraph::build(&model, &data, &graph.options()?)?;
            let s = g.stats();
            if let Some(path) = dot {
                write_text(&path, &g.to_dot())?;
            }
            println!(
                "{}",
                pretty(&json!({
                    "nodes": s.nodes,
                    "edges": s.edges,
                    "params": s.params,
                    "numeric_leaves": s.numeric_leaves,
                    "indicators": s.indicators,
                }))
            );
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { crate::EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
