use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use bwflow_core::data::{
    draw_reference, generate_dataset, DatasetManifest, ReferenceDistribution, ReferenceKind,
};
use bwflow_core::denoiser::{Denoiser, KnnDenoiser, OracleDenoiser};
use bwflow_core::exec::Exec;
use bwflow_core::flow::{sample_batch, FlowConfig, Regime};
use bwflow_core::graph::{read_graphs, write_graphs, Graph, GraphMrf};
use bwflow_core::interp::{path_sweep_with, InterpScheme, PathPoint};
use bwflow_core::metric::graph_bw_distance;
use bwflow_core::rng::substream;
use bwflow_core::stats::{a_ratio, vun, StatDescriptor, VunReport};
use bwflow_core::BwError;

use crate::manifest::{write_json, RunManifest};
use crate::{CliError, DistanceArgs, GenerateArgs, InterpolateArgs, SampleArgs};

fn read_single(path: &Path) -> Result<Graph, CliError> {
    let mut graphs = read_graphs(path)?;
    if graphs.len() != 1 {
        return Err(CliError::Input(format!(
            "{} holds {} graphs, expected one",
            path.display(),
            graphs.len()
        )));
    }
    Ok(graphs.remove(0))
}

fn read_nonempty(path: &Path) -> Result<Vec<Graph>, CliError> {
    let graphs = read_graphs(path)?;
    if graphs.is_empty() {
        return Err(CliError::Input(format!(
            "{} holds no graphs",
            path.display()
        )));
    }
    Ok(graphs)
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.manifest)?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let data = generate_dataset(&manifest)?;
    fs::create_dir_all(&args.out)?;
    write_graphs(&args.out.join("train.json"), &data.train)?;
    write_graphs(&args.out.join("test.json"), &data.test)?;

    let mut run = RunManifest::new("generate", serde_json::to_value(&manifest)?);
    run.inputs.push(args.manifest.clone());
    run.outputs = vec![args.out.join("train.json"), args.out.join("test.json")];
    run.seed = Some(manifest.seed);
    run.write(&args.out)
}

#[derive(Serialize)]
struct InterpolateConfig {
    scheme: String,
    steps: usize,
    nu: f64,
    beta: f64,
    eps: f64,
}

fn mean_edge_weight(g: &Graph) -> f64 {
    let n = g.n();
    if n < 2 {
        return 0.0;
    }
    let w = g.adjacency();
    let mut total = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            total += w.get(u, v);
        }
    }
    total / (n * (n - 1) / 2) as f64
}

pub fn interpolate(args: &InterpolateArgs) -> Result<(), CliError> {
    let g0s = read_nonempty(&args.g0)?;
    let g1s = read_nonempty(&args.g1)?;
    if g0s.len() != 1 && g0s.len() != g1s.len() {
        return Err(CliError::Input(format!(
            "cannot pair {} source graphs with {} targets",
            g0s.len(),
            g1s.len()
        )));
    }
    let test = args.test.as_deref().map(read_nonempty).transpose()?;
    let scheme = InterpScheme::new(args.scheme, args.eps)?;

    let paths: Vec<Vec<PathPoint>> = Exec::default()
        .map_range(g1s.len(), |j| {
            let g0 = &g0s[if g0s.len() == 1 { 0 } else { j }];
            let mrf0 = GraphMrf::from_graph(g0, args.nu, args.beta)?;
            let mrf1 = GraphMrf::from_graph(&g1s[j], args.nu, args.beta)?;
            path_sweep_with(Exec::Sequential, &mrf0, &mrf1, &scheme, args.steps)
        })
        .into_iter()
        .collect::<Result<_, BwError>>()?;

    let stats = StatDescriptor::standard();
    let mut csv = String::from("t,scheme,stat,value,ratio\n");
    for i in 0..args.steps {
        let t = paths[0][i].t;
        let batch: Vec<Graph> = paths
            .iter()
            .map(|p| Graph::new(p[i].w_t.clone(), None, false))
            .collect::<Result<_, BwError>>()?;
        let mean_w = batch.iter().map(mean_edge_weight).sum::<f64>() / batch.len() as f64;
        let _ = writeln!(csv, "{t},{},mean_edge_weight,{mean_w},", scheme.kind);
        if let Some(test) = &test {
            let report = a_ratio(&batch, test, &g1s, &stats)?;
            for s in &report.statistics {
                let _ = writeln!(
                    csv,
                    "{t},{},{s},{},{}",
                    scheme.kind, report.per_stat_mmd[s], report.per_stat_ratio[s]
                );
            }
            let _ = writeln!(
                csv,
                "{t},{},a_ratio,{},{}",
                scheme.kind, report.a_ratio, report.a_ratio
            );
        }
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("path.csv"), csv)?;
    write_json(&args.out.join("path.json"), &paths)?;

    let config = InterpolateConfig {
        scheme: scheme.kind.to_string(),
        steps: args.steps,
        nu: args.nu,
        beta: args.beta,
        eps: args.eps,
    };
    let mut run = RunManifest::new("interpolate", serde_json::to_value(config)?);
    run.inputs = vec![args.g0.clone(), args.g1.clone()];
    run.inputs.extend(args.test.clone());
    run.outputs = vec![args.out.join("path.csv"), args.out.join("path.json")];
    run.write(&args.out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DenoiserKind {
    #[default]
    Knn,
    Oracle,
}

fn default_k() -> usize {
    1
}

/// Flow config plus the sampling-run choices that live outside the library.
#[derive(Debug, Serialize, Deserialize)]
struct SampleConfig {
    #[serde(flatten)]
    flow: FlowConfig,
    #[serde(default)]
    reference: ReferenceKind,
    #[serde(default)]
    denoiser: DenoiserKind,
    #[serde(default = "default_k")]
    k: usize,
}

fn load_sample_config(path: &Path) -> Result<SampleConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let cfg: SampleConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(BwError::from)?
    } else {
        serde_json::from_str(&text)?
    };
    cfg.flow.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct VunOnly {
    vun: VunReport,
}

pub fn sample(args: &SampleArgs) -> Result<(), CliError> {
    let cfg = load_sample_config(&args.config)?;
    let train = read_nonempty(&args.train)?;
    if cfg.flow.regime == Regime::Discrete && !train.iter().all(Graph::is_binary) {
        return Err(CliError::Input(
            "discrete regime needs binary training graphs".into(),
        ));
    }
    let target = args.target.as_deref().map(read_single).transpose()?;

    let (denoiser, k): (Box<dyn Denoiser>, usize) = match (cfg.denoiser, &target) {
        (DenoiserKind::Knn, _) => {
            let knn = KnnDenoiser::new(&train, cfg.k)?;
            let k = knn.num_classes();
            (Box::new(knn), k)
        }
        (DenoiserKind::Oracle, Some(t)) => {
            (Box::new(OracleDenoiser::new(t.clone())), t.num_classes())
        }
        (DenoiserKind::Oracle, None) => {
            return Err(CliError::Input("the oracle denoiser needs --target".into()));
        }
    };

    let reference = ReferenceDistribution::estimate(cfg.reference, &train)?;
    let g0s: Vec<Graph> = (0..args.count)
        .map(|i| {
            let n = target
                .as_ref()
                .map_or_else(|| train[i % train.len()].n(), Graph::n);
            let mut rng = substream(cfg.flow.seed, "reference", i as u64);
            let g0 = draw_reference(&reference, n, k, &mut rng)?;
            match cfg.flow.regime {
                Regime::Discrete => Ok(g0),
                Regime::Continuous => {
                    Graph::new(g0.adjacency().clone(), g0.features().cloned(), false)
                }
            }
        })
        .collect::<Result<_, BwError>>()?;

    let generated = sample_batch(denoiser.as_ref(), &g0s, &cfg.flow)?;
    fs::create_dir_all(&args.out)?;
    let samples_path = args.out.join("samples.json");
    write_graphs(&samples_path, &generated)?;

    let validity = vun(&generated, &train, args.validity)?;
    let mut outputs = vec![samples_path, args.out.join("report.json")];
    if let Some(test_path) = &args.test {
        let test = read_nonempty(test_path)?;
        let mut report = a_ratio(&generated, &test, &train, &StatDescriptor::standard())?;
        report.vun = Some(validity);
        write_json(&args.out.join("report.json"), &report)?;
        fs::write(args.out.join("report.csv"), report.to_csv())?;
        outputs.push(args.out.join("report.csv"));
    } else {
        write_json(&args.out.join("report.json"), &VunOnly { vun: validity })?;
    }

    let mut run = RunManifest::new("sample", serde_json::to_value(&cfg)?);
    run.inputs = vec![args.config.clone(), args.train.clone()];
    run.inputs.extend(args.target.clone());
    run.inputs.extend(args.test.clone());
    run.outputs = outputs;
    run.seed = Some(cfg.flow.seed);
    run.write(&args.out)
}

pub fn distance(args: &DistanceArgs) -> Result<(), CliError> {
    let g0 = read_single(&args.g0)?;
    let g1 = read_single(&args.g1)?;
    let d = graph_bw_distance(
        &GraphMrf::from_graph(&g0, args.nu, args.beta)?,
        &GraphMrf::from_graph(&g1, args.nu, args.beta)?,
    )?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&d)?);
    } else {
        println!(
            "d_bw = {}  (mean term {}, covariance term {}, beta {})",
            d.total, d.mean_term, d.covariance_term, d.beta
        );
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_json(&out.join("distance.json"), &d)?;
        let config = serde_json::json!({ "beta": args.beta, "nu": args.nu });
        let mut run = RunManifest::new("distance", config);
        run.inputs = vec![args.g0.clone(), args.g1.clone()];
        run.outputs = vec![out.join("distance.json")];
        run.write(out)?;
    }
    Ok(())
}
