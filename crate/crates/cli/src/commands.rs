use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use roadgnn::features::{
    assemble_features, extract_tile, road_anchor, FeatureOptions, HistogramSource, RasterTiles, TILE_SIZE,
};
use roadgnn::graph::{split_nodes, to_dual, SplitSpec};
use roadgnn::training::{
    checkpoint_extra, evaluate, generate_synthetic, grid_search, prepare_features, rank, save_jsonl, top_k_average,
    train, write_summary_csv, RankBy,
};
use roadgnn::{EmbeddingTable, FeatureMatrix, GnnModel, PrimalGraph, Raster, RoadGraph, Split, TrainConfig};
use serde_json::json;

use crate::config::{self, RunConfig};
use crate::{Cli, Command, HyperArgs, ModelInputs, RasterInput};

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.apply_seed();
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }

    match cli.command {
        Command::Ingest(args) => {
            set(&mut cfg.inputs.primal, args.primal);
            set_value(&mut cfg.ingest.uturn, args.uturn);
            set_value(&mut cfg.ingest.val, args.val);
            set_value(&mut cfg.ingest.test, args.test);
            cfg.require(&["primal"])?;
            ingest(&cfg)
        }
        Command::Featurize(args) => {
            set(&mut cfg.inputs.graph, args.graph.graph);
            apply_raster(&mut cfg, args.raster);
            set(&mut cfg.inputs.histograms, args.histograms);
            set(&mut cfg.inputs.embeddings, args.embeddings);
            if args.embedding_dim.is_some() {
                cfg.features.embedding_dim = args.embedding_dim;
            }
            set_value(&mut cfg.features.geometry_points, args.geometry_points);
            if args.no_binary {
                cfg.features.binary = false;
            }
            featurize(&cfg)
        }
        Command::Tile(args) => {
            set(&mut cfg.inputs.graph, args.graph.graph);
            apply_raster(&mut cfg, args.raster);
            tile(&cfg, &args.roads)
        }
        Command::Train(args) => {
            apply_model_inputs(&mut cfg, args.inputs);
            apply_hyper(&mut cfg.train, args.hyper);
            train_one(&cfg)
        }
        Command::Grid(args) => {
            apply_model_inputs(&mut cfg, args.inputs);
            apply_hyper(&mut cfg.train, args.hyper);
            set_value(&mut cfg.grid.top_k, args.top_k);
            set_value(&mut cfg.grid.rank_by, args.rank_by);
            grid(&cfg)
        }
        Command::Eval(args) => {
            apply_model_inputs(&mut cfg, args.inputs);
            set(&mut cfg.inputs.checkpoint, args.checkpoint);
            eval(&cfg, args.split)
        }
        Command::Synth(args) => {
            set_value(&mut cfg.synth.nodes, args.nodes);
            set_value(&mut cfg.synth.classes, args.classes);
            set_value(&mut cfg.synth.embedding_dim, args.embedding_dim);
            synth(&cfg)
        }
    }
}

fn set(slot: &mut Option<PathBuf>, flag: Option<PathBuf>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn set_value<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn apply_raster(cfg: &mut RunConfig, args: RasterInput) {
    set(&mut cfg.inputs.raster, args.raster);
    set(&mut cfg.inputs.world, args.world);
    set(&mut cfg.inputs.dsm, args.dsm);
    set(&mut cfg.inputs.dsm_world, args.dsm_world);
    if args.origin.is_some() {
        cfg.features.origin = args.origin;
    }
    // world files default to a sibling of the image
    if cfg.inputs.world.is_none() {
        cfg.inputs.world = cfg.inputs.raster.as_ref().map(|p| p.with_extension("wld"));
    }
    if cfg.inputs.dsm_world.is_none() {
        cfg.inputs.dsm_world = cfg.inputs.dsm.as_ref().map(|p| p.with_extension("wld"));
    }
}

fn apply_model_inputs(cfg: &mut RunConfig, args: ModelInputs) {
    set(&mut cfg.inputs.graph, args.graph.graph);
    set(&mut cfg.inputs.features, args.features);
}

fn apply_hyper(t: &mut TrainConfig, h: HyperArgs) {
    set_value(&mut t.variant, h.variant);
    set_value(&mut t.hidden, h.hidden);
    set_value(&mut t.lr, h.lr);
    set_value(&mut t.gamma, h.gamma);
    set_value(&mut t.weight_decay, h.weight_decay);
    set_value(&mut t.dropout, h.dropout);
    set_value(&mut t.momentum, h.momentum);
    set_value(&mut t.epochs, h.epochs);
    set_value(&mut t.batch_size, h.batch_size);
    set_value(&mut t.fanouts, h.fanouts);
    if h.blocks.is_some() {
        t.blocks = h.blocks;
    }
    set_value(&mut t.direction, h.direction);
    if h.no_standardize {
        t.standardize = false;
    }
}

/// Creates the output directory and records the resolved configuration.
fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let path = out.join("resolved_config.json");
    fs::write(&path, cfg.to_pretty_json()).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(out)
}

/// Rewrites a `field: reason` validation error as a config field path.
fn field_error(prefix: &str, e: roadgnn::Error) -> anyhow::Error {
    let text = match e {
        roadgnn::Error::InvalidInput(text) => text,
        other => other.to_string(),
    };
    match text.split_once(": ") {
        Some((field, why)) => anyhow::anyhow!("field `{prefix}.{field}`: {why}"),
        None => anyhow::anyhow!("field `{prefix}`: {text}"),
    }
}

fn validate_train(cfg: &RunConfig) -> Result<()> {
    cfg.train.validate().map_err(|e| field_error("train", e))
}

fn load_graph(cfg: &RunConfig) -> Result<RoadGraph> {
    let path = cfg.input("graph")?;
    RoadGraph::from_json_file(path).with_context(|| format!("cannot load graph {}", path.display()))
}

fn load_features(cfg: &RunConfig, graph: &RoadGraph) -> Result<FeatureMatrix> {
    let path = cfg.input("features")?;
    FeatureMatrix::load(path, graph).with_context(|| format!("cannot load features {}", path.display()))
}

fn load_raster(cfg: &RunConfig, image: &str, world: &str) -> Result<Option<Raster>> {
    if cfg.inputs.raster.is_none() && image == "raster" || cfg.inputs.dsm.is_none() && image == "dsm" {
        return Ok(None);
    }
    let image_path = cfg.input(image)?;
    let world_path = cfg.input(world)?;
    Raster::load(image_path, world_path)
        .map(Some)
        .with_context(|| format!("cannot load raster {}", image_path.display()))
}

fn ingest(cfg: &RunConfig) -> Result<()> {
    let path = cfg.input("primal")?;
    let primal = PrimalGraph::from_json_file(path).with_context(|| format!("cannot load primal graph {}", path.display()))?;
    let dual = to_dual(&primal, cfg.ingest.uturn);
    let spec = SplitSpec {
        seed: cfg.ingest.split_seed,
        val: cfg.ingest.val,
        test: cfg.ingest.test,
    };
    let graph = split_nodes(dual, &spec).context("cannot split labeled roads")?;
    let out = prepare_out(cfg)?;
    let graph_path = out.join("graph.json");
    graph.write_json_file(&graph_path)?;
    println!(
        "roads {}  edges {}  labeled {}  train {}  val {}  test {}",
        graph.len(),
        graph.edge_count(),
        graph.labeled_nodes().len(),
        graph.split_nodes(Split::Train).len(),
        graph.split_nodes(Split::Val).len(),
        graph.split_nodes(Split::Test).len(),
    );
    println!("wrote {}", graph_path.display());
    Ok(())
}

fn featurize(cfg: &RunConfig) -> Result<()> {
    let graph = load_graph(cfg)?;
    if cfg.inputs.raster.is_some() && cfg.inputs.histograms.is_some() {
        bail!("field `inputs.histograms`: cannot be combined with `inputs.raster`");
    }
    if cfg.inputs.dsm.is_some() && cfg.inputs.raster.is_none() {
        bail!("field `inputs.dsm`: requires `inputs.raster`");
    }
    let tiles = match load_raster(cfg, "raster", "world")? {
        Some(rgb) => Some(RasterTiles::new(rgb, load_raster(cfg, "dsm", "dsm_world")?)?),
        None => None,
    };
    let table = match cfg.inputs.histograms {
        Some(_) => {
            let path = cfg.input("histograms")?;
            Some(EmbeddingTable::load(path, None).with_context(|| format!("cannot load histograms {}", path.display()))?)
        }
        None => None,
    };
    let embeddings = match cfg.inputs.embeddings {
        Some(_) => {
            let path = cfg.input("embeddings")?;
            Some(
                EmbeddingTable::load(path, cfg.features.embedding_dim)
                    .with_context(|| format!("cannot load embeddings {}", path.display()))?,
            )
        }
        None => None,
    };
    let source: Option<&dyn HistogramSource> = match (&tiles, &table) {
        (Some(t), _) => Some(t),
        (None, Some(t)) => Some(t),
        (None, None) => None,
    };
    let options = FeatureOptions {
        geometry_points: (cfg.features.geometry_points > 0).then_some(cfg.features.geometry_points),
        binary: cfg.features.binary,
        histogram: source.is_some(),
        projection: cfg.features.projection(),
    };
    let assembled = assemble_features(&graph, &options, embeddings.as_ref(), source)?;
    let matrix = assembled.matrix;
    if matrix.width() == 0 {
        bail!("field `features`: every feature block is disabled");
    }
    let out = prepare_out(cfg)?;
    let path = out.join("features.vfe");
    matrix.save(&path)?;
    let blocks: Vec<String> = matrix
        .schema()
        .iter()
        .map(|b| format!("{} {}", format!("{:?}", b.kind).to_lowercase(), b.width))
        .collect();
    println!("rows {}  width {}  ({})", matrix.rows(), matrix.width(), blocks.join(", "));
    if embeddings.is_some() {
        println!("zero-fallback embeddings {}", assembled.missing_embeddings);
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// File-name-safe form of a road id.
fn tile_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn tile(cfg: &RunConfig, roads: &[String]) -> Result<()> {
    let graph = load_graph(cfg)?;
    cfg.require(&["raster", "world"])?;
    let rgb = load_raster(cfg, "raster", "world")?.expect("raster checked");
    let dsm = load_raster(cfg, "dsm", "dsm_world")?;
    let options = FeatureOptions {
        projection: cfg.features.projection(),
        ..FeatureOptions::default()
    };
    let projection = options.projection_for(&graph);
    let nodes = roads
        .iter()
        .map(|id| graph.node_index(id).with_context(|| format!("road {id:?} is not in the graph")))
        .collect::<Result<Vec<_>>>()?;
    let out = prepare_out(cfg)?;
    let dir = out.join("tiles");
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for &v in &nodes {
        let node = graph.node(v);
        let (center, heading) = road_anchor(node, &projection)?;
        let stem = tile_stem(&node.id);
        let rgb_tile = extract_tile(&rgb, center, heading, TILE_SIZE)?;
        let path = dir.join(format!("{stem}.ppm"));
        fs::write(&path, rgb_tile.to_pnm_bytes()).with_context(|| format!("cannot write {}", path.display()))?;
        if let Some(dsm) = &dsm {
            let dsm_tile = extract_tile(dsm, center, heading, TILE_SIZE)?;
            let path = dir.join(format!("{stem}.dsm.pgm"));
            fs::write(&path, dsm_tile.to_pnm_bytes()).with_context(|| format!("cannot write {}", path.display()))?;
        }
        println!(
            "{}  center ({:.2}, {:.2})  heading {:.2}  -> {}",
            node.id,
            center.0,
            center.1,
            heading,
            path.display()
        );
    }
    Ok(())
}

fn fmt_score(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn train_one(cfg: &RunConfig) -> Result<()> {
    validate_train(cfg)?;
    let graph = load_graph(cfg)?;
    let features = load_features(cfg, &graph)?;
    let out = prepare_out(cfg)?;
    let outcome = train(&cfg.train, &graph, &features).context("training failed")?;
    let model_path = out.join("model.rgn");
    let mut record = outcome.record;
    // relative to the run file so identical runs give identical bytes
    record.checkpoint = Some("model.rgn".to_string());
    outcome
        .model
        .save(&model_path, Some(&checkpoint_extra(&cfg.train, &outcome.inputs)))?;
    let run_path = out.join("run.jsonl");
    save_jsonl(&run_path, std::slice::from_ref(&record))?;
    println!(
        "best epoch {}  val micro-F1 {}  test micro-F1 {}",
        record.best_epoch.map_or_else(|| "n/a".to_string(), |e| e.to_string()),
        fmt_score(record.best_val_micro_f1()),
        fmt_score(record.best_test_micro_f1()),
    );
    println!("wrote {} and {}", model_path.display(), run_path.display());
    Ok(())
}

fn grid(cfg: &RunConfig) -> Result<()> {
    validate_train(cfg)?;
    if cfg.grid.space.is_empty() {
        bail!("field `grid.space`: every axis needs at least one value");
    }
    if cfg.grid.top_k == 0 {
        bail!("field `grid.top_k`: must be >= 1");
    }
    for probe in cfg.grid.space.configs(&cfg.train) {
        probe.validate().map_err(|e| field_error("grid.space", e))?;
    }
    let graph = load_graph(cfg)?;
    let features = load_features(cfg, &graph)?;
    let out = prepare_out(cfg)?;
    let records = grid_search(&cfg.grid.space, &cfg.train, &graph, &features, cfg.jobs())?;
    let records = match cfg.grid.rank_by {
        RankBy::Validation => records,
        RankBy::Test => rank(records, RankBy::Test),
    };
    let jsonl = out.join("grid.jsonl");
    save_jsonl(&jsonl, &records)?;
    let csv = out.join("summary.csv");
    let file = fs::File::create(&csv).with_context(|| format!("cannot create {}", csv.display()))?;
    write_summary_csv(std::io::BufWriter::new(file), &records)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    println!("runs {}  failed {}", records.len(), failed);
    let k = cfg.grid.top_k;
    match top_k_average(&records, k, cfg.grid.rank_by) {
        Ok(avg) => {
            println!("top-{k} mean test micro-F1 {avg:.4}");
            let path = out.join("top_k.json");
            let body = json!({"k": k, "rank_by": cfg.grid.rank_by, "mean_test_micro_f1": avg});
            fs::write(&path, serde_json::to_string_pretty(&body)?).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Err(e) => log::warn!("no top-{k} average: {e}"),
    }
    println!("wrote {} and {}", jsonl.display(), csv.display());
    Ok(())
}

fn eval(cfg: &RunConfig, split: Split) -> Result<()> {
    let graph = load_graph(cfg)?;
    let features = load_features(cfg, &graph)?;
    let path = cfg.input("checkpoint")?;
    let (model, header) = GnnModel::load(path).with_context(|| format!("cannot load checkpoint {}", path.display()))?;
    let train_config: TrainConfig = header
        .get("train_config")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .context("checkpoint field `train_config` is malformed")?
        .with_context(|| format!("checkpoint {} has no `train_config`", path.display()))?;
    if model.num_classes() != graph.num_classes() {
        bail!(
            "checkpoint predicts {} classes but the graph has {}",
            model.num_classes(),
            graph.num_classes()
        );
    }
    let inputs = prepare_features(&train_config, &graph, &features)?;
    let nodes = graph.split_nodes(split);
    let metrics = evaluate(&model, &graph, inputs.values(), &nodes, train_config.direction)
        .with_context(|| format!("cannot evaluate the {split:?} split"))?;
    let out = prepare_out(cfg)?;
    let metrics_path = out.join("metrics.json");
    let body = json!({
        "split": split,
        "nodes": nodes.len(),
        "classes": graph.classes(),
        "checkpoint": path,
        "metrics": metrics,
    });
    fs::write(&metrics_path, serde_json::to_string_pretty(&body)?)
        .with_context(|| format!("cannot write {}", metrics_path.display()))?;
    println!(
        "{}: {} roads  micro-F1 {:.4}  macro-F1 {:.4}",
        format!("{split:?}").to_lowercase(),
        nodes.len(),
        metrics.micro_f1,
        metrics.macro_f1
    );
    println!("wrote {}", metrics_path.display());
    Ok(())
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let data = generate_synthetic(&cfg.synth).map_err(|e| anyhow::anyhow!("field `synth`: {e}"))?;
    let out = prepare_out(cfg)?;
    let written = data.save(&out)?;
    println!(
        "roads {}  classes {}  train {}  val {}  test {}",
        data.graph.len(),
        data.graph.num_classes(),
        data.graph.split_nodes(Split::Train).len(),
        data.graph.split_nodes(Split::Val).len(),
        data.graph.split_nodes(Split::Test).len(),
    );
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
