use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use meta_ot::harness::{
    bound_check_report, knn_classify, mc_convergence_report, pointcloud_eval, shape_batch_3d, texture_eval,
    BatchMetric, TextureSweep,
};
use meta_ot::measures::{load_point_cloud, DatasetManifest};
use meta_ot::mmspace::{local_distance_distribution, mesh_to_edges, read_off, ShapeInput};
use meta_ot::patches::{perlin_batch, write_pgm, PerlinParams};
use meta_ot::rng::SeedStream;
use meta_ot::sqw_dsw::{dsw, sqw_distance_matrix, sqw_with_config};
use meta_ot::wow::{inner_cost_matrix, wow_from_costs};
use meta_ot::{DistanceEstimate, MetaMeasure};
use ndarray::Array2;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cache::{Cache, KeyBuilder};
use crate::config::{
    load_json, resolve, McConfig, MetricKind, PairConfig, PatchConfig, PerlinConfig, PointcloudConfig,
};
use crate::output::{output_paths, Report};
use crate::{Cli, Command, UsageError};

struct Ctx {
    seed: Option<u64>,
    out: Option<PathBuf>,
    verbose: bool,
    cache: Cache,
}

impl Ctx {
    fn seed(&self, from_config: Option<u64>, command: &str) -> Result<u64> {
        self.seed.or(from_config).ok_or_else(|| {
            UsageError(format!("{command} is stochastic and needs an explicit --seed")).into()
        })
    }

    fn timed<T>(&self, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        if self.verbose {
            eprintln!("timing: {label} {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(out)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cache_dir = cli
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os("META_OT_CACHE").map(PathBuf::from));
    let ctx = Ctx {
        seed: cli.seed,
        out: cli.out.clone(),
        verbose: cli.verbose,
        cache: Cache::new(cache_dir, cli.verbose),
    };
    match cli.threads {
        Some(0) => Err(UsageError("--threads must be at least 1".into()).into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| dispatch(&ctx, cli.command))
        }
        None => dispatch(&ctx, cli.command),
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<()> {
    let report = match command {
        Command::Dsw { a, b, slicing } => {
            let seed = ctx.seed(None, "dsw")?;
            let cfg = slicing.to_config(seed)?;
            let (ma, mb) = (load_meta(&a)?, load_meta(&b)?);
            let est = ctx.timed("dsw", || Ok(dsw(&ma, &mb, &cfg)?))?;
            estimate_report("dsw", seed, json!({ "a": a, "b": b, "slicing": slicing }), est)
        }
        Command::Sqw { a, b, slicing } => {
            let seed = ctx.seed(None, "sqw")?;
            let cfg = slicing.to_config(seed)?;
            let (ma, mb) = (load_meta(&a)?, load_meta(&b)?);
            let est = ctx.timed("sqw", || Ok(sqw_with_config(&ma, &mb, &cfg)?))?;
            estimate_report("sqw", seed, json!({ "a": a, "b": b, "slicing": slicing }), est)
        }
        Command::Wow { a, b, inner } => {
            let (ma, mb) = (load_meta(&a)?, load_meta(&b)?);
            let solver = inner.solver();
            let key = KeyBuilder::new("inner-cost")
                .text(&serde_json::to_string(&solver)?)
                .meta(&ma)
                .meta(&mb)
                .finish();
            let costs = ctx.timed("inner-cost", || {
                ctx.cache
                    .get_or_compute("inner-cost", &key, || Ok(inner_cost_matrix(&ma, &mb, solver)?))
            })?;
            let value = ctx.timed("outer", || Ok(wow_from_costs(&costs, ma.outer_weights(), mb.outer_weights())?))?;
            Report {
                command: "wow",
                seed: None,
                config: json!({ "a": a, "b": b, "inner": inner }),
                table: format!("value\n{value:?}\n"),
                results: json!({ "value": value }),
                summary: format!("wow value={value:?}"),
            }
        }
        Command::ShapeKnn {
            manifest,
            geodesic,
            knn,
            slicing,
        } => shape_knn(ctx, &manifest, geodesic, &knn, &slicing)?,
        Command::PointcloudEval { config } => pointcloud(ctx, &config)?,
        Command::PatchEval { config } => patch_eval(ctx, &config)?,
        Command::McReport { config } => mc_report(ctx, &config)?,
        Command::BoundCheck { config } => bound_check(ctx, &config)?,
        Command::GenPerlin { config } => gen_perlin(ctx, &config)?,
    };
    report.emit(ctx.out.as_deref())
}

fn load_meta(path: &Path) -> Result<MetaMeasure> {
    let manifest = DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))?;
    Ok(manifest.to_meta()?)
}

fn estimate_report(command: &'static str, seed: u64, config: Value, est: DistanceEstimate) -> Report {
    Report {
        command,
        seed: Some(seed),
        config,
        table: format!("value,std_error,S\n{:?},{:?},{}\n", est.value, est.std_error, est.s),
        results: json!(est),
        summary: format!("{command} value={:?} std_error={:?} S={}", est.value, est.std_error, est.s),
    }
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn shape_knn(
    ctx: &Ctx,
    path: &Path,
    geodesic: bool,
    knn: &crate::config::KnnArgs,
    slicing: &crate::config::SlicingArgs,
) -> Result<Report> {
    let seed = ctx.seed(None, "shape-knn")?;
    let cfg = slicing.to_config(seed)?;
    let manifest = DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))?;
    let metas = ctx.timed("local-distributions", || {
        manifest
            .items
            .par_iter()
            .map(|item| {
                let p = manifest.resolve(item);
                let is_off = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("off"));
                let shape = if is_off {
                    let mesh = read_off(&p)?;
                    if geodesic {
                        let edges = mesh_to_edges(&mesh);
                        ShapeInput::Graph {
                            points: mesh.vertices,
                            edges,
                        }
                    } else {
                        ShapeInput::Points(mesh.vertices)
                    }
                } else {
                    ShapeInput::Points(load_point_cloud(&p)?.points().clone())
                };
                Ok(local_distance_distribution(&shape.to_mmspace()?))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut key = KeyBuilder::new("sqw-matrix")
        .text(&serde_json::to_string(slicing)?)
        .text(&seed.to_string());
    for m in &metas {
        key = key.meta(m);
    }
    let key = key.finish();
    let dist = ctx.timed("distance-matrix", || {
        ctx.cache.get_or_compute("sqw-matrix", &key, || {
            let rows = sqw_distance_matrix(&metas, &cfg)?;
            let k = rows.len();
            Ok(Array2::from_shape_vec((k, k), rows.concat())?)
        })
    })?;
    let labels = manifest.labels();
    let knn_cfg = knn.to_config(SeedStream::new(seed).child("knn", 0).master());
    let rows = matrix_rows(&dist);
    let (acc, std) = ctx.timed("knn", || Ok(knn_classify(&rows, &labels, &knn_cfg)?))?;
    Ok(Report {
        command: "shape-knn",
        seed: Some(seed),
        config: json!({ "manifest": path, "geodesic": geodesic, "knn": knn, "slicing": slicing }),
        table: format!(
            "k,train_fraction,trials,mean_accuracy,std\n{},{:?},{},{acc:?},{std:?}\n",
            knn.k, knn.train_fraction, knn.trials
        ),
        results: json!({ "mean_accuracy": acc, "std": std, "labels": labels, "distances": rows }),
        summary: format!("shape-knn accuracy={acc:?} std={std:?} items={}", labels.len()),
    })
}

fn pointcloud(ctx: &Ctx, path: &Path) -> Result<Report> {
    let (mut cfg, _) = load_json::<PointcloudConfig>(path)?;
    let seed = ctx.seed(cfg.seed, "pointcloud-eval")?;
    cfg.seed = Some(seed);
    let streams = SeedStream::new(seed);
    let reference = shape_batch_3d(
        cfg.reference.shapes,
        cfg.reference.points,
        0.0,
        streams.child("reference", 0).master(),
    )?;
    let metric = match cfg.metric {
        MetricKind::Dsw => BatchMetric::Dsw(cfg.slicing.to_config(seed)?),
        MetricKind::Wow => BatchMetric::Wow(cfg.wow.solver()),
    };
    let report = ctx.timed("pointcloud-eval", || {
        Ok(pointcloud_eval(
            &reference,
            |m, noise, points, s| shape_batch_3d(m, points, noise, s),
            &cfg.sweep,
            &metric,
            cfg.reps,
            streams.child("eval", 0).master(),
        )?)
    })?;
    let means: Vec<String> = report.means().iter().map(|m| format!("{m:.6}")).collect();
    Ok(Report {
        command: "pointcloud-eval",
        seed: Some(seed),
        config: serde_json::to_value(&cfg)?,
        table: report.to_csv(),
        summary: format!("pointcloud-eval {} means=[{}]", metric.name(), means.join(", ")),
        results: serde_json::to_value(&report)?,
    })
}

fn patch_eval(ctx: &Ctx, path: &Path) -> Result<Report> {
    let (mut cfg, _) = load_json::<PatchConfig>(path)?;
    let seed = ctx.seed(cfg.seed, "patch-eval")?;
    cfg.seed = Some(seed);
    let sweep = TextureSweep {
        height: cfg.height,
        width: cfg.width,
        patch: cfg.patch,
        batch: cfg.batch,
        reps: cfg.reps,
        reference: cfg.reference,
        lacunarities: cfg.lacunarities.clone(),
    };
    let slicing = cfg.slicing.to_config(seed)?;
    let report = ctx.timed("patch-eval", || Ok(texture_eval(&sweep, &slicing)?))?;
    let best = report.argmin().expect("nonempty sweep");
    Ok(Report {
        command: "patch-eval",
        seed: Some(seed),
        config: serde_json::to_value(&cfg)?,
        table: report.to_csv(),
        summary: format!("patch-eval argmin lacunarity={best:?} reference={:?}", cfg.reference.lacunarity),
        results: json!({ "rows": report.rows, "argmin": best }),
    })
}

fn mc_report(ctx: &Ctx, path: &Path) -> Result<Report> {
    let (mut cfg, base) = load_json::<McConfig>(path)?;
    let seed = ctx.seed(cfg.seed, "mc-report")?;
    cfg.seed = Some(seed);
    let a = load_meta(&resolve(&base, &cfg.a))?;
    let b = load_meta(&resolve(&base, &cfg.b))?;
    let slicing = cfg.slicing.to_config(seed)?;
    let mc = ctx.timed("mc-report", || Ok(mc_convergence_report(&a, &b, &cfg.s_list, cfg.reps, &slicing)?))?;
    let slope = mc.slope.map_or("undefined".to_string(), |s| format!("{s:?}"));
    Ok(Report {
        command: "mc-report",
        seed: Some(seed),
        config: serde_json::to_value(&cfg)?,
        table: mc.report.to_csv(),
        summary: format!("mc-report slope={slope}"),
        results: serde_json::to_value(&mc)?,
    })
}

fn bound_check(ctx: &Ctx, path: &Path) -> Result<Report> {
    let (mut cfg, base) = load_json::<PairConfig>(path)?;
    let seed = ctx.seed(cfg.seed, "bound-check")?;
    cfg.seed = Some(seed);
    let a = load_meta(&resolve(&base, &cfg.a))?;
    let b = load_meta(&resolve(&base, &cfg.b))?;
    let slicing = cfg.slicing.to_config(seed)?;
    let r = ctx.timed("bound-check", || Ok(bound_check_report(&a, &b, &slicing)?))?;
    let verdict = if r.pass() { "pass" } else { "fail" };
    Ok(Report {
        command: "bound-check",
        seed: Some(seed),
        config: serde_json::to_value(&cfg)?,
        table: format!(
            "quantity,value,std_error\ndsw,{:?},{:?}\nsw_wow,{:?},{:?}\nwow,{:?},0.0\n",
            r.dsw.value, r.dsw.std_error, r.sw_wow.value, r.sw_wow.std_error, r.wow
        ),
        summary: format!(
            "bound-check {verdict} dsw={:?} sw_wow={:?} wow={:?}",
            r.dsw.value, r.sw_wow.value, r.wow
        ),
        results: json!({ "report": r, "verdict": verdict }),
    })
}

fn gen_perlin(ctx: &Ctx, path: &Path) -> Result<Report> {
    let (mut cfg, _) = load_json::<PerlinConfig>(path)?;
    let seed = ctx.seed(cfg.seed, "gen-perlin")?;
    cfg.seed = Some(seed);
    let out = ctx
        .out
        .as_deref()
        .ok_or_else(|| UsageError("gen-perlin needs --out for its images".into()))?;
    let params = PerlinParams { seed, ..cfg.params };
    let images = ctx.timed("perlin", || Ok(perlin_batch(cfg.height, cfg.width, &params, cfg.count)?))?;
    let (csv, _) = output_paths(out);
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("perlin").to_string();
    let dir = csv.parent().map(Path::to_path_buf).unwrap_or_default();
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut table = String::from("index,file\n");
    let mut files = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let name = format!("{stem}_{i:03}.pgm");
        write_pgm(img, dir.join(&name), cfg.binary)?;
        table.push_str(&format!("{i},{name}\n"));
        files.push(name);
    }
    Ok(Report {
        command: "gen-perlin",
        seed: Some(seed),
        config: serde_json::to_value(&cfg)?,
        table,
        summary: format!("gen-perlin wrote {} images to {}", files.len(), dir.display()),
        results: json!({ "files": files }),
    })
}
