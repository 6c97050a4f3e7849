//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Positional arguments select
//! criteria by number, e.g. `cargo test --test acceptance -- 3 7`.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use meta_ot::discrete_ot::wasserstein_exact;
use meta_ot::gp_slicer::{make_grid, KernelSpec};
use meta_ot::harness::{
    bound_check_report, knn_classify, mc_convergence_report, pointcloud_eval, shape_batch_3d, shape_dataset_2d,
    texture_eval, BatchMetric, KnnConfig, Sweep, SweepAxis, TextureSweep,
};
use meta_ot::measures::build_meta;
use meta_ot::mmspace::{euclidean_mmspace, local_distance_distribution, sqw_shape_distance, ShapeInput};
use meta_ot::ot1d::{eval_quantile, quantile_of, wasserstein_1d};
use meta_ot::patches::{extract_patches, GrayImage, PerlinParams};
use meta_ot::rng::SeedStream;
use meta_ot::sqw_dsw::{dsw_distance_matrix, sliced_functional, sqw_distance_matrix, sw_wow};
use meta_ot::wow::{wow_distance_matrix, InnerSolver};
use meta_ot::{EmpiricalMeasure, Interpolation, MetaMeasure, SlicingConfig};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(tag: &str) -> ChaCha8Rng {
    SeedStream::new(2024).substream(tag, 0)
}

fn random_weights(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

fn random_measure(n: usize, d: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> EmpiricalMeasure {
    let pts = Array2::from_shape_fn((n, d), |_| rng.random_range(lo..hi));
    EmpiricalMeasure::new(pts, random_weights(n, rng)).unwrap()
}

fn random_meta(max_n_outer: usize, max_n: usize, d: usize, rng: &mut ChaCha8Rng) -> MetaMeasure {
    let big_n = rng.random_range(1..=max_n_outer);
    let inner = (0..big_n)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            random_measure(n, d, -1.0, 1.0, rng)
        })
        .collect();
    build_meta(inner, Some(random_weights(big_n, rng))).unwrap()
}

fn rbf_config(outer: usize, inner: usize, r: usize, seed: u64) -> SlicingConfig {
    SlicingConfig::new(outer, inner, r, KernelSpec::rbf(0.1).unwrap(), Interpolation::Linear, seed).unwrap()
}

fn c1_oracle_1d() -> Result<String, String> {
    let mut rng = rng("c1");
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (n, m) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_measure(n, 1, -5.0, 5.0, &mut rng);
        let b = random_measure(m, 1, -5.0, 5.0, &mut rng);
        let closed = wasserstein_1d(&a, &b).unwrap();
        let exact = wasserstein_exact(&a, &b).unwrap();
        worst = worst.max((closed - exact).abs());
    }
    ensure(worst <= 1e-9, format!("max |closed form - exact| = {worst:.3e} over 200 instances (tol 1e-9)"))
}

fn c2_quantile_isometry() -> Result<String, String> {
    let mut rng = rng("c2");
    let grid = 200_000;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, m) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let a = random_measure(n, 1, -5.0, 5.0, &mut rng);
        let b = random_measure(m, 1, -5.0, 5.0, &mut rng);
        let (qa, qb) = (quantile_of(&a).unwrap(), quantile_of(&b).unwrap());
        let integral: f64 = (0..grid)
            .map(|k| {
                let t = (k as f64 + 0.5) / grid as f64;
                let diff = eval_quantile(&qa, t, Interpolation::Step).unwrap()
                    - eval_quantile(&qb, t, Interpolation::Step).unwrap();
                diff * diff / grid as f64
            })
            .sum();
        let w2 = wasserstein_1d(&a, &b).unwrap().powi(2);
        let rel = if w2 > 0.0 { (integral - w2).abs() / w2 } else { integral };
        worst = worst.max(rel);
    }
    ensure(worst < 1e-3, format!("max relative error {worst:.3e} over 50 pairs (tol 1e-3)"))
}

fn c3_bound_sandwich() -> Result<String, String> {
    let mut rng = rng("c3");
    let mut failures = 0;
    for i in 0..20 {
        let d = rng.random_range(1..=3);
        let a = random_meta(4, 6, d, &mut rng);
        let b = random_meta(4, 6, d, &mut rng);
        let r = bound_check_report(&a, &b, &rbf_config(500, 10, 50, 100 + i)).unwrap();
        if !r.pass() {
            failures += 1;
        }
    }
    ensure(failures == 0, format!("{} of 20 instances satisfy dsw <= sw_wow <= wow (+3 sigma), S = 5000", 20 - failures))
}

fn c4_mc_rate() -> Result<String, String> {
    let mut rng = rng("c4");
    let a = random_meta(4, 6, 3, &mut rng);
    let b = random_meta(4, 6, 3, &mut rng);
    let rep = mc_convergence_report(&a, &b, &[100, 400, 1600, 6400], 50, &rbf_config(1, 10, 50, 4)).unwrap();
    match rep.slope {
        Some(s) => ensure((-0.65..=-0.35).contains(&s), format!("log-log slope {s:.4} (want [-0.65, -0.35])")),
        None => Err("slope undefined".into()),
    }
}

fn matrix_axioms(m: &[Vec<f64>], diag_tol: f64, sym_tol: f64, tri_tol: f64) -> (bool, f64, f64) {
    let k = m.len();
    let mut ok = true;
    let mut worst_sym: f64 = 0.0;
    let mut worst_tri: f64 = 0.0;
    for i in 0..k {
        ok &= m[i][i].abs() <= diag_tol;
        for j in 0..k {
            worst_sym = worst_sym.max((m[i][j] - m[j][i]).abs());
            for l in 0..k {
                worst_tri = worst_tri.max(m[i][j] - m[i][l] - m[l][j]);
            }
        }
    }
    (ok && worst_sym <= sym_tol && worst_tri <= tri_tol, worst_sym, worst_tri)
}

fn c5_metric_axioms() -> Result<String, String> {
    let mut rng = rng("c5");
    let metas: Vec<MetaMeasure> = (0..8).map(|_| random_meta(4, 6, 2, &mut rng)).collect();
    let dsw = dsw_distance_matrix(&metas, &rbf_config(200, 10, 50, 5)).unwrap();
    let wow = wow_distance_matrix(&metas, InnerSolver::Exact).unwrap();
    let (ok_d, sym_d, tri_d) = matrix_axioms(&dsw, 0.0, 0.0, 1e-10);
    let (ok_w, sym_w, tri_w) = matrix_axioms(&wow, 1e-8, 1e-8, 1e-8);
    ensure(
        ok_d && ok_w,
        format!(
            "dsw: asym {sym_d:.1e}, triangle excess {tri_d:.1e}; wow: asym {sym_w:.1e}, triangle excess {tri_w:.1e}"
        ),
    )
}

fn c6_dirac_closed_form() -> Result<String, String> {
    let mut rng = rng("c6");
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [2usize, 3, 8] {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let a = build_meta(vec![EmpiricalMeasure::dirac(&x).unwrap()], None).unwrap();
        let b = build_meta(vec![EmpiricalMeasure::dirac(&y).unwrap()], None).unwrap();
        let est = sw_wow(&a, &b, 5000, d as u64).unwrap();
        let norm = x.iter().zip(&y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let target = norm / (d as f64).sqrt();
        let z = (est.value - target).abs() / est.std_error;
        ok &= z <= 3.0;
        parts.push(format!("d={d}: {:.4} vs {target:.4} ({z:.2} se)", est.value));
    }
    ensure(ok, parts.join("; "))
}

fn c7_isometry_invariance() -> Result<String, String> {
    let mut rng = rng("c7");
    // dyadic coordinates keep the quarter turn and shift exact
    let p = Array2::from_shape_fn((30, 2), |_| rng.random_range(-64i32..64) as f64 / 32.0);
    let moved = Array2::from_shape_fn((30, 2), |(i, k)| if k == 0 { -p[[i, 1]] + 3.5 } else { p[[i, 0]] - 1.25 });
    let cfg = rbf_config(100, 10, 50, 7);
    let shape = ShapeInput::Points(p.clone());
    let same = sqw_shape_distance(&shape, &ShapeInput::Points(moved), &cfg).unwrap();
    let scaled = sqw_shape_distance(&shape, &ShapeInput::Points(p.mapv(|v| 2.0 * v)), &cfg).unwrap();
    ensure(
        same.value == 0.0 && scaled.value > 5.0 * scaled.std_error,
        format!(
            "rotated+shifted: {:e}; scaled x2: {:.4} = {:.1} se",
            same.value,
            scaled.value,
            scaled.value / scaled.std_error
        ),
    )
}

fn c8_shape_knn() -> Result<String, String> {
    let (shapes, labels) = shape_dataset_2d(30, 50, 8).unwrap();
    let metas: Vec<MetaMeasure> = shapes
        .iter()
        .map(|s| local_distance_distribution(&euclidean_mmspace(s.points()).unwrap()))
        .collect();
    let dist = sqw_distance_matrix(&metas, &rbf_config(100, 10, 50, 8)).unwrap();
    let cfg = KnnConfig {
        seed: 8,
        ..KnnConfig::default()
    };
    let (acc, std) = knn_classify(&dist, &labels, &cfg).unwrap();
    ensure(acc >= 0.95, format!("mean accuracy {acc:.4} +- {std:.4} over 1000 splits (want >= 0.95)"))
}

fn c9_patch_count() -> Result<String, String> {
    let img = GrayImage::new(Array2::from_shape_fn((64, 64), |(r, c)| ((r * 64 + c) % 256) as f64 / 255.0)).unwrap();
    let m = extract_patches(&img, 8).unwrap();
    let uniform = m.weights().iter().all(|&w| w == m.weights()[0]);
    ensure(
        m.len() == 3249 && m.dim() == 64 && uniform,
        format!("{} patches of dimension {}, uniform weights: {uniform}", m.len(), m.dim()),
    )
}

fn c10_texture() -> Result<String, String> {
    let sweep = TextureSweep {
        height: 64,
        width: 64,
        patch: 8,
        batch: 16,
        reps: 5,
        reference: PerlinParams {
            scale: 100.0,
            octaves: 6,
            persistence: 1.0,
            lacunarity: 2.0,
            seed: 0,
        },
        lacunarities: vec![1.0, 1.5, 2.0, 2.5, 3.0],
    };
    let rep = texture_eval(&sweep, &rbf_config(100, 100, 50, 10)).unwrap();
    let means: Vec<String> = rep.rows.iter().map(|r| format!("{}: {:.4}", r.param, r.mean)).collect();
    let best = rep.argmin().unwrap();
    ensure(best == 2.0, format!("argmin {best} ({})", means.join(", ")))
}

fn c11_pointcloud() -> Result<String, String> {
    let reference = shape_batch_3d(10, 50, 0.0, 111).unwrap();
    let metric = BatchMetric::Dsw(rbf_config(100, 100, 50, 11));
    let build = |m: usize, noise: f64, points: usize, seed: u64| shape_batch_3d(m, points, noise, seed);
    let base = Sweep {
        axis: SweepAxis::Shapes,
        values: vec![1.0, 10.0],
        shapes: 10,
        noise: 0.0,
        points: 50,
    };
    let modes = pointcloud_eval(&reference, build, &base, &metric, 5, 1).unwrap();
    let (m1, mn) = (&modes.rows[0], &modes.rows[1]);
    let combined = m1.std.hypot(mn.std);
    let collapse_ok = m1.mean - mn.mean > 5.0 * combined;

    let noise = Sweep {
        axis: SweepAxis::Noise,
        values: vec![0.0, 0.05, 0.1, 0.2],
        ..base
    };
    let rep = pointcloud_eval(&reference, build, &noise, &metric, 5, 2).unwrap();
    let monotone = rep
        .rows
        .windows(2)
        .all(|w| w[1].mean >= w[0].mean - 2.0 * w[0].std.hypot(w[1].std));
    let curve: Vec<String> = rep.rows.iter().map(|r| format!("{:.4}", r.mean)).collect();
    ensure(
        collapse_ok && monotone,
        format!(
            "M=1 {:.4} vs M=N {:.4} (gap {:.1} combined std); noise curve [{}]",
            m1.mean,
            mn.mean,
            (m1.mean - mn.mean) / combined,
            curve.join(", ")
        ),
    )
}

fn demo_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

fn run_cli(args: &[&str], threads: usize, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_meta-ot"))
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .current_dir(demo_dir())
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    Ok(())
}

fn c12_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 5] = [
        &["dsw", "a.json", "b.json", "--seed", "7", "--outer-s", "200"],
        &["mc-report", "mc.json"],
        &["pointcloud-eval", "pointcloud.json"],
        &["bound-check", "demo.json"],
        &["gen-perlin", "perlin.json"],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut snapshots = Vec::new();
        for threads in [1usize, 2, 4] {
            let sub = dir.path().join(format!("run{i}_t{threads}"));
            run_cli(args, threads, &sub.join("result"))?;
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&sub)
                .map_err(|e| e.to_string())?
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            snapshots.push(files);
        }
        if snapshots.iter().any(|s| s != &snapshots[0]) {
            return Err(format!("{} output differs across --threads 1/2/4", args[0]));
        }
        compared += snapshots[0].len();
    }
    Ok(format!("5 commands x threads 1/2/4: {compared} output files bit-identical"))
}

fn test_functions(k: usize, grid: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let f = |i: f64, x: f64| if k == 1 { (i * x).cos() } else { (i * x + i).cos() + x.sin() };
    let h = |j: f64, x: f64| {
        if k == 1 {
            (j * x + j * std::f64::consts::PI).sin()
        } else {
            (j * x).sin().powi(j as i32)
        }
    };
    let mu = (1..=5).map(|i| grid.iter().map(|&x| f(i as f64, x)).collect()).collect();
    let nu = (1..=10).map(|j| grid.iter().map(|&x| h(j as f64, x)).collect()).collect();
    (mu, nu)
}

fn c13_discretization() -> Result<String, String> {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, kernel) in [("rbf", KernelSpec::rbf(0.1).unwrap()), ("bm", KernelSpec::BrownianMotion)] {
        for k in [1usize, 2] {
            let est = |r: usize, seed: u64| {
                let cfg = SlicingConfig::new(1000, 10, r, kernel, Interpolation::Linear, seed).unwrap();
                let grid = make_grid(r).unwrap();
                let (mu, nu) = test_functions(k, grid.knots());
                sliced_functional(&mu, &nu, &cfg.sample_paths().unwrap(), &grid).unwrap()
            };
            let (e50, e100) = (est(50, 13), est(100, 14));
            let z = (e50.value - e100.value).abs() / e50.std_error.hypot(e100.std_error);
            ok &= z < 3.0;
            parts.push(format!("{name} pair {k}: {:.4} vs {:.4} ({z:.2} se)", e50.value, e100.value));
        }
    }
    ensure(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, u64, Check); 13] = [
        (1, "1D oracle equivalence", 5, c1_oracle_1d),
        (2, "quantile isometry", 5, c2_quantile_isometry),
        (3, "bound sandwich", 60, c3_bound_sandwich),
        (4, "Monte Carlo rate", 120, c4_mc_rate),
        (5, "metric axioms, shared projections", 60, c5_metric_axioms),
        (6, "single-Dirac closed form", 10, c6_dirac_closed_form),
        (7, "isometry invariance", 10, c7_isometry_invariance),
        (8, "synthetic shape KNN", 120, c8_shape_knn),
        (9, "patch count", 1, c9_patch_count),
        (10, "texture discrimination", 600, c10_texture),
        (11, "point-cloud trends", 300, c11_pointcloud),
        (12, "determinism across --threads", 30, c12_determinism),
        (13, "discretization stability", 60, c13_discretization),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let timing = format!("{:.2}s, limit {limit}s", elapsed.as_secs_f64());
        println!(
            "[{}] criterion {id:>2} {name}: {detail} ({timing}{})",
            if pass { "PASS" } else { "FAIL" },
            if in_time { "" } else { ", over time" }
        );
        failed += usize::from(!pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
