//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p chosen-path --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chosen_path::analysis::{datadep_rho_jaccard, dominance_scan, rho, rho_jaccard, sampling_crossover, Method};
use chosen_path::bench::{run_bench, BenchConfig};
use chosen_path::verify::{
    verify_map, verify_padded_hash, verify_transform, Check, MapVerifyConfig, PaddedVerifyConfig,
    TransformVerifyConfig,
};
use chosen_path::{ChosenPathParams, CpIndex};
use num_rational::Ratio;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn checks_outcome(checks: &[Check]) -> Outcome {
    let text: Vec<String> = checks
        .iter()
        .map(|c| format!("{} = {:.6} ± {:.2e} vs {:.6}", c.name, c.estimate, c.se, c.target))
        .collect();
    if checks.iter().all(|c| c.passed) {
        Ok(text.join("; "))
    } else {
        Err(text.join("; "))
    }
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> Result<String, String> {
    let line = format!("{name} = {value:.6}");
    if (value - target).abs() <= tol {
        Ok(line)
    } else {
        Err(format!("{line}, expected {target} ± {tol}"))
    }
}

fn rho_regression() -> Outcome {
    let (j1, j2) = (0.2, 0.1);
    let mut parts = vec![
        within("chosenpath", rho_jaccard(Method::ChosenPath, j1, j2).unwrap(), 0.6444, 5e-4)?,
        within("minhash", rho_jaccard(Method::MinHash, j1, j2).unwrap(), 0.6990, 5e-4)?,
        within("angular", rho_jaccard(Method::Angular, j1, j2).unwrap(), 0.7222, 5e-4)?,
    ];
    let exact = datadep_rho_jaccard(Ratio::new(1i64, 5), Ratio::new(1, 10));
    if exact != Ratio::new(11, 16) {
        return Err(format!("datadep = {exact}, expected 11/16"));
    }
    let approx = rho_jaccard(Method::DataDependent, j1, j2).unwrap();
    if (approx - 0.6875).abs() > 1e-12 {
        return Err(format!("datadep (f64) = {approx}"));
    }
    parts.push(format!("datadep = {exact}"));
    Ok(parts.join(", "))
}

fn dominance() -> Outcome {
    let r = dominance_scan(400).map_err(|e| e.to_string())?;
    let line = format!(
        "{} cells, {} violations, chosenpath < datadep at {}, low-b2 region all chosenpath: {}",
        r.cells,
        r.violations.len(),
        r.cp_le_datadep,
        r.low_b2_all_cp
    );
    if r.passed() && r.cells == 400 * 399 / 2 {
        Ok(line)
    } else {
        Err(format!("{line}; first violation: {:?}", r.violations.first()))
    }
}

fn low_b2_note() -> Outcome {
    let (b1, b2) = (0.995, 1.0 / 23.0);
    let mh = rho(Method::MinHash, b1, b2).unwrap();
    let dd = rho(Method::DataDependent, b1, b2).unwrap();
    let line = format!("minhash = {mh:.6}, datadep = {dd:.6}");
    if mh > dd {
        Ok(line)
    } else {
        Err(line)
    }
}

fn map_monte_carlo() -> Outcome {
    let (_, checks) = verify_map(&MapVerifyConfig::default()).map_err(|e| e.to_string())?;
    checks_outcome(&checks)
}

fn crossover() -> Outcome {
    let mut count = 0;
    for t in [50u32, 100, 500] {
        // a = 0 gives 0 on both sides
        for a in (1..t).take_while(|&a| f64::from(a) < 0.6 * f64::from(t)) {
            let (sample, jaccard) = sampling_crossover(t, a);
            if sample <= jaccard {
                return Err(format!("t={t}, a={a}: {sample} <= {jaccard}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} (t, a) pairs"))
}

fn recall() -> Outcome {
    let report = run_bench(&BenchConfig::default()).map_err(|e| e.to_string())?;
    let cp = report.chosen_path.ok_or("no chosen path stats")?;
    let line = format!(
        "R = {}, recall = {}, per-rep recall = {:.4}, false accepts = {}",
        report.reps,
        cp.recall,
        cp.per_rep_recall.unwrap_or(f64::NAN),
        cp.false_accepts
    );
    if cp.recall >= 0.9 && cp.false_accepts == 0 && report.reps == 16 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn work_scaling() -> Outcome {
    let mean = |n: usize| -> Result<f64, String> {
        let cfg = BenchConfig {
            n,
            trials: 100,
            reps: Some(16),
            decoys_only: true,
            minhash: false,
            ..BenchConfig::default()
        };
        let report = run_bench(&cfg).map_err(|e| e.to_string())?;
        Ok(report.chosen_path.ok_or("no stats")?.mean_candidates)
    };
    let (small, large) = (mean(4_000)?, mean(16_000)?);
    let cfg = BenchConfig::default();
    let bound = 4f64.powf(ChosenPathParams::rho(cfg.b1, cfg.b2) + 0.15);
    let line = format!("{large:.1} / {small:.1} = {:.3} vs {bound:.3}", large / small);
    if large / small <= bound {
        Ok(line)
    } else {
        Err(line)
    }
}

fn padded_hash() -> Outcome {
    let (_, checks) = verify_padded_hash(&PaddedVerifyConfig::default()).map_err(|e| e.to_string())?;
    checks_outcome(&checks)
}

fn transform() -> Outcome {
    let cfg = TransformVerifyConfig {
        source_dim: 1 << 20,
        inputs: 100_000,
        pairs: 1000,
        ..TransformVerifyConfig::default()
    };
    let (_, checks) = verify_transform(&cfg).map_err(|e| e.to_string())?;
    checks_outcome(&checks)
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chosen-path"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let instance = chosen_path::bench::planted_instance(300, 16, 0.5, 0.25, true, 7).map_err(|e| e.to_string())?;
    let points = dir.path().join("points.txt");
    let queries = dir.path().join("queries.txt");
    let file = |p: &Path| std::fs::File::create(p).map_err(|e| e.to_string());
    chosen_path::set::write_sets(file(&points)?, &instance.points).map_err(|e| e.to_string())?;
    let mut qs = vec![instance.query.clone()];
    qs.extend(instance.points.iter().take(50).cloned());
    chosen_path::set::write_sets(file(&queries)?, &qs).map_err(|e| e.to_string())?;

    let mut runs = Vec::new();
    for run in 0..2 {
        let snap = format!("index{run}.cpix");
        let stats = run_cli(
            &["build", "--input", "points.txt", "--output", &snap, "--b1", "0.5", "--b2", "0.25", "--seed", "11"],
            dir.path(),
        )?;
        let answers = run_cli(&["query", "--index", &snap, "--input", "queries.txt"], dir.path())?;
        let bytes = std::fs::read(dir.path().join(&snap)).map_err(|e| e.to_string())?;
        runs.push((stats, answers, bytes));
    }
    if runs[0] != runs[1] {
        return Err("outputs differ between runs".into());
    }
    let bytes = &runs[0].2;
    let index = CpIndex::from_bytes(bytes).map_err(|e| e.to_string())?;
    if &index.to_bytes() != bytes {
        return Err("snapshot round trip changed bytes".into());
    }
    let lines = runs[0].1.iter().filter(|&&b| b == b'\n').count();
    Ok(format!("{} snapshot bytes, {lines} query lines, identical across runs", bytes.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rho regression", rho_regression),
        ("dominance", dominance),
        ("low-b2 minhash vs datadep", low_b2_note),
        ("map Monte Carlo", map_monte_carlo),
        ("sampling crossover", crossover),
        ("end-to-end recall", recall),
        ("work scaling", work_scaling),
        ("padded hash", padded_hash),
        ("transform", transform),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
