use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hierss::data::write_dataset;
use hierss::sampler::PriorConfig;
use hierss::seed::task_rng;
use hierss::simulation::{generate_truth, Censoring, GenCondition, InclusionPattern, Structure};

fn hierss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hierss"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn dataset(dir: &Path) -> PathBuf {
    let cond = GenCondition {
        pattern: InclusionPattern::AllOrNone(0.5),
        censoring: Censoring::SameDistribution { fraction: 0.3 },
        structure: Structure::desk(30),
        with_test: false,
    };
    let sim = generate_truth(&cond, &PriorConfig::validation(), &mut task_rng(5, &[])).unwrap();
    let path = dir.join("data.csv");
    write_dataset(&path, &sim.train).unwrap();
    path
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fit_writes_expected_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("seed = 4\n[data]\npath = \"{}\"\n", data.display())).unwrap();
    let out = tmp.path().join("fit");
    let o = hierss(&["fit", "--config", arg(&cfg), "--total", "1000", "--burnin", "500", "--thin", "10", "--out", arg(&out)]);
    assert_ok(&o);
    let sigma = fs::read_to_string(out.join("posterior/sigma2.csv")).unwrap();
    assert_eq!(sigma.lines().count(), 1 + 50);
    assert!(sigma.ends_with('\n'));

    let selected = fs::read_to_string(out.join("selected.csv")).unwrap();
    let pips: Vec<f64> = selected.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(pips.windows(2).all(|w| w[0] >= w[1]));
    assert!(pips.iter().all(|&p| p > 0.5));

    let matrix = fs::read_to_string(out.join("inclusion_matrix.csv")).unwrap();
    let header = matrix.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 11);
    // X10 is available for one group only.
    let x10 = matrix.lines().find(|l| l.starts_with("X10,")).unwrap();
    assert_eq!(x10.split(',').filter(|c| !c.is_empty()).count(), 2);

    // Summarizing the stored posterior reproduces the fit's summary.
    let again = tmp.path().join("summary");
    let scfg = tmp.path().join("summarize.toml");
    fs::write(&scfg, format!("seed = 4\n[summarize]\nposterior = \"{}\"\n", out.join("posterior").display())).unwrap();
    assert_ok(&hierss(&["summarize", "--config", arg(&scfg), "--out", arg(&again)]));
    assert_eq!(
        fs::read(out.join("summary.csv")).unwrap(),
        fs::read(again.join("summary.csv")).unwrap()
    );
}

#[test]
fn null_fit_summarizes_intercepts_only() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("seed = 2\nvariant = \"null_intercept_only\"\n[data]\npath = \"{}\"\n", data.display())).unwrap();
    let out = tmp.path().join("null");
    assert_ok(&hierss(&["fit", "--config", arg(&cfg), "--total", "200", "--burnin", "100", "--thin", "1", "--out", arg(&out)]));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let covariate = line.split(',').nth(1).unwrap();
        assert!(covariate == "(intercept)" || covariate == "sigma2", "{line}");
    }
}

#[test]
fn cv_table_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "seed = 8\n[data]\npath = \"{}\"\n[cv]\nfolds = 5\nvariants = [\"hierarchical\", \"null_intercept_only\"]\n",
            data.display()
        ),
    )
    .unwrap();
    let out = tmp.path().join("cv");
    assert_ok(&hierss(&["cv", "--config", arg(&cfg), "--total", "100", "--burnin", "50", "--thin", "5", "--out", arg(&out)]));
    let table = fs::read_to_string(out.join("cv.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 10 + 2);
    assert_eq!(table.lines().filter(|l| l.contains(",mean,")).count(), 2);
}

#[test]
fn configuration_errors_exit_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, "seed = 1\n[simulate]\nreplications = 0\n").unwrap();
    let o = hierss(&["simulate", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("replications.csv").exists());

    // No seed anywhere.
    let o = hierss(&["fit", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));

    // Invalid schedule.
    let o = hierss(&["fit", "--seed", "1", "--total", "10", "--burnin", "10", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_module(dir: &Path, name: &str, rows: &[&[f64]], samples: &[String]) -> PathBuf {
    let mut text = samples.join(",") + "\n";
    for r in rows {
        text += &r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        text += "\n";
    }
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn extract_keeps_first_components_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let text = fs::read_to_string(&data).unwrap();
    let subjects: Vec<String> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    let n = subjects.len();
    let row = |f: fn(usize) -> f64| (0..n).map(f).collect::<Vec<f64>>();
    let a = row(|j| (j as f64 * 0.37).sin());
    let b = row(|j| (j as f64 * 0.11).cos());
    let c = row(|j| ((j % 7) as f64) - 3.0);
    write_module(tmp.path(), "m1.csv", &[&a, &b], &subjects);
    write_module(tmp.path(), "m2.csv", &[&b, &c, &a], &subjects);
    write_module(tmp.path(), "m3.csv", &[&c], &subjects);
    let manifest = tmp.path().join("modules.toml");
    fs::write(
        &manifest,
        "total_variance = 1e9\n[[module]]\nid = 1\npath = \"m1.csv\"\n[[module]]\nid = 2\npath = \"m2.csv\"\n[[module]]\nid = 3\npath = \"m3.csv\"\n",
    )
    .unwrap();
    let cfg = tmp.path().join("extract.toml");
    fs::write(
        &cfg,
        format!("seed = 1\n[data]\npath = \"{}\"\n[extract]\nmanifest = \"modules.toml\"\n", data.display()),
    )
    .unwrap();
    let out = tmp.path().join("extract");
    assert_ok(&hierss(&["extract", "--config", arg(&cfg), "--out", arg(&out)]));
    let scores = fs::read_to_string(out.join("component_scores.csv")).unwrap();
    let header: Vec<&str> = scores.lines().next().unwrap().split(',').collect();
    for name in ["1.1", "2.1", "3.1"] {
        assert!(header.contains(&name), "{header:?}");
    }
    let first = snapshot(&out);
    assert_ok(&hierss(&["extract", "--config", arg(&cfg), "--out", arg(&out)]));
    assert_eq!(first, snapshot(&out));

    // Empty manifest: warning, empty design, success.
    fs::write(&manifest, "total_variance = 1.0\n").unwrap();
    let empty = tmp.path().join("empty");
    assert_ok(&hierss(&["extract", "--config", arg(&cfg), "--out", arg(&empty)]));
    assert!(empty.join("design.csv").exists());
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = dataset(tmp.path());
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, format!("seed = 6\n[data]\npath = \"{}\"\n", data.display())).unwrap();
    let out = tmp.path().join("fit");
    assert_ok(&hierss(&["fit", "--config", arg(&cfg), "--total", "120", "--burnin", "60", "--thin", "2", "--out", arg(&out)]));
    let first = snapshot(&out);
    let echo = tmp.path().join("echo.toml");
    fs::copy(out.join("config.toml"), &echo).unwrap();
    assert_ok(&hierss(&["fit", "--config", arg(&echo)]));
    assert_eq!(first, snapshot(&out));
}
