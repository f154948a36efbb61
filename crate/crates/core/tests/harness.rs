use fermiscale::harness::{run_experiment, ExperimentConfig, RunFlags};
use fermiscale::Error;
use std::path::Path;

const NORM: &str = "[experiment]
kind = norm-sweep
label = small-norm
[system]
dim = 1
[potential]
kind = gaussian
[epsilon]
start = 0.2
factor = 0.7
count = 5
[z]
values = 1, 2
[grid]
policy = fixed
half_length = 8
";

const RATE: &str = "[experiment]
kind = rate-fit
label = small-rate
[system]
particles = 2
dim = 1
[potential]
kind = gaussian
[coupling]
schedule = linear
g = 1.0
[epsilon]
start = 0.2
factor = 0.7
count = 5
[grid]
policy = fixed
half_length = 8
";

fn flags(out: &Path, workers: usize) -> RunFlags {
    RunFlags {
        workers,
        seed: 5,
        out: out.to_path_buf(),
        config_path: None,
    }
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn csv_outputs_are_byte_identical_across_runs_and_workers() {
    for (text, file) in [(NORM, "norm_sweep.csv"), (RATE, "rate_sweep.csv")] {
        let cfg = ExperimentConfig::parse(text).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let c = tempfile::tempdir().unwrap();
        let ra = run_experiment(&cfg, &flags(a.path(), 1)).unwrap();
        run_experiment(&cfg, &flags(b.path(), 1)).unwrap();
        run_experiment(&cfg, &flags(c.path(), 3)).unwrap();
        let first = read(&ra.dir.join(file));
        assert!(!first.is_empty());
        assert_eq!(first, read(&b.path().join(&cfg.label).join(file)));
        assert_eq!(first, read(&c.path().join(&cfg.label).join(file)));
        assert_eq!(
            read(&ra.dir.join("fit.json")),
            read(&c.path().join(&cfg.label).join("fit.json"))
        );
        let manifest: serde_json::Value = serde_json::from_slice(&read(&ra.manifest)).unwrap();
        let mut seeded = cfg.clone();
        seeded.seed = 5;
        assert_eq!(manifest["config_hash"].as_str().unwrap(), seeded.hash());
        assert!(manifest["rows"].as_u64().unwrap() > 0);
    }
}

#[test]
fn unknown_experiment_kind_names_the_field() {
    let err = ExperimentConfig::parse("[experiment]\nkind = hologram\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("kind"), "{msg}");
    assert!(msg.contains("hologram"), "{msg}");
}

#[test]
fn unknown_key_is_rejected_with_line() {
    let err = ExperimentConfig::parse("[experiment]\nkind = verify\n\n[grid]\npionts = 8\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("pionts"), "{msg}");
    assert!(msg.contains('5'), "{msg}");
}

#[test]
fn failed_run_writes_nothing() {
    let text = "[experiment]\nkind = kk-check\nlabel = too-big\n[system]\nparticles = 2\ndim = 1\n[coupling]\nc = 0.5\n[epsilon]\nvalues = 0.5\n[grid]\nhalf_length = 4\npoints = 32\nnode_cap = 16\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let out = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, &flags(out.path(), 1));
    assert!(err.is_err());
    let dir = out.path().join(&cfg.label);
    let leftovers = if dir.exists() {
        std::fs::read_dir(&dir).unwrap().count()
    } else {
        0
    };
    assert_eq!(leftovers, 0);
    let _: Error = err.unwrap_err();
}

#[test]
fn report_collects_fit_summaries() {
    let out = tempfile::tempdir().unwrap();
    for text in [NORM, RATE] {
        run_experiment(&ExperimentConfig::parse(text).unwrap(), &flags(out.path(), 1)).unwrap();
    }
    let cfg = ExperimentConfig::parse("[experiment]\nkind = report\nlabel = report\n").unwrap();
    let r = run_experiment(&cfg, &flags(out.path(), 1)).unwrap();
    let table = String::from_utf8(read(&r.dir.join("report.txt"))).unwrap();
    assert!(table.contains("small-norm"), "{table}");
    assert!(table.contains("small-rate"), "{table}");
    let fits: Vec<serde_json::Value> = serde_json::from_slice(&read(&r.dir.join("fits.json"))).unwrap();
    assert!(fits.len() >= 3);
}
