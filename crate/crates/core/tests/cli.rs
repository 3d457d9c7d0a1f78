use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use berrymorph::cli::{self, hulls_svg, RunManifest, EXIT_DATA, EXIT_OK, EXIT_PARTIAL, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["berrymorph"];
    all.extend_from_slice(args);
    cli::run(all)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_config(dir: &Path, inputs: &Path, out: &Path, threads: usize) -> PathBuf {
    let cfg = dir.join(format!("run_{threads}.toml"));
    let text = format!(
        "schema_version = 1\ninputs = [\"{}\"]\noutput = \"{}\"\nmetadata = \"{}\"\nthreads = {threads}\n\n[reference]\n",
        p(inputs),
        p(out),
        p(&inputs.join("metadata.csv")),
    );
    fs::write(&cfg, text).unwrap();
    cfg
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap()))
        .collect()
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(run(&["pipeline"]), EXIT_USAGE);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "schema_version = 1\ninputs = []\noutput = \"o\"\nbogus = 3\n").unwrap();
    assert_eq!(run(&["pipeline", "--config", p(&cfg)]), EXIT_USAGE);
    fs::write(&cfg, "schema_version = 9\ninputs = []\noutput = \"o\"\n").unwrap();
    assert_eq!(run(&["pipeline", "--config", p(&cfg)]), EXIT_USAGE);
}

#[test]
fn empty_input_directory_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "schema_version = 1\ninputs = [\"in\"]\noutput = \"out\"\n").unwrap();
    assert_eq!(run(&["pipeline", "--config", p(&cfg)]), EXIT_DATA);
    assert!(manifest(&dir.path().join("out")).images.is_empty());
}

#[test]
fn synth_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["synth", "--out", p(&a), "--count", "3"]), EXIT_OK);
    assert_eq!(run(&["synth", "--out", p(&b), "--count", "3"]), EXIT_OK);
    let ta = tree(&a);
    assert_eq!(ta.len(), 3 * 2 + 1);
    assert_eq!(ta, tree(&b));
}

#[test]
fn batch_with_a_corrupt_file_is_partial_and_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    assert_eq!(run(&["synth", "--out", p(&input), "--count", "20"]), EXIT_OK);
    fs::write(input.join("zz_corrupt.json"), "{\"image_id\": \"zz\", \"width\": 4").unwrap();

    let out1 = dir.path().join("out1");
    let out4 = dir.path().join("out4");
    let cfg1 = write_config(dir.path(), &input, &out1, 1);
    let cfg4 = write_config(dir.path(), &input, &out4, 4);
    assert_eq!(run(&["pipeline", "--config", p(&cfg1)]), EXIT_PARTIAL);
    assert_eq!(run(&["pipeline", "--config", p(&cfg4)]), EXIT_PARTIAL);

    let m = manifest(&out1);
    assert_eq!(m.images.len(), 21);
    assert_eq!(m.ok + m.warning, 20);
    assert_eq!(m.error, 1);
    let bad = m.images.iter().find(|e| e.message.is_some()).unwrap();
    assert!(bad.path.ends_with("zz_corrupt.json"));

    let (mut t1, mut t4) = (tree(&out1), tree(&out4));
    assert!(t1.remove("manifest.json").is_some() && t4.remove("manifest.json").is_some());
    for name in ["berries.csv", "clusters.csv", "traits.csv", "angles.csv", "dispositions.csv", "clusters.json"] {
        assert!(t1.contains_key(name), "{name} missing");
    }
    assert_eq!(t1.keys().collect::<Vec<_>>(), t4.keys().collect::<Vec<_>>());
    for (name, bytes) in &t1 {
        assert!(bytes == &t4[name], "{name} differs between 1 and 4 threads");
    }

    let r1 = cli::cmd_report(&out1).unwrap();
    assert_eq!(r1, cli::cmd_report(&out1).unwrap());
    assert!(r1.contains("1 error"), "{r1}");
    assert_eq!(run(&["report", "--results", p(&out1)]), EXIT_OK);
}

#[test]
fn plots_from_a_multi_angle_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    assert_eq!(run(&["synth", "--out", p(&input), "--count", "3", "--mode", "3d"]), EXIT_OK);
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &input, &out, 0);
    assert_eq!(run(&["pipeline", "--config", p(&cfg)]), EXIT_OK);

    for kind in ["ecdf", "hulls", "pca", "angle"] {
        assert_eq!(run(&["plot", "--results", p(&out), "--kind", kind]), EXIT_OK, "{kind}");
    }
    let plots = out.join("plots");
    let ecdf: Vec<PathBuf> = fs::read_dir(&plots)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("ecdf_"))
        .collect();
    assert_eq!(ecdf.len(), 3);
    for f in &ecdf {
        let svg = fs::read_to_string(f).unwrap();
        assert_eq!(svg.matches("stroke-width=\"1.50\"").count(), 2 * 4, "{}", f.display());
        for a in [0, 90, 180, 270] {
            assert!(svg.contains(&format!(">{a} deg<")));
        }
    }
    assert!(plots.join("pca.svg").exists() && plots.join("angle.svg").exists());

    let clusters: Vec<cli::ClusterRecord> =
        serde_json::from_str(&fs::read_to_string(out.join("clusters.json")).unwrap()).unwrap();
    assert_eq!(clusters.len(), 12);
    for c in &clusters {
        let (svg, areas) = hulls_svg(c).unwrap();
        assert_eq!(svg.matches("c = ").count(), 4);
        assert!(areas.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{areas:?}");
    }
    assert_eq!(run(&["plot", "--results", p(dir.path()), "--kind", "pca"]), EXIT_USAGE);
}
