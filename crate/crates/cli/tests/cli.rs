use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ctqrw(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ctqrw"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(out)
        .args(extra)
        .env_remove("CTQRW_THREADS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn parse_csv(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn figure2_preset_stays_within_three_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctqrw("experiment = \"figure2\"\n", dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));

    let (header, rows) = parse_csv(&dir.path().join("figure2.csv"));
    assert_eq!(header, ["t", "mc_mean_Mx", "mc_stderr", "analytic_Mx"]);
    assert_eq!(rows.len(), 200);
    for row in &rows {
        assert!((row[1] - row[3]).abs() <= 3.0 * row[2] + 1e-14, "row {row:?}");
    }
    let m = read_json(dir.path().join("figure2.manifest.json"));
    assert_eq!(m["results"]["realizations"], 10000);
    assert_eq!(m["results"]["points_outside_3_stderr"], 0);
}

#[test]
fn dangerous_exponential_kernel_is_reported_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"classify\"\n[kernel]\nkind = \"exponential\"\na_eps = 0.25\ngamma = 0.5\n";
    let o = ctqrw(cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(dir.path().join("classify.verdict.json"));
    assert_eq!(v["verdict"], "Dangerous");
    assert!(v["witness"]["t"].as_f64().unwrap() > 0.0);
    assert!(v["witness"]["scaled_pdf"].as_f64().unwrap() < 0.0);
}

#[test]
fn safe_exponential_kernel_has_no_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"classify\"\n[kernel]\nkind = \"exponential\"\na_eps = 1.0\ngamma = 2.0\n";
    let o = ctqrw(cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(dir.path().join("classify.verdict.json"));
    assert_eq!(v["verdict"], "Safe");
    assert!(v["witness"].is_null());
}

#[test]
fn empty_grid_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctqrw("experiment = \"figure3\"\n[grid]\nt_max = 10.0\nn_points = 0\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.n_points"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_with_config_code_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctqrw("experiment = \"figure2\"\n[run]\nsede = 4\n", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.sede"), "{}", stderr(&o));
}

#[test]
fn invalid_kernel_parameter_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"classify\"\n[kernel]\nkind = \"fractional\"\na_alpha = 1.0\nalpha = 1.5\n";
    let o = ctqrw(cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kernel"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ctqrw"))
        .args(["--config", "/nonexistent/run.toml"])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let cfg = "experiment = \"ensemble\"\n[model]\nkind = \"depolarizing\"\n\
               [kernel]\nkind = \"fractional\"\na_alpha = 1.0\nalpha = 0.6\n\
               [grid]\nt_max = 5.0\nn_points = 40\n[run]\nrealizations = 3000\nseed = 11\n";
    let mut outputs = Vec::new();
    for threads in ["1", "4", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = ctqrw(cfg, dir.path(), &["--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(dir.path().join("ensemble.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn seed_override_changes_the_stream() {
    let cfg = "experiment = \"realizations\"\n[model]\nkind = \"depolarizing\"\n\
               [kernel]\nkind = \"markovian\"\na1 = 1.0\n[grid]\nt_max = 5.0\nn_points = 30\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(ctqrw(cfg, a.path(), &["--seed-override", "1"]).status.success());
    assert!(ctqrw(cfg, b.path(), &["--seed-override", "2"]).status.success());
    let ma = read_json(a.path().join("realizations.manifest.json"));
    assert_eq!(ma["seeds"][0], 1);
    let read = |d: &Path| std::fs::read(d.join("realizations.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn csv_uses_lf_and_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ctqrw("experiment = \"figure3\"\n", dir.path(), &[]).status.success());
    let text = std::fs::read_to_string(dir.path().join("figure3.csv")).unwrap();
    assert!(!text.contains('\r'));
    let second = text.lines().nth(2).unwrap();
    for field in second.split(',') {
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

fn type_matches(ty: &str, v: &Value) -> bool {
    match ty {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        other => panic!("schema type {other} not handled"),
    }
}

// Checks the keywords the manifest schema uses: required, additionalProperties,
// type, enum, const and array items.
fn check(schema: &Value, v: &Value, path: &str) {
    if let Some(ty) = schema["type"].as_str() {
        assert!(type_matches(ty, v), "{path}: expected {ty}, got {v}");
    }
    if let Some(allowed) = schema["enum"].as_array() {
        assert!(allowed.contains(v), "{path}: {v} not in enum");
    }
    if let Some(c) = schema.get("const") {
        assert_eq!(c, v, "{path}");
    }
    if let Some(req) = schema["required"].as_array() {
        for k in req {
            assert!(v.get(k.as_str().unwrap()).is_some(), "{path}: missing {k}");
        }
    }
    if let (Some(props), Some(obj)) = (schema["properties"].as_object(), v.as_object()) {
        for (k, val) in obj {
            match props.get(k) {
                Some(s) => check(s, val, &format!("{path}.{k}")),
                None => assert!(schema["additionalProperties"] != false, "{path}: unexpected {k}"),
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            check(items, x, &format!("{path}[{i}]"));
        }
    }
}

fn validate(manifest: &Value) {
    let schema: Value = serde_json::from_str(ctqrw_cli::output::MANIFEST_SCHEMA).unwrap();
    check(&schema, manifest, "$");
}

#[test]
fn manifests_validate_against_the_published_schema() {
    let configs = [
        ("figure1", "experiment = \"figure1\"\n"),
        ("figure4", "experiment = \"figure4\"\n"),
        ("classify", "experiment = \"classify\"\n[kernel]\nkind = \"markovian\"\na1 = 1.0\n"),
        (
            "cp-audit",
            "experiment = \"cp-audit\"\n[model]\nkind = \"thermal\"\nkappa = 0.75\np_up = 0.0\np_down = 1.0\n\
             [kernel]\nkind = \"exponential\"\na_eps = 1.0\ngamma = 1.0\n[grid]\nt_max = 10.0\nn_points = 40\n",
        ),
        (
            "wigner",
            "experiment = \"wigner\"\n[kernel]\nkind = \"markovian\"\na1 = 1.0\n[grid]\nt_max = 2.0\nn_points = 5\n\
             [wigner]\nwalkers = 200\nradius = 2.0\n[wigner.jump]\nkind = \"levy\"\nmu = 1.5\nsigma = 0.1\n",
        ),
        (
            "intrinsic",
            "experiment = \"intrinsic\"\n[kernel]\nkind = \"markovian\"\na1 = 1.0\n[grid]\nt_max = 2.0\nn_points = 5\n\
             [intrinsic]\nlevels = [0.0, 1.0]\namplitudes = [[1.0, 0.0], [0.0, 1.0]]\n\
             [intrinsic.phase]\nkind = \"exponential\"\ntau_b = 0.3\n",
        ),
        (
            "entropy",
            "experiment = \"entropy\"\n[model]\nkind = \"depolarizing\"\n[kernel]\nkind = \"markovian\"\na1 = 1.0\n\
             [grid]\nt_max = 0.1\nn_points = 5\n",
        ),
    ];
    for (stem, cfg) in configs {
        let dir = tempfile::tempdir().unwrap();
        let o = ctqrw(cfg, dir.path(), &[]);
        assert!(o.status.success(), "{stem}: {}", stderr(&o));
        let m = read_json(dir.path().join(format!("{stem}.manifest.json")));
        validate(&m);
        for f in m["outputs"].as_array().unwrap() {
            assert!(dir.path().join(f.as_str().unwrap()).exists());
        }
    }
}
