use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use fcas_cli::report::RunManifest;

fn fcas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcas")).args(args).current_dir(dir).env_remove("FCAS_OUT_DIR").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn template(dir: &Path, name: &str) -> String {
    let file = format!("{name}.json");
    assert_eq!(code(&fcas(&["template", name, &file], dir)), 0);
    file
}

fn table(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let head = r.headers().unwrap().clone();
    r.records().map(|rec| head.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()).collect()
}

fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gb = template(dir.path(), "gb");
    assert_eq!(code(&fcas(&["validate", &gb], dir.path())), 0);

    let mut s = fcas_core::toy_scenario();
    s.storage_units[0].eta_cha = 1.3;
    fcas_core::write_scenario(&s, dir.path().join("broken.json")).unwrap();
    let o = fcas(&["validate", "broken.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta_cha"));

    assert_eq!(code(&fcas(&["validate", "absent.json"], dir.path())), 4);
    assert_eq!(code(&fcas(&["validate"], dir.path())), 1);
}

#[test]
fn toy3_all_rules_share_the_largest_standalone_cost() {
    let dir = tempfile::tempdir().unwrap();
    let toy = template(dir.path(), "toy3");
    let o = fcas(&["run", &toy, "--out-dir", "out", "--rule", "all"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");

    let m = RunManifest::load(&out).unwrap();
    assert_eq!(m.status, "ok");
    m.verify(&out).unwrap();
    assert!(m.files.len() >= 13);

    let mut omega_n: BTreeMap<usize, f64> = BTreeMap::new();
    for r in table(&out.join("standalone.csv")) {
        let e = omega_n.entry(num(&r, "hour") as usize).or_insert(0.0);
        *e = e.max(num(&r, "omega"));
    }
    assert_eq!(omega_n.len(), 24);
    for rule in ["proportional", "shapley", "nucleolus"] {
        let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
        for r in table(&out.join(format!("allocation_{rule}.csv"))) {
            assert_eq!(r["run_id"], m.run_id);
            *sums.entry(num(&r, "hour") as usize).or_insert(0.0) += num(&r, "charge");
        }
        for (t, want) in &omega_n {
            assert!((sums[t] - want).abs() <= 1e-9 * want.max(1.0), "{rule} hour {t}: {} vs {want}", sums[t]);
        }
    }
    let prices = table(&out.join("prices.csv"));
    assert_eq!(prices.len(), 24);
    assert!(prices[0].contains_key("lambda_efr"));
}

#[test]
fn single_hour_has_one_standalone_row_per_dispatched_unit() {
    let dir = tempfile::tempdir().unwrap();
    let toy = template(dir.path(), "toy3");
    assert_eq!(code(&fcas(&["run", &toy, "--out-dir", "one", "--hours", "1"], dir.path())), 0);
    let out = dir.path().join("one");
    let commit = table(&out.join("commitment.csv"));
    let dispatched = commit.iter().filter(|r| r["online"] == "1" || r["discharging"] == "1").count();
    let sa = table(&out.join("standalone.csv"));
    assert_eq!(sa.len(), dispatched);
    assert!(sa.iter().all(|r| r["hour"] == "0"));
    assert_eq!(table(&out.join("prices.csv")).len(), 1);
}

#[test]
fn reruns_are_identical_apart_from_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let toy = template(dir.path(), "toy3");
    for d in ["a", "b"] {
        assert_eq!(code(&fcas(&["run", &toy, "--out-dir", d, "--hours", "4"], dir.path())), 0);
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ma, mb) = (RunManifest::load(&a).unwrap(), RunManifest::load(&b).unwrap());
    assert_eq!(ma.run_id, mb.run_id);
    assert_eq!(ma.files, mb.files);
    for f in &ma.files {
        assert_eq!(std::fs::read(a.join(&f.name)).unwrap(), std::fs::read(b.join(&f.name)).unwrap(), "{}", f.name);
    }
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let toy = template(dir.path(), "toy3");
    let o = Command::new(env!("CARGO_BIN_EXE_fcas"))
        .args(["run", &toy, "--hours", "2", "--rule", "shapley"])
        .current_dir(dir.path())
        .env("FCAS_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let m = RunManifest::load(&dir.path().join("from-env")).unwrap();
    assert_eq!(m.rules, vec!["shapley"]);
    assert!(dir.path().join("from-env/allocation_shapley.csv").exists());
    assert!(!dir.path().join("from-env/allocation_nucleolus.csv").exists());
}

#[test]
fn infeasible_run_is_recorded_as_failed() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = fcas_core::toy3_scenario().truncated(3);
    s.demand = vec![5000.0; 3];
    fcas_core::write_scenario(&s, dir.path().join("short.json")).unwrap();
    let o = fcas(&["run", "short.json", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 2);
    let m = RunManifest::load(&dir.path().join("out")).unwrap();
    assert_eq!(m.status, "failed");
    let last = m.stages.last().unwrap();
    assert_eq!((last.stage.as_str(), last.status.as_str()), ("commitment", "failed"));
    assert!(last.message.as_deref().unwrap().contains("balance"));
    m.verify(&dir.path().join("out")).unwrap();
}

fn game(dir: &Path, costs: &str, args: &[&str]) -> (i32, Vec<Vec<f64>>, String) {
    std::fs::write(dir.join("costs.csv"), costs).unwrap();
    let mut all = vec!["game", "costs.csv"];
    all.extend(args);
    let o = fcas(&all, dir);
    let rows = String::from_utf8_lossy(&o.stdout)
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(2).map(|v| v.parse().unwrap()).collect())
        .collect();
    (code(&o), rows, String::from_utf8_lossy(&o.stderr).into_owned())
}

#[test]
fn game_command_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let (c, rows, err) = game(d, "player,cost\na,1\nb,2\nc,3\n", &["--rule", "shapley", "--oracle"]);
    assert_eq!(c, 0);
    let dev: f64 = err.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev <= 1e-12, "{err}");
    let want = [1.0 / 3.0, 5.0 / 6.0, 11.0 / 6.0];
    assert!(rows.iter().zip(want).all(|(r, w)| (r[0] - w).abs() < 1e-12));

    let (c, rows, _) = game(d, "a,1\nb,2\nc,3\n", &["--rule", "nucleolus"]);
    assert_eq!(c, 0);
    assert!(rows.iter().zip([0.5, 0.75, 1.75]).all(|(r, w)| (r[0] - w).abs() < 1e-12));

    let (c, rows, _) = game(d, "a,4\nb,6\nc,10\n", &["--rule", "proportional"]);
    assert_eq!(c, 0);
    assert!(rows.iter().zip([2.0, 3.0, 5.0]).all(|(r, w)| (r[0] - w).abs() < 1e-12));

    let many: String = (0..13).map(|i| format!("p{i},{}\n", i + 1)).collect();
    let (c, _, err) = game(d, &many, &["--rule", "shapley", "--oracle"]);
    assert_eq!(c, 1, "{err}");

    let (c, _, _) = game(d, "a,1\na,2\n", &[]);
    assert_eq!(c, 1);
    let (c, _, _) = game(d, "a,-1\n", &[]);
    assert_eq!(c, 1);
}
