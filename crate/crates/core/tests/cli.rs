use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_operad-bar")).args(args).output().expect("binary runs");
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn table(dir: &std::path::Path, prime: &str) -> String {
    let path = dir.join(format!("rho{}.txt", prime));
    let (code, _, err) = run(&["build-rho", "--prime", prime, "--degree-max", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{}", err);
    path.to_str().unwrap().to_string()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("operad-bar-cli-{}-{}", name, std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn act_on_commutative_algebra_is_the_shuffle_product() {
    let d = scratch("act");
    let t = table(&d, "2");
    let (code, out, _) = run(&["act", &t, "--fixture", "poly:4:1", "--q", "[12](1,2)", "[x]", "[x^2]"]);
    assert_eq!((code, out.as_str()), (0, "[x|x^2] + [x^2|x]\n"));
    let (_, out, _) = run(&["act", &t, "--fixture", "poly:4:1", "--q", "[12](1,2)", "[x|x]", "[x]"]);
    assert_eq!(out, "[x|x|x]\n");
    let (_, out, _) = run(&["act", &t, "--fixture", "poly:4:1", "--q", "[12](1,2)", "[]", "[x^3]"]);
    assert_eq!(out, "[x^3]\n");
    let t3 = table(&d, "3");
    // odd bar letters anticommute
    let (_, out, _) = run(&["act", &t3, "--fixture", "poly:4:2", "--q", "[12](1,2)", "[x]", "[x]"]);
    assert_eq!(out, "0\n");
    let (code, _, _) = run(&["act", &t3, "--fixture", "poly:4:1", "--q", "[12](1,2)", "[x]", "[x]"]);
    assert_eq!(code, 2);
}

#[test]
fn homology_and_draw() {
    let (code, out, _) = run(&["homology", "W(C):2", "--degree-max", "2"]);
    assert_eq!((code, out.as_str()), (0, "[(0,1),(1,0),(2,0)]\n"));
    let (_, out, _) = run(&["homology", "E:2", "--degree-max", "2"]);
    assert_eq!(out, "[(0,1),(1,0),(2,0)]\n");
    let (code, out, _) = run(&["draw", "graft:[12](1,2);1;[12](1,2)"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph \"w1\" {"));
    assert_eq!(out.matches("shape=circle").count(), 2);
    assert_eq!(out.matches("leaf").count(), 6);
}

#[test]
fn exit_codes() {
    let d = scratch("codes");
    let t = table(&d, "2");
    assert_eq!(run(&["verify-rho", &t]).0, 0);
    let (code, out, _) = run(&["verify-rho", &t, "--corrupt", "2"]);
    assert_eq!(code, 1);
    let mut lines = out.lines();
    let first = lines.next().unwrap().trim_start_matches("corrupted entry ").to_string();
    assert!(out.lines().any(|l| l.contains("fails at") && l.contains(&first)), "{}", out);
    assert_eq!(run(&["verify-rho", "/nonexistent/table"]).0, 2);
    assert_eq!(run(&["homology", "E:2", "--prime", "4"]).0, 2);
    assert_eq!(run(&["homology", "nonsense"]).0, 2);
    assert_eq!(run(&["act", &t, "--q", "[12](1,2)", "[y]", "[x]", "--fixture", "poly:2"]).0, 2);
    let cfg = d.join("bad.cfg");
    std::fs::write(&cfg, "prime = 2\nwidth = 3\n").unwrap();
    assert_eq!(run(&["homology", "E:2", "--config", cfg.to_str().unwrap()]).0, 2);
    std::fs::write(&cfg, "prime = 3\ndegree-max = 1\n").unwrap();
    assert_eq!(run(&["homology", "E:2", "--config", cfg.to_str().unwrap()]).1, "[(0,1),(1,0)]\n");
}

#[test]
fn output_is_deterministic() {
    let d = scratch("det");
    let a = std::fs::read_to_string(table(&d, "3")).unwrap();
    let b = std::fs::read_to_string(table(&d, "3")).unwrap();
    assert_eq!(a, b);
    let (c1, o1, _) = run(&["verify-rho", &d.join("rho3.txt").to_string_lossy(), "--fixture", "ext:2", "--seed", "7"]);
    let (c2, o2, _) = run(&["verify-rho", &d.join("rho3.txt").to_string_lossy(), "--fixture", "ext:2", "--seed", "7"]);
    assert_eq!((c1, &o1), (c2, &o2));
    assert_eq!(c1, 0);
}
