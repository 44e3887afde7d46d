use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use form_lab::io::{read_checkpoint, report_from_json, DatasetFile, SampleFile};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_form-lab"))
        .args(args)
        .env("FORM_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, kind: &str, name: &str, extra: &[&str]) -> PathBuf {
    let out = p(dir, name);
    let mut args = vec!["gen-data", "--dataset", kind, "--out", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn gen_data_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "onedot", "a.ndjson", &["--seed", "42"]);
    let b = gen(dir.path(), "onedot", "b.ndjson", &["--seed", "42"]);
    let file = DatasetFile::read(&a).unwrap();
    assert_eq!(file.header.n_points, 200);
    assert_eq!(file.trajectories.len(), 200);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = gen(dir.path(), "onedot", "c.ndjson", &["--seed", "43"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.ndjson");
    let b = p(dir.path(), "b.ndjson");
    for (threads, out) in [("1", &a), ("3", &b)] {
        let status = Command::new(env!("CARGO_BIN_EXE_form-lab"))
            .args(["gen-data", "--dataset", "spiral", "--n", "30", "--out", s(out)])
            .env("FORM_LAB_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn validation_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "x.ndjson");
    assert_eq!(run(&["gen-data", "--dataset", "onedot", "--steps", "1", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(run(&["gen-data", "--dataset", "torus", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(run(&["gen-data", "--dataset", "onedot"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_form-lab"))
        .args(["gen-data", "--dataset", "onedot", "--out", s(&out)])
        .env("FORM_LAB_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(bad_threads.code(), Some(2));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"n": 12, "steps": 20, "seed": 5}"#).unwrap();
    let a = gen(dir.path(), "halfmoons", "a.ndjson", &["--config", s(&cfg)]);
    let header = DatasetFile::read(&a).unwrap().header;
    assert_eq!((header.n_points, header.n_steps, header.seed), (12, 20, 5));
    let b = gen(dir.path(), "halfmoons", "b.ndjson", &["--config", s(&cfg), "--n", "7"]);
    let header = DatasetFile::read(&b).unwrap().header;
    assert_eq!((header.n_points, header.n_steps), (7, 20));
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let out = p(dir.path(), "c.ndjson");
    assert_eq!(run(&["gen-data", "--dataset", "onedot", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn huge_force_scale_stays_subluminal() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "halfmoons", "a.ndjson", &["--n", "20", "--force-scale", "100"]);
    let file = DatasetFile::read(&a).unwrap();
    let c = file.header.physics.c;
    assert!(file.trajectories.iter().all(|r| r.max_speed() < c));
}

#[test]
fn corrupted_dataset_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "onedot", "d.ndjson", &["--n", "10", "--steps", "10"]);
    let text = std::fs::read_to_string(&data).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4] = "{not json";
    let broken = p(dir.path(), "broken.ndjson");
    std::fs::write(&broken, lines.join("\n")).unwrap();
    let ckpt = p(dir.path(), "m.json");
    let out = run(&["train", "--method", "form", "--data", s(&broken), "--steps", "5", "--out", s(&ckpt)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_sample_eval_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = gen(d, "onedot", "d.ndjson", &["--n", "40", "--steps", "40"]);

    let mut ckpts = Vec::new();
    for method in ["o1", "o1o2", "form"] {
        let ckpt = p(d, &format!("{method}.json"));
        let stdout = ok(&["train", "--method", method, "--data", s(&data), "--steps", "60", "--batch-size", "16", "--out", s(&ckpt)]);
        assert!(stdout.contains("final loss"));
        let again = p(d, &format!("{method}-again.json"));
        ok(&["train", "--method", method, "--data", s(&data), "--epochs", "60", "--batch-size", "16", "--out", s(&again)]);
        assert_eq!(std::fs::read(&ckpt).unwrap(), std::fs::read(&again).unwrap());
        ckpts.push(ckpt);
    }
    let form = read_checkpoint(&ckpts[2]).unwrap();
    assert_eq!(form.method.as_str(), "form");
    assert!(form.meta.final_loss.is_finite());
    let o1o2 = read_checkpoint(&ckpts[1]).unwrap();
    assert!(o1o2.velocity.is_some() && o1o2.acceleration.is_some());

    let s1 = p(d, "s1.ndjson");
    let s2 = p(d, "s2.ndjson");
    let s3 = p(d, "s3.ndjson");
    ok(&["sample", "--model", s(&ckpts[2]), "--data", s(&data), "--n", "25", "--M", "100", "--seed", "3", "--out", s(&s1)]);
    ok(&["sample", "--model", s(&ckpts[2]), "--data", s(&data), "--n", "25", "--M", "100", "--seed", "3", "--out", s(&s2)]);
    ok(&["sample", "--model", s(&ckpts[2]), "--data", s(&data), "--n", "25", "--M", "200", "--seed", "3", "--paths", "--out", s(&s3)]);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
    let a = SampleFile::read(&s1).unwrap();
    let b = SampleFile::read(&s3).unwrap();
    assert_eq!(a.samples.len(), 25);
    assert_ne!(a.samples[0].endpoint, b.samples[0].endpoint);
    let path = b.samples[0].path.as_ref().unwrap();
    assert_eq!(path.x.len(), 201);
    assert!(path.v.as_ref().unwrap().iter().all(|v| v[0].hypot(v[1]) < 10.0));

    let report = p(d, "report.json");
    let mut args = vec!["eval", "--data", s(&data), "--M", "50", "--report", s(&report), "--model"];
    args.extend(ckpts.iter().map(|c| s(c)));
    let table = ok(&args);
    assert!(table.contains("ForM") && table.contains("Onedot"));
    let parsed = report_from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.cells.len(), 3);
    let report2 = p(d, "report2.json");
    args[6] = s(&report2);
    ok(&args);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&report2).unwrap());
    args.push("--strict");
    assert_eq!(run(&args).status.code(), Some(2));

    let fig = p(d, "fig.svg");
    ok(&["plot", "--in", s(&data), "--out", s(&fig)]);
    let svg = std::fs::read_to_string(&fig).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let count = |class: &str| doc.descendants().filter(|n| n.has_tag_name("circle") && n.attribute("class") == Some(class)).count();
    assert_eq!((count("source"), count("target")), (40, 40));
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);

    let fig2 = p(d, "fig2.svg");
    ok(&["plot", "--in", s(&data), "--trajectories", "--out", s(&fig2)]);
    let svg2 = std::fs::read_to_string(&fig2).unwrap();
    let doc2 = roxmltree::Document::parse(&svg2).unwrap();
    assert_eq!(doc2.descendants().filter(|n| n.has_tag_name("polyline")).count(), 40);

    let fig3 = p(d, "fig3.svg");
    ok(&["plot", "--in", s(&s3), "--trajectories", "--out", s(&fig3)]);
    roxmltree::Document::parse(&std::fs::read_to_string(&fig3).unwrap()).unwrap();
    let fig4 = p(d, "fig4.svg");
    ok(&["plot", "--in", s(&data), "--trajectories", "--out", s(&fig4)]);
    assert_eq!(svg2, std::fs::read_to_string(&fig4).unwrap());

    let junk = p(d, "junk.ndjson");
    std::fs::write(&junk, "not json\n").unwrap();
    assert_eq!(run(&["plot", "--in", s(&junk), "--out", s(&fig)]).status.code(), Some(2));
}

#[test]
fn form_sampling_without_velocity_rule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = gen(d, "onedot", "d.ndjson", &["--n", "10", "--steps", "10"]);
    let ckpt = p(d, "f.json");
    ok(&["train", "--method", "form", "--data", s(&data), "--steps", "5", "--out", s(&ckpt)]);
    let out = p(d, "s.ndjson");
    assert_eq!(run(&["sample", "--model", s(&ckpt), "--out", s(&out)]).status.code(), Some(2));
    // zero initial velocity has no co-moving frame: numerical failure
    assert_eq!(run(&["sample", "--model", s(&ckpt), "--init", "zero", "--out", s(&out)]).status.code(), Some(3));
    ok(&["sample", "--model", s(&ckpt), "--init", "zero", "--lab-fallback", "--out", s(&out)]);
    ok(&["sample", "--model", s(&ckpt), "--v0", "1,-2", "--integrator", "rk4", "--out", s(&out)]);
}
