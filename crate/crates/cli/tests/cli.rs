use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sbnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbnd"))
        .args(args)
        .env_remove("SBND_THREADS")
        .output()
        .expect("run sbnd")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_code(dir: &Path, m: &str, t: &str) -> String {
    let path = dir.join(format!("bch_{m}_{t}.txt"));
    let p = path.to_str().unwrap().to_string();
    let out = sbnd(&["code", "--family", "bch", "--m", m, "--t", t, "--out", &p]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    p
}

#[test]
fn code_reports_bch_parameters() {
    let out = sbnd(&["code", "--family", "bch", "--m", "5", "--t", "2", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("(31,21,5)"));
    assert!(text(&out.stderr).contains("config: sbnd"));
    let out = sbnd(&["code", "--m", "6", "--t", "2"]);
    assert!(text(&out.stdout).contains("(63,51,5)"));
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(sbnd(&["code", "--m", "99"]).status.code(), Some(2));
    assert_eq!(sbnd(&["code", "--m", "4", "--t", "9"]).status.code(), Some(2));
    assert_eq!(sbnd(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let code = write_code(dir.path(), "4", "2");
    let out_path = dir.path().join("x.sbnd");
    let out = sbnd(&[
        "build", "--code", &code, "--snr-db", "3", "--method", "magic", "--count", "10", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("chan, uniw, is, unis"), "{}", text(&out.stderr));
    assert!(!out_path.exists());
}

#[test]
fn io_and_data_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.txt");
    let out = sbnd(&["eval", "--code", missing.to_str().unwrap(), "--snr-list", "3"]);
    assert_eq!(out.status.code(), Some(4));

    let bogus = dir.path().join("bogus.sbnd");
    fs::write(&bogus, b"not a dataset at all, but long enough to hold a header........................").unwrap();
    let out = sbnd(&["stats", "--dataset", bogus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn build_stats_and_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let code = write_code(dir.path(), "5", "2");
    let data = dir.path().join("unis.sbnd");
    let data_s = data.to_str().unwrap();
    let out = sbnd(&[
        "--threads", "3", "build", "--code", &code, "--snr-db", "3", "--method", "unis", "--target", "ml",
        "--count", "2046", "--seed", "4", "--out", data_s, "--store-chan",
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("2046 records"));
    assert!(Path::new(&format!("{data_s}.stats.csv")).exists());
    assert!(Path::new(&format!("{data_s}.meta")).exists());

    let csv = dir.path().join("w.csv");
    let syn = dir.path().join("s.csv");
    let out = sbnd(&[
        "stats", "--dataset", data_s, "--code", &code, "--out", csv.to_str().unwrap(), "--syndrome-out",
        syn.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let weights = fs::read_to_string(&csv).unwrap();
    assert!(weights.starts_with("weight,count,fraction\n0,0,0\n"));
    let syndromes = fs::read_to_string(&syn).unwrap();
    assert_eq!(syndromes.lines().count(), 1 + 1023);
    assert!(syndromes.lines().skip(1).all(|l| l.ends_with(",2")));

    let fer = dir.path().join("fer.csv");
    let out = sbnd(&[
        "eval", "--code", &code, "--decoder", "osd", "--snr-list", "2,3", "--min-errors", "50", "--seed", "1",
        "--out", fer.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = fs::read_to_string(&fer).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("ebn0_db,frames,frame_errors,fer,bit_errors,ber"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let code = write_code(dir.path(), "5", "2");
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let data = dir.path().join(format!("is_{threads}.sbnd"));
        let out = Command::new(env!("CARGO_BIN_EXE_sbnd"))
            .args(["build", "--code", &code, "--snr-db", "3", "--method", "is", "--count", "3000", "--seed", "8"])
            .args(["--out", data.to_str().unwrap()])
            .env("SBND_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        assert!(text(&out.stderr).contains(&format!("--threads {threads}")));
        files.push(fs::read(&data).unwrap());
    }
    assert!(files[0] == files[1]);
}

#[test]
fn config_file_supplies_defaults_that_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let code = write_code(dir.path(), "4", "2");
    let conf = dir.path().join("run.conf");
    let data = dir.path().join("d.sbnd");
    fs::write(
        &conf,
        format!(
            "# build config\ncode = {code}\nsnr_db = 3\nmethod = chan\ncount = 100\nseed = 5\nout = {}\nstore-chan = true\n",
            data.display()
        ),
    )
    .unwrap();
    let out = sbnd(&["build", "--config", conf.to_str().unwrap(), "--count", "40"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let log = text(&out.stderr);
    assert!(log.contains("--count 40 --seed 5"), "{log}");
    assert!(log.contains("--store-chan"), "{log}");
    assert!(text(&out.stdout).contains("40 records"));
}

#[test]
fn eval_through_serve_bridge_matches_native_osd() {
    let dir = tempfile::tempdir().unwrap();
    let code = write_code(dir.path(), "5", "2");
    let args = ["--snr-list", "3", "--min-errors", "60", "--seed", "11"];
    let native = sbnd(&[&["eval", "--code", &code, "--decoder", "osd"][..], &args].concat());
    assert!(native.status.success());
    let peer = format!("{} serve --code {code}", env!("CARGO_BIN_EXE_sbnd"));
    let bridged = sbnd(&[&["eval", "--code", &code, "--decoder", "bridge", "--bridge", &peer][..], &args].concat());
    assert!(bridged.status.success(), "{}", text(&bridged.stderr));
    let row = |o: &Output| -> Vec<f64> {
        let s = text(&o.stdout);
        let line = s.lines().last().unwrap().to_string();
        line.split(',').map(|v| v.parse().unwrap()).collect()
    };
    let (a, b) = (row(&native), row(&bridged));
    assert_eq!(a[1], b[1], "frames");
    let se = (a[3] * (1.0 - a[3]) / a[1]).sqrt();
    assert!((a[3] - b[3]).abs() <= 3.0 * se, "native {a:?} bridge {b:?}");
}
