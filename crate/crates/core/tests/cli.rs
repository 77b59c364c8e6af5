use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fc2n::config::RunConfig;
use fc2n::data::synthetic::synthetic_image;
use fc2n::data::{load_image, save_image};
use fc2n::model::{ModelConfig, SkipMode};
use fc2n::train::{checkpoint_path, Checkpoint, FINAL_CHECKPOINT, LOG_FILE};
use fc2n::Error;

fn fc2n(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fc2n"))
        .args(args)
        .current_dir(cwd)
        .env("FC2N_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn params_prints_published_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let light = write(dir.path(), "light.cfg", "# lightweight preset\nscale = 4\n");
    let out = fc2n(&["params", "--config", light.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("params: 1314000 (1,314K)"), "{text}");
    assert!(text.contains("(82.6G)"), "{text}");

    let large = write(dir.path(), "large.cfg", "n = 16\nm = 8\nscale = 2\n");
    let text = stdout(&fc2n(&["params", "--config", large.to_str().unwrap()], dir.path()));
    assert!(text.contains("params: 9822932 (9.82M)"), "{text}");
}

#[test]
fn configuration_errors_exit_one_and_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let no_data = write(dir.path(), "a.cfg", "scale = 2\ntotal_steps = 5\n");
    let out = fc2n(&["train", "--config", no_data.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("data_dir"), "{}", stderr(&out));
    assert!(!dir.path().join("runs").exists(), "nothing is written before validation");

    let typos = write(dir.path(), "b.cfg", "scale = 2\nbatchsize = 4\n\nlr_init = fast\n");
    let out = fc2n(&["params", "--config", typos.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 2") && err.contains("batchsize"), "{err}");
    assert!(err.contains("line 4") && err.contains("lr_init"), "{err}");

    let bad_scale = write(dir.path(), "c.cfg", "scale = 5\n");
    assert_eq!(fc2n(&["params", "--config", bad_scale.to_str().unwrap()], dir.path()).status.code(), Some(1));
    assert_eq!(fc2n(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(fc2n(&["--help"], dir.path()).status.code(), Some(0));
    let missing = fc2n(&["params", "--config", "nope.cfg"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

fn training_setup(dir: &Path, steps: u64) -> PathBuf {
    let data = dir.join("train");
    std::fs::create_dir_all(&data).unwrap();
    for i in 0..3 {
        save_image(&synthetic_image(36, 40, i), data.join(format!("{i}.png"))).unwrap();
    }
    let text = format!(
        "n = 1\nm = 1\nbase_width = 4\nexpand_width = 8\nscale = 2\n\
         batch_size = 2\npatch_size = 8\ntotal_steps = {steps}\nlr_init = 1e-3\n\
         checkpoint_every = 5\nvalidate_every = 5\nseed = 7\n\
         data_dir = {}\nval_dir = {}\nout_dir = {}\n",
        data.display(),
        data.display(),
        dir.join("run").display()
    );
    write(dir, "tiny.cfg", &text)
}

#[test]
fn train_resume_eval_and_infer() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = training_setup(root, 10);
    let out = fc2n(&["train", "--config", cfg.to_str().unwrap()], root);
    assert!(out.status.success(), "{}", stderr(&out));
    let run = root.join("run");
    let log = std::fs::read_to_string(run.join(LOG_FILE)).unwrap();
    assert_eq!(log.lines().count(), 10);
    assert!(checkpoint_path(&run, 5).is_file());
    let final_ckpt = run.join(FINAL_CHECKPOINT);
    assert_eq!(Checkpoint::load(&final_ckpt).unwrap().step, 10);

    // resuming from step 5 with the same configuration reproduces step 10 exactly
    let before = std::fs::read(&final_ckpt).unwrap();
    let ck5 = checkpoint_path(&run, 5);
    let out = fc2n(&["train", "--config", cfg.to_str().unwrap(), "--resume", ck5.to_str().unwrap()], root);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read(&final_ckpt).unwrap(), before);
    assert_eq!(std::fs::read_to_string(run.join(LOG_FILE)).unwrap(), log);

    // and a different architecture refuses the checkpoint
    let other = write(root, "other.cfg", &std::fs::read_to_string(&cfg).unwrap().replace("n = 1\n", "n = 2\n"));
    let out = fc2n(&["train", "--config", other.to_str().unwrap(), "--resume", ck5.to_str().unwrap()], root);
    assert_eq!(out.status.code(), Some(1));

    let ckpt = final_ckpt.to_str().unwrap();
    let data = root.join("train");
    let out = fc2n(&["eval", "--ckpt", ckpt, "--data", data.to_str().unwrap(), "--scale", "3"], root);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("scale"));

    let csv = root.join("scores.csv");
    let out = fc2n(
        &["eval", "--ckpt", ckpt, "--data", data.to_str().unwrap(), "--scale", "2", "--ensemble", "geo", "--csv", csv.to_str().unwrap()],
        root,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert!(rows.starts_with("image,psnr_db,ssim\n0.png,"));

    let lr = root.join("lr.png");
    save_image(&synthetic_image(9, 11, 5), &lr).unwrap();
    let sr_a = root.join("a.png");
    let sr_b = root.join("b.png");
    for path in [&sr_a, &sr_b] {
        let out = fc2n(
            &["infer", "--ckpt", ckpt, "--input", lr.to_str().unwrap(), "--output", path.to_str().unwrap(), "--ensemble", "geo+range"],
            root,
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(load_image(&sr_a).unwrap().dims(), (18, 22));
    assert_eq!(std::fs::read(&sr_a).unwrap(), std::fs::read(&sr_b).unwrap());
}

#[test]
fn bicubic_eval_writes_a_default_csv() {
    let dir = tempfile::tempdir().unwrap();
    let hr = dir.path().join("Shapes");
    std::fs::create_dir(&hr).unwrap();
    save_image(&synthetic_image(40, 44, 0), hr.join("s0.png")).unwrap();
    let out = fc2n(&["eval", "--ckpt", "bicubic", "--data", hr.to_str().unwrap(), "--scale", "4", "--ensemble", "geo+range"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("MEAN"));
    assert!(dir.path().join("eval_Shapes_x4_geo_range.csv").is_file());
    let bad = fc2n(&["eval", "--ckpt", "bicubic", "--data", hr.to_str().unwrap(), "--scale", "2", "--ensemble", "all"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn downsample_crops_then_shrinks() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("photo.png");
    save_image(&synthetic_image(100, 100, 3), &input).unwrap();
    let out = fc2n(&["downsample", "--input", input.to_str().unwrap(), "--scale", "3"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let lr = load_image(dir.path().join("photox3.png")).unwrap();
    assert_eq!(lr.dims(), (33, 33));

    let same = dir.path().join("same.png");
    let out = fc2n(
        &["downsample", "--input", input.to_str().unwrap(), "--scale", "1", "--no-antialias", "--output", same.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(load_image(&same).unwrap(), load_image(&input).unwrap());
    assert_eq!(fc2n(&["downsample", "--input", input.to_str().unwrap(), "--scale", "0"], dir.path()).status.code(), Some(1));
}

#[test]
fn config_text_round_trips() {
    let text = "n = 3\nm = 2\nbase_width = 16\nexpand_width = 64\nscale = 3\n\
                weighted_wgff = off\nweighted_cg = yes\nweighted_cb = 0\n\
                lr_init = 1e-4\ntotal_steps = 4.0e5\nlr_halve_every = 2e5\n";
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.model.variant_name(), "010");
    assert_eq!(cfg.train.total_steps, 400_000);
    assert_eq!(cfg.train.scale, 3);
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), RunConfig { data_dir: None, ..cfg });

    let res = RunConfig::parse("skip_mode = residual\nweighted_wgff = false\nweighted_cg = false\nweighted_cb = false\n").unwrap();
    assert_eq!(res.model, ModelConfig::lightweight(2).residual_baseline());
    assert_eq!(res.model.skip_mode, SkipMode::Residual);
    // the residual baseline cannot carry weighting factors
    let clash = RunConfig::parse("skip_mode = residual\n").unwrap();
    assert!(matches!(clash.validate(), Err(Error::Config(_))));

    let err = RunConfig::parse("n = 2\nn = 3\nfoo\n").unwrap_err().to_string();
    assert!(err.contains("line 2: duplicate key `n`") && err.contains("line 3"), "{err}");
}
