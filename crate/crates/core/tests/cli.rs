use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use msp_core::cli::{run, EXIT_ALGORITHM, EXIT_BAD_ARGS, EXIT_IO, EXIT_OK};
use msp_core::io::{read_mspt, write_mspt, write_ppm};
use msp_core::{Image, Tensor};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Outcome {
    fn json(&self) -> Value {
        serde_json::from_str(self.stdout.trim()).unwrap_or_else(|e| panic!("{e}: {:?}", self.stdout))
    }
}

fn msp(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("msp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ppm(dir: &TempDir, name: &str, image: &Image) -> PathBuf {
    let path = dir.path().join(name);
    write_ppm(image, &path).unwrap();
    path
}

fn mspt(dir: &TempDir, name: &str, tensor: &Tensor) -> PathBuf {
    let path = dir.path().join(name);
    write_mspt(tensor, &path).unwrap();
    path
}

fn labels(dir: &TempDir, name: &str, h: usize, w: usize, v: Vec<u32>) -> PathBuf {
    mspt(dir, name, &Tensor::from_u32(vec![h, w], v).unwrap())
}

fn split(h: usize, w: usize, at: usize) -> Vec<u32> {
    (0..h * w).map(|i| u32::from(i % w >= at)).collect()
}

#[test]
fn superpixel_slic_uniform_grid() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "u.ppm", &Image::from_fn(64, 64, |_, _| [90, 90, 90]).unwrap());
    let out = dir.path().join("l.mspt");
    let vis = dir.path().join("v.ppm");
    let r = msp(&["superpixel", "--algo", "slic", "--lambda", "16", s(&img), "-o", s(&out), "--vis", s(&vis)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(r.json()["num_blocks"], 16);
    let t = read_mspt(&out).unwrap();
    assert_eq!(t.shape(), &[64, 64]);
    assert_eq!(t.as_u32().unwrap().iter().max(), Some(&15));
    assert!(vis.exists());
}

#[test]
fn superpixel_rejects_bad_lambda() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "u.ppm", &Image::from_fn(8, 8, |_, _| [0, 0, 0]).unwrap());
    let out = dir.path().join("l.mspt");
    let r = msp(&["superpixel", "--algo", "slic", "--lambda", "0", s(&img), "-o", s(&out)]);
    assert_eq!(r.code, EXIT_BAD_ARGS);
    assert!(!r.stderr.is_empty());
    let r = msp(&["superpixel", "--algo", "slic", "--lambda", "65", s(&img), "-o", s(&out)]);
    assert_eq!(r.code, EXIT_BAD_ARGS);
    let r = msp(&["superpixel", "--algo", "slic", s(&img), "-o", s(&out)]);
    assert_eq!(r.code, EXIT_BAD_ARGS);
}

#[test]
fn superpixel_quickshift_singletons() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "q.ppm", &Image::from_fn(8, 8, |y, x| [(x * 30) as u8, (y * 30) as u8, 7]).unwrap());
    let out = dir.path().join("l.mspt");
    let vis = dir.path().join("v.ppm");
    let r = msp(&[
        "superpixel", "--algo", "quickshift", "--tau", "0.5", s(&img), "-o", s(&out),
        "--vis", s(&vis), "--vis-mode", "mean-color",
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(r.json()["num_blocks"], 64);
    // tau 0.5 <= sigma 5
    assert!(r.stderr.contains("warning"));
}

#[test]
fn unknown_flags_are_errors() {
    assert_eq!(msp(&["superpixel", "--bogus"]).code, EXIT_BAD_ARGS);
    assert_eq!(msp(&["nope"]).code, EXIT_BAD_ARGS);
    assert_eq!(msp(&["msp-apply", "--scales", "1,x"]).code, EXIT_BAD_ARGS);
    assert_eq!(msp(&["--help"]).code, EXIT_OK);
}

#[test]
fn msp_apply_fixture_and_identity() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "i.ppm", &Image::from_fn(2, 2, |_, _| [10, 20, 30]).unwrap());
    let x = Tensor::from_f32(vec![1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap();
    let feats = mspt(&dir, "x.mspt", &x);
    let out = dir.path().join("y.mspt");

    let r = msp(&["msp-apply", "--image", s(&img), "--features", s(&feats), "--scales", "1", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let mut expected = b"MSPT\x01\x00\x03".to_vec();
    expected.extend([1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]);
    for v in [1.4f32, 3.4, 5.4, 7.4] {
        expected.extend(v.to_le_bytes());
    }
    assert_eq!(std::fs::read(&out).unwrap(), expected);

    let r = msp(&[
        "msp-apply", "--image", s(&img), "--features", s(&feats), "--scales", "1,2", "--alpha", "0", "-o", s(&out),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&feats).unwrap());
}

#[test]
fn msp_apply_two_stage_columns() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "i.ppm", &Image::from_fn(2, 2, |_, x| if x == 0 { [0, 0, 0] } else { [255, 255, 255] }).unwrap());
    let feats = mspt(&dir, "x.mspt", &Tensor::from_f32(vec![1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]).unwrap());
    let out = dir.path().join("y.mspt");
    let r = msp(&["msp-apply", "--image", s(&img), "--features", s(&feats), "--scales", "1,2", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let y = read_mspt(&out).unwrap();
    for (a, b) in y.as_f32().unwrap().iter().zip([1.74, 3.94, 5.74, 7.94]) {
        assert!((a - b).abs() <= 1e-6, "{:?}", y.as_f32());
    }
}

#[test]
fn msp_apply_rejects_decreasing_scales() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "i.ppm", &Image::from_fn(20, 20, |_, _| [1, 2, 3]).unwrap());
    let feats = mspt(&dir, "x.mspt", &Tensor::from_f32(vec![1, 20, 20], vec![0.0; 400]).unwrap());
    let out = dir.path().join("y.mspt");
    let r = msp(&["msp-apply", "--image", s(&img), "--features", s(&feats), "--scales", "300,200", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_BAD_ARGS);
    assert!(r.stderr.contains("λ_i > λ_{i-1}"), "{}", r.stderr);
    assert!(!out.exists());
}

#[test]
fn refine_block_constant_and_plain_argmax() {
    let dir = TempDir::new().unwrap();
    let (h, w) = (16, 16);
    let img = ppm(&dir, "i.ppm", &Image::from_fn(h, w, |_, x| if x < 8 { [200, 0, 0] } else { [0, 0, 200] }).unwrap());
    let gt = split(h, w, 8);
    let one_hot: Vec<f32> = (0..2u32)
        .flat_map(|c| gt.iter().map(move |&g| if g == c { 1.0 } else { 0.0 }))
        .collect();
    let probs = mspt(&dir, "p.mspt", &Tensor::from_f32(vec![2, h, w], one_hot).unwrap());
    let out = dir.path().join("r.mspt");
    let r = msp(&["refine", "--image", s(&img), "--probs", s(&probs), "--scales", "4,8", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(read_mspt(&out).unwrap().as_u32().unwrap(), &gt[..]);

    // alpha 0: plain argmax, even where the map is noisy
    let noisy: Vec<f32> = (0..2 * h * w).map(|i| ((i * 7919) % 13) as f32 / 13.0).collect();
    let expected: Vec<u32> = (0..h * w).map(|p| u32::from(noisy[h * w + p] > noisy[p])).collect();
    let probs = mspt(&dir, "n.mspt", &Tensor::from_f32(vec![2, h, w], noisy).unwrap());
    let r = msp(&["refine", "--image", s(&img), "--probs", s(&probs), "--scales", "4,8", "--alpha", "0", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(read_mspt(&out).unwrap().as_u32().unwrap(), &expected[..]);
}

#[test]
fn metrics_reports() {
    let dir = TempDir::new().unwrap();
    let pred = labels(&dir, "p.mspt", 1, 4, vec![0, 0, 1, 1]);
    let gt = labels(&dir, "g.mspt", 1, 4, vec![0, 1, 1, 1]);
    let r = msp(&["metrics", "--pred", s(&pred), "--gt", s(&gt), "--classes", "2"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let j = r.json();
    assert!((j["miou"].as_f64().unwrap() - 0.583333333333).abs() < 1e-9);
    for key in ["per_class_iou", "pixel_accuracy", "boundary_precision", "boundary_recall", "boundary_fscore"] {
        assert!(j.get(key).is_some(), "missing {key}");
    }

    let r = msp(&["metrics", "--pred", s(&gt), "--gt", s(&gt), "--classes", "2"]);
    assert_eq!(r.json()["miou"], 1.0);

    let shifted = labels(&dir, "s.mspt", 6, 12, split(6, 12, 7));
    let base = labels(&dir, "b.mspt", 6, 12, split(6, 12, 5));
    let f = |tol: &str| {
        msp(&["metrics", "--pred", s(&shifted), "--gt", s(&base), "--classes", "2", "--boundary-tol", tol]).json()
            ["boundary_fscore"]
            .as_f64()
            .unwrap()
    };
    assert_eq!((f("0"), f("2")), (0.0, 1.0));

    let wrong = labels(&dir, "w.mspt", 2, 2, vec![0; 4]);
    assert_eq!(msp(&["metrics", "--pred", s(&wrong), "--gt", s(&gt), "--classes", "2"]).code, EXIT_BAD_ARGS);
}

#[test]
fn spx_eval_reports() {
    let dir = TempDir::new().unwrap();
    let gt = labels(&dir, "g.mspt", 8, 8, split(8, 8, 4));
    let nested = labels(&dir, "n.mspt", 8, 8, (0..64).map(|i| (i / 8) / 4 * 2 + u32::from(i % 8 >= 4)).collect());
    let r = msp(&["spx-eval", "--labels", s(&nested), "--gt", s(&gt)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let j = r.json();
    assert_eq!(j["undersegmentation_error"], 0.0);
    assert_eq!(j["boundary_recall"], 1.0);
    assert_eq!(j["num_blocks"], 4);

    let one = labels(&dir, "o.mspt", 8, 8, vec![0; 64]);
    let j = msp(&["spx-eval", "--labels", s(&one), "--gt", s(&gt), "--tol", "1"]).json();
    assert_eq!(j["boundary_recall"], 0.0);
    assert_eq!(j["undersegmentation_error"], 1.0);
}

#[test]
fn gradcheck_reports() {
    let base = ["gradcheck", "--channels", "3", "--height", "8", "--width", "8", "--seed", "0"];
    let with = |extra: &[&str]| {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        let r = msp(&args);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        r.json()
    };
    let j = with(&["--blocks", "4"]);
    assert_eq!(j["pass"], true);
    assert!(j["max_rel_err"].as_f64().unwrap() <= 1e-4);
    assert_eq!(with(&["--blocks", "4", "--alpha", "0"])["max_rel_err"], 0.0);
    assert!(with(&["--blocks", "1"])["adjoint_err"].as_f64().unwrap() <= 1e-6);
    assert_eq!(with(&["--blocks", "4", "--scales", "3"])["pass"], true);
    assert_eq!(with(&["--blocks", "4"]), j);

    let r = msp(&["gradcheck", "--channels", "1", "--height", "2", "--width", "2", "--blocks", "5", "--seed", "0"]);
    assert_eq!(r.code, EXIT_BAD_ARGS);
}

#[test]
fn malformed_inputs_exit_with_io_code() {
    let dir = TempDir::new().unwrap();
    let img = ppm(&dir, "i.ppm", &Image::from_fn(4, 4, |_, _| [1, 2, 3]).unwrap());
    let bad = dir.path().join("bad.mspt");
    std::fs::write(&bad, b"MSPT\x01\x00\x01\x04\x00\x00\x00\x00").unwrap();
    let out = dir.path().join("o.mspt");
    let r = msp(&["msp-apply", "--image", s(&img), "--features", s(&bad), "--scales", "2", "-o", s(&out)]);
    assert_eq!(r.code, EXIT_IO);
    assert!(r.stderr.contains("byte"), "{}", r.stderr);

    let bad_img = dir.path().join("bad.ppm");
    std::fs::write(&bad_img, b"P6\n4 4\n255\n\x00").unwrap();
    let r = msp(&["superpixel", "--algo", "slic", "--lambda", "2", s(&bad_img), "-o", s(&out)]);
    assert_eq!(r.code, EXIT_IO);

    let missing = dir.path().join("missing.ppm");
    let r = msp(&["superpixel", "--algo", "slic", "--lambda", "2", s(&missing), "-o", s(&out)]);
    assert_eq!(r.code, EXIT_IO);

    // a feature map larger than the image cannot be mapped onto it
    let big = mspt(&dir, "big.mspt", &Tensor::from_f32(vec![1, 8, 8], vec![0.0; 64]).unwrap());
    let r = msp(&["msp-apply", "--image", s(&img), "--features", s(&big), "--scales", "2", "-o", s(&out)]);
    assert_ne!(r.code, EXIT_OK);
    assert_ne!(r.code, EXIT_ALGORITHM);
}
