use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use clickmask::io::{read_mask, save_png, write_mask, CocoDocument, MaskMode};
use clickmask::metrics::iou;
use clickmask::sequence::{read_volume, write_volume, Volume};
use clickmask::synth::{translating_square, two_tone_halves, two_tone_suite, write_dataset};
use clickmask::{LabelMask, RasterImage};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clickmask"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_oracle_on_three_instances() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("suite");
    write_dataset(&data, &two_tone_suite(1, 3, 48)).unwrap();
    let out = dir.path().join("res/oracle.csv");
    let o = run(&["eval", "--dataset", s(&data), "--engine", "oracle", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("instance,noc85,noc90,iou1,"));
    assert!(lines[4].starts_with("mean,1.000000,1.000000,"));
    assert!(dir.path().join("res/oracle_miou.csv").is_file());
    assert!(stdout(&o).contains("NoC@90: 1.000"));
}

#[test]
fn eval_graphcut_two_tone_suite() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("suite");
    write_dataset(&data, &two_tone_suite(4, 5, 64)).unwrap();
    let out = dir.path().join("gc.csv");
    let o = run(&["eval", "--dataset", s(&data), "--engine", "graphcut", "--workers", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mean = csv.lines().last().unwrap();
    let noc90: f64 = mean.split(',').nth(2).unwrap().parse().unwrap();
    assert!(noc90 <= 3.0, "{mean}");
}

#[test]
fn eval_input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("images")).unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["eval", "--dataset", s(dir.path()), "--engine", "oracle", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["eval", "--dataset", s(dir.path()), "--engine", "nope", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["eval", "--dataset", s(dir.path()), "--engine", "oracle", "--thresholds", "0.9,abc", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn segment_two_tone_halves() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_tone_halves(40, 30);
    let image = dir.path().join("halves.png");
    save_png(&inst.image, &image).unwrap();
    let out = dir.path().join("mask.png");
    let o = run(&["segment", "--image", s(&image), "--clicks", "5,15,+;30,15,-", "--engine", "graphcut", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_mask(&out).unwrap().select(255), inst.gt);

    for clicks in ["5,5,-", "", "5,5"] {
        let o = run(&["segment", "--image", s(&image), "--clicks", clicks, "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(1), "clicks {clicks:?}");
    }
    let o = run(&["segment", "--image", s(&image), "--clicks", "99,5,+", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

fn write_frames(dir: &Path, frames: &[RasterImage]) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for (i, f) in frames.iter().enumerate() {
        save_png(f, &dir.join(format!("img_{i:03}.png"))).unwrap();
    }
    dir.to_path_buf()
}

#[test]
fn propagate_identical_and_translating() {
    let dir = tempfile::tempdir().unwrap();
    let (frames, masks) = translating_square(5, 64, 16, 4, 11);
    let reference = dir.path().join("ref.png");
    write_mask(&masks[0].to_label_mask(1), MaskMode::Grayscale, &reference).unwrap();

    let same = write_frames(&dir.path().join("same"), &vec![frames[0].clone(); 3]);
    let out = dir.path().join("out_same");
    let refs = format!("0:{}", reference.display());
    let o = run(&["propagate", "--frames", s(&same), "--refs", &refs, "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        let m = read_mask(&out.join(format!("frame_{k:04}.png"))).unwrap();
        assert_eq!(m.foreground(), masks[0]);
    }

    let moving = write_frames(&dir.path().join("moving"), &frames);
    let out = dir.path().join("out_moving");
    let o = run(&["propagate", "--frames", s(&moving), "--refs", &refs, "--out", s(&out)]);
    assert!(o.status.success());
    for (k, gt) in masks.iter().enumerate() {
        let m = read_mask(&out.join(format!("frame_{k:04}.png"))).unwrap();
        assert!(iou(&m.foreground(), gt).unwrap() >= 0.9, "frame {k}");
    }

    let o = run(&["propagate", "--frames", s(&moving), "--refs", "", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["propagate", "--frames", s(&moving), "--refs", &format!("9:{}", reference.display()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convert_volume_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u16> = (0..5 * 4 * 3).map(|i| (i * 1031 % 65536) as u16).collect();
    let vol = Volume::new([5, 4, 3], [1.0; 3], data).unwrap();
    let header = dir.path().join("scan.vol");
    write_volume(&vol, &header).unwrap();
    for axis in ["0", "1", "2"] {
        let frames = dir.path().join(format!("frames_{axis}"));
        let o = run(&["convert", "volume2frames", "--input", s(&header), "--axis", axis, "--out", s(&frames)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let back = dir.path().join(format!("back_{axis}.vol"));
        let o = run(&["convert", "frames2volume", "--frames", s(&frames), "--axis", axis, "--out", s(&back)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let got = read_volume(&back).unwrap();
        assert_eq!((got.dims, &got.data), (vol.dims, &vol.data), "axis {axis}");
    }
    let o = run(&["convert", "volume2frames", "--input", s(&header), "--axis", "3", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convert_mask_to_coco() {
    let dir = tempfile::tempdir().unwrap();
    let masks = dir.path().join("masks");
    std::fs::create_dir_all(&masks).unwrap();
    let mut m = LabelMask::zeros(10, 8);
    for y in 1..4 {
        for x in 1..4 {
            m.set(x, y, 2);
            m.set(x + 5, y + 3, 5);
        }
    }
    write_mask(&m, MaskMode::Grayscale, &masks.join("a.png")).unwrap();
    let out = dir.path().join("coco.json");
    let o = run(&["convert", "mask2coco", "--masks", s(&masks), "--epsilon", "0", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = CocoDocument::load(&out).unwrap();
    assert_eq!(doc.images.len(), 1);
    assert_eq!(doc.annotations.len(), 2);
    assert_eq!(doc.annotations.iter().map(|a| a.area).sum::<f64>(), 18.0);
    let ids: Vec<u32> = doc.categories.iter().map(|c| c.id).collect();
    assert_eq!(ids, vec![2, 5]);
}

#[test]
fn serve_prints_bound_port() {
    let mut child = bin()
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    let port: u16 = line.trim().rsplit(':').next().unwrap().parse().unwrap();
    assert!(line.starts_with("listening on 127.0.0.1:"));
    assert_ne!(port, 0);
}

#[test]
fn serve_rejects_unknown_engine() {
    let o = run(&["serve", "--port", "0", "--engine", "deeplab"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("graphcut") && err.contains("randomwalker") && err.contains("geodesic"), "{err}");
}
