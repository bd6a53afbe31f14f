#![allow(dead_code)]

pub mod fuzz;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semstream::Frame;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_frame(rng: &mut impl Rng, max_w: usize, max_h: usize) -> Frame {
    let w = rng.random_range(1..=max_w);
    let h = rng.random_range(1..=max_h);
    let c = if rng.random_bool(0.5) { 1 } else { 3 };
    random_frame_sized(rng, w, h, c)
}

pub fn random_frame_sized(rng: &mut impl Rng, w: usize, h: usize, c: usize) -> Frame {
    let mut px = vec![0u8; w * h * c];
    rng.fill(&mut px[..]);
    Frame::new(w, h, c, px).unwrap()
}

/// Textbook definition, written independently: nested loops over
/// (y, x, c), f64 accumulation of squared differences.
pub fn oracle_mse(a: &Frame, b: &Frame) -> f64 {
    let (w, h, c) = a.dims();
    let mut sum = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let d = f64::from(a.sample(x, y, ch)) - f64::from(b.sample(x, y, ch));
                sum += d * d;
            }
        }
    }
    sum / (w * h * c) as f64
}

pub fn oracle_psnr(a: &Frame, b: &Frame) -> f64 {
    let m = oracle_mse(a, b);
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / m).log10()
    }
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn desk_toml() -> PathBuf {
    repo_root().join("scenarios/desk.toml")
}

/// Writes `<dir>/<name>/manifest.txt` over `n` random 32x24 RGB frames.
pub fn write_clip(dir: &std::path::Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let clip = dir.join(name);
    std::fs::create_dir_all(&clip).unwrap();
    let mut rng = rng(seed);
    let mut manifest = String::from("fps 30\n");
    for i in 0..n {
        let f = random_frame_sized(&mut rng, 32, 24, 3);
        let file = format!("f{i:03}.ppm");
        semstream::pnm::store_frame(&f, clip.join(&file)).unwrap();
        manifest.push_str(&file);
        manifest.push('\n');
    }
    let path = clip.join("manifest.txt");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// A small two-clip experiment under `dir`. `top` lands among the top-level
/// keys, `tables` after the last table.
pub fn small_config(dir: &std::path::Path, methods: &str, eps: &str, top: &str, tables: &str) -> PathBuf {
    write_clip(dir, "alpha", 40, 1);
    write_clip(dir, "beta", 40, 2);
    let text = format!(
        r#"seed = 3
out_dir = "out"
methods = {methods}
eps = "{eps}"
videos = ["alpha/manifest.txt", "beta/manifest.txt"]
{top}

[channel]
duration = 2.0
ul = {{ high_snr_db = 20.0, low_snr_db = 5.0, dwell = 0.5, jitter_std_db = 0.5 }}
dl = {{ high_snr_db = 25.0, low_snr_db = 25.0, dwell = 1.0 }}

[rate_map]
ul = [[-inf, 1.5e5], [10.0, 1e6]]
dl = [[-inf, 5e6]]

[proactive]
hold_high = 50

[abr]
probe_interval = 0.3
{tables}"#
    );
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// Every file under `root`, relative path -> contents.
pub fn tree(root: &std::path::Path) -> std::collections::BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut std::collections::BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(root, root, &mut out);
    out
}
