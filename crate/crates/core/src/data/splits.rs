use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::graph::{Graph, Masks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProportions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitProportions {
    fn default() -> Self {
        SplitProportions {
            train: 0.48,
            val: 0.32,
            test: 0.20,
        }
    }
}

/// Where a run's masks came from; recorded with the results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitSource {
    File,
    Generated { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub masks: Masks,
    pub source: SplitSource,
    pub warnings: Vec<String>,
}

/// `<dataset_dir>/splits/split_<i>.txt`
pub fn split_path(dataset_dir: &Path, split_index: usize) -> PathBuf {
    dataset_dir
        .join("splits")
        .join(format!("split_{split_index}.txt"))
}

/// Reads a split file of three lines (train, validation, test), each listing
/// node indices separated by whitespace or commas. Falls back to
/// [`generate_splits`] with `seed` when the file does not exist.
pub fn load_splits<T>(
    g: &Graph<T>,
    dataset_dir: &Path,
    split_index: usize,
    seed: u64,
) -> Result<Splits> {
    let path = split_path(dataset_dir, split_index);
    if !path.exists() {
        let (masks, mut warnings) = generate_splits(g, SplitProportions::default(), seed)?;
        warnings.insert(
            0,
            format!("{} not found; generated stratified split from seed {seed}", path.display()),
        );
        return Ok(Splits {
            masks,
            source: SplitSource::Generated { seed },
            warnings,
        });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let masks = parse_split_text(&text, g.num_nodes()).map_err(|msg| Error::Split {
        path: path.clone(),
        msg,
    })?;
    Ok(Splits {
        masks,
        source: SplitSource::File,
        warnings: Vec::new(),
    })
}

fn parse_split_text(text: &str, n: usize) -> std::result::Result<Masks, String> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 3 || lines[3..].iter().any(|l| !l.trim().is_empty()) {
        return Err(format!("expected 3 lines (train, val, test), found {}", lines.len()));
    }
    let mut masks = Masks::empty(n);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (part, line) in lines[..3].iter().enumerate() {
        for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            let i: usize = tok
                .parse()
                .map_err(|_| format!("line {}: bad node index `{tok}`", part + 1))?;
            if i >= n {
                return Err(format!("line {}: node {i} outside 0..{n}", part + 1));
            }
            if let Some(prev) = owner[i] {
                if prev != part {
                    return Err(format!("node {i} appears in partitions {prev} and {part}"));
                }
            }
            owner[i] = Some(part);
            match part {
                0 => masks.train[i] = true,
                1 => masks.val[i] = true,
                _ => masks.test[i] = true,
            }
        }
    }
    Ok(masks)
}

/// Per-class stratified random split. Within each class, `round(p·n_c)`
/// nodes go to train and validation and the remainder to test. Classes with
/// fewer than three nodes go entirely to train.
pub fn generate_splits<T>(
    g: &Graph<T>,
    proportions: SplitProportions,
    seed: u64,
) -> Result<(Masks, Vec<String>)> {
    let SplitProportions { train, val, test } = proportions;
    if [train, val, test].iter().any(|p| !(0.0..=1.0).contains(p))
        || ((train + val + test) - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split proportions {train}/{val}/{test} must be non-negative and sum to 1"
        )));
    }
    let n = g.num_nodes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); g.num_classes()];
    for (i, &l) in g.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Masks::empty(n);
    let mut warnings = Vec::new();
    for (class, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let nc = members.len();
        if nc == 0 {
            continue;
        }
        if nc < 3 {
            warnings.push(format!(
                "class {class} has {nc} node(s); all assigned to the training split"
            ));
            for &i in members.iter() {
                masks.train[i] = true;
            }
            continue;
        }
        let n_train = ((train * nc as f64).round() as usize).min(nc);
        let n_val = ((val * nc as f64).round() as usize).min(nc - n_train);
        for (k, &i) in members.iter().enumerate() {
            if k < n_train {
                masks.train[i] = true;
            } else if k < n_train + n_val {
                masks.val[i] = true;
            } else {
                masks.test[i] = true;
            }
        }
    }
    Ok((masks, warnings))
}
