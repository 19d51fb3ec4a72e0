use std::fs;
use std::path::Path;

use super::{load_image, save_image, Image};
use crate::{Error, Result, Vec2};

/// Ground-truth target box: continuous center and half-extents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthBox {
    pub center: Vec2,
    pub half_extent: Vec2,
}

impl GroundTruthBox {
    /// Diagonal of the full box, `sqrt((2 hx)^2 + (2 hy)^2)`.
    pub fn diagonal(&self) -> f64 {
        (2.0 * self.half_extent[0]).hypot(2.0 * self.half_extent[1])
    }
}

/// Ordered frames with per-frame ground truth (`None` when the target is
/// marked absent).
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceDataset {
    frames: Vec<Image>,
    ground_truth: Vec<Option<GroundTruthBox>>,
    frame_rate: f64,
}

impl SequenceDataset {
    pub fn new(
        frames: Vec<Image>,
        ground_truth: Vec<Option<GroundTruthBox>>,
        frame_rate: f64,
    ) -> Result<Self> {
        if frames.len() != ground_truth.len() {
            return Err(Error::LengthMismatch(format!(
                "{} frames but {} ground-truth rows",
                frames.len(),
                ground_truth.len()
            )));
        }
        Ok(Self {
            frames,
            ground_truth,
            frame_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn ground_truth(&self) -> &[Option<GroundTruthBox>] {
        &self.ground_truth
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

/// One line per frame: `frame_index cx cy hx hy`, or `frame_index -`.
pub fn format_ground_truth(gt: &[Option<GroundTruthBox>]) -> String {
    let mut out = String::new();
    for (i, row) in gt.iter().enumerate() {
        match row {
            Some(b) => out.push_str(&format!(
                "{} {} {} {} {}\n",
                i, b.center[0], b.center[1], b.half_extent[0], b.half_extent[1]
            )),
            None => out.push_str(&format!("{i} -\n")),
        }
    }
    out
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<Option<GroundTruthBox>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |detail: &str| Error::malformed("ground truth", format!("line {}: {detail}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields == ["-"] {
            rows.push(None);
            continue;
        }
        let index: usize = fields[0].parse().map_err(|_| bad("bad frame index"))?;
        if index != rows.len() {
            return Err(bad("frame indices must be consecutive from 0"));
        }
        match fields.len() {
            2 if fields[1] == "-" => rows.push(None),
            5 => {
                let v: Vec<f64> = fields[1..]
                    .iter()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad number"))?;
                rows.push(Some(GroundTruthBox {
                    center: [v[0], v[1]],
                    half_extent: [v[2], v[3]],
                }));
            }
            _ => return Err(bad("expected `index cx cy hx hy` or `index -`")),
        }
    }
    Ok(rows)
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:04}.ppm")
}

/// Writes `frame_NNNN.ppm`, `gt.txt` and `meta.txt` into `dir`.
pub fn save_dataset(ds: &SequenceDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (i, frame) in ds.frames.iter().enumerate() {
        save_image(frame, dir.join(frame_name(i)))?;
    }
    fs::write(dir.join("gt.txt"), format_ground_truth(&ds.ground_truth))?;
    fs::write(dir.join("meta.txt"), format!("frame_rate {}\n", ds.frame_rate))?;
    Ok(())
}

/// Reads a directory written by [`save_dataset`]. A missing `gt.txt` marks
/// every frame absent.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<SequenceDataset> {
    let dir = dir.as_ref();
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".ppm"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::EmptyInput("dataset has no .ppm frames"));
    }
    let frames = names
        .iter()
        .map(|n| load_image(dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    let gt_path = dir.join("gt.txt");
    let ground_truth = if gt_path.exists() {
        parse_ground_truth(&fs::read_to_string(gt_path)?)?
    } else {
        vec![None; frames.len()]
    };
    let frame_rate = fs::read_to_string(dir.join("meta.txt"))
        .ok()
        .and_then(|s| {
            s.lines()
                .find_map(|l| l.strip_prefix("frame_rate").map(|v| v.trim().parse().ok()))
                .flatten()
        })
        .unwrap_or(30.0);
    SequenceDataset::new(frames, ground_truth, frame_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_text_round_trip() {
        let gt = vec![
            Some(GroundTruthBox {
                center: [1.5, 2.25],
                half_extent: [6.0, 6.0],
            }),
            None,
            Some(GroundTruthBox {
                center: [0.1, 7.0],
                half_extent: [3.0, 4.0],
            }),
        ];
        let text = format_ground_truth(&gt);
        assert_eq!(text, "0 1.5 2.25 6 6\n1 -\n2 0.1 7 3 4\n");
        assert_eq!(parse_ground_truth(&text).unwrap(), gt);
    }

    #[test]
    fn rejects_garbled_rows() {
        assert!(parse_ground_truth("0 1 2 3\n").is_err());
        assert!(parse_ground_truth("1 1 2 3 4\n").is_err());
        assert!(parse_ground_truth("0 a 2 3 4\n").is_err());
    }

    #[test]
    fn diagonal_uses_full_extent() {
        let b = GroundTruthBox {
            center: [0.0, 0.0],
            half_extent: [1.5, 2.0],
        };
        assert_eq!(b.diagonal(), 5.0);
    }
}
