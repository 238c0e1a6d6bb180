//! Dense score grids over `(u, d)` and parameter sweeps over them, written
//! out as long-format CSV for plotting.

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::numfmt::{format_sig, MACHINE_DIGITS};
use crate::scoring::{ConfigError, Maxima, Scorer, ScoringConfig, SiKind, SiTransform, VoteTally};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("maxima ({have}) cannot cover the grid for kind {kind}: need at least {need}")]
    InconsistentMaxima { kind: SiKind, need: u64, have: u64 },
    #[error("grid step must be at least 1")]
    ZeroStep,
    #[error("sweep list `{0}` is empty")]
    EmptySweepList(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sweep point {point}: {source}")]
    Sweep {
        point: SweepPoint,
        #[source]
        source: Box<GridError>,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Axes, fixed maxima and scorer of one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Inclusive upper end of the up-vote axis.
    pub u_range: u64,
    /// Inclusive upper end of the down-vote axis.
    pub d_range: u64,
    pub step: u64,
    pub maxima: Maxima,
    pub scorer: Scorer,
}

impl GridSpec {
    /// The `[0, 1000] x [0, 1000]` layout with `n_max = 2000`.
    pub fn full_scale(scorer: Scorer) -> Self {
        Self {
            u_range: 1000,
            d_range: 1000,
            step: 1,
            maxima: Maxima::new(2000, 1000, 1000),
            scorer,
        }
    }

    pub fn axis_len(range: u64, step: u64) -> usize {
        (range / step) as usize + 1
    }

    pub fn dims(&self) -> (usize, usize) {
        (
            Self::axis_len(self.u_range, self.step),
            Self::axis_len(self.d_range, self.step),
        )
    }

    /// Checks the step, scorer parameters and that every cell fits under the
    /// fixed maxima for the scorer's kind.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.step == 0 {
            return Err(GridError::ZeroStep);
        }
        self.scorer.validate()?;
        if let Scorer::Improved(c) = self.scorer {
            let (need, have) = match c.si_kind {
                k if k.uses_n_max() => (self.u_range.saturating_add(self.d_range), self.maxima.n_max()),
                SiKind::UpVote => (self.u_range, self.maxima.u_max()),
                _ => (self.d_range, self.maxima.d_max()),
            };
            if have < need {
                return Err(GridError::InconsistentMaxima {
                    kind: c.si_kind,
                    need,
                    have,
                });
            }
        }
        Ok(())
    }
}

/// Row-major matrix of scores: row `i` is `u = u_axis[i]`, column `j` is
/// `d = d_axis[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    pub u_axis: Vec<u64>,
    pub d_axis: Vec<u64>,
    pub values: Vec<f64>,
    pub scorer: Scorer,
    pub maxima: Maxima,
}

impl ScoreGrid {
    pub fn rows(&self) -> usize {
        self.u_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.d_axis.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    /// `(u, d, score)` in u-major order.
    pub fn cells(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.u_axis.iter().enumerate().flat_map(move |(i, &u)| {
            self.d_axis
                .iter()
                .enumerate()
                .map(move |(j, &d)| (u, d, self.get(i, j)))
        })
    }

    /// `# key=value` lines describing how the grid was produced.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        let mut meta = vec![("scorer", self.scorer.name().to_string())];
        match self.scorer {
            Scorer::OriginalWilson { z, bound } => {
                meta.push(("z", z.to_string()));
                meta.push(("bound", bound.to_string()));
            }
            Scorer::AverageRating => {}
            Scorer::Improved(c) => {
                meta.push(("z", c.z.to_string()));
                meta.push(("p_weight", c.p_weight.to_string()));
                meta.push(("kind", c.si_kind.to_string()));
                meta.push(("transform", c.si_transform.name().to_string()));
                if let SiTransform::Polynomial(a) = c.si_transform {
                    meta.push(("poly_a", a.to_string()));
                }
                meta.push(("bound", c.bound.to_string()));
                meta.push(("si_denominator", c.si_denominator.as_str().to_string()));
            }
        }
        meta.push(("n_max", self.maxima.n_max().to_string()));
        meta.push(("u_max", self.maxima.u_max().to_string()));
        meta.push(("d_max", self.maxima.d_max().to_string()));
        meta
    }
}

/// Evaluates the scorer at every `(i * step, j * step)` cell.
pub fn grid_scores(spec: &GridSpec) -> Result<ScoreGrid, GridError> {
    spec.validate()?;
    let u_axis: Vec<u64> = (0..=spec.u_range).step_by(spec.step as usize).collect();
    let d_axis: Vec<u64> = (0..=spec.d_range).step_by(spec.step as usize).collect();
    let mut values = Vec::with_capacity(u_axis.len() * d_axis.len());
    for &u in &u_axis {
        values.extend(
            d_axis
                .iter()
                .map(|&d| spec.scorer.score(VoteTally::new(u, d), spec.maxima)),
        );
    }
    Ok(ScoreGrid {
        u_axis,
        d_axis,
        values,
        scorer: spec.scorer,
        maxima: spec.maxima,
    })
}

/// One combination of swept parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub z: f64,
    pub p_weight: f64,
    pub kind: SiKind,
    pub transform: SiTransform,
}

impl SweepPoint {
    /// Deterministic file stem, e.g. `z2_p0.5_whole_linear`.
    pub fn file_stem(&self) -> String {
        format!("z{}_p{}_{}_{}", self.z, self.p_weight, self.kind, self.transform)
    }
}

impl std::fmt::Display for SweepPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(z={}, P={}, {}, {})",
            self.z, self.p_weight, self.kind, self.transform
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Axes and maxima. If its scorer is `Improved`, its bound, floor and
    /// denominator carry over to every point.
    pub base: GridSpec,
    pub z_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub kinds: Vec<SiKind>,
    pub transforms: Vec<SiTransform>,
}

impl SweepSpec {
    fn template(&self) -> ScoringConfig {
        match self.base.scorer {
            Scorer::Improved(c) => c,
            Scorer::OriginalWilson { z, bound } => ScoringConfig {
                z,
                bound,
                ..Default::default()
            },
            Scorer::AverageRating => ScoringConfig::default(),
        }
    }

    /// Points in z, P, kind, transform nesting order (z outermost).
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out =
            Vec::with_capacity(self.z_values.len() * self.p_values.len() * self.kinds.len() * self.transforms.len());
        for &z in &self.z_values {
            for &p_weight in &self.p_values {
                for &kind in &self.kinds {
                    for &transform in &self.transforms {
                        out.push(SweepPoint {
                            z,
                            p_weight,
                            kind,
                            transform,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn spec_for(&self, point: &SweepPoint) -> GridSpec {
        let config = ScoringConfig {
            z: point.z,
            p_weight: point.p_weight,
            si_kind: point.kind,
            si_transform: point.transform,
            ..self.template()
        };
        GridSpec {
            scorer: Scorer::Improved(config),
            ..self.base
        }
    }

    /// Validates every point without computing any grid.
    pub fn validate(&self) -> Result<(), GridError> {
        for (name, empty) in [
            ("z_values", self.z_values.is_empty()),
            ("p_values", self.p_values.is_empty()),
            ("kinds", self.kinds.is_empty()),
            ("transforms", self.transforms.is_empty()),
        ] {
            if empty {
                return Err(GridError::EmptySweepList(name));
            }
        }
        for point in self.points() {
            self.spec_for(&point).validate().map_err(|e| GridError::Sweep {
                point,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// One grid per parameter combination, in [`SweepSpec::points`] order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<(SweepPoint, ScoreGrid)>, GridError> {
    spec.validate()?;
    spec.points()
        .into_iter()
        .map(|point| {
            grid_scores(&spec.spec_for(&point))
                .map(|g| (point, g))
                .map_err(|e| GridError::Sweep {
                    point,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Writes `# key=value` metadata, the `u,d,score` header and one row per
/// cell. Scores carry 12 significant digits.
pub fn emit_csv<W: Write>(grid: &ScoreGrid, out: W) -> io::Result<()> {
    let mut out = BufWriter::with_capacity(1 << 16, out);
    for (key, value) in grid.metadata() {
        writeln!(out, "# {key}={value}")?;
    }
    out.write_all(b"u,d,score\n")?;
    for (u, d, score) in grid.cells() {
        writeln!(out, "{u},{d},{}", format_sig(score, MACHINE_DIGITS))?;
    }
    out.flush()
}

pub fn write_csv_file(grid: &ScoreGrid, path: impl AsRef<Path>) -> io::Result<()> {
    emit_csv(grid, File::create(path)?)
}

/// Contents of a grid CSV as read back from disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvGrid {
    pub metadata: Vec<(String, String)>,
    pub cells: Vec<(u64, u64, f64)>,
}

impl CsvGrid {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses the format produced by [`emit_csv`].
pub fn read_csv<R: BufRead>(input: R) -> Result<CsvGrid, GridError> {
    let mut grid = CsvGrid::default();
    let mut seen_header = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let parse_err = |message: String| GridError::Parse { line: lineno, message };
        if let Some(meta) = line.strip_prefix('#') {
            let (k, v) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_err("bad metadata".into()))?;
            grid.metadata.push((k.to_string(), v.to_string()));
            continue;
        }
        if !seen_header {
            if line != "u,d,score" {
                return Err(parse_err(format!("expected header `u,d,score`, got `{line}`")));
            }
            seen_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| fields.next().ok_or_else(|| parse_err(format!("missing {name}")));
        let u = next("u")?.parse().map_err(|e| parse_err(format!("u: {e}")))?;
        let d = next("d")?.parse().map_err(|e| parse_err(format!("d: {e}")))?;
        let s = next("score")?.parse().map_err(|e| parse_err(format!("score: {e}")))?;
        grid.cells.push((u, d, s));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Bound;

    fn improved(z: f64, p: f64) -> Scorer {
        Scorer::Improved(ScoringConfig {
            z,
            p_weight: p,
            ..Default::default()
        })
    }

    #[test]
    fn p_zero_is_pure_whole_index() {
        let spec = GridSpec {
            step: 50,
            ..GridSpec::full_scale(improved(2.0, 0.0))
        };
        let grid = grid_scores(&spec).unwrap();
        assert_eq!(grid.dims(), (21, 21));
        for (u, d, s) in grid.cells() {
            assert_eq!(s, (u + d) as f64 / 2000.0);
        }
        assert_eq!(grid.get(20, 20), 1.0);
    }

    #[test]
    fn p_one_matches_original_wilson() {
        let base = GridSpec {
            step: 25,
            ..GridSpec::full_scale(improved(2.0, 1.0))
        };
        let a = grid_scores(&base).unwrap();
        let b = grid_scores(&GridSpec {
            scorer: Scorer::OriginalWilson {
                z: 2.0,
                bound: Bound::Lower,
            },
            ..base
        })
        .unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn original_wilson_unanimous_cell() {
        let spec = GridSpec {
            u_range: 20,
            d_range: 20,
            ..GridSpec::full_scale(Scorer::OriginalWilson {
                z: 2.0,
                bound: Bound::Lower,
            })
        };
        let grid = grid_scores(&spec).unwrap();
        assert!((grid.get(10, 0) - 10.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_maxima_that_do_not_cover() {
        let spec = GridSpec {
            maxima: Maxima::new(1500, 1000, 1000),
            ..GridSpec::full_scale(improved(2.0, 0.5))
        };
        assert!(matches!(
            grid_scores(&spec),
            Err(GridError::InconsistentMaxima {
                need: 2000,
                have: 1500,
                ..
            })
        ));
        let wilson = GridSpec {
            scorer: Scorer::AverageRating,
            ..spec
        };
        assert!(grid_scores(&wilson).is_ok());
        let up = Scorer::Improved(ScoringConfig {
            si_kind: SiKind::UpVote,
            ..Default::default()
        });
        let spec = GridSpec {
            maxima: Maxima::new(1, 1000, 1),
            scorer: up,
            ..spec
        };
        assert!(grid_scores(&spec).is_ok());
        assert!(matches!(
            grid_scores(&GridSpec { step: 0, ..spec }),
            Err(GridError::ZeroStep)
        ));
    }

    #[test]
    fn sweep_counts_and_order() {
        let base = GridSpec {
            step: 250,
            ..GridSpec::full_scale(improved(2.0, 0.5))
        };
        let spec = SweepSpec {
            base,
            z_values: vec![0.0, 1.0, 5.0, 25.0],
            p_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            kinds: vec![SiKind::Whole],
            transforms: vec![SiTransform::Linear],
        };
        let grids = sweep(&spec).unwrap();
        assert_eq!(grids.len(), 20);
        assert_eq!(grids[0].0.file_stem(), "z0_p0_whole_linear");
        assert_eq!(grids[1].0.p_weight, 0.25);
        assert_eq!(grids[5].0.z, 1.0);

        let single = SweepSpec {
            z_values: vec![5.0],
            p_values: vec![0.5],
            ..spec.clone()
        };
        let out = sweep(&single).unwrap();
        assert_eq!(out.len(), 1);
        let merged = grid_scores(&single.spec_for(&out[0].0)).unwrap();
        assert_eq!(out[0].1, merged);

        let empty = SweepSpec {
            kinds: vec![],
            ..spec.clone()
        };
        assert!(matches!(sweep(&empty), Err(GridError::EmptySweepList("kinds"))));

        let bad = SweepSpec {
            p_values: vec![0.5, 2.0],
            ..spec
        };
        match sweep(&bad) {
            Err(GridError::Sweep { point, .. }) => assert_eq!(point.p_weight, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let spec = GridSpec {
            u_range: 2,
            d_range: 2,
            step: 1,
            maxima: Maxima::new(4, 2, 2),
            scorer: improved(2.0, 0.5),
        };
        let grid = grid_scores(&spec).unwrap();
        let mut buf = Vec::new();
        emit_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 10);
        assert_eq!(data[0], "u,d,score");
        assert!(data[1].starts_with("0,0,"));
        assert!(data[2].starts_with("0,1,"));
        assert!(data[4].starts_with("1,0,"));
        assert!(text.contains("# scorer=improved\n"));
        assert!(text.contains("# n_max=4\n"));
        assert!(!text.contains('\r'));

        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.meta("kind"), Some("whole"));
        for ((u, d, s), (u2, d2, s2)) in grid.cells().zip(back.cells) {
            assert_eq!((u, d), (u2, d2));
            assert!((s - s2).abs() < 1e-9);
        }
    }

    #[test]
    fn single_cell_grid() {
        let spec = GridSpec {
            u_range: 0,
            d_range: 0,
            step: 1,
            maxima: Maxima::new(1, 1, 1),
            scorer: improved(2.0, 0.5),
        };
        let grid = grid_scores(&spec).unwrap();
        let mut buf = Vec::new();
        emit_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        // no votes: lower bound 0, whole index 0
        assert_eq!(rows, vec!["0,0,0"]);
    }
}
