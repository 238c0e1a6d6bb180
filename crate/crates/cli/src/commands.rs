use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use spotrank_core::numfmt::{round_sig, MACHINE_DIGITS};
use spotrank_core::{
    combined_score, effective_maxima, grid_scores, simulate as run_simulation, stability_report, AnswerProfile,
    GridSpec, QuestionBook, QuestionState, RankedList, Scorer, ScoringConfig, StreamSpec, SweepPoint, SweepSpec,
    VoteEvent, VoteTally,
};

fn machine(v: f64) -> f64 {
    round_sig(v, MACHINE_DIGITS)
}

pub fn score<W: Write>(up: u64, down: u64, raw: (u64, u64, u64), config: &ScoringConfig, out: &mut W) -> Result<()> {
    let tally = VoteTally::new(up, down);
    let maxima = effective_maxima(raw.0, raw.1, raw.2, config.n_max_floor);
    if !maxima.covers(tally) {
        bail!("tally ({up}, {down}) exceeds the given maxima; raise --n-max/--u-max/--d-max");
    }
    let b = combined_score(tally, maxima, config);
    writeln!(out, "wilson_lower = {:.6}", b.wilson.lower)?;
    writeln!(out, "wilson_upper = {:.6}", b.wilson.upper)?;
    writeln!(out, "si = {:.6}", b.si)?;
    writeln!(out, "combined = {:.6}", b.combined)?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TallyLine {
    answer_id: String,
    up: u64,
    down: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventLine {
    question_id: String,
    answer_id: String,
    up_delta: i64,
    down_delta: i64,
    ts: i64,
}

#[derive(Serialize)]
struct RankLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    question_id: Option<&'a str>,
    rank: usize,
    answer_id: &'a str,
    up: u64,
    down: u64,
    wilson_lower: f64,
    si: f64,
    combined: f64,
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(file)))
}

/// Non-blank lines with their 1-based line numbers.
fn jsonl_lines(input: Box<dyn BufRead>) -> impl Iterator<Item = Result<(usize, String)>> {
    input
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)).map_err(anyhow::Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

fn write_ranking<W: Write>(list: &RankedList, question_id: Option<&str>, out: &mut W) -> Result<()> {
    for (i, e) in list.entries.iter().enumerate() {
        let line = RankLine {
            question_id,
            rank: i + 1,
            answer_id: &e.answer_id,
            up: e.tally.up,
            down: e.tally.down,
            wilson_lower: machine(e.breakdown.wilson.lower),
            si: machine(e.breakdown.si),
            combined: machine(e.breakdown.combined),
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn rank<W: Write>(path: &Path, config: &ScoringConfig, out: &mut W) -> Result<()> {
    let mut tallies = Vec::new();
    for line in jsonl_lines(open_input(path)?) {
        let (lineno, text) = line?;
        let t: TallyLine = serde_json::from_str(&text).map_err(|e| anyhow!("line {lineno}: {e}"))?;
        tallies.push((t.answer_id, VoteTally::new(t.up, t.down)));
    }
    let state = QuestionState::from_tallies("", tallies)?;
    let mut out = BufWriter::new(out);
    write_ranking(&state.rank(config), None, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn replay<W: Write>(path: &Path, config: &ScoringConfig, out: &mut W) -> Result<()> {
    let mut book = QuestionBook::new();
    let mut last_ts = i64::MIN;
    for line in jsonl_lines(open_input(path)?) {
        let (lineno, text) = line?;
        let e: EventLine = serde_json::from_str(&text).map_err(|e| anyhow!("line {lineno}: {e}"))?;
        if e.ts < last_ts {
            bail!(
                "line {lineno}: timestamp {} is earlier than the previous event ({last_ts})",
                e.ts
            );
        }
        last_ts = e.ts;
        let event = VoteEvent::new(e.question_id, e.answer_id, e.up_delta, e.down_delta).at(e.ts);
        book.apply_event(&event)
            .map_err(|err| anyhow!("line {lineno}: {err}"))?;
    }
    let mut out = BufWriter::new(out);
    for question in book.iter() {
        write_ranking(&question.rank(config), Some(question.question_id()), &mut out)?;
    }
    out.flush()?;
    Ok(())
}

pub struct GridTarget {
    pub spec: GridSpec,
    pub out_dir: PathBuf,
}

fn grid_file_name(scorer: &Scorer) -> String {
    let stem = match scorer {
        Scorer::Improved(c) => SweepPoint {
            z: c.z,
            p_weight: c.p_weight,
            kind: c.si_kind,
            transform: c.si_transform,
        }
        .file_stem(),
        Scorer::OriginalWilson { z, bound } => format!("wilson_z{z}_{bound}"),
        Scorer::AverageRating => "average".to_string(),
    };
    stem + ".csv"
}

/// Writes `grid` to `path`, deleting the file if writing fails.
fn write_grid_file(grid: &spotrank_core::ScoreGrid, path: &Path) -> Result<()> {
    let result = spotrank_core::grid::write_csv_file(grid, path);
    if result.is_err() {
        let _ = fs::remove_file(path);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

pub fn grid(target: &GridTarget, output: Option<PathBuf>) -> Result<PathBuf> {
    let grid = grid_scores(&target.spec)?;
    let path = output.unwrap_or_else(|| target.out_dir.join(grid_file_name(&target.spec.scorer)));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_grid_file(&grid, &path)?;
    Ok(path)
}

/// Validates the whole sweep, then writes one file per point. On failure
/// every file written so far is removed.
pub fn sweep(spec: &SweepSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for point in spec.points() {
        let path = out_dir.join(format!("{}.csv", point.file_stem()));
        let step = grid_scores(&spec.spec_for(&point))
            .map_err(anyhow::Error::from)
            .and_then(|g| write_grid_file(&g, &path));
        if let Err(err) = step {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(err.context(format!("sweep point {point}")));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn parse_profiles(text: &str) -> Result<Vec<AnswerProfile>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let [id, p, w] = parts[..] else {
                bail!("invalid --profiles item `{item}`: expected id:up_probability:arrival_weight");
            };
            let p = p
                .parse()
                .map_err(|e| anyhow!("invalid --profiles up probability `{p}`: {e}"))?;
            let w = w
                .parse()
                .map_err(|e| anyhow!("invalid --profiles arrival weight `{w}`: {e}"))?;
            Ok(AnswerProfile::new(id, p, w))
        })
        .collect()
}

pub struct SimulateArgs {
    pub profiles: Vec<AnswerProfile>,
    pub events: u64,
    pub seed: u64,
    pub cadence: u64,
    pub scorers: Vec<Scorer>,
    pub trajectory: PathBuf,
    pub report: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let spec = StreamSpec {
        profiles: args.profiles.clone(),
        total_events: args.events,
        seed: args.seed,
    };
    let trajectory = run_simulation(&spec, &args.scorers, args.cadence)?;
    let report = stability_report(&trajectory).context("increase --events or lower --cadence")?;
    let labels: Vec<String> = args.scorers.iter().map(Scorer::label).collect();

    let mut traj_out = Vec::new();
    for snap in &trajectory.snapshots {
        for (label, list) in labels.iter().zip(&snap.rankings) {
            let ranking: Vec<_> = list
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "answer_id": e.answer_id,
                        "up": e.tally.up,
                        "down": e.tally.down,
                        "combined": machine(e.breakdown.combined),
                    })
                })
                .collect();
            let line = json!({ "event_index": snap.event_index, "scorer": label, "ranking": ranking });
            serde_json::to_writer(&mut traj_out, &line)?;
            traj_out.push(b'\n');
        }
    }

    let final_rankings = &trajectory.snapshots[trajectory.snapshots.len() - 1].rankings;
    let report_json = json!({
        "seed": args.seed,
        "total_events": args.events,
        "cadence": args.cadence,
        "snapshots": trajectory.snapshots.len(),
        "final_tallies": trajectory.final_state.entries().iter().map(|e| json!({
            "answer_id": e.answer_id, "up": e.tally.up, "down": e.tally.down,
        })).collect::<Vec<_>>(),
        "scorers": report.scorers.iter().enumerate().map(|(k, s)| json!({
            "label": s.label,
            "mean_adjacent_tau": machine(s.mean_adjacent_tau),
            "rank1_changes": s.rank1_changes,
            "final_ranking": final_rankings[k].ids(),
        })).collect::<Vec<_>>(),
        "agreement": report.agreement.iter().map(|a| json!({
            "first": labels[a.first],
            "second": labels[a.second],
            "tau": machine(a.tau),
        })).collect::<Vec<_>>(),
    });
    let mut report_out = serde_json::to_vec_pretty(&report_json)?;
    report_out.push(b'\n');

    write_all_or_nothing(&[(&args.trajectory, &traj_out), (&args.report, &report_out)])
}

fn write_all_or_nothing(files: &[(&PathBuf, &Vec<u8>)]) -> Result<()> {
    for (i, (path, bytes)) in files.iter().enumerate() {
        if let Err(err) = fs::write(path, bytes) {
            for (p, _) in &files[..=i] {
                let _ = fs::remove_file(p);
            }
            return Err(anyhow::Error::from(err).context(format!("writing {}", path.display())));
        }
    }
    Ok(())
}
