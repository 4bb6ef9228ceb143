//! CSV results.
//!
//! An output directory holds:
//!
//! * `runs.csv`: `condition,seed,status,episodes,degraded,final_mastery`
//! * `runs/<condition>/seed_<seed>.csv`: `episode,stage,mastery`
//! * `summary.csv`: `condition,runs,failed,mean,std,p_vs_alp_gmm,vs_alp_gmm`
//! * `curves.csv`: `condition,stage,episode,n,mean,sem`
//! * `manifest.json`: schema version, config digest, failures
//!
//! Mastery values are fractions in `[0, 1]`. `vs_alp_gmm` is `+` or `-`
//! when Welch's test against ALP-GMM gives `p < 0.05`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, Condition, ExperimentConfig, RunResult, RunStatus};
use crate::error::{Error, Result};
use crate::stats;

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub condition: Condition,
    pub runs: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub p_vs_alpgmm: Option<f64>,
    /// `+` or `-` when significantly above or below ALP-GMM, else empty.
    pub marker: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub condition: Condition,
    pub stage: u8,
    pub episode: u64,
    pub n: usize,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config_sha256: Option<String>,
    conditions: Vec<Condition>,
    seeds: Vec<u64>,
    failures: Vec<Failure>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Failure {
    condition: Condition,
    seed: u64,
    error: String,
}

fn conditions_in_order(results: &[RunResult]) -> Vec<Condition> {
    let mut seen = Vec::new();
    for r in results {
        if !seen.contains(&r.condition) {
            seen.push(r.condition);
        }
    }
    seen
}

fn finals(results: &[RunResult], condition: Condition) -> Vec<f64> {
    results
        .iter()
        .filter(|r| r.condition == condition)
        .filter_map(RunResult::final_mastery)
        .collect()
}

pub fn summarize(results: &[RunResult]) -> Vec<SummaryRow> {
    let baseline = finals(results, Condition::AlpGmm);
    let baseline_mean = (!baseline.is_empty()).then(|| stats::mean(&baseline));
    conditions_in_order(results)
        .into_iter()
        .map(|condition| {
            let values = finals(results, condition);
            let runs = results.iter().filter(|r| r.condition == condition).count();
            let p_vs_alpgmm = if condition == Condition::AlpGmm {
                None
            } else {
                stats::welch_t_test(&values, &baseline).ok().map(|w| w.p)
            };
            let mean = (!values.is_empty()).then(|| stats::mean(&values));
            let marker = match (p_vs_alpgmm, mean, baseline_mean) {
                (Some(p), Some(m), Some(b)) if p < SIGNIFICANCE && m > b => "+",
                (Some(p), Some(m), Some(b)) if p < SIGNIFICANCE && m < b => "-",
                _ => "",
            };
            SummaryRow {
                condition,
                runs,
                failed: runs - values.len(),
                mean,
                std: (values.len() > 1).then(|| stats::std_dev(&values)),
                p_vs_alpgmm,
                marker,
            }
        })
        .collect()
}

/// Mean and standard error of mastery per checkpoint over completed runs.
pub fn curves(results: &[RunResult]) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for condition in conditions_in_order(results) {
        let mut by_point: BTreeMap<(u8, u64), Vec<f64>> = BTreeMap::new();
        for r in results.iter().filter(|r| r.condition == condition && r.completed()) {
            for c in &r.checkpoints {
                by_point.entry((c.stage, c.episode)).or_default().push(c.mastery);
            }
        }
        let mut points: Vec<_> = by_point.into_iter().collect();
        points.sort_by_key(|((stage, episode), _)| (*episode, *stage));
        for ((stage, episode), values) in points {
            out.push(CurvePoint {
                condition,
                stage,
                episode,
                n: values.len(),
                mean: stats::mean(&values),
                sem: stats::std_error(&values),
            });
        }
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("condition,runs,failed,mean,std,p_vs_alp_gmm,vs_alp_gmm\n");
    for r in rows {
        let p = r.p_vs_alpgmm.map(|p| format!("{p:.6e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{p},{}",
            r.condition,
            r.runs,
            r.failed,
            opt(r.mean),
            opt(r.std),
            r.marker
        );
    }
    s
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("condition,stage,episode,n,mean,sem\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{:.6},{:.6}", p.condition, p.stage, p.episode, p.n, p.mean, p.sem);
    }
    s
}

pub fn run_csv(checkpoints: &[Checkpoint]) -> String {
    let mut s = String::from("episode,stage,mastery\n");
    for c in checkpoints {
        let _ = writeln!(s, "{},{},{:.6}", c.episode, c.stage, c.mastery);
    }
    s
}

fn runs_index_csv(results: &[RunResult]) -> String {
    let mut s = String::from("condition,seed,status,episodes,degraded,final_mastery\n");
    for r in results {
        let status = if r.completed() { "completed" } else { "failed" };
        let _ = writeln!(
            s,
            "{},{},{status},{},{},{}",
            r.condition,
            r.seed,
            r.episodes,
            r.degraded,
            opt(r.final_mastery())
        );
    }
    s
}

fn run_path(condition: Condition, seed: u64) -> String {
    format!("runs/{}/seed_{seed}.csv", condition.slug())
}

/// Writes every CSV for `results` into `out_dir`.
pub fn emit_results(results: &[RunResult], config: Option<&ExperimentConfig>, out_dir: impl AsRef<Path>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Config("no results to write".into()));
    }
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    for r in results {
        let path = dir.join(run_path(r.condition, r.seed));
        fs::create_dir_all(path.parent().expect("run path has a parent"))?;
        fs::write(path, run_csv(&r.checkpoints))?;
    }
    fs::write(dir.join("runs.csv"), runs_index_csv(results))?;
    fs::write(dir.join("summary.csv"), summary_csv(&summarize(results)))?;
    fs::write(dir.join("curves.csv"), curves_csv(&curves(results)))?;

    let mut seeds: Vec<u64> = results.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_sha256: config.map(ExperimentConfig::digest),
        conditions: conditions_in_order(results),
        seeds,
        failures: results
            .iter()
            .filter_map(|r| match &r.status {
                RunStatus::Failed(error) => Some(Failure {
                    condition: r.condition,
                    seed: r.seed,
                    error: error.clone(),
                }),
                RunStatus::Completed => None,
            })
            .collect(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    if let Some(config) = config {
        let text = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(dir.join("config.toml"), text)?;
        if config.save_traces {
            save_traces(results, dir)?;
        }
    }
    Ok(())
}

fn save_traces(results: &[RunResult], dir: &Path) -> Result<()> {
    let mut stage_one_done = std::collections::BTreeSet::new();
    for r in results {
        let Some(trace) = &r.trace else { continue };
        let sub = if r.condition == Condition::AlpGmm {
            "alp-gmm"
        } else if stage_one_done.insert(r.seed) {
            "stage-one"
        } else {
            continue;
        };
        let path = dir.join("traces").join(sub).join(format!("seed_{}.json", r.seed));
        fs::create_dir_all(path.parent().expect("trace path has a parent"))?;
        trace.save(path)?;
    }
    Ok(())
}

fn bad_csv(path: &Path, line: usize, what: &str) -> Error {
    Error::Config(format!("{}:{}: {what}", path.display(), line + 1))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: Option<&str>) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| bad_csv(path, line, "malformed field"))
}

/// Reads back results written by [`emit_results`]. Traces and failure
/// messages are not restored.
pub fn load_results(dir: impl AsRef<Path>) -> Result<Vec<RunResult>> {
    let dir = dir.as_ref();
    let index_path = dir.join("runs.csv");
    let index = fs::read_to_string(&index_path)?;
    let mut results = Vec::new();
    for (n, line) in index.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let condition: Condition = parse_field(&index_path, n, f.next())?;
        let seed: u64 = parse_field(&index_path, n, f.next())?;
        let status = match f.next() {
            Some("completed") => RunStatus::Completed,
            Some("failed") => RunStatus::Failed("failed in the original run".into()),
            _ => return Err(bad_csv(&index_path, n, "unknown status")),
        };
        let episodes: u64 = parse_field(&index_path, n, f.next())?;
        let degraded: bool = parse_field(&index_path, n, f.next())?;

        let run_file = dir.join(run_path(condition, seed));
        let text = fs::read_to_string(&run_file)?;
        let mut checkpoints = Vec::new();
        for (m, row) in text.lines().enumerate().skip(1) {
            if row.is_empty() {
                continue;
            }
            let mut g = row.split(',');
            checkpoints.push(Checkpoint {
                episode: parse_field(&run_file, m, g.next())?,
                stage: parse_field(&run_file, m, g.next())?,
                mastery: parse_field(&run_file, m, g.next())?,
            });
        }
        results.push(RunResult {
            condition,
            seed,
            checkpoints,
            status,
            degraded,
            episodes,
            trace: None,
        });
    }
    Ok(results)
}

/// Rebuilds `summary.csv` and `curves.csv` of a result directory and returns the summary.
pub fn report(dir: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let dir = dir.as_ref();
    let results = load_results(dir)?;
    if results.is_empty() {
        return Err(Error::Config(format!("{} holds no runs", dir.display())));
    }
    let rows = summarize(&results);
    fs::write(dir.join("summary.csv"), summary_csv(&rows))?;
    fs::write(dir.join("curves.csv"), curves_csv(&curves(&results)))?;
    Ok(rows)
}
