//! On-disk formats: the dataset directory (features.csv, responses.csv,
//! costs_*.csv, meta.json), coefficient files, solution records, and the
//! progressive-hedging trace. Numeric fields print with Rust's shortest
//! round-trip formatting, so identical data serializes byte-identically.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{CostRanges, GenConfig, Stream};
use crate::error::{Error, Result};
use crate::ippo::IppoSolution;
use crate::linalg::Mat;
use crate::pha::TraceRow;
use crate::regression::RegressionParams;
use crate::scenario::{
    Dataset, NewsvendorInstance, ProblemInstance, ProblemKind, ShipmentInstance,
};

/// Everything needed to regenerate or audit a dataset directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub problem: String,
    pub n: usize,
    pub d_x: usize,
    pub d_l: usize,
    pub d_w: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub measured_r2: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub beta_true: Vec<Vec<f64>>,
    pub cost_ranges: CostRanges,
    pub rng_algorithm: String,
    pub rng_streams: BTreeMap<String, u64>,
}

impl DatasetMeta {
    pub fn from_config(cfg: &GenConfig, kind: ProblemKind, measured_r2: f64) -> Self {
        let mat_rows = |m: &Mat| (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        let mut rng_streams = BTreeMap::new();
        rng_streams.insert("features".into(), Stream::Features as u64);
        rng_streams.insert("noise".into(), Stream::Noise as u64);
        rng_streams.insert("costs".into(), Stream::Costs as u64);
        rng_streams.insert("splits".into(), Stream::Splits as u64);
        rng_streams.insert("beta_true".into(), Stream::BetaTrue as u64);
        Self {
            problem: kind.to_string(),
            n: cfg.n,
            d_x: cfg.d_x,
            d_l: cfg.d_l,
            d_w: cfg.d_w,
            seed: cfg.seed,
            noise_sigma: cfg.noise_sigma,
            measured_r2,
            mean: cfg.mean.clone(),
            covariance: mat_rows(&cfg.covariance),
            beta_true: mat_rows(&cfg.beta_true),
            cost_ranges: cfg.cost_ranges.clone(),
            rng_algorithm: "chacha12".into(),
            rng_streams,
        }
    }
}

fn write_matrix_csv(path: &Path, header: &[String], ids: &[usize], m: &Mat) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (row, &id) in ids.iter().enumerate() {
        out.push_str(&id.to_string());
        for v in m.row(row) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<(Vec<usize>, Mat)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation(format!("{}: empty file", path.display())))?;
    let cols = header.split(',').count() - 1;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|e| Error::Validation(format!("{} line {}: {e}", path.display(), ln + 2)))?;
        let vals: Vec<f64> = fields
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::Validation(format!("{} line {}: {e}", path.display(), ln + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(Error::Shape(format!(
                "{} line {}: {} fields, expected {}",
                path.display(),
                ln + 2,
                vals.len(),
                cols
            )));
        }
        ids.push(id);
        rows.push(vals);
    }
    Ok((ids, Mat::from_rows(rows)?))
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

/// Writes a dataset directory: features.csv, responses.csv, the problem's
/// cost file, and meta.json.
pub fn write_dataset_dir(
    dir: &Path,
    data: &Dataset,
    inst: &ProblemInstance,
    meta: &DatasetMeta,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut fh = vec!["id".to_string()];
    fh.extend(names("x", data.d_x()));
    write_matrix_csv(&dir.join("features.csv"), &fh, data.ids(), data.features())?;
    let mut rh = vec!["id".to_string()];
    rh.extend(names("y", data.d_l()));
    write_matrix_csv(&dir.join("responses.csv"), &rh, data.ids(), data.responses())?;
    match inst {
        ProblemInstance::Newsvendor(nv) => {
            let j = nv.d_l();
            let mut header = vec!["id".to_string()];
            header.extend(names("c", j));
            header.extend(names("b", j));
            header.extend(names("h", j));
            let stacked = Mat::from_fn(nv.n(), 3 * j, |row, col| {
                if col < j {
                    nv.order_cost.get(row, col)
                } else if col < 2 * j {
                    nv.backorder_cost.get(row, col - j)
                } else {
                    nv.holding_cost.get(row, col - 2 * j)
                }
            });
            write_matrix_csv(&dir.join("costs_newsvendor.csv"), &header, data.ids(), &stacked)?;
        }
        ProblemInstance::Shipment(sp) => {
            let (w, l) = (sp.d_w(), sp.d_l());
            let mut header = vec!["id".to_string()];
            for i in 0..w {
                for j in 0..l {
                    header.push(format!("c_{i}_{j}"));
                }
            }
            let stacked = Mat::from_fn(sp.n(), w * l, |row, col| {
                sp.ship_cost[row].get(col / l, col % l)
            });
            write_matrix_csv(&dir.join("costs_shipment.csv"), &header, data.ids(), &stacked)?;
        }
    }
    let json = serde_json::to_string_pretty(meta)?;
    fs::write(dir.join("meta.json"), json + "\n")?;
    Ok(())
}

/// Reads a dataset directory written by [`write_dataset_dir`].
pub fn read_dataset_dir(dir: &Path) -> Result<(Dataset, ProblemInstance, DatasetMeta)> {
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
    let (ids, features) = read_matrix_csv(&dir.join("features.csv"))?;
    let (ids2, responses) = read_matrix_csv(&dir.join("responses.csv"))?;
    if ids != ids2 {
        return Err(Error::Validation("feature/response id mismatch".into()));
    }
    let data = Dataset::new(features, responses, ids.clone())?;
    let inst = match meta.problem.as_str() {
        "newsvendor" => {
            let (ids3, stacked) = read_matrix_csv(&dir.join("costs_newsvendor.csv"))?;
            if ids3 != ids {
                return Err(Error::Validation("cost id mismatch".into()));
            }
            let j = stacked.cols() / 3;
            let pick = |off: usize| Mat::from_fn(stacked.rows(), j, |r, c| stacked.get(r, off + c));
            ProblemInstance::Newsvendor(NewsvendorInstance::new(pick(0), pick(j), pick(2 * j))?)
        }
        "shipment" => {
            let (ids3, stacked) = read_matrix_csv(&dir.join("costs_shipment.csv"))?;
            if ids3 != ids {
                return Err(Error::Validation("cost id mismatch".into()));
            }
            let (w, l) = (meta.d_w, meta.d_l);
            if stacked.cols() != w * l {
                return Err(Error::Shape("ship cost width != d_w * d_l".into()));
            }
            let ship = (0..stacked.rows())
                .map(|r| Mat::from_fn(w, l, |i, j| stacked.get(r, i * l + j)))
                .collect();
            ProblemInstance::Shipment(ShipmentInstance::new(
                meta.cost_ranges.advance_cost,
                meta.cost_ranges.lastminute_cost,
                ship,
            )?)
        }
        other => return Err(Error::Validation(format!("unknown problem kind {other}"))),
    };
    Ok((data, inst, meta))
}

/// Writes coefficients as beta.csv with a header naming the intercept and
/// features.
pub fn write_beta_csv(path: &Path, params: &RegressionParams) -> Result<()> {
    let mut out = String::from("response,intercept");
    for f in 0..params.d_x() {
        out.push_str(&format!(",x{f}"));
    }
    out.push('\n');
    for j in 0..params.d_l() {
        out.push_str(&format!("y{j}"));
        for v in params.beta.row(j) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_beta_csv(path: &Path) -> Result<RegressionParams> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|s| s.parse().map_err(|e| Error::Validation(format!("beta.csv: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(vals);
    }
    RegressionParams::new(Mat::from_rows(rows)?)
}

/// JSON-friendly record of one integrated solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub beta: Vec<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub status: String,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub loss_value: f64,
    pub pwl_error_bound: Option<f64>,
    pub reg: crate::ippo::RegConfig,
    pub per_scenario_decisions: Vec<Vec<f64>>,
}

impl SolutionRecord {
    pub fn from_solution(sol: &IppoSolution) -> Self {
        Self {
            beta: (0..sol.beta.d_l()).map(|j| sol.beta.beta.row(j).to_vec()).collect(),
            objective: sol.train_objective,
            best_bound: sol.best_bound,
            gap: sol.gap,
            status: format!("{:?}", sol.status),
            nodes: sol.nodes,
            lp_iterations: sol.lp_iterations,
            loss_value: sol.loss_value,
            pwl_error_bound: sol.pwl_error_bound,
            reg: sol.reg,
            per_scenario_decisions: sol
                .lower_decisions
                .iter()
                .map(|d| d.as_slice().to_vec())
                .collect(),
        }
    }
}

pub fn write_solution_json(path: &Path, sol: &IppoSolution) -> Result<()> {
    let record = SolutionRecord::from_solution(sol);
    fs::write(path, serde_json::to_string_pretty(&record)? + "\n")?;
    Ok(())
}

/// Writes the progressive-hedging trace as CSV.
pub fn write_pha_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut out = String::from("iter,max_deviation,consensus_objective,wallclock\n");
    for row in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.iter, row.max_deviation, row.consensus_objective, row.wallclock_s
        ));
    }
    fs::write(path, out)?;
    Ok(())
}
