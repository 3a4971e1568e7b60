use std::cmp::Ordering;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{time_run, SweepConfig};
use crate::error::{Error, Result};
use crate::extraction::train_and_extract;
use crate::regularizers::RegularizerSpec;

/// Column order of the sweep CSV.
pub const SWEEP_HEADER: [&str; 14] = [
    "lambda1",
    "lambda_orth",
    "norm",
    "apl",
    "mlp_auc",
    "dt_auc",
    "fidelity",
    "nodes",
    "seconds",
    "seed",
    "split_hash",
    "kind",
    "max_depth",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    /// The unregularized network defining the reference AUC.
    Baseline,
    /// One regularized grid cell.
    Cell,
    /// A tree fitted directly on the true labels.
    StandaloneTree,
}

impl PointKind {
    fn as_str(self) -> &'static str {
        match self {
            PointKind::Baseline => "baseline",
            PointKind::Cell => "cell",
            PointKind::StandaloneTree => "standalone_tree",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(PointKind::Baseline),
            "cell" => Ok(PointKind::Cell),
            "standalone_tree" => Ok(PointKind::StandaloneTree),
            other => Err(Error::Schema(format!("unknown point kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Training or extraction failed; metric fields are NaN.
    Failed(String),
}

/// One (complexity, performance) measurement on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessPoint {
    pub lambda1: f64,
    pub lambda_orth: f64,
    pub norm: String,
    pub apl: f64,
    pub mlp_auc: f64,
    pub dt_auc: f64,
    pub fidelity: f64,
    pub nodes: usize,
    pub seconds: f64,
    pub seed: u64,
    pub split_hash: String,
    pub kind: PointKind,
    pub max_depth: Option<usize>,
    pub status: PointStatus,
}

impl FitnessPoint {
    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }

    /// The AUC on the performance axis: the network's, or the tree's for
    /// standalone trees.
    pub fn performance(&self) -> f64 {
        match self.kind {
            PointKind::StandaloneTree => self.dt_auc,
            _ => self.mlp_auc,
        }
    }

    fn strength(&self) -> f64 {
        self.lambda1 + self.lambda_orth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub baseline: FitnessPoint,
    /// One point per grid cell, in grid order.
    pub points: Vec<FitnessPoint>,
}

fn run_cell(
    cfg: &SweepConfig,
    data: &crate::data::PreparedData,
    reg: &RegularizerSpec,
    kind: PointKind,
) -> FitnessPoint {
    let exp = &cfg.experiment;
    let (outcome, seconds) = time_run(|| -> Result<_> {
        let arch = exp.architecture(data)?;
        let r = train_and_extract(data, &arch, &exp.train, reg, &exp.extract_options())?;
        r.evaluate(&data.test)
    });
    let mut point = FitnessPoint {
        lambda1: reg.lambda1,
        lambda_orth: reg.lambda_orth,
        norm: reg.ortho_norm.as_str().to_string(),
        apl: f64::NAN,
        mlp_auc: f64::NAN,
        dt_auc: f64::NAN,
        fidelity: f64::NAN,
        nodes: 0,
        seconds,
        seed: exp.train.seed,
        split_hash: data.manifest.split_hash.clone(),
        kind,
        max_depth: exp.dt_params.max_depth,
        status: PointStatus::Ok,
    };
    match outcome {
        Ok(eval) => {
            point.apl = eval.apl;
            point.mlp_auc = eval.mlp_auc;
            point.dt_auc = eval.dt_auc;
            point.fidelity = eval.fidelity;
            point.nodes = eval.nodes;
        }
        Err(e) => point.status = PointStatus::Failed(e.to_string()),
    }
    point
}

/// One train-and-extract per grid cell, all from the same initialization
/// seed and split, plus the unregularized baseline.
///
/// Cells run in parallel; the result keeps grid order. A failing cell is
/// recorded with its error and the sweep continues.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let data = cfg.experiment.prepare(&cfg.experiment.split)?;
    cfg.experiment.architecture(&data)?;
    let cells = cfg.grid.cells();
    let (baseline, points) = rayon::join(
        || run_cell(cfg, &data, &RegularizerSpec::none(), PointKind::Baseline),
        || {
            cells
                .par_iter()
                .map(|reg| run_cell(cfg, &data, reg, PointKind::Cell))
                .collect::<Vec<_>>()
        },
    );
    Ok(SweepResult { baseline, points })
}

/// The chosen point and whether it reached the reference AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub point: FitnessPoint,
    /// False when no point reached the reference and the best-AUC point was taken.
    pub qualified: bool,
}

/// Smallest-APL point whose performance reaches `baseline_auc`; ties go to
/// higher fidelity, then to the weaker regularization, then to the earlier
/// point. Without a qualifier, the best-performing point is returned flagged.
pub fn select_best(points: &[FitnessPoint], baseline_auc: f64) -> Result<Selection> {
    let ok: Vec<&FitnessPoint> = points.iter().filter(|p| p.is_ok()).collect();
    if ok.is_empty() {
        return Err(Error::Input("no successful points to select from".into()));
    }
    let qualifying: Vec<&FitnessPoint> = ok.iter().copied().filter(|p| p.performance() >= baseline_auc).collect();
    if qualifying.is_empty() {
        let best = ok
            .iter()
            .copied()
            .reduce(|a, b| if b.performance() > a.performance() { b } else { a })
            .expect("non-empty");
        return Ok(Selection {
            point: best.clone(),
            qualified: false,
        });
    }
    let better = |a: &FitnessPoint, b: &FitnessPoint| -> Ordering {
        a.apl
            .total_cmp(&b.apl)
            .then(b.fidelity.total_cmp(&a.fidelity))
            .then(a.strength().total_cmp(&b.strength()))
    };
    let best = qualifying
        .into_iter()
        .reduce(|a, b| if better(b, a) == Ordering::Less { b } else { a })
        .expect("non-empty");
    Ok(Selection {
        point: best.clone(),
        qualified: true,
    })
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Baseline row first, then the grid points.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    write_points_csv(std::iter::once(&result.baseline).chain(&result.points), out)
}

pub fn write_points_csv<'a, W: Write>(points: impl IntoIterator<Item = &'a FitnessPoint>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        let status = match &p.status {
            PointStatus::Ok => "ok".to_string(),
            PointStatus::Failed(msg) => format!("failed: {msg}"),
        };
        w.write_record([
            fmt_f64(p.lambda1),
            fmt_f64(p.lambda_orth),
            p.norm.clone(),
            fmt_f64(p.apl),
            fmt_f64(p.mlp_auc),
            fmt_f64(p.dt_auc),
            fmt_f64(p.fidelity),
            p.nodes.to_string(),
            format!("{:.6}", p.seconds),
            p.seed.to_string(),
            p.split_hash.clone(),
            p.kind.as_str().to_string(),
            p.max_depth.map(|d| d.to_string()).unwrap_or_default(),
            status,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse rows written by [`write_sweep_csv`].
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<FitnessPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(Error::Schema(format!("unexpected sweep header {header:?}")));
    }
    let num = |s: &str, row: usize, col: &str| -> Result<f64> {
        if s.is_empty() {
            return Ok(f64::NAN);
        }
        s.parse()
            .map_err(|_| Error::Schema(format!("row {row}, column `{col}`: `{s}` is not a number")))
    };
    let int = |s: &str, row: usize, col: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::Schema(format!("row {row}, column `{col}`: `{s}` is not an integer")))
    };
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let status = match &rec[13] {
            "ok" => PointStatus::Ok,
            s => PointStatus::Failed(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
        };
        points.push(FitnessPoint {
            lambda1: num(&rec[0], row, "lambda1")?,
            lambda_orth: num(&rec[1], row, "lambda_orth")?,
            norm: rec[2].to_string(),
            apl: num(&rec[3], row, "apl")?,
            mlp_auc: num(&rec[4], row, "mlp_auc")?,
            dt_auc: num(&rec[5], row, "dt_auc")?,
            fidelity: num(&rec[6], row, "fidelity")?,
            nodes: int(&rec[7], row, "nodes")? as usize,
            seconds: num(&rec[8], row, "seconds")?,
            seed: int(&rec[9], row, "seed")?,
            split_hash: rec[10].to_string(),
            kind: PointKind::parse(&rec[11])?,
            max_depth: if rec[12].is_empty() {
                None
            } else {
                Some(int(&rec[12], row, "max_depth")? as usize)
            },
            status,
        });
    }
    Ok(points)
}
