//! The synthetic comparison grid: every method on every Beta pair, several
//! seeds each, summarized as mean test F1 with standard error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_scorer, multi_seed_report, MeanWithError};
use crate::methods::{fit_method, Method, MethodSettings};
use crate::synthetic::{generate_dataset, BetaParams, SyntheticSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub beta_between: BetaParams,
    pub beta_within: BetaParams,
}

impl BenchRow {
    pub const fn new(between: (f64, f64), within: (f64, f64)) -> Self {
        Self {
            beta_between: BetaParams::new(between.0, between.1),
            beta_within: BetaParams::new(within.0, within.1),
        }
    }

    pub fn label(&self) -> String {
        format!("{}, {}", self.beta_between, self.beta_within)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub rows: Vec<BenchRow>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Template for every row; its Beta parameters and seed are replaced.
    pub synthetic: SyntheticSpec,
    #[serde(default)]
    pub settings: MethodSettings,
}

/// The six synthetic Beta pairs, listed as (between-family, within-family).
pub const TABLE1_ROWS: [BenchRow; 6] = [
    BenchRow::new((1.0, 1.0), (3.0, 1.5)),
    BenchRow::new((2.5, 4.0), (4.0, 2.0)),
    BenchRow::new((1.0, 2.0), (4.0, 1.5)),
    BenchRow::new((1.5, 4.0), (3.0, 1.0)),
    BenchRow::new((1.5, 4.0), (4.0, 1.0)),
    BenchRow::new((1.0, 4.0), (4.0, 1.0)),
];

impl BenchConfig {
    /// All six rows, all methods, N = 1000, five seeds.
    pub fn table1() -> Self {
        Self {
            rows: TABLE1_ROWS.to_vec(),
            methods: Method::ALL.to_vec(),
            seeds: (1..=5).collect(),
            synthetic: SyntheticSpec::default(),
            settings: MethodSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "bench needs at least one row and one method".into(),
            ));
        }
        if self.seeds.len() < 2 {
            return Err(Error::InvalidParameter("bench needs at least two seeds".into()));
        }
        self.settings.gnn.validate()?;
        self.synthetic.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: Method,
    pub test_f1: MeanWithError,
    pub per_seed_f1: Vec<f64>,
    pub per_seed_pr_auc: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRowResult {
    pub row: BenchRow,
    pub cells: Vec<BenchCell>,
}

impl BenchRowResult {
    pub fn cell(&self, method: Method) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.method == method)
    }

    pub fn mean_f1(&self, method: Method) -> Option<f64> {
        self.cell(method).map(|c| c.test_f1.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub config: BenchConfig,
    pub rows: Vec<BenchRowResult>,
}

impl BenchResults {
    pub fn row(&self, between: BetaParams, within: BetaParams) -> Option<&BenchRowResult> {
        self.rows
            .iter()
            .find(|r| r.row.beta_between == between && r.row.beta_within == within)
    }

    /// Markdown table: one row per Beta pair, `mean (standard error)` per
    /// method.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Dataset |");
        for m in &self.config.methods {
            out.push_str(&format!(" {} |", m.display_name()));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(self.config.methods.len()));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("| {} |", r.row.label()));
            for m in &self.config.methods {
                match r.cell(*m) {
                    Some(c) => out.push_str(&format!(" {} |", c.test_f1)),
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "\nMean test F1 over {} seeds (standard error in parentheses), N = {} graphs per dataset.\n",
            self.config.seeds.len(),
            self.config.synthetic.n_graphs
        ));
        out
    }
}

/// Runs one method on one row for every seed: generate, fit, evaluate.
pub fn run_cell(config: &BenchConfig, row: &BenchRow, method: Method) -> Result<BenchCell> {
    let (summary, reports) = multi_seed_report(&config.seeds, |seed| {
        let spec = SyntheticSpec {
            beta_within: row.beta_within,
            beta_between: row.beta_between,
            seed,
            ..config.synthetic.clone()
        };
        let dataset = generate_dataset(&spec)?;
        let scorer = fit_method(method, &dataset, seed, &config.settings)?;
        evaluate_scorer(method.display_name(), seed, &scorer, &dataset)
    })?;
    Ok(BenchCell {
        method,
        test_f1: summary,
        per_seed_f1: reports.iter().map(|r| r.test_f1).collect(),
        per_seed_pr_auc: reports.iter().map(|r| r.test_pr_auc).collect(),
    })
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchResults> {
    run_bench_with_progress(config, |_, _| {})
}

/// As [`run_bench`], calling `progress` after each finished cell.
pub fn run_bench_with_progress(
    config: &BenchConfig,
    mut progress: impl FnMut(&BenchRow, &BenchCell),
) -> Result<BenchResults> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.rows.len());
    for row in &config.rows {
        let mut cells = Vec::with_capacity(config.methods.len());
        for &method in &config.methods {
            let cell = run_cell(config, row, method)?;
            progress(row, &cell);
            cells.push(cell);
        }
        rows.push(BenchRowResult {
            row: row.clone(),
            cells,
        });
    }
    Ok(BenchResults {
        config: config.clone(),
        rows,
    })
}
