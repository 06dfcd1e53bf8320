//! Subcommand implementations; each returns what it prints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use eqcnn::data::{
    adjacency_from_mask, all_graphs, edge_list, is_connected, make_graph_splits, GraphCase,
    SplitOptions,
};
use eqcnn::training::{train, TrainReport};
use eqcnn::verify::{
    check_mixture_circuit_equivalence, check_prediction_invariance, check_unitary_equivariance,
    EquivarianceReport,
};
use eqcnn::{ArchitectureId, ArchitectureSpec, GroupName, GroupSpec};
use serde::Serialize;

use crate::error::{usage, CliError, CliResult};
use crate::experiment::ExperimentConfig;

/// Input size used when `--n` is not given.
pub fn default_qubits(id: ArchitectureId) -> usize {
    match id {
        ArchitectureId::SnEqcnnMixture
        | ArchitectureId::SnEqcnnCircuit
        | ArchitectureId::SnEqnn => 4,
        _ => 16,
    }
}

pub fn parse_group(name: &str) -> CliResult<GroupName> {
    match name {
        "reflection" => Ok(GroupName::Reflection),
        "rotation" => Ok(GroupName::Rotation180AsWritten),
        "symmetric" => Ok(GroupName::Symmetric),
        "trivial" => Ok(GroupName::Trivial),
        _ => usage(format!(
            "unknown group '{name}' (reflection, rotation, symmetric, trivial)"
        )),
    }
}

/// The group's representation on the architecture's input register.
pub fn group_for(arch: &ArchitectureSpec, name: GroupName) -> CliResult<GroupSpec> {
    let embedding = || {
        arch.embedding.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "{} has no pixel embedding for {}",
                arch.id,
                name.as_str()
            ))
        })
    };
    Ok(match name {
        GroupName::Reflection => GroupSpec::reflection(embedding()?),
        GroupName::Rotation180AsWritten => GroupSpec::rotation_as_written(embedding()?),
        GroupName::Symmetric => GroupSpec::symmetric(arch.input_qubits),
        GroupName::Trivial => GroupSpec::trivial(arch.input_qubits),
    })
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub n: Option<usize>,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    pub expect_fail: Vec<GroupName>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n: None,
            trials: 20,
            tol: 1e-9,
            seed: 0,
            expect_fail: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub group: String,
    pub claimed: String,
    pub max_residual: f64,
    pub broken_at: Option<String>,
    pub expect_pass: bool,
    pub pass: bool,
}

impl VerifyRow {
    pub fn ok(&self) -> bool {
        self.pass == self.expect_pass
    }

    fn from_report(r: &EquivarianceReport, expect_pass: bool) -> Self {
        let broken: Vec<&str> = r
            .elements
            .iter()
            .filter_map(|e| e.broken_at.as_deref())
            .collect();
        let broken_at = (!broken.is_empty()).then(|| {
            let mut b = broken.clone();
            b.sort_unstable();
            b.dedup();
            b.join("/")
        });
        Self {
            check: format!("{:?}", r.check).to_lowercase(),
            group: r.group.as_str().to_string(),
            claimed: format!("{}/{}", r.claimed_layers, r.total_layers),
            max_residual: r.max_residual,
            broken_at,
            expect_pass,
            pass: r.pass,
        }
    }
}

/// Every applicable check for `id`: unitary equivariance for each claimed
/// group, prediction invariance for Sₙ models, the mixture/circuit
/// equivalence for the ancilla circuit, and any expected failures.
pub fn verify(id: ArchitectureId, opts: &VerifyOptions) -> CliResult<Vec<VerifyRow>> {
    let arch = id.build(opts.n.unwrap_or_else(|| default_qubits(id)))?;
    let mut rows = Vec::new();
    for claim in &arch.symmetry {
        if opts.expect_fail.contains(&claim.group.name) {
            continue;
        }
        let g = &claim.group;
        rows.push(VerifyRow::from_report(
            &check_unitary_equivariance(&arch, g, opts.trials, opts.tol, opts.seed)?,
            true,
        ));
        if g.name == GroupName::Symmetric {
            rows.push(VerifyRow::from_report(
                &check_prediction_invariance(&arch, g, opts.trials, opts.tol, opts.seed)?,
                true,
            ));
        }
    }
    if id == ArchitectureId::SnEqcnnCircuit {
        let m = check_mixture_circuit_equivalence(opts.trials, opts.tol, opts.seed)?;
        rows.push(VerifyRow {
            check: "mixture_equivalence".into(),
            group: "-".into(),
            claimed: "-".into(),
            max_residual: m.max_residual,
            broken_at: None,
            expect_pass: true,
            pass: m.pass,
        });
    }
    for &name in &opts.expect_fail {
        let g = group_for(&arch, name)?;
        rows.push(VerifyRow::from_report(
            &check_unitary_equivariance(&arch, &g, opts.trials, opts.tol, opts.seed)?,
            false,
        ));
    }
    Ok(rows)
}

pub fn render_verify(id: ArchitectureId, rows: &[VerifyRow]) -> String {
    let mut out = format!("{id}\n");
    let _ = writeln!(
        out,
        "  {:<20} {:<11} {:>7} {:>12} {:<14} {:<8} result",
        "check", "group", "claimed", "max_resid", "broken_at", "expect"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "  {:<20} {:<11} {:>7} {:>12.3e} {:<14} {:<8} {}",
            r.check,
            r.group,
            r.claimed,
            r.max_residual,
            r.broken_at.as_deref().unwrap_or("-"),
            if r.expect_pass { "pass" } else { "fail" },
            if r.ok() { "ok" } else { "UNEXPECTED" }
        );
    }
    if rows.is_empty() {
        out.push_str("  no symmetry claims; nothing to check\n");
    }
    out
}

/// Files written by [`train_experiment`].
#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub dir: PathBuf,
    pub report: TrainReport,
}

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const CONFIG_FILE: &str = "config.json";

/// Trains and writes `report.json`, `curves.csv`, `config.json`,
/// `run_<k>.csv` and, for graph experiments, `splits.json`.
pub fn train_experiment(cfg: &ExperimentConfig) -> CliResult<TrainOutputs> {
    cfg.validate()?;
    let (data, splits) = cfg.dataset()?;
    let report = train(&cfg.train, &data)?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut snapshot = cfg.clone();
    snapshot.data_root = Some(cfg.resolved_data_root());
    fs::write(dir.join(CONFIG_FILE), json(&snapshot)?)?;
    fs::write(dir.join(REPORT_FILE), json(&report)?)?;
    fs::write(dir.join(CURVES_FILE), report.to_csv())?;
    for k in 0..report.runs.len() {
        fs::write(
            dir.join(format!("run_{k}.csv")),
            report.run_csv(k).expect("run exists"),
        )?;
    }
    if let Some(s) = splits {
        fs::write(dir.join("splits.json"), json(&s)?)?;
    }
    Ok(TrainOutputs { dir, report })
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Core(e.into()))
}

pub fn load_report(path: &Path) -> CliResult<TrainReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    /// `(iteration, mean test accuracy per report)` wherever all reports evaluated.
    pub rows: Vec<(usize, Vec<f64>)>,
    pub finals: Vec<f64>,
    /// Final mean test accuracy minus the first report's.
    pub deltas: Vec<f64>,
}

/// Aligns mean test-accuracy curves; grids must match exactly.
pub fn compare(reports: &[TrainReport]) -> CliResult<Comparison> {
    if reports.len() < 2 {
        return usage("compare needs at least two reports");
    }
    let grid = |r: &TrainReport| {
        r.mean
            .test_acc
            .iter()
            .map(Option::is_some)
            .collect::<Vec<_>>()
    };
    let g0 = grid(&reports[0]);
    if let Some(bad) = reports.iter().position(|r| grid(r) != g0) {
        return Err(CliError::Core(eqcnn::Error::Domain(format!(
            "report {} has a different iteration grid from report 0",
            bad
        ))));
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let labels = reports
        .iter()
        .map(|r| {
            let base = r.config.architecture.to_string();
            let n = seen.entry(base.clone()).or_default();
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}#{n}")
            }
        })
        .collect();
    let rows = (0..g0.len())
        .filter(|&i| g0[i])
        .map(|i| {
            (
                i + 1,
                reports
                    .iter()
                    .map(|r| r.mean.test_acc[i].expect("on grid"))
                    .collect(),
            )
        })
        .collect();
    let finals: Vec<f64> = reports.iter().map(|r| r.final_mean.test_acc).collect();
    let deltas = finals.iter().map(|f| f - finals[0]).collect();
    Ok(Comparison {
        labels,
        rows,
        finals,
        deltas,
    })
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = format!("iteration,{}\n", self.labels.join(","));
        for (it, vals) in &self.rows {
            let cells: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{it},{}", cells.join(","));
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:>9}", "iteration");
        for l in &self.labels {
            let _ = write!(out, " {l:>18}");
        }
        out.push('\n');
        for (it, vals) in &self.rows {
            let _ = write!(out, "{it:>9}");
            for v in vals {
                let _ = write!(out, " {v:>18.4}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:>9}", "final");
        for v in &self.finals {
            let _ = write!(out, " {v:>18.4}");
        }
        out.push('\n');
        let _ = write!(out, "{:>9}", "delta");
        for v in &self.deltas {
            let _ = write!(out, " {v:>+18.4}");
        }
        out.push('\n');
        out
    }
}

/// CSV of all 64 four-vertex graphs with labels and split membership.
pub fn enumerate_graphs(split_seed: u64, options: &SplitOptions) -> CliResult<String> {
    let n = options.n_vertices;
    let splits = [GraphCase::Case1, GraphCase::Case2]
        .map(|c| make_graph_splits(c, split_seed, options))
        .into_iter()
        .collect::<eqcnn::Result<Vec<_>>>()?;
    let pairs = edge_list(n);
    let mut out = String::from("mask,edges,connected,case1,case2\n");
    for (mask, adj) in all_graphs(n)?.iter().enumerate() {
        let mask = mask as u64;
        let edges: Vec<String> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, (i, j))| format!("{i}-{j}"))
            .collect();
        debug_assert_eq!(&adjacency_from_mask(n, mask), adj);
        let member = |s: &eqcnn::data::GraphSplits| {
            if s.train.contains(&mask) {
                "train"
            } else if s.test.contains(&mask) {
                "test"
            } else if options.exclude.contains(&mask) {
                "excluded"
            } else {
                "unused"
            }
        };
        let _ = writeln!(
            out,
            "{mask},{},{},{},{}",
            edges.join(" "),
            is_connected(adj) as u8,
            member(&splits[0]),
            member(&splits[1])
        );
    }
    Ok(out)
}
