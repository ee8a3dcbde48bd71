//! Paired sweeps over hosts, module variants, depths and widths, with the
//! loss curves and loss-reduction ratios written as CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::chem::Split;
use crate::gnn::HostKind;
use crate::model::{ModelConfig, Variant};
use crate::train::{loss_reduction_ratio, train_loop, Prepared, RunRecord, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid experiment: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Name written to the `dataset` column.
    pub dataset: String,
    pub hosts: Vec<HostKind>,
    /// The vanilla baseline is always run as well.
    pub variants: Vec<Variant>,
    pub layers: Vec<usize>,
    pub dims: Vec<usize>,
    pub seeds: Vec<u64>,
    pub heads: usize,
    pub dropout: f64,
    pub train: TrainConfig,
    pub jobs: usize,
}

/// Dataset and split shared by every cell.
pub struct SweepData<'a> {
    pub prepared: &'a Prepared,
    pub split: &'a Split,
    pub node_features: usize,
    pub super_features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub host: HostKind,
    pub variant: Variant,
    pub layers: usize,
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub host: HostKind,
    pub variant: Variant,
    #[serde(rename = "L")]
    pub layers: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub seed: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: Option<f64>,
    pub test_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub host: HostKind,
    pub dataset: String,
    pub variant: Variant,
    #[serde(rename = "L")]
    pub layers: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    /// Seeds for which both runs of the pair finished.
    pub pairs: usize,
    pub r_train_mean: f64,
    pub r_test_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub host: HostKind,
    pub variant: Variant,
    #[serde(rename = "L")]
    pub layers: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<(Cell, RunRecord)>,
    pub losses: Vec<LossRow>,
    pub reductions: Vec<ReductionRow>,
    pub failures: Vec<FailureRow>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let empty = [
            ("hosts", self.hosts.is_empty()),
            ("variants", self.variants.is_empty()),
            ("layers", self.layers.is_empty()),
            ("dims", self.dims.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((what, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(SweepError::Usage(format!("empty grid: no {what}")));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(SweepError::Usage("seeds must be distinct".into()));
        }
        if self.jobs == 0 {
            return Err(SweepError::Usage("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Every cell in a fixed order, baseline included.
    pub fn cells(&self) -> Vec<Cell> {
        let mut variants: BTreeSet<Variant> = self.variants.iter().copied().collect();
        variants.insert(Variant::None);
        let mut cells = Vec::new();
        for &host in &self.hosts {
            for &layers in &self.layers {
                for &dim in &self.dims {
                    for &variant in &variants {
                        for &seed in &self.seeds {
                            cells.push(Cell {
                                host,
                                variant,
                                layers,
                                dim,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        cells.sort();
        cells.dedup();
        cells
    }
}

fn model_config(spec: &ExperimentSpec, data: &SweepData<'_>, cell: &Cell) -> ModelConfig {
    ModelConfig {
        host: cell.host,
        variant: cell.variant,
        layers: cell.layers,
        dim: cell.dim,
        heads: spec.heads,
        relations: data.prepared.relations,
        tasks: data.prepared.tasks,
        task: data.prepared.task,
        dropout: spec.dropout,
        seed: cell.seed,
        node_features: data.node_features,
        super_features: data.super_features,
    }
}

/// Runs every cell on up to `spec.jobs` threads. Failed cells are recorded
/// and the rest continue; output order does not depend on scheduling.
pub fn run_sweep(spec: &ExperimentSpec, data: &SweepData<'_>) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let cells = spec.cells();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunRecord, String>>>> = Mutex::new(vec![None; cells.len()]);
    let workers = spec.jobs.min(cells.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let cfg = model_config(spec, data, cell);
                let out = train_loop(&cfg, data.prepared, data.split, &spec.train)
                    .map(|o| o.record)
                    .map_err(|e| e.to_string());
                match &out {
                    Ok(r) => log::info!(
                        "{}/{} L={} D={} seed={}: final train loss {:.6}",
                        cell.host,
                        cell.variant,
                        cell.layers,
                        cell.dim,
                        cell.seed,
                        r.summary.final_train_loss
                    ),
                    Err(e) => log::warn!("{}/{} seed={} failed: {e}", cell.host, cell.variant, cell.seed),
                }
                results.lock().expect("no worker panics while holding the lock")[i] = Some(out);
            });
        }
    });
    let results = results.into_inner().expect("workers finished");

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (cell, r) in cells.into_iter().zip(results) {
        match r.expect("every cell ran") {
            Ok(record) => records.push((cell, record)),
            Err(error) => failures.push(FailureRow {
                host: cell.host,
                variant: cell.variant,
                layers: cell.layers,
                dim: cell.dim,
                seed: cell.seed,
                error,
            }),
        }
    }
    let losses = loss_rows(&records);
    let reductions = reduction_rows(&losses, &spec.dataset);
    Ok(SweepResult {
        records,
        losses,
        reductions,
        failures,
    })
}

fn loss_rows(records: &[(Cell, RunRecord)]) -> Vec<LossRow> {
    let mut rows = Vec::new();
    for (cell, record) in records {
        // per-epoch rows with matching seed order across variants
        for e in &record.epochs {
            rows.push(LossRow {
                host: cell.host,
                variant: cell.variant,
                layers: cell.layers,
                dim: cell.dim,
                seed: cell.seed,
                epoch: e.epoch,
                train_loss: e.train_loss,
                val_metric: e.val_metric,
                test_loss: e.test_loss,
            });
        }
    }
    rows
}

/// Final-epoch losses per run, keyed by `(host, L, D)` then variant then
/// seed.
type Finals = BTreeMap<(HostKind, usize, usize), BTreeMap<Variant, BTreeMap<u64, (f64, f64)>>>;

/// Seed-paired loss-reduction ratios of every variant against the vanilla
/// host, from the last epoch of each run.
pub fn reduction_rows(losses: &[LossRow], dataset: &str) -> Vec<ReductionRow> {
    let mut last: BTreeMap<(HostKind, usize, usize, Variant, u64), &LossRow> = BTreeMap::new();
    for row in losses {
        let key = (row.host, row.layers, row.dim, row.variant, row.seed);
        if last.get(&key).is_none_or(|r| r.epoch < row.epoch) {
            last.insert(key, row);
        }
    }
    let mut finals: Finals = BTreeMap::new();
    for ((host, l, d, variant, seed), row) in last {
        finals
            .entry((host, l, d))
            .or_default()
            .entry(variant)
            .or_default()
            .insert(seed, (row.train_loss, row.test_loss));
    }
    let mut out = Vec::new();
    for ((host, layers, dim), by_variant) in &finals {
        let Some(vanilla) = by_variant.get(&Variant::None) else {
            continue;
        };
        for (&variant, runs) in by_variant.iter().filter(|(v, _)| **v != Variant::None) {
            let (mut lt, mut lt_plus, mut ls, mut ls_plus) = (vec![], vec![], vec![], vec![]);
            for (seed, &(train_plus, test_plus)) in runs {
                if let Some(&(train, test)) = vanilla.get(seed) {
                    lt.push(train);
                    lt_plus.push(train_plus);
                    ls.push(test);
                    ls_plus.push(test_plus);
                }
            }
            match (loss_reduction_ratio(&lt, &lt_plus), loss_reduction_ratio(&ls, &ls_plus)) {
                (Ok(r_train_mean), Ok(r_test_mean)) => out.push(ReductionRow {
                    host: *host,
                    dataset: dataset.to_string(),
                    variant,
                    layers: *layers,
                    dim: *dim,
                    pairs: lt.len(),
                    r_train_mean,
                    r_test_mean,
                }),
                (Err(e), _) | (_, Err(e)) => {
                    log::warn!("no reduction ratio for {host}/{variant} L={layers} D={dim}: {e}")
                }
            }
        }
    }
    out
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, SweepError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub const LOSS_COLUMNS: [&str; 9] = ["host", "variant", "L", "D", "seed", "epoch", "train_loss", "val_metric", "test_loss"];
pub const REDUCTION_COLUMNS: [&str; 8] = ["host", "dataset", "variant", "L", "D", "pairs", "r_train_mean", "r_test_mean"];
pub const FAILURE_COLUMNS: [&str; 6] = ["host", "variant", "L", "D", "seed", "error"];

impl SweepResult {
    /// Writes `losses.csv`, `reduction.csv` and `failures.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), SweepError> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("losses.csv"), &self.losses, &LOSS_COLUMNS)?;
        write_csv(&dir.join("reduction.csv"), &self.reductions, &REDUCTION_COLUMNS)?;
        write_csv(&dir.join("failures.csv"), &self.failures, &FAILURE_COLUMNS)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::synthetic::diameter_parity;
    use crate::chem::{random_split, Vocab};

    fn spec(hosts: Vec<HostKind>, variants: Vec<Variant>) -> ExperimentSpec {
        ExperimentSpec {
            dataset: "toy".into(),
            hosts,
            variants,
            layers: vec![1],
            dims: vec![4],
            seeds: vec![0],
            heads: 2,
            dropout: 0.0,
            train: TrainConfig {
                epochs: 2,
                batch_size: 8,
            },
            jobs: 2,
        }
    }

    fn run(spec: &ExperimentSpec) -> SweepResult {
        let vocab = Vocab::organic();
        let prepared = Prepared::new(&diameter_parity(20, 1), &vocab);
        let split = random_split(20, (0.6, 0.2, 0.2), 0).unwrap();
        let data = SweepData {
            prepared: &prepared,
            split: &split,
            node_features: vocab.width(),
            super_features: vocab.supernode_width(),
        };
        run_sweep(spec, &data).unwrap()
    }

    #[test]
    fn two_hosts_two_variants_give_four_rows_per_epoch() {
        let s = spec(vec![HostKind::Rsgcn, HostKind::Gin], vec![Variant::None, Variant::Full]);
        let out = run(&s);
        assert!(out.failures.is_empty());
        for epoch in 1..=2 {
            assert_eq!(out.losses.iter().filter(|r| r.epoch == epoch).count(), 4);
        }
        assert_eq!(out.reductions.len(), 2);
        assert!(out.reductions.iter().all(|r| r.variant == Variant::Full && r.pairs == 1));
    }

    #[test]
    fn outputs_round_trip_and_do_not_depend_on_jobs() {
        let mut s = spec(vec![HostKind::Ggnn], vec![Variant::Simple, Variant::NoGate]);
        s.seeds = vec![3, 4];
        let a = run(&s);
        s.jobs = 1;
        let b = run(&s);
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        a.write(dir.path()).unwrap();
        let losses: Vec<LossRow> = read_csv(&dir.path().join("losses.csv")).unwrap();
        let reductions: Vec<ReductionRow> = read_csv(&dir.path().join("reduction.csv")).unwrap();
        let failures: Vec<FailureRow> = read_csv(&dir.path().join("failures.csv")).unwrap();
        assert_eq!(losses, a.losses);
        assert_eq!(reductions, a.reductions);
        assert!(failures.is_empty());
        let header = std::fs::read_to_string(dir.path().join("losses.csv")).unwrap();
        assert_eq!(header.lines().next().unwrap(), LOSS_COLUMNS.join(","));
    }

    #[test]
    fn empty_grid_and_repeated_seeds_are_usage_errors() {
        let mut s = spec(vec![], vec![Variant::Full]);
        assert!(matches!(s.validate(), Err(SweepError::Usage(_))));
        s.hosts = vec![HostKind::Rsgcn];
        s.seeds = vec![1, 1];
        assert!(matches!(s.validate(), Err(SweepError::Usage(_))));
    }

    #[test]
    fn reductions_follow_the_ratio_formula() {
        let row = |variant, seed, epoch, train_loss, test_loss| LossRow {
            host: HostKind::Rsgcn,
            variant,
            layers: 3,
            dim: 50,
            seed,
            epoch,
            train_loss,
            val_metric: None,
            test_loss,
        };
        let losses = vec![
            row(Variant::None, 0, 1, 9.0, 9.0),
            row(Variant::None, 0, 2, 2.0, 1.0),
            row(Variant::Full, 0, 1, 9.0, 9.0),
            row(Variant::Full, 0, 2, 1.0, 1.2),
            row(Variant::None, 1, 2, 4.0, 2.0),
            row(Variant::Full, 1, 2, 4.0, 1.0),
            // unpaired seed is ignored
            row(Variant::Full, 2, 2, 0.1, 0.1),
        ];
        let r = reduction_rows(&losses, "toy");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].pairs, 2);
        assert_eq!(r[0].r_train_mean, 0.25);
        assert!((r[0].r_test_mean - 0.15).abs() < 1e-15);
    }
}
