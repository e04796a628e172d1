//! Depth-first traversal of the network's linear regions.
//!
//! Cells live on a LIFO stack. Each step pops up to `batch_size` cells and
//! advances every one of them by a single action: prune, split on the lowest
//! critical neuron, collapse into the next layer, or extract the final patch.
//! Results are pushed back in batch order, and emitted patches are sorted by
//! cell id at the end, so the output does not depend on the batch size or on
//! the thread schedule.

mod cell;

pub use cell::{
    bound_cell, collapse, extract_patch, find_critical, neuron_state, prune, split_cell, Cell, CellGeometry,
    NeuronState, SurfacePatch,
};

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Tolerances;
use crate::mesh::PolyMesh;
use crate::net::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub batch_size: usize,
    /// Limit on the estimated size of live cell state, in bytes.
    pub memory_budget: usize,
    pub disable_pruning: bool,
    /// Also prune each child right after a split, not only after layer transitions.
    pub prune_after_split: bool,
    pub tolerances: Tolerances,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            batch_size: 4096,
            memory_budget: 2 << 30,
            disable_pruning: false,
            prune_after_split: false,
            tolerances: Tolerances::default(),
        }
    }
}

/// Seconds spent per phase, summed over cells (so it exceeds wall time when
/// cells run in parallel), plus the total wall time of the call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub prune: f64,
    pub split: f64,
    pub collapse: f64,
    pub extract: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraversalStats {
    pub cells_created: u64,
    pub cells_pruned: u64,
    pub cells_split: u64,
    pub cells_emitted: u64,
    /// Cells that reached the output layer.
    pub cells_final: u64,
    /// Final cells whose plane misses them: the bound did not prune them
    /// although they hold no surface.
    pub cells_final_empty: u64,
    pub peak_live_cells: u64,
    pub peak_live_bytes: u64,
    pub wall_time: PhaseTimes,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// Sorted by cell id.
    pub patches: Vec<SurfacePatch>,
    pub stats: TraversalStats,
}

impl Extraction {
    pub fn weld(&self, tol: &Tolerances) -> PolyMesh {
        weld(&self.patches, tol)
    }
}

enum Outcome {
    Pruned,
    Split(Vec<Cell>),
    Advanced(Cell),
    Final(Option<SurfacePatch>),
}

#[derive(Default)]
struct StepTimes {
    prune: Duration,
    split: Duration,
    collapse: Duration,
    extract: Duration,
}

fn step(mut cell: Cell, net: &Network, cfg: &EngineConfig) -> Result<(Outcome, StepTimes)> {
    let tol = &cfg.tolerances;
    let mut times = StepTimes::default();
    if cell.needs_prune && !cfg.disable_pruning {
        let t = Instant::now();
        let keep = prune(&cell, net);
        times.prune = t.elapsed();
        if !keep {
            return Ok((Outcome::Pruned, times));
        }
    }
    cell.needs_prune = false;

    if cell.layer == net.num_layers() {
        let t = Instant::now();
        let patch = extract_patch(&cell, tol)?;
        times.extract = t.elapsed();
        return Ok((Outcome::Final(patch), times));
    }

    if cell.layer > 0 {
        let t = Instant::now();
        while cell.resolved < cell.width() {
            let i = cell.resolved;
            match neuron_state(&cell, i, tol) {
                NeuronState::Critical => {
                    let (neg, pos) = split_cell(&cell, i, tol)?;
                    let mut children: Vec<Cell> = neg.into_iter().chain(pos).collect();
                    for c in &mut children {
                        c.needs_prune = cfg.prune_after_split;
                    }
                    times.split = t.elapsed();
                    return Ok((Outcome::Split(children), times));
                }
                state => {
                    cell.mask[i] = state == NeuronState::Active;
                    cell.resolved += 1;
                }
            }
        }
        times.split = t.elapsed();
    }

    let t = Instant::now();
    let next = collapse(&cell, net);
    times.collapse = t.elapsed();
    Ok((Outcome::Advanced(next), times))
}

/// Extracts the zero level set of `net` inside its domain as per-cell patches.
pub fn extract(net: &Network, cfg: &EngineConfig) -> Result<Extraction> {
    if net.encoding().is_some() {
        return Err(Error::InvalidNetwork(
            "network uses a positional encoding; convert it to a piecewise-linear surrogate first".into(),
        ));
    }
    if !net.domain().is_valid() {
        return Err(Error::InvalidNetwork("degenerate domain box".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let start = Instant::now();
    let mut stats = TraversalStats::default();
    let mut times = StepTimes::default();
    let mut patches = Vec::new();

    let root = Cell::root(net);
    let mut live_bytes = root.approx_bytes();
    let mut stack = vec![root];
    stats.cells_created = 1;
    stats.peak_live_cells = 1;
    stats.peak_live_bytes = live_bytes as u64;

    while !stack.is_empty() {
        let take = cfg.batch_size.min(stack.len());
        let batch = stack.split_off(stack.len() - take);
        live_bytes -= batch.iter().map(Cell::approx_bytes).sum::<usize>();
        let outcomes: Vec<Result<(Outcome, StepTimes)>> = if batch.len() > 1 {
            batch.into_par_iter().map(|c| step(c, net, cfg)).collect()
        } else {
            batch.into_iter().map(|c| step(c, net, cfg)).collect()
        };
        let mut added = 0usize;
        for outcome in outcomes {
            let (outcome, t) = outcome?;
            times.prune += t.prune;
            times.split += t.split;
            times.collapse += t.collapse;
            times.extract += t.extract;
            match outcome {
                Outcome::Pruned => {
                    stats.cells_pruned += 1;
                }
                Outcome::Split(children) => {
                    if children.len() == 2 {
                        stats.cells_split += 1;
                    }
                    stats.cells_created += children.len() as u64;
                    for c in children {
                        added += c.approx_bytes();
                        stack.push(c);
                    }
                }
                Outcome::Advanced(c) => {
                    added += c.approx_bytes();
                    stack.push(c);
                }
                Outcome::Final(p) => {
                    stats.cells_final += 1;
                    match p {
                        Some(p) => {
                            stats.cells_emitted += 1;
                            patches.push(p);
                        }
                        None => stats.cells_final_empty += 1,
                    }
                }
            }
        }
        live_bytes += added;
        stats.peak_live_cells = stats.peak_live_cells.max(stack.len() as u64);
        stats.peak_live_bytes = stats.peak_live_bytes.max(live_bytes as u64);
        if live_bytes > cfg.memory_budget {
            let layer = stack.iter().map(|c| c.layer).max().unwrap_or(0);
            return Err(Error::MemoryBudget {
                layer,
                bytes: live_bytes,
                limit: cfg.memory_budget,
            });
        }
    }

    patches.sort_by(|a, b| a.cell_id.cmp(&b.cell_id));
    let secs = |d: Duration| d.as_secs_f64();
    stats.wall_time = PhaseTimes {
        prune: secs(times.prune),
        split: secs(times.split),
        collapse: secs(times.collapse),
        extract: secs(times.extract),
        total: secs(start.elapsed()),
    };
    Ok(Extraction { patches, stats })
}

pub use crate::mesh::weld;
