//! Online maintenance of a DFS tree under a stream of single updates.
//!
//! Updates accumulate into a batch against a fixed base graph and its query
//! structure; every update reports a fresh tree by rebuilding from the base.
//! Every `c0` updates the base moves forward. In the deamortized schedule the
//! next structure is built in `c0` equal slices while the current one serves
//! updates, so no single update pays for a full build.

use thiserror::Error;

use crate::apps::{AppError, AppState};
use crate::graph::{normalize_batch, Graph, GraphError, Update, UpdateBatch};
use crate::query::{IncrementalBuild, QueryStructure};
use crate::rebuild::{rebuild_batch, RebuildError, RebuildOptions, RebuildTrace};
use crate::tree::{build_tree, DfsTree, VisitOrder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaintainerError {
    #[error("update {0:?} is not an edge insertion")]
    NotAnInsertion(Update),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rebuild(#[from] RebuildError),
    #[error(transparent)]
    Apps(#[from] AppError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    Incremental,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    Amortized,
    #[default]
    Deamortized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Config {
    pub mode: Mode,
    pub schedule: Schedule,
    /// Fixed epoch length; recomputed from `(n, m)` at every boundary when
    /// absent.
    pub c0: Option<usize>,
    pub audit: bool,
    /// Refresh connectivity, biconnectivity and 2-edge-connectivity labels
    /// after every update.
    pub track_apps: bool,
}

fn log2_clamped(x: usize) -> f64 {
    (x.max(2) as f64).log2()
}

/// Epoch length for the fully dynamic mode:
/// `max(1, floor(sqrt(m / (n log^3 n))))`, clamped to `[1, n]`.
pub fn epoch_len_full(n: usize, m: usize) -> usize {
    let l = log2_clamped(n);
    let raw = (m as f64 / (n.max(1) as f64 * l * l * l)).sqrt().floor() as usize;
    raw.clamp(1, n.max(1))
}

/// Epoch length for the insertion-only mode: `floor(sqrt(m))`, clamped to
/// `[1, n]`.
pub fn epoch_len_incremental(n: usize, m: usize) -> usize {
    let raw = (m as f64).sqrt().floor() as usize;
    raw.clamp(1, n.max(1))
}

/// What one update did.
#[derive(Debug, Clone, Default)]
pub struct UpdateReport {
    pub trace: RebuildTrace,
    /// Size of the normalized batch the tree was rebuilt from.
    pub k: usize,
    /// Raw updates pending against the active base after this update.
    pub pending: usize,
    /// Work units spent on the background build during this update.
    pub slice_work: usize,
    /// Slice bound `ceil(W / c0)` of the background build, when one is running.
    pub slice_bound: usize,
    /// The batch was too large for the base and the structure was rebuilt
    /// from scratch.
    pub fallback: bool,
    pub epoch_boundary: bool,
}

#[derive(Debug)]
struct Background {
    graph: Graph,
    build: IncrementalBuild,
    /// Raw updates applied to the live graph since `graph` was captured.
    since: Vec<Update>,
    slice: usize,
}

#[derive(Debug)]
pub struct Maintainer {
    cfg: Config,
    live: Graph,
    base: Graph,
    d: QueryStructure,
    pending: Vec<Update>,
    next: Option<Background>,
    c0: usize,
    in_epoch: usize,
    updates: usize,
    tree: DfsTree,
    apps: Option<AppState>,
    max_pending: usize,
}

impl Maintainer {
    pub fn new(g: Graph, cfg: Config) -> Result<Self, MaintainerError> {
        let tree = build_tree(&g, VisitOrder::Ascending);
        let d = QueryStructure::build(&g, tree.clone());
        let mut m = Maintainer {
            cfg,
            live: g.clone(),
            base: g,
            d,
            pending: Vec::new(),
            next: None,
            c0: 1,
            in_epoch: 0,
            updates: 0,
            tree,
            apps: None,
            max_pending: 0,
        };
        m.c0 = m.epoch_len();
        if cfg.track_apps {
            let opts = m.opts();
            let (_, trace) = rebuild_batch(&m.base, &mut m.d, &UpdateBatch::default(), opts)?;
            m.apps = Some(AppState::compute(&m.tree, &trace, &m.d, &UpdateBatch::default())?);
        }
        Ok(m)
    }

    fn opts(&self) -> RebuildOptions {
        RebuildOptions { audit: self.cfg.audit }
    }

    fn epoch_len(&self) -> usize {
        if let Some(c) = self.cfg.c0 {
            return c.max(1);
        }
        let (n, m) = (self.live.vertex_count(), self.live.edge_count());
        match self.cfg.mode {
            Mode::Full => epoch_len_full(n, m),
            Mode::Incremental => epoch_len_incremental(n, m),
        }
    }

    pub fn config(&self) -> Config {
        self.cfg
    }

    pub fn graph(&self) -> &Graph {
        &self.live
    }

    pub fn tree(&self) -> &DfsTree {
        &self.tree
    }

    pub fn apps(&self) -> Option<&AppState> {
        self.apps.as_ref()
    }

    pub fn c0(&self) -> usize {
        self.c0
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Largest pending batch seen so far.
    pub fn max_pending(&self) -> usize {
        self.max_pending
    }

    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Applies one update and reports the new tree.
    pub fn update(&mut self, upd: Update) -> Result<UpdateReport, MaintainerError> {
        if self.cfg.mode == Mode::Incremental && !upd.is_edge_insertion() {
            return Err(MaintainerError::NotAnInsertion(upd));
        }
        self.live.apply_update(&upd)?;
        self.updates += 1;
        self.in_epoch += 1;
        self.pending.push(upd.clone());
        self.max_pending = self.max_pending.max(self.pending.len());
        if let Some(bg) = &mut self.next {
            bg.since.push(upd);
        }

        let mut report = UpdateReport::default();
        let mut batch = normalize_batch(&self.base, &self.pending)?;
        if batch.len() > self.base.vertex_count().max(1) {
            self.restart_from_live();
            batch = UpdateBatch::default();
            report.fallback = true;
        }
        report.k = batch.len();
        let opts = self.opts();
        let (tree, trace) = rebuild_batch(&self.base, &mut self.d, &batch, opts)?;
        if self.cfg.track_apps {
            self.apps = Some(AppState::compute(&tree, &trace, &self.d, &batch)?);
        }
        self.tree = tree;
        report.trace = trace;

        if let Some(bg) = &mut self.next {
            report.slice_work = bg.build.step(bg.slice);
            report.slice_bound = bg.slice;
        }

        if self.in_epoch >= self.c0 {
            report.epoch_boundary = true;
            self.boundary();
        }
        report.pending = self.pending.len();
        self.max_pending = self.max_pending.max(report.pending);
        Ok(report)
    }

    /// [`Maintainer::update`] restricted to edge insertions.
    pub fn update_incremental(&mut self, upd: Update) -> Result<UpdateReport, MaintainerError> {
        if !upd.is_edge_insertion() {
            return Err(MaintainerError::NotAnInsertion(upd));
        }
        self.update(upd)
    }

    fn boundary(&mut self) {
        self.in_epoch = 0;
        match self.cfg.schedule {
            Schedule::Amortized => {
                self.base = self.live.clone();
                self.d = QueryStructure::build(&self.base, self.tree.clone());
                self.pending.clear();
                self.c0 = self.epoch_len();
            }
            Schedule::Deamortized => {
                if let Some(bg) = self.next.take() {
                    debug_assert!(bg.build.is_done());
                    self.base = bg.graph;
                    self.d = bg.build.finish();
                    self.pending = bg.since;
                }
                self.c0 = self.epoch_len();
                let build = IncrementalBuild::new(&self.live, self.tree.clone());
                let slice = build.total_work().div_ceil(self.c0);
                self.next = Some(Background { graph: self.live.clone(), build, since: Vec::new(), slice });
            }
        }
    }

    fn restart_from_live(&mut self) {
        self.base = self.live.clone();
        let tree = build_tree(&self.base, VisitOrder::Ascending);
        self.d = QueryStructure::build(&self.base, tree);
        self.pending.clear();
    }
}
