//! Physical execution of triplet operators: the replicated vertex view and
//! its incremental maintenance, join planning from declared attribute
//! access, and the choice between a sequential edge scan and an index scan.

mod triplets;
mod view;

pub use triplets::MrStats;
pub(crate) use triplets::{for_each_triplet, run_mr, EdgeSite};
pub(crate) use view::refresh_view;
pub use view::{incremental_update, materialize_view, Mirror, ReplicatedVertexView};

/// Which endpoint attributes a triplet function reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct AccessSpec {
    pub reads_src: bool,
    pub reads_dst: bool,
}

impl AccessSpec {
    pub const NONE: AccessSpec = AccessSpec {
        reads_src: false,
        reads_dst: false,
    };
    pub const SRC: AccessSpec = AccessSpec {
        reads_src: true,
        reads_dst: false,
    };
    pub const DST: AccessSpec = AccessSpec {
        reads_src: false,
        reads_dst: true,
    };
    pub const BOTH: AccessSpec = AccessSpec {
        reads_src: true,
        reads_dst: true,
    };

    pub fn union(self, other: AccessSpec) -> AccessSpec {
        AccessSpec {
            reads_src: self.reads_src || other.reads_src,
            reads_dst: self.reads_dst || other.reads_dst,
        }
    }

    /// Whether every side read by `other` is also read by `self`.
    pub fn covers(self, other: AccessSpec) -> bool {
        (self.reads_src || !other.reads_src) && (self.reads_dst || !other.reads_dst)
    }

    pub fn is_none(self) -> bool {
        !self.reads_src && !self.reads_dst
    }
}

/// Physical plan for assembling triplets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JoinPlan {
    /// Edges joined with both source and target attributes.
    ThreeWay,
    /// Edges joined with source attributes only.
    TwoWaySrc,
    /// Edges joined with target attributes only.
    TwoWayDst,
    /// Edges alone; no vertex attribute is shipped.
    NoJoin,
}

impl JoinPlan {
    /// Vertex sides this plan ships to the edges.
    pub fn sides(self) -> AccessSpec {
        match self {
            JoinPlan::ThreeWay => AccessSpec::BOTH,
            JoinPlan::TwoWaySrc => AccessSpec::SRC,
            JoinPlan::TwoWayDst => AccessSpec::DST,
            JoinPlan::NoJoin => AccessSpec::NONE,
        }
    }
}

pub fn plan_join(spec: AccessSpec) -> JoinPlan {
    match (spec.reads_src, spec.reads_dst) {
        (true, true) => JoinPlan::ThreeWay,
        (true, false) => JoinPlan::TwoWaySrc,
        (false, true) => JoinPlan::TwoWayDst,
        (false, false) => JoinPlan::NoJoin,
    }
}

/// Edges a triplet aggregation may skip because the named endpoints did not
/// change since the vertex view was last shipped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SkipStale {
    /// Visit every edge.
    #[default]
    None,
    /// Skip edges whose target is unchanged.
    In,
    /// Skip edges whose source is unchanged.
    Out,
    /// Skip edges where either endpoint is unchanged.
    Both,
    /// Skip edges where neither endpoint changed.
    Either,
}

impl SkipStale {
    /// Sides whose change bits the filter needs.
    pub fn sides(self) -> AccessSpec {
        match self {
            SkipStale::None => AccessSpec::NONE,
            SkipStale::In => AccessSpec::DST,
            SkipStale::Out => AccessSpec::SRC,
            SkipStale::Both | SkipStale::Either => AccessSpec::BOTH,
        }
    }

    /// Whether an edge with the given endpoint change bits is visited.
    pub fn keeps(self, src_changed: bool, dst_changed: bool) -> bool {
        match self {
            SkipStale::None => true,
            SkipStale::In => dst_changed,
            SkipStale::Out => src_changed,
            SkipStale::Both => src_changed && dst_changed,
            SkipStale::Either => src_changed || dst_changed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScanMode {
    /// Walk every edge of the partition.
    SequentialEdgeScan,
    /// Walk the CSR blocks (or target lists) of active vertices only.
    VertexIndexScan,
}

/// How the scan mode is picked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ScanPolicy {
    /// Index scan when the active fraction is below the threshold.
    #[default]
    Auto,
    Force(ScanMode),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanStrategy {
    pub policy: ScanPolicy,
    pub threshold: f64,
    /// Decide per edge partition from its local active fraction instead of
    /// once from the global fraction.
    pub per_partition: bool,
}

impl ScanStrategy {
    pub const DEFAULT_THRESHOLD: f64 = 0.8;

    pub fn forced(mode: ScanMode) -> Self {
        ScanStrategy {
            policy: ScanPolicy::Force(mode),
            ..Self::default()
        }
    }
}

impl Default for ScanStrategy {
    fn default() -> Self {
        ScanStrategy {
            policy: ScanPolicy::Auto,
            threshold: Self::DEFAULT_THRESHOLD,
            per_partition: false,
        }
    }
}

/// Index scan exactly when `active_fraction < threshold`, unless forced.
pub fn choose_scan(active_fraction: f64, s: &ScanStrategy) -> ScanMode {
    match s.policy {
        ScanPolicy::Force(mode) => mode,
        ScanPolicy::Auto if active_fraction < s.threshold => ScanMode::VertexIndexScan,
        ScanPolicy::Auto => ScanMode::SequentialEdgeScan,
    }
}
