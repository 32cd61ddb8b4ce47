//! Connected components by minimum-label propagation.

use alloc::vec::Vec;

use super::pregel::{pregel, PregelProgram, PregelStats};
use crate::error::Result;
use crate::exec::{AccessSpec, SkipStale};
use crate::graph::{PropertyGraph, Triplet, VertexId};
use crate::wire::{Data, Wire, WireError};

/// Lowest vertex id reached so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentId(pub VertexId);

impl Wire for ComponentId {
    fn encode(&self, out: &mut Vec<u8>) {
        self.0.encode(out);
    }

    fn decode(input: &mut &[u8]) -> core::result::Result<Self, WireError> {
        Ok(ComponentId(VertexId::decode(input)?))
    }
}

/// Each edge carries the smaller label toward the endpoint holding the larger
/// one, so components are weakly connected ones.
///
/// Skipping edges by one endpoint (`Out` or `In`) is exact only when every
/// edge also appears reversed: otherwise a label reaching the destination of
/// an edge whose source did not change is never sent back along it.
/// [`connected_components`] runs the program on such a graph.
#[derive(Clone, Copy, Debug)]
pub struct ComponentsProgram {
    pub skip: SkipStale,
    pub max_iterations: usize,
}

impl Default for ComponentsProgram {
    fn default() -> Self {
        ComponentsProgram {
            skip: SkipStale::Out,
            max_iterations: usize::MAX,
        }
    }
}

impl<E: Data> PregelProgram<E> for ComponentsProgram {
    type State = ComponentId;
    type Msg = ComponentId;

    fn access(&self) -> AccessSpec {
        AccessSpec::BOTH
    }

    fn skip_stale(&self) -> SkipStale {
        self.skip
    }

    fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    fn vprog(&self, _id: VertexId, state: &ComponentId, msg: &ComponentId) -> ComponentId {
        *state.min(msg)
    }

    fn send(&self, t: &Triplet<'_, ComponentId, E>) -> (Option<ComponentId>, Option<ComponentId>) {
        let (src, dst) = (*t.src_attr(), *t.dst_attr());
        if src > dst {
            (Some(dst), None)
        } else if src < dst {
            (None, Some(src))
        } else {
            (None, None)
        }
    }

    fn gather(&self, a: &ComponentId, b: &ComponentId) -> ComponentId {
        *a.min(b)
    }

    fn halted(&self, _state: &ComponentId) -> bool {
        false
    }
}

/// Labels every vertex with the smallest id of its weakly connected
/// component. The labels are computed on the graph holding every edge in
/// both directions, skipping edges whose source did not change.
pub fn connected_components<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
) -> Result<(PropertyGraph<ComponentId, E>, PregelStats)> {
    connected_components_with(g, SkipStale::Out)
}

/// [`connected_components`] with an explicit stale-edge filter. Every filter
/// except `Both` gives the same labels.
pub fn connected_components_with<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
    skip: SkipStale,
) -> Result<(PropertyGraph<ComponentId, E>, PregelStats)> {
    let prog = ComponentsProgram {
        skip,
        ..ComponentsProgram::default()
    };
    let (labeled, stats) = pregel(&symmetrized(g)?, &prog)?;
    let out = g
        .left_join_v(&labeled.vertices())?
        .map_v(|id, (_, c)| c.unwrap_or(ComponentId(id)));
    Ok((out, stats))
}

/// The visible edges in both directions without attributes, over the visible
/// vertices labeled with their own ids.
fn symmetrized<V: Data, E: Data>(
    g: &PropertyGraph<V, E>,
) -> Result<PropertyGraph<ComponentId, ()>> {
    let vertices = g.vertices().map_values(|id, _| ComponentId(*id));
    let edges = g
        .edges()
        .flat_map(|&(s, d), _| [((s, d), ()), ((d, s), ())]);
    PropertyGraph::build(&vertices, &edges, |a, _| *a, None)
}
