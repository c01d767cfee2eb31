use super::{EdgeId, EdgeKey, Graph, Step, Topology};
use crate::error::{Error, Result};

/// The subgraph of `inner` induced by the vertices accepted by `keep`.
///
/// Used for finite boxes (brute-force oracles) and for the shifted
/// half-spaces `{x_d >= h}` explored by the half-space chain.
pub struct Restricted<G, F> {
    inner: G,
    keep: F,
}

impl<G, F> Restricted<G, F>
where
    G: Graph,
    F: Fn(&G::Vertex) -> bool + Send + Sync,
{
    pub fn new(inner: G, keep: F) -> Self {
        Restricted { inner, keep }
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G, F> Graph for Restricted<G, F>
where
    G: Graph,
    F: Fn(&G::Vertex) -> bool + Send + Sync,
{
    type Vertex = G::Vertex;

    fn topology(&self) -> Topology {
        self.inner.topology()
    }

    fn root(&self) -> G::Vertex {
        self.inner.root()
    }

    fn validate(&self, v: &G::Vertex) -> Result<()> {
        self.inner.validate(v)?;
        if (self.keep)(v) {
            Ok(())
        } else {
            Err(Error::InvalidVertex { vertex: format!("{v:?}"), reason: "outside the restricted region".into() })
        }
    }

    fn neighbors_into(&self, v: &G::Vertex, out: &mut Vec<Step<G::Vertex>>) -> Result<()> {
        let start = out.len();
        self.inner.neighbors_into(v, out)?;
        let mut i = start;
        while i < out.len() {
            if (self.keep)(&out[i].vertex) {
                i += 1;
            } else {
                out.remove(i);
            }
        }
        Ok(())
    }

    fn norm(&self, v: &G::Vertex) -> u64 {
        self.inner.norm(v)
    }

    fn vertex_key(&self, v: &G::Vertex) -> u64 {
        self.inner.vertex_key(v)
    }

    fn edge_id(&self, a: &G::Vertex, b: &G::Vertex) -> Result<EdgeId<G::Vertex>> {
        self.validate(a)?;
        self.validate(b)?;
        self.inner.edge_id(a, b)
    }

    fn edge_key(&self, e: &EdgeId<G::Vertex>) -> EdgeKey {
        self.inner.edge_key(e)
    }

    fn is_tree(&self) -> bool {
        self.inner.is_tree()
    }

    fn is_oriented(&self) -> bool {
        self.inner.is_oriented()
    }
}
