use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{EdgeId, EdgeKey, Graph, Step, Topology};
use crate::error::{Error, Result};
use crate::rng::{absorb, mix64};

/// Deepest encodable tree vertex.
pub const MAX_TREE_DEPTH: u32 = 1 << 16;

/// Path key of the root.
pub const ROOT_KEY: u64 = mix64(0x5452_4545_524f_4f54); // "TREEROOT"

/// Path key of child `index` of the vertex with key `parent`.
#[inline]
pub fn child_key(parent: u64, index: u32) -> u64 {
    absorb(parent, index as u64 + 1)
}

struct Node {
    parent: Option<TreeVertex>,
    child: u32,
    depth: u32,
    key: u64,
}

/// A vertex of the d-ary tree, stored as a shared child-index path.
///
/// Siblings and descendants share their common prefix, so moving to a parent
/// or child is O(1). The path key is an iterated hash of the child indices
/// and doubles as the key of the edge to the parent.
#[derive(Clone)]
pub struct TreeVertex(Arc<Node>);

impl TreeVertex {
    pub fn root() -> Self {
        TreeVertex(Arc::new(Node { parent: None, child: 0, depth: 0, key: ROOT_KEY }))
    }

    /// Builds the vertex reached from the root by the child indices in `path`.
    pub fn from_path(d: usize, path: &[i64]) -> Result<Self> {
        let mut v = Self::root();
        for &c in path {
            if c < 0 || c as usize >= d {
                return Err(Error::InvalidVertex {
                    vertex: format!("{path:?}"),
                    reason: format!("child index {c} outside [0, {})", d),
                });
            }
            v = v.child(c as u32)?;
        }
        Ok(v)
    }

    pub fn child(&self, index: u32) -> Result<Self> {
        let depth = self.0.depth + 1;
        if depth > MAX_TREE_DEPTH {
            return Err(Error::DepthCap { depth: depth as u64, cap: MAX_TREE_DEPTH as u64 });
        }
        Ok(TreeVertex(Arc::new(Node {
            parent: Some(self.clone()),
            child: index,
            depth,
            key: child_key(self.0.key, index),
        })))
    }

    pub fn parent(&self) -> Option<&TreeVertex> {
        self.0.parent.as_ref()
    }

    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    pub fn key(&self) -> u64 {
        self.0.key
    }

    /// Index of this vertex among its parent's children (0 for the root).
    pub fn child_index(&self) -> u32 {
        self.0.child
    }

    /// Child indices from the root.
    pub fn path(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.0.depth as usize);
        let mut v = self;
        while let Some(p) = v.parent() {
            out.push(v.0.child);
            v = p;
        }
        out.reverse();
        out
    }

    fn ancestor_at(&self, depth: u32) -> &TreeVertex {
        let mut v = self;
        while v.0.depth > depth {
            v = v.parent().expect("non-root has a parent");
        }
        v
    }
}

// Deep paths would overflow the stack under the default recursive drop.
impl Drop for Node {
    fn drop(&mut self) {
        let mut next = self.parent.take();
        while let Some(TreeVertex(arc)) = next {
            match Arc::try_unwrap(arc) {
                Ok(mut node) => next = node.parent.take(),
                Err(_) => break,
            }
        }
    }
}

impl PartialEq for TreeVertex {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b) = (self, other);
        loop {
            if Arc::ptr_eq(&a.0, &b.0) {
                return true;
            }
            if a.0.depth != b.0.depth || a.0.key != b.0.key || a.0.child != b.0.child {
                return false;
            }
            match (a.parent(), b.parent()) {
                (Some(pa), Some(pb)) => {
                    a = pa;
                    b = pb;
                }
                (None, None) => return true,
                _ => return false,
            }
        }
    }
}

impl Eq for TreeVertex {}

impl Hash for TreeVertex {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.key);
    }
}

/// Lexicographic order on child-index paths (a prefix sorts first).
impl Ord for TreeVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.0.depth.min(other.0.depth);
        let mut a = self.ancestor_at(common);
        let mut b = other.ancestor_at(common);
        if a == b {
            return self.0.depth.cmp(&other.0.depth);
        }
        loop {
            let (pa, pb) = (a.parent().expect("distinct"), b.parent().expect("distinct"));
            if pa == pb {
                return a.0.child.cmp(&b.0.child);
            }
            a = pa;
            b = pb;
        }
    }
}

impl PartialOrd for TreeVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.depth > 16 {
            write!(f, "T(depth {}, key {:016x})", self.0.depth, self.0.key)
        } else {
            write!(f, "T{:?}", self.path())
        }
    }
}

/// The rooted tree in which every vertex has `d` children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DAryTree {
    d: usize,
}

impl DAryTree {
    pub fn new(d: usize) -> Self {
        DAryTree { d }
    }

    pub fn arity(&self) -> usize {
        self.d
    }
}

impl Graph for DAryTree {
    type Vertex = TreeVertex;

    fn topology(&self) -> Topology {
        Topology::DAryTree(self.d)
    }

    fn root(&self) -> TreeVertex {
        TreeVertex::root()
    }

    fn validate(&self, v: &TreeVertex) -> Result<()> {
        let mut u = v;
        while let Some(p) = u.parent() {
            if u.0.child as usize >= self.d {
                return Err(Error::InvalidVertex {
                    vertex: format!("{v:?}"),
                    reason: format!("child index {} outside [0, {})", u.0.child, self.d),
                });
            }
            u = p;
        }
        Ok(())
    }

    /// Parent first (absent at the root), then children `0..d`.
    fn neighbors_into(&self, v: &TreeVertex, out: &mut Vec<Step<TreeVertex>>) -> Result<()> {
        if let Some(p) = v.parent() {
            out.push(Step { vertex: p.clone(), edge: EdgeKey(v.key()), toward_root: true });
        }
        for i in 0..self.d as u32 {
            let c = v.child(i)?;
            let edge = EdgeKey(c.key());
            out.push(Step { vertex: c, edge, toward_root: false });
        }
        Ok(())
    }

    fn norm(&self, v: &TreeVertex) -> u64 {
        v.depth() as u64
    }

    fn vertex_key(&self, v: &TreeVertex) -> u64 {
        v.key()
    }

    fn edge_id(&self, a: &TreeVertex, b: &TreeVertex) -> Result<EdgeId<TreeVertex>> {
        if b.parent() == Some(a) {
            Ok(EdgeId { tail: a.clone(), head: b.clone() })
        } else if a.parent() == Some(b) {
            Ok(EdgeId { tail: b.clone(), head: a.clone() })
        } else {
            Err(Error::InvalidVertex { vertex: format!("{b:?}"), reason: format!("not adjacent to {a:?}") })
        }
    }

    fn edge_key(&self, e: &EdgeId<TreeVertex>) -> EdgeKey {
        EdgeKey(e.head.key())
    }

    fn is_tree(&self) -> bool {
        true
    }

    fn as_tree(&self) -> Option<&DAryTree> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_has_children_only() {
        let g = DAryTree::new(3);
        let n = g.neighbors(&g.root()).unwrap();
        assert_eq!(n.len(), 3);
        assert!(n.iter().all(|s| !s.toward_root && s.vertex.depth() == 1));
        assert_eq!(g.norm(&g.root()), 0);
    }

    #[test]
    fn paths_validate_child_indices() {
        assert!(TreeVertex::from_path(2, &[0, 1, 1]).is_ok());
        assert!(matches!(TreeVertex::from_path(2, &[0, -1]), Err(Error::InvalidVertex { .. })));
        assert!(TreeVertex::from_path(2, &[2]).is_err());
    }

    #[test]
    fn equality_is_structural() {
        let a = TreeVertex::from_path(2, &[1, 0, 1]).unwrap();
        let b = TreeVertex::from_path(2, &[1, 0, 1]).unwrap();
        assert_eq!(a, b);
        let up_down = a.parent().unwrap().child(1).unwrap();
        assert_eq!(up_down, a);
        assert_ne!(a, TreeVertex::from_path(2, &[1, 0, 0]).unwrap());
    }

    #[test]
    fn order_is_lexicographic_on_paths() {
        let v = |p: &[i64]| TreeVertex::from_path(2, p).unwrap();
        assert!(v(&[0, 1]) < v(&[1, 0]));
        assert!(v(&[0]) < v(&[0, 0]));
        assert!(v(&[1, 1, 0]) > v(&[1, 0, 1]));
        assert_eq!(v(&[1, 1]).cmp(&v(&[1, 1])), Ordering::Equal);
    }

    #[test]
    fn parent_edge_matches_child_edge() {
        let g = DAryTree::new(2);
        let v = TreeVertex::from_path(2, &[1, 0]).unwrap();
        let up = &g.neighbors(&v).unwrap()[0];
        let down = g.neighbors(up.vertex.parent().unwrap()).unwrap();
        let p = up.vertex.clone();
        let from_parent = g.neighbors(&p).unwrap().into_iter().find(|s| s.vertex == v).unwrap();
        assert_eq!(from_parent.edge, up.edge);
        assert!(!down.is_empty());
        assert_eq!(g.edge_key(&g.edge_id(&v, &p).unwrap()), up.edge);
    }

    #[test]
    fn depth_cap_is_enforced() {
        let mut v = TreeVertex::root();
        for _ in 0..MAX_TREE_DEPTH {
            v = v.child(0).unwrap();
        }
        assert!(matches!(v.child(0), Err(Error::DepthCap { .. })));
    }
}
