//! Call graph over resolved methods and its bottom-up SCC order.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::frontend::ast::{walk, MethodRef, StmtKind};
use crate::frontend::Resolved;

#[derive(Clone, Debug)]
pub struct CallGraph {
    pub callees: BTreeMap<MethodRef, BTreeSet<MethodRef>>,
}

impl CallGraph {
    pub fn new(resolved: &Resolved) -> Self {
        let mut callees = BTreeMap::new();
        for r in resolved.method_refs() {
            let mut out = BTreeSet::new();
            walk(&resolved.method(r).body, &mut |s| {
                if matches!(s.kind, StmtKind::Call { .. } | StmtKind::New { .. }) {
                    if let Some(c) = resolved.callee(s.id) {
                        out.insert(c.clone());
                    }
                }
            });
            callees.insert(r.clone(), out);
        }
        Self { callees }
    }

    /// Strongly connected components, callees before callers. Members of a
    /// component are sorted.
    pub fn bottom_up(&self) -> Vec<Vec<MethodRef>> {
        let mut g: DiGraph<MethodRef, ()> = DiGraph::new();
        let idx: BTreeMap<&MethodRef, NodeIndex> = self.callees.keys().map(|m| (m, g.add_node(m.clone()))).collect();
        for (m, cs) in &self.callees {
            for c in cs {
                g.add_edge(idx[m], idx[c], ());
            }
        }
        let mut sccs: Vec<Vec<MethodRef>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<MethodRef> = c.into_iter().map(|i| g[i].clone()).collect();
                v.sort();
                v
            })
            .collect();
        // tarjan yields reverse topological order already; keep it stable
        sccs.dedup();
        sccs
    }

    pub fn is_recursive(&self, scc: &[MethodRef]) -> bool {
        scc.len() > 1 || scc.iter().any(|m| self.callees[m].contains(m))
    }

    /// Methods reachable from `m` through calls, including `m`.
    pub fn transitive(&self, m: &MethodRef) -> BTreeSet<MethodRef> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![m.clone()];
        while let Some(x) = stack.pop() {
            if seen.insert(x.clone()) {
                stack.extend(self.callees[&x].iter().cloned());
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, resolve};

    #[test]
    fn callees_come_first() {
        let src = "class A {
            method a() { b(); }
            method b() { c(); }
            method c() { b(); }
            method d() { d(); }
        }";
        let r = resolve(parse(src).unwrap()).unwrap();
        let cg = CallGraph::new(&r);
        let order: Vec<Vec<String>> = cg
            .bottom_up()
            .iter()
            .map(|s| s.iter().map(|m| m.to_string()).collect())
            .collect();
        let pos = |name: &str| order.iter().position(|s| s.iter().any(|m| m == name)).unwrap();
        assert!(pos("A.b") < pos("A.a"));
        assert_eq!(order[pos("A.b")], vec!["A.b", "A.c"]);
        let d = &cg.bottom_up()[pos("A.d")];
        assert!(cg.is_recursive(d));
        assert!(!cg.is_recursive(&cg.bottom_up()[pos("A.a")]));
    }
}
