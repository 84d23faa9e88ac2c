use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SourceUnit;

/// A call site: the calling function, the line, and what is called.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallSite {
    pub function: String,
    pub line: u32,
    pub name: String,
    pub arity: usize,
}

/// Location of a resolved callee within the unit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Callee {
    pub unit: usize,
    pub function: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Resolved call sites and the qualified name of their target.
    pub edges: BTreeMap<CallSite, String>,
    pub unresolved: BTreeSet<CallSite>,
    targets: BTreeMap<CallSite, Callee>,
}

impl CallGraph {
    /// Where the target of a resolved call site lives.
    pub fn callee_of(&self, site: &CallSite) -> Option<Callee> {
        self.targets.get(site).copied()
    }
}

fn owner(qualified: &str) -> &str {
    qualified.rsplit_once('.').map_or("", |(o, _)| o)
}

fn simple_name(qualified: &str) -> &str {
    qualified.rsplit(['.', '$']).next().unwrap_or(qualified)
}

/// Candidates for a call: unqualified and `this`/`super` calls look in the
/// calling type and then its enclosing types; a receiver naming a declared
/// type looks in that type. Other receivers are not resolved.
fn resolve_one(
    decls: &[(String, usize, Callee)],
    caller: &str,
    name: &str,
    arity: usize,
    receiver: Option<&str>,
) -> Option<Callee> {
    let matching = |f: &dyn Fn(&str) -> bool| -> Vec<Callee> {
        decls
            .iter()
            .filter(|(q, a, _)| *a == arity && simple_name(q) == name && f(owner(q)))
            .map(|(_, _, c)| *c)
            .collect()
    };
    let unique = |v: Vec<Callee>| if v.len() == 1 { Some(v[0]) } else { None };
    match receiver {
        None | Some("this") | Some("super") => {
            let mut scope = owner(caller);
            while !scope.is_empty() {
                let found = matching(&|o| o == scope);
                if !found.is_empty() {
                    return unique(found);
                }
                scope = owner(scope);
            }
            None
        }
        Some(r) => {
            let last = r.rsplit('.').next().unwrap_or(r);
            let is_type = last.chars().next().is_some_and(char::is_uppercase) && last.chars().any(char::is_lowercase);
            if !is_type {
                return None;
            }
            unique(matching(&|o| !o.is_empty() && simple_name(o) == last))
        }
    }
}

/// Matches call sites against declarations by scope, simple name and
/// arity. No match or more than one match leaves the site unresolved.
pub fn resolve_calls(units: &[SourceUnit]) -> CallGraph {
    let mut decls = Vec::new();
    for (u, unit) in units.iter().enumerate() {
        for (fi, f) in unit.functions.iter().enumerate() {
            if f.has_body {
                decls.push((f.qualified_name.clone(), f.arity(), Callee { unit: u, function: fi }));
            }
        }
    }
    let mut g = CallGraph::default();
    for unit in units {
        for f in &unit.functions {
            for s in &f.statements {
                for c in &s.calls {
                    let site = CallSite {
                        function: f.qualified_name.clone(),
                        line: c.line,
                        name: c.name.clone(),
                        arity: c.arity,
                    };
                    if g.edges.contains_key(&site) || g.unresolved.contains(&site) {
                        continue;
                    }
                    match resolve_one(&decls, &f.qualified_name, &c.name, c.arity, c.receiver.as_deref()) {
                        Some(t) => {
                            g.edges.insert(site.clone(), units[t.unit].functions[t.function].qualified_name.clone());
                            g.targets.insert(site, t);
                        }
                        None => {
                            g.unresolved.insert(site);
                        }
                    }
                }
            }
        }
    }
    g
}
