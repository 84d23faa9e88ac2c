use std::collections::BTreeSet;
use std::path::Path;

use super::*;

fn parse(src: &str) -> SourceUnit {
    parse_compilation_unit(src, Path::new("T.java")).expect("parses")
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn single_logging_call_method() {
    let src = r#"
class DiskBalancer {
  private void verifyPlan(String planID) throws DiskBalancerException {
    LOG.error("Disk Balancer - Executing another plan, submitPlan failed.");
  }
}
"#;
    let unit = parse(src);
    assert_eq!(unit.functions.len(), 1);
    let f = &unit.functions[0];
    assert_eq!(f.qualified_name, "DiskBalancer.verifyPlan");
    assert_eq!(f.body.len(), 1);
    assert_eq!(f.stmt(f.body[0]).kind, StatementKind::Call);
    assert_eq!(f.parameters, vec![Parameter { name: "planID".into(), type_text: "String".into() }]);
    assert_eq!(f.span, LineSpan { start: 3, end: 5 });
}

#[test]
fn empty_class_has_no_functions() {
    let unit = parse("class A {}");
    assert!(unit.functions.is_empty());
    assert_eq!(unit.types.len(), 1);
    assert_eq!(unit.types[0].name, "A");
}

#[test]
fn unbalanced_braces_are_rejected() {
    let err = parse_compilation_unit("class A {\n void f() {\n }\n", Path::new("A.java")).unwrap_err();
    assert!(matches!(err, ParseError::UnbalancedDelimiters { line: 1, delimiter: '{', .. }));
    let err = parse_compilation_unit("class A { void f() { g()); } }", Path::new("A.java")).unwrap_err();
    assert!(matches!(err, ParseError::UnbalancedDelimiters { delimiter: ')', .. }));
}

#[test]
fn invalid_utf8_is_an_encoding_error() {
    let err = parse_bytes(b"class A { \xff }", Path::new("A.java")).unwrap_err();
    assert_eq!(err, ParseError::EncodingError { path: "A.java".into(), offset: 10 });
}

const MIXED: &str = r#"package demo;

class Mixed {
  private int total;

  int run(int n, String name) {
    int a = 0;
    int b;
    String s = name.trim();
    b = a + n;
    a += b;
    if (a > 10) {
      b = compute(a);
      LOG.info("a={}", a);
    } else {
      s = s + "x";
    }
    for (int i = 0; i < n; i++) {
      a = a + i;
      if (i == b) {
        break;
      }
      b--;
    }
    while (b > 0) {
      b = b - 1;
    }
    try {
      a = parse(s);
      helper(a, b);
    } catch (IOException e) {
      LOG.warn("failed", e);
      a = -1;
    } finally {
      done();
    }
    do {
      n = n / 2;
    } while (n > 1);
    for (String p : names(s)) {
      s = p;
    }
    switch (a) {
      case 1: b = 2; break;
      default: b = 3;
    }
    Runnable r = () -> LOG.debug("x");
    int c = a * b;
    total = c;
    throwIfNeeded(c);
    if (c < 0)
      throw new IllegalStateException("neg " + c);
    return c + total;
  }
}
"#;

/// Hand-enumerated view of `MIXED`: (line, kind, defs, uses) in statement
/// pre-order.
fn mixed_oracle() -> Vec<(u32, StatementKind, Vec<&'static str>, Vec<&'static str>)> {
    use StatementKind::*;
    vec![
        (7, Declaration, vec!["a"], vec![]),
        (8, Declaration, vec![], vec![]),
        (9, Declaration, vec!["s"], vec!["name"]),
        (10, Assignment, vec!["b"], vec!["a", "n"]),
        (11, Assignment, vec!["a"], vec!["a", "b"]),
        (12, If, vec![], vec!["a"]),
        (13, Assignment, vec!["b"], vec!["a"]),
        (14, Call, vec![], vec!["LOG", "a"]),
        (16, Assignment, vec!["s"], vec!["s"]),
        (18, Loop, vec!["i"], vec!["i", "n"]),
        (19, Assignment, vec!["a"], vec!["a", "i"]),
        (20, If, vec![], vec!["b", "i"]),
        (21, Opaque, vec![], vec![]),
        (23, Assignment, vec!["b"], vec!["b"]),
        (25, Loop, vec![], vec!["b"]),
        (26, Assignment, vec!["b"], vec!["b"]),
        (28, Try, vec![], vec![]),
        (29, Assignment, vec!["a"], vec!["s"]),
        (30, Call, vec![], vec!["a", "b"]),
        (32, Call, vec![], vec!["LOG", "e"]),
        (33, Assignment, vec!["a"], vec![]),
        (35, Call, vec![], vec![]),
        (39, Loop, vec![], vec!["n"]),
        (38, Assignment, vec!["n"], vec!["n"]),
        (40, Loop, vec!["p"], vec!["s"]),
        (41, Assignment, vec!["s"], vec!["p"]),
        (43, Opaque, vec![], vec!["a", "b"]),
        (47, Opaque, vec![], vec!["LOG", "Runnable", "debug", "r"]),
        (48, Declaration, vec!["c"], vec!["a", "b"]),
        (49, Assignment, vec!["total"], vec!["c"]),
        (50, Call, vec![], vec!["c"]),
        (51, If, vec![], vec!["c"]),
        (52, Throw, vec![], vec!["c"]),
        (53, Return, vec![], vec!["c", "total"]),
    ]
}

#[test]
fn mixed_method_matches_hand_enumeration() {
    let unit = parse(MIXED);
    let f = unit.function_named("run").unwrap();
    let oracle = mixed_oracle();
    let got: Vec<_> = f.statements.iter().map(|s| (s.line, s.kind, s.defs.clone(), s.uses.clone())).collect();
    assert_eq!(got.len(), oracle.len());
    for (g, (line, kind, defs, uses)) in got.iter().zip(&oracle) {
        assert_eq!(g.0, *line, "line of {g:?}");
        assert_eq!(g.1, *kind, "kind at line {line}");
        assert_eq!(g.2, set(defs), "defs at line {line}");
        assert_eq!(g.3, set(uses), "uses at line {line}");
    }
    assert_eq!(f.fields_in_scope, set(&["total"]));
}

#[test]
fn defs_and_uses_are_lexically_present() {
    let unit = parse(MIXED);
    for f in &unit.functions {
        for s in &f.statements {
            let idents: BTreeSet<String> = lexer::tokenize(&s.text)
                .iter()
                .filter(|t| t.kind == lexer::TokenKind::Ident)
                .map(|t| t.text(&s.text).to_string())
                .collect();
            assert!(s.defs.is_subset(&idents), "{:?}", s.text);
            assert!(s.uses.is_subset(&idents), "{:?}", s.text);
        }
    }
}

#[test]
fn cfg_node_count_matches_statements() {
    let unit = parse(MIXED);
    let f = unit.function_named("run").unwrap();
    let g = build_cfg(f);
    assert_eq!(g.len(), f.statements.len());
    assert_eq!(g.entry, Some(0));
    let reach = g.reachable_from(0);
    assert_eq!(reach.len(), g.len());
}

fn body_cfg(body: &str) -> (FunctionDecl, ControlFlowGraph) {
    let src = format!("class C {{\n void m(int x) {{\n{body}\n }}\n}}\n");
    let unit = parse(&src);
    let f = unit.functions[0].clone();
    let g = build_cfg(&f);
    (f, g)
}

#[test]
fn straight_line_is_a_path() {
    let (_, g) = body_cfg("a(); b(); c();");
    assert_eq!(g.len(), 3);
    assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
    assert_eq!(g.exits, BTreeSet::from([2]));
}

#[test]
fn if_else_is_a_diamond() {
    let (_, g) = body_cfg("if (x > 0) { a(); } else { b(); }\nc();");
    assert_eq!(g.len(), 4);
    assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
}

#[test]
fn loop_edges_match_successor_listing() {
    let (f, g) = body_cfg(
        "int i = 0;\nwhile (i < x) {\n if (i == 3) { i += 2; }\n i++;\n}\nfor (int j = 0; j < 2; j++) { k(j); }\ndone();",
    );
    // 0 decl, 1 while, 2 if, 3 i+=2, 4 i++, 5 for, 6 k(j), 7 done()
    assert_eq!(f.statements.len(), 8);
    let expected = vec![(0, 1), (1, 2), (1, 5), (2, 3), (2, 4), (3, 4), (4, 1), (5, 6), (5, 7), (6, 5)];
    assert_eq!(g.edges(), expected);
    assert!(g.on_cycle(4));
    assert!(!g.on_cycle(7));
}

#[test]
fn try_body_nodes_reach_catch() {
    let (_, g) = body_cfg("try { a(); b(); } catch (Exception e) { c(); } finally { d(); }\ne();");
    // 0 try, 1 a, 2 b, 3 c, 4 d, 5 e
    assert_eq!(g.edges(), vec![(0, 1), (0, 3), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (4, 5)]);
}

#[test]
fn do_while_enters_body_first() {
    let (_, g) = body_cfg("do { a(); } while (x > 0);\nb();");
    // 0 do-while condition, 1 a, 2 b
    assert_eq!(g.entry, Some(1));
    assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 0)]);
}

#[test]
fn return_and_throw_are_exits() {
    let (_, g) = body_cfg("if (x > 0) { return; }\nthrow new RuntimeException();");
    assert_eq!(g.exits, BTreeSet::from([1, 2]));
}

#[test]
fn opaque_statements_pass_through() {
    let (f, g) = body_cfg("a();\nswitch (x) { case 1: b(); }\nc();");
    assert_eq!(f.stmt(1).kind, StatementKind::Opaque);
    assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
}

#[test]
fn call_resolution_by_name_and_arity() {
    let a = parse(
        "class A {\n void caller(int x) {\n helper(x);\n String.format(\"%s\", x);\n twice(x);\n }\n int helper(int v) { return v; }\n}\n",
    );
    let b = parse("class B {\n void twice(int a) {}\n}\nclass D {\n void twice(long z) {}\n}\n");
    let g = resolve_calls(&[a, b]);
    let find = |name: &str| g.edges.keys().chain(g.unresolved.iter()).find(|s| s.name == name).cloned().unwrap();
    assert_eq!(g.edges.get(&find("helper")).map(String::as_str), Some("A.helper"));
    assert!(g.unresolved.contains(&find("format")));
    assert!(g.unresolved.contains(&find("twice")));
    for site in g.edges.keys() {
        assert!(!g.unresolved.contains(site));
    }
}

#[test]
fn nested_and_anonymous_methods_are_extracted() {
    let src = r#"
class Outer {
  int f;
  class Inner {
    void inner() {
      LOG.info("inner {}", f);
    }
  }
  void outer() {
    Runnable r = new Runnable() {
      public void run() {
        LOG.info("anon");
      }
    };
  }
}
"#;
    let unit = parse(src);
    let names: Vec<_> = unit.functions.iter().map(|f| f.qualified_name.as_str()).collect();
    assert_eq!(names, vec!["Outer.Inner.inner", "Outer.outer", "Outer.outer$1.run"]);
    let inner = &unit.functions[0];
    assert!(inner.source.starts_with("    void inner() {"));
    assert!(inner.source.ends_with('}'));
    assert_eq!(inner.fields_in_scope, set(&["f"]));
}

#[test]
fn reparsing_is_deterministic() {
    assert_eq!(parse(MIXED), parse(MIXED));
}
