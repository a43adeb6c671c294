//! Rule-based CFG construction over the parsed item tree.
//!
//! The outermost blocks of a text are built in place. Blocks nested inside
//! them are built as separate graphs behind reserved placeholders and fused
//! afterwards, which is exactly what the chain does with masked blocks.

use crate::cfg::{fuse, Cfg};
use crate::source::{parse_block_id, BlockKind};

use super::parse::{parse, Block, ForHeader, Item, ItemKind, Jump, Shape};

/// Placeholder numbers at or above this are reserved for nested builds.
pub const RESERVED_BASE: usize = 1_000_000;

type Preds = Vec<(String, Option<String>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Built {
    pub cfg: Cfg,
    pub warnings: Vec<String>,
}

/// Builds the CFG of `text`. Node ids are `<prefix>_n<i>`.
pub fn build_cfg(text: &str, base_indent: Option<usize>, prefix: &str) -> Built {
    let parsed = parse(text, base_indent);
    let mut shared = Shared { next_sub: 0 };
    let mut b = Builder::new(prefix.to_string(), &mut shared);
    b.seq(&parsed.items, Vec::new(), true);
    Built { cfg: b.finish(), warnings: parsed.warnings }
}

/// Node id prefix for a block id: `if_block_3` becomes `if3`.
pub fn node_prefix(block_id: &str) -> String {
    match parse_block_id(block_id) {
        Some((kind, k)) => {
            let abbrev = match kind {
                BlockKind::Class => "cls",
                BlockKind::Method => "m",
                BlockKind::If => "if",
                BlockKind::For => "for",
                BlockKind::While => "wh",
                BlockKind::Switch => "sw",
            };
            format!("{abbrev}{k}")
        }
        None => "g".to_string(),
    }
}

struct Shared {
    next_sub: usize,
}

#[derive(PartialEq)]
enum FrameKind {
    Loop,
    Switch,
}

struct Frame {
    kind: FrameKind,
    breaks: Preds,
    continues: Preds,
}

struct Builder<'s> {
    g: Cfg,
    prefix: String,
    next: usize,
    shared: &'s mut Shared,
    subs: Vec<(String, Cfg)>,
    frames: Vec<Frame>,
}

fn is_member(item: &Item) -> bool {
    match &item.kind {
        ItemKind::Block(b) => matches!(b.kind, BlockKind::Method | BlockKind::Class),
        ItemKind::Placeholder(id) => {
            matches!(parse_block_id(id), Some((BlockKind::Method | BlockKind::Class, _)))
        }
        _ => false,
    }
}

impl<'s> Builder<'s> {
    fn new(prefix: String, shared: &'s mut Shared) -> Self {
        Builder { g: Cfg::new(), prefix, next: 0, shared, subs: Vec::new(), frames: Vec::new() }
    }

    fn node(&mut self, label: &str, preds: &Preds) -> String {
        let id = format!("{}_n{}", self.prefix, self.next);
        self.next += 1;
        self.g.add_node(id.clone(), label);
        self.connect(preds, &id);
        id
    }

    fn connect(&mut self, preds: &Preds, to: &str) {
        for (from, label) in preds {
            self.g.add_edge(from, to, label.as_deref());
        }
    }

    fn finish(mut self) -> Cfg {
        if self.g.nodes.is_empty() {
            self.node("empty", &Vec::new());
        }
        let mut g = self.g;
        for (label, inner) in self.subs {
            g = fuse(&g, &label, &inner).expect("reserved placeholder occurs once");
        }
        g
    }

    fn seq(&mut self, items: &[Item], mut preds: Preds, top: bool) -> Preds {
        for item in items {
            preds = self.item(item, preds, top);
        }
        preds
    }

    fn item(&mut self, item: &Item, preds: Preds, top: bool) -> Preds {
        match &item.kind {
            ItemKind::Stmt(label) => {
                let id = self.node(label, &preds);
                vec![(id, None)]
            }
            ItemKind::Placeholder(label) => {
                let id = self.node(label, &preds);
                vec![(id, None)]
            }
            ItemKind::Jump(jump, label) => self.jump(*jump, label, preds),
            ItemKind::Inline(items) => self.seq(items, preds, top),
            ItemKind::Block(block) if top => self.block(block, preds),
            ItemKind::Block(block) => self.sub(block, preds),
        }
    }

    fn jump(&mut self, jump: Jump, label: &str, preds: Preds) -> Preds {
        match jump {
            Jump::Break => {
                if let Some(frame) = self.frames.last_mut() {
                    frame.breaks.extend(preds);
                    return Vec::new();
                }
            }
            Jump::Continue => {
                if let Some(frame) = self.frames.iter_mut().rev().find(|f| f.kind == FrameKind::Loop) {
                    frame.continues.extend(preds);
                    return Vec::new();
                }
            }
            Jump::Return | Jump::Throw => {}
        }
        self.node(label, &preds);
        Vec::new()
    }

    /// Builds `block` as its own graph and links it in through a reserved
    /// placeholder.
    fn sub(&mut self, block: &Block, preds: Preds) -> Preds {
        let n = self.shared.next_sub;
        self.shared.next_sub += 1;
        let label = block.kind.block_id(RESERVED_BASE + n);
        let prefix = format!("{}_s{}", self.prefix, n);
        let inner = {
            let mut b = Builder::new(prefix, &mut *self.shared);
            b.block(block, Vec::new());
            b.finish()
        };
        let id = self.node(&label, &preds);
        self.subs.push((label, inner));
        vec![(id, None)]
    }

    fn loop_body(&mut self, body: &[Item], entry: Preds) -> (Preds, Frame) {
        self.frames.push(Frame { kind: FrameKind::Loop, breaks: Vec::new(), continues: Vec::new() });
        let exits = self.seq(body, entry, false);
        let frame = self.frames.pop().unwrap();
        (exits, frame)
    }

    fn block(&mut self, block: &Block, preds: Preds) -> Preds {
        match &block.shape {
            Shape::If { arms, otherwise } => {
                let mut exits = Vec::new();
                let mut cur = preds;
                for (i, (cond, body)) in arms.iter().enumerate() {
                    let label = if i == 0 { format!("if ({cond})") } else { format!("else if ({cond})") };
                    let c = self.node(&label, &cur);
                    exits.extend(self.seq(body, vec![(c.clone(), Some("true".into()))], false));
                    cur = vec![(c, Some("false".into()))];
                }
                match otherwise {
                    Some(body) => exits.extend(self.seq(body, cur, false)),
                    None => exits.extend(cur),
                }
                self.end("end if", exits)
            }
            Shape::For { header: ForHeader::Classic { init, cond, update }, body } => {
                let mut cur = preds;
                if let Some(init) = init {
                    let i = self.node(init, &cur);
                    cur = vec![(i, None)];
                }
                let c = self.node(cond.as_deref().unwrap_or("true"), &cur);
                let (mut exits, frame) = self.loop_body(body, vec![(c.clone(), Some("true".into()))]);
                exits.extend(frame.continues);
                match update {
                    Some(update) if !exits.is_empty() => {
                        let u = self.node(update, &exits);
                        self.g.add_edge(&u, &c, None);
                    }
                    _ => self.connect(&exits, &c),
                }
                let mut out = vec![(c, Some("false".into()))];
                out.extend(frame.breaks);
                self.end("end for", out)
            }
            Shape::For { header: ForHeader::Each(header), body } => {
                let h = self.node(&format!("for ({header})"), &preds);
                let (mut exits, frame) = self.loop_body(body, vec![(h.clone(), Some("true".into()))]);
                exits.extend(frame.continues);
                self.connect(&exits, &h);
                let mut out = vec![(h, Some("false".into()))];
                out.extend(frame.breaks);
                self.end("end for", out)
            }
            Shape::While { cond, body } => {
                let c = self.node(&format!("while ({cond})"), &preds);
                let (mut exits, frame) = self.loop_body(body, vec![(c.clone(), Some("true".into()))]);
                exits.extend(frame.continues);
                self.connect(&exits, &c);
                let mut out = vec![(c, Some("false".into()))];
                out.extend(frame.breaks);
                self.end("end while", out)
            }
            Shape::Switch { subject, groups } => {
                let s = self.node(&format!("switch ({subject})"), &preds);
                self.frames.push(Frame { kind: FrameKind::Switch, breaks: Vec::new(), continues: Vec::new() });
                let mut fall: Preds = Vec::new();
                let mut has_default = false;
                for group in groups {
                    let mut incoming = std::mem::take(&mut fall);
                    for label in &group.labels {
                        has_default |= label == "default";
                        incoming.push((s.clone(), Some(label.clone())));
                    }
                    fall = self.seq(&group.body, incoming, false);
                }
                let frame = self.frames.pop().unwrap();
                let mut out = fall;
                out.extend(frame.breaks);
                if !has_default {
                    out.push((s, Some("default".into())));
                }
                self.end("end switch", out)
            }
            Shape::Method { signature, body } => {
                let sig = self.node(signature, &preds);
                let saved = std::mem::take(&mut self.frames);
                let exits = self.seq(body, vec![(sig, None)], false);
                self.frames = saved;
                exits
            }
            Shape::Class { header, members } => {
                let h = self.node(header, &preds);
                let saved = std::mem::take(&mut self.frames);
                let mut cur = vec![(h, None)];
                let mut member_items = Vec::new();
                for item in members {
                    if is_member(item) {
                        member_items.push(item);
                    } else {
                        cur = self.item(item, cur, false);
                    }
                }
                let exits = if member_items.is_empty() {
                    cur
                } else {
                    let mut exits = Vec::new();
                    for m in member_items {
                        exits.extend(self.item(m, cur.clone(), false));
                    }
                    exits
                };
                self.frames = saved;
                exits
            }
        }
    }

    /// Join node, omitted when nothing reaches it.
    fn end(&mut self, label: &str, preds: Preds) -> Preds {
        if preds.is_empty() {
            return Vec::new();
        }
        let id = self.node(label, &preds);
        vec![(id, None)]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cfg::{validate_cfg, CfgEdge};

    fn labels(g: &Cfg) -> Vec<&str> {
        g.nodes.iter().map(|n| n.label.as_str()).collect()
    }

    /// Edges as `(from label, to label, edge label)`.
    fn edges(g: &Cfg) -> Vec<(String, String, String)> {
        g.edge_label_multiset()
    }

    fn e(a: &str, b: &str, l: &str) -> (String, String, String) {
        (a.into(), b.into(), l.into())
    }

    #[test]
    fn if_else_hand_drawn() {
        let g = build_cfg("if(a){b();}else{c();}", None, "g").cfg;
        assert_eq!(labels(&g), vec!["if (a)", "b()", "c()", "end if"]);
        let mut expected = vec![
            e("if (a)", "b()", "true"),
            e("if (a)", "c()", "false"),
            e("b()", "end if", ""),
            e("c()", "end if", ""),
        ];
        expected.sort();
        assert_eq!(edges(&g), expected);
        assert!(validate_cfg(&g).is_empty());
    }

    #[test]
    fn single_statement() {
        let g = build_cfg("x=1;", None, "g").cfg;
        assert_eq!(labels(&g), vec!["x=1"]);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn empty_text() {
        let g = build_cfg("  // nothing\n", None, "g").cfg;
        assert_eq!(labels(&g), vec!["empty"]);
    }

    #[test]
    fn for_loop_shape() {
        let g = build_cfg("for (int i = 0; i < 3; i++) {\n  s += i;\n}\n", None, "for1").cfg;
        assert_eq!(labels(&g), vec!["int i = 0", "i < 3", "s += i", "i++", "end for"]);
        let mut expected = vec![
            e("int i = 0", "i < 3", ""),
            e("i < 3", "s += i", "true"),
            e("s += i", "i++", ""),
            e("i++", "i < 3", ""),
            e("i < 3", "end for", "false"),
        ];
        expected.sort();
        assert_eq!(edges(&g), expected);
        assert_eq!(g.nodes[0].id, "for1_n0");
    }

    #[test]
    fn accidental_empty_statement_adopted() {
        let code = "for (int i = 0; i < 10; i++); {\n    sum = sum + 1;\n}\n";
        let g = build_cfg(code, None, "g").cfg;
        assert!(edges(&g).contains(&e("i < 10", "sum = sum + 1", "true")));
        assert!(edges(&g).contains(&e("sum = sum + 1", "i++", "")));
    }

    #[test]
    fn scope_error_body_recovered() {
        let code = "while (count < 10)\n    sum += count;\n    count++;\n";
        let g = build_cfg(code, None, "g").cfg;
        assert!(edges(&g).contains(&e("sum += count", "count++", "")));
        assert!(edges(&g).contains(&e("count++", "while (count < 10)", "")));
    }

    #[test]
    fn switch_cases_and_breaks() {
        let code = "switch (k) {\n  case 1:\n    a();\n    break;\n  case 2:\n    b();\n  default:\n    c();\n}";
        let g = build_cfg(code, None, "g").cfg;
        let got = edges(&g);
        for want in [
            e("switch (k)", "a()", "case 1"),
            e("switch (k)", "b()", "case 2"),
            e("switch (k)", "c()", "default"),
            e("a()", "end switch", ""),
            e("b()", "c()", ""),
            e("c()", "end switch", ""),
        ] {
            assert!(got.contains(&want), "{want:?} missing from {got:?}");
        }
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn switch_without_default_gets_implicit_edge() {
        let g = build_cfg("switch (k) {\n case 1:\n  a();\n}", None, "g").cfg;
        assert!(edges(&g).contains(&e("switch (k)", "end switch", "default")));
    }

    #[test]
    fn returns_end_paths() {
        let code = "if (x) {\n  return 1;\n} else {\n  return 2;\n}\n";
        let g = build_cfg(code, None, "g").cfg;
        assert_eq!(labels(&g), vec!["if (x)", "return 1", "return 2"]);
        assert!(g.exits().is_empty());
    }

    #[test]
    fn break_and_continue_in_same_text() {
        let code = "while (a) {\n  if (b) break;\n  c();\n}\n";
        // the `if` is nested, so its break cannot see the loop
        let g = build_cfg(code, None, "g").cfg;
        assert!(labels(&g).contains(&"break"));
        let code = "for (;;) {\n  c();\n  continue;\n}\n";
        let g = build_cfg(code, None, "g").cfg;
        assert!(edges(&g).contains(&e("c()", "true", "")));
    }

    #[test]
    fn class_fans_out_to_members() {
        let code = "class A {\n  int x = 1;\n  method_block_1\n  method_block_2\n}";
        let g = build_cfg(code, None, "cls1").cfg;
        let got = edges(&g);
        assert!(got.contains(&e("int x = 1", "method_block_1", "")));
        assert!(got.contains(&e("int x = 1", "method_block_2", "")));
        assert_eq!(g.placeholders().count(), 2);
    }

    /// The running example: class, method, two `for` loops and an `if`
    /// whose condition lost its operator and whose header ends in `;`.
    pub(crate) const RUNNING: &str = "public class Main {
    public static void main(String[] args) {
        for (int i = 0; i < 5; i++) {
            for (int j = 0; j < 5; j++) {
                if ((i ? j) < 3); {
                    System.out.println(i);
                } else {
                    System.out.println(j);
                }
            }
        }
    }
}
";

    #[test]
    fn running_example_counts() {
        let g = build_cfg(RUNNING, None, "g").cfg;
        assert_eq!((g.nodes.len(), g.edges.len()), (14, 16));
        assert_eq!(g.placeholders().count(), 0);
        assert!(validate_cfg(&g).is_empty());
        let got = edges(&g);
        assert!(got.contains(&e("if ((i ? j) < 3)", "System.out.println(i)", "true")));
        assert!(got.contains(&e("if ((i ? j) < 3)", "System.out.println(j)", "false")));
        assert!(got.contains(&e("end if", "j++", "")));
        assert!(got.contains(&e("end for", "i++", "")));
    }

    #[test]
    fn nested_blocks_are_fused_in() {
        let code = "while (a) {\n  if (b) {\n    c();\n  }\n}\n";
        let g = build_cfg(code, None, "g").cfg;
        assert_eq!(labels(&g).len(), 5);
        assert!(g.edges.contains(&CfgEdge::new(
            g.nodes.iter().find(|n| n.label == "end if").unwrap().id.clone(),
            g.nodes[0].id.clone(),
            None
        )));
    }
}
