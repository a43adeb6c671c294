//! Writes the bundled knowledge base: hand-written inputs and tags, outputs
//! produced by the heuristic units.
//!
//! cargo run -p cfgchain --example author_kb -- kb

use std::path::{Path, PathBuf};

use cfgchain::cfg::{emit_cfgtext, fuse};
use cfgchain::gateway::heuristic::build::{build_cfg, node_prefix};
use cfgchain::gateway::heuristic::{heuristic_complete, structure};
use cfgchain::kb::{ExampleRecord, ANY, GENERIC};
use cfgchain::prompt::{
    blockcfg_payload, extract_payload, fusion_payload, structure_payload, whole_payload, FusionPart, UnitId,
};
use serde_json::json;

const IF_ELSE: &str = "if (x > 0) {\n    y = 1;\n} else {\n    y = -1;\n}";
const FOR_NO_SEMI: &str = "for (int i=0; i<10 i++) {\n    sum = sum + i;\n}";
const FOR_EMPTY: &str = "for (int i = 0; i < 10; i++); {\n    sum = sum + 1;\n}";
const WHILE_SCOPE: &str = "while (count < 10)\n    sum += count;\n    count++;";
const SWITCH_DAYS: &str = "switch (day) {\n    case 1:\n        name = \"Mon\";\n        break;\n    case 2:\n        name = \"Tue\";\n        break;\n    default:\n        name = \"?\";\n}";

fn blockcfg() -> Vec<(&'static str, &'static str, &'static [&'static str])> {
    vec![
        ("class", "public class Answer {\n    method_block_1\n}", &["class"]),
        ("class", "class Counter {\n    private int count = 0;\n    method_block_1\n    method_block_2\n}", &["class", "field"]),
        ("class", "public class Main {\n    static int total;\n    method_block_1\n", &["class", "missing_brace"]),
        ("class", "class Shape {\n    double area;\n    String name = \"shape\";\n}", &["class", "field"]),
        ("class", "public class Outer {\n    int x = 1;\n    class_block_1\n    method_block_1\n}", &["class", "nested_class"]),
        ("method", "public static void main(String[] args) {\n    int sum = 0;\n    for_block_1\n    System.out.println(sum);\n}", &["method", "for"]),
        ("method", "int max(int a, int b) {\n    if_block_1\n    return b;\n}", &["method", "if", "return"]),
        ("method", "void run() {\n    while_block_1\n    done = true;\n}", &["method", "while"]),
        ("method", "public int size() {\n    return count\n}", &["method", "missing_semicolon"]),
        ("method", "private void log(String msg) {\n    switch_block_1\n    System.out.println(msg);\n", &["method", "switch", "missing_brace"]),
        ("if", "if (i == 1) {\n    return true;\n}", &["if", "return"]),
        ("if", IF_ELSE, &["if", "else"]),
        ("if", "if ((i + j) < 3); {\n    System.out.println(i);\n} else {\n    System.out.println(j);\n}", &["if", "else", "empty_statement"]),
        ("if", "if (a > b)\n    max = a;\nelse if (a < b)\n    max = b;\nelse\n    max = 0;", &["if", "else_if", "no_braces"]),
        ("if", "if (count > 10) {\n    for_block_1\n    count = 0;\n", &["if", "for", "missing_brace"]),
        ("for", "for (int i = 0; i < 5; i++) {\n    if_block_1\n}", &["for", "if"]),
        ("for", FOR_NO_SEMI, &["for", "missing_semicolon"]),
        ("for", FOR_EMPTY, &["for", "empty_statement"]),
        ("for", "for (String s : names) {\n    System.out.println(s);\n}", &["for", "for_each"]),
        ("for", "for (int k = n; k > 0; k--)\n    total += k;\n    steps++;", &["for", "scope_error"]),
        ("while", WHILE_SCOPE, &["while", "scope_error"]),
        ("while", "while (i < n) {\n    if (a[i] > max) {\n        max = a[i];\n    }\n    i++;\n}", &["while", "if"]),
        ("while", "while (!done) {\n    line = reader.readLine();\n    if_block_1\n}", &["while", "if"]),
        ("while", "while (x > 1) {\n    x = x / 2;\n    steps++;\n", &["while", "missing_brace"]),
        ("while", "while (n != 0); {\n    n = n - 1;\n}", &["while", "empty_statement"]),
        ("switch", SWITCH_DAYS, &["switch", "break"]),
        ("switch", "switch (op) {\n    case '+':\n        r = a + b;\n        break;\n    case '-':\n        r = a - b;\n        break;\n}", &["switch", "no_default"]),
        ("switch", "switch (k) {\n    case 0:\n    case 1:\n        small++;\n        break;\n    default:\n        big++;\n}", &["switch", "fallthrough"]),
        ("switch", "switch (state) {\n    case 1:\n        if_block_1\n        break;\n    default:\n        reset();\n}", &["switch", "if"]),
        ("switch", "switch (c) {\n    case 'a':\n        vowels++\n        break;\n    default:\n        others++;\n}", &["switch", "missing_semicolon"]),
        (GENERIC, IF_ELSE, &["if", "else"]),
        (GENERIC, FOR_NO_SEMI, &["for", "missing_semicolon"]),
        (GENERIC, WHILE_SCOPE, &["while", "scope_error"]),
        (GENERIC, SWITCH_DAYS, &["switch"]),
        (GENERIC, FOR_EMPTY, &["for", "empty_statement"]),
    ]
}

const ANSWER: &str = "package test;\npublic class Answer {\n    public static void main(String[] args) {\n        int n = 5;\n        if (n > 3) {\n            System.out.println(n);\n        }\n    }\n}";
const MISSING_BRACE: &str = "class A {\n    int f(int x) {\n        if (x > 0) {\n            return 1;\n\n        return 0;\n    }\n}";

fn structure_codes() -> Vec<(&'static str, &'static [&'static str])> {
    vec![
        (ANSWER, &["class", "method", "if"]),
        ("public class Loop {\n    void run() {\n        for (int i=0; i<10 i++) {\n            while (busy) {\n                wait(1);\n            }\n        }\n    }\n}", &["for", "while", "missing_semicolon"]),
        (MISSING_BRACE, &["if", "missing_brace"]),
        ("public class B {\n    void g() {\n        for (int i = 0; i < n; i++) {\n            if_block_1\n            if_block_2\n        }\n    }\n}", &["for", "masked"]),
        ("class C {\n    void h() {\n        while (k > 0)\n            switch (k) {\n                case 1:\n                    k = 0;\n                    break;\n                default:\n                    k--;\n            }\n    }\n}", &["while", "switch", "no_braces"]),
    ]
}

fn extract_codes() -> Vec<(&'static str, &'static [&'static str])> {
    vec![
        (ANSWER, &["if"]),
        ("for (int i = 0; i < n; i++) {\n    if (a) {\n        x();\n    }\n    if (b) {\n        y();\n    }\n}", &["for", "if", "side_by_side"]),
        ("public class Answer {\n    public static void main(String[] args) {\n        for (int i = 0; i < 5; i++) {\n            for_block_1\n        }\n    }\n}", &["for", "masked"]),
        (MISSING_BRACE, &["if", "missing_brace"]),
        ("while (count < 10)\n    sum += count;\n    count++;\nSystem.out.println(sum);", &["while", "scope_error"]),
    ]
}

/// (outer id, outer text, inner id, inner text)
fn fusion_pairs() -> Vec<(&'static str, &'static str, &'static str, &'static str, &'static [&'static str])> {
    vec![
        ("for_block_1", "for (int i = 0; i < 5; i++) {\n    if_block_1\n}", "if_block_1", IF_ELSE, &["for", "if"]),
        ("method_block_1", "void total() {\n    int sum = 0;\n    for_block_1\n    print(sum);\n}", "for_block_1", FOR_NO_SEMI, &["method", "for", "missing_semicolon"]),
        ("while_block_1", "while (i < n) {\n    if_block_1\n    i++;\n}", "if_block_1", "if (a[i] > max)\n    max = a[i];", &["while", "if"]),
        ("class_block_1", "class Job {\n    int x = 1;\n    method_block_1\n}", "method_block_1", "void f() {\n    x = 2;\n}", &["class", "method"]),
        ("switch_block_1", "switch (k) {\n    case 1:\n        if_block_1\n        break;\n    default:\n        k = 0;\n}", "if_block_1", "if (k > 0) {\n    k--;\n}", &["switch", "if"]),
    ]
}

const COT_CODE: &str = "public class Main {\n    public static void main(String[] args) {\n        for (int i = 0; i < 3; i++) {\n            if (i > 1) {\n                System.out.println(i);\n            }\n        }\n    }\n}";

fn write(dir: &Path, unit: UnitId, kind: &str, n: usize, input: String, output: String, tags: &[&str]) {
    let rec = ExampleRecord {
        unit,
        kind: (kind != ANY).then(|| kind.to_string()),
        input,
        output,
        tags: tags.iter().map(|t| t.to_string()).collect(),
    };
    let path = dir.join(unit.as_str()).join(kind);
    std::fs::create_dir_all(&path).unwrap();
    let mut text = serde_json::to_string_pretty(&rec).unwrap();
    text.push('\n');
    std::fs::write(path.join(format!("{n:02}.json")), text).unwrap();
}

fn main() {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "kb".into()).into();

    let mut counters = std::collections::HashMap::new();
    for (kind, text, tags) in blockcfg() {
        let n = counters.entry(kind).or_insert(0);
        *n += 1;
        let id = if kind == GENERIC { "method_block_9".to_string() } else { format!("{kind}_block_9") };
        let out = heuristic_complete(
            "blockcfg",
            &json!({"block_id": id, "kind": if kind == GENERIC { "method" } else { kind }, "text": text, "base_indent": 0}),
        )
        .unwrap();
        write(&dir, UnitId::BlockCfg, kind, *n, blockcfg_payload(text), out, tags);
    }

    for (i, (code, tags)) in structure_codes().into_iter().enumerate() {
        let out = heuristic_complete("structure", &json!({"code": code})).unwrap();
        write(&dir, UnitId::Structure, ANY, i + 1, structure_payload(code), out, tags);
    }

    for (i, (code, tags)) in extract_codes().into_iter().enumerate() {
        let h = structure(code);
        let out = heuristic_complete("extract", &json!({"code": code, "hierarchy": h})).unwrap();
        write(&dir, UnitId::Extract, ANY, i + 1, extract_payload(code, &h), out, tags);
    }

    for (i, (outer_id, outer, inner_id, inner, tags)) in fusion_pairs().into_iter().enumerate() {
        let g_outer = build_cfg(outer, Some(0), &node_prefix(outer_id)).cfg;
        let g_inner = build_cfg(inner, Some(0), &node_prefix(inner_id)).cfg;
        let parts = [
            FusionPart { id: outer_id.into(), cfg: emit_cfgtext(&g_outer) },
            FusionPart { id: inner_id.into(), cfg: emit_cfgtext(&g_inner) },
        ];
        let fused = fuse(&g_outer, inner_id, &g_inner).unwrap();
        write(&dir, UnitId::Fusion, ANY, i + 1, fusion_payload(&parts), emit_cfgtext(&fused), tags);
    }

    let out = heuristic_complete("cot", &json!({"code": COT_CODE})).unwrap();
    write(&dir, UnitId::Cot, ANY, 1, whole_payload(COT_CODE), out, &["class", "method", "for", "if"]);
}
