//! Acceptance criteria, one PASS/FAIL line each. Runs without the test
//! harness so the lines are always printed.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use cfgchain::cfg::{emit_cfgtext, fuse, is_terminal_label, parse_cfgtext};
use cfgchain::chain::{mask_block, splice};
use cfgchain::eval::run::{corpus_samples, load_gold};
use cfgchain::eval::{coverage, inject_error, invert, labels_match, run_eval, InjectionKind};
use cfgchain::gateway::{HeuristicBackend, ReplayBackend};
use cfgchain::kb::{load_kb, KnowledgeBase};
use cfgchain::prompt::NestedBlock;
use cfgchain::{run_pipeline, tokenize, BlockKind, Cfg, CfgNode, Limits, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn kb() -> KnowledgeBase {
    load_kb(&root().join("kb")).expect("bundled kb")
}

fn samples() -> Vec<(String, String)> {
    corpus_samples(&root().join("corpus/nc-mini"))
        .unwrap()
        .into_iter()
        .map(|(id, p)| (id, cfgchain::load_source(&p).unwrap()))
        .collect()
}

fn gold(id: &str) -> Cfg {
    load_gold(&root().join(format!("gold/nc-mini/{id}.cfg"))).unwrap()
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cfgchain")).args(args).current_dir(root()).output().unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

// ---------------------------------------------------------------- graphs

const LABELS: &[&str] = &["a = 1", "b++", "if (x > 0)", "while (k)", "return k", "say(\"hi\")", "c = a \\ b", "end if"];

fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, dag: bool) -> Cfg {
    let n = rng.gen_range(1..=max_nodes);
    let mut g = Cfg::new();
    for i in 0..n {
        let label = LABELS[rng.gen_range(0..LABELS.len())];
        g.add_node(format!("n{i}"), label);
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if dag && a >= b {
            continue;
        }
        let label = match rng.gen_range(0..4) {
            0 => Some("true"),
            1 => Some("false"),
            _ => None,
        };
        g.add_edge(&format!("n{a}"), &format!("n{b}"), label);
    }
    g
}

fn place(mut g: Cfg, k: usize, id: &str) -> Cfg {
    let k = k % g.nodes.len();
    g.nodes[k] = CfgNode::new(g.nodes[k].id.clone(), id);
    g
}

fn label_paths(g: &Cfg, from: &str, acc: &mut Vec<String>, out: &mut BTreeSet<Vec<String>>) {
    acc.push(g.node(from).unwrap().label.clone());
    let succ: Vec<String> = g.out_edges(from).map(|e| e.to.clone()).collect();
    if succ.is_empty() {
        out.insert(acc.clone());
    }
    for s in succ {
        label_paths(g, &s, acc, out);
    }
    acc.pop();
}

/// Paths of `outer` with every inner entry-to-sink path substituted where
/// the placeholder is met. A path ending on a terminal inner node stops.
fn expanded(outer: &Cfg, id: &str, inner: &Cfg) -> BTreeSet<Vec<String>> {
    let mut inner_paths = BTreeSet::new();
    label_paths(inner, &inner.entry, &mut Vec::new(), &mut inner_paths);
    let mut outer_paths = BTreeSet::new();
    label_paths(outer, &outer.entry, &mut Vec::new(), &mut outer_paths);
    // Cut outer paths at the placeholder; the tail after it is kept per
    // continuation.
    let mut out = BTreeSet::new();
    for p in &outer_paths {
        match p.iter().position(|l| l == id) {
            None => {
                out.insert(p.clone());
            }
            Some(i) => {
                for ip in &inner_paths {
                    let mut v = p[..i].to_vec();
                    v.extend(ip.iter().cloned());
                    if !is_terminal_label(ip.last().unwrap()) {
                        v.extend(p[i + 1..].iter().cloned());
                    }
                    out.insert(v);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------- criteria

fn c1_nc_exactness() -> Outcome {
    let start = Instant::now();
    let out = cli(&["eval", "corpus/nc-mini", "--gold", "gold/nc-mini", "--backend", "heuristic", "--variant", "chain"]);
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).to_string())?;
    let t = within(start, Duration::from_secs(10))?;
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let (n, e) = (report["means"]["node_cov"].as_f64(), report["means"]["edge_cov"].as_f64());
    check(n == Some(1.0) && e == Some(1.0), || format!("means {n:?} / {e:?}"))?;
    let count = report["samples"].as_array().map_or(0, Vec::len);
    check(count == 20, || format!("{count} samples"))?;
    Ok(format!("20 samples, node 1.00 edge 1.00, {t:.1?}"))
}

fn c2_injector_recovery() -> Outcome {
    let start = Instant::now();
    let kb = kb();
    let limits = Limits::default();
    let mut cases = 0;
    let mut misses = Vec::new();
    for (id, code) in samples() {
        let g = gold(&id);
        for kind in InjectionKind::ALL {
            for seed in 1..=5 {
                let Ok((mutated, rec)) = inject_error(&code, kind, seed) else { continue };
                cases += 1;
                let scored = run_pipeline(&tokenize(&mutated), &HeuristicBackend, &kb, Variant::Chain, &limits)
                    .map_err(|e| e.to_string())
                    .map(|r| coverage(&r.final_cfg, &g).unwrap());
                match scored {
                    Ok(c) if c.node_coverage == 1.0 && c.edge_coverage == 1.0 => {}
                    Ok(c) => misses.push(format!("{id} {kind} seed {seed} line {}: ({:.2}, {:.2})", rec.line, c.node_coverage, c.edge_coverage)),
                    Err(e) => misses.push(format!("{id} {kind} seed {seed}: {e}")),
                }
            }
        }
    }
    let t = within(start, Duration::from_secs(60))?;
    check(misses.is_empty(), || format!("{} of {cases} below (1, 1): {}", misses.len(), misses.join("; ")))?;
    Ok(format!("{cases} injected samples recovered exactly, {t:.1?}"))
}

fn c3_fusion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..500 {
        let outer = place(random_graph(&mut rng, 8, false), rng.gen_range(0..8), "while_block_7");
        let inner = random_graph(&mut rng, 8, false);
        let p = outer.placeholders().next().unwrap().id.clone();
        let outdeg = outer.out_degree(&p);
        let fused = fuse(&outer, "while_block_7", &inner).map_err(|e| format!("case {case}: {e}"))?;
        let nodes = outer.nodes.len() - 1 + inner.nodes.len();
        let edges = outer.edges.len() - outdeg + inner.edges.len() + outdeg * inner.exits().len();
        check(fused.nodes.len() == nodes && fused.edges.len() == edges, || {
            format!("case {case}: {} nodes / {} edges, law says {nodes} / {edges}", fused.nodes.len(), fused.edges.len())
        })?;
    }
    let mut compared = 0;
    for case in 0..500 {
        let outer = place(random_graph(&mut rng, 5, true), rng.gen_range(0..5), "if_block_1");
        let inner = random_graph(&mut rng, 4, true);
        let fused = fuse(&outer, "if_block_1", &inner).map_err(|e| e.to_string())?;
        if fused.nodes.len() > 8 {
            continue;
        }
        compared += 1;
        let mut got = BTreeSet::new();
        label_paths(&fused, &fused.entry, &mut Vec::new(), &mut got);
        let want = expanded(&outer, "if_block_1", &inner);
        check(got == want, || format!("path case {case}: {got:?} != {want:?}"))?;
    }
    Ok(format!("500 count-law pairs, {compared} path-set pairs"))
}

fn c4_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    const CHARS: &[u8] = b"abcxyz(){};=+ \n";
    const SEP: &[u8] = b" ;{}\n";
    let pick = |rng: &mut ChaCha8Rng, set: &[u8], n: usize| -> String {
        (0..n).map(|_| set[rng.gen_range(0..set.len())] as char).collect()
    };
    for case in 0..200 {
        let n = rng.gen_range(0..20);
        let mut prefix = pick(&mut rng, CHARS, n);
        if !prefix.is_empty() {
            prefix.push(SEP[rng.gen_range(0..SEP.len())] as char);
        }
        let n = rng.gen_range(1..30);
        let body = pick(&mut rng, CHARS, n);
        let mut suffix = String::new();
        if rng.gen_bool(0.7) {
            suffix.push(SEP[rng.gen_range(0..SEP.len())] as char);
            let n = rng.gen_range(0..20);
            suffix.push_str(&pick(&mut rng, CHARS, n));
        }
        let code = format!("{prefix}{body}{suffix}");
        let span = prefix.len()..prefix.len() + body.len();
        let block = NestedBlock { id: "for_block_3".into(), kind: BlockKind::For, text: body.clone(), span };
        let masked = mask_block(&code, &block).map_err(|e| format!("mask case {case}: {e}"))?;
        let back = splice(&masked).map_err(|e| format!("splice case {case}: {e}"))?;
        check(back == code, || format!("mask case {case}: {code:?} came back as {back:?}"))?;
    }
    for case in 0..500 {
        let g = random_graph(&mut rng, 8, false);
        let text = emit_cfgtext(&g);
        let back = parse_cfgtext(&text).map_err(|e| format!("cfgtext case {case}: {e}"))?;
        check(back == g, || format!("cfgtext case {case} differs"))?;
    }
    let mut inverted = 0;
    for (id, code) in samples() {
        for kind in InjectionKind::ALL {
            for seed in 1..=5 {
                if let Ok((m, rec)) = inject_error(&code, kind, seed) {
                    check(invert(&m, &rec) == code, || format!("{id} {kind} seed {seed} not restored"))?;
                    inverted += 1;
                }
            }
        }
    }
    Ok(format!("200 mask/splice, 500 cfgtext, {inverted} inverse edits"))
}

fn c5_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cassette = dir.path().join("run.jsonl");
    let c = cassette.to_str().unwrap();
    let file = "corpus/nc-mini/s10.java";
    let run = |backend: &str, out: &str| {
        let o = cli(&["generate", file, "--variant", "chain", "--backend", backend, "--record-from", "heuristic", "--cassette", c, "--out", out]);
        if o.status.success() {
            Ok(o.stdout)
        } else {
            Err(format!("{backend}/{out}: {}", String::from_utf8_lossy(&o.stderr)))
        }
    };
    let recorded_json = run("record", "json")?;
    let recorded_dot = run("record", "dot")?;
    let replayed_json = run("replay", "json")?;
    let replayed_dot = run("replay", "dot")?;
    let a: cfgchain::ChainResult = serde_json::from_slice(&recorded_json).map_err(|e| e.to_string())?;
    let b: cfgchain::ChainResult = serde_json::from_slice(&replayed_json).map_err(|e| e.to_string())?;
    check(a == b, || "replayed ChainResult differs".into())?;
    check(recorded_dot == replayed_dot, || "replayed DOT differs".into())?;
    let text = std::fs::read_to_string(&cassette).map_err(|e| e.to_string())?;
    check(!text.is_empty() && !text.to_lowercase().contains("bearer"), || "cassette content unexpected".into())?;

    // Prompt goldens: the first prompt of each unit on a fixed input.
    let running = std::fs::read_to_string(root().join("prompts/input.java")).map_err(|e| e.to_string())?;
    let kb = kb();
    let mut seen = BTreeSet::new();
    for v in [Variant::Chain, Variant::Cot, Variant::Direct] {
        let r = run_pipeline(&tokenize(&running), &HeuristicBackend, &kb, v, &Limits::default()).map_err(|e| e.to_string())?;
        for e in r.transcript {
            if seen.insert(e.unit) {
                let path = root().join(format!("prompts/{}.golden", e.unit));
                let want = std::fs::read_to_string(&path).map_err(|x| format!("{}: {x}", path.display()))?;
                check(want == e.prompt, || format!("{} differs from its golden file", e.unit))?;
            }
        }
    }
    check(seen.len() == 6, || format!("{} units rendered", seen.len()))?;
    Ok("record/replay identical, DOT byte-identical, 6 prompt goldens match".into())
}

fn c6_coverage_metric() -> Outcome {
    let fixture = |drop: bool| {
        let mut g = Cfg::new();
        let labels = ["int s = 0", "int i = 0", "i < n", "if (a[i] > 0)", "s += a[i]", "neg++", "end if", "i++", "end for", "return s"];
        for (i, l) in labels.iter().enumerate() {
            if !(drop && i == 5) {
                g.add_node(format!("v{i}"), *l);
            }
        }
        let edges = [(0, 1, ""), (1, 2, ""), (2, 3, "true"), (3, 4, "true"), (3, 5, "false"), (4, 6, ""), (5, 6, ""), (6, 7, ""), (7, 2, ""), (2, 8, "false")];
        for (a, b, l) in edges {
            if !(drop && (a == 5 || b == 5)) {
                g.add_edge(&format!("v{a}"), &format!("v{b}"), (!l.is_empty()).then_some(l));
            }
        }
        g
    };
    let gold = fixture(false);
    check(gold.nodes.len() == 10 && gold.edges.len() == 10, || "fixture shape".into())?;
    let r = coverage(&fixture(true), &gold).map_err(|e| e.to_string())?;
    check((r.node_coverage, r.edge_coverage) == (0.9, 0.8), || format!("fixture gave ({}, {})", r.node_coverage, r.edge_coverage))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let g = random_graph(&mut rng, 10, false);
        let r = coverage(&g, &g).map_err(|e| e.to_string())?;
        check((r.node_coverage, r.edge_coverage) == (1.0, 1.0), || format!("identity case {case}"))?;
    }
    let small = ["a + b", "a ? b", "a - b", "x", "x", "end if"];
    let mut fixtures = 0;
    for case in 0..300 {
        let mk = |rng: &mut ChaCha8Rng| {
            let mut g = Cfg::new();
            for i in 0..rng.gen_range(1..=6) {
                g.add_node(format!("k{i}"), small[rng.gen_range(0..small.len())]);
            }
            g
        };
        let (gen, gold) = (mk(&mut rng), mk(&mut rng));
        let got = coverage(&gen, &gold).unwrap().matched_nodes.len();
        let want = brute_force(&gen, &gold, 0, &mut vec![false; gen.nodes.len()]);
        check(got == want, || format!("matcher case {case}: {got} vs exhaustive {want}"))?;
        fixtures += 1;
    }
    Ok(format!("fixture (0.9, 0.8), 100 identities, {fixtures} exhaustive comparisons"))
}

fn brute_force(gen: &Cfg, gold: &Cfg, i: usize, used: &mut Vec<bool>) -> usize {
    if i == gold.nodes.len() {
        return 0;
    }
    let mut best = brute_force(gen, gold, i + 1, used);
    for j in 0..gen.nodes.len() {
        if !used[j] && labels_match(&gen.nodes[j].label, &gold.nodes[i].label) {
            used[j] = true;
            best = best.max(1 + brute_force(gen, gold, i + 1, used));
            used[j] = false;
        }
    }
    best
}

fn c7_ablation() -> Outcome {
    let kb = kb();
    let limits = Limits::default();
    let corpus = root().join("corpus/nc-mini");
    let gold = root().join("gold/nc-mini");
    let mut rows = Vec::new();
    for v in Variant::ALL {
        let path = root().join(format!("cassettes/nc-mini-{}.jsonl", v.as_str().replace('_', "-")));
        let backend = ReplayBackend::load(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = run_eval(&corpus, &gold, v, &backend, &kb, &limits).map_err(|e| e.to_string())?;
        let m = report.means.ok_or("empty report")?;
        check(m.failed == 0 && m.samples == 20, || format!("{v}: {} of {} failed", m.failed, m.samples))?;
        rows.push(format!("{v} {:.2}/{:.2}", m.node_cov, m.edge_cov));
    }
    for (id, code) in samples() {
        let unit = tokenize(&code);
        let a = run_pipeline(&unit, &HeuristicBackend, &kb, Variant::Chain, &limits).map_err(|e| e.to_string())?;
        let b = run_pipeline(&unit, &HeuristicBackend, &kb, Variant::ChainNoapr, &limits).map_err(|e| e.to_string())?;
        check(a.final_cfg == b.final_cfg, || format!("{id}: chain and chain-noapr differ"))?;
    }
    Ok(format!("replayed {}; chain == chain-noapr on 20 samples", rows.join(", ")))
}

fn c8_fuzz() -> Outcome {
    const BYTES: &[u8] = b"{}();=<>+-!?abcif \n\t\"'/*";
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let kb = kb();
    let limits = Limits::default();
    let corpus = samples();
    let (mut ok, mut typed) = (0, 0);
    let start = Instant::now();
    for case in 0..1000 {
        let mut bytes = corpus[rng.gen_range(0..corpus.len())].1.clone().into_bytes();
        for _ in 0..rng.gen_range(1..=8) {
            let at = rng.gen_range(0..=bytes.len());
            match rng.gen_range(0..3) {
                0 => bytes.insert(at, BYTES[rng.gen_range(0..BYTES.len())]),
                1 if at < bytes.len() => {
                    bytes.remove(at);
                }
                _ if at < bytes.len() => bytes[at] = rng.gen(),
                _ => {}
            }
        }
        let text = String::from_utf8_lossy(&bytes).to_string();
        let run = catch_unwind(AssertUnwindSafe(|| {
            run_pipeline(&tokenize(&text), &HeuristicBackend, &kb, Variant::Chain, &limits)
        }));
        match run {
            Ok(Ok(_)) => ok += 1,
            Ok(Err(_)) => typed += 1,
            Err(_) => return Err(format!("case {case} panicked on {text:?}")),
        }
    }
    Ok(format!("1000 mutants: {ok} graphs, {typed} typed errors, no panics, {:.1?}", start.elapsed()))
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("NC exactness", c1_nc_exactness),
        ("injector recovery", c2_injector_recovery),
        ("fusion oracle equivalence", c3_fusion_oracle),
        ("roundtrips", c4_roundtrips),
        ("determinism", c5_determinism),
        ("coverage metric correctness", c6_coverage_metric),
        ("ablation plumbing", c7_ablation),
        ("termination and robustness", c8_fuzz),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

