//! Writes a first-draft gold CFG per corpus sample, for hand review.
//!
//! cargo run -p cfgchain --example author_gold -- corpus/nc-mini gold/nc-mini

use std::path::PathBuf;

use cfgchain::cfg::emit_cfgtext;
use cfgchain::eval::run::corpus_samples;
use cfgchain::gateway::heuristic::build::build_cfg;

fn main() {
    let mut args = std::env::args().skip(1);
    let corpus: PathBuf = args.next().expect("corpus dir").into();
    let gold: PathBuf = args.next().expect("gold dir").into();
    std::fs::create_dir_all(&gold).unwrap();
    for (id, path) in corpus_samples(&corpus).unwrap() {
        let text = cfgchain::load_source(&path).unwrap();
        let built = build_cfg(&text, None, "g");
        assert!(built.warnings.is_empty(), "{id}: {:?}", built.warnings);
        std::fs::write(gold.join(format!("{id}.cfg")), emit_cfgtext(&built.cfg)).unwrap();
    }
}
