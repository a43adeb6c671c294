#![allow(dead_code)]

use std::path::PathBuf;

use cfgchain::kb::{load_kb, KnowledgeBase};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn kb() -> KnowledgeBase {
    load_kb(&repo_root().join("kb")).expect("bundled kb loads")
}

/// The running example: nested loops around an `if` with an operator error
/// and a stray `;` after its header.
pub const RUNNING: &str = "public class Main {
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
