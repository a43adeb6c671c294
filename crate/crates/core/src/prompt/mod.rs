//! Prompt construction for the AI units and parsing of their outputs.

mod text;
mod units;

pub use text::{
    emit_extract_text, emit_structure_text, parse_extract_text, parse_structure_text, ExtractTextError,
    HierarchyEntry, NestedBlock, StructureHierarchy, StructureTextError,
};
pub use units::{
    parse_final_cfgtext, unit_block_cfg, unit_extract_block, unit_fusion, unit_structure, unit_whole, warnings_of,
    Exchange, Retrieval, UnitError, UnitOptions,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source::BlockKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitId {
    Structure,
    Extract,
    #[serde(rename = "blockcfg")]
    BlockCfg,
    Fusion,
    Cot,
    Direct,
}

impl UnitId {
    pub const ALL: [UnitId; 6] =
        [UnitId::Structure, UnitId::Extract, UnitId::BlockCfg, UnitId::Fusion, UnitId::Cot, UnitId::Direct];

    pub fn as_str(self) -> &'static str {
        match self {
            UnitId::Structure => "structure",
            UnitId::Extract => "extract",
            UnitId::BlockCfg => "blockcfg",
            UnitId::Fusion => "fusion",
            UnitId::Cot => "cot",
            UnitId::Direct => "direct",
        }
    }

    /// The four units of the chain proper, which always carry five examples.
    pub fn is_chain_unit(self) -> bool {
        matches!(self, UnitId::Structure | UnitId::Extract | UnitId::BlockCfg | UnitId::Fusion)
    }
}

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UnitId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        UnitId::ALL.into_iter().find(|u| u.as_str() == s).ok_or_else(|| format!("unknown unit `{s}`"))
    }
}

pub const EXAMPLES_PER_UNIT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("{unit} prompt needs {EXAMPLES_PER_UNIT} examples, got {got}")]
    ExampleCount { unit: UnitId, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub unit_id: UnitId,
    pub task_description: String,
    pub examples: Vec<(String, String)>,
    pub input_payload: String,
    pub rendered: String,
}

impl Prompt {
    pub fn new(
        unit_id: UnitId,
        task_description: impl Into<String>,
        examples: Vec<(String, String)>,
        input_payload: impl Into<String>,
    ) -> Result<Self, PromptError> {
        if unit_id.is_chain_unit() && examples.len() != EXAMPLES_PER_UNIT {
            return Err(PromptError::ExampleCount { unit: unit_id, got: examples.len() });
        }
        let task_description = task_description.into();
        let input_payload = input_payload.into();
        let rendered = render_prompt(&task_description, &examples, &input_payload);
        Ok(Prompt { unit_id, task_description, examples, input_payload, rendered })
    }
}

/// Task description, blank line, then each example as
/// `Input:\n<in>\nOutput:\n<out>\n` followed by a blank line, then
/// `Input:\n<payload>\nOutput:\n`.
pub fn render_prompt(task: &str, examples: &[(String, String)], payload: &str) -> String {
    let mut out = String::with_capacity(task.len() + payload.len() + 64);
    out.push_str(task);
    out.push_str("\n\n");
    for (input, output) in examples {
        out.push_str(&format!("Input:\n{input}\nOutput:\n{output}\n\n"));
    }
    out.push_str(&format!("Input:\n{payload}\nOutput:\n"));
    out
}

const STRUCTURE_TASK: &str = "Analyze and format the following java code into its structure hierarchy. \
The code may be partial or contain syntax errors; infer the intended nesting. \
Consider the six common types of code blocks: class declarations (class_block), method declarations (method_block), \
if statements with their else arms (if_block), for loops (for_block), while loops (while_block) and switch statements (switch_block). \
A word such as if_block_2 already in the code is a block that was replaced earlier and is not a block itself. \
After a line `structure:`, write one line per block in source order: \
`block <id> kind=<kind> depth=<n> parent=<id|none> lines=<first>-<last>`.";

const EXTRACT_TASK: &str = "Extract the nested code block according to code structure. \
Return only the innermost blocks of the structure, the ones that contain no other listed block, \
copied verbatim from the code. \
After a line `blocks:`, write each block between a line `begin <id>` and a line `end <id>`, in source order.";

const BLOCKCFG_TASK: &str = "Convert the following code to a control flow graph (CFG). \
Every statement or condition is a node. A word such as if_block_2 stands for a whole nested block and becomes a single node with that label. \
Label branch edges \"true\" and \"false\" and switch edges \"case <value>\" or \"default\". \
If the code has mistakes, draw the graph the programmer intended. \
Answer with a line `cfg v1`, then lines `node <id> \"<label>\"`, then lines `edge <from> <to> [\"<label>\"]`.";

const FUSION_TASK: &str = "Please create a complete control flow graph of the code by fusing the following CFGs. \
The first CFG is the outer one. Replace each node labeled with a block id by the CFG of that block: \
edges into the node go to the block's first node and edges out of the node leave from every last node of the block. \
Answer with a single graph in the `cfg v1` format.";

const DIRECT_TASK: &str = "Generate the given code's CFG. \
Answer with a line `cfg v1`, then lines `node <id> \"<label>\"`, then lines `edge <from> <to> [\"<label>\"]`.";

/// Task description of `unit`, frozen in the golden prompt files.
pub fn task_description(unit: UnitId) -> String {
    match unit {
        UnitId::Structure => STRUCTURE_TASK.into(),
        UnitId::Extract => EXTRACT_TASK.into(),
        UnitId::BlockCfg => BLOCKCFG_TASK.into(),
        UnitId::Fusion => FUSION_TASK.into(),
        UnitId::Direct => DIRECT_TASK.into(),
        UnitId::Cot => format!(
            "Generate the given code's CFG in four steps, writing the result of every step.\n\
             Step 1. {STRUCTURE_TASK}\n\
             Step 2. {EXTRACT_TASK} Replace each extracted block in the code by its id and repeat steps 1 and 2 until only the outermost block is left.\n\
             Step 3. {BLOCKCFG_TASK}\n\
             Step 4. {FUSION_TASK}\n\
             End with the complete graph."
        ),
    }
}

fn trim_nl(s: &str) -> &str {
    s.trim_end_matches('\n')
}

pub fn structure_payload(code: &str) -> String {
    format!("code:\n{}", trim_nl(code))
}

pub fn extract_payload(code: &str, hierarchy: &StructureHierarchy) -> String {
    format!("code:\n{}\n{}", trim_nl(code), trim_nl(&emit_structure_text(hierarchy)))
}

pub fn blockcfg_payload(text: &str) -> String {
    format!("code:\n{}", trim_nl(text))
}

/// Each part as `<id>:` followed by its CFGText, outer graph first.
pub fn fusion_payload(parts: &[FusionPart]) -> String {
    parts.iter().map(|p| format!("{}:\n{}", p.id, trim_nl(&p.cfg))).collect::<Vec<_>>().join("\n")
}

pub fn whole_payload(code: &str) -> String {
    structure_payload(code)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureInput {
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractInput {
    pub code: String,
    pub hierarchy: StructureHierarchy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCfgInput {
    pub block_id: String,
    pub kind: BlockKind,
    pub text: String,
    /// Column of the line the block starts on.
    pub base_indent: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionPart {
    pub id: String,
    pub cfg: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionInput {
    pub parts: Vec<FusionPart>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WholeInput {
    pub code: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("in{i}"), format!("out{i}"))).collect()
    }

    #[test]
    fn layout() {
        let p = Prompt::new(UnitId::Structure, "Task.", ex(5), "code:\nx").unwrap();
        let expected = "Task.\n\n".to_string()
            + &(0..5).map(|i| format!("Input:\nin{i}\nOutput:\nout{i}\n\n")).collect::<String>()
            + "Input:\ncode:\nx\nOutput:\n";
        assert_eq!(p.rendered, expected);
    }

    #[test]
    fn empty_payload() {
        let p = Prompt::new(UnitId::Fusion, "T", ex(5), "").unwrap();
        assert!(p.rendered.ends_with("Input:\n\nOutput:\n"));
    }

    #[test]
    fn unit_prompts_need_five_examples() {
        for unit in [UnitId::Structure, UnitId::Extract, UnitId::BlockCfg, UnitId::Fusion] {
            assert_eq!(
                Prompt::new(unit, "T", ex(4), "p"),
                Err(PromptError::ExampleCount { unit, got: 4 })
            );
            assert!(Prompt::new(unit, "T", ex(6), "p").is_err());
        }
        assert!(Prompt::new(UnitId::Direct, "T", vec![], "p").is_ok());
        assert!(Prompt::new(UnitId::Cot, "T", ex(1), "p").is_ok());
    }

    #[test]
    fn task_descriptions_quote_the_anchors() {
        assert!(task_description(UnitId::Structure).starts_with("Analyze and format the following java"));
        assert!(task_description(UnitId::Extract).starts_with("Extract the nested code block according to code structure"));
        assert!(task_description(UnitId::BlockCfg).starts_with("Convert the following code to a control flow graph (CFG)"));
        assert!(task_description(UnitId::Fusion).starts_with("Please create a complete control flow graph of the code"));
        assert!(task_description(UnitId::Direct).starts_with("Generate the given code's CFG"));
        for kind in BlockKind::ALL {
            assert!(task_description(UnitId::Structure).contains(&format!("({kind}_block)")));
        }
    }

    #[test]
    fn unit_id_names() {
        for u in UnitId::ALL {
            assert_eq!(u.as_str().parse::<UnitId>().unwrap(), u);
            assert_eq!(serde_json::to_string(&u).unwrap(), format!("\"{u}\""));
        }
    }
}
