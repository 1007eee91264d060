use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SRC_BLOCK: &str = "{SRC_BLOCK}";
pub const TGT_BLOCK: &str = "{TGT_BLOCK}";
pub const SCHEMA: &str = "{SCHEMA}";

const DEFAULT_SYSTEM: &str = include_str!("../../assets/prompt-v1.system.txt");
const DEFAULT_USER: &str = include_str!("../../assets/prompt-v1.user.txt");
const DEFAULT_SCHEMA: &str = include_str!("../../assets/response-schema-v1.json");

/// Version tag of the bundled template.
pub const DEFAULT_TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template is missing placeholder {0}")]
    PlaceholderMissing(&'static str),
    #[error("template contains placeholder {0} more than once")]
    PlaceholderRepeated(&'static str),
    #[error("no {0} lines to align")]
    EmptyBlock(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system_text: String,
    /// Must contain `{SRC_BLOCK}`, `{TGT_BLOCK}` and `{SCHEMA}` once each.
    pub user_text: String,
    pub schema_text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system_text: DEFAULT_SYSTEM.trim_end().to_string(),
            user_text: DEFAULT_USER.trim_end().to_string(),
            schema_text: DEFAULT_SCHEMA.trim().to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), PromptError> {
        for placeholder in [SRC_BLOCK, TGT_BLOCK, SCHEMA] {
            match self.user_text.matches(placeholder).count() {
                0 => return Err(PromptError::PlaceholderMissing(placeholder)),
                1 => {}
                _ => return Err(PromptError::PlaceholderRepeated(placeholder)),
            }
        }
        Ok(())
    }
}

/// A rendered prompt: system and user message texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// 16 hex digits identifying the prompt, stable across runs and
    /// platforms.
    pub fn stable_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.system.as_bytes());
        hasher.update([0u8]);
        hasher.update(self.user.as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Rough token count: one token per four characters.
    pub fn estimated_tokens(&self) -> usize {
        (self.system.chars().count() + self.user.chars().count()).div_ceil(4)
    }
}

/// Substitutes the indexed line blocks and the schema into the template in
/// a single pass, so placeholder-like text inside sentences is left alone.
pub fn build_prompt(
    src_lines: &[String],
    tgt_lines: &[String],
    template: &PromptTemplate,
) -> Result<Prompt, PromptError> {
    template.validate()?;
    if src_lines.is_empty() {
        return Err(PromptError::EmptyBlock("source"));
    }
    if tgt_lines.is_empty() {
        return Err(PromptError::EmptyBlock("target"));
    }
    let src_block = src_lines.join("\n");
    let tgt_block = tgt_lines.join("\n");
    let mut slots: Vec<(usize, &str, &str)> = [
        (SRC_BLOCK, src_block.as_str()),
        (TGT_BLOCK, tgt_block.as_str()),
        (SCHEMA, template.schema_text.as_str()),
    ]
    .into_iter()
    .map(|(ph, value)| (template.user_text.find(ph).expect("validated"), ph, value))
    .collect();
    slots.sort_by_key(|s| s.0);

    let text = &template.user_text;
    let mut user = String::with_capacity(text.len() + src_block.len() + tgt_block.len());
    let mut cursor = 0;
    for (pos, ph, value) in slots {
        user.push_str(&text[cursor..pos]);
        user.push_str(value);
        cursor = pos + ph.len();
    }
    user.push_str(&text[cursor..]);

    Ok(Prompt {
        system: template.system_text.clone(),
        user,
    })
}
