use alloc::format;
use alloc::string::String;
use core::fmt;

use super::text::token_f1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JudgeError {
    /// The judge could not be reached after retrying.
    Unavailable(String),
    UnparseableReply(String),
}

impl fmt::Display for JudgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unavailable(why) => write!(f, "judge unavailable: {why}"),
            Self::UnparseableReply(reply) => write!(f, "no score between 1 and 10 in judge reply {reply:?}"),
        }
    }
}

/// Scores an open answer on the 1–10 scale.
pub trait Judge {
    fn score(&self, question: &str, reference: &str, prediction: &str) -> Result<u8, JudgeError>;
}

/// Offline judge: `round(1 + 9 * token_f1(reference, prediction))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockJudge;

impl Judge for MockJudge {
    fn score(&self, _question: &str, reference: &str, prediction: &str) -> Result<u8, JudgeError> {
        if prediction.trim().is_empty() {
            return Ok(1);
        }
        Ok(libm::round(1.0 + 9.0 * token_f1(reference, prediction)) as u8)
    }
}

pub fn judge_prompt(question: &str, reference: &str, prediction: &str) -> String {
    format!(
        "You are grading an answer about an aerial image. Compare the model answer with the \
         reference and give a score from 1 to 10 for factual correctness, semantic completeness \
         and reasoning quality. Reply with the score first.\n\n\
         Question:\n{question}\n\nReference answer:\n{reference}\n\nModel answer:\n{prediction}\n"
    )
}

/// First standalone integer in 1..=10.
pub fn parse_judge_reply(reply: &str) -> Result<u8, JudgeError> {
    reply
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse::<u32>().ok())
        .find(|v| (1..=10).contains(v))
        .map(|v| v as u8)
        .ok_or_else(|| JudgeError::UnparseableReply(reply.into()))
}
