//! JSON form of a refinement trace, one object per input line.

use pertext_core::RefineResult;
use serde::Serialize;

use crate::dataset::{token_record, TokenRecord};

#[derive(Debug, Serialize)]
struct StageJson {
    stage: &'static str,
    tokens: Vec<TokenRecord>,
    labels: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
struct TraceJson<'a> {
    output: &'a str,
    stages: Vec<StageJson>,
}

pub fn to_json(result: &RefineResult) -> String {
    let trace = TraceJson {
        output: &result.output,
        stages: result
            .stages
            .iter()
            .map(|s| StageJson {
                stage: s.task.as_str(),
                tokens: s.tokens.iter().map(token_record).collect(),
                labels: s.labels.iter().map(|l| l.name()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&trace).expect("trace serializes")
}
