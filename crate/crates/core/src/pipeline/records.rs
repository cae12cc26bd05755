use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use serde_json::{Map, Value};

use super::config::SchemaMap;
use crate::error::{Error, Result};
use crate::trajectory::RawTrajectory;

/// Lines of a JSONL file, numbered from 1. Blank lines are skipped.
pub struct JsonlLines {
    path: std::path::PathBuf,
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

impl JsonlLines {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(JsonlLines {
            path: path.to_path_buf(),
            lines: BufReader::new(file).lines(),
            line_no: 0,
        })
    }
}

impl Iterator for JsonlLines {
    type Item = Result<(usize, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            match line {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => return Some(Ok((self.line_no, l))),
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    return Some(Err(Error::Schema {
                        line: self.line_no,
                        message: "line is not valid UTF-8".into(),
                    }))
                }
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
        }
    }
}

/// Streams records; a malformed line yields `Err(Schema)` for that line only.
pub fn load_records<'a>(
    path: &Path,
    schema: &'a SchemaMap,
) -> Result<impl Iterator<Item = Result<RawTrajectory>> + 'a> {
    let lines = JsonlLines::open(path)?;
    Ok(lines.map(move |item| item.and_then(|(n, line)| parse_record(&line, n, schema))))
}

pub fn parse_record(line: &str, line_no: usize, schema: &SchemaMap) -> Result<RawTrajectory> {
    let schema_err = |message: String| Error::Schema { line: line_no, message };
    let value: Value = serde_json::from_str(line).map_err(|e| schema_err(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema_err("record is not a JSON object".into()))?;

    let id = match string_field(obj, &schema.id).or_else(|| string_field(obj, "uuid")) {
        Some(id) => id,
        None => format!("line-{line_no}"),
    };
    let ground_truth = string_field(obj, &schema.answer)
        .ok_or_else(|| schema_err(format!("missing answer field `{}`", schema.answer)))?;
    let messages = obj.get(&schema.messages).and_then(Value::as_array);
    let generation = string_field(obj, &schema.generation)
        .or_else(|| messages.and_then(|m| message_content(m, "assistant", true)))
        .or_else(|| {
            obj.get("generations")
                .and_then(Value::as_array)
                .and_then(|g| g.first())
                .and_then(Value::as_str)
                .map(str::to_string)
        })
        .ok_or_else(|| schema_err(format!("missing generation field `{}`", schema.generation)))?;
    let problem = string_field(obj, &schema.problem)
        .or_else(|| messages.and_then(|m| message_content(m, "user", false)))
        .unwrap_or_default();
    let token_count_hint = match obj.get(&schema.token_count) {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| schema_err(format!("`{}` must be a non-negative integer", schema.token_count)))?,
        ),
    };

    Ok(RawTrajectory {
        id,
        problem,
        ground_truth,
        generation,
        token_count_hint,
    })
}

/// Strings pass through; numbers are rendered, so `"answer": 7` works.
fn string_field(obj: &Map<String, Value>, key: &str) -> Option<String> {
    match obj.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn message_content(messages: &[Value], role: &str, last: bool) -> Option<String> {
    let mut matching = messages
        .iter()
        .filter(|m| m.get("role").and_then(Value::as_str) == Some(role))
        .filter_map(|m| m.get("content").and_then(Value::as_str));
    let found = if last { matching.next_back() } else { matching.next() };
    found.map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_flat_records() {
        let r = parse_record(
            r#"{"id": "a", "problem": "p", "answer": 7, "generation": "<think>x</think>", "token_count": 12}"#,
            1,
            &SchemaMap::default(),
        )
        .unwrap();
        assert_eq!(r.id, "a");
        assert_eq!(r.ground_truth, "7");
        assert_eq!(r.token_count_hint, Some(12));
    }

    #[test]
    fn messages_fallback() {
        let line = r#"{"uuid": "u1", "answer": "3", "messages": [
            {"role": "user", "content": "What is 1+2?"},
            {"role": "assistant", "content": "<think>1+2=3</think>3"}]}"#
            .replace('\n', " ");
        let r = parse_record(&line, 4, &SchemaMap::default()).unwrap();
        assert_eq!(r.id, "u1");
        assert_eq!(r.problem, "What is 1+2?");
        assert_eq!(r.generation, "<think>1+2=3</think>3");
    }

    #[test]
    fn custom_field_names() {
        let schema = SchemaMap {
            answer: "solution".into(),
            generation: "output".into(),
            ..Default::default()
        };
        let r = parse_record(r#"{"solution": "x", "output": "y"}"#, 9, &schema).unwrap();
        assert_eq!(r.id, "line-9");
        assert_eq!(r.generation, "y");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let s = SchemaMap::default();
        for (line, needle) in [
            ("{not json", "invalid JSON"),
            ("[1]", "not a JSON object"),
            (r#"{"generation": "g"}"#, "answer"),
            (r#"{"answer": "1"}"#, "generation"),
            (
                r#"{"answer": "1", "generation": "g", "token_count": -3}"#,
                "token_count",
            ),
        ] {
            match parse_record(line, 2, &s) {
                Err(Error::Schema { line: 2, message }) => assert!(message.contains(needle), "{message}"),
                other => panic!("{line}: {other:?}"),
            }
        }
    }
}
