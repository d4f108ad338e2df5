use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::chain::{argmax_map, Instance};
use crate::sampling::io::to_records;
use crate::sampling::{ContextDataset, Mode, SamplingError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    LetterRules,
    Modadd,
}

impl PromptTemplate {
    fn family(self) -> &'static str {
        match self {
            PromptTemplate::LetterRules => "synthetic",
            PromptTemplate::Modadd => "modadd",
        }
    }
}

/// One rendered in-context prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub context_text: String,
    pub query_text: String,
    pub gold_answer: usize,
    pub mode: Mode,
    pub seed: u64,
}

fn param<'a, S: Scalar>(instance: &'a Instance<S>, key: &str) -> Result<&'a str> {
    instance
        .provenance()
        .and_then(|p| p.params.get(key))
        .map(String::as_str)
        .ok_or_else(|| HarnessError::TemplateMismatch(format!("instance provenance lacks `{key}`")))
}

fn header<S: Scalar>(instance: &Instance<S>, template: PromptTemplate) -> Result<String> {
    let family = instance.provenance().map(|p| p.family.as_str()).unwrap_or("<none>");
    if family != template.family() {
        return Err(HarnessError::TemplateMismatch(format!(
            "template {template:?} needs a `{}` instance, got `{family}`",
            template.family()
        )));
    }
    let t = instance.horizon();
    Ok(match template {
        PromptTemplate::LetterRules => {
            let letters: Vec<String> = param(instance, "letters")?.chars().map(String::from).collect();
            format!(
                "States are 0 to {}. Each line applies the rules {} in order, starting from x0 and ending at x{t}.",
                instance.k() - 1,
                letters.join(", ")
            )
        }
        PromptTemplate::Modadd => {
            let addends = param(instance, "addends")?.replace(',', ", ");
            format!(
                "Each line starts from x0 and adds {addends} in order, modulo {}, ending at x{t}.",
                param(instance, "M")?
            )
        }
    })
}

fn line(states: &[(usize, usize)]) -> String {
    states.iter().map(|(t, x)| format!("x{t} = {x}")).collect::<Vec<_>>().join(", ")
}

/// Renders the dataset as demonstrations followed by a query about
/// `query_x0`. CoT demonstrations list every state `x0..xT`; direct ones
/// list only `x0` and `xT`.
pub fn export_prompts<S: Scalar>(
    data: &ContextDataset,
    instance: &Instance<S>,
    query_x0: usize,
    template: PromptTemplate,
) -> Result<PromptRecord> {
    let digest = instance.digest();
    if data.meta().instance_digest != digest {
        return Err(SamplingError::DigestMismatch { expected: digest, found: data.meta().instance_digest.clone() }
            .into());
    }
    if query_x0 >= instance.k() {
        return Err(HarnessError::InvalidConfig(format!("query state {query_x0} is outside 0..{}", instance.k())));
    }
    let t = instance.horizon();
    let mut context_text = header(instance, template)?;
    for record in to_records(data) {
        let states: Vec<(usize, usize)> = match &record.path {
            Some(path) => path.iter().copied().enumerate().collect(),
            None => vec![(0, record.x0), (t, record.xt)],
        };
        context_text.push('\n');
        context_text.push_str(&line(&states));
    }
    let gold_answer = argmax_map(&instance.end_to_end()).map[query_x0];
    Ok(PromptRecord {
        context_text,
        query_text: format!("x0 = {query_x0}, x{t} = ?"),
        gold_answer,
        mode: data.mode(),
        seed: data.meta().seed,
    })
}

/// One record per query state.
pub fn render_prompts<S: Scalar>(
    data: &ContextDataset,
    instance: &Instance<S>,
    queries: &[usize],
    template: PromptTemplate,
) -> Result<Vec<PromptRecord>> {
    queries.iter().map(|&q| export_prompts(data, instance, q, template)).collect()
}

pub fn write_prompts_jsonl<W: Write>(records: &[PromptRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{build_modadd_instance, build_synthetic_instance, Alignment, ModAddConfig, SyntheticConfig};
    use crate::sampling::sample_dataset;

    fn modadd() -> Instance<f64> {
        build_modadd_instance(&ModAddConfig::new(7, vec![1, 2, 3, 5], Alignment::Diff)).unwrap()
    }

    #[test]
    fn cot_shows_every_partial_state() {
        let inst = modadd();
        let data = sample_dataset(&inst, 5, Mode::Cot, 3).unwrap();
        let rec = export_prompts(&data, &inst, 2, PromptTemplate::Modadd).unwrap();
        let lines: Vec<&str> = rec.context_text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[0].contains("adds 1, 2, 3, 5 in order, modulo 7"));
        for (l, traj) in lines[1..].iter().zip(data.as_cot().unwrap().records()) {
            let s = traj.states();
            let expected = format!("x0 = {}, x1 = {}, x2 = {}, x3 = {}, x4 = {}", s[0], s[1], s[2], s[3], s[4]);
            assert_eq!(*l, expected);
        }
        // 2 + 11 = 13 = 6 mod 7
        assert_eq!(rec.gold_answer, 6);
        assert_eq!(rec.query_text, "x0 = 2, x4 = ?");
    }

    #[test]
    fn direct_text_has_no_intermediates() {
        let inst = modadd();
        let data = sample_dataset(&inst, 20, Mode::Direct, 3).unwrap();
        let rec = export_prompts(&data, &inst, 0, PromptTemplate::Modadd).unwrap();
        for t in 1..4 {
            assert!(!rec.context_text.contains(&format!("x{t} =")));
        }
        assert_eq!(rec.mode, Mode::Direct);
    }

    #[test]
    fn rendering_is_deterministic() {
        let inst = build_synthetic_instance(&SyntheticConfig::letter_a(Alignment::Same, 2)).unwrap();
        let render = || {
            let data = sample_dataset(&inst, 12, Mode::Cot, 9).unwrap();
            let recs = render_prompts(&data, &inst, &[0, 1, 2], PromptTemplate::LetterRules).unwrap();
            let mut buf = Vec::new();
            write_prompts_jsonl(&recs, &mut buf).unwrap();
            buf
        };
        assert_eq!(render(), render());
    }

    #[test]
    fn template_must_match_family() {
        let inst = modadd();
        let data = sample_dataset(&inst, 4, Mode::Cot, 1).unwrap();
        assert!(matches!(
            export_prompts(&data, &inst, 0, PromptTemplate::LetterRules),
            Err(HarnessError::TemplateMismatch(_))
        ));
    }
}
